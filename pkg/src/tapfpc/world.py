"""Grid environment: MovingAI map parsing and memoized grid distances."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

PASSABLE_GLYPHS = frozenset(".G")
BLOCKED_GLYPHS = frozenset("@T")

UNREACHABLE = float("inf")


class MapParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class GridMap:
    """4-connected grid. Vertices are row-major flattened cell indices."""

    width: int
    height: int
    blocked: tuple[bool, ...]
    name: str = ""
    _adjacency: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("map dimensions must be positive")
        if len(self.blocked) != self.width * self.height:
            raise ValueError("blocked grid does not match dimensions")
        if all(self.blocked):
            raise ValueError("map has no passable cell")
        adjacency = []
        w, h = self.width, self.height
        for v in range(w * h):
            if self.blocked[v]:
                adjacency.append(())
                continue
            col, row = v % w, v // w
            nbrs = []
            # fixed order keeps every search deterministic
            if row > 0 and not self.blocked[v - w]:
                nbrs.append(v - w)
            if col > 0 and not self.blocked[v - 1]:
                nbrs.append(v - 1)
            if col < w - 1 and not self.blocked[v + 1]:
                nbrs.append(v + 1)
            if row < h - 1 and not self.blocked[v + w]:
                nbrs.append(v + w)
            adjacency.append(tuple(nbrs))
        object.__setattr__(self, "_adjacency", tuple(adjacency))

    @property
    def size(self) -> int:
        return self.width * self.height

    def passable(self, v: int) -> bool:
        return 0 <= v < self.size and not self.blocked[v]

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self._adjacency[v]

    def index(self, col: int, row: int) -> int:
        if not (0 <= col < self.width and 0 <= row < self.height):
            raise ValueError(f"cell ({col},{row}) outside {self.width}x{self.height} map")
        return row * self.width + col

    def coord(self, v: int) -> tuple[int, int]:
        return v % self.width, v // self.width

    def passable_cells(self) -> list[int]:
        return [v for v in range(self.size) if not self.blocked[v]]

    def adjacent(self, u: int, v: int) -> bool:
        return v in self._adjacency[u]

    def components(self) -> list[list[int]]:
        """Connected components of passable cells, largest first."""
        seen = [False] * self.size
        comps = []
        for s in self.passable_cells():
            if seen[s]:
                continue
            seen[s] = True
            comp, queue = [s], deque([s])
            while queue:
                u = queue.popleft()
                for n in self._adjacency[u]:
                    if not seen[n]:
                        seen[n] = True
                        comp.append(n)
                        queue.append(n)
            comps.append(sorted(comp))
        comps.sort(key=lambda c: (-len(c), c[0]))
        return comps

    def to_text(self) -> str:
        lines = ["type octile", f"height {self.height}", f"width {self.width}", "map"]
        for row in range(self.height):
            cells = self.blocked[row * self.width:(row + 1) * self.width]
            lines.append("".join("@" if b else "." for b in cells))
        return "\n".join(lines) + "\n"


def parse_map(text: str, name: str = "") -> GridMap:
    lines = text.splitlines()
    # tolerate trailing blank lines only
    while lines and not lines[-1].strip():
        lines.pop()
    if len(lines) < 4:
        raise MapParseError(len(lines) + 1, "truncated header")
    if lines[0].strip() != "type octile":
        raise MapParseError(1, f"expected 'type octile', got {lines[0]!r}")
    height = _header_int(lines[1], "height", 2)
    width = _header_int(lines[2], "width", 3)
    if lines[3].strip() != "map":
        raise MapParseError(4, f"expected 'map', got {lines[3]!r}")
    rows = lines[4:]
    if len(rows) != height:
        raise MapParseError(5 + min(len(rows), height), f"expected {height} grid rows, found {len(rows)}")
    blocked = []
    for i, row in enumerate(rows):
        lineno = 5 + i
        row = row.rstrip("\r")
        if len(row) != width:
            raise MapParseError(lineno, f"row has {len(row)} cells, expected {width}")
        for ch in row:
            if ch in PASSABLE_GLYPHS:
                blocked.append(False)
            elif ch in BLOCKED_GLYPHS:
                blocked.append(True)
            else:
                raise MapParseError(lineno, f"unknown cell glyph {ch!r}")
    try:
        return GridMap(width, height, tuple(blocked), name)
    except ValueError as exc:
        raise MapParseError(5, str(exc)) from None


def _header_int(line: str, key: str, lineno: int) -> int:
    parts = line.split()
    if len(parts) != 2 or parts[0] != key:
        raise MapParseError(lineno, f"expected '{key} <int>', got {line!r}")
    try:
        value = int(parts[1])
    except ValueError:
        raise MapParseError(lineno, f"{key} is not an integer: {parts[1]!r}") from None
    if value < 1:
        raise MapParseError(lineno, f"{key} must be positive")
    return value


def load_map(path: str | Path) -> GridMap:
    path = Path(path)
    return parse_map(path.read_text(), name=path.stem)


def builtin_map_path(filename: str) -> Path | None:
    candidate = resources.files("tapfpc") / "maps" / filename
    if candidate.is_file():
        return Path(str(candidate))
    return None


def load_builtin_map(filename: str) -> GridMap:
    path = builtin_map_path(filename)
    if path is None:
        raise FileNotFoundError(f"no bundled map named {filename!r}")
    return load_map(path)


class DistanceTable:
    """Lazily memoized breadth-first distances, one layer expansion per source.

    Not thread-safe; each solver run owns its own table.
    """

    def __init__(self, grid: GridMap):
        self.grid = grid
        self._rows: dict[int, list[float]] = {}

    def __contains__(self, source: int) -> bool:
        return source in self._rows

    @property
    def sources(self) -> frozenset[int]:
        return frozenset(self._rows)

    def row(self, source: int) -> list[float]:
        row = self._rows.get(source)
        if row is None:
            row = self._bfs(source)
            self._rows[source] = row
        return row

    def distance(self, u: int, v: int) -> float:
        if u == v:
            return 0
        row = self._rows.get(u)
        if row is not None:
            return row[v]
        row = self._rows.get(v)
        if row is not None:
            return row[u]
        return self.row(u)[v]

    def _bfs(self, source: int) -> list[float]:
        grid = self.grid
        dist: list[float] = [UNREACHABLE] * grid.size
        if grid.blocked[source]:
            return dist
        dist[source] = 0
        queue = deque([source])
        adjacency = grid._adjacency
        while queue:
            u = queue.popleft()
            du = dist[u] + 1
            for n in adjacency[u]:
                if dist[n] == UNREACHABLE:
                    dist[n] = du
                    queue.append(n)
        return dist


def grid_distance(grid: GridMap, u: int, v: int, table: DistanceTable) -> float:
    if table.grid is not grid and table.grid != grid:
        raise ValueError("distance table belongs to a different map")
    return table.distance(u, v)
