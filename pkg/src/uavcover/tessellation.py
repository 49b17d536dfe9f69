"""Signal-weighted Voronoi cells on a ground grid and the induced neighbor graph."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .channel import ChannelEnvironment, as_deployment, mean_signal_power_grid

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GroundGrid:
    """Regular ``ny x nx`` grid of square cells; row index follows y, col follows x."""

    nx: int = 50
    ny: int = 50
    cell_size: float = 100.0
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid needs at least one cell")
        if self.cell_size <= 0:
            raise ValueError("cell_size must be > 0")

    @classmethod
    def square(cls, length: float, cells: int) -> "GroundGrid":
        return cls(nx=cells, ny=cells, cell_size=length / cells)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def cell_area(self) -> float:
        return self.cell_size**2

    @property
    def extent(self) -> tuple[float, float, float, float]:
        x0, y0 = self.origin
        return (x0, x0 + self.nx * self.cell_size, y0, y0 + self.ny * self.cell_size)

    @cached_property
    def centers(self) -> np.ndarray:
        """Cell centers in row-major order, shape (ny * nx, 2)."""
        x0, y0 = self.origin
        xs = x0 + (np.arange(self.nx) + 0.5) * self.cell_size
        ys = y0 + (np.arange(self.ny) + 0.5) * self.cell_size
        gx, gy = np.meshgrid(xs, ys)
        return np.column_stack([gx.ravel(), gy.ravel()])

    def cell_of(self, point) -> tuple[int, int]:
        x0, y0 = self.origin
        col = int(np.clip((point[0] - x0) // self.cell_size, 0, self.nx - 1))
        row = int(np.clip((point[1] - y0) // self.cell_size, 0, self.ny - 1))
        return row, col


@dataclass(frozen=True)
class CellAssignment:
    labels: np.ndarray  # (ny, nx) serving-UAV index per grid cell
    n_uavs: int

    def mask(self, uav: int) -> np.ndarray:
        return self.labels.ravel() == uav

    def counts(self) -> np.ndarray:
        return np.bincount(self.labels.ravel(), minlength=self.n_uavs)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["row", "col", "label"])
            for (row, col), label in np.ndenumerate(self.labels):
                writer.writerow([row, col, int(label)])


@dataclass(frozen=True)
class NeighborGraph:
    """Symmetric adjacency with self-loops; ``degrees`` count the self-loop."""

    adjacency: np.ndarray
    empty: np.ndarray  # True for UAVs owning no grid cell

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[i])

    def is_connected(self) -> bool:
        seen = {0}
        frontier = [0]
        while frontier:
            node = frontier.pop()
            for nb in self.neighbors(node):
                if nb not in seen:
                    seen.add(int(nb))
                    frontier.append(int(nb))
        return len(seen) == self.n_nodes

    @classmethod
    def complete(cls, n: int) -> "NeighborGraph":
        return cls(np.ones((n, n), dtype=bool), np.zeros(n, dtype=bool))


def assign_cells(deployment, grid: GroundGrid, env: ChannelEnvironment) -> CellAssignment:
    """Label each grid cell with the UAV of strongest mean signal (lowest index on ties)."""
    uav = as_deployment(deployment)
    power = mean_signal_power_grid(uav, grid.centers, env)
    labels = np.argmax(power, axis=0).reshape(grid.shape)
    return CellAssignment(labels=labels, n_uavs=uav.shape[0])


def neighbor_graph(assignment: CellAssignment) -> NeighborGraph:
    labels = assignment.labels
    n = assignment.n_uavs
    adj = np.eye(n, dtype=bool)
    # 4-neighborhood: compare each cell with its right and lower neighbor
    for a, b in ((labels[:, :-1], labels[:, 1:]), (labels[:-1, :], labels[1:, :])):
        diff = a != b
        adj[a[diff], b[diff]] = True
        adj[b[diff], a[diff]] = True
    empty = assignment.counts() == 0
    if empty.any():
        log.warning("UAVs %s own no ground cell", np.flatnonzero(empty).tolist())
    return NeighborGraph(adjacency=adj, empty=empty)
