"""Uniform-grid density container and its binary / CSV serialization."""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np


@dataclass
class GridDensity:
    """Samples ``u(h m)`` on the box ``m_min[j] <= m_j <= m_max[j]``.

    ``values`` is a dense array of shape ``m_max - m_min + 1`` in row-major
    (C) order, axis ``j`` running over ``m_j``.
    """

    h: float
    m_min: tuple[int, ...]
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.m_min = tuple(int(v) for v in self.m_min)
        if self.values.ndim != len(self.m_min):
            raise ValueError(
                f"values has {self.values.ndim} axes but m_min has {len(self.m_min)} entries"
            )
        if not self.h > 0:
            raise ValueError("grid step h must be positive")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("density values must be finite")

    @property
    def n(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def m_max(self) -> tuple[int, ...]:
        return tuple(lo + s - 1 for lo, s in zip(self.m_min, self.shape))

    def axis_indices(self, j: int) -> np.ndarray:
        return np.arange(self.m_min[j], self.m_min[j] + self.shape[j])

    def axis_coords(self, j: int) -> np.ndarray:
        return self.h * self.axis_indices(j)

    def like(self, values: np.ndarray, **meta) -> "GridDensity":
        return GridDensity(self.h, self.m_min, values, dict(meta))

    @classmethod
    def from_function(
        cls, func: Callable[..., np.ndarray], h: float, m_min: Sequence[int], m_max: Sequence[int]
    ) -> "GridDensity":
        """Sample ``func(y_1, ..., y_n)`` (broadcasting) on the box."""
        axes = [h * np.arange(lo, hi + 1) for lo, hi in zip(m_min, m_max)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return cls(h, tuple(m_min), np.broadcast_to(func(*mesh), mesh[0].shape).copy())

    @classmethod
    def centered(cls, func: Callable[..., np.ndarray], h: float, half: int, n: int) -> "GridDensity":
        return cls.from_function(func, h, [-half] * n, [half] * n)

    # -- serialization -------------------------------------------------

    def to_bytes(self) -> bytes:
        head = struct.pack("<qd", self.n, self.h)
        for lo, hi in zip(self.m_min, self.m_max):
            head += struct.pack("<qq", lo, hi)
        return head + np.ascontiguousarray(self.values, dtype="<f8").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "GridDensity":
        n, h = struct.unpack_from("<qd", data, 0)
        off = 16
        lo, hi = [], []
        for _ in range(n):
            a, b = struct.unpack_from("<qq", data, off)
            lo.append(a)
            hi.append(b)
            off += 16
        shape = tuple(b - a + 1 for a, b in zip(lo, hi))
        count = int(np.prod(shape))
        vals = np.frombuffer(data, dtype="<f8", count=count, offset=off)
        if vals.size != count:
            raise ValueError("truncated grid file")
        return cls(h, tuple(lo), vals.reshape(shape).copy())

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "GridDensity":
        return cls.from_bytes(Path(path).read_bytes())

    def write_probe_csv(self, path, probes: Sequence[Sequence[int]] | None = None) -> None:
        """Write ``k1,...,kn,value`` rows; all grid points when ``probes`` is None."""
        if probes is None:
            probes = np.array(np.meshgrid(*[self.axis_indices(j) for j in range(self.n)],
                                          indexing="ij")).reshape(self.n, -1).T
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"k{j + 1}" for j in range(self.n)] + ["value"])
            for k in probes:
                idx = tuple(int(kj) - lo for kj, lo in zip(k, self.m_min))
                w.writerow([int(kj) for kj in k] + [format(float(self.values[idx]), ".17g")])
