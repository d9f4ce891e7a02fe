"""Truncated uniform grids on R^(2n+1) with Dirichlet (zero) extension.

Axis ``j`` (1-based) carries the coordinate ``t_j``.  Interior points are
``t_j = -L_j + i * h_j`` for ``i = 1..m_j`` with ``h_j = 2 L_j / (m_j + 1)``;
the boundary layers at ``+-L_j`` are not unknowns.  Flattening is
lexicographic with ``t_1`` fastest.
"""

from __future__ import annotations

import numpy as np


class GridSpec:
    """Box truncation of R^d, d = 2n+1, with per-axis extent and resolution."""

    def __init__(self, n, extents, counts):
        n = int(n)
        if n < 1:
            raise ValueError("n must be a positive integer")
        d = 2 * n + 1
        extents = self._broadcast(extents, d, float)
        counts = self._broadcast(counts, d, int)
        self._init_axes(extents, counts)
        self.n = n

    @classmethod
    def from_axes(cls, extents, counts):
        """Internal constructor for arbitrary axis counts (1-D surrogates)."""
        obj = cls.__new__(cls)
        d = len(counts)
        obj._init_axes([float(L) for L in extents], [int(m) for m in counts])
        obj.n = (d - 1) // 2 if d % 2 == 1 and d >= 3 else None
        return obj

    def _init_axes(self, extents, counts):
        if len(extents) != len(counts):
            raise ValueError("extents and counts must have equal length")
        for L, m in zip(extents, counts):
            if L <= 0:
                raise ValueError("half-extent must be positive")
            if m < 3:
                raise ValueError("need at least 3 interior points per axis")
        self.extents = tuple(float(L) for L in extents)
        self.counts = tuple(int(m) for m in counts)
        self.ndim = len(self.counts)
        self.spacings = tuple(2.0 * L / (m + 1)
                              for L, m in zip(self.extents, self.counts))
        self.size = int(np.prod(self.counts, dtype=np.int64))
        strides = [1]
        for m in self.counts[:-1]:
            strides.append(strides[-1] * m)
        self.strides = tuple(strides)  # strides[j-1] multiplies i_j

    @staticmethod
    def _broadcast(value, d, cast):
        if np.isscalar(value):
            return [cast(value)] * d
        seq = [cast(v) for v in value]
        if len(seq) == 1:
            return seq * d
        if len(seq) != d:
            raise ValueError(f"expected {d} per-axis values, got {len(seq)}")
        return seq

    def coords(self, axis):
        """Interior coordinates along 1-based axis ``axis``."""
        L = self.extents[axis - 1]
        m = self.counts[axis - 1]
        h = self.spacings[axis - 1]
        return -L + h * np.arange(1, m + 1)

    def axis_indices(self, axis):
        """Per-flat-point index i_axis in 0..m-1 (int32, cached)."""
        cache = getattr(self, "_axis_idx_cache", None)
        if cache is None:
            cache = self._axis_idx_cache = {}
        if axis not in cache:
            stride = self.strides[axis - 1]
            m = self.counts[axis - 1]
            idx = (np.arange(self.size, dtype=np.int64) // stride) % m
            cache[axis] = idx.astype(np.int32)
        return cache[axis]

    def coordinate_field(self, axis):
        """Per-flat-point value of t_axis (float64, cached)."""
        cache = getattr(self, "_coord_cache", None)
        if cache is None:
            cache = self._coord_cache = {}
        if axis not in cache:
            cache[axis] = self.coords(axis)[self.axis_indices(axis)]
        return cache[axis]

    def interior_mask(self, margin):
        """Points whose full +-margin stencil lies inside along every axis."""
        mask = np.ones(self.size, dtype=bool)
        for axis in range(1, self.ndim + 1):
            idx = self.axis_indices(axis)
            m = self.counts[axis - 1]
            mask &= (idx >= margin) & (idx < m - margin)
        return mask

    def shell_mask(self, shell_fraction):
        """Points within shell_fraction*L_j of any boundary face."""
        if not 0.0 < shell_fraction < 1.0:
            raise ValueError("shell_fraction must lie in (0, 1)")
        mask = np.zeros(self.size, dtype=bool)
        for axis in range(1, self.ndim + 1):
            t = self.coordinate_field(axis)
            L = self.extents[axis - 1]
            mask |= np.abs(t) > (1.0 - shell_fraction) * L
        return mask

    def points(self):
        """All grid points as an (N, ndim) array in ascending axis order."""
        cols = [self.coordinate_field(axis) for axis in range(1, self.ndim + 1)]
        return np.stack(cols, axis=1)

    def to_dict(self):
        return {"n": self.n, "extents": list(self.extents),
                "counts": list(self.counts)}

    @classmethod
    def from_dict(cls, doc):
        return cls(doc["n"], doc["extents"], doc["counts"])

    def __repr__(self):
        return f"GridSpec(n={self.n}, extents={self.extents}, counts={self.counts})"
