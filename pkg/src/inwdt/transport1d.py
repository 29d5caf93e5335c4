"""The two 1D transfer-function estimators behind the sliced transfer.

Both estimators are materialized as a `Mapping1D`: a function sampled on
a uniform grid and evaluated by linear interpolation, with linear
extension beyond the grid. Sampling keeps the per-iteration cost of the
sliced loop at O(n * grid_size) per direction instead of O(n^2).

* `ot_map_1d` is classical quantile matching: the value at t is the
  empirical quantile of v at the empirical CDF level of t under u.
  Quantile levels use the midpoint convention (i - 0.5) / n.
* `nw_map_1d` is Nadaraya-Watson kernel regression of v on u with an
  unnormalized Gaussian kernel (the normalization cancels in the
  weight ratio).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import nw_grid_samples

# Below this weight-sum the NW estimate is numerically meaningless and
# the nearest data point's v is used instead.
NW_DENOMINATOR_FLOOR = 1e-12

# The NW grid extends this many bandwidths past the data range, so
# points remapped by other directions still land on estimated ground.
NW_GRID_MARGIN_BANDWIDTHS = 3.0


@dataclass
class KernelConfig:
    """Gaussian kernel exp(-t^2 / (2 h^2)) with bandwidth h in 0-255 colour units."""

    bandwidth: float = 5.0

    def __post_init__(self):
        if not (self.bandwidth > 0):
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")


@dataclass
class Mapping1D:
    """Sampled 1D transfer function with linear interpolation.

    samples[k] is the function value at node grid_lo + k * step where
    step = (grid_hi - grid_lo) / (len(samples) - 1). Outside the grid
    the end segments extend linearly.
    """

    grid_lo: float
    grid_hi: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        s = np.ascontiguousarray(np.asarray(self.samples, dtype=np.float64))
        if s.ndim != 1 or s.shape[0] < 2:
            raise ValueError("need at least 2 samples")
        if not (self.grid_lo < self.grid_hi):
            raise ValueError(f"bad grid bounds [{self.grid_lo}, {self.grid_hi}]")
        if not np.all(np.isfinite(s)):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "samples", s)

    @property
    def grid_size(self) -> int:
        return self.samples.shape[0]

    @property
    def step(self) -> float:
        return (self.grid_hi - self.grid_lo) / (self.grid_size - 1)

    def node(self, k: int) -> float:
        return self.grid_lo + k * self.step

    def evaluate(self, t):
        """Evaluate at scalar or array t.

        Values that are bitwise equal to a grid node return that node's
        stored sample exactly; everything else interpolates linearly
        between (or beyond) the bracketing nodes.
        """
        t_arr = np.asarray(t, dtype=np.float64)
        scalar = t_arr.ndim == 0
        tq = np.atleast_1d(t_arr)
        step = self.step
        pos = (tq - self.grid_lo) / step
        k = np.floor(pos).astype(np.int64)
        np.clip(k, 0, self.grid_size - 2, out=k)
        frac = pos - k
        sk = self.samples[k]
        out = sk + frac * (self.samples[k + 1] - sk)
        # Exact-node snap: guards against one-ulp drift in pos.
        lo_node = self.grid_lo + k * step
        hi_node = self.grid_lo + (k + 1) * step
        out = np.where(tq == lo_node, sk, out)
        out = np.where(tq == hi_node, self.samples[k + 1], out)
        return float(out[0]) if scalar else out


class IdentityMapping:
    """Mapping whose evaluate returns its input unchanged.

    Used as an injection seam in tests: the remap displacement computed
    from it is exactly zero, with no interpolation round-off.
    """

    def evaluate(self, t):
        t_arr = np.asarray(t, dtype=np.float64)
        return float(t_arr) if t_arr.ndim == 0 else t_arr


def eval_mapping(mapping: Mapping1D, t):
    """Functional form of Mapping1D.evaluate."""
    return mapping.evaluate(t)


def _as_clean_1d(a, name: str) -> np.ndarray:
    arr = np.ascontiguousarray(np.asarray(a, dtype=np.float64).ravel())
    if arr.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def ot_map_1d(u, v, grid_size: int = 1024) -> Mapping1D:
    """Quantile-matching transfer from sample set u to sample set v.

    The exact map is piecewise linear with breakpoints at the sorted u
    values; it is sampled onto a uniform grid spanning [min(u), max(u)].
    Pairing between u and v is ignored: only the two marginals matter.
    """
    u = _as_clean_1d(u, "u")
    v = _as_clean_1d(v, "v")
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    su = np.sort(u)
    sv = np.sort(v)
    lo, hi = float(su[0]), float(su[-1])
    if lo == hi:
        # Degenerate span: constant map at the median quantile.
        mid = _quantile_midpoint(sv, np.array([0.5]))[0]
        return Mapping1D(lo - 0.5, hi + 0.5, np.full(grid_size, mid))
    grid = np.linspace(lo, hi, grid_size)
    levels_u = (np.arange(u.size) + 0.5) / u.size
    cdf = np.interp(grid, su, levels_u)
    samples = _quantile_midpoint(sv, cdf)
    return Mapping1D(lo, hi, samples)


def _quantile_midpoint(sorted_v: np.ndarray, levels: np.ndarray) -> np.ndarray:
    """Empirical quantile with midpoint levels (i - 0.5) / n, linear between."""
    n = sorted_v.size
    lv = (np.arange(n) + 0.5) / n
    return np.interp(levels, lv, sorted_v)


def nw_map_1d(u, v, kcfg: KernelConfig | None = None,
              grid_size: int = 1024) -> Mapping1D:
    """Nadaraya-Watson regression of v on the paired u, sampled on a grid.

    The grid spans [min(u) - 3h, max(u) + 3h]. Wherever the kernel
    weight sum underflows the denominator floor, the nearest pair's v is
    used instead, which keeps every sample inside [min(v), max(v)].
    """
    u = _as_clean_1d(u, "u")
    v = _as_clean_1d(v, "v")
    if u.size != v.size:
        raise ValueError(f"u and v must pair up, got {u.size} vs {v.size}")
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    kcfg = kcfg or KernelConfig()
    h = float(kcfg.bandwidth)
    order = np.argsort(u, kind="stable")
    us = u[order]
    vs = v[order]
    margin = NW_GRID_MARGIN_BANDWIDTHS * h
    lo = float(us[0]) - margin
    hi = float(us[-1]) + margin
    step = (hi - lo) / (grid_size - 1)
    samples = nw_grid_samples(us, vs, lo, step, grid_size, h, NW_DENOMINATOR_FLOOR)
    # The estimate is a convex combination of the v values; clip away the
    # few-ulp rounding overshoot so hull membership holds exactly.
    np.clip(samples, vs.min(), vs.max(), out=samples)
    return Mapping1D(lo, hi, samples)
