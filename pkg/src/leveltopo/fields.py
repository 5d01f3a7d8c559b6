"""Scalar fields on regular grids: sampling, band preimage regions, sup-norm checks.

``region_components`` labels the connected components of a preimage
f^-1((lo, hi)) at grid-cell granularity.  It is deliberately brute force:
a cell belongs to the region when its corner-value span meets the interval
(for bilinear interpolation the extrema over a cell sit at its corners, so
this is exactly "the interpolated field attains a value in the interval on
this cell").  The band components double as the independent oracle for the
marching-squares path: away from critical values, a level-y contour has one
component per band component of (y - delta, y + delta).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .network import Network, Window, scalar_output


@dataclass(frozen=True)
class ScalarField:
    """Samples of a scalar function at the corner lattice of a window.

    ``values[i, j]`` is the sample at ``(axes[0][i], axes[1][j])``; 2-d and
    3-d grids are supported (contour extraction is 2-d only, region labeling
    handles both).
    """

    window: Window
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != self.window.dim or v.ndim not in (2, 3):
            raise ValueError(f"values must match the window dimension, got shape {v.shape} "
                             f"for a {self.window.dim}-d window")
        if any(r < 2 for r in v.shape):
            raise ValueError(f"need at least 2 samples per axis, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def resolution(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def spacing(self) -> np.ndarray:
        return self.window.extent / (np.array(self.resolution) - 1)

    @property
    def cell_diagonal(self) -> float:
        return float(np.linalg.norm(self.spacing))

    def axis(self, d: int) -> np.ndarray:
        return np.linspace(self.window.lo[d], self.window.hi[d], self.resolution[d])

    def value_range(self) -> tuple[float, float]:
        return float(self.values.min()), float(self.values.max())


def sample_grid(f, window: Window, resolution: tuple[int, ...]) -> ScalarField:
    """Sample ``f`` at the corner lattice of ``window``.

    ``f`` takes a (m, dim) array of points and returns (m,) values; use
    ``network_scalar_fn`` to adapt a scalar-valued Network.  A non-finite
    sample aborts with the offending coordinates in the error message.
    """
    resolution = tuple(int(r) for r in resolution)
    if len(resolution) != window.dim or window.dim not in (2, 3):
        raise ValueError(f"resolution {resolution} does not match {window.dim}-d window")
    if any(r < 2 for r in resolution):
        raise ValueError(f"resolution must be >= 2 per axis, got {resolution}")
    axes = [np.linspace(window.lo[d], window.hi[d], resolution[d]) for d in range(window.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    raw = np.asarray(f(points), dtype=np.float64).reshape(points.shape[0])
    bad = np.flatnonzero(~np.isfinite(raw))
    if bad.size:
        where = points[bad[0]]
        raise ValueError(f"non-finite sample {raw[bad[0]]!r} at {tuple(where)}")
    return ScalarField(window, raw.reshape(resolution))


def network_scalar_fn(net: Network):
    """Adapter: scalar-valued network -> field evaluation callable."""
    return lambda points: scalar_output(net, points)


def field_hash(fld: ScalarField) -> str:
    import hashlib

    h = hashlib.sha256()
    h.update(np.ascontiguousarray(fld.values).tobytes())
    h.update(fld.window.lo.tobytes())
    h.update(fld.window.hi.tobytes())
    return h.hexdigest()


@dataclass(frozen=True)
class RegionComponent:
    label: int
    cell_count: int
    touches_boundary: bool
    # True when some cell of the component straddles the interval midpoint;
    # for a band (y - d, y + d) this distinguishes components that really
    # contain the level-y set from ones that only graze the band.
    straddles_mid: bool


@dataclass(frozen=True)
class RegionComponents:
    """Cell-level connected components of a band preimage.

    ``label_grid`` has one entry per grid cell (resolution minus one per
    axis); -1 marks cells outside the band.  Components use edge
    connectivity: 4 neighbors in 2-d, 6 in 3-d.
    """

    interval: tuple[float, float]
    label_grid: np.ndarray
    components: tuple[RegionComponent, ...]

    @property
    def count(self) -> int:
        return len(self.components)

    def component_mask(self, label: int) -> np.ndarray:
        return self.label_grid == label


def _cell_min_max(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Min/max over the 2^dim corners of every cell."""
    lo = values
    hi = values
    for axis in range(values.ndim):
        sl_a = [slice(None)] * values.ndim
        sl_b = [slice(None)] * values.ndim
        sl_a[axis] = slice(None, -1)
        sl_b[axis] = slice(1, None)
        lo = np.minimum(lo[tuple(sl_a)], lo[tuple(sl_b)])
        hi = np.maximum(hi[tuple(sl_a)], hi[tuple(sl_b)])
    return lo, hi


def region_components(fld: ScalarField, interval: tuple[float, float]) -> RegionComponents:
    """Label the components of the cells on which the field meets ``interval``.

    A cell qualifies when its corner-value span intersects the open interval
    (lo, hi).  Per component the result records the cell count, whether the
    component contains a window-edge cell, and whether it straddles the
    interval midpoint.
    """
    lo, hi = interval
    if not lo < hi:
        raise ValueError(f"need lo < hi, got {interval}")
    cell_lo, cell_hi = _cell_min_max(fld.values)
    mask = (cell_lo < hi) & (cell_hi > lo)
    mid = 0.5 * (lo + hi)
    straddle_mask = (cell_lo < mid) & (cell_hi > mid)

    labels = np.full(mask.shape, -1, dtype=np.int64)
    shape = mask.shape
    ndim = mask.ndim
    offsets = []
    for axis in range(ndim):
        for sign in (-1, 1):
            off = [0] * ndim
            off[axis] = sign
            offsets.append(tuple(off))

    components = []
    next_label = 0
    for start in map(tuple, np.argwhere(mask)):
        if labels[start] != -1:
            continue
        queue = deque([start])
        labels[start] = next_label
        cell_count = 0
        touches = False
        straddles_mid = False
        while queue:
            cur = queue.popleft()
            cell_count += 1
            if any(c == 0 or c == shape[d] - 1 for d, c in enumerate(cur)):
                touches = True
            if straddle_mask[cur]:
                straddles_mid = True
            for off in offsets:
                nb = tuple(c + o for c, o in zip(cur, off))
                if any(c < 0 or c >= shape[d] for d, c in enumerate(nb)):
                    continue
                if mask[nb] and labels[nb] == -1:
                    labels[nb] = next_label
                    queue.append(nb)
        components.append(RegionComponent(next_label, cell_count, touches, straddles_mid))
        next_label += 1
    return RegionComponents((lo, hi), labels, tuple(components))


def sample_noncritical_levels(fld: ScalarField, count: int, rng,
                              exclusion: float | None = None,
                              lo_pct: float = 10.0, hi_pct: float = 90.0) -> np.ndarray:
    """Draw probe levels away from (proxies of) critical values.

    Candidate critical values are the field values at grid nodes whose
    discrete gradient magnitude falls in the lowest 2 percent, plus the
    global extrema; near those, grid connectivity is unreliable at any
    finite resolution.  Levels are drawn uniformly from the given percentile
    range and rejected within ``exclusion`` of any candidate (default: five
    times the band width used by the contour oracle).
    """
    values = fld.values
    spacing = fld.spacing
    lo_v, hi_v = fld.value_range()
    span = hi_v - lo_v
    if exclusion is None:
        exclusion = 5e-3 * span
    grads = np.gradient(values, *spacing)
    gmag = np.sqrt(sum(g * g for g in grads))
    flat = values[gmag <= np.percentile(gmag, 2.0)]
    critical = np.concatenate([flat.ravel(), [lo_v, hi_v]])
    p_lo, p_hi = np.percentile(values, [lo_pct, hi_pct])
    levels = []
    attempts = 0
    while len(levels) < count and attempts < 1000 * max(count, 1):
        attempts += 1
        candidate = float(rng.uniform(p_lo, p_hi))
        if np.min(np.abs(critical - candidate)) > exclusion:
            levels.append(candidate)
    if len(levels) < count:
        raise ValueError("could not find enough probe levels away from critical values")
    return np.asarray(levels)


def eps_A_approximates(f, g, window: Window, resolution: tuple[int, ...], eps: float) -> bool:
    """Grid surrogate for sup-norm closeness: max deviation strictly below eps."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    fa = sample_grid(f, window, resolution)
    ga = sample_grid(g, window, resolution)
    return float(np.max(np.abs(fa.values - ga.values))) < eps
