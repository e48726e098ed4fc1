"""Bounded open sets as lattice cell masks, with set metrics and constructors.

A domain is a boolean mask on a uniform grid: cell (i, j) covers the open
square of side h centered at origin + h*(i+1/2, j+1/2).  Planar masks live in
R^2 = C; a reinhardt-profile mask lives in the (r1, r2) quarter-plane and
describes the circular domain {(z1, z2): (|z1|, |z2|) in profile} in C^2.

Two metrics on domains are provided: rho1 (Hausdorff distance between
closures plus Hausdorff distance between boundaries) and rho2 (volume of the
symmetric difference plus sup-norm distance between interior distance
functions).  rho1 is sensitive to slits and punctures; rho2 tolerates thin
tails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

PLANAR = "planar"
REINHARDT = "reinhardt-profile"

FOUR_CONN = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


class GeomError(ValueError):
    """Invalid domain construction or operation."""


class EmptyDomainError(GeomError):
    """A construction produced (or received) an empty cell mask."""


class LatticeMismatchError(GeomError):
    """Operands do not share a lattice (different h or incongruent origins)."""


def _axis_centers(origin: float, n: int, h: float) -> np.ndarray:
    """Cell centers computed from global integer indices.

    Origins are snapped to integer multiples of h, so centers come out
    bitwise identical for the same physical cell regardless of which array
    it sits in."""
    k = round(origin / h)
    return (k + np.arange(n) + 0.5) * h


@dataclass(frozen=True)
class GridDomain:
    """Bounded open set as a cell mask on a uniform lattice."""

    origin: tuple[float, float]
    h: float
    mask: np.ndarray
    kind: str = PLANAR

    def __post_init__(self):
        if self.h <= 0:
            raise GeomError(f"spacing must be positive, got {self.h}")
        if self.mask.dtype != np.bool_ or self.mask.ndim != 2:
            raise GeomError("mask must be a 2-D boolean array")
        if not self.mask.any():
            raise EmptyDomainError("domain mask has no true cells")
        if self.kind not in (PLANAR, REINHARDT):
            raise GeomError(f"unknown domain kind {self.kind!r}")
        if self.kind == REINHARDT:
            cx, cy = self.centers_x, self.centers_y
            ii, jj = np.nonzero(self.mask)
            if (cx[ii] < 0).any() or (cy[jj] < 0).any():
                raise GeomError("reinhardt profile has cells at negative radii")
        self.mask.setflags(write=False)

    @property
    def nx(self) -> int:
        return self.mask.shape[0]

    @property
    def ny(self) -> int:
        return self.mask.shape[1]

    @property
    def cell_count(self) -> int:
        return int(self.mask.sum())

    @cached_property
    def centers_x(self) -> np.ndarray:
        return _axis_centers(self.origin[0], self.nx, self.h)

    @cached_property
    def centers_y(self) -> np.ndarray:
        return _axis_centers(self.origin[1], self.ny, self.h)

    @cached_property
    def center_grid(self) -> np.ndarray:
        """Complex cell centers, shape (nx, ny). x is the real axis."""
        return self.centers_x[:, None] + 1j * self.centers_y[None, :]

    @cached_property
    def true_centers(self) -> np.ndarray:
        """Complex centers of true cells in row-major order."""
        return self.center_grid[self.mask]

    @cached_property
    def component_labels(self) -> np.ndarray:
        """4-connected component label per cell (0 outside the domain)."""
        labels, _ = ndimage.label(self.mask, structure=FOUR_CONN)
        return labels

    @property
    def n_components(self) -> int:
        return int(self.component_labels.max())

    def cell_of(self, point: complex) -> tuple[int, int] | None:
        """Indices of the cell containing the point, or None if off-array."""
        i = math.floor((point.real - self.origin[0]) / self.h)
        j = math.floor((point.imag - self.origin[1]) / self.h)
        if 0 <= i < self.nx and 0 <= j < self.ny:
            return i, j
        return None

    def contains(self, point: complex) -> bool:
        ij = self.cell_of(point)
        return ij is not None and bool(self.mask[ij])

    def component_of(self, point: complex) -> int:
        """Component label at the point (0 if outside the domain)."""
        ij = self.cell_of(point)
        return int(self.component_labels[ij]) if ij is not None else 0


@dataclass(frozen=True)
class DistanceField:
    """Sampled distance-to-complement d_U on the lattice of its domain.

    Values are zero exactly on cells outside the domain mask.
    """

    origin: tuple[float, float]
    h: float
    values: np.ndarray
    kind: str = PLANAR

    def __post_init__(self):
        self.values.setflags(write=False)

    def at(self, point: complex) -> float:
        i = math.floor((point.real - self.origin[0]) / self.h)
        j = math.floor((point.imag - self.origin[1]) / self.h)
        if 0 <= i < self.values.shape[0] and 0 <= j < self.values.shape[1]:
            return float(self.values[i, j])
        return 0.0


@dataclass(frozen=True)
class PointSet:
    """Discretized closure and boundary of a domain, as cell-center points."""

    closure: np.ndarray
    boundary: np.ndarray

    def __post_init__(self):
        if self.closure.size == 0 or self.boundary.size == 0:
            raise EmptyDomainError("point set derived from an empty domain")


@dataclass(frozen=True)
class DomainSequence:
    """Ordered approximating domains with their schedule and common target."""

    members: tuple[GridDomain, ...]
    params: tuple[float, ...]
    target: GridDomain

    def __post_init__(self):
        if len(self.members) != len(self.params):
            raise GeomError("schedule length does not match member count")
        for m in self.members:
            if not _same_lattice(m, self.target):
                raise LatticeMismatchError("sequence member lattice differs from target")

    def __len__(self) -> int:
        return len(self.members)


# ---------------------------------------------------------------------------
# shape specs
# ---------------------------------------------------------------------------

def disc(center: complex, r: float) -> dict:
    if r <= 0:
        raise GeomError("disc radius must be positive")
    return {"shape": "disc", "center": [center.real, center.imag], "r": float(r)}


def annulus(center: complex, rho: float, R: float) -> dict:
    if not 0 < rho < R:
        raise GeomError(f"annulus radii must satisfy 0 < rho < R, got {rho}, {R}")
    return {"shape": "annulus", "center": [center.real, center.imag],
            "rho": float(rho), "R": float(R)}


def rectangle(corner_a: tuple[float, float], corner_b: tuple[float, float]) -> dict:
    return {"shape": "rectangle", "corners": [list(map(float, corner_a)),
                                              list(map(float, corner_b))]}


def union(*parts: dict) -> dict:
    if not parts:
        raise GeomError("union of no shapes")
    return {"shape": "union", "parts": list(parts)}


def difference(a: dict, b: dict) -> dict:
    return {"shape": "difference", "a": a, "b": b}


def reinhardt_profile(region: dict) -> dict:
    return {"shape": "reinhardt-profile", "region": region}


def _spec_bbox(spec: dict) -> tuple[float, float, float, float]:
    kind = spec["shape"]
    if kind == "disc":
        cx, cy = spec["center"]
        r = spec["r"]
        return cx - r, cy - r, cx + r, cy + r
    if kind == "annulus":
        cx, cy = spec["center"]
        R = spec["R"]
        return cx - R, cy - R, cx + R, cy + R
    if kind == "rectangle":
        (x0, y0), (x1, y1) = spec["corners"]
        return min(x0, x1), min(y0, y1), max(x0, x1), max(y0, y1)
    if kind == "union":
        boxes = [_spec_bbox(p) for p in spec["parts"]]
        return (min(b[0] for b in boxes), min(b[1] for b in boxes),
                max(b[2] for b in boxes), max(b[3] for b in boxes))
    if kind == "difference":
        return _spec_bbox(spec["a"])
    if kind == "reinhardt-profile":
        x0, y0, x1, y1 = _spec_bbox(spec["region"])
        return max(x0, 0.0), max(y0, 0.0), x1, y1
    raise GeomError(f"unknown shape spec {kind!r}")


def _spec_predicate(spec: dict, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    kind = spec["shape"]
    if kind == "disc":
        cx, cy = spec["center"]
        return (X - cx) ** 2 + (Y - cy) ** 2 < spec["r"] ** 2
    if kind == "annulus":
        cx, cy = spec["center"]
        rho, R = spec["rho"], spec["R"]
        if not 0 < rho < R:
            raise GeomError(f"annulus radii must satisfy 0 < rho < R, got {rho}, {R}")
        r2 = (X - cx) ** 2 + (Y - cy) ** 2
        return (r2 > rho ** 2) & (r2 < R ** 2)
    if kind == "rectangle":
        (x0, y0), (x1, y1) = spec["corners"]
        x0, x1 = min(x0, x1), max(x0, x1)
        y0, y1 = min(y0, y1), max(y0, y1)
        return (X > x0) & (X < x1) & (Y > y0) & (Y < y1)
    if kind == "union":
        out = np.zeros_like(X, dtype=bool)
        for p in spec["parts"]:
            out |= _spec_predicate(p, X, Y)
        return out
    if kind == "difference":
        return _spec_predicate(spec["a"], X, Y) & ~_spec_predicate(spec["b"], X, Y)
    if kind == "reinhardt-profile":
        return _spec_predicate(spec["region"], X, Y) & (X >= 0) & (Y >= 0)
    raise GeomError(f"unknown shape spec {kind!r}")


def make_domain(spec: dict, h: float,
                bounds: tuple[float, float, float, float] | None = None,
                pad: int = 2) -> GridDomain:
    """Rasterize a shape spec: mask true exactly where cell centers satisfy it.

    The lattice origin is snapped to an integer multiple of h so that domains
    built at the same h are always alignable for cellwise operations.
    """
    if h <= 0:
        raise GeomError("spacing h must be positive")
    kind = REINHARDT if spec["shape"] == "reinhardt-profile" else PLANAR
    if bounds is None:
        bounds = _spec_bbox(spec)
    x0, y0, x1, y1 = bounds
    ox = (math.floor(x0 / h) - pad) * h
    oy = (math.floor(y0 / h) - pad) * h
    if kind == REINHARDT:
        ox, oy = max(ox, 0.0), max(oy, 0.0)
    nx = int(math.ceil((x1 - ox) / h)) + pad
    ny = int(math.ceil((y1 - oy) / h)) + pad
    cx = _axis_centers(ox, nx, h)
    cy = _axis_centers(oy, ny, h)
    X, Y = np.meshgrid(cx, cy, indexing="ij")
    mask = _spec_predicate(spec, X, Y)
    if not mask.any():
        raise EmptyDomainError(f"shape spec rasterized to an empty mask at h={h}")
    return GridDomain(origin=(ox, oy), h=h, mask=mask, kind=kind)


# ---------------------------------------------------------------------------
# lattice alignment and cellwise ops
# ---------------------------------------------------------------------------

def _same_lattice(U: GridDomain, V: GridDomain) -> bool:
    if abs(U.h - V.h) > 1e-12 * max(U.h, V.h):
        return False
    for k in (0, 1):
        off = (U.origin[k] - V.origin[k]) / U.h
        if abs(off - round(off)) > 1e-6:
            return False
    return True


def _aligned_masks(U: GridDomain, V: GridDomain) -> tuple[np.ndarray, np.ndarray,
                                                          tuple[float, float]]:
    """Embed both masks in one array covering the union of the two arrays."""
    if U.kind != V.kind:
        raise LatticeMismatchError("cannot combine planar and reinhardt domains")
    if not _same_lattice(U, V):
        raise LatticeMismatchError("domains do not share a lattice")
    h = U.h
    ox = min(U.origin[0], V.origin[0])
    oy = min(U.origin[1], V.origin[1])
    iU = (round((U.origin[0] - ox) / h), round((U.origin[1] - oy) / h))
    iV = (round((V.origin[0] - ox) / h), round((V.origin[1] - oy) / h))
    nx = max(iU[0] + U.nx, iV[0] + V.nx)
    ny = max(iU[1] + U.ny, iV[1] + V.ny)
    mU = np.zeros((nx, ny), dtype=bool)
    mV = np.zeros((nx, ny), dtype=bool)
    mU[iU[0]:iU[0] + U.nx, iU[1]:iU[1] + U.ny] = U.mask
    mV[iV[0]:iV[0] + V.nx, iV[1]:iV[1] + V.ny] = V.mask
    return mU, mV, (ox, oy)


def domain_union(U: GridDomain, V: GridDomain) -> GridDomain:
    mU, mV, origin = _aligned_masks(U, V)
    return GridDomain(origin=origin, h=U.h, mask=mU | mV, kind=U.kind)


def domain_difference(U: GridDomain, V: GridDomain) -> GridDomain:
    mU, mV, origin = _aligned_masks(U, V)
    return GridDomain(origin=origin, h=U.h, mask=mU & ~mV, kind=U.kind)


# ---------------------------------------------------------------------------
# distance fields and discretized sets
# ---------------------------------------------------------------------------

def _edt(mask: np.ndarray, h: float, kind: str,
         origin: tuple[float, float]) -> np.ndarray:
    """Exact Euclidean distance from true cells to the nearest complement
    cell center.  The infinite complement beyond the array is represented by
    a false ring.  A reinhardt profile whose array starts at a radial axis is
    mirror-padded across that axis: the quarter-plane has no complement
    points at negative radii, and reflected cells never undercut the
    distance to a real complement cell."""
    if kind != REINHARDT:
        padded = np.pad(mask, 1, mode="constant", constant_values=False)
        dist = ndimage.distance_transform_edt(padded, sampling=h)
        return dist[1:-1, 1:-1]
    nx, ny = mask.shape
    mirror_x = origin[0] <= 0.5 * h
    mirror_y = origin[1] <= 0.5 * h
    px = nx if mirror_x else 1
    py = ny if mirror_y else 1
    big = np.zeros((px + nx + 1, py + ny + 1), dtype=bool)
    big[px:px + nx, py:py + ny] = mask
    if mirror_x:
        big[:px, py:py + ny] = mask[::-1, :]
    if mirror_y:
        big[px:px + nx, :py] = mask[:, ::-1]
    if mirror_x and mirror_y:
        big[:px, :py] = mask[::-1, ::-1]
    dist = ndimage.distance_transform_edt(big, sampling=h)
    return dist[px:px + nx, py:py + ny]


def distance_field(U: GridDomain) -> DistanceField:
    """Exact Euclidean distance transform of the domain mask (0 off U)."""
    values = _edt(U.mask, U.h, U.kind, U.origin)
    return DistanceField(origin=U.origin, h=U.h, values=values, kind=U.kind)


def boundary_mask(U: GridDomain) -> np.ndarray:
    """True cells with at least one false 4-neighbor (array border is false)."""
    m = np.pad(U.mask, 1, mode="constant", constant_values=False)
    interior = m[1:-1, 1:-1] & m[:-2, 1:-1] & m[2:, 1:-1] & m[1:-1, :-2] & m[1:-1, 2:]
    return U.mask & ~interior


def extract_sets(U: GridDomain) -> PointSet:
    """Discretize the closure and the boundary of U as cell-center points."""
    return PointSet(closure=U.true_centers,
                    boundary=U.center_grid[boundary_mask(U)])


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def hausdorff(A: np.ndarray, B: np.ndarray) -> float:
    """Hausdorff distance between two finite point sets (complex arrays).

    Exact on the given points: max over both sets of the distance to the
    nearest point of the other set.
    """
    A = np.asarray(A).ravel()
    B = np.asarray(B).ravel()
    if A.size == 0 or B.size == 0:
        raise GeomError("hausdorff distance of an empty point set")
    pa = np.column_stack([A.real, A.imag])
    pb = np.column_stack([B.real, B.imag])
    d_ab, _ = cKDTree(pb).query(pa, workers=1)
    d_ba, _ = cKDTree(pa).query(pb, workers=1)
    return float(max(d_ab.max(), d_ba.max()))


def _directed_sup(mask_from: np.ndarray, mask_to: np.ndarray, h: float) -> float:
    dist_to = ndimage.distance_transform_edt(~mask_to, sampling=h)
    return float(dist_to[mask_from].max())


def _hausdorff_masks(mA: np.ndarray, mB: np.ndarray, h: float) -> float:
    return max(_directed_sup(mA, mB, h), _directed_sup(mB, mA, h))


def rho1_parts(U: GridDomain, V: GridDomain) -> tuple[float, float]:
    """The two Hausdorff terms of rho1: (closures, boundaries)."""
    mU, mV, _ = _aligned_masks(U, V)
    h = U.h
    if (mU == mV).all():
        return 0.0, 0.0
    bU = _boundary_of(mU)
    bV = _boundary_of(mV)
    return _hausdorff_masks(mU, mV, h), _hausdorff_masks(bU, bV, h)


def rho1(U: GridDomain, V: GridDomain) -> float:
    """Hausdorff distance between closures plus between boundaries."""
    closures, boundaries = rho1_parts(U, V)
    return closures + boundaries


def _boundary_of(mask: np.ndarray) -> np.ndarray:
    m = np.pad(mask, 1, mode="constant", constant_values=False)
    interior = m[1:-1, 1:-1] & m[:-2, 1:-1] & m[2:, 1:-1] & m[1:-1, :-2] & m[1:-1, 2:]
    return mask & ~interior


def _cell_volumes(mask: np.ndarray, origin: tuple[float, float], h: float,
                  kind: str) -> np.ndarray:
    if kind == PLANAR:
        return np.full(int(mask.sum()), h * h)
    cx = _axis_centers(origin[0], mask.shape[0], h)
    cy = _axis_centers(origin[1], mask.shape[1], h)
    ii, jj = np.nonzero(mask)
    return (2 * np.pi) ** 2 * cx[ii] * cy[jj] * h * h


def rho2_parts(U: GridDomain, V: GridDomain) -> tuple[float, float]:
    """The two terms of rho2: (symmetric-difference volume, sup |d_U - d_V|)."""
    mU, mV, origin = _aligned_masks(U, V)
    h = U.h
    if (mU == mV).all():
        return 0.0, 0.0
    sym = mU ^ mV
    vol = float(_cell_volumes(sym, origin, h, U.kind).sum())
    dU = _edt(mU, h, U.kind, origin)
    dV = _edt(mV, h, U.kind, origin)
    return vol, float(np.abs(dU - dV).max())


def rho2(U: GridDomain, V: GridDomain) -> float:
    """Symmetric-difference volume plus sup-norm gap of distance functions.

    The sup over the whole plane reduces to the aligned array: both distance
    functions vanish outside their domains.
    """
    vol, sup = rho2_parts(U, V)
    return vol + sup


def volume(U: GridDomain) -> float:
    """Lebesgue volume: cell count * h^2 for planar masks; for a reinhardt
    profile, the C^2 volume sum (2 pi)^2 r1 r2 h^2 over true cells."""
    return float(_cell_volumes(U.mask, U.origin, U.h, U.kind).sum())


# ---------------------------------------------------------------------------
# constructors used by the convergence experiments
# ---------------------------------------------------------------------------

def interior_exhaustion(G: GridDomain, depths: Sequence[float]) -> DomainSequence:
    """Interior approximants {d_G > eps} for each depth eps in the schedule.

    Members are nested (larger depth inside smaller), their closures are
    contained in G, and rho1(member, G) -> 0 as the depth shrinks.
    """
    df = distance_field(G)
    members = []
    for eps in depths:
        if eps <= G.h:
            raise GeomError(f"exhaustion depth {eps} must exceed the spacing {G.h}")
        m = df.values > eps
        if not m.any():
            raise EmptyDomainError(f"exhaustion depth {eps} empties the domain")
        members.append(GridDomain(origin=G.origin, h=G.h, mask=m, kind=G.kind))
    return DomainSequence(members=tuple(members), params=tuple(float(e) for e in depths),
                          target=G)


def _segment_distance(X: np.ndarray, Y: np.ndarray,
                      a: complex, b: complex) -> np.ndarray:
    """Distance from grid points to the closed segment [a, b]."""
    ab = b - a
    denom = abs(ab) ** 2
    if denom == 0:
        return np.hypot(X - a.real, Y - a.imag)
    t = ((X - a.real) * ab.real + (Y - a.imag) * ab.imag) / denom
    t = np.clip(t, 0.0, 1.0)
    px = a.real + t * ab.real
    py = a.imag + t * ab.imag
    return np.hypot(X - px, Y - py)


def barbell_sequence(G: GridDomain, D: GridDomain, segment: tuple[complex, complex],
                     widths: Sequence[float]) -> DomainSequence:
    """Join two disjoint planar domains by straight necks of shrinking width.

    Member k is G u D u neck_k where neck_k collects the cells within
    widths[k]/2 of the segment.  Every member is lattice-connected, coincides
    with G u D outside the neck tube, and rho2(member, G u D) -> 0 as the
    widths shrink.
    """
    if G.kind != PLANAR or D.kind != PLANAR:
        raise GeomError("barbell construction requires planar domains")
    mG, mD, origin = _aligned_masks(G, D)
    h = G.h
    if (mG & mD).any():
        raise GeomError("barbell lobes overlap")
    dist_to_G = ndimage.distance_transform_edt(~mG, sampling=h)
    if float(dist_to_G[mD].min()) <= 2 * h:
        raise GeomError("barbell lobes must be disjoint with a positive gap")
    a, b = segment
    for endpoint, lobe in ((a, _boundary_of(mG)), (b, _boundary_of(mD))):
        cx = _axis_centers(origin[0], lobe.shape[0], h)
        cy = _axis_centers(origin[1], lobe.shape[1], h)
        ii, jj = np.nonzero(lobe)
        d = np.hypot(cx[ii] - endpoint.real, cy[jj] - endpoint.imag).min()
        if d > 2 * h:
            raise GeomError(f"segment endpoint {endpoint} is not boundary-adjacent "
                            f"(nearest boundary cell at {d:.3g})")
    nx, ny = mG.shape
    cx = _axis_centers(origin[0], nx, h)
    cy = _axis_centers(origin[1], ny, h)
    X, Y = np.meshgrid(cx, cy, indexing="ij")
    seg_dist = _segment_distance(X, Y, a, b)
    base = mG | mD
    target = GridDomain(origin=origin, h=h, mask=base, kind=PLANAR)
    members = []
    for w in widths:
        if w < 3 * h:
            raise GeomError(f"neck width {w} below the lattice minimum {3 * h}"
                            " (neck may disconnect)")
        member_mask = base | (seg_dist <= w / 2)
        member = GridDomain(origin=origin, h=h, mask=member_mask, kind=PLANAR)
        if member.n_components != 1:
            raise GeomError(f"barbell member at width {w} is not lattice-connected")
        members.append(member)
    return DomainSequence(members=tuple(members), params=tuple(float(w) for w in widths),
                          target=target)


# ---------------------------------------------------------------------------
# reinhardt pseudoconvexity check
# ---------------------------------------------------------------------------

def is_logconvex_profile(U: GridDomain) -> bool:
    """Decide logarithmic convexity of a reinhardt profile up to 2h tolerance.

    The log image of the true cells must be convex: a false cell whose
    log-point sits inside the convex hull by more than its own tolerance box
    (2h in each radius, transported to log coordinates) is a violation.
    Profiles touching a radial axis must additionally be downward closed
    along that coordinate (completeness along the axis).
    """
    if U.kind != REINHARDT:
        raise GeomError("log-convexity check applies to reinhardt profiles")
    mask = U.mask
    cx, cy = U.centers_x, U.centers_y
    tol = 2 * U.h

    touches_r1_zero = U.origin[0] <= 0.5 * U.h and mask[0, :].any()
    touches_r2_zero = U.origin[1] <= 0.5 * U.h and mask[:, 0].any()
    if touches_r1_zero and (mask[1:, :] & ~mask[:-1, :]).any():
        return False  # not downward closed in r1 (completeness along the axis)
    if touches_r2_zero and (mask[:, 1:] & ~mask[:, :-1]).any():
        return False

    ii, jj = np.nonzero(mask)
    pts = np.column_stack([np.log(cx[ii]), np.log(cy[jj])])
    fi, fj = np.nonzero(~mask)
    keep = (cx[fi] > 0) & (cy[fj] > 0)
    fi, fj = fi[keep], fj[keep]
    if fi.size == 0:
        return True
    fpts = np.column_stack([np.log(cx[fi]), np.log(cy[fj])])
    ftol = np.column_stack([tol / cx[fi], tol / cy[fj]])

    uniq = np.unique(pts, axis=0)
    if len(uniq) < 3 or _collinear(uniq):
        return not _gap_on_line(uniq, fpts, ftol)

    from scipy.spatial import ConvexHull

    hull = ConvexHull(pts)
    A = hull.equations[:, :2]
    c = hull.equations[:, 2]
    # hull interior is A @ x + c <= 0; the tolerance box around a false point
    # is inside iff every inequality holds with margin |A| . tol
    margin = np.abs(A) @ ftol.T
    inside = ((A @ fpts.T + c[:, None]) <= -margin).all(axis=0)
    return not bool(inside.any())


def _collinear(pts: np.ndarray) -> bool:
    d = pts - pts.mean(axis=0)
    return float(np.linalg.svd(d, compute_uv=False)[-1]) < 1e-12


def _gap_on_line(pts: np.ndarray, fpts: np.ndarray, ftol: np.ndarray) -> bool:
    """Violation test for a degenerate (collinear) log image."""
    base = pts[0]
    direction = pts[-1] - pts[0]
    norm = np.linalg.norm(direction)
    if norm == 0:
        return False
    u = direction / norm
    t = (pts - base) @ u
    ft = (fpts - base) @ u
    perp = np.abs((fpts - base) @ np.array([-u[1], u[0]]))
    ftol_line = np.abs(ftol) @ np.abs(u)
    on_line = perp <= ftol.max(axis=1)
    inside = (ft > t.min() + ftol_line) & (ft < t.max() - ftol_line)
    return bool((on_line & inside).any())


# ---------------------------------------------------------------------------
# serialization: run-length-encoded mask files
# ---------------------------------------------------------------------------

def save_grid(U: GridDomain, path) -> None:
    """Write the portable RLE mask format.

    Header: ``grid v1 <h> <origin-x> <origin-y> <rows> <cols> <kind>``.
    Each following line holds one mask row as run lengths of alternating
    false/true cells, starting with false.
    """
    lines = [f"grid v1 {float(U.h)!r} {float(U.origin[0])!r} "
             f"{float(U.origin[1])!r} {U.nx} {U.ny} {U.kind}"]
    for i in range(U.nx):
        row = U.mask[i]
        runs = []
        current = False
        count = 0
        for v in row:
            if bool(v) == current:
                count += 1
            else:
                runs.append(count)
                current = bool(v)
                count = 1
        runs.append(count)
        lines.append(" ".join(str(r) for r in runs))
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def load_grid(path) -> GridDomain:
    with open(path, encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 8 or header[0] != "grid" or header[1] != "v1":
            raise GeomError(f"not a grid v1 file: {path}")
        h = float(header[2])
        origin = (float(header[3]), float(header[4]))
        nx, ny = int(header[5]), int(header[6])
        kind = header[7]
        mask = np.zeros((nx, ny), dtype=bool)
        for i in range(nx):
            runs = [int(t) for t in f.readline().split()]
            j = 0
            value = False
            for run in runs:
                if value:
                    mask[i, j:j + run] = True
                j += run
                value = not value
            if j != ny:
                raise GeomError(f"row {i} of {path} has {j} cells, expected {ny}")
    return GridDomain(origin=origin, h=h, mask=mask, kind=kind)
