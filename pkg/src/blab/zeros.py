"""Locate and certify zeros of z -> K(z, w0); decide kernel-zero verdicts.

Certification is one-sided by design: a certificate asserts that the model's
kernel section has a zero inside a stated contour (argument principle with a
modulus floor on the contour), while a no-zero verdict only reports the
smallest modulus observed over the probe set at a stated resolution, never
zero-freeness.

Finite-rank kernels of zero-free domains can acquire spurious boundary-
hugging zeros (truncated sections of a zero-free function need not be
zero-free).  Candidates are therefore screened by a lobe-depth rule before
certification: the zero must sit at depth at least `lobe_gamma` times the
local maximum of the distance function reached by monotone ascent from the
candidate.  Genuine ring zeros sit at more than half of their lobe depth;
boundary artifacts sit at a few percent.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geom import DistanceField, GridDomain, distance_field

DEFAULT_SEED = 1729
ARG_STEP_LIMIT = np.pi / 2


class ContourError(RuntimeError):
    """Modulus floor violated or refinement failed along a contour."""


class ZeroSearchError(ValueError):
    """Invalid probe or scan request."""


def circle_contour(center: complex, radius: float, n: int = 64) -> np.ndarray:
    """Counterclockwise circle sampled at n points (closed implicitly)."""
    if n < 16:
        raise ZeroSearchError("contour needs at least 16 samples")
    t = 2 * np.pi * np.arange(n) / n
    return center + radius * np.exp(1j * t)


# ---------------------------------------------------------------------------
# evaluation plumbing shared by scan / winding
# ---------------------------------------------------------------------------

def _evaluator(model, w0: complex | None) -> tuple[Callable, float]:
    """Normalize a model or a bare callable into (f(zs) -> values, err_est)."""
    if callable(model) and not hasattr(model, "eval_many"):
        return model, 0.0
    if w0 is None:
        raise ZeroSearchError("w0 is required for kernel models")
    err = model.eval_error_estimate(w0) if hasattr(model, "eval_error_estimate") \
        else 0.0
    return (lambda zs: model.eval_many(zs, w0)), float(err)


def _model_domain(model) -> GridDomain | None:
    dom = getattr(model, "domain", None)
    if dom is None and hasattr(model, "grid"):
        dom = model.grid
    return dom


# ---------------------------------------------------------------------------
# scan
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScanResult:
    """Grid scan of |K(., w0)| over one component.

    candidates: local minima below the component median, ascending by value.
    cross_component: the scanned component differs from w0's, where the
    kernel vanishes identically; no candidates are reported there.
    """

    candidates: tuple
    min_modulus: float
    median_modulus: float
    n_scanned: int
    resolution: float
    cross_component: bool = False


def scan_min_modulus(model, w0: complex, stride: int = 4,
                     component: int | None = None,
                     bbox: tuple | None = None) -> ScanResult:
    """Evaluate |K(z, w0)| on every stride-th interior cell of a component.

    Returns the local minima below the component median, sorted ascending.
    Scanning a component other than w0's hits the cross-component zero rule
    and is reported distinctly instead of producing candidates.  An optional
    bbox (x0, y0, x1, y1) restricts the scanned region.
    """
    dom = _model_domain(model)
    if dom is None:
        raise ZeroSearchError("model carries no grid domain to scan")
    w_comp = dom.component_of(w0)
    if w_comp == 0:
        raise ZeroSearchError(f"w0 = {w0} is outside the domain")
    target = w_comp if component is None else component
    sub = dom.component_labels == target
    if bbox is not None:
        x0, y0, x1, y1 = bbox
        grid = dom.center_grid
        sub = sub & (grid.real >= x0) & (grid.real <= x1) \
                  & (grid.imag >= y0) & (grid.imag <= y1)
        if not sub.any():
            raise ZeroSearchError(f"scan bbox {bbox} misses the component")
    scan_mask = np.zeros_like(sub)
    scan_mask[::stride, ::stride] = sub[::stride, ::stride]
    if not scan_mask.any():
        raise ZeroSearchError(f"component {target} has no cells at stride {stride}")

    if target != w_comp:
        return ScanResult(candidates=(), min_modulus=0.0, median_modulus=0.0,
                          n_scanned=int(scan_mask.sum()),
                          resolution=stride * dom.h, cross_component=True)

    pts = dom.center_grid[scan_mask]
    f, _ = _evaluator(model, w0)
    mods = np.abs(f(pts))
    values = np.full(dom.mask.shape, np.inf)
    values[scan_mask] = mods
    median = float(np.median(mods))

    vi = values[::stride, ::stride]
    neigh = np.full(vi.shape + (4,), np.inf)
    neigh[1:, :, 0] = vi[:-1, :]
    neigh[:-1, :, 1] = vi[1:, :]
    neigh[:, 1:, 2] = vi[:, :-1]
    neigh[:, :-1, 3] = vi[:, 1:]
    is_min = np.isfinite(vi) & (vi <= neigh.min(axis=2)) & (vi < median)
    ii, jj = np.nonzero(is_min)
    cand = [(dom.center_grid[i * stride, j * stride], float(vi[i, j]))
            for i, j in zip(ii, jj)]
    cand.sort(key=lambda t: (t[1], t[0].real, t[0].imag))
    return ScanResult(candidates=tuple(cand), min_modulus=float(mods.min()),
                      median_modulus=median, n_scanned=int(mods.size),
                      resolution=stride * dom.h)


def refine_minimum(model, w0: complex, z0: complex, h: float,
                   rounds: int = 3) -> complex:
    """Sharpen a scan minimizer on shrinking local 5x5 grids (deterministic)."""
    dom = _model_domain(model)
    f, _ = _evaluator(model, w0)
    best = z0
    spacing = h
    for _ in range(rounds):
        off = spacing * np.arange(-2, 3)
        grid = (best + off[:, None] + 1j * off[None, :]).ravel()
        keep = np.array([dom.contains(p) for p in grid])
        pts = grid[keep]
        if pts.size == 0:
            break
        vals = np.abs(f(pts))
        best = complex(pts[int(np.argmin(vals))])
        spacing /= 2
    return best


# ---------------------------------------------------------------------------
# winding count
# ---------------------------------------------------------------------------

def winding_count(model, w0: complex | None, contour: np.ndarray,
                  floor_factor: float = 10.0, max_points: int = 1 << 17) -> int:
    """Zeros of z -> K(z, w0) inside a closed counterclockwise polyline.

    The total argument change is accumulated over samples, refined by segment
    bisection until successive arguments differ by less than pi/2; the result
    divided by 2 pi is the exact integer count for a function holomorphic
    inside.  Raises ContourError when the modulus floor (10x the evaluation
    error estimate) is violated or refinement does not settle.
    """
    f, err = _evaluator(model, w0)
    pts = np.asarray(contour, dtype=complex).ravel()
    if pts.size < 8:
        raise ZeroSearchError("contour too coarse")
    plain_callable = callable(model) and not hasattr(model, "eval_many")
    dom = None if plain_callable else _model_domain(model)
    if dom is not None and w0 is not None:
        w_comp = dom.component_of(w0)
        for p in pts:
            if dom.component_of(p) != w_comp:
                raise ContourError(f"contour point {p} leaves w0's component")
    vals = f(pts)
    floor = floor_factor * err

    while True:
        mods = np.abs(vals)
        if mods.min() <= floor or mods.min() == 0.0:
            raise ContourError(
                f"modulus floor violated on contour: min |K| = {mods.min():.3e} "
                f"vs floor {floor:.3e}; move the contour")
        ratio = np.roll(vals, -1) / vals
        dargs = np.angle(ratio)
        bad = np.abs(dargs) >= ARG_STEP_LIMIT
        if not bad.any():
            total = float(dargs.sum())
            count = total / (2 * np.pi)
            nearest = round(count)
            if abs(count - nearest) > 0.25:
                raise ContourError(
                    f"argument sum {count:.3f} turns is not close to an integer")
            return int(nearest)
        if pts.size * 2 > max_points:
            raise ContourError("contour refinement exploded; a zero sits on or "
                               "too near the contour")
        mids = 0.5 * (pts[bad] + np.roll(pts, -1)[bad])
        if dom is not None and w0 is not None:
            w_comp = dom.component_of(w0)
            for p in mids:
                if dom.component_of(p) != w_comp:
                    raise ContourError(f"refined contour point {p} leaves the "
                                       "component")
        mid_vals = f(mids)
        insert_at = np.nonzero(bad)[0] + 1
        pts = np.insert(pts, insert_at, mids)
        vals = np.insert(vals, insert_at, mid_vals)


# ---------------------------------------------------------------------------
# certificates and verdicts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ZeroCertificate:
    """Argument-principle witness for a kernel zero near z_star.

    Valid only with winding >= 1 and a contour modulus floor exceeding ten
    times the evaluation error estimate.
    """

    w0: complex
    contour: tuple
    winding: int
    min_modulus_on_contour: float
    z_star: complex
    eval_error: float

    def validate(self) -> None:
        if self.winding < 1:
            raise ZeroSearchError("certificate must enclose at least one zero")
        if not self.min_modulus_on_contour > 10.0 * self.eval_error:
            raise ZeroSearchError(
                f"certificate floor {self.min_modulus_on_contour:.3e} does not "
                f"clear 10x the evaluation error {self.eval_error:.3e}")

    def to_dict(self) -> dict:
        return {
            "w0": [self.w0.real, self.w0.imag],
            "contour": [[p.real, p.imag] for p in self.contour],
            "winding": self.winding,
            "min_modulus_on_contour": self.min_modulus_on_contour,
            "z_star": [self.z_star.real, self.z_star.imag],
            "eval_error": self.eval_error,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ZeroCertificate":
        cert = cls(
            w0=complex(*d["w0"]),
            contour=tuple(complex(*p) for p in d["contour"]),
            winding=int(d["winding"]),
            min_modulus_on_contour=float(d["min_modulus_on_contour"]),
            z_star=complex(*d["z_star"]),
            eval_error=float(d["eval_error"]),
        )
        cert.validate()
        return cert

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "ZeroCertificate":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class Verdict:
    """Outcome of a kernel-zero search.

    status is "zero-certified" with an embedded certificate, or
    "no-zero-found" carrying the observed modulus floor and the scan
    resolution.  A no-zero-found verdict never claims zero-freeness.
    """

    status: str
    certificate: ZeroCertificate | None
    floor: float
    resolution: float

    @property
    def certified(self) -> bool:
        return self.status == "zero-certified"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "certificate": self.certificate.to_dict() if self.certificate else None,
            "floor": self.floor,
            "resolution": self.resolution,
        }


@dataclass(frozen=True)
class ProbeConfig:
    """Deterministic probe policy for verdicts.

    w0 points default to the deepest cell of each component plus n_random
    cells drawn (fixed seed) from the deep part of the component, cells at
    depth at least depth_fraction of the component maximum.  Deep anchoring
    keeps probe points inside the region where a finite-rank kernel is a
    trustworthy proxy of the domain's kernel.
    """

    w0_points: tuple | None = None
    n_random: int = 8
    seed: int = DEFAULT_SEED
    stride: int = 4
    depth_fraction: float = 0.35
    lobe_gamma: float = 0.2
    max_candidates: int = 5
    contour_points: int = 64
    contour_radius_cells: float = 3.0
    contour_growths: int = 3
    scan_bbox: tuple | None = None  # (x0, y0, x1, y1) restriction of the scan


def _lobe_scale(depth: DistanceField, start: tuple[int, int]) -> float:
    """Local distance-field maximum reached by greedy 8-neighbor ascent."""
    v = depth.values
    nx, ny = v.shape
    i, j = start
    for _ in range(nx * ny):
        best = v[i, j]
        step = None
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                ni, nj = i + di, j + dj
                if 0 <= ni < nx and 0 <= nj < ny and v[ni, nj] > best:
                    best = v[ni, nj]
                    step = (ni, nj)
        if step is None:
            return float(v[i, j])
        i, j = step
    return float(v[i, j])


def default_probes(dom: GridDomain, cfg: ProbeConfig) -> list[complex]:
    """Deepest cell plus seeded deep-interior draws, per component."""
    depth = distance_field(dom)
    labels = dom.component_labels
    rng = np.random.default_rng(cfg.seed)
    probes: list[complex] = []
    for comp in range(1, dom.n_components + 1):
        in_comp = labels == comp
        d = np.where(in_comp, depth.values, -1.0)
        flat_best = int(np.argmax(d))
        probes.append(complex(dom.center_grid.ravel()[flat_best]))
        dmax = d.max()
        deep = np.nonzero((d >= cfg.depth_fraction * dmax).ravel())[0]
        take = min(cfg.n_random, deep.size)
        picks = rng.choice(deep, size=take, replace=False)
        probes.extend(complex(dom.center_grid.ravel()[k]) for k in np.sort(picks))
    return probes


def certify_zero(model, w0: complex, z_star: complex,
                 cfg: ProbeConfig = ProbeConfig(),
                 depth: DistanceField | None = None) -> ZeroCertificate | None:
    """Try to certify a zero of K(., w0) near the candidate z_star.

    The contour is a circle of radius contour_radius_cells * h, grown
    twofold up to contour_growths times when the modulus floor is violated.
    Candidates failing the lobe-depth admissibility rule are rejected
    outright (boundary-hugging truncation artifacts).  Returns None when no
    valid certificate arises.
    """
    dom = _model_domain(model)
    if depth is None:
        depth = distance_field(dom)
    cell = dom.cell_of(z_star)
    if cell is None or not dom.mask[cell]:
        return None
    d_here = float(depth.values[cell])
    if d_here < cfg.lobe_gamma * _lobe_scale(depth, cell):
        return None
    _, err = _evaluator(model, w0)
    radius = cfg.contour_radius_cells * dom.h
    for _ in range(cfg.contour_growths + 1):
        if radius >= d_here:
            return None
        contour = circle_contour(z_star, radius, cfg.contour_points)
        try:
            winding = winding_count(model, w0, contour)
        except ContourError:
            radius *= 2
            continue
        if winding < 1:
            return None
        f, _ = _evaluator(model, w0)
        floor = float(np.min(np.abs(f(contour))))
        cert = ZeroCertificate(w0=complex(w0), contour=tuple(contour),
                               winding=winding, min_modulus_on_contour=floor,
                               z_star=complex(z_star), eval_error=err)
        cert.validate()
        return cert
    return None


def lu_qi_keng_verdict(model, probe_config: ProbeConfig | None = None) -> Verdict:
    """Scan every component at the probe points and certify the best
    candidates; first valid certificate wins, otherwise report the floor.

    Certification failures fold into a no-zero-found verdict carrying the
    minimum modulus observed over all scans and the scan resolution.
    """
    cfg = probe_config or ProbeConfig()
    dom = _model_domain(model)
    if dom is None:
        raise ZeroSearchError("model carries no grid domain")
    depth = distance_field(dom)
    w0s = list(cfg.w0_points) if cfg.w0_points is not None \
        else default_probes(dom, cfg)
    floor = math.inf
    resolution = cfg.stride * dom.h
    for w0 in w0s:
        scan = scan_min_modulus(model, w0, stride=cfg.stride, bbox=cfg.scan_bbox)
        floor = min(floor, scan.min_modulus)
        for z0, _ in scan.candidates[:cfg.max_candidates]:
            z_star = refine_minimum(model, w0, z0, dom.h)
            cert = certify_zero(model, w0, z_star, cfg, depth)
            if cert is not None:
                return Verdict(status="zero-certified", certificate=cert,
                               floor=float(floor), resolution=resolution)
    return Verdict(status="no-zero-found", certificate=None,
                   floor=float(floor), resolution=resolution)


@dataclass(frozen=True)
class HurwitzTrack:
    """Winding counts along a domain sequence at one fixed (w0, contour).

    counts holds None where the contour's modulus floor failed for that
    member (indeterminate); kernel_errors compares each member to the limit
    reference on a compact set containing the contour.
    """

    counts: tuple
    kernel_errors: tuple


def hurwitz_track(models: Sequence, w0: complex, contour: np.ndarray,
                  reference=None, margin: float | None = None) -> HurwitzTrack:
    """Winding count per model on the same contour, plus reference errors."""
    from .kernel import KernelError, kernel_error

    counts: list[int | None] = []
    for m in models:
        try:
            counts.append(winding_count(m, w0, contour))
        except ContourError:
            counts.append(None)
    errors: list[float | None] = []
    if reference is not None:
        ref_dom = _model_domain(reference)
        if margin is None:
            ctr = np.asarray(contour, dtype=complex)
            depth = distance_field(ref_dom)
            margin = 0.5 * min(depth.at(p) for p in ctr)
        for m in models:
            try:
                errors.append(kernel_error(m, reference, margin, domain=ref_dom))
            except KernelError:
                errors.append(None)
    else:
        errors = [None] * len(models)
    return HurwitzTrack(counts=tuple(counts), kernel_errors=tuple(errors))
