"""Fitted kernels against closed-form oracles, and the kernel algebra."""

import numpy as np
import pytest

from blab import basis as bs
from blab import kernel as kn
from blab.geom import annulus, disc, make_domain, rectangle, reinhardt_profile, union


@pytest.fixture(scope="module")
def disc_model():
    U = make_domain(disc(0, 1), h=0.005)
    return kn.fit_kernel(U, bs.monomials(0, 8))


@pytest.fixture(scope="module")
def annulus_model():
    U = make_domain(annulus(0, 0.5, 1), h=0.005)
    return kn.fit_kernel(U, bs.laurent(0, 12, 12))


@pytest.fixture(scope="module")
def two_disc_model():
    U = make_domain(union(disc(-2, 0.8), disc(2, 0.8)), h=0.02)
    return kn.fit_kernel(U, bs.monomials(0, 10))


# ---------------------------------------------------------------------------
# fit_kernel against the disc oracle
# ---------------------------------------------------------------------------

def test_disc_kernel_at_origin(disc_model):
    # oracle: orthonormal series sums to 1/pi at the center
    assert disc_model.eval(0, 0).real == pytest.approx(1 / np.pi, abs=1e-3)


def test_disc_kernel_interior_value(disc_model):
    # oracle: series sum at s = 0.06 equals 1/(pi (1 - 0.06)^2) up to a tail
    # below 1e-10
    expected = 1 / (np.pi * (1 - 0.3 * 0.2) ** 2)
    assert expected == pytest.approx(0.3602, abs=1e-4)
    assert disc_model.eval(0.3, 0.2).real == pytest.approx(expected, abs=1e-3)


def test_cross_component_pairs_evaluate_to_exact_zero(two_disc_model):
    assert two_disc_model.eval(-2.1, 2.2) == 0.0
    assert two_disc_model.eval(2.2, -2.1) == 0.0
    assert two_disc_model.eval(-2.1, -1.8) != 0.0


def test_eval_outside_domain_raises(disc_model):
    with pytest.raises(kn.OutsideDomainError):
        disc_model.eval(1.5, 0)
    with pytest.raises(kn.OutsideDomainError):
        disc_model.eval(0, 1.5 + 1j)


def test_eval_kernel_batch_shape(disc_model):
    zs = np.array([[0.1, 0.2], [0.3j, -0.4]])
    out = kn.eval_kernel(disc_model, zs, 0.1)
    assert out.shape == (2, 2)


# ---------------------------------------------------------------------------
# kernel algebra on random probes
# ---------------------------------------------------------------------------

def interior_points(domain, n, seed):
    rng = np.random.default_rng(seed)
    cells = domain.true_centers
    idx = rng.choice(cells.size, size=n, replace=True)
    return cells[idx]


@pytest.mark.parametrize("fixture_name", ["disc_model", "annulus_model"])
def test_hermitian_symmetry_exact(fixture_name, request):
    model = request.getfixturevalue(fixture_name)
    zs = interior_points(model.domain, 60, seed=5)
    ws = interior_points(model.domain, 60, seed=6)
    for z, w in zip(zs, ws):
        assert model.eval(z, w) == np.conj(model.eval(w, z))


def test_diagonal_positive(disc_model):
    zs = interior_points(disc_model.domain, 500, seed=7)
    assert (disc_model.diagonal(zs) > 0).all()


def test_cauchy_schwarz_bound(annulus_model):
    zs = interior_points(annulus_model.domain, 1000, seed=8)
    ws = interior_points(annulus_model.domain, 1000, seed=9)
    dz = annulus_model.diagonal(zs)
    dw = annulus_model.diagonal(ws)
    for z, w, a, b in zip(zs, ws, dz, dw):
        assert abs(annulus_model.eval(z, w)) ** 2 <= a * b * (1 + 1e-12)


def test_basis_growth_raises_diagonal():
    U = make_domain(rectangle((-0.5, -0.5), (0.5, 0.5)), h=0.01)
    small = kn.fit_kernel(U, bs.monomials(0, 6))
    large = kn.fit_kernel(U, bs.monomials(0, 10))
    zs = interior_points(U, 300, seed=10)
    d_small = small.diagonal(zs)
    d_large = large.diagonal(zs)
    assert (d_large >= d_small - 1e-9).all()


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def test_closed_form_disc_origin():
    K = kn.closed_form(disc(0, 1))
    assert K.eval(0, 0).real == pytest.approx(1 / np.pi, rel=1e-12)


def test_closed_form_disc_truncated_matches_series():
    K = kn.closed_form(disc(0, 1), truncation=9)
    s = 0.3 * np.conj(0.5 + 0.2j)
    oracle = sum((n + 1) * s ** n for n in range(10)) / np.pi
    assert K.eval(0.3, 0.5 + 0.2j) == pytest.approx(oracle, rel=1e-12)


def test_annulus_series_matches_naive_sum():
    K = kn.closed_form(annulus(0, 0.5, 1), truncation=24)
    z, w = 0.7 + 0.1j, -0.6 + 0.3j
    s = z * np.conj(w)

    def coeff(n):
        if n == -1:
            return 1 / (2 * np.pi * np.log(2))
        return (n + 1) / (np.pi * (1 - 0.5 ** (2 * n + 2)))

    oracle = sum(coeff(n) * s ** n for n in range(-24, 25))
    assert K.eval(z, w) == pytest.approx(oracle, rel=1e-10)


def test_annulus_scaling_law():
    lam = 0.0625
    big = kn.closed_form(annulus(0, 0.5, 1), truncation=64)
    tiny = kn.closed_form(annulus(0, 0.5 * lam, lam), truncation=64)
    z, w = 0.8, -0.7 + 0.1j
    assert tiny.eval(lam * z, lam * w) == pytest.approx(
        big.eval(z, w) / lam ** 2, rel=1e-9)


def test_annulus_tail_bound_is_a_bound():
    M = 16
    K = kn.closed_form(annulus(0, 0.5, 1), truncation=M)
    K_big = kn.closed_form(annulus(0, 0.5, 1), truncation=200)
    for s_abs in (0.3, 0.5, 0.8):
        z = np.sqrt(s_abs)
        actual_tail = abs(K.eval(z, z) - K_big.eval(z, z))
        assert actual_tail <= K.tail_bound(s_abs)


def test_annulus_auto_truncation_meets_tolerance():
    M = kn.annulus_auto_truncation(0.5, 1.0)
    K = kn.closed_form(annulus(0, 0.5, 1))
    assert K.truncation == M
    assert K.tail_bound((0.95) ** 2) < 1e-10
    assert K.tail_bound((1.05 * 0.5) ** 2) < 1e-10


def test_annulus_sign_change_location():
    # oracle: bisection on the truncated real series; the root stabilizes
    # against doubling the truncation
    K = kn.closed_form(annulus(0, 0.5, 1), truncation=128)
    K2 = kn.closed_form(annulus(0, 0.5, 1), truncation=256)
    roots = [r for r in K.diagonal_sign_changes() if -1 < r < -0.5]
    roots2 = [r for r in K2.diagonal_sign_changes() if -1 < r < -0.5]
    assert len(roots) == 1 and len(roots2) == 1
    assert roots[0] == pytest.approx(roots2[0], abs=1e-9)
    assert roots[0] == pytest.approx(-0.7071069855, abs=1e-6)


def test_annulus_rejects_tiny_truncation():
    with pytest.raises(kn.KernelError):
        kn.closed_form(annulus(0, 0.5, 1), truncation=4)


def test_product_kernel_zero_follows_annulus_factor():
    prod = kn.closed_form({"shape": "product",
                           "factors": [annulus(0, 0.5, 1), disc(0, 1)]},
                          truncation=96)
    s_star = -0.7071069855
    w1 = 0.8
    z1 = s_star / w1
    val = prod.eval((z1, 0.3), (w1, 0.3))
    assert abs(val) < 1e-6
    assert abs(prod.eval((0.7, 0.3), (w1, 0.3))) > 1e-3


def test_ball_kernel_center_value():
    K = kn.closed_form({"shape": "ball", "n": 2})
    assert K.eval((0, 0), (0, 0)).real == pytest.approx(2 / np.pi ** 2, rel=1e-12)


def test_polydisc_closed_form():
    K = kn.closed_form({"shape": "polydisc", "discs": [disc(0, 1), disc(0, 1)]})
    assert K.eval((0, 0), (0, 0)).real == pytest.approx(1 / np.pi ** 2, rel=1e-12)


# ---------------------------------------------------------------------------
# extremal characterization
# ---------------------------------------------------------------------------

def test_extremal_constant_basis_by_hand():
    # span {1} on the unit disc: maximize c subject to c >= pi c^2 gives 1/pi
    U = make_domain(disc(0, 1), h=0.01)
    model = kn.fit_kernel(U, bs.monomials(0, 0))
    value, coeffs = kn.extremal_value(model, 0)
    assert value == pytest.approx(1 / np.pi, abs=1e-3)
    assert coeffs.shape == (1,)


def test_extremal_equals_diagonal(disc_model, annulus_model):
    for model, pts in ((disc_model, [0, 0.3 + 0.2j, -0.5j]),
                       (annulus_model, [0.7, -0.6 + 0.3j])):
        for z in pts:
            value, _ = kn.extremal_value(model, z)
            diag = model.diagonal(np.array([z]))[0]
            assert value == pytest.approx(diag, rel=1e-8)


def test_extremal_disc_half(disc_model):
    value, _ = kn.extremal_value(disc_model, 0.5)
    assert value == pytest.approx(1 / (np.pi * 0.75 ** 2), abs=1e-2)


# ---------------------------------------------------------------------------
# reproducing residual
# ---------------------------------------------------------------------------

def test_reproducing_residual_matched_quadrature():
    U = make_domain(disc(0, 1), h=0.02)
    model = kn.fit_kernel(U, bs.monomials(0, 6))
    for i in range(model.n_terms):
        assert kn.reproducing_residual(model, i) <= 1e-6
    assert kn.reproducing_residual(model, 0) <= 1e-8


def test_reproducing_residual_mismatched_quadrature_decreases():
    residuals = []
    for h in (0.04, 0.02):
        U = make_domain(disc(0, 1), h=h)
        model = kn.fit_kernel(U, bs.monomials(0, 4))
        finer = make_domain(disc(0, 1), h=h / 2)
        residuals.append(kn.reproducing_residual(model, 2, quadrature=finer))
    assert residuals[0] > 1e-7       # mismatch is visible
    assert residuals[1] < residuals[0]


def test_reproducing_residual_bad_index(disc_model):
    with pytest.raises(kn.KernelError):
        kn.reproducing_residual(disc_model, 99)


# ---------------------------------------------------------------------------
# kernel_error
# ---------------------------------------------------------------------------

def test_kernel_error_model_vs_itself(disc_model):
    assert kn.kernel_error(disc_model, disc_model, margin=0.3) == 0.0


def test_disc_fit_matches_matched_truncation(disc_model):
    ref = kn.closed_form(disc(0, 1), truncation=8, h=disc_model.h)
    err = kn.kernel_error(disc_model, ref, margin=0.2)
    assert err <= 1e-2


def test_annulus_fit_close_to_matched_truncation(annulus_model):
    # honest ceiling at h = 0.005: the mask rasterization biases the radial
    # norms by O(h), which measures as 1.66e-2 here and halves with h
    ref = kn.closed_form(annulus(0, 0.5, 1), truncation=12, h=annulus_model.h)
    err = kn.kernel_error(annulus_model, ref, margin=0.1)
    assert err <= 2e-2


@pytest.mark.tolerance_gap
def test_annulus_fit_stated_tolerance(annulus_model):
    """Stated bound 1e-2 at h=0.005, M=N=12: measures 1.66e-2 (red by design).

    The gap is the O(h) rasterization bias of the annulus mask; the same
    comparison passes the stated bound at h = 0.0025 (7.3e-3).
    """
    ref = kn.closed_form(annulus(0, 0.5, 1), truncation=12, h=annulus_model.h)
    err = kn.kernel_error(annulus_model, ref, margin=0.1)
    assert err <= 1e-2, f"measured {err:.4e} at the pinned h=0.005"


def test_kernel_error_empty_compact_rejected(disc_model):
    with pytest.raises(kn.KernelError):
        kn.kernel_error(disc_model, disc_model, margin=5.0)


# ---------------------------------------------------------------------------
# dropped terms
# ---------------------------------------------------------------------------

def test_wide_scale_spread_keeps_all_terms():
    # diagonal normalization makes the solve scale-free: a 1e-38 spread in
    # raw norms is no reason to drop terms
    U = make_domain(disc(0, 0.05), h=0.002)
    model = kn.fit_kernel(U, bs.monomials(0, 14))
    assert model.n_terms == 15
    assert model.dropped == ()
    # oracle: scaled closed form K_rD(0, 0) = 1/(pi r^2); the 25-cell
    # diameter caps the quadrature accuracy at the percent level
    assert model.eval(0, 0).real == pytest.approx(1 / (np.pi * 0.05 ** 2),
                                                  rel=2e-2)


def test_underflowed_terms_dropped():
    # at radius 0.01 the degree-80 norm sits below the subnormal floor and
    # carries no signal; the fit prunes it and stays usable
    U = make_domain(disc(0, 0.01), h=0.0005)
    model = kn.fit_kernel(U, bs.monomials(0, 80))
    assert model.n_terms < 81
    assert model.eval(0, 0).real == pytest.approx(1 / (np.pi * 0.01 ** 2),
                                                  rel=2e-2)


# ---------------------------------------------------------------------------
# reinhardt models
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def ring_times_disc_model():
    profile = make_domain(reinhardt_profile(rectangle((0.5, 0), (1, 1))), h=0.01)
    return kn.fit_kernel(profile, bs.reinhardt_window(-8, 8, 8))


def test_reinhardt_fit_is_diagonal(ring_times_disc_model):
    model = ring_times_disc_model
    assert isinstance(model, kn.ReinhardtKernelModel)
    assert model.norms.shape == (len(model.basis),)


def test_polydisc_reinhardt_center_value():
    profile = make_domain(reinhardt_profile(rectangle((0, 0), (1, 1))), h=0.005)
    model = kn.fit_kernel(profile, bs.reinhardt_window(0, 6, 6))
    val = model.eval((0, 0), (0, 0))
    assert val.real == pytest.approx(1 / np.pi ** 2, rel=5e-3)


def test_reinhardt_matches_product_closed_form(ring_times_disc_model):
    prod = kn.closed_form({"shape": "product",
                           "factors": [annulus(0, 0.5, 1), disc(0, 1)]},
                          truncation=8)
    err = kn.kernel_error_c2(ring_times_disc_model, prod, margin=0.08)
    assert err <= 1e-2


def test_reinhardt_slice_matches_full_eval(ring_times_disc_model):
    model = ring_times_disc_model
    sl = model.slice_fixed_last(0.3)
    z1, w1 = -0.7 + 0.1j, 0.8
    assert sl.eval(z1, w1) == pytest.approx(
        model.eval((z1, 0.3), (w1, 0.3)), rel=1e-12)
    assert sl.domain.contains(0.7 + 0j)
    assert not sl.domain.contains(0.3 + 0j)


def test_product_slice_scales_first_factor():
    prod = kn.closed_form({"shape": "product",
                           "factors": [annulus(0, 0.5, 1), disc(0, 1)]},
                          truncation=32, h=0.02)
    sl = prod.slice_fixed_last(0.3)
    scale = 1 / (np.pi * (1 - 0.09) ** 2)
    assert sl.eval(0.7, 0.8) == pytest.approx(
        prod.factors[0].eval(0.7, 0.8) * scale, rel=1e-12)
    assert sl.domain is not None


# ---------------------------------------------------------------------------
# field dump
# ---------------------------------------------------------------------------

def test_kernel_field_dump(tmp_path, disc_model):
    path = tmp_path / "field.csv"
    kn.dump_kernel_field(disc_model, 0.2, path, stride=16)
    lines = path.read_text().splitlines()
    assert lines[0] == "re_z,im_z,re_K,im_K,abs_K"
    row = [float(t) for t in lines[1].split(",")]
    assert len(row) == 5
    assert row[4] == pytest.approx(np.hypot(row[2], row[3]), rel=1e-9)


def test_annulus_series_argument_outside_convergence():
    K = kn.closed_form(annulus(0, 0.5, 1), truncation=16)
    with pytest.raises(kn.KernelError, match="annulus of convergence"):
        K.eval(0.3, 0.6)     # |s| = 0.18 below rho^2
    with pytest.raises(kn.KernelError, match="annulus of convergence"):
        K.eval(1.2, 0.9)     # |s| = 1.08 above R^2


def test_kernel_error_small_compact_set_still_probes():
    # a compact set that the stride-16 lattice misses entirely: the stride
    # falls back instead of silently comparing zero pairs
    U = make_domain(disc(0.55 + 0.55j, 0.12), h=0.01)
    model = kn.fit_kernel(U, bs.monomials(0.55 + 0.55j, 4))
    ref = kn.closed_form(disc(0.55 + 0.55j, 0.12), truncation=4, h=0.01)
    err = kn.kernel_error(model, ref, margin=0.06)
    assert err > 0
