"""Tests for the quadrilinear identity machinery and scaling measurements.

Closed-form oracles for the all-ground tuple in one dimension:
    L0 = int h0^4        = (2 pi)^{-1/2}
    L1 = 3 int (h0')^2 h0^2 = 3/4 (2 pi)^{-1/2}
    Lx = int x^2 h0^4    = 1/4 (2 pi)^{-1/2}
with resonance denominator 1 - 1 - 1 - 1 = -2, so the identity reads
L0 = -2 (L1 + Lx) / (-2) = L1 + Lx.  The bilinear ground-pair norm over
[0, pi] is sqrt(pi) (2 pi)^{-1/4}.
"""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from oscillab import (
    HermiteBasis,
    PWord,
    QuadTuple,
    ResonantTupleError,
    SolverConfig,
    SpectralField,
    almost_orthogonality_scan,
    bilinear_min_K,
    bilinear_strichartz_ratio,
    derivative_bilinear_ratio,
    energy_increment_scan,
    fit_power_law,
    identity_residual_scan_1d,
    norm_growth_experiment,
    quad_L0,
    quad_L1_plus_weight,
    random_shell_field,
    verify_identity_k1,
)

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _ground_tuple(basis):
    return QuadTuple.from_modes(basis, (0,), (0,), (0,), (0,))


def test_all_ground_closed_forms():
    basis = HermiteBasis(1, 8)
    qt = _ground_tuple(basis)
    assert quad_L0(qt) == pytest.approx(INV_SQRT_2PI, rel=1e-14)
    L1, Lx = quad_L1_plus_weight(qt)
    assert L1 == pytest.approx(0.75 * INV_SQRT_2PI, rel=1e-13)
    assert Lx == pytest.approx(0.25 * INV_SQRT_2PI, rel=1e-13)


def test_all_ground_identity_residual():
    basis = HermiteBasis(1, 8)
    assert verify_identity_k1(_ground_tuple(basis)) < 1e-14


def test_resonant_tuple_raises():
    # degrees (1,0,0,0): 3 - 1 - 1 - 1 = 0 is a resonant denominator
    basis = HermiteBasis(1, 8)
    qt = QuadTuple.from_modes(basis, (1,), (0,), (0,), (0,))
    with pytest.raises(ResonantTupleError):
        verify_identity_k1(qt)


def test_odd_parity_integral_is_exact_zero():
    # degrees (3,0,0,0): odd total parity, nonresonant (7 - 3 = 4)
    basis = HermiteBasis(1, 8)
    qt = QuadTuple.from_modes(basis, (3,), (0,), (0,), (0,))
    assert quad_L0(qt) == 0.0
    L1, Lx = quad_L1_plus_weight(qt)
    assert L1 == 0.0 and Lx == 0.0


def test_quad_tuple_rejects_mixed_shell_field():
    basis = HermiteBasis(1, 8)
    c = np.zeros(9, dtype=complex)
    c[0] = 1.0
    c[2] = 0.5  # different shell
    mixed = SpectralField(basis, c)
    ground = SpectralField.from_mode(basis, (0,))
    with pytest.raises(ValueError):
        QuadTuple(mixed, ground, ground, ground, 1, 1, 1, 1)


def test_quad_tuple_requires_shared_basis():
    b1 = HermiteBasis(1, 8)
    b2 = HermiteBasis(1, 8)
    g1 = SpectralField.from_mode(b1, (0,))
    g2 = SpectralField.from_mode(b2, (0,))
    with pytest.raises(ValueError):
        QuadTuple(g1, g1, g1, g2, 1, 1, 1, 1)


def test_identity_scan_small_exhaustive():
    scan = identity_residual_scan_1d(6)
    res = scan["residual"]
    resonant = scan["resonant"]
    assert res.shape == (7, 7, 7, 7)
    assert int(resonant.sum()) == 56
    assert np.all(np.isnan(res[resonant]))
    max_res = float(np.nanmax(res))
    assert max_res < 1e-12
    # odd-parity tuples are exactly zero on both sides
    assert scan["L0"][1, 0, 0, 0] == 0.0
    assert scan["L0"][3, 0, 0, 0] == 0.0


def test_identity_scan_matches_quad_tuple_route():
    basis = HermiteBasis(1, 6)
    scan = identity_residual_scan_1d(6)
    for modes in [(0, 0, 0, 0), (2, 2, 0, 0), (4, 2, 2, 4), (6, 1, 1, 2)]:
        qt = QuadTuple.from_modes(basis, *[(k,) for k in modes])
        assert quad_L0(qt) == pytest.approx(scan["L0"][modes], rel=1e-13, abs=1e-18)


def test_random_shell_field_lives_on_shell():
    basis = HermiteBasis(2, 10)
    rng = np.random.default_rng(0)
    mu_sq = 2 * 7 + 2
    e = random_shell_field(basis, mu_sq, rng)
    occupied = basis.lambda_sq[np.abs(e.coeffs) != 0]
    assert np.all(occupied == mu_sq)
    assert e.l2_norm() == pytest.approx(1.0, rel=1e-13)


def test_fit_power_law_recovers_exponent():
    xs = np.array([2.0, 4.0, 8.0, 16.0, 32.0])
    ys = 3.0 * xs**-0.7
    fit = fit_power_law(xs, ys)
    assert fit.slope == pytest.approx(-0.7, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-12)
    assert fit.dropped == 0


def test_fit_power_law_drops_exact_zeros():
    xs = [1.0, 2.0, 4.0, 8.0]
    ys = [1.0, 0.0, 0.0625, 0.015625]  # zero from an exact-parity cancellation
    fit = fit_power_law(xs, ys)
    assert fit.dropped == 1
    assert fit.slope == pytest.approx(-2.0, abs=1e-12)


def test_almost_orthogonality_decay_is_superpolynomial():
    basis = HermiteBasis(1, 40)
    ground = SpectralField.from_mode(basis, (0,))
    lambda1_list = [math.sqrt(2 * k + 1) for k in range(41)]
    out = almost_orthogonality_scan(
        basis, lambda1_list, ground, ground, ground, trials=2, seed=1, C0=2.0
    )
    assert not out["empty"]
    assert np.all(out["lambda1"] >= 6.0)  # admissibility kept only separated shells
    assert out["fit"] is not None
    assert out["fit"].slope < -6.0


def test_almost_orthogonality_rejects_mixed_trio():
    basis = HermiteBasis(1, 12)
    c = np.zeros(13, dtype=complex)
    c[0] = c[2] = 1.0
    mixed = SpectralField(basis, c)
    ground = SpectralField.from_mode(basis, (0,))
    with pytest.raises(ValueError):
        almost_orthogonality_scan(basis, [5.0], mixed, ground, ground, 1, 0)


def test_bilinear_min_K_frozen_values():
    assert bilinear_min_K(1) == 8
    assert bilinear_min_K(64) == 1954
    assert bilinear_min_K(32) > bilinear_min_K(16) > bilinear_min_K(8)


def test_bilinear_ground_pair_closed_form():
    # N = M = 1 draws exactly the ground-state pair: |u v| = h0^2 for all t,
    # so the space-time norm over [0, pi] is sqrt(pi) (2 pi)^{-1/4}
    basis = HermiteBasis(1, 16)
    out = bilinear_strichartz_ratio(basis, 1, N=1, M=1, T=math.pi, trials=1, seed=0)
    want = math.sqrt(math.pi) * (2.0 * math.pi) ** -0.25
    assert out["raw_max"] == pytest.approx(want, rel=1e-12)
    assert out["ratio_max"] == pytest.approx(want, rel=1e-12)  # unit normalization


def test_empty_word_reduction_bit_identical():
    basis = HermiteBasis(1, bilinear_min_K(8))
    ident = PWord.identity()
    a = derivative_bilinear_ratio(basis, 2, ident, ident, 8, 2, math.pi, 4, 123)
    b = bilinear_strichartz_ratio(basis, 2, 8, 2, math.pi, 4, 123)
    assert np.array_equal(a["raws"], b["raws"])
    assert np.array_equal(a["ratios"], b["ratios"])
    assert a["normalization"] == b["normalization"]


def test_derivative_bilinear_validates_inputs():
    basis = HermiteBasis(1, 20)
    ident = PWord.identity()
    with pytest.raises(ValueError):
        derivative_bilinear_ratio(basis, 2, ident, ident, 2, 4, 1.0, 1, 0)  # N < M
    with pytest.raises(ValueError):
        derivative_bilinear_ratio(basis, 2, ident, ident, 64, 2, 1.0, 1, 0)  # K too small
    with pytest.raises(ValueError):
        derivative_bilinear_ratio(basis, 1, PWord.grad(2), ident, 4, 1, 1.0, 1, 0)
    basis2 = HermiteBasis(2, 8)
    with pytest.raises(ValueError):
        derivative_bilinear_ratio(basis2, 2, ident, ident, 1, 1, 1.0, 1, 0)


def test_gradient_word_raises_measured_norm():
    # a gradient on the high factor scales the raw norm up by roughly N
    basis = HermiteBasis(1, bilinear_min_K(8) + 1)
    out_id = bilinear_strichartz_ratio(basis, 2, 8, 2, math.pi, 4, 5)
    out_gr = derivative_bilinear_ratio(
        basis, 2, PWord.grad(1), PWord.identity(), 8, 2, math.pi, 4, 5
    )
    boost = out_gr["raw_max"] / out_id["raw_max"]
    assert 2.0 < boost < 32.0


def test_energy_increment_scan_smoke():
    basis = HermiteBasis(2, 12)
    rng = np.random.default_rng(2)
    c = rng.standard_normal(basis.shape) + 1j * rng.standard_normal(basis.shape)
    c *= np.exp(-basis.lambda_sq / 4.0)
    c *= 0.5 / np.linalg.norm(c)
    u0 = SpectralField(basis, c)
    cfg = SolverConfig(dt=1e-3, T=0.05, record_every=10)
    out = energy_increment_scan(u0, 1.5, [2, 4], cfg)
    assert set(out["increments"]) == {2, 4}
    assert all(v >= 0.0 for v in out["increments"].values())
    assert out["n_records"] >= 2
    assert "tainted" in out["diagnostics"]


def test_norm_growth_experiment_smoke():
    basis = HermiteBasis(1, 12)
    rng = np.random.default_rng(3)
    c = rng.standard_normal(basis.shape) + 1j * rng.standard_normal(basis.shape)
    c *= np.exp(-basis.lambda_sq / 4.0)
    c *= 0.6 / np.linalg.norm(c)
    u0 = SpectralField(basis, c)
    cfg = SolverConfig(dt=0.01, T=3.0, record_every=10)
    out = norm_growth_experiment(u0, 2.0, cfg)
    for branch in ("nonlinear", "linear"):
        rec = out[branch]
        rm = rec["running_max"]
        assert np.all(np.diff(rm) >= 0.0)
        assert rec["times"][0] == 0.0
    # the linear flow preserves every H^s norm exactly
    lin = out["linear"]["hs_norms"]
    assert_allclose(lin, lin[0], rtol=1e-12)
    assert abs(out["linear"]["fit"].slope) < 1e-10
