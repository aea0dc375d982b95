"""Quantitative experiments behind the multilinear eigenfunction estimates.

Contents:

* quadrilinear integrals over eigenfield tuples and the k = 1 integration-by-parts
  identity relating int e1 e2 e3 e4 to gradient-pair integrals;
* an almost-orthogonality sweep (decay of the quadrilinear form in the separated
  eigenvalue);
* bilinear space-time measurements ||u_N v_M|| / (M^{(d-1)/2} N^{-1/2}) over random
  wave-packet data localized in dyadic windows, with optional ladder words on the
  factors;
* modified-energy increment scans and long-time Sobolev growth runs.

Parity is handled exactly: tuples of odd total degree integrate to 0.0 bitwise,
because node tables mirror exactly under x -> -x and the quadrature sum is folded
over symmetric node pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .hermite import HermiteBasis, MultiIndex, SpectralField, hermite_values_1d
from .operators import IOperatorSpec, PWord, i_multiplier, sobolev_norm
from .solver import SolverConfig, energy, modified_energy, run_recorded

__all__ = [
    "QuadTuple",
    "ScalingFit",
    "ResonantTupleError",
    "fit_power_law",
    "quad_L0",
    "quad_L1_plus_weight",
    "verify_identity_k1",
    "identity_residual_scan_1d",
    "random_shell_field",
    "almost_orthogonality_scan",
    "bilinear_strichartz_ratio",
    "derivative_bilinear_ratio",
    "bilinear_min_K",
    "energy_increment_scan",
    "norm_growth_experiment",
]


class ResonantTupleError(ValueError):
    """Raised when the k = 1 identity is requested on a resonant tuple
    (mu1^2 - mu2^2 - mu3^2 - mu4^2 = 0: the identity denominator vanishes)."""


@dataclass
class ScalingFit:
    """Least-squares power-law fit log y = slope * log x + intercept."""

    xs: np.ndarray
    ys: np.ndarray
    slope: float
    intercept: float
    residual: float
    dropped: int = 0


def fit_power_law(xs, ys) -> ScalingFit:
    """Fit a power law, dropping exact zeros (counted in `dropped`) before logs."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    keep = ys != 0.0
    dropped = int((~keep).sum())
    xs_k, ys_k = xs[keep], np.abs(ys[keep])
    if xs_k.size < 2:
        raise ValueError("need at least two nonzero samples for a power-law fit")
    A = np.vstack([np.log(xs_k), np.ones(xs_k.size)]).T
    sol, *_ = np.linalg.lstsq(A, np.log(ys_k), rcond=None)
    slope, intercept = float(sol[0]), float(sol[1])
    resid = np.log(ys_k) - A @ sol
    return ScalingFit(xs_k, ys_k, slope, intercept, float(np.sqrt(np.mean(resid ** 2))), dropped)


# ---------------------------------------------------------------------------
# Quadrilinear integrals and the k = 1 identity
# ---------------------------------------------------------------------------

@dataclass
class QuadTuple:
    """Four real eigenfields e_i (each supported on a single eigenvalue shell)
    with their eigenvalues mu_i^2 = 2|m| + d."""

    e1: SpectralField
    e2: SpectralField
    e3: SpectralField
    e4: SpectralField
    mu_sq_1: int
    mu_sq_2: int
    mu_sq_3: int
    mu_sq_4: int

    def __post_init__(self):
        basis = self.e1.basis
        for e in (self.e2, self.e3, self.e4):
            if e.basis is not basis:
                raise ValueError("all fields of a tuple must share one basis")
        for e, mu in zip(self.fields, self.mu_sqs):
            if np.abs(e.coeffs.imag).max() != 0.0:
                raise ValueError("eigenfields must have real coefficients")
            off_shell = e.coeffs.real[basis.lambda_sq != mu]
            if off_shell.size and np.abs(off_shell).max() != 0.0:
                raise ValueError(f"field is not supported on the shell mu^2 = {mu}")

    @property
    def fields(self):
        return (self.e1, self.e2, self.e3, self.e4)

    @property
    def mu_sqs(self):
        return (self.mu_sq_1, self.mu_sq_2, self.mu_sq_3, self.mu_sq_4)

    @classmethod
    def from_modes(cls, basis: HermiteBasis, m1, m2, m3, m4) -> "QuadTuple":
        modes = [MultiIndex(m) for m in (m1, m2, m3, m4)]
        fields = [SpectralField.from_mode(basis, m) for m in modes]
        mus = [2 * m.degree + basis.d for m in modes]
        return cls(*fields, *mus)


def random_shell_field(basis: HermiteBasis, mu_sq: int, rng) -> SpectralField:
    """Random real unit vector in the eigenspace 2|m| + d = mu_sq."""
    mask = basis.lambda_sq == int(mu_sq)
    n = int(mask.sum())
    if n == 0:
        raise ValueError(f"no modes with 2|m|+d = {mu_sq} at K = {basis.K}")
    coeffs = np.zeros(basis.shape, dtype=complex)
    z = rng.standard_normal(n)
    coeffs[mask] = z / np.linalg.norm(z)
    return SpectralField(basis, coeffs)


def _synth_real(coeffs: np.ndarray, basis: HermiteBasis) -> np.ndarray:
    """Synthesize real coefficients (degree may exceed K up to K_eval) onto the grid."""
    out = coeffs
    for _ in range(coeffs.ndim):
        out = np.tensordot(basis.values[: out.shape[0]], out, axes=(0, 0))
        out = np.moveaxis(out, 0, -1)
    return out


def _grad_ext(coeffs: np.ndarray, axis: int) -> np.ndarray:
    """Gradient along `axis` with the array grown by one degree on that axis."""
    shape = list(coeffs.shape)
    shape[axis] += 1
    out = np.zeros(shape, dtype=coeffs.dtype)
    w = np.moveaxis(out, axis, 0)
    c = np.moveaxis(coeffs, axis, 0)
    L = c.shape[0]
    n = np.arange(L + 1, dtype=float)
    bshape = (-1,) + (1,) * (c.ndim - 1)
    w[: L - 1] += np.sqrt(n[1:L] / 2.0).reshape(bshape)[: L - 1] * c[1:]
    w[1:] -= np.sqrt(n[1:] / 2.0).reshape(bshape) * c[:L]
    return out


def _folded_rule_sum(integrand: np.ndarray, basis: HermiteBasis) -> float:
    """Quadrature sum folded over the exact node mirror symmetry.

    Values at mirrored node tuples are bitwise +/- for pure-parity integrands, so
    odd-parity integrals come out exactly 0.0 instead of accumulating roundoff.
    """
    W = basis.rule.weights
    G = integrand
    for _ in range(G.ndim):
        G = np.moveaxis(G, 0, -1) * W  # weight one axis per pass; d passes restore layout
    mirror = G[(slice(None, None, -1),) * G.ndim]
    half = G.shape[0] // 2
    return float(np.sum((G + mirror)[:half]))


def quad_L0(qt: QuadTuple) -> float:
    """L0 = int e1 e2 e3 e4 dx, exact on the basis rule (degree <= 4K < 2Q-1)."""
    basis = qt.e1.basis
    vals = [_synth_real(e.coeffs.real, basis) for e in qt.fields]
    return _folded_rule_sum(vals[0] * vals[1] * vals[2] * vals[3], basis)


def quad_L1_plus_weight(qt: QuadTuple) -> tuple[float, float]:
    """(L1, Lx) with

        L1 = int [grad e2 . grad e3 (e1 e4) + grad e2 . grad e4 (e1 e3)
                  + grad e3 . grad e4 (e1 e2)]
        Lx = int |x|^2 e1 e2 e3 e4.
    """
    basis = qt.e1.basis
    d = basis.d
    vals = [_synth_real(e.coeffs.real, basis) for e in qt.fields]
    grads = []
    for e in qt.fields:
        grads.append([
            _synth_real(_grad_ext(e.coeffs.real, ax), basis) for ax in range(d)
        ])
    L1 = 0.0
    for (a, b), (c_, d_) in (((1, 2), (0, 3)), ((1, 3), (0, 2)), ((2, 3), (0, 1))):
        dot = sum(grads[a][ax] * grads[b][ax] for ax in range(d))
        L1 += _folded_rule_sum(dot * vals[c_] * vals[d_], basis)
    nodes_sq = basis.rule.nodes ** 2
    xsq = nodes_sq
    for _ in range(d - 1):
        xsq = np.add.outer(xsq, nodes_sq)
    Lx = _folded_rule_sum(xsq * vals[0] * vals[1] * vals[2] * vals[3], basis)
    return L1, Lx


def verify_identity_k1(qt: QuadTuple, eps: float = 1e-30) -> float:
    """Relative residual of the k = 1 identity

        L0 = -2 (L1 + Lx) / (mu1^2 - mu2^2 - mu3^2 - mu4^2).

    Raises ResonantTupleError when the denominator vanishes (integer-exact test).
    """
    denom = qt.mu_sq_1 - qt.mu_sq_2 - qt.mu_sq_3 - qt.mu_sq_4
    if denom == 0:
        raise ResonantTupleError(
            f"resonant tuple: mu^2 = {qt.mu_sqs} (denominator vanishes)"
        )
    L0 = quad_L0(qt)
    L1, Lx = quad_L1_plus_weight(qt)
    rhs = -2.0 * (L1 + Lx) / denom
    return abs(L0 - rhs) / (abs(L0) + eps)


def identity_residual_scan_1d(K_max: int) -> dict:
    """Exhaustive k = 1 identity check over all 1-D tuples with degrees <= K_max.

    Fully vectorized: builds the quadrilinear tensors with einsum over the half
    grid and applies the exact parity factor (1 + (-1)^{a+b+c+d}), so odd tuples
    are exactly zero on both sides.  Returns per-tuple L0, rhs, residuals and the
    resonance mask (resonant tuples carry residual NaN and are excluded).
    """
    basis = HermiteBasis(1, K_max)
    Q = basis.rule.size
    W = basis.rule.weights
    V = basis.values[: K_max + 2]  # one extra degree for gradients
    DV = np.zeros_like(V[: K_max + 1])
    for k in range(K_max + 1):
        DV[k] = -math.sqrt((k + 1) / 2.0) * V[k + 1]
        if k >= 1:
            DV[k] += math.sqrt(k / 2.0) * V[k - 1]
    half = Q // 2
    Wh = W[:half]
    A = V[: K_max + 1, :half]
    D = DV[:, :half]
    X2 = basis.rule.nodes[:half] ** 2
    k_arange = np.arange(K_max + 1)
    parity = np.where((k_arange[:, None, None, None] + k_arange[None, :, None, None]
                       + k_arange[None, None, :, None] + k_arange[None, None, None, :]) % 2 == 0,
                      2.0, 0.0)
    L0 = np.einsum("ai,bi,ci,di,i->abcd", A, A, A, A, Wh, optimize=True) * parity
    Lx = np.einsum("ai,bi,ci,di,i->abcd", A, A, A, A, Wh * X2, optimize=True) * parity
    L1 = (np.einsum("ai,bi,ci,di,i->abcd", A, D, D, A, Wh, optimize=True)
          + np.einsum("ai,bi,ci,di,i->abcd", A, D, A, D, Wh, optimize=True)
          + np.einsum("ai,bi,ci,di,i->abcd", A, A, D, D, Wh, optimize=True)) * parity
    mu = 2 * k_arange + 1
    denom = (mu[:, None, None, None] - mu[None, :, None, None]
             - mu[None, None, :, None] - mu[None, None, None, :])
    resonant = denom == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        rhs = -2.0 * (L1 + Lx) / denom
    residual = np.abs(L0 - rhs) / (np.abs(L0) + 1e-30)
    residual[resonant] = np.nan
    return {
        "L0": L0,
        "rhs": rhs,
        "residual": residual,
        "resonant": resonant,
        "K_max": K_max,
    }


# ---------------------------------------------------------------------------
# Almost-orthogonality sweep
# ---------------------------------------------------------------------------

def almost_orthogonality_scan(
    basis: HermiteBasis,
    lambda1_list,
    e2: SpectralField,
    e3: SpectralField,
    e4: SpectralField,
    trials: int,
    seed: int,
    C0: float = 4.0,
) -> dict:
    """Sweep the separated eigenvalue lambda_1 and record max |L0| over trial
    eigenfields e1 in that shell.

    Only lambda_1 passing the separation hypothesis lambda_1 >= C0 (lambda_2 +
    lambda_3 + lambda_4) are kept.  Returns the kept lambdas, the per-shell maxima,
    and the power-law fit of |L0| against lambda_1 (None if < 2 usable points).
    """
    lam_rest = 0.0
    mus_rest = []
    for e in (e2, e3, e4):
        lsq = e.basis.lambda_sq[np.abs(e.coeffs) != 0]
        if lsq.size == 0:
            raise ValueError("e2, e3, e4 must be nonzero eigenfields")
        if lsq.max() != lsq.min():
            raise ValueError("e2, e3, e4 must each live on a single shell")
        mus_rest.append(int(lsq[0]))
        lam_rest += math.sqrt(float(lsq[0]))
    kept, maxima = [], []
    for lam1 in lambda1_list:
        lam1 = float(lam1)
        mu_sq = int(round(lam1 * lam1))
        if abs(lam1 * lam1 - mu_sq) > 1e-9:
            raise ValueError(f"lambda_1 = {lam1} is not an eigenvalue sqrt")
        if lam1 < C0 * lam_rest:
            continue
        best = 0.0
        for trial in range(max(trials, 1)):
            rng = np.random.default_rng(np.random.SeedSequence((seed, mu_sq, trial)))
            e1 = random_shell_field(basis, mu_sq, rng)
            qt = QuadTuple(e1, e2, e3, e4, mu_sq, *mus_rest)
            best = max(best, abs(quad_L0(qt)))
        kept.append(lam1)
        maxima.append(best)
    fit = None
    if len([y for y in maxima if y != 0.0]) >= 2:
        fit = fit_power_law(kept, maxima)
    return {
        "lambda1": np.array(kept),
        "max_abs_L0": np.array(maxima),
        "fit": fit,
        "empty": len(kept) == 0,
        "C0": C0,
    }


# ---------------------------------------------------------------------------
# Bilinear space-time measurements on wave-packet data
# ---------------------------------------------------------------------------

def _coherent_axis(alpha: complex, K_cap: int) -> tuple[int, np.ndarray]:
    """Clipped coherent-state coefficient window on one axis: (start degree, coeffs).

    The clip B = min(5 sqrt(nbar) + 3, 0.45 nbar + 1) keeps the tensor product
    inside the dyadic window of its nominal frequency for every N >= 4 (the
    0.45 nbar branch caps the total degree sum; see the window containment note
    in derivative_bilinear_ratio).
    """
    nbar = abs(alpha) ** 2
    B = min(5.0 * math.sqrt(nbar) + 3.0, 0.45 * nbar + 1.0)
    lo = max(0, int(math.ceil(nbar - B)))
    hi = min(K_cap, int(math.floor(nbar + B)))
    if hi < lo:
        lo, hi = 0, 0
    m = np.arange(lo, hi + 1)
    if nbar <= 1e-12:
        c = np.zeros(m.size, dtype=complex)
        c[0] = 1.0
        return lo, c
    logmag = -0.5 * nbar + m * math.log(abs(alpha)) - 0.5 * gammaln(m + 1.0)
    logmag -= logmag.max()
    c = np.exp(logmag) * np.exp(1j * m * np.angle(alpha))
    return lo, c / np.linalg.norm(c)


def _split_fractions(rng, d: int) -> np.ndarray:
    th = rng.uniform(0.15, 0.85, size=d)
    return th / th.sum()


def _draw_packet_pair(rng, d: int, N: int, M: int, T: float, K_cap: int):
    """Random aimed wave-packet pair (u at frequency N, v at frequency M).

    v is a random packet in the Delta_M window; u is a packet whose classical
    orbit crosses v's position at a random hit time in (0.1 T, 0.9 T) — the
    extremal configuration family of the bilinear estimate.  Coherent centers
    alpha evolve as alpha e^{-2it}; per-axis position is sqrt(2) Re alpha.
    """
    th_v = _split_fractions(rng, d)
    v_axes, v_alpha = [], []
    for th in th_v:
        r2 = max(th * M * M - 1.0, 0.0)
        a = math.sqrt(r2 / 2.0) * np.exp(1j * rng.uniform(0.0, 2.0 * math.pi))
        v_alpha.append(a)
        v_axes.append(_coherent_axis(a, K_cap))
    t_hit = rng.uniform(0.1 * T, 0.9 * T)
    th_u = _split_fractions(rng, d)
    u_axes = []
    for j, th in enumerate(th_u):
        p = math.sqrt(2.0) * (v_alpha[j] * np.exp(-2j * t_hit)).real
        r2 = max(th * N * N - 1.0 - p * p, 0.0)
        xi = rng.choice(np.array([-1.0, 1.0])) * math.sqrt(r2)
        a0 = ((p + 1j * xi) / math.sqrt(2.0)) * np.exp(2j * t_hit)
        u_axes.append(_coherent_axis(a0, K_cap))
    return u_axes, v_axes


def _axis_word_letters(word: PWord, axis: int):
    return [letter for (letter, ax) in word.letters if ax - 1 == axis]


def _ladder_window(m0: int, c: np.ndarray, letter: str) -> tuple[int, np.ndarray]:
    """Apply one ladder letter to a windowed 1-D coefficient vector."""
    lo = max(m0 - 1, 0)
    hi = m0 + c.size  # top degree grows by one
    out = np.zeros(hi - lo + 1, dtype=complex)
    m_new = np.arange(lo, hi + 1)
    idx_up = m_new + 1 - m0
    ok = (idx_up >= 0) & (idx_up < c.size)
    out[ok] += np.sqrt((m_new[ok] + 1) / 2.0) * c[idx_up[ok]]
    idx_dn = m_new - 1 - m0
    ok = (idx_dn >= 0) & (idx_dn < c.size)
    down = np.sqrt(m_new[ok] / 2.0) * c[idx_dn[ok]]
    if letter == "GRAD":
        out[ok] -= down
    else:
        out[ok] += down
    return lo, out


def _time_rule(T: float, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre in time: panels shrink like 1/N to resolve the
    O(1/(2N)) crossing spike; 8 nodes per panel."""
    n_pan = max(8, 2 * N) * max(1, int(math.ceil(T / math.pi - 1e-12)))
    g, w = np.polynomial.legendre.leggauss(8)
    edges = np.linspace(0.0, T, n_pan + 1)
    h = np.diff(edges) / 2.0
    mid = (edges[:-1] + edges[1:]) / 2.0
    tg = (mid[:, None] + h[:, None] * g[None, :]).ravel()
    tw = (h[:, None] * w[None, :]).ravel()
    return tg, tw


def bilinear_min_K(N: int) -> int:
    """Smallest 1-D basis degree that holds every frequency-N packet draw."""
    nbar_hi = 0.85 * N * N / 2.0
    return int(math.ceil(nbar_hi + 5.0 * math.sqrt(nbar_hi) + 4.0))


def derivative_bilinear_ratio(
    basis: HermiteBasis,
    d: int,
    word_a: PWord,
    word_b: PWord,
    N: int,
    M: int,
    T: float,
    trials: int,
    seed: int,
) -> dict:
    """Space-time bilinear measurement || (P_a u_N) (P_b v_M) ||_{L^2([0,T] x R^d)}
    over random aimed wave-packet pairs, normalized by

        N^{|word_a|} M^{|word_b|} M^{(d-1)/2} N^{-1/2}.

    `basis` is a 1-D axis basis (packets tensorize, so all grid work is 1-D);
    it must satisfy basis.K >= bilinear_min_K(max(N, M)).  Returns per-trial raw
    norms and ratios plus their max.
    """
    if basis.d != 1:
        raise ValueError("pass a 1-D axis basis; tensor packets factorize per axis")
    if d not in (1, 2, 3):
        raise ValueError("d must be 1, 2 or 3")
    if N < M:
        raise ValueError("expect N >= M (u carries the high frequency)")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    max_ord = max(word_a.order, word_b.order)
    need = bilinear_min_K(max(N, M)) + max_ord
    if basis.K < need:
        raise ValueError(f"basis.K = {basis.K} too small; need >= {need} for N = {N}")
    for word in (word_a, word_b):
        for _, ax in word.letters:
            if ax > d:
                raise ValueError(f"word axis {ax} exceeds dimension {d}")
    K_draw = basis.K - max_ord  # ladder letters raise the top degree by one each
    V = basis.values[: basis.K + 1]
    W = basis.rule.weights
    tg, tw = _time_rule(T, N)
    raws = np.empty(trials)
    for trial in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence((seed, N, M, trial)))
        u_axes, v_axes = _draw_packet_pair(rng, d, N, M, T, K_draw)
        for axis in range(d):
            for letter in _axis_word_letters(word_a, axis):
                u_axes[axis] = _ladder_window(*u_axes[axis], letter)
            for letter in _axis_word_letters(word_b, axis):
                v_axes[axis] = _ladder_window(*v_axes[axis], letter)
        prof = np.ones_like(tg)
        for (m0u, cu), (m0v, cv) in zip(u_axes, v_axes):
            mv = np.arange(m0v, m0v + cv.size)
            gv = V[m0v:m0v + cv.size].T @ (cv[:, None] * np.exp(-1j * np.outer(2 * mv + 1, tg)))
            # the product vanishes outside v's support; certified cut at 1e-11 amplitude
            sup = np.abs(gv).max(axis=1) > 1e-11 * np.abs(gv).max()
            mu = np.arange(m0u, m0u + cu.size)
            gu = V[np.ix_(mu, np.flatnonzero(sup))].T @ (
                cu[:, None] * np.exp(-1j * np.outer(2 * mu + 1, tg))
            )
            prof = prof * (W[sup] @ (np.abs(gu * gv[sup]) ** 2))
        raws[trial] = math.sqrt(float(np.sum(tw * prof)))
    normalization = (float(N) ** word_a.order * float(M) ** word_b.order
                     * float(M) ** ((d - 1) / 2.0) * float(N) ** -0.5)
    ratios = raws / normalization
    return {
        "N": N,
        "M": M,
        "raws": raws,
        "ratios": ratios,
        "ratio_max": float(ratios.max()),
        "raw_max": float(raws.max()),
        "normalization": normalization,
    }


def bilinear_strichartz_ratio(
    basis: HermiteBasis, d: int, N: int, M: int, T: float, trials: int, seed: int
) -> dict:
    """Plain bilinear measurement: identical code path to derivative_bilinear_ratio
    with empty words (bit-identical results by construction)."""
    return derivative_bilinear_ratio(
        basis, d, PWord.identity(), PWord.identity(), N, M, T, trials, seed
    )


# ---------------------------------------------------------------------------
# Modified-energy increments and Sobolev growth
# ---------------------------------------------------------------------------

def energy_increment_scan(u0: SpectralField, s: float, N_list, cfg: SolverConfig) -> dict:
    """sup_t |E(I_N u(t)) - E(I_N u(0))| for each N, on one shared trajectory.

    All N-functionals are evaluated at the record times of a single evolution,
    so the comparison across N is free of trajectory-to-trajectory noise.
    """
    N_list = [int(N) for N in N_list]
    basis = u0.basis
    lam = np.sqrt(basis.lambda_sq.astype(float))
    mults = {N: i_multiplier(IOperatorSpec(N=N, s=s), lam) for N in N_list}
    base_e = {}
    sup_inc = {N: 0.0 for N in N_list}
    times = []

    def on_record(t, u_t):
        times.append(t)
        for N, mult in mults.items():
            e_val = energy(SpectralField(basis, u_t.coeffs * mult))
            if N not in base_e:
                base_e[N] = e_val
            else:
                sup_inc[N] = max(sup_inc[N], abs(e_val - base_e[N]))

    diagnostics = run_recorded(u0, cfg, on_record)
    fit = None
    ys = [sup_inc[N] for N in N_list]
    if len([y for y in ys if y != 0.0]) >= 2:
        fit = fit_power_law(N_list, ys)
    return {
        "N_list": N_list,
        "increments": sup_inc,
        "fit": fit,
        "diagnostics": diagnostics,
        "n_records": len(times),
    }


def norm_growth_experiment(u0: SpectralField, s: float, cfg: SolverConfig) -> dict:
    """Long-time H^s growth run: records ||u(t)||_{H^s}, its running max, and the
    power-law exponent of the running max over the second half of the run.
    A linear control (coupling = 0) of the same datum is fitted identically."""
    results = {}
    for tag, coupling in (("nonlinear", cfg.coupling), ("linear", 0.0)):
        cfg_run = SolverConfig(
            dt=cfg.dt, T=cfg.T, scheme=cfg.scheme, dealiasing=cfg.dealiasing,
            record_every=cfg.record_every, coupling=coupling, spill_tol=cfg.spill_tol,
        )
        times, norms = [], []

        def on_record(t, u_t):
            times.append(t)
            norms.append(sobolev_norm(u_t, s))

        diagnostics = run_recorded(u0, cfg_run, on_record)
        times_a = np.array(times)
        norms_a = np.array(norms)
        running = np.maximum.accumulate(norms_a)
        tail = times_a >= 0.5 * cfg.T
        if tail.sum() < 2:
            tail = times_a > 0.0
        if tail.sum() >= 2:
            fit = fit_power_law(times_a[tail], running[tail])
            exponent = fit.slope
        else:
            fit, exponent = None, float("nan")
        results[tag] = {
            "times": times_a,
            "hs_norms": norms_a,
            "running_max": running,
            "exponent": exponent,
            "fit": fit,
            "diagnostics": diagnostics,
        }
    return results
