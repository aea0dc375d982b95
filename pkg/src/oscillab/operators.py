"""Coefficient-space operator calculus: ladder words, spectral projectors, multipliers.

All operators act on SpectralField coefficient tensors.  Ladder letters (GRAD = d/dx_j,
X = multiplication by x_j) couple neighbouring degrees only:

    GRAD:  c'_n = sqrt((n_j+1)/2) c_{n+e_j} - sqrt(n_j/2) c_{n-e_j}
    X:     c'_n = sqrt((n_j+1)/2) c_{n+e_j} + sqrt(n_j/2) c_{n-e_j}

Words are applied on arrays padded by the word order, then truncated back to the basis,
reporting the l2 mass of the truncated tail (spillage).  Verified algebra (and the sign
conventions tested in the suite), with H = -Laplace + |x|^2:

    [H, GRAD_j] = -2 X_j,   [H, X_j] = -2 GRAD_j,   GRAD_j X_j - X_j GRAD_j = Id.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hermite import HermiteBasis, SpectralField

__all__ = [
    "PWord",
    "LPProfile",
    "IOperatorSpec",
    "apply_P",
    "apply_H",
    "commutator_H_P",
    "project_pi_mu",
    "default_profile",
    "littlewood_paley",
    "sobolev_norm",
    "i_multiplier",
    "apply_I",
    "apply_I_inverse",
    "bernstein_ratio",
]

MAX_WORD_ORDER = 8

_LETTERS = ("GRAD", "X")


@dataclass(frozen=True)
class PWord:
    """A word in the ladder letters, applied left to right; axes are 1-based."""

    letters: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        letters = tuple((str(l), int(ax)) for (l, ax) in self.letters)
        object.__setattr__(self, "letters", letters)
        for letter, axis in letters:
            if letter not in _LETTERS:
                raise ValueError(f"unknown letter {letter!r}; expected GRAD or X")
            if axis < 1:
                raise ValueError(f"axis must be >= 1, got {axis}")
        if len(letters) > MAX_WORD_ORDER:
            raise ValueError(f"word order {len(letters)} exceeds {MAX_WORD_ORDER}")

    @property
    def order(self) -> int:
        return len(self.letters)

    @classmethod
    def identity(cls) -> "PWord":
        return cls(())

    @classmethod
    def grad(cls, axis: int = 1) -> "PWord":
        return cls((("GRAD", axis),))

    @classmethod
    def x(cls, axis: int = 1) -> "PWord":
        return cls((("X", axis),))

    def then(self, other: "PWord") -> "PWord":
        return PWord(self.letters + other.letters)


def _apply_letter(work: np.ndarray, letter: str, axis: int) -> np.ndarray:
    """One ladder letter along `axis` (0-based) of a dense tensor."""
    w = np.moveaxis(work, axis, 0)
    out = np.zeros_like(w)
    L = w.shape[0]
    n = np.arange(L, dtype=float)
    shape = (-1,) + (1,) * (w.ndim - 1)
    up = np.sqrt((n[:-1] + 1.0) / 2.0).reshape(shape)
    down = np.sqrt(n[1:] / 2.0).reshape(shape)
    out[:-1] += up * w[1:]
    if letter == "GRAD":
        out[1:] -= down * w[:-1]
    else:
        out[1:] += down * w[:-1]
    return np.moveaxis(out, 0, axis)


def _pad(coeffs: np.ndarray, extra: int) -> np.ndarray:
    return np.pad(coeffs, [(0, extra)] * coeffs.ndim)


def _truncate_with_spill(work: np.ndarray, K: int) -> tuple[np.ndarray, float]:
    inner = work[(slice(0, K + 1),) * work.ndim]
    total = float(np.vdot(work, work).real)
    kept = float(np.vdot(inner, inner).real)
    return inner.copy(), math.sqrt(max(total - kept, 0.0))


def _apply_word_padded(work: np.ndarray, word: PWord, d: int) -> np.ndarray:
    for letter, axis in word.letters:
        if axis > d:
            raise ValueError(f"letter axis {axis} exceeds dimension {d}")
        work = _apply_letter(work, letter, axis - 1)
    return work


def apply_P(u: SpectralField, word: PWord) -> tuple[SpectralField, float]:
    """Apply a ladder word; returns (truncated field, l2 spillage beyond the basis)."""
    if word.order == 0:
        return u.copy(), 0.0
    work = _apply_word_padded(_pad(u.coeffs, word.order), word, u.basis.d)
    inner, spill = _truncate_with_spill(work, u.basis.K)
    return SpectralField(u.basis, inner), spill


def apply_H(u: SpectralField) -> SpectralField:
    """H u with H = -Laplace + |x|^2: diagonal, coefficient m scaled by 2|m| + d."""
    return SpectralField(u.basis, u.coeffs * u.basis.lambda_sq)


def _lambda_sq_padded(d: int, L: int) -> np.ndarray:
    grids = np.meshgrid(*[np.arange(L)] * d, indexing="ij")
    return (2 * sum(grids) + d).astype(np.int64)


def commutator_H_P(u: SpectralField, word: PWord) -> tuple[SpectralField, float]:
    """[H, P] u = H(Pu) - P(Hu), evaluated on padded arrays before truncation."""
    d, K = u.basis.d, u.basis.K
    work = _pad(u.coeffs, max(word.order, 1))
    lam = _lambda_sq_padded(d, work.shape[0])
    p_of_hu = _apply_word_padded(lam * work, word, d)
    h_of_pu = lam * _apply_word_padded(work, word, d)
    inner, spill = _truncate_with_spill(h_of_pu - p_of_hu, K)
    return SpectralField(u.basis, inner), spill


def project_pi_mu(u: SpectralField, mu_sq: int) -> SpectralField:
    """Orthogonal projection onto the eigenspace {2|m| + d = mu_sq} (integer-exact)."""
    mask = u.basis.lambda_sq == int(mu_sq)
    return SpectralField(u.basis, np.where(mask, u.coeffs, 0.0))


# ---------------------------------------------------------------------------
# Littlewood-Paley blocks
# ---------------------------------------------------------------------------

def _ramp(t: np.ndarray) -> np.ndarray:
    """The mollifier ramp e^{-1/t} for t > 0, identically 0 for t <= 0."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


@dataclass(frozen=True)
class LPProfile:
    """Smooth dyadic profile pair: eta = 1 on [0,1], 0 on [2,inf); psi(x) = eta(x) - eta(4x)."""

    eta: object
    psi: object


def default_profile() -> LPProfile:
    def eta(x):
        x = np.asarray(x, dtype=float)
        f_hi = _ramp(2.0 - x)
        f_lo = _ramp(x - 1.0)
        with np.errstate(invalid="ignore"):
            out = np.where(x <= 1.0, 1.0, np.where(x >= 2.0, 0.0, f_hi / (f_hi + f_lo)))
        return out

    def psi(x):
        return eta(x) - eta(4.0 * np.asarray(x, dtype=float))

    return LPProfile(eta=eta, psi=psi)


def _check_dyadic(N: int) -> int:
    N = int(N)
    if N < 1 or (N & (N - 1)) != 0:
        raise ValueError(f"N must be a dyadic integer >= 1, got {N}")
    return N


def littlewood_paley(u: SpectralField, N: int, profile: LPProfile | None = None) -> SpectralField:
    """Dyadic block Delta_N u = psi(H / N^2) u; supported where N^2/4 < 2|m|+d < 2 N^2."""
    N = _check_dyadic(N)
    if profile is None:
        profile = default_profile()
    mult = profile.psi(u.basis.lambda_sq / float(N * N))
    return SpectralField(u.basis, u.coeffs * mult)


def sobolev_norm(u: SpectralField, s: float) -> float:
    """Hermite-Sobolev norm: sqrt(sum (2|m|+d)^s |c_m|^2)."""
    lam = u.basis.lambda_sq.astype(float)
    return float(math.sqrt(np.sum(lam ** s * np.abs(u.coeffs) ** 2)))


# ---------------------------------------------------------------------------
# The I-operator (smooth spectral multiplier interpolating 1 -> (lambda/N)^{s-1})
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IOperatorSpec:
    """Multiplier m(lambda) = 1 for lambda <= N, (lambda/N)^{s-1} for lambda >= 2N,
    bridged by a monotone C^1 cubic Hermite arc in log-log coordinates."""

    N: int
    s: float
    transition: str = "cubic"

    def __post_init__(self):
        _check_dyadic(self.N)
        if not self.s > 1.0:
            raise ValueError(f"s must be > 1, got {self.s}")
        if self.transition != "cubic":
            raise ValueError(f"unknown transition {self.transition!r}")


def i_multiplier(spec: IOperatorSpec, lam: np.ndarray) -> np.ndarray:
    """Evaluate the I-operator symbol at lambda (array of sqrt eigenvalues)."""
    lam = np.asarray(lam, dtype=float)
    N = float(spec.N)
    t = np.log2(np.maximum(lam, 1e-300) / N)
    t = np.clip(t, 0.0, 1.0)
    # cubic Hermite p(t) = 2 t^2 - t^3: p(0)=0, p'(0)=0, p(1)=1, p'(1)=1 (log-log slopes)
    bridge = np.exp((spec.s - 1.0) * math.log(2.0) * (2.0 * t * t - t ** 3))
    power = (lam / N) ** (spec.s - 1.0)
    return np.where(lam <= N, 1.0, np.where(lam >= 2.0 * N, power, bridge))


def apply_I(u: SpectralField, spec: IOperatorSpec) -> SpectralField:
    lam = np.sqrt(u.basis.lambda_sq.astype(float))
    return SpectralField(u.basis, u.coeffs * i_multiplier(spec, lam))


def apply_I_inverse(u: SpectralField, spec: IOperatorSpec) -> SpectralField:
    lam = np.sqrt(u.basis.lambda_sq.astype(float))
    return SpectralField(u.basis, u.coeffs / i_multiplier(spec, lam))


# ---------------------------------------------------------------------------
# Bernstein-type operator bound on dyadic windows
# ---------------------------------------------------------------------------

def bernstein_ratio(basis: HermiteBasis, word: PWord, N: int, trials: int, seed: int) -> float:
    """max over trial fields u supported in the Delta_N window of ||P u|| / (N^ord ||u||).

    The first two trials are the extreme window modes (top and bottom eigenvalue),
    the rest are random complex Gaussian fields on the window.
    """
    N = _check_dyadic(N)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    lsq = basis.lambda_sq
    window = (4 * lsq > N * N) & (lsq < 2 * N * N)
    n_window = int(window.sum())
    if n_window == 0:
        raise ValueError(f"Delta_{N} window contains no modes at K = {basis.K}")
    flat_idx = np.flatnonzero(window.ravel())
    lam_flat = lsq.ravel()[flat_idx]
    ratios = []
    for trial in range(trials):
        coeffs = np.zeros(basis.shape, dtype=complex)
        if trial == 0:
            pick = flat_idx[int(np.argmax(lam_flat))]
            coeffs.ravel()[pick] = 1.0
        elif trial == 1 and n_window > 1:
            pick = flat_idx[int(np.argmin(lam_flat))]
            coeffs.ravel()[pick] = 1.0
        else:
            rng = np.random.default_rng(np.random.SeedSequence((seed, N, trial)))
            z = rng.standard_normal(n_window) + 1j * rng.standard_normal(n_window)
            coeffs.ravel()[flat_idx] = z / np.linalg.norm(z)
        u = SpectralField(basis, coeffs)
        if word.order == 0:
            ratios.append(1.0)
            continue
        image, spill = apply_P(u, word)
        full_norm = math.hypot(image.l2_norm(), spill)
        ratios.append(full_norm / (float(N) ** word.order * u.l2_norm()))
    return max(ratios)
