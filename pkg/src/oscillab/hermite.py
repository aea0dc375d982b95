"""Hermite-function spectral core for the harmonic oscillator H = -Laplace + |x|^2.

Conventions used throughout the package:

* h_k denotes the L^2-orthonormal Hermite functions,
  h_0(x) = pi^{-1/4} e^{-x^2/2},  h_{k+1} = x sqrt(2/(k+1)) h_k - sqrt(k/(k+1)) h_{k-1}.
  Tensor products h_m = prod_j h_{m_j} are eigenfunctions of H with eigenvalue 2|m| + d.
* A quadrature rule carries *envelope-compensated* weights: the stored weight at node y_i
  is W_i = 1 / sum_{k<Q} h_k(y_i)^2, which is O(1) at every node.  The rule contract is

      sum_i W_i f(y_i)  ~=  integral f(y) dy    for f = polynomial * e^{-w y^2},

  exact when the polynomial degree is <= 2Q - 1 (w = 1) resp. <= 2Q - 1 after the
  substitution y = sqrt(2) x (w = 2).  Compensated weights avoid the underflow of the
  classical Gauss-Hermite weights for large rules.
* A basis of max degree K ships a w = 2 rule with Q = 2K + 2 nodes: products of up to
  four degree-K basis functions (the cubic nonlinearity tested against a basis function,
  and the quadrilinear integrals of the estimates lab) are integrated exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigh_tridiagonal

__all__ = [
    "MultiIndex",
    "QuadratureRule",
    "HermiteBasis",
    "SpectralField",
    "hermite_values_1d",
    "gauss_hermite_rule",
    "eigenvalue",
    "synthesize",
    "analyze",
    "galerkin_project",
    "HARD_CAP_K_EVAL",
]

#: Resource guard: largest degree for which value tables may be materialized.
HARD_CAP_K_EVAL = 4400

_LOG2E = 1.0 / math.log(2.0)
_RENORM_EVERY = 8
_RENORM_THRESHOLD = 2.0 ** 500
_RENORM_SHIFT = 512  # power of two removed per renormalization


class MultiIndex(tuple):
    """Multi-index m = (m_1, ..., m_d) labelling a tensor Hermite mode."""

    def __new__(cls, indices):
        idx = tuple(int(i) for i in indices)
        if not idx:
            raise ValueError("multi-index must have at least one component")
        if any(i < 0 for i in idx):
            raise ValueError(f"multi-index components must be >= 0, got {idx}")
        return super().__new__(cls, idx)

    @property
    def degree(self) -> int:
        return sum(self)


def eigenvalue(m, d: int) -> int:
    """Eigenvalue of H on the mode h_m in dimension d: 2|m| + d."""
    m = MultiIndex(m)
    if len(m) != d:
        raise ValueError(f"multi-index {tuple(m)} does not match dimension {d}")
    return 2 * m.degree + d


def hermite_values_1d(K_eval: int, nodes) -> np.ndarray:
    """Table of orthonormal Hermite function values, rows k = 0..K_eval.

    Runs the three-term recurrence on the envelope-free polynomials with a per-node
    power-of-two counter and rebuilds each row with ldexp.  Plain evaluation dies for
    large rules: e^{-x^2/2} underflows in the classically forbidden region and the
    recurrence can then never climb back to the O(1) oscillatory values.  The counter
    scheme is exact (power-of-two scaling only) and keeps every representable value.
    """
    if K_eval < 0:
        raise ValueError("K_eval must be >= 0")
    x = np.asarray(nodes, dtype=float)
    if x.ndim != 1:
        raise ValueError("nodes must be a 1-D array")
    out = np.empty((K_eval + 1, x.size))
    # envelope e^{-x^2/2} pi^{-1/4} = 2^kappa * ebar with ebar in [1, 2)
    a = (-0.5 * x * x - 0.25 * math.log(math.pi)) * _LOG2E
    kappa = np.floor(a)
    ebar = np.exp2(a - kappa)
    kap_i = kappa.astype(np.int64)
    cnt = np.zeros(x.size, dtype=np.int64)
    p_prev = np.ones_like(x)
    p_cur = math.sqrt(2.0) * x
    out[0] = np.ldexp(ebar, kap_i)
    if K_eval >= 1:
        out[1] = np.ldexp(p_cur * ebar, kap_i)
    for k in range(1, K_eval):
        p_prev, p_cur = p_cur, x * math.sqrt(2.0 / (k + 1)) * p_cur \
            - math.sqrt(k / (k + 1.0)) * p_prev
        if k % _RENORM_EVERY == 0:
            big = np.abs(p_cur) > _RENORM_THRESHOLD
            if big.any():
                scale = np.where(big, 2.0 ** -_RENORM_SHIFT, 1.0)
                p_prev = p_prev * scale
                p_cur = p_cur * scale
                cnt += np.where(big, _RENORM_SHIFT, 0)
        out[k + 1] = np.ldexp(p_cur * ebar, kap_i + cnt)
    return out


def _edge_values(Q: int, nodes) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(h_{Q-1}, h_Q, sum_{k<Q} h_k^2) at `nodes`, streaming (O(Q) memory)."""
    x = np.asarray(nodes, dtype=float)
    a = (-0.5 * x * x - 0.25 * math.log(math.pi)) * _LOG2E
    kappa = np.floor(a)
    ebar = np.exp2(a - kappa)
    kap_i = kappa.astype(np.int64)
    cnt = np.zeros(x.size, dtype=np.int64)
    p_prev = np.ones_like(x)
    p_cur = math.sqrt(2.0) * x
    sumsq = np.ldexp(ebar, kap_i) ** 2
    if Q == 1:
        return np.ldexp(ebar, kap_i), np.ldexp(p_cur * ebar, kap_i), sumsq
    sumsq += np.ldexp(p_cur * ebar, kap_i) ** 2
    for k in range(1, Q):
        p_prev, p_cur = p_cur, x * math.sqrt(2.0 / (k + 1)) * p_cur \
            - math.sqrt(k / (k + 1.0)) * p_prev
        if k % _RENORM_EVERY == 0:
            big = np.abs(p_cur) > _RENORM_THRESHOLD
            if big.any():
                scale = np.where(big, 2.0 ** -_RENORM_SHIFT, 1.0)
                p_prev = p_prev * scale
                p_cur = p_cur * scale
                cnt += np.where(big, _RENORM_SHIFT, 0)
        row = np.ldexp(p_cur * ebar, kap_i + cnt)
        if k < Q - 1:
            sumsq += row * row
        elif k == Q - 1:
            # row is h_Q; the previous one is h_{Q-1}
            prev_row = np.ldexp(p_prev * ebar, kap_i + cnt)
            return prev_row, row, sumsq
    raise AssertionError("unreachable")


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Gauss rule with envelope-compensated weights.

    `weight_exponent` is w in the contract  sum_i weights_i f(nodes_i) ~ int f,
    f = polynomial * e^{-w y^2}.
    """

    nodes: np.ndarray
    weights: np.ndarray
    weight_exponent: int

    def __post_init__(self):
        if self.weight_exponent not in (1, 2):
            raise ValueError("weight_exponent must be 1 or 2")
        if self.nodes.shape != self.weights.shape or self.nodes.ndim != 1:
            raise ValueError("nodes and weights must be matching 1-D arrays")

    @property
    def size(self) -> int:
        return self.nodes.size

    def integrate(self, values: np.ndarray) -> complex | float:
        """Apply the rule along every axis of a tensor of node values."""
        out = values
        for _ in range(values.ndim):
            out = np.tensordot(out, self.weights, axes=(0, 0))
        return out


def gauss_hermite_rule(Q: int, w: int = 2) -> QuadratureRule:
    """Q-node Gauss rule for integrands polynomial * e^{-w y^2}, w in {1, 2}.

    Nodes: Golub-Welsch eigenvalues of the Jacobi matrix (off-diagonal sqrt(k/2)),
    polished with three Newton steps on h_Q using h_Q' = sqrt(2Q) h_{Q-1} - x h_Q,
    then symmetrized exactly.  Weights are compensated (see QuadratureRule).
    The w = 2 rule is the substitution y -> y / sqrt(2) of the w = 1 rule.
    """
    if Q < 1:
        raise ValueError("Q must be >= 1")
    if w not in (1, 2):
        raise ValueError("w must be 1 or 2")
    if Q == 1:
        nodes = np.zeros(1)
    else:
        k = np.arange(1, Q)
        nodes = eigh_tridiagonal(np.zeros(Q), np.sqrt(k / 2.0), eigvals_only=True)
        for _ in range(3):
            h_prev, h_top, _ = _edge_values(Q, nodes)
            deriv = math.sqrt(2.0 * Q) * h_prev - nodes * h_top
            nodes = nodes - h_top / deriv
        nodes = 0.5 * (nodes - nodes[::-1])
    _, _, sumsq = _edge_values(Q, nodes)
    weights = 1.0 / sumsq
    weights = 0.5 * (weights + weights[::-1])  # exact symmetry
    if w == 2:
        return QuadratureRule(nodes / math.sqrt(2.0), weights / math.sqrt(2.0), 2)
    return QuadratureRule(nodes, weights, 1)


@dataclass
class HermiteBasis:
    """Truncated tensor Hermite basis: all modes with max_j m_j <= K in dimension d.

    Value tables go up to K_eval = K + headroom so that ladder images of degree-K
    fields (one extra degree per applied letter) can still be synthesized on the grid.
    Tables and rules are built lazily; coefficient-space work never touches them.
    """

    d: int
    K: int
    headroom: int = 8

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.d}")
        if self.K < 0:
            raise ValueError("K must be >= 0")
        if self.headroom < 0:
            raise ValueError("headroom must be >= 0")
        if self.K_eval > HARD_CAP_K_EVAL:
            raise ValueError(
                f"K_eval = {self.K_eval} exceeds the hard cap {HARD_CAP_K_EVAL}"
            )

    @property
    def K_eval(self) -> int:
        return self.K + self.headroom

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.K + 1,) * self.d

    @cached_property
    def rule(self) -> QuadratureRule:
        return gauss_hermite_rule(2 * self.K + 2, w=2)

    @cached_property
    def values(self) -> np.ndarray:
        """(K_eval+1, Q) table of 1-D Hermite function values on the rule nodes."""
        return hermite_values_1d(self.K_eval, self.rule.nodes)

    @cached_property
    def companion_rule(self) -> QuadratureRule:
        """The w = 1 parent rule (nodes sqrt(2) x_i): exact for *bilinear* products."""
        return gauss_hermite_rule(2 * self.K + 2, w=1)

    @cached_property
    def companion_values(self) -> np.ndarray:
        return hermite_values_1d(self.K_eval, self.companion_rule.nodes)

    @cached_property
    def lambda_sq(self) -> np.ndarray:
        """Tensor of eigenvalues 2|m| + d over the coefficient shape (integer-exact)."""
        grids = np.meshgrid(*[np.arange(self.K + 1)] * self.d, indexing="ij")
        return (2 * sum(grids) + self.d).astype(np.int64)

    @cached_property
    def _dual_matrix(self) -> np.ndarray:
        """(K+1, Q) raw dual functionals: row m is W_i h_m(x_i).

        Contracting grid values against these rows is the exact Galerkin projection
        for integrands of the quartic class (three basis-size factors against h_m).
        """
        return self.values[: self.K + 1] * self.rule.weights

    @cached_property
    def _analysis_matrix(self) -> np.ndarray:
        """(K+1, Q) least-squares analysis: Gram-corrected dual (exact on spanned data)."""
        V = self.values[: self.K + 1]
        D = self._dual_matrix
        gram = D @ V.T
        chol = cho_factor(gram, lower=True)
        return cho_solve(chol, D)

    def mode_values(self, m) -> np.ndarray:
        """Grid values of the basis mode h_m (degree components may exceed K up to K_eval)."""
        m = MultiIndex(m)
        if len(m) != self.d:
            raise ValueError("multi-index dimension mismatch")
        if max(m) > self.K_eval:
            raise ValueError("mode degree exceeds K_eval")
        out = self.values[m[0]]
        for mj in m[1:]:
            out = np.multiply.outer(out, self.values[mj])
        return out


@dataclass(eq=False)
class SpectralField:
    """A field u = sum_m coeffs[m] h_m over a HermiteBasis (dense coefficient tensor)."""

    basis: HermiteBasis
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != self.basis.shape:
            raise ValueError(
                f"coefficient shape {self.coeffs.shape} does not match basis {self.basis.shape}"
            )

    @classmethod
    def zero(cls, basis: HermiteBasis) -> "SpectralField":
        return cls(basis, np.zeros(basis.shape, dtype=complex))

    @classmethod
    def from_mode(cls, basis: HermiteBasis, m, amplitude: complex = 1.0) -> "SpectralField":
        m = MultiIndex(m)
        if len(m) != basis.d:
            raise ValueError("multi-index dimension mismatch")
        if max(m) > basis.K:
            raise ValueError("mode degree exceeds basis K")
        u = cls.zero(basis)
        u.coeffs[m] = amplitude
        return u

    def copy(self) -> "SpectralField":
        return SpectralField(self.basis, self.coeffs.copy())

    def l2_norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def __add__(self, other: "SpectralField") -> "SpectralField":
        if other.basis is not self.basis:
            raise ValueError("fields live on different bases")
        return SpectralField(self.basis, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        if other.basis is not self.basis:
            raise ValueError("fields live on different bases")
        return SpectralField(self.basis, self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "SpectralField":
        return SpectralField(self.basis, self.coeffs * scalar)

    __rmul__ = __mul__


def _contract_axes(coeffs: np.ndarray, table: np.ndarray) -> np.ndarray:
    """Apply `table` (rows indexed like axis entries) along every axis in turn."""
    out = coeffs
    for _ in range(coeffs.ndim):
        # contract the leading axis and push the result to the back: after ndim
        # passes every axis has been transformed once and the order is restored.
        out = np.tensordot(table, out, axes=(1, 0))
        out = np.moveaxis(out, 0, -1)
    return out


def synthesize(u: SpectralField) -> np.ndarray:
    """Evaluate the field on the tensor quadrature grid of its basis. Shape (Q,)*d."""
    V = u.basis.values[: u.basis.K + 1]
    return _contract_axes(u.coeffs, V.T)


def analyze(values: np.ndarray, basis: HermiteBasis) -> SpectralField:
    """Coefficients of grid values: discrete least squares on the basis rule.

    For data in the span of the basis this is an exact inverse of synthesize
    (the Gram correction cancels the quadrature error of the bilinear products).
    """
    values = np.asarray(values)
    if values.shape != (basis.rule.size,) * basis.d:
        raise ValueError("value tensor does not match the basis grid")
    return SpectralField(basis, _contract_axes(values.astype(complex), basis._analysis_matrix))


def galerkin_project(values: np.ndarray, basis: HermiteBasis) -> SpectralField:
    """Raw dual projection of grid values: coefficients int f h_m dx by the rule.

    Exact for f in the quartic class (e.g. the cubic nonlinearity of degree-K fields);
    for bilinear-class data use `analyze` instead.
    """
    values = np.asarray(values)
    if values.shape != (basis.rule.size,) * basis.d:
        raise ValueError("value tensor does not match the basis grid")
    return SpectralField(basis, _contract_axes(values.astype(complex), basis._dual_matrix))
