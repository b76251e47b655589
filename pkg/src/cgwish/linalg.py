"""Modified Cholesky factors, triangular inverses and the change-of-variable
Jacobians between Θ_G, P_G and Q_G.

Matrices are dense 0-based numpy arrays; vertex arguments are 1-based
labels as in :mod:`cgwish.graph`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .errors import (
    CliqueNotPositiveDefinite,
    DimensionCapExceeded,
    DimensionMismatch,
    EdgeNotPresent,
    InvalidParams,
    NotInPG,
    NotPositiveDefinite,
    ValidationError,
)

__all__ = [
    "CholFactor",
    "IncompleteMatrix",
    "modified_cholesky",
    "reconstruct",
    "tri_inverse",
    "tri_inverse_pathsum",
    "structural_zero_row",
    "dLinv_dL",
    "trace_hessian_entry",
    "jacobian_theta_to_sigma",
    "log_jacobian_theta_to_sigma",
    "jacobian_qg_to_pg",
    "log_jacobian_qg_to_pg",
    "qg_to_pg",
    "submatrices",
    "check_in_pg",
    "PD_RTOL",
    "PATHSUM_CAP",
]

PD_RTOL = 1e-12
PATHSUM_CAP = 12


@dataclass(frozen=True)
class CholFactor:
    """A point ``(L, D)`` of Θ_G; ``D`` is stored as a vector."""

    L: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        L = np.asarray(self.L, dtype=float)
        D = np.asarray(self.D, dtype=float).reshape(-1)
        if L.ndim != 2 or L.shape[0] != L.shape[1] or L.shape[0] != D.size:
            raise DimensionMismatch(f"L {L.shape} and D {D.shape} do not match")
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "D", D)

    @property
    def m(self):
        return self.D.size

    def validate(self, g=None, atol=0.0):
        """Raise if ``L`` is not unit lower triangular, ``D`` not positive, or
        ``L`` has a non-zero entry outside the edges of ``g``."""
        L = self.L
        if not np.all(np.diag(L) == 1.0):
            raise ValidationError("L must have unit diagonal")
        if np.any(np.triu(L, 1) != 0.0):
            raise ValidationError("L must be lower triangular")
        if not np.all(self.D > 0):
            raise ValidationError("D must be positive")
        if g is not None:
            if g.m != self.m:
                raise DimensionMismatch(f"graph has {g.m} vertices, factor has {self.m}")
            off = np.tril(~g.pattern(), -1)
            if np.any(np.abs(L[off]) > atol):
                raise ValidationError("L has non-zero entries outside the edge set")
        return self

    @classmethod
    def identity(cls, m):
        return cls(np.eye(m), np.ones(m))

    @classmethod
    def random(cls, g, rng, scale=1.0, d_range=(0.5, 2.0)):
        """Random factor with ``L`` supported on the edges of ``g``."""
        L = np.eye(g.m)
        for i, j in g.edges:
            L[i - 1, j - 1] = scale * rng.standard_normal()
        return cls(L, rng.uniform(*d_range, size=g.m))


def reconstruct(f):
    """``Σ = L D Lᵀ``."""
    S = (f.L * f.D) @ f.L.T
    return 0.5 * (S + S.T)


def modified_cholesky(sigma, g=None, rtol=PD_RTOL):
    """Factor ``Σ = L D Lᵀ`` with unit lower triangular ``L``.

    Parameters
    ----------
    sigma : (m, m) array
    g : Graph, optional
        If given, entries of ``L`` outside the edge set are checked to be
        negligible and then set to exact zero.  This only succeeds when the
        vertex order is in S_D.
    rtol : float
        A pivot ``D_ii <= rtol * max_i Σ_ii`` counts as a failure.

    Raises
    ------
    NotPositiveDefinite
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {sigma.shape}")
    m = sigma.shape[0]
    if m == 0:
        return CholFactor(np.zeros((0, 0)), np.zeros(0))
    tol = rtol * max(float(np.max(np.diag(sigma))), 0.0)
    try:
        C = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("matrix is not positive definite") from None
    c = np.diag(C)
    D = c * c
    if np.any(D <= tol):
        raise NotPositiveDefinite(f"pivot {D.min():.3e} below tolerance {tol:.3e}")
    L = C / c
    if g is not None:
        if g.m != m:
            raise DimensionMismatch(f"graph has {g.m} vertices, matrix is {m}x{m}")
        off = np.tril(~g.pattern(), -1)
        if np.any(np.abs(L[off]) > 1e-8 * max(1.0, float(np.abs(L).max()))):
            raise NotInPG("Cholesky factor is not supported on the edge set; "
                          "the matrix is not in P_G or the order is not in S_D")
        L[off] = 0.0
    np.fill_diagonal(L, 1.0)
    return CholFactor(L, D)


def check_in_pg(sigma, g, atol=0.0):
    """Raise :class:`NotInPG` unless ``Σ`` is symmetric, PD and zero off ``g``."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (g.m, g.m):
        raise DimensionMismatch(f"expected {g.m}x{g.m} matrix, got {sigma.shape}")
    if not np.allclose(sigma, sigma.T, rtol=0, atol=1e-9 * max(1.0, np.abs(sigma).max())):
        raise NotInPG("matrix is not symmetric")
    if np.any(np.abs(sigma[~g.pattern()]) > atol):
        raise NotInPG("matrix has non-zero entries outside the edge set")
    try:
        np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise NotInPG("matrix is not positive definite") from None
    return sigma


def tri_inverse(L):
    """Inverse of a unit lower triangular matrix by forward substitution."""
    L = np.asarray(L, dtype=float)
    return sla.solve_triangular(L, np.eye(L.shape[0]), lower=True, unit_diagonal=True)


def tri_inverse_pathsum(L, cap=PATHSUM_CAP):
    """Inverse of a unit lower triangular matrix as a sum over decreasing paths.

    ``N_ij`` is the sum over index paths ``i = τ_1 > τ_2 > ... > τ_d = j`` of
    ``(-1)^{d-1} Π_k L_{τ_k τ_{k+1}}``.  Exponential in ``m``; a test oracle.

    Raises
    ------
    DimensionCapExceeded
        If ``m > cap``.
    """
    L = np.asarray(L, dtype=float)
    m = L.shape[0]
    if m > cap:
        raise DimensionCapExceeded(f"path-sum inverse limited to m <= {cap}, got {m}")
    N = np.eye(m)
    nz = [np.flatnonzero(L[k, :k]) for k in range(m)]

    def walk(i, k, prod, sign):
        for l in nz[k]:
            p = prod * L[k, l]
            N[i, l] += -sign * p
            walk(i, l, p, -sign)

    for i in range(m):
        walk(i, i, 1.0, 1.0)
    return N


def structural_zero_row(g, v):
    """Labels ``w`` with ``L^{-1}_{vw}`` identically zero as a function of ``L``.

    These are the ``w`` not reachable from ``v`` along a strictly decreasing
    path of edges, which includes every ``w > v``.
    """
    reach = {v}
    for k in range(v, 0, -1):
        if k in reach:
            reach.update(j for j in g.lower_neighbors(k))
    return {w for w in g.vertices if w not in reach}


def _check_edge(g, u, v):
    if u <= v:
        raise InvalidParams(f"need u > v, got u={u}, v={v}")
    if g is not None and not g.has_edge(u, v):
        raise EdgeNotPresent(f"({u}, {v}) is not an edge")


def dLinv_dL(L, u, v, g=None, Linv=None):
    """Derivative of ``L^{-1}`` with respect to the entry ``L_uv``.

    Entry ``(i, j)`` is ``-L^{-1}_{iu} L^{-1}_{vj}`` for ``i > j`` and zero
    elsewhere.  ``g`` enables the edge check.
    """
    _check_edge(g, u, v)
    N = tri_inverse(L) if Linv is None else Linv
    out = -np.outer(N[:, u - 1], N[v - 1, :])
    return np.tril(out, -1)


def trace_hessian_entry(f, U, v, u, u2, g=None):
    """Second derivative of ``tr((LDLᵀ)^{-1} U)`` in ``L_uv`` and ``L_{u2 v}``.

    Equal to ``2 (L^{-1} U L^{-T})_vv ((LDLᵀ)^{-1})_{u u2}``, which does not
    depend on column ``v`` of ``L``.
    """
    _check_edge(g, u, v)
    _check_edge(g, u2, v)
    N = tri_inverse(f.L)
    r = N[v - 1]
    q = r @ U @ r
    omega_row = (N[:, u - 1] / f.D) @ N[:, u2 - 1]
    return 2.0 * q * omega_row


def log_jacobian_theta_to_sigma(f, g):
    """``Σ_j n_j log D_jj``, the log of the forward Jacobian ``(L, D) -> Σ``."""
    n = np.array([len(g.upper_neighbors(j)) for j in g.vertices], dtype=float)
    return float(n @ np.log(f.D))


def jacobian_theta_to_sigma(f, g):
    """``Π_j D_jj^{n_j}`` with ``n_j`` the number of higher neighbours of ``j``."""
    return float(np.exp(log_jacobian_theta_to_sigma(f, g)))


@dataclass(frozen=True)
class IncompleteMatrix:
    """Symmetric matrix known only on the diagonal and the edges of ``graph``.

    Unknown entries are stored as NaN.
    """

    values: np.ndarray
    graph: object

    @classmethod
    def project(cls, x, g):
        """The projection κ: keep the diagonal and edge entries of ``x``."""
        x = np.array(x, dtype=float)
        x[~g.pattern()] = np.nan
        return cls(x, g)

    def block(self, vertices):
        idx = np.array(sorted(vertices), dtype=int) - 1
        return self.values[np.ix_(idx, idx)]


def _block_logdet(x, vertices):
    if not vertices:
        return 0.0
    idx = np.array(sorted(vertices), dtype=int) - 1
    blk = x.block(vertices) if isinstance(x, IncompleteMatrix) else x[np.ix_(idx, idx)]
    try:
        C = np.linalg.cholesky(blk)
    except np.linalg.LinAlgError:
        raise CliqueNotPositiveDefinite(
            f"submatrix on {sorted(vertices)} is not positive definite") from None
    return 2.0 * float(np.log(np.diag(C)).sum())


def log_jacobian_qg_to_pg(x, dec):
    """``-Σ_C (|C|+1) log|x_C| + Σ_S ν(S)(|S|+1) log|x_S|``."""
    out = 0.0
    for c in dec.cliques:
        out -= (len(c) + 1) * _block_logdet(x, c)
    for s, nu in dec.multiplicities.items():
        out += nu * (len(s) + 1) * _block_logdet(x, s)
    return out


def jacobian_qg_to_pg(x, dec):
    return float(np.exp(log_jacobian_qg_to_pg(x, dec)))


def qg_to_pg(x, dec):
    """Map ``x ∈ Q_G`` to ``Σ = x̂^{-1} ∈ P_G``.

    ``x̂`` is the positive definite completion of ``x`` whose inverse vanishes
    off the edges; its inverse is assembled clique by clique.
    """
    vals = x.values if isinstance(x, IncompleteMatrix) else np.asarray(x, dtype=float)
    m = vals.shape[0]
    out = np.zeros((m, m))

    def add(vertices, sign):
        if not vertices:
            return
        idx = np.array(sorted(vertices), dtype=int) - 1
        blk = vals[np.ix_(idx, idx)]
        try:
            inv = sla.cho_solve(sla.cho_factor(blk, lower=True), np.eye(len(idx)))
        except np.linalg.LinAlgError:
            raise CliqueNotPositiveDefinite(
                f"submatrix on {sorted(vertices)} is not positive definite") from None
        out[np.ix_(idx, idx)] += sign * inv

    for c in dec.cliques:
        add(c, 1.0)
    for s, nu in dec.multiplicities.items():
        add(s, -float(nu))
    return 0.5 * (out + out.T)


def submatrices(U, g, i):
    """Blocks ``(U^{<i}, U^{<=i}, U^<_{.i})`` indexed by ``N^<(i)``.

    ``U^{<=i}`` lists ``N^<(i)`` first and ``i`` last.  The blocks are taken
    from the full matrix, so entries between non-adjacent lower neighbours
    are included.
    """
    U = np.asarray(U, dtype=float)
    lo = np.array(g.lower_neighbors(i), dtype=int) - 1
    full = np.concatenate([lo, [i - 1]])
    return U[np.ix_(lo, lo)], U[np.ix_(full, full)], U[lo, i - 1]
