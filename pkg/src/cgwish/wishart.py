"""The covariance-Wishart family π_{U,α} on Θ_G and its images on P_G and Q_G."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InsufficientData, InvalidParams, ValidationError
from .linalg import (
    log_jacobian_qg_to_pg,
    modified_cholesky,
    qg_to_pg,
    tri_inverse,
)

__all__ = [
    "PriorSpec",
    "DataSummary",
    "IntegrabilityReport",
    "log_unnorm_density_theta",
    "log_unnorm_density_pg",
    "log_unnorm_density_qg",
    "log_likelihood",
    "is_integrable",
    "integrability_report",
    "posterior_update",
    "sample_covariance",
    "alpha_from_offset",
    "alpha_from_delta",
]


@dataclass(frozen=True)
class PriorSpec:
    """Location matrix ``U`` and shape vector ``alpha``.

    ``U = 0`` is accepted as a degenerate (improper) location; anything else
    must be symmetric positive semidefinite.
    """

    U: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        U = np.asarray(self.U, dtype=float)
        a = np.asarray(self.alpha, dtype=float).reshape(-1)
        if U.ndim != 2 or U.shape != (a.size, a.size):
            raise DimensionMismatch(f"U {U.shape} does not match alpha of length {a.size}")
        if not np.all(np.isfinite(a)) or not np.all(np.isfinite(U)):
            raise InvalidParams("U and alpha must be finite")
        scale = max(1.0, float(np.abs(U).max()) if U.size else 1.0)
        if not np.allclose(U, U.T, rtol=0, atol=1e-9 * scale):
            raise InvalidParams("U must be symmetric")
        U = 0.5 * (U + U.T)
        if U.size and np.linalg.eigvalsh(U).min() < -1e-10 * scale:
            raise InvalidParams("U must be positive semidefinite")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "alpha", a)

    @property
    def m(self):
        return self.alpha.size

    def is_proper_location(self):
        """True if ``U`` is positive definite."""
        try:
            np.linalg.cholesky(self.U)
        except np.linalg.LinAlgError:
            return False
        return True

    def permuted(self, idx):
        """Prior in a relabelled frame; ``idx[new] = old`` (0-based)."""
        idx = np.asarray(idx, dtype=int)
        return PriorSpec(self.U[np.ix_(idx, idx)], self.alpha[idx])


@dataclass(frozen=True)
class DataSummary:
    """Sample size and second-moment matrix.

    ``S`` is ``(1/n) Σ y yᵀ`` when ``centered`` is false, and the centred
    covariance with divisor ``n`` otherwise.
    """

    n: int
    S: np.ndarray
    centered: bool = False

    def __post_init__(self):
        S = np.asarray(self.S, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise DimensionMismatch(f"S must be square, got {S.shape}")
        if int(self.n) < 1:
            raise InsufficientData(f"need n >= 1, got {self.n}")
        if self.centered and int(self.n) < 2:
            raise InsufficientData("centred updating needs n >= 2")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "S", 0.5 * (S + S.T))

    @property
    def m(self):
        return self.S.shape[0]

    def permuted(self, idx):
        idx = np.asarray(idx, dtype=int)
        return DataSummary(self.n, self.S[np.ix_(idx, idx)], self.centered)


def _lower_sizes(g):
    return np.array([len(g.lower_neighbors(i)) for i in g.vertices], dtype=float)


def alpha_from_offset(g, c):
    """``α_i = c + |N^<(i)|``."""
    return c + _lower_sizes(g)


def alpha_from_delta(g, delta):
    """``α_i = δ + 2m - 2 n_i`` with ``n_i`` the number of higher neighbours."""
    n_up = np.array([len(g.upper_neighbors(i)) for i in g.vertices], dtype=float)
    return delta + 2.0 * g.m - 2.0 * n_up


def _check_dims(m, *others):
    for k in others:
        if k != m:
            raise DimensionMismatch(f"dimension mismatch: {m} vs {k}")


def log_unnorm_density_theta(f, p):
    """``-1/2 [tr((LDLᵀ)^{-1} U) + Σ α_i log D_ii]``."""
    _check_dims(p.m, f.m)
    N = tri_inverse(f.L)
    # tr((LDLᵀ)^{-1} U) = Σ_i (N U Nᵀ)_ii / D_ii
    q = np.einsum("ij,jk,ik->i", N, p.U, N)
    return -0.5 * (float(np.sum(q / f.D)) + float(p.alpha @ np.log(f.D)))


def log_likelihood(f, d):
    """Gaussian log-likelihood of the data summary, up to ``-nm/2 log 2π``.

    With centred data the mean has been profiled out and ``n - 1`` replaces
    ``n`` in the determinant term.
    """
    _check_dims(d.m, f.m)
    N = tri_inverse(f.L)
    q = np.einsum("ij,jk,ik->i", N, d.S, N)
    dof = d.n - 1 if d.centered else d.n
    return -0.5 * (d.n * float(np.sum(q / f.D)) + dof * float(np.sum(np.log(f.D))))


def log_unnorm_density_pg(sigma, p, g):
    """``-1/2 [tr(Σ^{-1} U) + Σ (2 n_i + α_i) log D_ii(Σ)]``.

    Raises
    ------
    NotInPG
        If the Cholesky factor of ``Σ`` is not supported on the edges.
    """
    sigma = np.asarray(sigma, dtype=float)
    _check_dims(p.m, sigma.shape[0], g.m)
    f = modified_cholesky(sigma, g)
    n_up = np.array([len(g.upper_neighbors(i)) for i in g.vertices], dtype=float)
    N = tri_inverse(f.L)
    q = np.einsum("ij,jk,ik->i", N, p.U, N)
    return -0.5 * (float(np.sum(q / f.D)) + float((2.0 * n_up + p.alpha) @ np.log(f.D)))


def log_unnorm_density_qg(x, p, dec, g):
    """Induced log-density on Q_G.

    The P_G density at ``Σ = x̂^{-1}`` plus the log Jacobian of ``x -> Σ``.
    """
    sigma = qg_to_pg(x, dec)
    return log_unnorm_density_pg(sigma, p, g) + log_jacobian_qg_to_pg(x, dec)


@dataclass(frozen=True)
class IntegrabilityReport:
    integrable: bool
    necessary_and_sufficient: bool
    margins: np.ndarray

    @property
    def label(self):
        if self.necessary_and_sufficient:
            return "necessary and sufficient (homogeneous graph)"
        return "sufficient condition only"


def integrability_report(p, g):
    """``α_i - |N^<(i)| - 2`` per vertex and whether the test is exact."""
    from .graph import is_homogeneous, verify_order_in_SH

    _check_dims(p.m, g.m)
    margins = p.alpha - _lower_sizes(g) - 2.0
    exact = is_homogeneous(g) and verify_order_in_SH(g, tuple(g.vertices))
    return IntegrabilityReport(bool(np.all(margins > 0)), exact, margins)


def is_integrable(p, g):
    """True iff ``α_i > |N^<(i)| + 2`` for every vertex.

    Sufficient in general; also necessary for a homogeneous graph in a Hasse
    ordering.
    """
    _check_dims(p.m, g.m)
    return bool(np.all(p.alpha > _lower_sizes(g) + 2.0))


def posterior_update(p, d):
    """Conjugate update ``Ũ = U + nS``.

    ``α̃ = α + n`` for known (zero) mean, ``α + n - 1`` for centred data.
    Warns if ``Ũ`` is not positive definite.
    """
    _check_dims(p.m, d.m)
    U = p.U + d.n * d.S
    alpha = p.alpha + (d.n - 1 if d.centered else d.n)
    post = PriorSpec(U, alpha)
    if not post.is_proper_location():
        warnings.warn("posterior location matrix is not positive definite", RuntimeWarning,
                      stacklevel=2)
    return post


def sample_covariance(Y, center=False):
    """Second-moment summary of the rows of ``Y`` (divisor ``n``)."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise ValidationError(f"data must be 2-dimensional, got shape {Y.shape}")
    n = Y.shape[0]
    if n < 1 or (center and n < 2):
        raise InsufficientData(f"{n} observation(s) are not enough"
                               + (" for centred updating" if center else ""))
    Z = Y - Y.mean(axis=0) if center else Y
    return DataSummary(n, Z.T @ Z / n, centered=center)

