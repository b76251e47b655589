"""Closed forms for homogeneous graphs.

Under an ordering in S_H the prior factorises over vertices into
independent pairs ``(D_ii, β_i)`` with ``β_i = (Σ^{<i})^{-1} Σ^<_{.i}``.
This gives an exact sampler, the normalising constant and ``E[Σ]``.

Every public function accepts any labelling of a homogeneous graph.  If the
given labelling is not in S_H the computation runs in the Hasse ordering
and results are mapped back to the caller's labels; the prior is then read
in that ordering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla
from scipy.special import gammaln

from .errors import InvalidParams, MomentDoesNotExist, NonIntegrable, NotHomogeneous
from .graph import hasse_order, is_homogeneous, permutation_index, verify_order_in_SH
from .linalg import check_in_pg

__all__ = [
    "HasseFrame",
    "LayerSets",
    "GammaCoords",
    "HyperMarkovReport",
    "hasse_frame",
    "layer_sets",
    "to_gamma",
    "from_gamma",
    "exact_sample",
    "log_normalizing_constant",
    "expected_sigma",
    "check_hyper_markov",
    "trace_decomposition",
]


@dataclass(frozen=True)
class HasseFrame:
    """Relabelling into an S_H ordering.

    ``idx[k]`` is the 0-based original index of frame vertex ``k + 1``;
    ``graph`` is the relabelled graph.
    """

    idx: np.ndarray
    graph: object

    @property
    def is_identity(self):
        return bool(np.all(self.idx == np.arange(self.idx.size)))

    def to_frame(self, A):
        return np.asarray(A)[..., self.idx[:, None], self.idx[None, :]]

    def from_frame(self, A):
        A = np.asarray(A)
        out = np.empty_like(A)
        out[..., self.idx[:, None], self.idx[None, :]] = A
        return out

    def vec_to_frame(self, a):
        return np.asarray(a)[self.idx]

    def vec_from_frame(self, a):
        a = np.asarray(a)
        out = np.empty_like(a)
        out[self.idx] = a
        return out

    def original(self, k):
        """Original label of frame vertex ``k`` (both 1-based)."""
        return int(self.idx[k - 1]) + 1


def hasse_frame(g):
    """The caller's labelling if it is in S_H, else the Hasse ordering.

    Raises
    ------
    NotHomogeneous
    """
    if not is_homogeneous(g):
        raise NotHomogeneous("graph is not homogeneous")
    ident = tuple(g.vertices)
    if verify_order_in_SH(g, ident):
        return HasseFrame(np.arange(g.m), g)
    order = hasse_order(g)
    return HasseFrame(permutation_index(order), g.relabel(order))


def _lower(gf, i):
    return np.array(gf.lower_neighbors(i), dtype=int) - 1


@dataclass(frozen=True)
class LayerSets:
    """Layers ``A_1, ..., A_k*`` as frozensets of the caller's labels."""

    layers: tuple

    def __len__(self):
        return len(self.layers)

    def __iter__(self):
        return iter(self.layers)


def _frame_layers(gf):
    done = set()
    layers = []
    while len(done) < gf.m:
        layer = {i for i in gf.vertices
                 if i not in done and set(gf.lower_neighbors(i)) <= done}
        layers.append(sorted(layer))
        done |= layer
    return layers


def layer_sets(g):
    """``A_1 = {i : N^<(i) empty}``, then ``A_k`` are the unplaced vertices
    whose lower neighbours all lie in earlier layers."""
    fr = hasse_frame(g)
    return LayerSets(tuple(frozenset(fr.original(i) for i in layer)
                           for layer in _frame_layers(fr.graph)))


@dataclass(frozen=True)
class GammaCoords:
    """``D`` and regression vectors ``beta`` in frame order.

    ``beta[k]`` is indexed by the lower neighbours of frame vertex ``k + 1``.
    """

    D: np.ndarray
    beta: tuple
    frame: HasseFrame


def to_gamma(sigma, g):
    """``D_ii = Σ_ii - Σ^<ᵀ β_i`` and ``β_i = (Σ^{<i})^{-1} Σ^<_{.i}``.

    Raises
    ------
    NotHomogeneous, NotInPG
    """
    fr = hasse_frame(g)
    gf = fr.graph
    S = fr.to_frame(np.asarray(sigma, dtype=float))
    S = check_in_pg(S, gf, atol=1e-12 * float(np.abs(S).max(initial=1.0)))
    D = np.empty(gf.m)
    betas = []
    for i in gf.vertices:
        lo = _lower(gf, i)
        if lo.size:
            b = sla.solve(S[np.ix_(lo, lo)], S[lo, i - 1], assume_a="pos")
            D[i - 1] = S[i - 1, i - 1] - S[lo, i - 1] @ b
        else:
            b = np.zeros(0)
            D[i - 1] = S[i - 1, i - 1]
        betas.append(b)
    return GammaCoords(D, tuple(betas), fr)


def _assemble(gf, D, betas):
    """Build ``Σ`` in increasing frame order; batched over a leading axis."""
    n = D.shape[0]
    S = np.zeros((n, gf.m, gf.m))
    for i in gf.vertices:
        i0 = i - 1
        lo = _lower(gf, i)
        if lo.size:
            blk = S[:, lo[:, None], lo[None, :]]
            col = np.einsum("nab,nb->na", blk, betas[i0])
            S[:, lo, i0] = col
            S[:, i0, lo] = col
            S[:, i0, i0] = D[:, i0] + np.einsum("na,na->n", betas[i0], col)
        else:
            S[:, i0, i0] = D[:, i0]
    return S


def from_gamma(gamma, g=None):
    """Inverse of :func:`to_gamma`: ``Σ^<_{.i} = Σ^{<i} β_i`` and
    ``Σ_ii = D_ii + β_iᵀ Σ^{<i} β_i``, vertex by vertex upward."""
    fr = gamma.frame if g is None else hasse_frame(g)
    betas = [np.asarray(b, dtype=float)[None, :] for b in gamma.beta]
    S = _assemble(fr.graph, np.asarray(gamma.D, dtype=float)[None, :], betas)[0]
    return fr.from_frame(S)


def _vertex_terms(U, gf, i):
    """``(lo, chol(U^<), β̂, c)`` for frame vertex ``i``."""
    lo = _lower(gf, i)
    if lo.size == 0:
        return lo, None, np.zeros(0), float(U[i - 1, i - 1])
    try:
        cf = sla.cho_factor(U[np.ix_(lo, lo)], lower=True)
    except np.linalg.LinAlgError:
        raise InvalidParams(f"U restricted to the lower neighbours of vertex {i} "
                            "is not positive definite") from None
    bhat = sla.cho_solve(cf, U[lo, i - 1])
    c = float(U[i - 1, i - 1] - U[lo, i - 1] @ bhat)
    return lo, cf, bhat, c


def _require_integrable(p, gf):
    k = np.array([len(gf.lower_neighbors(i)) for i in gf.vertices], dtype=float)
    if p.m != gf.m:
        raise InvalidParams(f"prior has dimension {p.m}, graph {gf.m}")
    bad = np.flatnonzero(p.alpha <= k + 2.0)
    if bad.size:
        raise NonIntegrable(f"alpha_i <= |N^<(i)| + 2 at frame vertices {list(bad + 1)}")
    return k


def exact_sample(p, g, rng, size=None):
    """Independent draws from π_{U,α} on P_G.

    Returns an ``(m, m)`` array, or ``(size, m, m)`` when ``size`` is given.
    """
    fr = hasse_frame(g)
    gf = fr.graph
    pf = p.permuted(fr.idx)
    k = _require_integrable(pf, gf)
    n = 1 if size is None else int(size)
    D = np.empty((n, gf.m))
    betas = []
    for i in gf.vertices:
        lo, cf, bhat, c = _vertex_terms(pf.U, gf, i)
        if c <= 0:
            raise InvalidParams(f"Schur complement at frame vertex {i} is not positive")
        shape = pf.alpha[i - 1] / 2.0 - k[i - 1] / 2.0 - 1.0
        d = (c / 2.0) / rng.gamma(shape, size=n)
        D[:, i - 1] = d
        if lo.size:
            z = rng.standard_normal((n, lo.size))
            # cov D (U^<)^{-1}: solve Cᵀ x = z with U^< = C Cᵀ
            x = sla.solve_triangular(cf[0], z.T, lower=True, trans="T").T
            betas.append(bhat + np.sqrt(d)[:, None] * x)
        else:
            betas.append(np.zeros((n, 0)))
    S = fr.from_frame(_assemble(gf, D, betas))
    return S[0] if size is None else S


def _logdet_pd(A):
    if A.size == 0:
        return 0.0
    return 2.0 * float(np.log(np.diag(np.linalg.cholesky(A))).sum())


def log_normalizing_constant(p, g):
    """``log z_G(U, α)`` for a homogeneous graph.

    Sum over vertices of ``log Γ(a_i) + (α_i/2 - 1) log 2 + (k_i/2) log π
    + (a_i - 1/2) log|U^{<i}| - a_i log|U^{<=i}|`` with ``k_i = |N^<(i)|``
    and ``a_i = α_i/2 - k_i/2 - 1``; an empty determinant is 1.
    """
    fr = hasse_frame(g)
    gf = fr.graph
    pf = p.permuted(fr.idx)
    k = _require_integrable(pf, gf)
    total = 0.0
    for i in gf.vertices:
        lo = _lower(gf, i)
        full = np.concatenate([lo, [i - 1]])
        a = pf.alpha[i - 1] / 2.0 - k[i - 1] / 2.0 - 1.0
        try:
            ld_lo = _logdet_pd(pf.U[np.ix_(lo, lo)])
            ld_full = _logdet_pd(pf.U[np.ix_(full, full)])
        except np.linalg.LinAlgError:
            raise InvalidParams("U must be positive definite on every U^{<=i} block") from None
        total += (gammaln(a) + (pf.alpha[i - 1] / 2.0 - 1.0) * np.log(2.0)
                  + 0.5 * k[i - 1] * np.log(np.pi)
                  + (a - 0.5) * ld_lo - a * ld_full)
    return float(total)


def expected_sigma(p, g):
    """``E[Σ]`` under π_{U,α}, computed layer by layer from the bottom of the
    Hasse diagram.

    Raises
    ------
    MomentDoesNotExist
        Unless ``α_i > |N^<(i)| + 4`` for every vertex.
    """
    fr = hasse_frame(g)
    gf = fr.graph
    pf = p.permuted(fr.idx)
    k = np.array([len(gf.lower_neighbors(i)) for i in gf.vertices], dtype=float)
    bad = np.flatnonzero(pf.alpha <= k + 4.0)
    if bad.size:
        verts = sorted(fr.original(int(b) + 1) for b in bad)
        raise MomentDoesNotExist(f"alpha_i <= |N^<(i)| + 4 at vertices {verts}")
    E = np.zeros((gf.m, gf.m))
    for layer in _frame_layers(gf):
        for i in layer:
            lo, cf, bhat, c = _vertex_terms(pf.U, gf, i)
            ed = c / (pf.alpha[i - 1] - k[i - 1] - 4.0)
            if lo.size:
                blk = E[np.ix_(lo, lo)]
                col = blk @ bhat
                E[lo, i - 1] = col
                E[i - 1, lo] = col
                Uinv = sla.cho_solve(cf, np.eye(lo.size))
                E[i - 1, i - 1] = ed + np.trace(blk @ (Uinv * ed + np.outer(bhat, bhat)))
            else:
                E[i - 1, i - 1] = ed
    return fr.from_frame(E)


def trace_decomposition(sigma, U, g):
    """Per-vertex terms of ``tr(Σ^{-1} U)``.

    Term ``i`` is ``[(β_i - β̂_i)ᵀ U^{<i} (β_i - β̂_i) + c_i] / D_ii`` with
    ``β̂_i = (U^{<i})^{-1} U^<_{.i}`` and ``c_i = U_ii - U^<ᵀ β̂_i``.  The
    result is indexed by the caller's labels.
    """
    gam = to_gamma(sigma, g)
    fr = gam.frame
    gf = fr.graph
    Uf = fr.to_frame(np.asarray(U, dtype=float))
    terms = np.empty(gf.m)
    for i in gf.vertices:
        lo, _, bhat, c = _vertex_terms(Uf, gf, i)
        diff = gam.beta[i - 1] - bhat
        quad = float(diff @ Uf[np.ix_(lo, lo)] @ diff) if lo.size else 0.0
        terms[i - 1] = (quad + c) / gam.D[i - 1]
    return fr.vec_from_frame(terms)


@dataclass(frozen=True)
class HyperMarkovReport:
    """Largest ``|corr(D_ii, Σ_ab)|`` over the leading block, per vertex.

    ``vertices`` are the caller's labels in frame order; ``max_abs_corr`` is
    NaN where the leading block is empty.
    """

    vertices: tuple
    max_abs_corr: np.ndarray
    threshold: float
    n_samples: int

    @property
    def flagged(self):
        return tuple(v for v, r in zip(self.vertices, self.max_abs_corr)
                     if np.isfinite(r) and r > self.threshold)

    @property
    def passed(self):
        return not self.flagged


def check_hyper_markov(samples, g, threshold=None):
    """Pearson correlations between ``D_ii(Σ)`` and every entry of ``Σ``
    on the vertices preceding ``i``; flags exceed ``4/sqrt(N)``."""
    fr = hasse_frame(g)
    S = fr.to_frame(np.asarray(samples, dtype=float))
    if S.ndim == 2:
        S = S[None]
    n, m = S.shape[0], S.shape[1]
    thr = 4.0 / np.sqrt(n) if threshold is None else float(threshold)
    C = np.linalg.cholesky(S)
    D = np.diagonal(C, axis1=1, axis2=2) ** 2
    out = np.full(m, np.nan)
    for i in range(1, m):
        a, b = np.triu_indices(i)
        X = S[:, a, b]
        keep = X.std(axis=0) > 0
        if not np.any(keep) or n < 3:
            continue
        X = X[:, keep]
        d = D[:, i] - D[:, i].mean()
        Xc = X - X.mean(axis=0)
        r = (Xc.T @ d) / (np.sqrt((Xc ** 2).sum(axis=0)) * np.sqrt(d @ d))
        out[i] = float(np.max(np.abs(r)))
    verts = tuple(fr.original(k) for k in range(1, m + 1))
    return HyperMarkovReport(verts, out, thr, n)
