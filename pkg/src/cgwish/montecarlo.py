"""Monte Carlo integration of the unnormalised prior over Θ_G.

The ``D`` coordinates integrate in closed form:
``∫ D^{-α/2} e^{-s/(2D)} dD = Γ(α/2 - 1) (s/2)^{-(α/2 - 1)}`` with
``s_i = (L^{-1} U L^{-T})_ii``.  What remains is an integral over the free
entries of ``L``, changed to the matching entries of ``N = L^{-1}`` (unit
Jacobian).  These estimators are test oracles for the closed-form
normalising constant and for the integrability condition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats
from scipy.special import gammaln, logsumexp

from .errors import InvalidParams

__all__ = [
    "free_edges",
    "inverse_from_free",
    "log_integrand",
    "ImportanceEstimate",
    "importance_log_z",
    "BoxTrend",
    "box_integrals",
    "classify_box_trend",
]


def free_edges(g):
    """Edge list ``(i, j)``, ``i > j``, ordered by row then column."""
    return sorted(g.edges)


def inverse_from_free(g, x):
    """Full ``N = L^{-1}`` from its entries on the edges.

    ``x`` has shape ``(n, |E|)`` in :func:`free_edges` order.  Entries of
    ``N`` off the edges are fixed by ``L`` vanishing there:
    ``L_ij = -N_ij - Σ_{j<k<i} N_ik L_kj``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n, m = x.shape[0], g.m
    pos = {e: k for k, e in enumerate(free_edges(g))}
    N = np.zeros((n, m, m))
    L = np.zeros((n, m, m))
    idx = np.arange(m)
    N[:, idx, idx] = 1.0
    L[:, idx, idx] = 1.0
    for i in range(m):
        for j in range(i - 1, -1, -1):
            acc = np.einsum("nk,nk->n", N[:, i, j + 1:i], L[:, j + 1:i, j])
            k = pos.get((i + 1, j + 1))
            if k is None:
                N[:, i, j] = -acc
            else:
                N[:, i, j] = x[:, k]
                L[:, i, j] = -x[:, k] - acc
    return N


def log_integrand(p, g, x):
    """Log of ``∫ π̃_{U,α}(L, D) dD`` at free inverse entries ``x``."""
    N = inverse_from_free(g, x)
    s = np.einsum("nij,jk,nik->ni", N, p.U, N)
    a = p.alpha / 2.0 - 1.0
    if np.any(a <= 0):
        raise InvalidParams("need alpha_i > 2 for the D integral to exist")
    return np.sum(gammaln(a) + a * np.log(2.0) - a * np.log(s), axis=1)


@dataclass(frozen=True)
class ImportanceEstimate:
    """``log_z`` with the standard error of ``z`` relative to ``z``."""

    log_z: float
    rel_se: float
    n: int


def _row_blocks(g):
    """Free-entry positions grouped by row of ``N``."""
    blocks = {}
    for k, (i, _) in enumerate(free_edges(g)):
        blocks.setdefault(i, []).append(k)
    return [np.array(v) for _, v in sorted(blocks.items())]


def _num_hessian(fun, x0, h=1e-4):
    d = x0.size
    H = np.zeros((d, d))
    for a in range(d):
        for b in range(a, d):
            ea = np.zeros(d)
            eb = np.zeros(d)
            ea[a] = h
            eb[b] = h
            v = (fun(x0 + ea + eb) - fun(x0 + ea - eb)
                 - fun(x0 - ea + eb) + fun(x0 - ea - eb)) / (4 * h * h)
            H[a, b] = H[b, a] = v
    return H


def importance_log_z(p, g, n, rng, df=1.0, inflate=1.5):
    """Importance-sampling estimate of ``log z``.

    The proposal is a product over rows of ``N`` of multivariate t laws with
    ``df`` degrees of freedom, located at the numerically found mode of the
    integrand with scale from the negative inverse Hessian block.  Heavy
    tails keep the weight variance finite.  Rows factorise only when the
    labelling is in S_H; other orderings still give a valid, noisier
    estimate.
    """
    d = len(g.edges)
    if d == 0:
        return ImportanceEstimate(float(log_integrand(p, g, np.zeros((1, 0)))[0]), 0.0, n)
    f = lambda v: -float(log_integrand(p, g, v[None, :])[0])
    res = optimize.minimize(f, np.zeros(d), method="BFGS")
    mode = res.x
    H = _num_hessian(f, mode)
    logq = np.zeros(n)
    X = np.empty((n, d))
    for blk in _row_blocks(g):
        Hb = H[np.ix_(blk, blk)]
        w, V = np.linalg.eigh(Hb)
        w = np.maximum(w, 1e-8 * max(w.max(), 1e-8))
        cov = (V / w) @ V.T * inflate
        dist = stats.multivariate_t(loc=mode[blk], shape=cov, df=df)
        xs = dist.rvs(size=n, random_state=rng).reshape(n, blk.size)
        X[:, blk] = xs
        logq += np.atleast_1d(dist.logpdf(xs))
    logw = log_integrand(p, g, X) - logq
    lz = float(logsumexp(logw) - np.log(n))
    w = np.exp(logw - lz)
    return ImportanceEstimate(lz, float(w.std(ddof=1) / np.sqrt(n)), n)


@dataclass(frozen=True)
class BoxTrend:
    radii: np.ndarray
    integrals: np.ndarray
    growth: float
    verdict: str


def box_integrals(p, g, radii, n, rng):
    """Estimates of the integral over the nested cubes ``[-R, R]^{|E|}``.

    The innermost cube and each shell between consecutive cubes are
    estimated separately, so every increment carries its own relative
    error.  Samples come from a density proportional to ``1 / (1 + |x_k|)``
    per coordinate on the outer cube; those falling inside the inner cube
    are discarded for a shell.
    """
    d = len(g.edges)
    radii = np.asarray(radii, dtype=float)
    pieces = np.empty(radii.size)
    inner = 0.0
    for k, R in enumerate(radii):
        c = np.log1p(R)
        mag = np.expm1(rng.random((n, d)) * c)
        x = np.where(rng.random((n, d)) < 0.5, -1.0, 1.0) * mag
        logq = np.sum(-np.log(2.0 * c) - np.log1p(mag), axis=1)
        lw = log_integrand(p, g, x) - logq
        keep = np.any(mag > inner, axis=1) if d else np.ones(n, bool)
        pieces[k] = float(np.exp(logsumexp(lw[keep]) - np.log(n))) if keep.any() else 0.0
        inner = R
    return np.cumsum(pieces)


def classify_box_trend(radii, integrals, bounded_below=0.8, divergent_above=1.2, tail=3):
    """Geometric growth of the last increments between nested boxes.

    ``bounded`` if increments shrink by a factor below ``bounded_below``,
    ``divergent`` if the sequence increases and increments grow by more than
    ``divergent_above``, otherwise ``inconclusive``.
    """
    I = np.asarray(integrals, dtype=float)
    inc = np.diff(I)
    ratios = inc[1:][-tail:] / inc[:-1][-tail:]
    growth = float(np.exp(np.mean(np.log(np.abs(ratios))))) if ratios.size else np.nan
    if np.all(inc[-tail:] > 0) and growth > divergent_above:
        verdict = "divergent"
    elif growth < bounded_below:
        verdict = "bounded"
    else:
        verdict = "inconclusive"
    return BoxTrend(np.asarray(radii, dtype=float), I, growth, verdict)
