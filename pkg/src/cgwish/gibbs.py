"""Block Gibbs sampler on Θ_G for the posterior π_{Ũ,α̃}.

One sweep draws every non-empty column block ``L^G_{.v}`` (``v = 1..m-1``)
from its Gaussian conditional and then all ``D_ii`` from their independent
inverse-gamma conditionals.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg as sla

from .errors import (
    DimensionMismatch,
    InvalidParams,
    NonIntegrablePosterior,
    NonIntegrableShape,
    NotPositiveDefinite,
    SingularPrecision,
)
from .linalg import CholFactor, tri_inverse
from .wishart import PriorSpec, is_integrable

__all__ = [
    "GibbsConfig",
    "ChainState",
    "ConditionalColumnParams",
    "ChainResult",
    "BlockGibbs",
    "conditional_column_params",
    "conditional_d_params",
    "gibbs_step",
    "run_chain",
    "run_chains",
    "sample_mvn",
    "sample_invgamma",
    "N_BATCHES",
    "DRIFT_WARN",
]

N_BATCHES = 10
DRIFT_WARN = 0.05


@dataclass(frozen=True)
class GibbsConfig:
    """Burn-in ``burnin``, averaging length ``iters``, seed and thinning.

    ``init`` is ``"default"`` (``L = I``, ``D_ii = Ũ_ii / (α̃_i - 2)``) or a
    :class:`CholFactor`.
    """

    burnin: int = 1000
    iters: int = 1000
    seed: int = 0
    init: object = "default"
    thin: int = 1

    def __post_init__(self):
        if self.burnin < 0:
            raise InvalidParams("burn-in must be >= 0")
        if self.iters < 1:
            raise InvalidParams("need at least one averaging iteration")
        if self.thin < 1:
            raise InvalidParams("thinning must be >= 1")


@dataclass(frozen=True)
class ChainState:
    factor: CholFactor
    iteration: int = 0
    rng_tag: str = ""


@dataclass(frozen=True)
class ConditionalColumnParams:
    """Gaussian conditional of ``L[rows, v]``; ``rows`` are 1-based labels."""

    v: int
    rows: tuple
    mean: np.ndarray
    cov: np.ndarray
    precision: np.ndarray


@dataclass
class ChainResult:
    mean: np.ndarray
    mc_se: np.ndarray
    batch_means: np.ndarray
    max_batch_drift: float
    burnin: int
    iters: int
    seed: int
    wall_time: float
    final_state: ChainState
    checkpoints: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)


def sample_mvn(mean, cov, rng):
    """One draw from ``N(mean, cov)``."""
    mean = np.asarray(mean, dtype=float)
    try:
        C = np.linalg.cholesky(np.asarray(cov, dtype=float))
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("covariance is not positive definite") from None
    return mean + C @ rng.standard_normal(mean.shape[0])


def sample_invgamma(shape, scale, rng, size=None):
    """Inverse-gamma draw with density proportional to ``x^{-(a+1)} e^{-b/x}``."""
    shape = np.asarray(shape, dtype=float)
    scale = np.asarray(scale, dtype=float)
    if np.any(shape <= 0) or np.any(scale <= 0):
        raise InvalidParams("inverse-gamma shape and scale must be positive")
    return scale / rng.gamma(shape, size=size)


def _column_system(L, D, N, U, v0, S):
    """Precision and linear term of the column-``v`` conditional (0-based)."""
    r = N[v0]
    NS = N[:, S]
    w = NS @ L[S, v0]
    y = U @ r
    q = float(r @ y)
    # L^{-1} with column v zeroed is N + w rᵀ
    t = (N @ y + w * q) / D
    c = NS.T @ t
    B = NS.T @ (NS / D[:, None])
    return q * B, c


class BlockGibbs:
    """Sweep kernel for a fixed posterior ``(Ũ, α̃)`` and graph.

    ``L^{-1}`` is carried through the sweep with exact rank-one updates after
    each column draw and recomputed by a triangular solve once per sweep.
    """

    def __init__(self, posterior, g):
        if posterior.m != g.m:
            raise DimensionMismatch(f"prior has dimension {posterior.m}, graph {g.m}")
        self.g = g
        self.U = posterior.U
        self.alpha = posterior.alpha
        self.shape = self.alpha / 2.0 - 1.0
        if np.any(self.shape <= 0):
            bad = [i + 1 for i in np.flatnonzero(self.shape <= 0)]
            raise NonIntegrableShape(f"alpha_i <= 2 at vertices {bad}")
        self.blocks = []
        for v in range(1, g.m):
            rows = g.upper_neighbors(v)
            if rows:
                self.blocks.append((v - 1, np.array(rows, dtype=int) - 1))

    def initial_factor(self):
        d = np.diag(self.U) / (self.alpha - 2.0)
        if np.any(d <= 0):
            raise SingularPrecision("posterior location matrix has a non-positive diagonal")
        return CholFactor(np.eye(self.g.m), d)

    def sweep(self, L, D, N, rng):
        """One in-place sweep; returns the refreshed ``L^{-1}``."""
        U = self.U
        for v0, S in self.blocks:
            P, c = _column_system(L, D, N, U, v0, S)
            try:
                cf = sla.cho_factor(P, lower=True, check_finite=False)
            except np.linalg.LinAlgError:
                raise SingularPrecision(f"conditional precision of column {v0 + 1} "
                                        "is not positive definite") from None
            mu = sla.cho_solve(cf, c, check_finite=False)
            z = rng.standard_normal(S.size)
            x = mu + sla.solve_triangular(cf[0], z, lower=True, trans="T", check_finite=False)
            delta = L[S, v0] - x
            N += np.outer(N[:, S] @ delta, N[v0])
            L[S, v0] = x
        N = tri_inverse(L)
        q = np.einsum("ij,jk,ik->i", N, U, N)
        D[:] = sample_invgamma(self.shape, q / 2.0, rng)
        return N


def conditional_column_params(state, v, U_tilde, g):
    """Conditional law of the free entries of column ``v`` of ``L``.

    The precision is ``(L^{-1}Ũ L^{-T})_vv ((LDLᵀ)^{-1})_{SS}`` where ``S`` is
    the set of higher neighbours of ``v``; the mean minimises the trace term
    over those entries with everything else fixed.
    """
    rows = g.upper_neighbors(v)
    if not rows:
        raise InvalidParams(f"vertex {v} has no higher neighbours; the block is empty")
    f = state.factor
    L = f.L
    N = tri_inverse(L)
    S = np.array(rows, dtype=int) - 1
    P, c = _column_system(L, f.D, N, np.asarray(U_tilde, dtype=float), v - 1, S)
    try:
        cf = sla.cho_factor(P, lower=True)
    except np.linalg.LinAlgError:
        raise SingularPrecision(f"conditional precision of column {v} "
                                "is not positive definite") from None
    mean = sla.cho_solve(cf, c)
    cov = sla.cho_solve(cf, np.eye(S.size))
    return ConditionalColumnParams(v, tuple(rows), mean, 0.5 * (cov + cov.T), P)


def conditional_d_params(state, i, U_tilde, alpha_tilde):
    """``(α̃_i/2 - 1, (L^{-1}Ũ L^{-T})_ii / 2)`` for the inverse-gamma draw of ``D_ii``."""
    a = float(np.asarray(alpha_tilde, dtype=float)[i - 1]) / 2.0 - 1.0
    if a <= 0:
        raise NonIntegrableShape(f"alpha_{i} <= 2 gives a non-positive shape")
    r = tri_inverse(state.factor.L)[i - 1]
    return a, float(r @ np.asarray(U_tilde, dtype=float) @ r) / 2.0


def gibbs_step(state, posterior, g, rng):
    """One full sweep from ``state``; returns a new :class:`ChainState`."""
    kern = BlockGibbs(posterior, g)
    L = state.factor.L.copy()
    D = state.factor.D.copy()
    kern.sweep(L, D, tri_inverse(L), rng)
    return ChainState(CholFactor(L, D), state.iteration + 1, state.rng_tag)


def _trace_header(g):
    cols = ["iter"] + [f"L_{u}_{v}" for v in range(1, g.m) for u in g.upper_neighbors(v)]
    cols += [f"D_{i}" for i in g.vertices]
    return ",".join(cols)


def _trace_row(it, L, D, blocks):
    vals = [str(it)]
    for v0, S in blocks:
        vals += [repr(float(x)) for x in L[S, v0]]
    vals += [repr(float(x)) for x in D]
    return ",".join(vals)


def run_chain(cfg, posterior, g, override=False, trace=None, checkpoints=()):
    """Burn in for ``cfg.burnin`` sweeps, then average ``LDLᵀ`` over ``cfg.iters``.

    Parameters
    ----------
    trace : path or file-like, optional
        Receives one CSV record per kept iteration with the free entries of
        ``L`` (column by column) and ``D``.
    checkpoints : iterable of int
        Averaging counts at which the running mean is also recorded.

    Returns
    -------
    ChainResult
    """
    if not override and not is_integrable(posterior, g):
        raise NonIntegrablePosterior("posterior shape parameters fail alpha_i > |N^<(i)| + 2")
    if not posterior.is_proper_location():
        raise InvalidParams("posterior location matrix is not positive definite; "
                            "more data or a proper prior location is needed")
    t0 = time.perf_counter()
    kern = BlockGibbs(posterior, g)
    rng = np.random.default_rng(cfg.seed)
    f0 = kern.initial_factor() if isinstance(cfg.init, str) else cfg.init
    if isinstance(cfg.init, str) and cfg.init != "default":
        raise InvalidParams(f"unknown initialisation policy {cfg.init!r}")
    L, D = f0.L.copy(), f0.D.copy()
    N = tri_inverse(L)
    m = g.m

    own = False
    fh = None
    if trace is not None:
        if hasattr(trace, "write"):
            fh = trace
        else:
            fh, own = open(trace, "w"), True
        fh.write(_trace_header(g) + "\n")

    try:
        for _ in range(cfg.burnin):
            N = kern.sweep(L, D, N, rng)
        nb = min(N_BATCHES, cfg.iters)
        edges = [(b * cfg.iters) // nb for b in range(nb + 1)]
        batch_sums = np.zeros((nb, m, m))
        # finer batches for the standard error; the drift check keeps nb
        nse = max(2, min(cfg.iters, int(np.sqrt(cfg.iters))))
        se_edges = [(b * cfg.iters) // nse for b in range(nse + 1)]
        se_sums = np.zeros((nse, m, m))
        bs = 0
        total = np.zeros((m, m))
        marks = {int(c) for c in checkpoints}
        saved = {}
        b = 0
        for k in range(cfg.iters):
            for _ in range(cfg.thin):
                N = kern.sweep(L, D, N, rng)
            sigma = (L * D) @ L.T
            total += sigma
            while k >= edges[b + 1]:
                b += 1
            batch_sums[b] += sigma
            while k >= se_edges[bs + 1]:
                bs += 1
            se_sums[bs] += sigma
            if fh is not None:
                fh.write(_trace_row(cfg.burnin + (k + 1) * cfg.thin, L, D, kern.blocks) + "\n")
            if k + 1 in marks:
                saved[k + 1] = _sym(total / (k + 1))
    finally:
        if own:
            fh.close()

    mean = _sym(total / cfg.iters)
    sizes = np.diff(edges).astype(float)
    bm = np.array([_sym(batch_sums[j] / sizes[j]) for j in range(nb)])
    if cfg.iters >= 2:
        se_bm = se_sums / np.diff(se_edges).astype(float)[:, None, None]
        se = _sym(se_bm.std(axis=0, ddof=1) / np.sqrt(nse))
    else:
        se = np.full((m, m), np.nan)
    ref = np.linalg.norm(mean)
    drift = float(max(np.linalg.norm(x - mean) for x in bm) / ref) if ref > 0 else 0.0
    notes = []
    if drift > DRIFT_WARN:
        notes.append(f"max relative batch-mean drift {drift:.3f} exceeds {DRIFT_WARN}")
    state = ChainState(CholFactor(L, D), cfg.burnin + cfg.iters * cfg.thin, f"seed={cfg.seed}")
    return ChainResult(mean=mean, mc_se=se, batch_means=bm, max_batch_drift=drift,
                       burnin=cfg.burnin, iters=cfg.iters, seed=cfg.seed,
                       wall_time=time.perf_counter() - t0, final_state=state,
                       checkpoints=saved, warnings=notes)


def _sym(a):
    return 0.5 * (a + a.T)


def _chain_job(args):
    cfg, U, alpha, g, override = args
    return run_chain(cfg, PriorSpec(U, alpha), g, override=override)


def run_chains(cfg, posterior, g, n_chains=1, workers=None, override=False):
    """Independent chains with seeds spawned from ``cfg.seed``, merged by averaging.

    Chains run in worker processes when ``workers > 1``.
    """
    if n_chains < 1:
        raise InvalidParams("need at least one chain")
    if n_chains == 1:
        return run_chain(cfg, posterior, g, override=override)
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(cfg.seed).spawn(n_chains)]
    jobs = [(replace(cfg, seed=s), posterior.U, posterior.alpha, g, override) for s in seeds]
    t0 = time.perf_counter()
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_chain_job, jobs))
    else:
        results = [_chain_job(j) for j in jobs]
    mean = np.mean([r.mean for r in results], axis=0)
    se = np.sqrt(np.sum([r.mc_se ** 2 for r in results], axis=0)) / n_chains
    bm = np.concatenate([r.batch_means for r in results])
    ref = np.linalg.norm(mean)
    drift = float(max(np.linalg.norm(x - mean) for x in bm) / ref) if ref > 0 else 0.0
    notes = [w for r in results for w in r.warnings]
    return ChainResult(mean=mean, mc_se=se, batch_means=bm, max_batch_drift=drift,
                       burnin=cfg.burnin, iters=cfg.iters, seed=cfg.seed,
                       wall_time=time.perf_counter() - t0,
                       final_state=results[-1].final_state, warnings=notes)

