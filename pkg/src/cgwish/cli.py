"""Command-line interface: ``cgwish check-graph | fit | simulate | oracle``.

Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .datasets import data_path, sim50_graph, sim50_sigma
from .errors import (
    InsufficientData,
    InvalidParams,
    MomentDoesNotExist,
    NotDecomposable,
    NotHomogeneous,
    NumericalError,
    ValidationError,
)
from .gibbs import GibbsConfig, run_chain, run_chains
from .graph import (
    clique_decomposition,
    hasse_diagram,
    hasse_order,
    is_decomposable,
    is_homogeneous,
    perfect_vertex_order,
    permutation_index,
    read_graph,
    verify_order_in_SD,
    verify_order_in_SH,
    write_graph,
)
from .homogeneous import expected_sigma, hasse_frame, layer_sets, log_normalizing_constant
from .io import (
    Report,
    prior_from_config,
    read_config,
    read_csv,
    read_matrix,
    read_order,
    write_csv,
    write_matrix,
)
from .linalg import check_in_pg
from .wishart import DataSummary, integrability_report, posterior_update, sample_covariance

log = logging.getLogger("cgwish")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3
BUILTIN = "builtin:"


def _path(s):
    """``builtin:<name>`` resolves to a bundled data file."""
    if s is not None and s.startswith(BUILTIN):
        return Path(str(data_path(s[len(BUILTIN):])))
    return None if s is None else Path(s)


def _fmt_set(s):
    return "{" + ",".join(str(v) for v in sorted(s)) + "}"


def _emit(report, out):
    text = report.text()
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# check-graph


def cmd_check_graph(args):
    g = read_graph(_path(args.graph))
    rep = Report("cgwish check-graph")
    dec_ok = is_decomposable(g)
    items = [("path", args.graph), ("vertices", g.m), ("edges", len(g.edges)),
             ("decomposable", "yes" if dec_ok else "no")]
    if not dec_ok:
        items.append(("homogeneous", "no"))
        rep.section("graph", items)
        _emit(rep, args.out)
        return EXIT_VALIDATION
    homog = is_homogeneous(g)
    ident = tuple(g.vertices)
    items += [("homogeneous", "yes" if homog else "no"),
              ("given_order_in_SD", "yes" if verify_order_in_SD(g, ident) else "no")]
    if homog:
        items.append(("given_order_in_SH", "yes" if verify_order_in_SH(g, ident) else "no"))
    rep.section("graph", items)
    dec = clique_decomposition(g)
    rows = []
    for j, c in enumerate(dec.cliques):
        rows.append((f"clique_{j + 1}", _fmt_set(c)))
        if j:
            rows.append((f"separator_{j + 1}", _fmt_set(dec.separators[j])))
    rows += [(f"multiplicity {_fmt_set(s)}", nu) for s, nu in sorted(
        dec.multiplicities.items(), key=lambda kv: sorted(kv[0]))]
    rep.section("cliques", rows)
    rep.section("orderings", [("perfect_order", list(perfect_vertex_order(g)))]
                + ([("hasse_order", list(hasse_order(g)))] if homog else []))
    if homog:
        hd = hasse_diagram(g)
        rep.section("hasse", [
            (f"class_{c + 1}", f"{_fmt_set(members)} parent="
             + ("root" if hd.parent[c] is None else f"class_{hd.parent[c] + 1}"))
            for c, members in enumerate(hd.classes)])
    _emit(rep, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# fit


def _choose_order(policy, g):
    ident = tuple(g.vertices)
    if policy == "given":
        if not verify_order_in_SD(g, ident):
            raise NotDecomposable("the given vertex labelling produces Cholesky fill-in")
        return ident
    if policy == "auto":
        return ident if verify_order_in_SD(g, ident) else perfect_vertex_order(g)
    if policy == "hasse":
        return hasse_order(g)
    order = read_order(_path(policy), g.m)
    if not verify_order_in_SD(g, order):
        raise NotDecomposable(f"ordering from {policy} produces Cholesky fill-in")
    return order


def _setting(args, cfg, name, cast, default):
    v = getattr(args, name, None)
    if v is not None:
        return v
    if name in cfg:
        try:
            return cast(cfg[name])
        except ValueError:
            raise InvalidParams(f"bad value for {name}: {cfg[name]!r}") from None
    return default


def _bool(s):
    s = str(s).strip().lower()
    if s in ("1", "yes", "true", "on"):
        return True
    if s in ("0", "no", "false", "off"):
        return False
    raise ValueError(s)


def cmd_fit(args):
    g = read_graph(_path(args.graph))
    if not is_decomposable(g):
        raise NotDecomposable("graph is not decomposable")
    cfg = read_config(_path(args.prior))
    center = _setting(args, cfg, "center", _bool, True)
    burnin = _setting(args, cfg, "burnin", int, 1000)
    iters = _setting(args, cfg, "iters", int, 1000)
    seed = _setting(args, cfg, "seed", int, 0)
    chains = _setting(args, cfg, "chains", int, 1)
    policy = _setting(args, cfg, "order", str, "auto")

    if args.data:
        Y, _ = read_csv(_path(args.data), header=args.header)
        if Y.shape[1] != g.m:
            raise ValidationError(f"data has {Y.shape[1]} columns, graph has {g.m} vertices")
        d = sample_covariance(Y, center=center)
        source = f"data:{args.data}"
    else:
        if args.cov is None or args.n is None:
            raise InvalidParams("give --data, or --cov together with --n")
        S = read_matrix(_path(args.cov))
        if S.shape != (g.m, g.m):
            raise ValidationError(f"covariance is {S.shape}, graph has {g.m} vertices")
        d = DataSummary(args.n, S, centered=center)
        source = f"cov:{args.cov}"

    order = _choose_order(policy, g)
    idx = permutation_index(order)
    gf = g.relabel(order)
    df = d.permuted(idx)
    prior = prior_from_config(cfg, gf, df.S, idx=idx)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        post = posterior_update(prior, df)
    irep = integrability_report(post, gf)
    gcfg = GibbsConfig(burnin=burnin, iters=iters, seed=seed)
    if chains == 1:
        res = run_chain(gcfg, post, gf, override=args.override, trace=args.trace)
    elif args.trace:
        raise InvalidParams("--trace needs a single chain")
    else:
        res = run_chains(gcfg, post, gf, n_chains=chains, workers=chains,
                         override=args.override)

    back = np.empty_like(idx)
    back[idx] = np.arange(g.m)
    mean = res.mean[np.ix_(back, back)]
    se = res.mc_se[np.ix_(back, back)]

    rep = Report("cgwish fit")
    rep.section("provenance", [
        ("version", __version__), ("command", "fit"), ("graph", args.graph),
        ("source", source), ("n", d.n), ("center", "yes" if center else "no"),
        ("prior", args.prior), ("u", cfg["u"]), ("alpha", cfg["alpha"]),
        ("alpha_working_order", [float(x) for x in prior.alpha]),
        ("burnin", burnin), ("iters", iters), ("seed", seed), ("chains", chains),
        ("order_policy", policy), ("order", list(order)),
    ])
    diag = [("integrability", "yes" if irep.integrable else "no"),
            ("integrability_test", irep.label),
            ("max_batch_drift", res.max_batch_drift)]
    diag += [("warning", w) for w in res.warnings]
    diag.append(("wall_time_seconds", round(res.wall_time, 3)))
    rep.section("diagnostics", diag)
    if is_homogeneous(gf) and verify_order_in_SH(gf, tuple(gf.vertices)):
        try:
            ex = expected_sigma(post, gf)[np.ix_(back, back)]
            err = np.linalg.norm(mean - ex) / np.linalg.norm(ex)
            rep.section("closed_form", [("relative_frobenius_error", float(err))])
            rep.matrix("closed_form_mean", ex)
        except MomentDoesNotExist as exc:
            rep.section("closed_form", [("status", f"unavailable: {exc}")])
    rep.matrix("posterior_mean", mean)
    rep.matrix("mc_standard_error", se)
    _emit(rep, args.out)
    for w in res.warnings:
        log.warning(w)
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args):
    if args.paper_sim50:
        g = sim50_graph()
        sigma = sim50_sigma(g)
    else:
        if args.graph is None or args.sigma is None:
            raise InvalidParams("give --graph and --sigma, or --paper-sim50")
        g = read_graph(_path(args.graph))
        sigma = read_matrix(_path(args.sigma))
        check_in_pg(sigma, g)
    if args.n < 1:
        raise InsufficientData("need --n >= 1")
    rng = np.random.default_rng(args.seed)
    C = np.linalg.cholesky(sigma)
    Y = rng.standard_normal((args.n, g.m)) @ C.T
    write_csv(Y, args.out)
    if args.graph_out:
        write_graph(g, args.graph_out)
    if args.sigma_out:
        write_matrix(sigma, args.sigma_out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# oracle


def cmd_oracle(args):
    g = read_graph(_path(args.graph))
    fr = hasse_frame(g)
    cfg = read_config(_path(args.prior))
    prior_f = prior_from_config(cfg, fr.graph, None, idx=fr.idx)
    lz = log_normalizing_constant(prior_f, fr.graph)
    rep = Report("cgwish oracle")
    order = np.empty(g.m, dtype=int)
    order[fr.idx] = np.arange(1, g.m + 1)
    rep.section("provenance", [
        ("version", __version__), ("command", "oracle"), ("graph", args.graph),
        ("prior", args.prior), ("u", cfg["u"]), ("alpha", cfg["alpha"]),
        ("order", [int(x) for x in order]),
        ("alpha_working_order", [float(x) for x in prior_f.alpha]),
    ])
    rep.section("normalizing_constant", [("log_z", lz)])
    rep.section("layers", [(f"A_{k + 1}", _fmt_set(a)) for k, a in enumerate(layer_sets(g))])
    try:
        E = fr.from_frame(expected_sigma(prior_f, fr.graph))
        rep.matrix("expected_sigma", E)
    except MomentDoesNotExist as exc:
        rep.section("expected_sigma", [("status", f"unavailable: {exc}")])
    _emit(rep, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="cgwish", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"cgwish {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check-graph", help="classify a graph and list its cliques and orderings")
    c.add_argument("graph")
    c.add_argument("--out")
    c.set_defaults(func=cmd_check_graph)

    f = sub.add_parser("fit", help="posterior mean by block Gibbs sampling")
    f.add_argument("--graph", required=True)
    src = f.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="CSV of observations")
    src.add_argument("--cov", help="sample covariance matrix file (needs --n)")
    f.add_argument("--n", type=int, help="sample size behind --cov")
    f.add_argument("--header", action="store_true", help="CSV has a header row")
    f.add_argument("--prior", required=True, help="config file with u, alpha and run keys")
    f.add_argument("--burnin", type=int)
    f.add_argument("--iters", type=int)
    f.add_argument("--seed", type=int)
    f.add_argument("--chains", type=int)
    f.add_argument("--center", dest="center", action="store_const", const=True)
    f.add_argument("--no-center", dest="center", action="store_const", const=False)
    f.add_argument("--order", help="auto | given | hasse | <permutation file>")
    f.add_argument("--trace", help="CSV trace of L and D in the working order (single chain)")
    f.add_argument("--override", action="store_true",
                   help="run even if the posterior fails the integrability condition")
    f.add_argument("--out")
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("simulate", help="draw Gaussian data for a covariance in P_G")
    s.add_argument("--graph")
    grp = s.add_mutually_exclusive_group(required=True)
    grp.add_argument("--sigma")
    grp.add_argument("--paper-sim50", action="store_true",
                     help="the bundled 50-vertex homogeneous graph and its covariance")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--graph-out")
    s.add_argument("--sigma-out")
    s.set_defaults(func=cmd_simulate)

    o = sub.add_parser("oracle", help="closed forms for a homogeneous graph")
    o.add_argument("--graph", required=True)
    o.add_argument("--prior", required=True)
    o.add_argument("--out")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="cgwish: %(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (ValidationError, NotHomogeneous, OSError) as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION
    except NumericalError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
