"""Exact, series and Monte Carlo computations for monomer-dimer models.

Exit codes: 0 success, 2 argument/domain error, 3 infeasible, 4 resource cap.
A rational ``--rho`` (``3``, ``1/10``) runs the exact path end-to-end; a
decimal one (``0.1``, ``1e-1``) runs in floating point.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
import warnings
from fractions import Fraction

from . import cluster, doublemd, matchings, montecarlo
from .errors import ArgumentError, FormatError, MDLabError
from .lattice import make_region, parse_vertices
from .matchings import MatchingConfig


def parse_rho(text: str):
    t = text.strip()
    if re.fullmatch(r"[+-]?\d+", t):
        return int(t)
    if re.fullmatch(r"[+-]?\d+\s*/\s*\d+", t):
        p, q = (int(x) for x in t.split("/"))
        if q == 0:
            raise ArgumentError("zero denominator in rho")
        return Fraction(p, q)
    try:
        return float(t)
    except ValueError:
        raise ArgumentError(f"cannot parse rho {text!r}") from None


def fmt(x) -> str:
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _json_value(x):
    return fmt(x) if isinstance(x, Fraction) else x


def _parse_edge(region, text: str):
    vs = parse_vertices(text)
    if len(vs) != 2:
        raise ArgumentError(f"an edge needs exactly two vertices, got {text!r}")
    return region.edge(*vs)


def _chain_params(args) -> montecarlo.ChainParams:
    return montecarlo.ChainParams(args.sweeps, args.burn_in, args.thinning, args.chains, args.seed)


def _csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    return buf.getvalue()


def _corr_json(res) -> str:
    return json.dumps({
        "value": _json_value(res.value),
        "method": res.method,
        "abs_error": res.abs_error,
        "A": [list(v) for v in res.A],
        "B": [list(v) for v in res.B],
        "rho": _json_value(res.rho),
        "region": res.region,
        "tail_estimate": res.tail_estimate,
        "flags": list(res.flags),
    }) + "\n"


def cmd_exact_z(args) -> str:
    region = make_region(args.region)
    poly = matchings.matching_polynomial(region)
    if args.poly:
        if args.format == "json":
            return json.dumps({"vertex_count": poly.vertex_count, "coefficients": list(poly.coefficients)}) + "\n"
        return "\n".join(poly.to_lines()) + "\n"
    if args.rho is None:
        raise ArgumentError("exact-z needs --rho unless --poly is given")
    z = poly(parse_rho(args.rho))
    if args.format == "json":
        return json.dumps({"Z": _json_value(z)}) + "\n"
    return fmt(z) + "\n"


def cmd_exact_corr(args) -> str:
    region = make_region(args.region)
    res = matchings.correlation(region, parse_vertices(args.A), parse_vertices(args.B), parse_rho(args.rho))
    return _corr_json(res) if args.format == "json" else fmt(res.value) + "\n"


def cmd_dimer_cov(args) -> str:
    region = make_region(args.region)
    rho = parse_rho(args.rho)
    e1, e2 = _parse_edge(region, args.e1), _parse_edge(region, args.e2)
    cov = matchings.dimer_covariance(region, e1, e2, rho)
    if args.format == "json":
        return json.dumps({"covariance": _json_value(cov), "e1": e1, "e2": e2}) + "\n"
    return fmt(cov) + "\n"


def cmd_cluster_logz(args) -> str:
    region = make_region(args.region)
    res = cluster.truncated_log_z(region, parse_rho(args.rho), args.order)
    if args.format == "json":
        return json.dumps({
            "terms": [float(t) for t in res.per_order_terms],
            "total": float(res.total),
            "m_max": res.m_max,
            "tail_estimate": res.tail_estimate,
            "flags": list(res.flags),
        }) + "\n"
    return res.to_csv()


def cmd_cluster_corr(args) -> str:
    region = make_region(args.region)
    res = cluster.truncated_correlation(
        region, parse_vertices(args.A), parse_vertices(args.B), parse_rho(args.rho), args.order
    )
    if args.format == "json":
        return _corr_json(res)
    return _csv(["value", "abs_error", "tail_estimate", "flags"],
                [(res.value, res.abs_error, res.tail_estimate, ";".join(res.flags))])


def cmd_bounds(args) -> str:
    rho = float(parse_rho(args.rho))
    kp = cluster.kp_condition(rho, args.dim)
    rb = cluster.rigorous_bound(args.asize, args.dim, args.dist, rho)
    pd = cluster.predicted_decay(rho, args.asize, args.dim)
    rows = [
        ("kp_holds", kp.holds),
        ("kp_margin", kp.margin),
        ("large_rho_threshold", cluster.proposition_threshold(args.asize, args.dim)),
        ("in_large_rho_regime", rho >= cluster.proposition_threshold(args.asize, args.dim)),
        ("intermediate", rb.intermediate),
        ("final", rb.final),
        ("a", pd.a),
        ("c_tilde", pd.c_tilde),
        ("c", pd.c),
    ]
    if args.format == "json":
        return json.dumps(dict(rows)) + "\n"
    return _csv(["quantity", "value"], rows)


def cmd_mcmc_corr(args) -> str:
    region = make_region(args.region)
    rho = parse_rho(args.rho)
    A, B = parse_vertices(args.A), parse_vertices(args.B)
    params = _chain_params(args)
    p_ab = montecarlo.estimate_pinning(region, A + B, rho, params, 0, args.workers)
    p_a = montecarlo.estimate_pinning(region, A, rho, params, 1, args.workers)
    p_b = montecarlo.estimate_pinning(region, B, rho, params, 2, args.workers)
    u = montecarlo.estimate_correlation(region, A, B, rho, params, args.workers)
    n = p_ab.n_samples + p_a.n_samples + p_b.n_samples
    ess = min(p_ab.ess, p_a.ess, p_b.ess)
    lines = [montecarlo.ESTIMATE_HEADER, p_ab.csv_row("P_AB"), p_a.csv_row("P_A"), p_b.csv_row("P_B"),
             f"U,{u.value:.17g},{u.abs_error:.17g},{n},{ess:.17g}"]
    return "\n".join(lines) + "\n"


def _read_points(path: str):
    pts = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or not {"distance", "value"} <= set(reader.fieldnames):
            raise FormatError("decay-fit input needs columns distance,value[,weight]")
        for row in reader:
            try:
                pts.append((float(row["distance"]), float(row["value"]), float(row.get("weight") or 1.0)))
            except ValueError:
                raise FormatError(f"non-numeric row {row}") from None
    return pts


def cmd_decay_fit(args) -> str:
    rows = []
    if args.input:
        fit = montecarlo.fit_decay(_read_points(args.input), args.noise)
        if args.rho:
            parse_rho(args.rho)  # validate; the label is echoed as given
        rows.append(fit.csv_row(args.rho.strip() if args.rho else "nan"))
    else:
        if not (args.region and args.A and args.B and args.shift and args.rho):
            raise ArgumentError("decay-fit needs --input, or --region --A --B --shift --rho for a sweep")
        region = make_region(args.region)
        A, B = parse_vertices(args.A), parse_vertices(args.B)
        (shift,) = parse_vertices(args.shift)
        lo, _, hi = args.steps.partition(":")
        try:
            steps = range(int(lo), int(hi or lo) + 1)
        except ValueError:
            raise ArgumentError(f"malformed --steps {args.steps!r}") from None
        for tok in args.rho.split(","):
            rho = parse_rho(tok)
            fit = montecarlo.fit_decay(montecarlo.translate_sweep(region, A, B, shift, steps, rho), args.noise)
            rows.append(fit.csv_row(tok.strip()))
    return montecarlo.DECAY_HEADER + "\n" + "\n".join(rows) + "\n"


def cmd_double_connect(args) -> str:
    region = make_region(args.region)
    rho = parse_rho(args.rho)
    e1, e2 = _parse_edge(region, args.e1), _parse_edge(region, args.e2)
    label = "connect[v1]"
    if args.exact:
        # Exhaustive: zero stderr; n and ess report the number of enumerated pairs.
        p = doublemd.exact_connection(region, rho, e1, e2)
        pairs = sum(1 for _ in matchings.enumerate_matchings(region)) ** 2
        body = f"{label},{float(p):.17g},0,{pairs},{pairs}"
    else:
        est = doublemd.estimate_connection(region, rho, e1, e2, _chain_params(args), args.workers)
        body = est.csv_row(label)
    return montecarlo.ESTIMATE_HEADER + "\n" + body + "\n"


def _config(region, text: str) -> MatchingConfig:
    dimers = set()
    for chunk in filter(None, (c.strip() for c in text.split("|"))):
        dimers.add(_parse_edge(region, chunk))
    covered = {v for e in dimers for v in e}
    if len(covered) != 2 * len(dimers):
        raise ArgumentError("dimers overlap")
    return MatchingConfig(frozenset(set(region.vertices) - covered), frozenset(dimers))


def cmd_superpose(args) -> str:
    region = make_region(args.region)
    pd = doublemd.superpose(_config(region, args.w1), _config(region, args.w2), region)
    return pd.to_json() + "\n"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mdlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, rho=True, fmt_choices=("text", "json")):
        sp.add_argument("--region")
        if rho:
            sp.add_argument("--rho")
        sp.add_argument("--format", choices=fmt_choices, default=fmt_choices[0])
        sp.add_argument("--out")

    def chains(sp):
        sp.add_argument("--sweeps", type=int, default=20000)
        sp.add_argument("--burn-in", type=int, default=1000)
        sp.add_argument("--thinning", type=int, default=1)
        sp.add_argument("--chains", type=int, default=4)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--workers", type=int, default=montecarlo.default_workers())

    sp = sub.add_parser("exact-z", help="matching polynomial / partition function")
    common(sp)
    sp.add_argument("--poly", action="store_true")
    sp.set_defaults(func=cmd_exact_z)

    sp = sub.add_parser("exact-corr", help="exact U_{K,rho}(A,B)")
    common(sp)
    sp.add_argument("--A", required=True)
    sp.add_argument("--B", required=True)
    sp.set_defaults(func=cmd_exact_corr)

    sp = sub.add_parser("dimer-cov", help="exact dimer-dimer covariance")
    common(sp)
    sp.add_argument("--e1", required=True)
    sp.add_argument("--e2", required=True)
    sp.set_defaults(func=cmd_dimer_cov)

    sp = sub.add_parser("cluster-logz", help="truncated cluster series of log(Z/rho^|K|)")
    common(sp, fmt_choices=("csv", "json"))
    sp.add_argument("--order", type=int, required=True)
    sp.set_defaults(func=cmd_cluster_logz)

    sp = sub.add_parser("cluster-corr", help="U from truncated pinned-cluster sums")
    common(sp, fmt_choices=("csv", "json"))
    sp.add_argument("--A", required=True)
    sp.add_argument("--B", required=True)
    sp.add_argument("--order", type=int, required=True)
    sp.set_defaults(func=cmd_cluster_corr)

    sp = sub.add_parser("bounds", help="convergence check, large-rho bound, predicted decay rate")
    sp.add_argument("--rho", required=True)
    sp.add_argument("--dim", type=int, required=True)
    sp.add_argument("--asize", type=int, default=1)
    sp.add_argument("--dist", type=int, required=True)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("mcmc-corr", help="Monte Carlo estimate of U")
    common(sp, fmt_choices=("csv",))
    sp.add_argument("--A", required=True)
    sp.add_argument("--B", required=True)
    chains(sp)
    sp.set_defaults(func=cmd_mcmc_corr)

    sp = sub.add_parser("decay-fit", help="fit U ~ c' exp(-c d)")
    common(sp, fmt_choices=("csv",))
    sp.add_argument("--input", help="CSV with columns distance,value[,weight]")
    sp.add_argument("--A")
    sp.add_argument("--B")
    sp.add_argument("--shift", help="translation step for B, e.g. (0,1)")
    sp.add_argument("--steps", default="1:5", help="inclusive range k0:k1 of multiples of --shift")
    sp.add_argument("--noise", type=float, default=0.0)
    sp.set_defaults(func=cmd_decay_fit)

    sp = sub.add_parser("double-connect", help="connection probability in the double model")
    common(sp, fmt_choices=("csv",))
    sp.add_argument("--e1", required=True)
    sp.add_argument("--e2", required=True)
    sp.add_argument("--exact", action="store_true", help="exhaustive enumeration (small regions)")
    chains(sp)
    sp.set_defaults(func=cmd_double_connect)

    sp = sub.add_parser("superpose", help="path decomposition of two configurations (JSON)")
    sp.add_argument("--region", required=True)
    sp.add_argument("--w1", required=True, help="dimers as '(0,0);(1,0)|(0,1);(1,1)'")
    sp.add_argument("--w2", required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_superpose)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "region", "x") is None and args.command not in ("decay-fit",):
        parser.error(f"{args.command} requires --region")
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            out = args.func(args)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
    except MDLabError as exc:
        print(f"mdlab: error: {exc}", file=sys.stderr)
        return exc.exit_code
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
