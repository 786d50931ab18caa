"""Command line: ``expotype <command> [options]``.

Exit codes: 0 completed, 2 completed with a failing or inconclusive
verdict (artifacts are still written), 1 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import artifacts as art
from .dirichlet import claim_residual, regular_configuration
from .gram import discretize, sigma_min_scan
from .measure import EXAMPLES, AtomicMeasure, DensityMeasure, frostman_scan, generate
from .partition import adapted_partition, dyadic_partition, power_partition
from .series import CONVERGENT, Tolerances
from .typebound import (SearchParams, WeightFn, adversarial_weight, candidate_sites,
                        frostman_doubling_transform, growth_log_integral, search_max_uniform,
                        search_partition, select_sites, split_measure, type_lower_bound,
                        weight_diagnostics)
from .uniform import PASS, SequenceSet, certify_uniform

OK, VERDICT, INPUT = 0, 2, 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


# --- option parsing helpers --------------------------------------------------------

def _grid(text: str) -> np.ndarray:
    try:
        lo, hi, step = (float(eval_num(t)) for t in text.split(":"))
    except ValueError:
        raise UsageError(f"--d-grid expects lo:hi:step, got {text!r}") from None
    if not (step > 0 and hi >= lo > 0):
        raise UsageError(f"--d-grid needs 0 < lo <= hi and step > 0, got {text!r}")
    return np.round(np.arange(lo, hi + step / 2, step), 10)


def _a_grid(text: str) -> np.ndarray:
    try:
        lo, hi, count = text.split(":")
        lo, hi, count = eval_num(lo), eval_num(hi), int(count)
    except ValueError:
        raise UsageError(f"--a-grid expects lo:hi:count, got {text!r}") from None
    if not (0 < lo < hi and count >= 2):
        raise UsageError(f"--a-grid needs 0 < lo < hi and count >= 2, got {text!r}")
    return np.linspace(lo, hi, count)


def eval_num(text: str) -> float:
    """A float, optionally written as a multiple of ``pi`` (``3pi``, ``pi``)."""
    t = text.strip().lower()
    if t.endswith("pi"):
        head = t[:-2].rstrip("*")
        return (float(head) if head else 1.0) * math.pi
    return float(t)


def _tol(args) -> Tolerances:
    try:
        return Tolerances(args.tol_conv, args.tol_div, args.tol_density)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _params(args) -> SearchParams:
    return SearchParams(p_exponent=args.partition_p, seed=args.seed, tol=_tol(args))


def _load_measure(args):
    if args.measure:
        return art.measure_from(art.load(args.measure, "measure"))
    if args.example:
        return _generate(args)
    raise UsageError("a measure is required: pass --measure FILE or --example NAME")


def _generate(args):
    params = {}
    for item in args.param or []:
        key, _, val = item.partition("=")
        if not _:
            raise UsageError(f"--param expects key=value, got {item!r}")
        try:
            params[key] = int(val) if val.lstrip("-").isdigit() else float(val)
        except ValueError:
            params[key] = val
    try:
        return generate(args.example, args.R if args.R is not None else 10.0, **params)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load_lambda(args, m=None):
    if args.lam:
        doc = art.load(args.lam)
        if doc["artifact"] == "sequence":
            return art.sequence_from(doc)
        if doc["artifact"] == "measure" and doc["kind"] == "atomic":
            return SequenceSet.of_measure(art.measure_from(doc))
        raise art.ArtifactError(f"{args.lam}: field 'artifact' must be a sequence or an atomic measure")
    if m is not None and isinstance(m, AtomicMeasure):
        return SequenceSet.of_measure(m)
    return None


def _partition(args, lam: SequenceSet | None, m=None):
    if args.partition == "adapted":
        if m is not None:
            return search_partition(m, candidate_sites(m, args.d or 1.0, _params(args)), _params(args))
        if lam is None or len(lam) < 2:
            raise UsageError("an adapted partition needs at least two points")
        return adapted_partition(lam.points, args.partition_p, offsets=lam.offsets)
    R = args.R
    if R is None:
        if m is not None:
            R = max(abs(m.window.left), abs(m.window.right))
        elif lam is not None and len(lam):
            R = float(np.max(np.abs(lam.points))) + 0.5
        else:
            raise UsageError("--R is required for this partition")
    if args.partition == "dyadic":
        return dyadic_partition(R)
    return power_partition(args.partition_p, R)


def _need_d(args) -> float:
    if args.d is None or not args.d > 0:
        raise UsageError("--d must be given and positive")
    return float(args.d)


def _default_lambda(args, m, p, d):
    lam = _load_lambda(args, m)
    if lam is None:
        lam = select_sites(m, d, p, _params(args))
    return lam


# --- commands ----------------------------------------------------------------------

def cmd_gen(args):
    if args.sequence:
        try:
            lo, hi, step = (eval_num(t) for t in args.sequence.split(":"))
        except ValueError:
            raise UsageError(f"--sequence expects lo:hi:step, got {args.sequence!r}") from None
        if not step > 0 or hi < lo:
            raise UsageError("--sequence needs lo <= hi and step > 0")
        n = int(math.floor((hi - lo) / step + 1e-9))
        s = SequenceSet(lo + step * np.arange(n + 1))
        if args.format == "csv":
            return art.to_csv(["point"], ((float(x),) for x in s.points)), OK
        return art.dumps(art.sequence_doc(s, {"sequence": args.sequence})), OK
    if not args.example:
        raise UsageError("gen needs --example NAME or --sequence lo:hi:step")
    m = _generate(args)
    if args.format == "csv":
        if isinstance(m, AtomicMeasure):
            rows = zip((m.positions + m.offsets).tolist(), m.masses.tolist())
            return art.to_csv(["position", "mass"], rows), OK
        rows = zip(m.lefts.tolist(), m.rights.tolist(), m.heights.tolist())
        return art.to_csv(["left", "right", "height"], rows), OK
    meta = {"example": args.example, "R": art.num(m.window.right), "param": sorted(args.param or [])}
    return art.dumps(art.measure_doc(m, meta)), OK


def cmd_certify(args):
    d = _need_d(args)
    m = _load_measure(args) if (args.measure or args.example) else None
    lam = _load_lambda(args, m)
    if lam is None or len(lam) == 0:
        raise UsageError("certify needs a nonempty sequence (--lambda FILE or an atomic measure)")
    p = _partition(args, lam, None)
    c = certify_uniform(lam, p, d, _tol(args))
    code = OK if c.verdict == PASS else VERDICT
    if args.format == "csv":
        rows = zip(p.index.tolist(), p.lefts.tolist(), p.rights.tolist(), c.counts.tolist(),
                   c.interval_energies.tolist(), c.density_report.deviations.tolist())
        return art.to_csv(["n", "left", "right", "count", "energy", "density_deviation"], rows), code
    return art.dumps(art.certificate_doc(c)), code


def _estimate_out(args, est, extra=None):
    code = OK if est.lower_bound > 0 else VERDICT
    if args.format == "csv":
        rows = est.star_mass_diag.rows()
        return art.to_csv(["n", "term", "partial_sum"], rows), code
    return art.dumps(art.estimate_doc(est, extra)), code


def cmd_type_bound(args):
    d = _need_d(args)
    m = _load_measure(args)
    p = _partition(args, None, m)
    lam = _default_lambda(args, m, p, d)
    return _estimate_out(args, type_lower_bound(m, lam, p, d, _tol(args)))


def cmd_search(args):
    m = _load_measure(args)
    grid = _grid(args.d_grid) if args.d_grid else None
    est = search_max_uniform(m, grid, _params(args))
    if args.format == "csv":
        code = OK if est.lower_bound > 0 else VERDICT
        return art.to_csv(["d", "status", "bound"], est.search_log), code
    return _estimate_out(args, est)


def cmd_split(args):
    d = _need_d(args)
    if args.c1 is None:
        raise UsageError("split needs --c1 (and optionally --c2, default d - c1)")
    c1 = float(args.c1)
    c2 = float(args.c2) if args.c2 is not None else d - c1
    m = _load_measure(args)
    p = _partition(args, None, m)
    est = type_lower_bound(m, _default_lambda(args, m, p, d), p, d, _tol(args))
    try:
        r = split_measure(m, est, c1, c2, _tol(args))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    code = OK if (r.est1.lower_bound > 0 or c1 == 0) and (r.est2.lower_bound > 0 or c2 == 0) else VERDICT
    if args.format == "csv":
        rows = [("m1", c1, r.est1.lower_bound), ("m2", c2, r.est2.lower_bound)]
        return art.to_csv(["part", "level", "bound"], rows), code
    doc = art.header("split")
    doc.update(c1=art.num(c1), c2=art.num(c2), seed_estimate=art.estimate_doc(est),
               m1=art.measure_doc(r.m1), m2=art.measure_doc(r.m2),
               est1=art.estimate_doc(r.est1), est2=art.estimate_doc(r.est2),
               gamma=art.sequence_doc(r.gamma), psi=art.sequence_doc(r.psi))
    return art.dumps(doc), code


def cmd_frostman_double(args):
    d = _need_d(args)
    m = _load_measure(args)
    p = _partition(args, None, m)
    est = type_lower_bound(m, _default_lambda(args, m, p, d), p, d, _tol(args))
    if est.lower_bound == 0:
        raise UsageError(f"the seed certificate at d = {d} does not pass: {'; '.join(est.caveats)}")
    alpha, C = args.alpha, args.C
    if alpha is None or C is None:
        fs = frostman_scan(m, [1.0, 0.1, 0.01, 0.001])
        if fs.alpha_hat is None or fs.alpha_hat == 0:
            raise UsageError("no Frostman exponent found; pass --alpha and --C")
        alpha = fs.alpha_hat if alpha is None else alpha
        C = fs.c_hat if C is None else C
    r = frostman_doubling_transform(m, est, alpha, C, _tol(args))
    code = OK if (r.estimate.lower_bound > 0 and not r.flags) else VERDICT
    if args.format == "csv":
        rows = zip(r.parts.tolist(), r.qualifying.tolist(), r.part_lengths.tolist(), r.separations.tolist())
        return art.to_csv(["parts", "qualifying", "part_length", "separation"], rows), code
    doc = art.header("doubling")
    doc.update(alpha=art.num(alpha), C=art.num(C), seed_estimate=art.estimate_doc(est),
               gamma=art.sequence_doc(r.gamma), estimate=art.estimate_doc(r.estimate),
               parts=[int(k) for k in r.parts], qualifying=[int(k) for k in r.qualifying],
               separation_diag=art.diag_doc(r.separation_diag),
               flags=[{"star": n, "reason": why} for n, why in r.flags])
    return art.dumps(doc), code


def _diag_out(args, kind, diags: dict, code):
    if args.format == "csv":
        rows = []
        for name, dg in diags.items():
            rows.extend((name, n, t, s) for n, t, s in dg.rows())
        return art.to_csv(["series", "n", "term", "partial_sum"], rows), code
    doc = art.header(kind)
    doc.update({k: art.diag_doc(v) for k, v in diags.items()})
    return art.dumps(doc), code


def cmd_growth(args):
    m = _load_measure(args)
    if not isinstance(m, DensityMeasure):
        raise UsageError("growth needs a density measure")
    g = growth_log_integral(m, tol=_tol(args))
    code = VERDICT if g.verdict not in (CONVERGENT, "divergent") else OK
    return _diag_out(args, "growth", {"growth": g}, code)


def cmd_weights(args):
    m = _load_measure(args)
    lam = _load_lambda(args, m)
    if lam is None:
        p = _partition(args, None, m)
        lam = select_sites(m, _need_d(args), p, _params(args))
    base = WeightFn.constant(1.0)
    if args.weight == "exp-abs":
        R = max(abs(m.window.left), abs(m.window.right))
        xs = np.linspace(-R, R, int(2 * R) * 4 + 1)
        w = WeightFn(xs, np.exp(np.abs(xs)))
    elif args.weight == "adversarial":
        w = adversarial_weight(m, base, lam)
    else:
        w = base
    mu_w, logs = weight_diagnostics(m, w, lam, tol=_tol(args))
    code = OK if mu_w.verdict == CONVERGENT and logs.verdict == CONVERGENT else VERDICT
    return _diag_out(args, "weights", {"mu_weight": mu_w, "log_series": logs}, code)


def cmd_gram_scan(args):
    m = _load_measure(args)
    dm = discretize(m, args.nodes_per_piece)
    if args.nodes:
        dm = dm.nearest(args.nodes, 0.0)
    a_grid = _a_grid(args.a_grid)
    r = sigma_min_scan(dm, a_grid, args.kappa, args.threshold, 0.0)
    code = OK if r.transition_estimate is not None else VERDICT
    if args.format == "csv":
        return art.to_csv(["a", "sigma_min", "decay_slope"], r.rows()), code
    return art.dumps(art.gram_doc(r)), code


def cmd_dirichlet_check(args):
    try:
        scales = [int(s) for s in args.scales.split(",")]
    except ValueError:
        raise UsageError(f"--scales expects integers separated by commas, got {args.scales!r}") from None
    if any(s < 1 for s in scales):
        raise UsageError("--scales must be positive")
    checks = [claim_residual(*regular_configuration(n, args.ramp_length)) for n in scales]
    res = [c.residual_over_S2 for c in checks]
    ratios = [abs(b) / abs(a) if a else math.inf for a, b in zip(res[:-1], res[1:])]
    bounded = all(1 / 3 <= q <= 3 for q in ratios)
    code = OK if bounded else VERDICT
    if args.format == "csv":
        rows = [(c.scale, c.lhs, c.rhs, c.residual_over_S2) for c in checks]
        return art.to_csv(["scale", "lhs", "rhs", "residual_over_S2"], rows), code
    doc = art.header("dirichlet")
    doc.update(records=[{"scale": art.num(c.scale), "lhs": art.num(c.lhs), "rhs": art.num(c.rhs),
                         "residual_over_S2": art.num(c.residual_over_S2)} for c in checks],
               ratios=art.nums(ratios), bounded=bounded, ramp_length=art.num(args.ramp_length))
    return art.dumps(doc), code


def cmd_compare(args):
    if not (args.estimate and args.gram):
        raise UsageError("compare needs --estimate FILE and --gram FILE")
    est = art.load(args.estimate, "type_estimate")
    gram = art.load(args.gram, "gram_scan")
    bound = est["lower_bound"]
    trans = gram["transition_estimate"]
    rel = (abs(trans - bound) / bound) if (trans is not None and bound) else None
    rows = [("type_lower_bound", bound), ("gram_transition", trans), ("relative_gap", art.num(rel))]
    if args.format == "csv":
        return art.to_csv(["quantity", "value"], rows), OK
    doc = art.header("compare")
    doc.update(lower_bound=bound, transition_estimate=trans, relative_gap=art.num(rel),
               estimate_caveats=est["caveats"], gram_caveat=gram["caveat"])
    return art.dumps(doc), OK


def cmd_validate(args):
    if not args.file:
        raise UsageError("validate needs a FILE")
    doc = art.load(args.file)
    return art.dumps({"artifact": doc["artifact"], "valid": True}), OK


COMMANDS = {
    "gen": cmd_gen, "certify": cmd_certify, "type-bound": cmd_type_bound, "search": cmd_search,
    "split": cmd_split, "frostman-double": cmd_frostman_double, "growth": cmd_growth,
    "weights": cmd_weights, "gram-scan": cmd_gram_scan, "dirichlet-check": cmd_dirichlet_check,
    "compare": cmd_compare, "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--config", help="JSON file of option values; flags on the command line win")
    g.add_argument("--example", choices=EXAMPLES, help="built-in example measure")
    g.add_argument("--param", action="append", metavar="KEY=VALUE", help="generator parameter")
    g.add_argument("--measure", help="measure artifact")
    g.add_argument("--lambda", dest="lam", metavar="FILE", help="sequence artifact or atomic measure")
    g.add_argument("--R", type=float, help="window radius")
    g.add_argument("--partition", choices=("adapted", "power", "dyadic"), default="adapted")
    g.add_argument("--partition-p", type=float, default=1.5, help="power-partition exponent")
    g.add_argument("--d", type=float, help="uniformity level")
    g.add_argument("--d-grid", metavar="LO:HI:STEP", help="search grid, default 0.05:3:0.05")
    g.add_argument("--tol-conv", type=float, default=0.05)
    g.add_argument("--tol-div", type=float, default=0.5)
    g.add_argument("--tol-density", type=float, default=0.05)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", help="output path (stdout if omitted)")
    g.add_argument("--format", choices=("json", "csv"), default="json")

    parser = _Parser(prog="expotype", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "gen": "generate an example measure or an arithmetic sequence",
        "certify": "uniformity certificate of a sequence",
        "type-bound": "type lower bound from a sequence",
        "search": "largest certifiable density over a grid",
        "split": "split a measure into two of prescribed levels",
        "frostman-double": "doubling transform of a passing certificate",
        "growth": "growth log-integral of a density",
        "weights": "weight diagnostics",
        "gram-scan": "smallest singular values of exponential matrices",
        "dirichlet-check": "profile energy against its pair-energy expression",
        "compare": "type bound next to the Gram transition",
        "validate": "check an artifact against its schema",
    }
    subs = {name: sub.add_parser(name, parents=[common], help=h) for name, h in helps.items()}
    subs["gen"].add_argument("--sequence", metavar="LO:HI:STEP")
    subs["split"].add_argument("--c1", type=float)
    subs["split"].add_argument("--c2", type=float)
    subs["frostman-double"].add_argument("--alpha", type=float)
    subs["frostman-double"].add_argument("--C", type=float)
    subs["weights"].add_argument("--weight", choices=("one", "exp-abs", "adversarial"), default="one")
    gs = subs["gram-scan"]
    gs.add_argument("--nodes", type=int, help="keep the N nodes nearest the origin")
    gs.add_argument("--nodes-per-piece", type=int, default=8)
    gs.add_argument("--a-grid", default="pi:3pi:33", metavar="LO:HI:COUNT")
    gs.add_argument("--kappa", type=float, default=4.0)
    gs.add_argument("--threshold", type=float, default=0.02)
    dc = subs["dirichlet-check"]
    dc.add_argument("--scales", default="25,50,100,200")
    dc.add_argument("--ramp-length", type=float, default=0.5)
    subs["compare"].add_argument("--estimate")
    subs["compare"].add_argument("--gram")
    subs["validate"].add_argument("file", nargs="?")
    parser._subs = subs
    return parser


def _apply_config(parser, argv):
    """Re-parse with config-file values as defaults so that flags win."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise art.ArtifactError(f"{args.config}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise art.ArtifactError(f"{args.config}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise art.ArtifactError(f"{args.config}: top level must be an object")
    sub = parser._subs[args.command]
    known = {a.dest for a in sub._actions}
    defaults = {}
    for key, val in cfg.items():
        dest = {"lambda": "lam"}.get(key, key.replace("-", "_"))
        if dest not in known or dest in ("config", "help"):
            raise art.ArtifactError(f"{args.config}: field '{key}': unknown option")
        defaults[dest] = val
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        text, code = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT
    except art.ArtifactError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return INPUT
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
