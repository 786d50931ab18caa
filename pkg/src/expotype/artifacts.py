"""JSON and CSV artifacts.

Positions and masses, which must round-trip bit for bit, are stored as
``repr`` strings.  Diagnostic numbers are rounded to 12 significant digits.
Every document carries ``artifact`` (its kind) and ``version``.
"""

from __future__ import annotations

import csv
import io
import json
import math

import jsonschema
import numpy as np

from . import __version__
from .gram import GramScanReport
from .measure import AtomicMeasure, DensityMeasure, Interval, Measure
from .partition import Partition
from .series import SeriesDiagnostics, Tolerances
from .uniform import SequenceSet, UniformityCertificate


class ArtifactError(ValueError):
    """Malformed artifact; the message names the file position or field."""


# --- number encodings ----------------------------------------------------------

def num(x) -> float | str | None:
    """Decimal with 12 significant digits; non-finite values as strings."""
    if x is None:
        return None
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(f"{x:.12g}")


def nums(a) -> list:
    return [num(v) for v in np.asarray(a, dtype=float).ravel()]


def exact(a) -> list[str]:
    return [repr(float(v)) for v in np.asarray(a, dtype=float).ravel()]


def unexact(a) -> np.ndarray:
    return np.array([float(v) for v in a], dtype=float)


def _interval(i: Interval) -> dict:
    return {"left": repr(float(i.left)), "right": repr(float(i.right)),
            "closed_left": i.closed_left, "closed_right": i.closed_right}


def _uninterval(d: dict) -> Interval:
    return Interval(float(d["left"]), float(d["right"]), d["closed_left"], d["closed_right"])


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=1, allow_nan=False) + "\n"


def header(kind: str) -> dict:
    return {"artifact": kind, "version": __version__}


# --- schemas -------------------------------------------------------------------------

_EXACT = {"type": "array", "items": {"type": "string"}}
_INTERVAL = {"type": "object", "required": ["left", "right", "closed_left", "closed_right"],
             "properties": {"left": {"type": "string"}, "right": {"type": "string"},
                            "closed_left": {"type": "boolean"}, "closed_right": {"type": "boolean"}}}
_NUMS = {"type": "array", "items": {"type": ["number", "string", "null"]}}
_DIAG = {"type": "object", "required": ["index", "terms", "partial_sums", "tail_slope", "verdict", "flags"],
         "properties": {"terms": _NUMS, "partial_sums": _NUMS,
                        "verdict": {"enum": ["convergent", "divergent", "inconclusive"]}}}

SCHEMAS = {
    "measure": {
        "type": "object",
        "required": ["artifact", "version", "kind", "window"],
        "properties": {
            "kind": {"enum": ["atomic", "density"]},
            "window": _INTERVAL,
            "positions": _EXACT, "offsets": _EXACT, "masses": _EXACT,
            "lefts": _EXACT, "rights": _EXACT, "heights": _EXACT,
            "left_offs": _EXACT, "right_offs": _EXACT,
        },
        "if": {"properties": {"kind": {"const": "atomic"}}},
        "then": {"required": ["positions", "offsets", "masses"]},
        "else": {"required": ["lefts", "rights", "heights", "left_offs", "right_offs"]},
    },
    "sequence": {"type": "object", "required": ["artifact", "version", "points", "offsets"],
                 "properties": {"points": _EXACT, "offsets": _EXACT}},
    "certificate": {"type": "object",
                    "required": ["artifact", "version", "lambda", "partition", "d", "verdict",
                                 "energy_diag", "shortness_diag", "counts"],
                    "properties": {"verdict": {"enum": ["pass", "fail", "inconclusive"]},
                                   "energy_diag": _DIAG, "shortness_diag": _DIAG}},
    "type_estimate": {"type": "object",
                      "required": ["artifact", "version", "lower_bound", "d", "caveats", "window",
                                   "star_mass_diag"],
                      "properties": {"lower_bound": {"type": "number", "minimum": 0},
                                     "caveats": {"type": "array", "items": {"type": "string"}},
                                     "star_mass_diag": _DIAG}},
    "gram_scan": {"type": "object",
                  "required": ["artifact", "version", "a_grid", "sigma_min", "decay_slopes",
                               "transition_estimate", "caveat", "n_nodes"],
                  "properties": {"a_grid": _NUMS, "sigma_min": _NUMS, "decay_slopes": _NUMS,
                                 "transition_estimate": {"type": ["number", "null"]},
                                 "caveat": {"type": "string"}}},
}
SCHEMAS["split"] = {"type": "object",
                    "required": ["artifact", "version", "c1", "c2", "m1", "m2", "est1", "est2", "gamma", "psi"],
                    "properties": {"m1": SCHEMAS["measure"], "m2": SCHEMAS["measure"],
                                   "est1": SCHEMAS["type_estimate"], "est2": SCHEMAS["type_estimate"],
                                   "gamma": SCHEMAS["sequence"], "psi": SCHEMAS["sequence"]}}
SCHEMAS["doubling"] = {"type": "object",
                       "required": ["artifact", "version", "alpha", "C", "gamma", "estimate", "flags"],
                       "properties": {"gamma": SCHEMAS["sequence"], "estimate": SCHEMAS["type_estimate"],
                                      "flags": {"type": "array", "items": {"type": "object",
                                                "required": ["star", "reason"]}}}}
SCHEMAS["growth"] = {"type": "object", "required": ["artifact", "version", "growth"],
                     "properties": {"growth": _DIAG}}
SCHEMAS["weights"] = {"type": "object", "required": ["artifact", "version", "mu_weight", "log_series"],
                      "properties": {"mu_weight": _DIAG, "log_series": _DIAG}}
SCHEMAS["dirichlet"] = {"type": "object", "required": ["artifact", "version", "records", "bounded"],
                        "properties": {"records": {"type": "array", "items": {
                            "type": "object", "required": ["scale", "lhs", "rhs", "residual_over_S2"]}},
                            "bounded": {"type": "boolean"}}}
SCHEMAS["compare"] = {"type": "object",
                      "required": ["artifact", "version", "lower_bound", "transition_estimate", "relative_gap"]}


def load(path: str, kind: str | None = None) -> dict:
    """Read and validate an artifact; raises :class:`ArtifactError`."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ArtifactError(f"{path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict) or "artifact" not in doc:
        raise ArtifactError(f"{path}: field 'artifact' missing")
    if kind is not None and doc["artifact"] != kind:
        raise ArtifactError(f"{path}: field 'artifact' is {doc['artifact']!r}, expected {kind!r}")
    schema = SCHEMAS.get(doc["artifact"])
    if schema is None:
        raise ArtifactError(f"{path}: field 'artifact' has unknown kind {doc['artifact']!r}")
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ArtifactError(f"{path}: field '{where}': {exc.message}") from None
    return doc


# --- measures and sequences -------------------------------------------------------------

def measure_doc(m: Measure, meta: dict | None = None) -> dict:
    doc = header("measure")
    doc.update(kind=m.kind, window=_interval(m.window), meta=meta or {})
    if isinstance(m, AtomicMeasure):
        doc.update(positions=exact(m.positions), offsets=exact(m.offsets), masses=exact(m.masses))
    else:
        doc.update(lefts=exact(m.lefts), rights=exact(m.rights), heights=exact(m.heights),
                   left_offs=exact(m.left_offs), right_offs=exact(m.right_offs))
    return doc


def measure_from(doc: dict) -> Measure:
    try:
        w = _uninterval(doc["window"])
        if doc["kind"] == "atomic":
            return AtomicMeasure(unexact(doc["positions"]), unexact(doc["masses"]), w, unexact(doc["offsets"]))
        return DensityMeasure(unexact(doc["lefts"]), unexact(doc["rights"]), unexact(doc["heights"]), w,
                              unexact(doc["left_offs"]), unexact(doc["right_offs"]))
    except (ValueError, KeyError) as exc:
        raise ArtifactError(f"measure: {exc}") from None


def sequence_doc(s: SequenceSet, meta: dict | None = None) -> dict:
    doc = header("sequence")
    doc.update(points=exact(s.points), offsets=exact(s.offsets), meta=meta or {})
    return doc


def sequence_from(doc: dict) -> SequenceSet:
    try:
        return SequenceSet(unexact(doc["points"]), unexact(doc["offsets"]))
    except ValueError as exc:
        raise ArtifactError(f"sequence: {exc}") from None


# --- diagnostics -------------------------------------------------------------------------

def diag_doc(d: SeriesDiagnostics) -> dict:
    return {"index": nums(d.index), "terms": nums(d.terms), "partial_sums": nums(d.partial_sums),
            "tail_slope": num(d.tail_slope), "verdict": d.verdict, "flags": list(d.flags)}


def tolerances_doc(t: Tolerances) -> dict:
    return {"conv": num(t.conv), "div": num(t.div), "density": num(t.density)}


def certificate_doc(c: UniformityCertificate) -> dict:
    doc = header("certificate")
    doc.update({
        "lambda": {"points": exact(c.lam.points), "offsets": exact(c.lam.offsets)},
        "partition": exact(c.partition.breakpoints),
        "d": num(c.d),
        "counts": [int(k) for k in c.counts],
        "interval_energies": nums(c.interval_energies),
        "density_report": {"deviations": nums(c.density_report.deviations),
                           "side_trend": nums(c.density_report.side_trend),
                           "tolerance": num(c.density_report.tolerance)},
        "energy_diag": diag_doc(c.energy_diag),
        "shortness_diag": diag_doc(c.shortness_diag),
        "energy_terms_nonnegative": c.energy_terms_nonnegative,
        "tolerances": tolerances_doc(c.tolerances),
        "verdict": c.verdict,
        "window": _interval(c.window),
        "notes": list(c.notes),
    })
    return doc


def estimate_doc(e, extra: dict | None = None) -> dict:
    doc = header("type_estimate")
    doc.update({
        "lower_bound": num(e.lower_bound),
        "d": num(e.d),
        "certificate": certificate_doc(e.certificate) if e.certificate is not None else None,
        "star_mass_diag": diag_doc(e.star_mass_diag),
        "window": _interval(e.window),
        "caveats": list(e.caveats),
        "search_log": [{"d": num(d), "status": v, "bound": num(b)} for d, v, b in e.search_log],
    })
    if extra:
        doc.update(extra)
    return doc


def gram_doc(r: GramScanReport) -> dict:
    doc = header("gram_scan")
    doc.update({
        "a_grid": nums(r.a_grid), "sigma_min": nums(r.sigma_min), "decay_slopes": nums(r.decay_slopes),
        "n_nodes": r.n_nodes, "kappa": num(r.kappa), "node_counts": list(r.node_counts),
        "sigma_nested": [nums(row) for row in r.sigma_nested], "threshold": num(r.threshold),
        "transition_estimate": num(r.transition_estimate), "freq_rule": r.freq_rule, "caveat": r.caveat,
    })
    return doc


# --- csv -------------------------------------------------------------------------------

def to_csv(header_row, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header_row)
    for row in rows:
        w.writerow([num(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()
