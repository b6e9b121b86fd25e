"""Experiment harness and command line front end.

Named experiments bind a domain, an engine, and a list of boundary windows
to a fixed recipe of diagnostics; results are emitted as a flat CSV, a JSON
manifest carrying every number together with its tolerance or flag, and
self-contained SVG convergence plots.  Runs are deterministic for a given
config and seed, and files are written atomically so an interrupted run
never leaves a torn artifact.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
import time

import numpy as np

from . import __version__
from .errors import ConfmapError, InvalidInputError
from .geometry import (
    JordanCurve,
    SubArc,
    arc_length_estimate,
    builtin_curve,
    candidate_top_edge,
    collar_extend,
    curve_to_json,
    is_simple,
    load_curve_file,
    point_in_jordan,
    polyline_length,
    random_simple_polygon,
)
from .conformal import (
    build_closed_form,
    build_schwarz_christoffel,
    build_zipper,
    load_engine,
    save_engine,
)
from .diagnostics import (
    ArcWindow,
    DefectGrid,
    EquivalenceBudgets,
    PartitionLadder,
    QuadSpec,
    RadialProfile,
    boundary_arc_length,
    cauchy_defect,
    default_r_grid,
    equivalence_suite,
    estimate_nontangential_limit,
    image_curve_length,
    l1_limit_profile,
    liminf_check,
    monotonicity_scan,
    radial_mean,
)

TWO_PI = 2.0 * math.pi

CSV_COLUMNS = ("experiment", "domain", "engine", "a", "b", "r",
               "quantity", "value", "tolerance", "flag")

# flags that mark a run as unclean; verdict words like "divergent" are
# findings, not failures
_BAD_FLAGS = frozenset({
    "violated", "inconsistent", "gap-exceeded", "off-target", "non-monotone",
    "not-settled", "above-threshold", "failed", "not-converged", "bad-fit",
})

_OK_EXIT, _FLAG_EXIT, _ERROR_EXIT = 0, 2, 1


# -- strict configuration ----------------------------------------------------------


def _check_keys(obj: dict, where: str, required, optional=()):
    if not isinstance(obj, dict):
        raise InvalidInputError(f"{where} must be an object")
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise InvalidInputError(f"{where}: unknown keys {sorted(unknown)}")
    missing = set(required) - set(obj)
    if missing:
        raise InvalidInputError(f"{where}: missing keys {sorted(missing)}")


class ExperimentConfig:
    """Validated run description; rejects any key it does not understand."""

    FIELDS = ("experiment", "domain", "engine", "windows", "r_grid",
              "schedule", "output_dir", "seed")

    def __init__(self, experiment, domain, engine, windows, r_grid,
                 schedule, output_dir, seed):
        self.experiment = str(experiment)
        self.domain = domain
        self.engine = engine
        self.windows = list(windows)
        self.r_grid = dict(r_grid)
        self.schedule = dict(schedule)
        self.output_dir = str(output_dir)
        self.seed = int(seed)
        self._validate()

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        _check_keys(obj, "config", cls.FIELDS)
        return cls(**{k: obj[k] for k in cls.FIELDS})

    def _validate(self):
        if self.experiment not in EXPERIMENTS:
            raise InvalidInputError(
                f"unknown experiment {self.experiment!r}; "
                f"builtins: {', '.join(sorted(EXPERIMENTS))}")
        _check_keys(self.domain, "domain", (), ("builtin", "params", "vertex_file"))
        if ("builtin" in self.domain) == ("vertex_file" in self.domain):
            raise InvalidInputError("domain needs exactly one of builtin/vertex_file")
        if "vertex_file" in self.domain and not os.path.exists(self.domain["vertex_file"]):
            raise InvalidInputError(f"vertex file {self.domain['vertex_file']!r} not found")
        kind = self.engine.get("kind")
        if kind == "sc":
            _check_keys(self.engine, "engine", ("kind",), ("center",))
        elif kind == "zipper":
            _check_keys(self.engine, "engine", ("kind",),
                        ("center", "samples", "drop_indistinguishable"))
        elif kind == "closed-form":
            _check_keys(self.engine, "engine", ("kind", "name"), ("params",))
        elif kind == "none":
            _check_keys(self.engine, "engine", ("kind",))
        else:
            raise InvalidInputError(f"engine kind must be sc/zipper/closed-form/none, got {kind!r}")
        for w in self.windows:
            _window_spec_check(w)
        _check_keys(self.r_grid, "r_grid", ("levels",), ("stride",))
        levels = int(self.r_grid["levels"])
        if not 1 <= levels <= 40:
            raise InvalidInputError("r_grid.levels out of range")
        if not 1 <= int(self.r_grid.get("stride", 1)) <= levels:
            raise InvalidInputError("r_grid.stride out of range")
        _check_keys(self.schedule, "schedule", ("start", "stop"))
        if not 1 <= int(self.schedule["start"]) < int(self.schedule["stop"]) <= 30:
            raise InvalidInputError("schedule must satisfy 1 <= start < stop <= 30")

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "domain": self.domain,
            "engine": self.engine,
            "windows": self.windows,
            "r_grid": self.r_grid,
            "schedule": self.schedule,
            "output_dir": self.output_dir,
            "seed": self.seed,
        }

    def grid(self) -> np.ndarray:
        g = default_r_grid(int(self.r_grid["levels"]))
        return g[:: int(self.r_grid.get("stride", 1))]

    def levels(self) -> list:
        return list(range(int(self.schedule["start"]), int(self.schedule["stop"])))


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return ExperimentConfig.from_dict(json.load(fh))


def _window_spec_check(spec):
    if spec == "full":
        return
    if isinstance(spec, (list, tuple)) and len(spec) == 2:
        a, b = float(spec[0]), float(spec[1])
        ArcWindow(a, b)
        return
    if isinstance(spec, dict):
        _check_keys(spec, "window", ("anchor", "lo", "hi"), ("index",))
        if spec["anchor"] not in ("crowding", "prevertex", "prevertex-mid"):
            raise InvalidInputError(f"unknown window anchor {spec['anchor']!r}")
        if not float(spec["lo"]) < float(spec["hi"]):
            raise InvalidInputError("window offsets need lo < hi")
        return
    raise InvalidInputError(f"bad window spec {spec!r}")


def _crowding_angle(engine) -> float:
    """Angle where the boundary table packs tightest (accumulation preimage)."""
    ang = getattr(engine, "sample_angles", None)
    if ang is None:
        ang = engine.boundary_table().angles
    ang = np.sort(np.mod(np.asarray(ang, dtype=float), TWO_PI))
    gaps = np.diff(ang)
    k = int(np.argmin(gaps))
    return float(0.5 * (ang[k] + ang[k + 1]))


def resolve_window(spec, engine):
    """Window spec from a config into an ArcWindow (None = full circle)."""
    if spec == "full":
        return None
    if isinstance(spec, (list, tuple)):
        return ArcWindow(float(spec[0]), float(spec[1]))
    anchor = spec["anchor"]
    if anchor == "crowding":
        t0 = _crowding_angle(engine)
    else:
        pre = getattr(engine, "prevertex_angles", None)
        if pre is None:
            raise InvalidInputError("prevertex anchors need a polygon engine")
        pre = np.sort(np.mod(np.asarray(pre, dtype=float), TWO_PI))
        i = int(spec.get("index", 0)) % pre.size
        if anchor == "prevertex":
            t0 = float(pre[i])
        else:
            nxt = pre[(i + 1) % pre.size] + (TWO_PI if i + 1 == pre.size else 0.0)
            t0 = float(0.5 * (pre[i] + nxt))
    return ArcWindow(t0 + float(spec["lo"]), t0 + float(spec["hi"]))


# -- rows, CSV, atomic files --------------------------------------------------------


def format_number(x) -> str:
    """Shortest decimal that round-trips; the CSV byte-stability contract."""
    return repr(float(x))


class RowCollector:
    def __init__(self, experiment: str, domain: str, engine: str):
        self.experiment = experiment
        self.domain = domain
        self.engine = engine
        self.rows = []

    def add(self, window, r, quantity, value, tolerance=None, flag=""):
        if window is None:
            a, b = 0.0, TWO_PI
        elif isinstance(window, ArcWindow):
            a, b = window.a, window.b
        else:
            a, b = float(window[0]), float(window[1])
        if r is None:
            r_txt = ""
        elif isinstance(r, tuple):
            r_txt = format_number(r[0]) + "/" + format_number(r[1])
        else:
            r_txt = format_number(r)
        self.rows.append({
            "experiment": self.experiment,
            "domain": self.domain,
            "engine": self.engine,
            "a": format_number(a),
            "b": format_number(b),
            "r": r_txt,
            "quantity": quantity,
            "value": format_number(value),
            "tolerance": "" if tolerance is None else format_number(tolerance),
            "flag": flag,
        })

    def clean(self) -> bool:
        return all(row["flag"] not in _BAD_FLAGS for row in self.rows)


def rows_to_csv(rows) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(row[c] for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def _atomic_write(path, text: str):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- SVG plots --------------------------------------------------------------------


_PLOT_COLORS = ("#1f6fb2", "#c94f2a", "#3a8c5f", "#7a4fa3", "#b2861f")


def _series_from(obj):
    """(label, x, y) triples plus axis captions for the supported report types."""
    if isinstance(obj, PartitionLadder):
        x = np.asarray(obj.segment_counts, dtype=float)
        y = np.asarray(obj.sums, dtype=float)
        return [("partition-sum", x, y)], "segments", "inscribed length"
    if isinstance(obj, DefectGrid):
        x = np.array([1.0 - r2 for _, r2 in obj.r_pairs])
        return [("cauchy-defect", x, np.asarray(obj.defects, dtype=float))], "1 - r", "defect"
    if isinstance(obj, RadialProfile):
        x = 1.0 - np.asarray(obj.r_values, dtype=float)
        return [(obj.quantity, x, np.asarray(obj.values, dtype=float))], "1 - r", obj.quantity
    if isinstance(obj, dict):
        out = [(str(k), np.asarray(v[0], dtype=float), np.asarray(v[1], dtype=float))
               for k, v in obj.items()]
        return out, "x", "value"
    raise InvalidInputError(f"cannot plot {type(obj).__name__}")


def _axis_transform(values_list):
    vals = np.concatenate(values_list)
    pos = vals[vals > 0]
    # log axes once the data spans more than two decades
    use_log = pos.size == vals.size and pos.size > 0 and pos.max() / pos.min() > 100.0
    if use_log:
        return (lambda v: np.log10(v)), True
    return (lambda v: np.asarray(v, dtype=float)), False


def _ticks(lo, hi, log_scale):
    if log_scale:
        lo_d, hi_d = int(math.floor(lo)), int(math.ceil(hi))
        step = max(1, (hi_d - lo_d) // 6)
        return [(float(d), "1e%d" % d) for d in range(lo_d, hi_d + 1, step)]
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / 5.0
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min(s for s in (mag, 2 * mag, 5 * mag, 10 * mag) if s >= raw)
    first = math.ceil(lo / step) * step
    out = []
    v = first
    while v <= hi + 1e-12 * step:
        out.append((v, "%g" % v))
        v += step
    return out


def emit_plot(obj, path, title: str = None):
    """Self-contained SVG of a profile, defect grid, ladder, or label->series dict."""
    series, x_caption, y_caption = _series_from(obj)
    if not series or any(x.size == 0 for _, x, _ in series):
        raise InvalidInputError("nothing to plot")
    tx, x_log = _axis_transform([x for _, x, _ in series])
    ty, y_log = _axis_transform([y for _, _, y in series])

    W, H, ML, MR, MT, MB = 640, 400, 62, 16, 28, 44
    xs = [tx(x) for _, x, _ in series]
    ys = [ty(y) for _, _, y in series]
    x_lo = min(float(np.min(v)) for v in xs)
    x_hi = max(float(np.max(v)) for v in xs)
    y_lo = min(float(np.min(v)) for v in ys)
    y_hi = max(float(np.max(v)) for v in ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def px(v):
        return ML + (v - x_lo) / (x_hi - x_lo) * (W - ML - MR)

    def py(v):
        return H - MB - (v - y_lo) / (y_hi - y_lo) * (H - MT - MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {W} {H}" '
        f'font-family="monospace" font-size="11">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<line x1="{ML}" y1="{H - MB}" x2="{W - MR}" y2="{H - MB}" stroke="black"/>',
        f'<line x1="{ML}" y1="{MT}" x2="{ML}" y2="{H - MB}" stroke="black"/>',
    ]
    if title:
        parts.append(f'<text x="{ML}" y="{MT - 10}" font-size="13">{title}</text>')
    for v, label in _ticks(x_lo, x_hi, x_log):
        if not x_lo - 1e-9 <= v <= x_hi + 1e-9:
            continue
        x = px(v)
        parts.append(f'<line x1="{x:.2f}" y1="{H - MB}" x2="{x:.2f}" y2="{H - MB + 4}" stroke="black"/>')
        parts.append(f'<text x="{x:.2f}" y="{H - MB + 16}" text-anchor="middle">{label}</text>')
    for v, label in _ticks(y_lo, y_hi, y_log):
        if not y_lo - 1e-9 <= v <= y_hi + 1e-9:
            continue
        y = py(v)
        parts.append(f'<line x1="{ML - 4}" y1="{y:.2f}" x2="{ML}" y2="{y:.2f}" stroke="black"/>')
        parts.append(f'<text x="{ML - 7}" y="{y + 4:.2f}" text-anchor="end">{label}</text>')
    x_cap = x_caption + (" (log)" if x_log else "")
    y_cap = y_caption + (" (log)" if y_log else "")
    parts.append(f'<text x="{(ML + W - MR) / 2:.1f}" y="{H - 8}" text-anchor="middle">{x_cap}</text>')
    parts.append(f'<text x="14" y="{(MT + H - MB) / 2:.1f}" text-anchor="middle" '
                 f'transform="rotate(-90 14 {(MT + H - MB) / 2:.1f})">{y_cap}</text>')
    for i, (label, x, y) in enumerate(series):
        color = _PLOT_COLORS[i % len(_PLOT_COLORS)]
        coords = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(tx(x), ty(y)))
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = MT + 14 + 14 * i
        parts.append(f'<line x1="{W - MR - 130}" y1="{ly - 4}" x2="{W - MR - 110}" y2="{ly - 4}" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{W - MR - 105}" y="{ly}">{label}</text>')
    parts.append("</svg>")
    _atomic_write(path, "\n".join(parts) + "\n")
    return path


# -- manifest ---------------------------------------------------------------------


class RunManifest:
    """Everything a run produced: config echo, reports, rows, timings, files."""

    def __init__(self, config: dict, engine_info: dict, reports: list,
                 rows: list, timings: dict, files: list):
        self.config = config
        self.engine_info = engine_info
        self.reports = reports
        self.rows = rows
        self.timings = timings
        self.files = files
        self.version = __version__
        self.clean = all(r["flag"] not in _BAD_FLAGS for r in rows)

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "config": self.config,
            "engine": self.engine_info,
            "reports": self.reports,
            "rows": self.rows,
            "timings": self.timings,
            "files": self.files,
            "clean": self.clean,
        }


# -- domain and engine construction --------------------------------------------------


def build_domain(domain_spec: dict) -> JordanCurve:
    if "vertex_file" in domain_spec:
        return load_curve_file(domain_spec["vertex_file"])
    return builtin_curve(domain_spec["builtin"], **domain_spec.get("params", {}))


def _as_complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    return complex(v)


def build_engine_from_spec(engine_spec: dict, curve):
    kind = engine_spec["kind"]
    if kind == "none":
        return None
    if kind == "closed-form":
        params = {k: _as_complex(v) if isinstance(v, (list, tuple)) else v
                  for k, v in engine_spec.get("params", {}).items()}
        return build_closed_form(engine_spec["name"], **params)
    if curve is None:
        raise InvalidInputError(f"engine kind {kind!r} needs a domain curve")
    center = engine_spec.get("center")
    w0 = _as_complex(center) if center is not None else curve.interior_point()
    if kind == "sc":
        return build_schwarz_christoffel(curve, w0)
    n = engine_spec.get("samples")
    if n:
        samples = curve.sample(int(n))
    elif curve.kind == "polyline":
        samples = curve.as_polyline_vertices()
    else:
        samples = curve.sample(512)
    return build_zipper(samples, w0,
                        drop_indistinguishable=bool(engine_spec.get("drop_indistinguishable", False)))


def _engine_label(engine) -> str:
    if engine is None:
        return "none"
    return {"schwarz-christoffel": "sc"}.get(engine.variant, engine.variant)


def _engine_report(engine) -> dict:
    if engine is None:
        return {"kind": "none"}
    info = {"kind": _engine_label(engine)}
    res = getattr(engine, "residuals", None)
    if res:
        info["residuals"] = {k: v for k, v in res.items()}
    report = getattr(engine, "residual_report", None)
    if callable(report):
        info["residuals"] = {k: float(v) for k, v in report().items() if v is not None}
    return info


# -- shared recipe steps --------------------------------------------------------------


def _win_dict(w) -> dict:
    if w is None:
        return {"a": 0.0, "b": TWO_PI, "full": True}
    return {"a": w.a, "b": w.b, "full": False}


def _step_defect_tail(engine, col, window, reports, k_range=range(8, 15)):
    grid = [1.0 - 2.0 ** -k for k in k_range]
    prof = l1_limit_profile(engine, window, r_grid=grid)
    for (r1, r2), d in zip(prof.r_pairs, prof.defects):
        col.add(window, (r1, r2), "cauchy-defect", d, tolerance=prof.tolerance)
    flag = "below-threshold" if prof.cauchy else "above-threshold"
    col.add(window, (grid[-2], grid[-1]), "cauchy-defect-final",
            prof.final_defect, tolerance=prof.threshold, flag=flag)
    reports.append({
        "step": "cauchy-defect-tail", "window": _win_dict(window),
        "r_pairs": [[r1, r2] for r1, r2 in prof.r_pairs],
        "defects": [float(d) for d in prof.defects],
        "threshold": prof.threshold, "cauchy": prof.cauchy,
        "tolerance": prof.tolerance,
    })
    return prof


def _step_radial_series(engine, col, window, grid, reports, quantity="radial-mean"):
    vals = [radial_mean(engine, window, r) for r in grid]
    for r, v in zip(grid, vals):
        col.add(window, r, quantity, v, tolerance=QuadSpec().slack)
    reports.append({
        "step": quantity, "window": _win_dict(window),
        "r_values": [float(r) for r in grid], "values": [float(v) for v in vals],
        "tolerance": QuadSpec().slack,
    })
    return RadialProfile(ArcWindow.coerce(window), np.asarray(grid), np.asarray(vals))


def _step_image_identity(engine, col, window, r, reports, rel_tol=1e-6):
    res = image_curve_length(engine, window, r, rel_tol=rel_tol)
    tol_cross = 3.0 * (rel_tol + QuadSpec().slack) * max(abs(res.value), 1.0)
    flag = "ok" if res.cross_gap <= tol_cross else "gap-exceeded"
    col.add(window, r, "image-curve-length", res.value,
            tolerance=rel_tol * abs(res.value),
            flag="converged" if res.converged else "not-converged")
    col.add(window, r, "image-cross-gap", res.cross_gap, tolerance=tol_cross, flag=flag)
    reports.append({
        "step": "image-curve-length", "window": _win_dict(window), "r": float(r),
        "value": res.value, "levels": res.levels, "converged": res.converged,
        "rel_tol": rel_tol, "cross_gap": res.cross_gap, "cross_tolerance": tol_cross,
    })
    return res


def _step_perimeter_target(engine, col, window, r, target, rel, reports):
    res = image_curve_length(engine, window, r)
    err = abs(res.value - target) / target
    flag = "on-target" if err <= rel else "off-target"
    col.add(window, r, "image-vs-perimeter", res.value,
            tolerance=rel * target, flag=flag)
    reports.append({
        "step": "image-vs-perimeter", "window": _win_dict(window), "r": float(r),
        "value": res.value, "target": target, "rel_err": err,
        "tolerance": rel * target, "flag": flag,
    })
    return res


def _step_liminf(engine, col, window, grid, levels, reports, image_rel_tol=1e-4):
    rep = liminf_check(engine, window, r_grid=grid, schedule=levels,
                       image_rel_tol=image_rel_tol)
    top = rep.ladder.length if rep.ladder.length is not None else rep.ladder.final_sum
    col.add(window, None, "liminf-margin", rep.margin,
            tolerance=rep.tolerance, flag="holds" if rep.holds else "violated")
    reports.append({
        "step": "liminf", "window": _win_dict(window),
        "ladder_top": float(top), "ladder_verdict": rep.ladder.verdict,
        "r_values": [float(r) for r in rep.r_values],
        "image_values": [float(v) for v in rep.image_values],
        "limit_estimate": rep.limit_estimate, "margin": rep.margin,
        "tolerance": rep.tolerance, "holds": rep.holds,
    })
    return rep


def _step_equivalence(engine, col, window, grid, levels, reports, budgets=None):
    rep = equivalence_suite(engine, window, budgets=budgets, r_grid=grid,
                            schedule=levels)
    stats = {
        "boundary_arc_length": rep.ladder.final_sum,
        "radial_mean": float(rep.radial_values[-1]),
        "image_curve_length": float(rep.image_values[-1]),
    }
    for name, verdict in rep.verdicts.items():
        col.add(window, None, "equivalence-" + name.replace("_", "-"),
                stats[name], flag=verdict)
    col.add(window, None, "equivalence-distinct-verdicts",
            float(len(set(rep.verdicts.values()))),
            flag="consistent" if rep.consistent else "inconsistent")
    reports.append({
        "step": "equivalence", "window": _win_dict(window),
        "verdicts": rep.verdicts, "consistent": rep.consistent,
        "stats": stats,
        "budgets": {"ladder": rep.budgets.ladder, "growth": rep.budgets.growth,
                    "tail_range": rep.budgets.tail_range},
        "r_values": [float(r) for r in rep.r_values],
        "radial_values": [float(v) for v in rep.radial_values],
        "image_values": [float(v) for v in rep.image_values],
        "ladder_sums": [float(s) for s in rep.ladder.sums],
        "ladder_counts": [int(n) for n in rep.ladder.segment_counts],
        "distinct_verdicts": float(len(set(rep.verdicts.values()))),
    })
    return rep


def _step_monotonicity(engine, col, window, grid, reports, strict=True):
    # monotone growth is a theorem for the full-circle mean only; windowed
    # scans may dip legitimately, so strict=False reports without judging
    rep = monotonicity_scan(engine, window, r_grid=grid)
    for r, v in zip(rep.r_values, rep.values):
        col.add(window, r, "radial-mean", v, tolerance=rep.slack)
    if rep.verdict == "monotone-nondecreasing":
        flag = "monotone"
    else:
        flag = "non-monotone" if strict else "dips"
    col.add(window, None, "monotonicity-violations", float(len(rep.violations)),
            tolerance=rep.slack, flag=flag)
    reports.append({
        "step": "monotonicity", "window": _win_dict(window),
        "r_values": [float(r) for r in rep.r_values],
        "values": [float(v) for v in rep.values],
        "violations": [list(v) for v in rep.violations],
        "verdict": rep.verdict, "slack": rep.slack,
    })
    return rep


def _step_nt_limit(engine, col, t, reports):
    rep = estimate_nontangential_limit(engine, t)
    flag = "settled" if rep.converged else "not-settled"
    col.add((t, t + 1e-9), None, "nt-limit-re", rep.estimate.real, flag=flag)
    col.add((t, t + 1e-9), None, "nt-limit-im", rep.estimate.imag, flag=flag)
    reports.append({
        "step": "nt-limit", "angle": float(t),
        "estimate": [rep.estimate.real, rep.estimate.imag],
        "converged": rep.converged,
    })
    return rep


# -- experiment recipes ----------------------------------------------------------------


def _run_affine_sanity(curve, engine, cfg, col, reports, plots):
    grid = cfg.grid()
    windows = [resolve_window(w, engine) for w in cfg.windows]
    w0 = windows[0]
    # defects between consecutive grid radii are exactly zero for affine maps
    for r1, r2 in zip(grid[:-1], grid[1:]):
        d = cauchy_defect(engine, w0, float(r1), float(r2))
        col.add(w0, (float(r1), float(r2)), "cauchy-defect", d, tolerance=1e-12,
                flag="exact" if abs(d) <= 1e-12 else "above-threshold")
    c = abs(engine.derivative(np.array([0.0 + 0.0j]))[0])
    for w in windows:
        span = TWO_PI if w is None else w.span
        rm = radial_mean(engine, w, float(grid[len(grid) // 2]))
        err = abs(rm - c * span)
        col.add(w, float(grid[len(grid) // 2]), "radial-mean-error", err,
                tolerance=1e-12, flag="exact" if err <= 1e-12 else "above-threshold")
    reports.append({"step": "closed-form-exactness", "derivative_at_center": float(c),
                    "tolerance": 1e-12})
    _step_image_identity(engine, col, w0, 0.9, reports)
    prof = _step_radial_series(engine, col, w0, grid, reports)
    plots.append(("radial-means", prof))
    _step_liminf(engine, col, w0, grid, cfg.levels(), reports)
    _step_monotonicity(engine, col, None, grid, reports)
    _step_nt_limit(engine, col, 0.0, reports)


def _run_square_sc(curve, engine, cfg, col, reports, plots):
    grid = cfg.grid()
    levels = cfg.levels()
    mid, corner = (resolve_window(w, engine) for w in cfg.windows)

    prof = _step_defect_tail(engine, col, mid, reports)
    plots.append(("defect-tail", prof))
    # full-circle image length against the known perimeter
    _step_perimeter_target(engine, col, None, 1.0 - 1e-4, target=4.0, rel=0.005,
                           reports=reports)
    # corner chords refine like sqrt(h) at the deepest radii, so the trend rows
    # stop at 1e-5 and use a tolerance the dyadic ladder can actually meet
    for r in (1.0 - 1e-2, 1.0 - 1e-3, 1.0 - 1e-5):
        res = image_curve_length(engine, None, r, rel_tol=1e-4)
        col.add(None, r, "image-curve-length", res.value,
                tolerance=res.rel_tol * abs(res.value),
                flag="converged" if res.converged else "not-converged")
        reports.append({"step": "image-curve-length", "window": _win_dict(None),
                        "r": float(r), "value": res.value, "levels": res.levels,
                        "converged": res.converged, "rel_tol": res.rel_tol,
                        "cross_gap": res.cross_gap})
    _step_image_identity(engine, col, mid, 0.9, reports)
    lim = _step_liminf(engine, col, mid, grid, levels, reports)
    plots.append(("liminf-ladder", lim.ladder))
    _step_liminf(engine, col, corner, grid, levels, reports)
    _step_equivalence(engine, col, mid, grid, levels, reports)
    _step_monotonicity(engine, col, None, grid, reports)

    # independent rebuild through the sample-welding engine; the two maps share
    # only the domain, so agreement here cross-validates both constructions
    other = build_zipper(curve.sample(1024), engine.center)
    a = radial_mean(engine, None, 0.99)
    b = radial_mean(other, None, 0.99)
    gap = abs(a - b) / a
    col.add(None, 0.99, "engine-cross-gap", gap, tolerance=0.01,
            flag="ok" if gap <= 0.01 else "gap-exceeded")
    reports.append({"step": "engine-cross-check", "r": 0.99, "sc": float(a),
                    "zipper": float(b), "rel_gap": float(gap), "tolerance": 0.01})


def _run_rectangle_sc(curve, engine, cfg, col, reports, plots):
    grid = cfg.grid()
    levels = cfg.levels()
    mid, corner = (resolve_window(w, engine) for w in cfg.windows)
    prof = _step_defect_tail(engine, col, mid, reports)
    plots.append(("defect-tail", prof))
    _step_image_identity(engine, col, mid, 0.9, reports)
    _step_liminf(engine, col, mid, grid, levels, reports)
    _step_liminf(engine, col, corner, grid, levels, reports)
    _step_equivalence(engine, col, mid, grid, levels, reports)
    _step_monotonicity(engine, col, None, grid, reports)


def _run_convex_polygon(curve, engine, cfg, col, reports, plots):
    grid = cfg.grid()
    levels = cfg.levels()
    windows = [resolve_window(w, engine) for w in cfg.windows]
    rep = _step_monotonicity(engine, col, None, grid, reports)
    plots.append(("radial-means", RadialProfile(ArcWindow.full(), rep.r_values, rep.values)))
    for w in windows:
        _step_monotonicity(engine, col, w, grid, reports, strict=False)
    _step_image_identity(engine, col, windows[0], 0.9, reports)
    _step_liminf(engine, col, windows[0], grid, levels, reports)


def _run_ellipse_zipper(curve, engine, cfg, col, reports, plots):
    grid = cfg.grid()
    levels = cfg.levels()
    w = resolve_window(cfg.windows[0], engine)
    eq = _step_equivalence(engine, col, w, grid, levels, reports)
    plots.append(("equivalence-ladder", eq.ladder))
    _step_image_identity(engine, col, w, 0.9, reports)
    _step_liminf(engine, col, w, grid, levels, reports)
    _step_liminf(engine, col, None, grid, levels, reports)
    _step_monotonicity(engine, col, None, grid, reports)


def _run_cos1x_candidate(curve, engine, cfg, col, reports, plots):
    grid = cfg.grid()
    levels = cfg.levels()
    crowd, far = (resolve_window(w, engine) for w in cfg.windows)

    col.add(None, None, "weld-samples-kept", float(engine.samples.size))

    # the spine of the experiment: inscribed lengths of the exact oscillating
    # edge grow like ln N without saturating, so no rectifiable length exists;
    # the left endpoint sits far below any spacing the schedule can resolve,
    # which is what frees the sums from the truncation
    edge = candidate_top_edge()
    t0, t1 = 1e-8, 1.0
    ladder = arc_length_estimate(edge, (t0, t1), schedule=list(range(2, 23)))
    for n, s in ladder.levels:
        col.add((t0, t1), None, "top-arc-partition-sum", s)
    lnN = np.log([n for n, _ in ladder.levels])
    sums = np.asarray(ladder.sums)
    slope, intercept = np.polyfit(lnN, sums, 1)
    fitted = slope * lnN + intercept
    ss_res = float(np.sum((sums - fitted) ** 2))
    ss_tot = float(np.sum((sums - sums.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot
    growing = ladder.sums[-1] > ladder.sums[-2] and not ladder.converged
    col.add((t0, t1), None, "top-arc-log-slope", slope,
            flag="log-growth" if slope > 0 and growing else "bad-fit")
    col.add((t0, t1), None, "top-arc-log-fit-r2", r2,
            flag="ok" if r2 > 0.99 else "bad-fit")
    # by contrast the truncated polygon actually mapped has finite perimeter
    verts = curve.as_polyline_vertices()
    foot = int(np.argmax(verts.imag == 0.0))
    trunc_len = polyline_length(verts[:foot + 1])
    col.add((0.0, float(foot)), None, "truncated-arc-length", trunc_len)
    reports.append({
        "step": "geometry-ladder", "window": {"a": t0, "b": t1, "full": False},
        "counts": [int(n) for n, _ in ladder.levels],
        "sums": [float(s) for s in ladder.sums],
        "log_slope": float(slope), "intercept": float(intercept), "r2": float(r2),
        "verdict": ladder.verdict, "budget": ladder.budget,
        "truncated_arc_length": float(trunc_len),
        "samples_kept": float(engine.samples.size),
    })
    plots.append(("top-arc-ladder", ladder))

    # boundedness verdicts: divergent on the accumulation window under these
    # budgets, bounded away from it
    budgets = EquivalenceBudgets(ladder=1.5, growth=2.0)
    eq = _step_equivalence(engine, col, crowd, grid, levels, reports, budgets=budgets)
    plots.append(("crowd-ladder", eq.ladder))
    # on the smooth stretch the two deepest radii outrun what the derivative
    # quadrature resolves between welds, so the scan stops short of them
    _step_equivalence(engine, col, far, grid[:-2], levels, reports)
    _step_liminf(engine, col, crowd, grid, levels, reports)
    _step_liminf(engine, col, far, grid[:-2], levels, reports)
    _step_image_identity(engine, col, far, 0.9, reports)
    _step_monotonicity(engine, col, None, grid, reports)


def _run_collar_demo(curve, engine, cfg, col, reports, plots):
    params = cfg.domain.get("params", {})
    count = int(params.get("count", 8))
    n_points = int(params.get("n_points", 14))
    rng = np.random.default_rng(cfg.seed)
    checks = []
    example = None
    for i in range(count):
        poly = random_simple_polygon(rng, n_points=n_points)
        period = poly.period
        sub = SubArc(0.12 * period, 0.38 * period)
        ext = collar_extend(poly, sub, margin=0.04 * period)
        verts = ext.curve.as_polyline_vertices()
        simple = is_simple(ext.curve)
        inside = all(point_in_jordan(poly, z) != "outside" for z in verts)
        probes = poly.point(np.linspace(sub.t_start, sub.t_end, 33))
        on_ext = all(point_in_jordan(ext.curve, z) == "boundary" for z in probes)
        ok = simple and inside and on_ext
        checks.append({"index": i, "simple": simple, "interior": inside,
                       "subarc_on_boundary": on_ext})
        col.add((sub.t_start, sub.t_end), None, "collar-extension-ok",
                1.0 if ok else 0.0, flag="ok" if ok else "failed")
        if example is None:
            example = ext
    reports.append({"step": "collar-extension", "count": count,
                    "seed": cfg.seed, "checks": checks,
                    "passed": float(sum(1.0 for c in checks
                                        if c["simple"] and c["interior"]
                                        and c["subarc_on_boundary"]))})
    if example is not None:
        x = np.arange(1, len(example.connector) + 1, dtype=float)
        y = np.abs(np.diff(np.asarray(
            [example.z0] + list(example.connector) + [example.z1], dtype=complex)))
        plots.append(("connector-steps", {"connector-step-length": (x, y)}))


EXPERIMENTS = {
    "affine-sanity": _run_affine_sanity,
    "square-sc": _run_square_sc,
    "rectangle-sc": _run_rectangle_sc,
    "convex-polygon-monotonicity": _run_convex_polygon,
    "ellipse-zipper": _run_ellipse_zipper,
    "cos1x-candidate": _run_cos1x_candidate,
    "collar-extension-demo": _run_collar_demo,
}


def default_config(name: str, output_dir: str = ".") -> dict:
    """Shipped configuration for a builtin experiment, JSON-ready."""
    base = {
        "experiment": name,
        "windows": [],
        "r_grid": {"levels": 14, "stride": 1},
        "schedule": {"start": 1, "stop": 17},
        "output_dir": output_dir,
        "seed": 2026,
    }
    if name == "affine-sanity":
        base["domain"] = {"builtin": "square"}  # unused by the closed form
        base["engine"] = {"kind": "closed-form", "name": "affine",
                          "params": {"c": [0.5, 0.25], "d": [1.0, 0.0]}}
        base["windows"] = [[0.3, 2.1], "full"]
    elif name == "square-sc":
        base["domain"] = {"builtin": "square"}
        base["engine"] = {"kind": "sc", "center": [0.5, 0.5]}
        base["windows"] = [
            {"anchor": "prevertex-mid", "index": 0, "lo": -0.55, "hi": 0.55},
            {"anchor": "prevertex", "index": 0, "lo": -0.4, "hi": 0.33},
        ]
    elif name == "rectangle-sc":
        base["domain"] = {"builtin": "rectangle", "params": {"width": 2.0, "height": 1.0}}
        base["engine"] = {"kind": "sc", "center": [1.0, 0.5]}
        base["windows"] = [
            {"anchor": "prevertex-mid", "index": 0, "lo": -0.12, "hi": 0.12},
            {"anchor": "prevertex", "index": 1, "lo": -0.3, "hi": 0.25},
        ]
    elif name == "convex-polygon-monotonicity":
        base["domain"] = {"builtin": "convex-pentagon"}
        base["engine"] = {"kind": "sc", "center": [0.2, 0.3]}
        base["windows"] = [
            {"anchor": "prevertex-mid", "index": 2, "lo": -0.3, "hi": 0.3},
            {"anchor": "prevertex", "index": 3, "lo": -0.5, "hi": 0.4},
        ]
    elif name == "ellipse-zipper":
        base["domain"] = {"builtin": "ellipse", "params": {"a": 1.0, "b": 0.6}}
        base["engine"] = {"kind": "zipper", "center": [0.0, 0.0], "samples": 512}
        base["windows"] = [[0.5, 1.5]]
    elif name == "cos1x-candidate":
        base["domain"] = {"builtin": "cos1x-candidate", "params": {"eps": 1e-3}}
        base["engine"] = {"kind": "zipper", "center": [0.0, -2.0],
                          "drop_indistinguishable": True}
        base["windows"] = [
            {"anchor": "crowding", "lo": -0.2, "hi": 0.01},
            {"anchor": "crowding", "lo": 0.5, "hi": 1.5},
        ]
        base["r_grid"] = {"levels": 19, "stride": 1}
        base["schedule"] = {"start": 2, "stop": 20}
    elif name == "collar-extension-demo":
        base["domain"] = {"builtin": "random-simple-polygon",
                          "params": {"count": 8, "n_points": 14}}
        base["engine"] = {"kind": "none"}
    else:
        raise InvalidInputError(f"unknown experiment {name!r}")
    return base


def run_experiment(config) -> RunManifest:
    """Run one named experiment; returns the manifest after writing all files."""
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)
    os.makedirs(cfg.output_dir, exist_ok=True)
    timings = {}
    t_all = time.time()

    t0 = time.time()
    curve = None
    # the collar demo draws its own random polygons instead of one fixed domain
    if cfg.domain.get("builtin") != "random-simple-polygon":
        curve = build_domain(cfg.domain)
    engine = build_engine_from_spec(cfg.engine, curve)
    timings["build"] = time.time() - t0

    domain_label = cfg.domain.get("builtin") or os.path.basename(cfg.domain["vertex_file"])
    col = RowCollector(cfg.experiment, domain_label, _engine_label(engine))
    reports, plots = [], []

    t0 = time.time()
    EXPERIMENTS[cfg.experiment](curve, engine, cfg, col, reports, plots)
    timings["diagnostics"] = time.time() - t0

    t0 = time.time()
    stem = os.path.join(cfg.output_dir, cfg.experiment)
    files = []
    csv_path = stem + ".csv"
    _atomic_write(csv_path, rows_to_csv(col.rows))
    files.append(csv_path)
    if engine is not None:
        engine_path = stem + ".engine.json"
        save_engine(engine, engine_path)
        files.append(engine_path)
    for tag, obj in plots:
        files.append(emit_plot(obj, f"{stem}-{tag}.svg", title=f"{cfg.experiment}: {tag}"))
    timings["emit"] = time.time() - t0
    timings["total"] = time.time() - t_all

    manifest = RunManifest(cfg.to_dict(), _engine_report(engine), reports,
                           col.rows, timings, files)
    manifest_path = stem + ".manifest.json"
    _atomic_write(manifest_path, json.dumps(manifest.to_dict(), indent=2) + "\n")
    manifest.files = files + [manifest_path]
    return manifest


# -- command line ----------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    # usage problems must exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(_ERROR_EXIT)


def _parse_scalar(text: str):
    for cast in (int, float, complex):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def _parse_domain_arg(text: str):
    """'square', 'ellipse:a=1,b=0.6', a vertex file path, or a closed-form name."""
    if os.path.exists(text):
        return {"file": text}
    name, _, rest = text.partition(":")
    params = {}
    if rest:
        for item in rest.split(","):
            k, _, v = item.partition("=")
            if not _ or not k:
                raise InvalidInputError(f"bad domain parameter {item!r}")
            params[k] = _parse_scalar(v)
    return {"name": name, "params": params}


def _parse_window_arg(text):
    if text in (None, "", "full"):
        return None
    parts = text.split(",")
    if len(parts) != 2:
        raise InvalidInputError("--window expects 'a,b' or 'full'")
    return ArcWindow(float(parts[0]), float(parts[1]))


def _print_rows(rows, out_path=None):
    text = rows_to_csv(rows)
    sys.stdout.write(text)
    if out_path:
        _atomic_write(out_path, text)


def _cmd_build_engine(args) -> int:
    spec = _parse_domain_arg(args.domain)
    if args.engine == "closed-form":
        if "file" in spec:
            raise InvalidInputError("closed-form engines take a name, not a file")
        engine = build_closed_form(spec["name"], **spec["params"])
    else:
        if "file" in spec:
            curve = load_curve_file(spec["file"])
        else:
            curve = builtin_curve(spec["name"], **spec["params"])
        w0 = complex(args.center) if args.center else curve.interior_point()
        if args.engine == "sc":
            engine = build_schwarz_christoffel(curve, w0)
        else:
            if args.samples:
                samples = curve.sample(args.samples)
            elif curve.kind == "polyline":
                samples = curve.as_polyline_vertices()
            else:
                samples = curve.sample(512)
            engine = build_zipper(samples, w0,
                                  drop_indistinguishable=args.drop_indistinguishable)
    save_engine(engine, args.out)
    print(f"wrote {args.out} ({_engine_label(engine)})")
    return _OK_EXIT


def _cmd_diagnose(args) -> int:
    engine = load_engine(args.engine)
    window = _parse_window_arg(args.window)
    grid = default_r_grid(args.levels)[:: args.stride]
    levels = list(range(args.schedule[0], args.schedule[1]))
    col = RowCollector("diagnose", "-", _engine_label(engine))
    reports = []

    kind = args.kind
    if kind == "cauchy":
        if args.r is not None and args.r2 is not None:
            d = cauchy_defect(engine, window, args.r, args.r2)
            col.add(window, (args.r, args.r2), "cauchy-defect", d,
                    tolerance=QuadSpec().slack)
        else:
            _step_defect_tail(engine, col, window, reports,
                              k_range=range(max(1, args.levels - 6), args.levels + 1))
    elif kind == "radial-mean":
        if args.r is not None:
            col.add(window, args.r, "radial-mean",
                    radial_mean(engine, window, args.r), tolerance=QuadSpec().slack)
        else:
            _step_radial_series(engine, col, window, grid, reports)
    elif kind == "image-length":
        _step_image_identity(engine, col, window, args.r if args.r is not None else 0.99,
                             reports)
    elif kind == "boundary-length":
        lad = boundary_arc_length(engine, window, schedule=levels,
                                  divergence_budget=args.budget)
        for n, s in lad.levels:
            col.add(window, None, "partition-sum", s)
        col.add(window, None, "partition-length",
                lad.length if lad.length is not None else lad.final_sum,
                flag=lad.verdict)
    elif kind == "liminf":
        _step_liminf(engine, col, window, grid, levels, reports)
    elif kind == "equivalence":
        budgets = None
        if args.budget is not None or args.growth is not None:
            budgets = EquivalenceBudgets(ladder=args.budget,
                                         growth=args.growth if args.growth else 10.0)
        _step_equivalence(engine, col, window, grid, levels, reports, budgets=budgets)
    elif kind == "monotonicity":
        _step_monotonicity(engine, col, window, grid, reports)
    elif kind == "nt-limit":
        w = ArcWindow.coerce(window)
        t = args.r if args.r is not None else 0.5 * (w.a + w.b)
        _step_nt_limit(engine, col, float(t), reports)

    _print_rows(col.rows, args.out)
    return _OK_EXIT if col.clean() else _FLAG_EXIT


def _cmd_experiment(args) -> int:
    if args.config:
        with open(args.config) as fh:
            obj = json.load(fh)
        if obj.get("experiment") != args.name:
            raise InvalidInputError(
                f"config is for {obj.get('experiment')!r}, not {args.name!r}")
    else:
        obj = default_config(args.name, output_dir=args.output_dir or ".")
    if args.output_dir:
        obj["output_dir"] = args.output_dir
    manifest = run_experiment(obj)
    for row in manifest.rows:
        if row["flag"]:
            print(f"{row['quantity']}: {row['value']} [{row['flag']}]")
    print(f"csv: {manifest.files[0]}")
    print(f"manifest: {manifest.files[-1]}")
    print("clean" if manifest.clean else "flags raised")
    return _OK_EXIT if manifest.clean else _FLAG_EXIT


def _cmd_collar_extend(args) -> int:
    curve = load_curve_file(args.curve)
    t0, t1 = (float(v) for v in args.subarc.split(","))
    sub = SubArc(t0, t1)
    margin = args.margin if args.margin else 0.04 * curve.period
    ext = collar_extend(curve, sub, margin=margin)
    simple = is_simple(ext.curve)
    verts = ext.curve.as_polyline_vertices()
    inside = all(point_in_jordan(curve, z) != "outside" for z in verts)
    print(f"extension vertices: {verts.size}")
    print(f"simple: {simple}")
    print(f"stays inside original: {inside}")
    if args.out:
        _atomic_write(args.out, json.dumps(curve_to_json(ext.curve), indent=2) + "\n")
        print(f"wrote {args.out}")
    return _OK_EXIT if simple and inside else _FLAG_EXIT


def _build_parser() -> _Parser:
    p = _Parser(prog="confmap",
                description="Riemann-map boundary diagnostics laboratory")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build-engine", help="construct and save a map engine")
    b.add_argument("--domain", required=True,
                   help="builtin name[:k=v,..], vertex file, or closed-form name[:params]")
    b.add_argument("--engine", required=True, choices=("sc", "zipper", "closed-form"))
    b.add_argument("--out", required=True)
    b.add_argument("--center", default=None, help="map center as a complex literal")
    b.add_argument("--samples", type=int, default=None,
                   help="zipper boundary sample count (default: curve vertices)")
    b.add_argument("--drop-indistinguishable", action="store_true",
                   help="weld boundary samples closer than the resolution floor")

    d = sub.add_parser("diagnose", help="run one diagnostic against a saved engine")
    d.add_argument("kind", choices=("cauchy", "radial-mean", "image-length",
                                    "boundary-length", "liminf", "equivalence",
                                    "monotonicity", "nt-limit"))
    d.add_argument("--engine", required=True)
    d.add_argument("--window", default="full", help="'a,b' in radians, or 'full'")
    d.add_argument("--r", type=float, default=None)
    d.add_argument("--r2", type=float, default=None)
    d.add_argument("--levels", type=int, default=14, help="r-grid depth")
    d.add_argument("--stride", type=int, default=1)
    d.add_argument("--schedule", type=int, nargs=2, default=(1, 17),
                   metavar=("START", "STOP"), help="dyadic refinement levels")
    d.add_argument("--budget", type=float, default=None, help="ladder divergence budget")
    d.add_argument("--growth", type=float, default=None, help="grid growth budget")
    d.add_argument("--out", default=None, help="also write the CSV here")

    e = sub.add_parser("experiment", help="run a named builtin experiment")
    e.add_argument("name", choices=sorted(EXPERIMENTS))
    e.add_argument("--config", default=None, help="JSON config (default: shipped config)")
    e.add_argument("--output-dir", default=None)

    c = sub.add_parser("collar-extend", help="widen a boundary sub-arc into a closed curve")
    c.add_argument("--curve", required=True)
    c.add_argument("--subarc", required=True, help="'t0,t1' in curve parameter")
    c.add_argument("--margin", type=float, default=None)
    c.add_argument("--out", default=None)
    return p


def main(argv=None) -> int:
    threads = os.environ.get("CONFMAP_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "build-engine": _cmd_build_engine,
        "diagnose": _cmd_diagnose,
        "experiment": _cmd_experiment,
        "collar-extend": _cmd_collar_extend,
    }
    try:
        return handlers[args.command](args)
    except ConfmapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _ERROR_EXIT
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return _ERROR_EXIT


if __name__ == "__main__":
    raise SystemExit(main())
