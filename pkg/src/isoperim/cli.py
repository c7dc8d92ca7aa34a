"""Batch command line front end.

Usage: ``isoperim <command> --config cfg.json [--out DIR] [--seed N] [--format csv|json]``.

Exit status is 0 on success or a passed verification, 2 on a failed
verification and 1 on usage or configuration errors.
"""

from __future__ import annotations

import os

_THREADS = os.environ.get("ISOPERIM_THREADS")
if _THREADS and _THREADS.isdigit() and int(_THREADS) > 0:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _THREADS)

import argparse  # noqa: E402
import csv  # noqa: E402
import io  # noqa: E402
import json  # noqa: E402
import math  # noqa: E402
import sys  # noqa: E402
from pathlib import Path  # noqa: E402

import jsonschema  # noqa: E402
import numpy as np  # noqa: E402

from . import capacity, discrete, product  # noqa: E402
from .measure import MeasureError, build_measure, potential_from_recipe  # noqa: E402
from .profile import asymptotic_ratio_scan, profile_table  # noqa: E402

COMMANDS = ("profile", "hardy", "beta", "verify-spi", "verify-beckner", "verify-fsobolev", "semigroup", "product")
FAMILIES = ("power", "power-log", "nonconvex-example", "table", "smoothed")

_REQUIRED = {"power": ["p"], "power-log": ["p", "alpha"], "nonconvex-example": ["alpha"], "table": ["x", "phi"],
             "smoothed": ["base"]}
_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_MEASURE = {
    "type": "object",
    "required": ["family"],
    "properties": {
        "family": {"enum": list(FAMILIES)},
        "p": _POS, "scale": _POS, "alpha": _NUM, "gamma": {"type": ["number", "string"]},
        "eps": _POS, "a": _POS, "x": {"type": "array", "items": _NUM}, "phi": {"type": "array", "items": _NUM},
        "base": {"type": "object"},
    },
    "allOf": [
        {"if": {"required": ["family"], "properties": {"family": {"const": fam}}}, "then": {"required": req}}
        for fam, req in _REQUIRED.items()
    ],
}
_RECIPE = {"type": "object", "required": ["kind"], "properties": {"kind": {"type": "string"}}}
_GRID = {
    "N": {"type": "integer", "minimum": 16},
    "window": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
    "trials": {"type": "integer", "minimum": 1},
    "refine": {"type": "integer", "minimum": 0},
}
_PARAMS = {
    "profile": {"t_min": _POS, "t_max": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "n": {"type": "integer", "minimum": 1}, "spacing": {"enum": ["linear", "log"]}},
    "hardy": {"T": _RECIPE, "n_grid": {"type": "integer", "minimum": 16}},
    "beta": {"beta": _RECIPE, "s_min": {"type": "number", "minimum": 1}, "s_max": {"type": "number", "minimum": 1},
             "n": {"type": "integer", "minimum": 1}},
    "verify-spi": {"beta": _RECIPE, "s_set": {"type": "array", "items": {"type": "number", "minimum": 1}},
                   "constant": _POS, **_GRID},
    "verify-beckner": {"T": _RECIPE, "C": _POS,
                       "p_set": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 1,
                                                            "exclusiveMaximum": 2}}, **_GRID},
    "verify-fsobolev": {"F": _RECIPE, **_GRID},
    "semigroup": {"intervals": {"type": "array", "items": {"type": "array", "minItems": 2, "maxItems": 2}},
                  "n_intervals": {"type": "integer", "minimum": 0},
                  "t_set": {"type": "array", "items": _POS}, "R": {"type": "number", "minimum": 0},
                  "beta": _RECIPE, "s": {"type": "number", "minimum": 1}, "constant": _POS,
                  "tolerance": {"type": "number", "minimum": 0}, "N": _GRID["N"], "window": _GRID["window"]},
    "product": {"masses": {"type": "array", "minItems": 1,
                           "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.5}},
                "K": _POS, "n_theta": {"type": "integer", "minimum": 1}},
}


def _schema(command: str) -> dict:
    return {
        "type": "object",
        "required": ["measure"],
        "properties": {
            "command": {"enum": list(COMMANDS)},
            "measure": _MEASURE,
            "params": {"type": "object", "properties": _PARAMS[command], "additionalProperties": False},
            "format": {"enum": ["csv", "json"]},
            "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        },
        "additionalProperties": False,
    }


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _field(path) -> str:
    return ".".join(str(p) for p in path) or "<root>"


def validate_config(cfg, command: str) -> None:
    """Schema check; the error message names the offending field."""
    v = jsonschema.Draft202012Validator(_schema(command))
    errors = sorted(v.iter_errors(cfg), key=lambda e: (len(e.path), list(map(str, e.path))))
    if errors:
        e = errors[-1]
        raise UsageError(f"config field '{_field(e.path)}': {e.message}")
    if "command" in cfg and cfg["command"] != command:
        raise UsageError(f"config field 'command': {cfg['command']!r} does not match {command!r}")


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def _dumps(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=True) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def emit_plotdata(out: Path, stem: str, series, caption: str, log_x: bool = False) -> Path:
    """Write ``stem.dat`` (whitespace separated, gnuplot index blocks) and ``stem.caption``.

    ``series`` is a list of ``(name, header, rows)``; an empty table is a usage error.
    """
    if not series or all(len(rows) == 0 for _, _, rows in series):
        raise UsageError(f"plot data {stem!r}: empty table")
    blocks = []
    for name, header, rows in series:
        lines = [f"# {name}", "# " + " ".join(header)]
        lines += [" ".join(repr(float(v)) for v in r) for r in rows]
        blocks.append("\n".join(lines))
    path = out / f"{stem}.dat"
    path.write_text("\n\n\n".join(blocks) + "\n")
    side = [caption, f"columns: {' '.join(series[0][1])}", f"series: {len(series)}",
            f"xscale: {'log' if log_x else 'linear'}"]
    (out / f"{stem}.caption").write_text("\n".join(side) + "\n")
    return path


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _default_T(cfg):
    rec = cfg["measure"]
    if rec["family"] == "power" and rec.get("scale", 1.0) == 1.0:
        return capacity.RateFunction.power(rec["p"])
    return capacity.RateFunction.from_potential(potential_from_recipe(rec))


def _beta(params, cfg):
    if "beta" in params:
        return capacity.beta_from_recipe(params["beta"])
    return capacity.beta_from_potential(potential_from_recipe(cfg["measure"]))


def _grid(m, params):
    win = params.get("window")
    return discrete.discretize(m, params.get("N", 2000), None if win is None else tuple(win))


def cmd_profile(m, cfg, params, seed, fmt, out):
    lo, hi, n = params.get("t_min", 1e-4), params.get("t_max", 0.5), params.get("n", 500)
    if not lo < hi:
        raise UsageError("config field 'params.t_min': must be below t_max")
    t = np.geomspace(lo, hi, n) if params.get("spacing", "linear") == "log" else np.linspace(lo, hi, n)
    table = profile_table(m, t)
    if fmt == "csv":
        (out / "profile.csv").write_text(table.to_csv())
    else:
        small = t[t <= 1e-2]
        scan = asymptotic_ratio_scan(m, small) if small.size else None
        (out / "profile.json").write_text(_dumps({"measure": m.recipe, "table": table.to_dict(),
                                                  "asymptotic_scan": scan}))
    emit_plotdata(out, "profile", [("I", ["t", "I"], list(zip(table.t, table.I)))],
                  "isoperimetric profile I(t) of the measure " + json.dumps(m.recipe, sort_keys=True))
    emit_plotdata(out, "profile_ratio", [("I/L", ["t", "I_over_L"], list(zip(table.t, table.ratio)))],
                  "ratio of the profile to the comparison function L", log_x=True)
    return 0, {"rows": len(t)}


def cmd_hardy(m, cfg, params, seed, fmt, out):
    T = capacity.rate_from_recipe(params["T"]) if "T" in params else _default_T(cfg)
    res = capacity.hardy_constants(m, T, n_grid=params.get("n_grid", 512))
    lo, hi = capacity.beckner_constant_interval(m, T, n_grid=params.get("n_grid", 512))
    rec = {"measure": m.recipe, "T": T.recipe, **res.to_dict(), "B": res.B, "beckner_interval": [lo, hi]}
    if fmt == "csv":
        (out / "hardy.csv").write_text(_csv(["B_minus", "B_plus", "lower", "upper"],
                                            [[res.B_minus, res.B_plus, lo, hi]]))
    else:
        (out / "hardy.json").write_text(_dumps(rec))
    return 0, {"B_minus": res.B_minus, "B_plus": res.B_plus, "interval": [lo, hi]}


def cmd_beta(m, cfg, params, seed, fmt, out):
    beta = _beta(params, cfg)
    s = np.geomspace(params.get("s_min", 1.0), params.get("s_max", 1e6), params.get("n", 100))
    vals = np.asarray(beta(s))
    certs = beta.certificates()
    if fmt == "csv":
        (out / "beta.csv").write_text(_csv(["s", "beta"], zip(s, vals)))
    else:
        (out / "beta.json").write_text(_dumps({"beta": beta.recipe, "s": s, "values": vals, "certificates": certs}))
    emit_plotdata(out, "beta", [("beta", ["s", "beta"], list(zip(s, vals)))], "super-Poincare rate beta(s)",
                  log_x=True)
    return 0, {"certificates": certs}


def _write_report(out, name, rep, fmt):
    if fmt == "csv":
        (out / f"{name}.csv").write_text(_csv(["inequality", "worst_ratio", "threshold", "verdict"],
                                              [[rep["inequality"], rep["worst_ratio"], rep["threshold"],
                                                rep["verdict"]]]))
    else:
        (out / f"{name}.json").write_text(_dumps(rep))


def _verdict(rep):
    return 0 if rep["verdict"] in ("pass", None) else 2


def cmd_verify_spi(m, cfg, params, seed, fmt, out):
    gm = _grid(m, params)
    beta = _beta(params, cfg)
    s_set = params.get("s_set", [1.0, 2.0, 10.0, 100.0, 1e3, 1e4, 1e6])
    rep = discrete.super_poincare_test(gm, beta, s_set, params.get("trials", 500), seed, params.get("refine", 50),
                                       constant=params.get("constant", 8.0))
    _write_report(out, "verify-spi", rep, fmt)
    return _verdict(rep), {"worst_ratio": rep["worst_ratio"], "threshold": rep["threshold"]}


def cmd_verify_beckner(m, cfg, params, seed, fmt, out):
    gm = _grid(m, params)
    T = capacity.rate_from_recipe(params["T"]) if "T" in params else _default_T(cfg)
    C = params.get("C")
    if C is None:
        C = capacity.beckner_constant_interval(m, T)[1]
        if not math.isfinite(C):
            raise UsageError("config field 'params.C': Hardy constant diverges, no Beckner constant to test")
    rep = discrete.beckner_test(gm, T, C, params.get("p_set"), params.get("trials", 500), seed,
                                params.get("refine", 50))
    _write_report(out, "verify-beckner", rep, fmt)
    return _verdict(rep), {"worst_ratio": rep["worst_ratio"], "threshold": rep["threshold"]}


def cmd_verify_fsobolev(m, cfg, params, seed, fmt, out):
    gm = _grid(m, params)
    Fr = params.get("F", {"kind": "log"})
    F = capacity.FSpec(Fr["kind"], {k: v for k, v in Fr.items() if k not in ("kind", "C_F")}, Fr.get("C_F"))
    rep = discrete.fsobolev_test(gm, F, params.get("trials", 500), seed, params.get("refine", 50))
    _write_report(out, "verify-fsobolev", rep, fmt)
    return _verdict(rep), {"worst_ratio": rep["worst_ratio"], "threshold": rep["threshold"]}


def random_intervals(m, n: int, seed: int):
    """Intervals with endpoints at random quantiles in [1e-4, 1 - 1e-4]."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        a, b = np.sort(rng.uniform(1e-4, 1 - 1e-4, size=2))
        out.append((float(m.quantile(a)), float(m.quantile(b))))
    return out


def cmd_semigroup(m, cfg, params, seed, fmt, out):
    gm = _grid(m, params)
    gen = discrete.build_generator(gm)
    R = params.get("R", gen.R)
    ivs = [tuple(float(v) for v in iv) for iv in params.get("intervals", [])]
    ivs += random_intervals(m, params.get("n_intervals", 20 if not ivs else 0), seed)
    t_set = params.get("t_set", [0.01, 0.1])
    tol = params.get("tolerance", 1e-3)
    beta = _beta(params, cfg)
    s = params.get("s", 2.0)
    const = params.get("constant", 8.0)
    rows = []
    for t in t_set:
        for a, b in ivs:
            led = discrete.ledoux_check(gen, m, [(a, b)], t, R)
            f = discrete.mollified_indicator(gm, [(a, b)])
            wang = discrete.wang_decay_check(gen, f, beta, s, t, constant=const)
            rows.append({"t": t, "a": a, "b": b, "ledoux_margin": led["margin"], "wang_margin": wang,
                         "complement_gap": led["rhs"] - led["rhs_complement"]})
    worst_led = min(r["ledoux_margin"] for r in rows)
    worst_wang = min(r["wang_margin"] for r in rows)
    ok = worst_led >= -tol and worst_wang >= -1e-6
    rep = {"check": "semigroup", "measure": m.recipe, "grid": gm.describe(), "R": R, "seed": seed,
           "beta": beta.recipe, "s": s, "constant": const, "rows": rows, "worst_ledoux_margin": worst_led,
           "worst_wang_margin": worst_wang, "tolerance": tol, "verdict": "pass" if ok else "fail"}
    if fmt == "csv":
        keys = ["t", "a", "b", "ledoux_margin", "wang_margin", "complement_gap"]
        (out / "semigroup.csv").write_text(_csv(keys, ([r[k] for k in keys] for r in rows)))
    else:
        (out / "semigroup.json").write_text(_dumps(rep))
    return (0 if ok else 2), {"worst_ledoux_margin": worst_led, "worst_wang_margin": worst_wang}


def cmd_product(m, cfg, params, seed, fmt, out):
    masses = params.get("masses", [0.1, 0.2, 0.3, 0.5])
    nth = params.get("n_theta", 8)
    thetas = np.linspace(0.0, math.pi / 4, nth + 1)[1:]
    tables = [product.compare_candidates(m, a, params.get("K"), thetas) for a in masses]
    if fmt == "csv":
        text = tables[0].to_csv() + "".join(t.to_csv().split("\n", 1)[1] for t in tables[1:])
        (out / "product.csv").write_text(text)
    else:
        (out / "product.json").write_text(_dumps({"measure": m.recipe, "tables": [t.to_dict() for t in tables]}))
    shapes = []
    for t in tables:
        for r in t.rows:
            if r["shape"] not in shapes:
                shapes.append(r["shape"])
    series = [(sh, ["mass", "boundary"], [(t.mass, r["boundary"]) for t in tables for r in t.rows
                                          if r["shape"] == sh]) for sh in shapes]
    emit_plotdata(out, "product", series, "boundary measure of mass-matched planar candidates per shape")
    bad = [t.mass for t in tables if t.above_K_L is False]
    return (2 if bad else 0), {"min_shapes": [t.best["shape"] for t in tables]}


HANDLERS = {
    "profile": cmd_profile,
    "hardy": cmd_hardy,
    "beta": cmd_beta,
    "verify-spi": cmd_verify_spi,
    "verify-beckner": cmd_verify_beckner,
    "verify-fsobolev": cmd_verify_fsobolev,
    "semigroup": cmd_semigroup,
    "product": cmd_product,
}


def run(command: str, cfg: dict, out: Path, seed: int | None = None, fmt: str | None = None) -> tuple[int, dict]:
    """Validate, dispatch and write artifacts; returns (exit status, summary)."""
    if command not in HANDLERS:
        raise UsageError(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}")
    validate_config(cfg, command)
    seed = int(cfg.get("seed", 0) if seed is None else seed)
    fmt = fmt or cfg.get("format", "json")
    out.mkdir(parents=True, exist_ok=True)
    try:
        m = build_measure(cfg["measure"])
    except (MeasureError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"config field 'measure': {exc}") from exc
    try:
        return HANDLERS[command](m, cfg, cfg.get("params", {}), seed, fmt, out)
    except (MeasureError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"config field 'params': {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="isoperim", description="Isoperimetric profiles and functional inequality checks.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--format", choices=("csv", "json"), default=None)
    return p


def main(argv=None) -> int:
    try:
        if _THREADS is not None and not (_THREADS.isdigit() and int(_THREADS) > 0):
            raise UsageError(f"ISOPERIM_THREADS must be a positive integer, got {_THREADS!r}")
        args = build_parser().parse_args(argv)
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise UsageError("--seed must be an unsigned 64-bit integer")
        try:
            cfg = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config is not valid JSON: {exc}") from exc
        status, summary = run(args.command, cfg, Path(args.out), args.seed, args.format)
    except UsageError as exc:
        print(f"isoperim: error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(_plain({"command": args.command, "status": "pass" if status == 0 else "fail", **summary}),
                     sort_keys=True))
    return status


if __name__ == "__main__":
    sys.exit(main())
