"""Command-line interface: seeded, reproducible runs writing CSV/JSON artifacts.

Every output file starts with a comment line recording the tool version, the
seed, and the full resolved configuration, so identical invocations produce
byte-identical files.  Files are written atomically (temp file + rename).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

from . import __version__
from .criterion import ergodicity_probe, katok_criterion_check
from .entropy import (ScaleDescriptor, brin_katok_local, complexity_compare,
                      greedy_separated, greedy_spanning, katok_entropy_curve,
                      measure_complexity_curve,
                      topological_entropy_curve, _ols_slope,
                      default_fit_window)
from .errors import ConfigurationError, FkmetricError
from .matching import MetricKind, PairMetrics
from .systems import Partition, make_system
from .verify import run_suite

THREADS_ENV_NOTE = "FKMETRIC_THREADS"  # worker count for pairwise batches


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _parse_system_text(text: str) -> dict:
    text = text.strip()
    if text.startswith("{"):
        return json.loads(text)
    if text.startswith("@"):
        with open(text[1:]) as fh:
            return json.load(fh)
    name, _, arg = text.partition(":")
    name = name.strip().lower()
    if name == "full_shift":
        spec = {"kind": "full_shift"}
        if arg:
            spec["k"] = int(arg)
        return spec
    if name == "rotation":
        if not arg:
            raise ConfigurationError("rotation needs an angle, e.g. rotation:0.5")
        return {"kind": "rotation", "alpha": float(arg)}
    if name in ("doubling", "tent", "logistic"):
        return {"kind": name}
    raise ConfigurationError(f"unknown system {text!r} "
                             "(use JSON or @file.json for two_component)")


def _parse_range(text) -> list:
    """n ranges: '8', '4..12', '4..32:4', or comma lists '4,8,16'."""
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    text = str(text).strip()
    if "," in text:
        return [int(v) for v in text.split(",") if v]
    if ".." in text:
        span, _, step = text.partition(":")
        lo, _, hi = span.partition("..")
        return list(range(int(lo), int(hi) + 1, int(step) if step else 1))
    return [int(text)]


def _parse_floats(text) -> list:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v]


def _parse_point(system, token):
    if system.symbolic:
        digits = str(token).replace(",", "")
        return system.cyclic_point(digits)
    return system.point(float(token))


def _parse_partition(text) -> Partition:
    name, _, arg = str(text).partition(":")
    name = name.strip().lower()
    if name in ("symbols", "symbol", "zero-coordinate"):
        return Partition("symbols", int(arg) if arg else 2)
    if name in ("bins", "bin"):
        if not arg:
            raise ConfigurationError("bins partition needs a count, e.g. bins:4")
        return Partition("bins", int(arg))
    raise ConfigurationError(f"unknown partition {text!r}")


def _fmt(v) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return format(v, ".12g")
    return str(v)


def _header(seed, config: dict) -> str:
    # the output path is not part of the run's identity
    cfg = {k: v for k, v in config.items() if k != "out"}
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return f"# fkmetric={__version__} seed={seed} config={blob}"


def _emit(out_path, header: str, lines: list):
    text = header + "\n" + "\n".join(lines) + "\n"
    if out_path:
        out_dir = os.path.dirname(os.path.abspath(out_path)) or "."
        fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=".fkmetric-")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(text)
            os.replace(tmp, out_path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    else:
        sys.stdout.write(text)


REQUIRED = object()


def _merge_config(args: argparse.Namespace, defaults: dict) -> dict:
    """Flags override --config file entries, which override defaults."""
    ns = vars(args)
    cfg = {}
    if ns.get("config"):
        with open(ns["config"]) as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise ConfigurationError("config file must hold a JSON object")
        cfg.update({k.replace("-", "_"): v for k, v in loaded.items()})
    out = dict(defaults)
    for key in defaults:
        if key in cfg:
            out[key] = cfg[key]
        if ns.get(key) is not None:
            out[key] = ns[key]
    missing = [k for k, v in out.items() if v is REQUIRED]
    if missing:
        raise ConfigurationError(f"missing required options: {missing}")
    out.setdefault("out", None)
    return {k: (None if v is REQUIRED else v) for k, v in out.items()}


def _curve_lines(curve) -> list:
    lines = ["metric,n,epsilon_or_delta,count_or_mass,log_value,slope"]
    for r in curve.rows:
        slope = curve.slopes.get(r.epsilon, math.nan)
        lines.append(",".join([curve.metric.value, str(r.n), _fmt(r.epsilon),
                               _fmt(r.count), _fmt(r.log_value), _fmt(slope)]))
    return lines


# ---------------------------------------------------------------------------
# commands


def _cmd_orbit(args):
    cfg = _merge_config(args, {"system": REQUIRED, "x": REQUIRED, "n": REQUIRED,
                               "seed": 0, "out": args.out})
    n = int(cfg["n"])
    system = make_system(_parse_system_text(str(cfg["system"])), n_max=n)
    seg = system.orbit(_parse_point(system, cfg["x"]), n)
    lines = ["index,value"]
    for i, p in enumerate(seg.points):
        if system.symbolic:
            lines.append(f"{i},{''.join(str(int(s)) for s in p.symbols)}")
        else:
            lines.append(f"{i},{_fmt(p.real)}")
    _emit(cfg["out"], _header(cfg["seed"], cfg), lines)
    return 0


def _cmd_metric(args):
    cfg = _merge_config(args, {"system": REQUIRED, "x": REQUIRED, "y": REQUIRED,
                               "n": REQUIRED, "kind": "fk", "tol": 1e-9,
                               "exact": False, "seed": 0, "out": args.out})
    n = int(cfg["n"])
    system = make_system(_parse_system_text(str(cfg["system"])), n_max=n)
    ox = system.orbit(_parse_point(system, cfg["x"]), n)
    oy = system.orbit(_parse_point(system, cfg["y"]), n)
    pair = PairMetrics(ox, oy)
    kind = MetricKind.parse(cfg["kind"])
    if cfg["exact"] and kind in (MetricKind.FK, MetricKind.FK_UNORDERED):
        value = (pair.fk(exact=True) if kind is MetricKind.FK
                 else pair.fk_unordered(exact=True))
    else:
        value = pair.value(kind, float(cfg["tol"]))
    if cfg["out"]:
        _emit(cfg["out"], _header(cfg["seed"], cfg),
              ["metric,n,value", f"{kind.value},{n},{_fmt(value)}"])
    else:
        print(_fmt(value))
    return 0


def _cmd_span(args):
    cfg = _merge_config(args, {"system": REQUIRED, "measure": REQUIRED, "count": 200,
                               "n": REQUIRED, "eps": REQUIRED, "kind": "fk",
                               "mode": "separated", "exact": False,
                               "seed": 0, "out": args.out})
    n = int(cfg["n"])
    system = make_system(_parse_system_text(str(cfg["system"])), n_max=n)
    measure = system.sample_points(cfg["measure"], int(cfg["count"]),
                                   int(cfg["seed"]))
    arr = system.orbit_rows(measure, n)
    eps = float(cfg["eps"])
    if cfg["exact"]:
        from .entropy import exact_separated, exact_spanning
        fn = exact_separated if cfg["mode"] == "separated" else exact_spanning
        res = fn(arr, cfg["kind"], eps)
    elif cfg["mode"] == "separated":
        res = greedy_separated(arr, cfg["kind"], eps)
    elif cfg["mode"] == "spanning":
        res = greedy_spanning(arr, cfg["kind"], eps)
    else:
        raise ConfigurationError(f"unknown mode {cfg['mode']!r}")
    lines = ["metric,n,epsilon,count,exact",
             ",".join([res.metric.value, str(res.n), _fmt(res.epsilon),
                       str(res.count), str(res.exact).lower()])]
    _emit(cfg["out"], _header(cfg["seed"], cfg), lines)
    return 0


def _cmd_entropy_top(args):
    cfg = _merge_config(args, {"system": REQUIRED, "measure": REQUIRED, "count": 1000,
                               "n_range": REQUIRED, "eps": "0.1", "kind": "fk",
                               "mode": "separated", "fit_window": "",
                               "seed": 0, "out": args.out})
    ns = _parse_range(cfg["n_range"])
    system = make_system(_parse_system_text(str(cfg["system"])), n_max=max(ns))
    window = tuple(_parse_range(cfg["fit_window"])) if cfg["fit_window"] else None
    curve = topological_entropy_curve(
        system, cfg["measure"], int(cfg["count"]), ns,
        _parse_floats(cfg["eps"]), cfg["kind"], int(cfg["seed"]),
        mode=cfg["mode"], fit_window=window)
    _emit(cfg["out"], _header(cfg["seed"], cfg), _curve_lines(curve))
    return 0


def _cmd_entropy_katok(args):
    cfg = _merge_config(args, {"system": REQUIRED, "measure": REQUIRED, "count": 2000,
                               "n_range": REQUIRED, "eps": "0.1", "kind": "fk",
                               "fit_window": "", "seed": 0, "out": args.out})
    ns = _parse_range(cfg["n_range"])
    system = make_system(_parse_system_text(str(cfg["system"])), n_max=max(ns))
    measure = system.sample_points(cfg["measure"], int(cfg["count"]),
                                   int(cfg["seed"]))
    window = tuple(_parse_range(cfg["fit_window"])) if cfg["fit_window"] else None
    curve = katok_entropy_curve(system, measure, ns, _parse_floats(cfg["eps"]),
                                cfg["kind"], fit_window=window)
    _emit(cfg["out"], _header(cfg["seed"], cfg), _curve_lines(curve))
    return 0


def _cmd_entropy_brinkatok(args):
    cfg = _merge_config(args, {"system": REQUIRED, "measure": REQUIRED,
                               "count": 10000, "n_range": REQUIRED,
                               "delta": "0.05", "base_index": 0,
                               "seed": 0, "out": args.out})
    ns = _parse_range(cfg["n_range"])
    system = make_system(_parse_system_text(str(cfg["system"])), n_max=max(ns))
    measure = system.sample_points(cfg["measure"], int(cfg["count"]),
                                   int(cfg["seed"]))
    deltas = _parse_floats(cfg["delta"])
    est = brin_katok_local(system, measure, measure.point(int(cfg["base_index"])),
                           ns, deltas)
    window = default_fit_window(ns)
    lines = ["metric,n,epsilon_or_delta,count_or_mass,log_value,slope"]
    for delta in deltas:
        rows = [r for r in est.rows if r.delta == delta]
        fit = [(r.n, -math.log(r.mass)) for r in rows
               if not r.flagged and window[0] <= r.n <= window[1]]
        slope = _ols_slope([p[0] for p in fit], [p[1] for p in fit])
        for r in rows:
            lines.append(",".join(["fk", str(r.n), _fmt(r.delta), _fmt(r.mass),
                                   _fmt(r.estimate), _fmt(slope)]))
    _emit(cfg["out"], _header(cfg["seed"], cfg), lines)
    return 0


def _cmd_complexity(args):
    cfg = _merge_config(args, {"system": REQUIRED, "measure": REQUIRED, "count": 1000,
                               "n_range": REQUIRED, "eps": "0.1", "kind": "fk",
                               "scale": REQUIRED, "threshold": 0.1,
                               "seed": 0, "out": args.out})
    ns = _parse_range(cfg["n_range"])
    system = make_system(_parse_system_text(str(cfg["system"])), n_max=max(ns))
    measure = system.sample_points(cfg["measure"], int(cfg["count"]),
                                   int(cfg["seed"]))
    curve = measure_complexity_curve(system, measure, ns,
                                     _parse_floats(cfg["eps"]), cfg["kind"])
    scale = ScaleDescriptor.parse(cfg["scale"])
    curve = complexity_compare(curve, scale, float(cfg["threshold"]))
    lines = ["metric,n,epsilon,count,u_value,ratio,verdict"]
    for r in curve.rows:
        u = scale.u(r.n)
        lines.append(",".join([curve.metric.value, str(r.n), _fmt(r.epsilon),
                               _fmt(r.count), _fmt(u), _fmt(r.count / u),
                               curve.verdict]))
    _emit(cfg["out"], _header(cfg["seed"], cfg), lines)
    return 0


def _cmd_criterion(args):
    cfg = _merge_config(args, {"system": REQUIRED, "measure": REQUIRED, "count": 2000,
                               "partition": REQUIRED, "n": REQUIRED, "eps": REQUIRED,
                               "candidates": 32, "seed": 0, "out": args.out})
    n = int(cfg["n"])
    system = make_system(_parse_system_text(str(cfg["system"])), n_max=n)
    measure = system.sample_points(cfg["measure"], int(cfg["count"]),
                                   int(cfg["seed"]))
    report = katok_criterion_check(system, _parse_partition(cfg["partition"]),
                                   measure, n, float(cfg["eps"]),
                                   int(cfg["candidates"]), int(cfg["seed"]))
    blob = json.dumps(report.to_json(), sort_keys=True, indent=2)
    _emit(cfg["out"], _header(cfg["seed"], cfg), [blob])
    return 0


def _cmd_probe_ergodic(args):
    cfg = _merge_config(args, {"system": REQUIRED, "measure": REQUIRED, "count": 1000,
                               "n": REQUIRED, "pairs": 200, "threshold": None,
                               "seed": 0, "out": args.out})
    n = int(cfg["n"])
    system = make_system(_parse_system_text(str(cfg["system"])), n_max=n)
    measure = system.sample_points(cfg["measure"], int(cfg["count"]),
                                   int(cfg["seed"]))
    thr = None if cfg["threshold"] is None else float(cfg["threshold"])
    cfg["threshold"] = thr if thr is not None else 0.05 * system.diameter
    rep = ergodicity_probe(system, measure, n, int(cfg["pairs"]),
                           int(cfg["seed"]), cfg["threshold"])
    q = rep.quantiles
    lines = ["n,pairs,q05,q25,median,q75,q95,verdict",
             ",".join([str(rep.n), str(rep.pair_count), _fmt(q["q05"]),
                       _fmt(q["q25"]), _fmt(q["median"]), _fmt(q["q75"]),
                       _fmt(q["q95"]), rep.verdict])]
    _emit(cfg["out"], _header(cfg["seed"], cfg), lines)
    return 0


def _cmd_verify(args):
    cfg = _merge_config(args, {"suite": "all", "trials": 200, "seed": 1,
                               "out": args.out})
    reports = run_suite(cfg["suite"], int(cfg["trials"]), int(cfg["seed"]))
    lines = []
    for rep in reports:
        lines.extend(rep.lines())
    _emit(cfg["out"], _header(cfg["seed"], cfg), lines)
    if cfg["out"]:
        total = sum(r.violations for r in reports)
        print(f"violations={total}")
    return 0 if all(r.violations == 0 for r in reports) else 1


def build_parser() -> _Parser:
    parser = _Parser(prog="fkmetric",
                     description="Orbit metrics and entropy estimation on "
                                 "built-in dynamical systems")
    sub = parser.add_subparsers(dest="command")

    def add(name, fn, flags):
        p = sub.add_parser(name, add_help=True)
        p.set_defaults(fn=fn)
        for flag, kw in flags:
            p.add_argument(flag, **kw)
        p.add_argument("--config", help="JSON config file; flags override")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--seed", type=int, default=None)
        return p

    sysflag = ("--system", {"help": "rotation:0.5 | full_shift:2 | doubling | "
                                    "tent | logistic | JSON | @file.json"})
    measflag = ("--measure", {"help": "bernoulli:p0,p1,... | lebesgue | "
                                      "arcsine | orbit"})

    add("orbit", _cmd_orbit, [sysflag, ("--x", {}), ("--n", {"type": int})])
    add("metric", _cmd_metric, [sysflag, ("--x", {}), ("--y", {}),
                                ("--n", {"type": int}), ("--kind", {}),
                                ("--tol", {"type": float}),
                                ("--exact", {"action": "store_const", "const": True})])
    add("span", _cmd_span, [sysflag, measflag, ("--count", {"type": int}),
                            ("--n", {"type": int}), ("--eps", {"type": float}),
                            ("--kind", {}), ("--mode", {}),
                            ("--exact", {"action": "store_const", "const": True})])
    add("entropy-top", _cmd_entropy_top,
        [sysflag, measflag, ("--count", {"type": int}), ("--n-range", {}),
         ("--eps", {}), ("--kind", {}), ("--mode", {}), ("--fit-window", {})])
    add("entropy-katok", _cmd_entropy_katok,
        [sysflag, measflag, ("--count", {"type": int}), ("--n-range", {}),
         ("--eps", {}), ("--kind", {}), ("--fit-window", {})])
    add("entropy-brinkatok", _cmd_entropy_brinkatok,
        [sysflag, measflag, ("--count", {"type": int}), ("--n-range", {}),
         ("--delta", {}), ("--base-index", {"type": int})])
    add("complexity", _cmd_complexity,
        [sysflag, measflag, ("--count", {"type": int}), ("--n-range", {}),
         ("--eps", {}), ("--kind", {}), ("--scale", {}),
         ("--threshold", {"type": float})])
    add("criterion", _cmd_criterion,
        [sysflag, measflag, ("--count", {"type": int}), ("--partition", {}),
         ("--n", {"type": int}), ("--eps", {"type": float}),
         ("--candidates", {"type": int})])
    add("probe-ergodic", _cmd_probe_ergodic,
        [sysflag, measflag, ("--count", {"type": int}), ("--n", {"type": int}),
         ("--pairs", {"type": int}), ("--threshold", {"type": float})])
    add("verify", _cmd_verify, [("--suite", {}), ("--trials", {"type": int})])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_usage(sys.stderr)
            return 1
        return args.fn(args)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except (FkmetricError, ValueError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
