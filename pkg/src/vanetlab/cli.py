"""Command-line entry point: generate, simulate, sweep, plot-data.

Every flag can also come from a ``--config`` file of ``key = value`` lines
(keys use underscores, e.g. ``out_dir``). Flags override the file and the
VANETLAB_SEED environment variable overrides both for ``seed``.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .errors import InvalidConfigError, VanetLabError
from .harness.experiment import ExperimentConfig, build_scenario, generate_trace, run_scenario
from .harness.sweep import emit_plot_data, report_csv, sweep, sweep_from_csv, sweep_to_csv
from .harness.traffic import TrafficConfig
from .trace_io import parse_trace, write_trace

SEED_ENV = "VANETLAB_SEED"

# option name -> (type, default); None defaults mean "required"
_OPTIONS = {
    "generate": {
        "model": (str, None), "vehicles": (int, None), "duration": (float, 300.0),
        "seed": (int, 0), "out": (str, None),
    },
    "simulate": {
        "trace": (str, None), "connections": (int, None), "seed": (int, 0),
        "duration": (float, 300.0), "out": (str, None), "log": (str, ""),
    },
    "sweep": {
        "models": (str, "flow,mm"), "vehicles": (str, "15,30,50,75,100"),
        "seeds": (str, "1..5"), "duration": (float, 300.0), "workers": (int, 1),
        "out": (str, None),
    },
    "plot-data": {
        "in": (str, None), "out_dir": (str, None),
    },
}


def read_config(path) -> dict:
    out = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def parse_int_list(text: str) -> list:
    """``"15,30,50"`` or ``"1..5"`` (inclusive) or a mix of both."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            a, b = part.split("..", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    if not out:
        raise InvalidConfigError(f"empty list {text!r}")
    return out


def resolve(command: str, flags: dict, environ=None) -> dict:
    """Merge config file, flags and environment into the final option set."""
    environ = os.environ if environ is None else environ
    spec = _OPTIONS[command]
    file_vals = read_config(flags["config"]) if flags.get("config") else {}
    unknown = set(file_vals) - set(spec)
    if unknown:
        raise InvalidConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
    opts = {}
    for key, (kind, default) in spec.items():
        val = flags.get(key)
        if val is None:
            val = file_vals.get(key, default)
        if val is None:
            raise InvalidConfigError(f"{command}: missing required option --{key.replace('_', '-')}")
        opts[key] = kind(val)
    if "seed" in spec and environ.get(SEED_ENV):
        opts["seed"] = int(environ[SEED_ENV])
    return opts


def _write(path, text):
    p = Path(path)
    if p.parent != Path(""):
        p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def cmd_generate(o):
    cfg = ExperimentConfig(duration=o["duration"])
    ts = generate_trace(o["model"], o["vehicles"], o["seed"], cfg)
    _write(o["out"], write_trace(ts))


def cmd_simulate(o):
    cfg = ExperimentConfig(duration=o["duration"],
                           traffic=TrafficConfig(n_connections=o["connections"]))
    text = Path(o["trace"]).read_text(encoding="utf-8")
    ts = parse_trace(text, duration=o["duration"], area=(cfg.area_width, cfg.area_height))
    report, sim = run_scenario(build_scenario(ts, o["seed"], cfg))
    _write(o["out"], report_csv(report, (ts.n_vehicles, o["seed"]), ("n_vehicles", "seed")))
    if o["log"]:
        _write(o["log"], sim.log.to_text())


def cmd_sweep(o):
    cfg = ExperimentConfig(duration=o["duration"])
    models = [m.strip() for m in o["models"].split(",") if m.strip()]

    def progress(row):
        print(f"{row[0]} n={row[1]} seed={row[2]} done", file=sys.stderr, flush=True)

    sr = sweep(models, parse_int_list(o["vehicles"]), parse_int_list(o["seeds"]), cfg,
               workers=o["workers"], progress=progress)
    _write(o["out"], sweep_to_csv(sr))


def cmd_plot_data(o):
    sr = sweep_from_csv(Path(o["in"]).read_text(encoding="utf-8"))
    for metric, table in emit_plot_data(sr).items():
        _write(Path(o["out_dir"]) / f"{metric}.csv", table)


_COMMANDS = {"generate": cmd_generate, "simulate": cmd_simulate, "sweep": cmd_sweep,
             "plot-data": cmd_plot_data}


def build_parser():
    p = argparse.ArgumentParser(prog="vanetlab",
                                description="VANET mobility generation and AODV evaluation")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "generate": "write an ns-2 movement trace",
        "simulate": "run AODV over a trace and write a metrics CSV",
        "sweep": "run a node-count sweep and write one CSV row per run",
        "plot-data": "turn a sweep CSV into per-metric plot tables",
    }
    for name, spec in _OPTIONS.items():
        sp = sub.add_parser(name, help=helps[name])
        sp.add_argument("--config", help="file of 'key = value' lines")
        for key, (kind, default) in spec.items():
            flag = "--" + key.replace("_", "-")
            extra = {"choices": ["sm", "mm", "dm", "flow"]} if key == "model" else {}
            hint = "required" if default is None else f"default {default}"
            # dest keeps the underscore form so flags and config keys line up
            sp.add_argument(flag, dest=key, type=kind, default=None, help=hint, **extra)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    flags = vars(args)
    try:
        opts = resolve(args.command, flags)
        _COMMANDS[args.command](opts)
    except (VanetLabError, OSError) as exc:
        print(f"vanetlab: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
