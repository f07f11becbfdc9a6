"""Command-line interface: ``pvdrem {run,sweep,iv-curve,mpp-oracle}``."""

from __future__ import annotations

import argparse
import csv
import functools
import json
import sys
from pathlib import Path

import numpy as np

from ..exceptions import PVDremError
from ..mpp import FORMS, H, MppParams, brute_force_mpp, mpp_voltage
from ..pv_model import IVParams, iv_curve, open_circuit_voltage
from .config import PRESETS, load_config
from .io import metrics_document, write_csv, write_run
from .simulate import run
from .sweep import format_table, sweep, table_rows, vary


def _overrides(pairs):
    out = {}
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"--set expects KEY=VALUE, got {pair!r}")
        out[key.strip()] = value.strip()
    return out


def _config(args):
    overrides = _overrides(args.set)
    if getattr(args, "log_full", False):
        overrides["output.log_full"] = "true"
    return load_config(args.config, args.preset, overrides)


def _truth(args):
    if getattr(args, "a", None):
        return IVParams(*(float(x) for x in args.a.split(",")))
    cfg = _config(args)
    return cfg.environment.params_at(cfg.reference, args.time)


def _write_labelled(root, seed, label, result):
    write_run(Path(root) / label.replace("/", "_"), result, seed)


def cmd_run(args):
    cfg = _config(args)
    result = run(cfg)
    out = write_run(args.out or Path("runs") / cfg.name, result, args.seed)
    doc = metrics_document(result, args.seed)
    print(json.dumps(doc["metrics"], indent=2, sort_keys=True))
    print(f"wrote {out}")
    if not result.ok:
        print(f"run failed: {result.failure}", file=sys.stderr)
        return 1
    return 0


def cmd_sweep(args):
    base = _config(args)
    configs = vary(base, args.vary, args.values)
    root = Path(args.out or Path("runs") / f"{base.name}-sweep")
    root.mkdir(parents=True, exist_ok=True)
    writer = functools.partial(_write_labelled, root, args.seed)
    rows = sweep(configs, jobs=args.jobs, writer=writer)
    with open(root / "sweep.csv", "w", newline="") as fh:
        csv.writer(fh).writerows(table_rows(rows))
    print(format_table(rows))
    print(f"wrote {root / 'sweep.csv'}")
    return 0 if all(r.failure is None for r in rows) else 1


def cmd_iv_curve(args):
    a = _truth(args)
    v_max = args.v_max or open_circuit_voltage(a)
    table = iv_curve(a, np.linspace(0.0, v_max, args.points))
    if args.out:
        write_csv(args.out, ("V", "I", "P"), table)
        print(f"wrote {args.out}")
    else:
        w = csv.writer(sys.stdout)
        w.writerow(("V", "I", "P"))
        w.writerows([[repr(float(v)) for v in row] for row in table])
    return 0


def cmd_mpp_oracle(args):
    a = _truth(args)
    V, I, P = brute_force_mpp(a, n=args.points)
    p = MppParams.from_a(a)
    doc = {
        "a": list(a),
        "V_star": V, "I_star": I, "P_star": P,
        "V_oc": open_circuit_voltage(a),
        "H_at_V_star": H(p, V),
        "H_root": {form: mpp_voltage(p, form) for form in FORMS},
    }
    print(json.dumps(doc, indent=2))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pvdrem",
        description="Online identification of PV array parameters and MPP voltage estimation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="flat key = value scenario file")
        p.add_argument("--preset", choices=sorted(PRESETS),
                       help="base scenario (default: paper-sec8, or the file's preset key)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one dotted config key; repeatable")
        p.add_argument("--out", help="output directory (file for iv-curve)")
        p.add_argument("--seed", type=int, default=None,
                       help="reserved; simulations are deterministic and ignore it")

    p = sub.add_parser("run", help="simulate one scenario")
    common(p)
    p.add_argument("--log-full", action="store_true", help="log every integration step")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a scenario for several values of one key")
    common(p)
    p.add_argument("--log-full", action="store_true", help="log every integration step")
    p.add_argument("--vary", required=True, metavar="KEY", help="dotted config key to vary")
    p.add_argument("--values", required=True, nargs="+", help="values for --vary")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=cmd_sweep)

    for name, func, helptext in (("iv-curve", cmd_iv_curve, "tabulate V, I, P"),
                                 ("mpp-oracle", cmd_mpp_oracle, "brute-force MPP and H roots")):
        p = sub.add_parser(name, help=helptext)
        common(p)
        p.add_argument("--a", help="comma-separated a1..a5 (default: scenario truth)")
        p.add_argument("--time", type=float, default=0.0,
                       help="scenario time at which the truth is taken")
        p.add_argument("--points", type=int, default=200, help="grid size")
        if name == "iv-curve":
            p.add_argument("--v-max", type=float, default=None,
                           help="upper voltage (default: open circuit)")
        p.set_defaults(func=func)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (PVDremError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
