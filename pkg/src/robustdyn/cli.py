"""Command line entry point: ``robustdyn run|attack|bench|separation``."""

from __future__ import annotations

import argparse
import csv
import json
import sys

from . import experiments as ex
from .config import load_config


def _summary(records: list[dict], cols: list[str]) -> str:
    cols = [c for c in cols if any(c in r for r in records)]
    rows = [[_fmt(r.get(c, "")) for c in cols] for r in records]
    widths = [max(len(c), *(len(row[i]) for row in rows)) if rows else len(c) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in rows]
    return "\n".join(lines)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, list):
        return "[" + ",".join(_fmt(x) for x in v) + "]"
    return str(v)


def _write(records: list[dict], out: str | None, csv_path: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            for r in records:
                fh.write(json.dumps(r, sort_keys=True) + "\n")
    if csv_path and records:
        keys = sorted({k for r in records for k in r})
        with open(csv_path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=keys)
            w.writeheader()
            for r in records:
                w.writerow({k: json.dumps(v) if isinstance(v, list) else v for k, v in r.items()})


COLUMNS = {
    "run": ["trial", "problem", "adversary", "wrapped", "acc_freq", "all_accurate", "final_truth", "final_output",
            "work"],
    "attack": ["trial", "target", "acc_freq", "all_accurate", "min_copy_frac", "probes"],
    "bench": ["trial", "m", "mult", "edges", "m_units", "refresh", "decompose", "phase_refresh", "acc_freq"],
    "separation": ["trial", "experiment", "algorithm", "steps", "cost", "formula", "preprocess", "blocks",
                   "block_formula", "slack", "ratio_vs_oblivious", "w", "w_eff", "max_err", "roundtrip_ok"],
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="robustdyn", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--seed", type=int, default=0, help="master seed")
        p.add_argument("--trials", type=int, help="number of trials (overrides config)")
        p.add_argument("--out", help="write JSON Lines records here")
        p.add_argument("--csv", help="also write a CSV table here")
        p.add_argument("--quiet", action="store_true", help="skip the summary table")
        return p

    common(sub.add_parser("run", help="one game: problem x adversary x (wrapped or single copy)"))
    common(sub.add_parser("attack", help="adaptive attack vs single copy and vs wrapped estimator"))
    b = common(sub.add_parser("bench", help="operation-counter tables (refresh vs decompose, pipeline phases)"))
    b.add_argument("--kind", choices=["refresh", "pipeline"], default="refresh")
    s = common(sub.add_parser("separation", help="list-of-outputs and boxes cost identities"))
    s.add_argument("--problem", choices=["lob", "boxes"], default="lob")
    s.add_argument("--n", type=int, help="string length (lob) or plaintext bits (boxes)")
    s.add_argument("--c", type=int, help="list exponent: |Y| = n^c")
    s.add_argument("--chain-len", type=int, help="oracle chain length T of a box")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = load_config(args.config)
    if args.trials is not None:
        cfg["trials"] = args.trials
    if args.cmd == "run":
        records = ex.game_experiment(cfg, args.seed)
    elif args.cmd == "attack":
        records = ex.attack_experiment(cfg, args.seed)
    elif args.cmd == "bench":
        fn = ex.refresh_bench if args.kind == "refresh" else ex.pipeline_experiment
        records = fn(cfg, args.seed)
    else:
        cfg["problem"] = args.problem
        if args.n is not None:
            cfg["n" if args.problem == "lob" else "bits"] = args.n
        if args.c is not None:
            cfg["c"] = args.c
        if args.chain_len is not None:
            cfg["chain_len"] = args.chain_len
        records = ex.separation_experiment(cfg, args.seed)
    _write(records, args.out, args.csv)
    if not args.quiet:
        print(_summary(records, COLUMNS[args.cmd]))
    return 0


if __name__ == "__main__":
    sys.exit(main())
