#!/usr/bin/env python3
"""Recompute summary statistics from errors.csv and compare them with
summary.json. Exit status 0 when every value agrees to --tol."""

import argparse
import csv
import json
import math
import pathlib
import statistics
import sys


def load_rows(path):
    with open(path, newline="") as f:
        lines = [ln for ln in f if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def stats(values):
    mean = math.fsum(values) / len(values)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return mean, std


def expected(rows, action):
    out = {}
    for obj in ("tool", "probe"):
        sel = [r for r in rows if int(r["action"]) == action and r["object"] == obj]
        out[obj] = {
            "trans_err_cm": stats([float(r["trans_err_cm"]) for r in sel]),
            "rot_err_deg": stats([float(r["rot_err_deg"]) for r in sel]),
        }
        if obj == "tool":
            out["task_success_rate"] = sum(int(r["task_success"]) for r in sel) / len(sel)
            out["trials"] = len(sel)
    return out


def compare(label, want, got, tol, errors):
    if got["trials"] != want["trials"]:
        errors.append(f"{label}: trials {got['trials']} != {want['trials']}")
    for obj in ("tool", "probe"):
        for key in ("trans_err_cm", "rot_err_deg"):
            for k, v in zip(("mean", "std"), want[obj][key]):
                g = got[obj][key][k]
                if abs(g - v) > tol:
                    errors.append(f"{label}: {obj}.{key}.{k} json {g!r} recomputed {v!r}")
    if abs(got["task_success_rate"] - want["task_success_rate"]) > tol:
        errors.append(f"{label}: task_success_rate json {got['task_success_rate']!r} "
                      f"recomputed {want['task_success_rate']!r}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("run_dir", help="directory holding errors.csv and summary.json")
    ap.add_argument("--tol", type=float, default=1e-9)
    args = ap.parse_args()
    d = pathlib.Path(args.run_dir)
    rows = load_rows(d / "errors.csv")
    summary = json.loads((d / "summary.json").read_text())

    with open(d / "errors.csv") as f:
        manifest = f.readline().split()[-1]
    errors = []
    if manifest != summary["manifest"]["hash"]:
        errors.append(f"manifest hash mismatch: csv {manifest} json {summary['manifest']['hash']}")

    n_actions = summary["actions"]
    compare("final", expected(rows, n_actions - 1), summary["final"], args.tol, errors)
    for block in summary["per_action"]:
        a = block["action"]
        compare(f"action {a}", expected(rows, a), block["stats"], args.tol, errors)

    for e in errors:
        print(e, file=sys.stderr)
    print(f"{d}: {len(summary['per_action'])} actions checked, {len(errors)} mismatches")
    return 1 if errors else 0


if __name__ == "__main__":
    sys.exit(main())
