"""Command-line surface: simulate / ingest / estimate / fit / validate / plan / extract.

All reports go to standard output as JSON; trace and series data are CSV.
Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import channel, hmm, protocol, stats
from .errors import PhyskeyError
from .traces import TraceFile, ingest_traces, trace_to_file


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _load_trace(path: str, role: str):
    from .traces import MeasurementTrace
    tf = TraceFile.load(path)
    ids = tf.node_ids()
    if len(ids) != 1:
        raise PhyskeyError(f"{path}: expected a single node, found {ids}")
    trace = tf.trace(ids[0])
    return MeasurementTrace(trace.seqs, trace.levels, role, dict(trace.meta))


def _load_config(path: str) -> channel.ChannelConfig:
    doc = json.loads(Path(path).read_text())
    if "calibrate" in doc:
        cal = doc["calibrate"]
        return channel.calibrate_to_reference_rates(
            float(cal["entropy_rate"]), float(cal["word_error_rate"]),
            levels=int(cal.get("levels", 9)),
            seed=int(cal.get("seed", 2026)))
    return channel.ChannelConfig.from_dict(doc)


def _load_fits(path: str | None):
    if path is None:
        return protocol.REFERENCE_ENTROPY_FIT, protocol.REFERENCE_ERROR_FIT
    doc = json.loads(Path(path).read_text())
    g = hmm.LinearFit(float(doc["g"]["slope"]), float(doc["g"]["intercept"]),
                      float(doc["g"].get("residual_sum_squares", 0.0)))
    e = hmm.LinearFit(float(doc["e"]["slope"]), float(doc["e"]["intercept"]),
                      float(doc["e"].get("residual_sum_squares", 0.0)))
    return g, e


def _cmd_simulate(args) -> int:
    config = _load_config(args.config)
    if args.n is not None:
        config = replace(config, n=args.n)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    run = channel.simulate_run(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for trace in (run.alice, run.bob, run.eve):
        trace_to_file(trace).save(out / f"{trace.node_id}.csv")
    _emit({"n": config.n, "seed": config.seed,
           "files": [str(out / f"{t}.csv") for t in ("alice", "bob", "eve")],
           "calibration": config.calibration})
    return 0


def _cmd_ingest(args) -> int:
    traces = {"alice": _load_trace(args.alice, "alice"),
              "bob": _load_trace(args.bob, "bob")}
    for i, path in enumerate(args.eve or []):
        traces[f"eve{i}" if len(args.eve) > 1 else "eve"] = _load_trace(
            path, f"eve{i}" if len(args.eve) > 1 else "eve")
    aligned, report = ingest_traces(traces, eve_filter=args.eve_filter,
                                    magnitude=args.magnitude)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for role, trace in aligned.items():
            trace_to_file(trace).save(out / f"{role}.csv")
        report["files"] = sorted(str(out / f"{r}.csv") for r in aligned)
    _emit(report)
    return 0


def _aligned_pair(alice_path: str, second_path: str, second_role: str,
                  magnitude: int):
    traces = {"alice": _load_trace(alice_path, "alice"),
              "bob": _load_trace(second_path, second_role)}
    aligned, report = ingest_traces(traces, magnitude=magnitude)
    return aligned["alice"], aligned["bob"], report


def _cmd_estimate_entropy(args) -> int:
    alice, eve, report = _aligned_pair(args.alice, args.eve, "eve",
                                       magnitude=args.levels - 1)
    model = hmm.fit_hmm_from_traces(alice, eve, levels=args.levels,
                                    smoothing=args.smoothing)
    n_slices = len(alice) // args.slice
    if n_slices < 1:
        raise PhyskeyError(f"need at least {args.slice} aligned samples")
    experiments = [
        hmm.obs_from_values(model, eve.levels[s * args.slice:(s + 1) * args.slice])
        for s in range(n_slices)
    ]
    est = hmm.estimate_avg_conditional_min_entropy(model, experiments)
    _emit({"estimate": est.to_dict(), "levels": args.levels,
           "slice": args.slice, "ingest": report})
    return 0


def _cmd_fit_growth(args) -> int:
    alice = _load_trace(args.alice, "alice")
    bob = _load_trace(args.bob, "bob")
    eve = _load_trace(args.eve, "eve")
    aligned, report = ingest_traces({"alice": alice, "bob": bob, "eve": eve},
                                    eve_filter=True, magnitude=args.levels - 1)
    alice, bob, eve = aligned["alice"], aligned["bob"], aligned["eve"]

    slice_len = args.slice_samples
    n_slices = len(alice) // slice_len
    if n_slices < 2:
        raise PhyskeyError(f"need at least {2 * slice_len} aligned samples")
    model = hmm.fit_hmm_from_traces(alice, eve, levels=args.levels,
                                    smoothing=args.smoothing)
    checkpoints = list(range(args.step, slice_len + 1, args.step))
    obs = np.stack([
        np.array([model.symbol_index(v) for v in
                  eve.levels[s * slice_len:(s + 1) * slice_len]])
        for s in range(n_slices)
    ])
    entropy = hmm.entropy_profile_batch(model, obs, checkpoints)
    errors = np.stack([
        np.cumsum(alice.levels[s * slice_len:(s + 1) * slice_len]
                  != bob.levels[s * slice_len:(s + 1) * slice_len])[
            np.array(checkpoints) - 1]
        for s in range(n_slices)
    ])
    g = hmm.fit_linear_growth(list(zip(checkpoints, entropy.mean(axis=0))))
    e = hmm.fit_linear_growth(list(zip(checkpoints, errors.mean(axis=0))))
    if args.out_csv:
        lines = ["n,entropy_mean,entropy_std,errors_mean,errors_std"]
        for i, n in enumerate(checkpoints):
            lines.append(f"{n},{entropy[:, i].mean():.6f},{entropy[:, i].std(ddof=1):.6f},"
                         f"{errors[:, i].mean():.6f},{errors[:, i].std(ddof=1):.6f}")
        Path(args.out_csv).write_text("\n".join(lines) + "\n")
    _emit({"g": g.to_dict(), "e": e.to_dict(), "slices": n_slices,
           "checkpoints": checkpoints, "ingest": report})
    return 0


def _cmd_validate_assumptions(args) -> int:
    alice, eve, report = _aligned_pair(args.alice, args.eve, "eve",
                                       magnitude=args.levels - 1 if args.levels else 8)
    cfg = {"alpha": args.alpha, "trials": args.trials, "slice_len": args.slice,
           "max_lag": args.max_lag}
    if args.levels:
        cfg["levels"] = args.levels
    result = stats.validate_assumptions(alice, eve, cfg, seed=args.seed)
    if args.lag_csv:
        Path(args.lag_csv).write_text(result.markov_lag_profile.to_csv())
    doc = result.to_dict()
    doc["ingest"] = report
    _emit(doc)
    return 0


def _cmd_plan(args) -> int:
    g, e = _load_fits(args.fits)
    params = protocol.plan_parameters(l=args.l, lambda_=getattr(args, "lambda"),
                                      c=args.c, entropy_fit=g, error_fit=e,
                                      m=args.m)
    _emit(params.report)
    return 0


def _cmd_extract_key(args) -> int:
    g, e = _load_fits(args.fits)
    params = protocol.plan_parameters(l=args.l, lambda_=getattr(args, "lambda"),
                                      c=args.c, entropy_fit=g, error_fit=e)
    if args.n is not None:
        params = replace(params, n=args.n)
    traces = {"alice": _load_trace(args.alice, "alice"),
              "bob": _load_trace(args.bob, "bob")}
    aligned, _ = ingest_traces(traces, magnitude=params.m)
    result = protocol.run_exchange(aligned["alice"], aligned["bob"], params,
                                   seed=args.seed)
    if args.transcript:
        Path(args.transcript).write_bytes(result.transcript.to_bytes())
    doc = result.to_dict()
    doc["plan"] = params.report
    _emit(doc)
    return 0


def _cmd_report(args) -> int:
    doc = json.loads(Path(args.input).read_text())

    def render(d, indent=0):
        for key in sorted(d):
            value = d[key]
            if isinstance(value, dict):
                print(" " * indent + f"{key}:")
                render(value, indent + 2)
            elif isinstance(value, list) and len(value) > 8:
                print(" " * indent + f"{key}: [{len(value)} values]")
            else:
                print(" " * indent + f"{key}: {value}")

    render(doc)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="physkey",
        description="Physical-layer key extraction toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate alice/bob/eve traces from a channel config")
    p.add_argument("--config", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("ingest", help="align traces on shared sequence numbers")
    p.add_argument("--alice", required=True)
    p.add_argument("--bob", required=True)
    p.add_argument("--eve", action="append")
    p.add_argument("--eve-filter", action="store_true")
    p.add_argument("--magnitude", type=int, default=8)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("estimate-entropy", help="conditional min-entropy of alice given eve")
    p.add_argument("--alice", required=True)
    p.add_argument("--eve", required=True)
    p.add_argument("--levels", type=int, default=32)
    p.add_argument("--slice", type=int, default=100)
    p.add_argument("--smoothing", type=float, default=0.0)
    p.set_defaults(func=_cmd_estimate_entropy)

    p = sub.add_parser("fit-growth", help="fit entropy and word-error growth lines")
    p.add_argument("--alice", required=True)
    p.add_argument("--bob", required=True)
    p.add_argument("--eve", required=True)
    p.add_argument("--levels", type=int, default=9)
    p.add_argument("--slice-samples", type=int, default=200)
    p.add_argument("--step", type=int, default=10)
    p.add_argument("--smoothing", type=float, default=0.0)
    p.add_argument("--out-csv")
    p.set_defaults(func=_cmd_fit_growth)

    p = sub.add_parser("validate-assumptions", help="run the channel assumption suite")
    p.add_argument("--alice", required=True)
    p.add_argument("--eve", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--slice", type=int, default=100)
    p.add_argument("--max-lag", type=int, default=6)
    p.add_argument("--levels", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lag-csv")
    p.set_defaults(func=_cmd_validate_assumptions)

    p = sub.add_parser("plan", help="choose sample count and code for a key length")
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--lambda", type=float, required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--fits")
    p.add_argument("--m", type=int, default=8)
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("extract-key", help="run one full exchange over trace files")
    p.add_argument("--alice", required=True)
    p.add_argument("--bob", required=True)
    p.add_argument("--l", type=int, default=128)
    p.add_argument("--lambda", type=float, default=80)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--fits")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--transcript")
    p.set_defaults(func=_cmd_extract_key)

    p = sub.add_parser("report", help="render a JSON report as text")
    p.add_argument("--input", required=True)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (PhyskeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
