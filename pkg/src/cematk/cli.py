"""Unified command-line entry point.

Subcommands: encrypt, keysched, sim, sema, filter, attack, eval, report.
Exit codes: 0 success, 1 usage error, 2 data error (unreadable or
malformed files). All outputs are deterministic given the inputs and
seed, so identical invocations produce byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import dsp, evaluate, traceio
from .attack import attack_round_key, recover_full_key
from .config import SEED_ENV_VAR, load_sim_config
from .errors import AmbiguousKeyError, CematkError
from .present import KeyRegister, encrypt_block, encrypt_rounds, key_schedule
from .simulate import default_sweep_plaintexts, simulate_idle_set, simulate_set


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _parse_state(text: str, what: str) -> int:
    text = text.strip()
    if len(text) != 16:
        raise ValueError(f"{what} must be 16 hex digits")
    try:
        return int(text, 16)
    except ValueError:
        raise ValueError(f"{what} must be hexadecimal") from None


def _parse_pair(text: str, what: str, conv=float) -> tuple:
    parts = text.split(":")
    if len(parts) != 2:
        raise ValueError(f"{what} must have the form lo:hi")
    try:
        return conv(parts[0]), conv(parts[1])
    except ValueError:
        raise ValueError(f"{what} must contain numbers") from None


def _parse_bytes_spec(text: str) -> tuple:
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, _, hi = part.partition("-")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return tuple(dict.fromkeys(out))


def _write_json(path, payload) -> None:
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


# --- subcommand implementations -------------------------------------------

def _cmd_encrypt(args) -> int:
    key = KeyRegister.from_hex(args.key)
    pt = _parse_state(args.pt, "plaintext")
    if args.rounds is None:
        print(f"{encrypt_block(pt, key):016X}")
        return 0
    state, captures = encrypt_rounds(pt, key, args.rounds)
    for cap in captures:
        print(f"round {cap.round_no:02d} addkey={cap.addkey_out:016X} "
              f"sbox={cap.sbox_out:016X}")
    print(f"state {state:016X}")
    return 0


def _cmd_keysched(args) -> int:
    key = KeyRegister.from_hex(args.key)
    for i, rk in enumerate(key_schedule(key), start=1):
        print(f"K{i:02d} {rk:016X}")
    return 0


def _cmd_sim(args) -> int:
    cfg = load_sim_config(args.config)
    if args.idle:
        ts = simulate_idle_set(args.n_traces, cfg)
    else:
        if args.n_traces != 256:
            raise ValueError("--n-traces applies to --idle only; encryption "
                             "sets use the 256-plaintext sweep")
        ts = simulate_set(default_sweep_plaintexts(), cfg)
    traceio.write_traceset(ts, args.out)
    print(f"wrote {ts.n_traces} x {ts.n_samples} traces to {args.out}")
    return 0


def _cmd_filter(args) -> int:
    ts = traceio.read_traceset(args.infile)
    out = dsp.bandpass(ts, args.lo, args.hi, transition_hz=args.transition)
    traceio.write_traceset(out, args.out)
    print(f"wrote filtered traces to {args.out}")
    return 0


def _cmd_sema(args) -> int:
    enc = traceio.read_traceset(args.enc)
    idle = traceio.read_traceset(args.idle)
    report = dsp.spectral_diff(enc, idle, new_ratio=args.new_ratio,
                               amp_ratio=args.amp_ratio)
    payload = {
        "new_components": [{"freq_hz": f, "magnitude": m}
                           for f, m in report.new_components],
        "amplified_components": [{"freq_hz": f, "ratio": r}
                                 for f, r in report.amplified_components],
        "new_ratio": report.new_ratio,
        "amp_ratio": report.amp_ratio,
        "noise_floor": report.noise_floor,
        "mean_amplitude_enc": report.mean_amplitude_enc,
        "mean_amplitude_idle": report.mean_amplitude_idle,
    }
    _write_json(args.out, payload)
    print(f"{len(report.new_components)} new / "
          f"{len(report.amplified_components)} amplified components "
          f"-> {args.out}")
    return 0


def _cmd_attack(args) -> int:
    ts = traceio.read_traceset(args.traces)
    band = _parse_pair(args.band, "--band") if args.band else None
    window = None
    if args.window:
        window = _parse_pair(args.window, "--window", conv=int)
    byte_indices = _parse_bytes_spec(args.bytes)

    result = attack_round_key(ts, band=band, window=window,
                              byte_indices=byte_indices,
                              keep_surfaces=args.dump_surface is not None)

    full_key_hex = None
    full_key_status = "not-attempted"
    if args.known_pair:
        if result.recovered_k1 is None:
            raise ValueError("--known-pair needs all 8 bytes attacked")
        pt_hex, _, ct_hex = args.known_pair.partition(":")
        pair = (_parse_state(pt_hex, "known plaintext"),
                _parse_state(ct_hex, "known ciphertext"))
        try:
            full = recover_full_key(result.recovered_k1, pair)
        except AmbiguousKeyError:
            full, full_key_status = None, "ambiguous"
        else:
            full_key_status = "recovered" if full else "not-found"
        full_key_hex = full.to_hex() if full else None

    payload = {
        "diagnostics": result.diagnostics,
        "byte_index_convention": "byte 0 = most significant byte of K1",
        "recovered_k1": (f"{result.recovered_k1:016X}"
                         if result.recovered_k1 is not None else None),
        "full_key": full_key_hex,
        "full_key_status": full_key_status,
        "rankings": {
            str(b): [{"key_byte": f"{e.key_byte:02X}", "score": e.score,
                      "sample_index": e.sample_index, "sign": e.sign}
                     for e in ranking.entries]
            for b, ranking in result.rankings.items()
        },
    }
    _write_json(args.out, payload)

    if args.dump_surface is not None:
        for b, surface in result.surfaces.items():
            out = Path(f"{args.dump_surface}.byte{b}.csv")
            with open(out, "w", newline="") as f:
                w = csv.writer(f)
                w.writerow(["key_byte"]
                           + [f"s{i}" for i in range(surface.rho.shape[1])])
                for k in range(256):
                    w.writerow([f"{k:02X}"]
                               + [repr(v) for v in surface.rho[k]])

    best = {b: result.rankings[b].best for b in sorted(result.rankings)}
    line = " ".join(f"b{b}={e.key_byte:02X}({e.score:.3f})"
                    for b, e in best.items())
    print(f"rank-1 bytes: {line}")
    print(f"result -> {args.out}")
    return 0


def _cmd_eval(args) -> int:
    cfg = load_sim_config(args.config)
    counts = [int(c) for c in args.trace_counts.split(",")]
    seed = args.seed if args.seed is not None else cfg.seed
    curve = evaluate.run_trials(cfg, counts, args.trials, seed)
    with open(args.out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["trace_count", "trials", "success_rate",
                    "ci95_half_width", "mean_rank"]
                   + [f"success_byte{b}" for b in range(8)])
        for i, count in enumerate(curve.trace_counts):
            w.writerow([count, curve.trials, repr(float(curve.success_rate[i])),
                        repr(float(curve.ci_half_width[i])),
                        repr(float(curve.mean_rank[i]))]
                       + [repr(float(v)) for v in curve.per_byte_success[i]])
    for i, count in enumerate(curve.trace_counts):
        print(f"{count:6d} traces: success {curve.success_rate[i]:.3f} "
              f"+/- {curve.ci_half_width[i]:.3f}")
    print(f"curve -> {args.out}")
    return 0


def _cmd_report(args) -> int:
    cfg = load_sim_config(args.config)
    seed = args.seed if args.seed is not None else cfg.seed
    rankings = evaluate.collect_trial_rankings(cfg, args.traces, args.trials,
                                               seed)
    true_bytes = evaluate.true_k1_bytes(cfg)
    report = evaluate.leakage_probability_report(rankings, true_bytes,
                                                 top_r=args.top_r)

    print(f"Probability of Leakage (top {report.top_r} of 256, "
          f"{report.trials} trials, {args.traces} traces)")
    header = "byte      " + "".join(f"{b:>9d}" for b in range(8))
    probs = "P(leak)   " + "".join(f"{100 * p:>8.2f}%" for p in report.per_byte)
    print(header)
    print(probs)
    print("Probability of Leakage at a Time")
    for k in range(8, 0, -1):
        print(f"{k} byte{'s' if k > 1 else ' '} at a time: "
              f"{100 * report.at_a_time[k]:6.2f}%")

    if args.out:
        with open(args.out, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["kind", "label", "probability"])
            for b in range(8):
                w.writerow(["byte", b, repr(float(report.per_byte[b]))])
            for k in range(8, 0, -1):
                w.writerow(["at_a_time", k, repr(float(report.at_a_time[k]))])
        print(f"report -> {args.out}")
    return 0


# --- parser wiring ---------------------------------------------------------

def _build_parser() -> _Parser:
    parser = _Parser(prog="cematk",
                     description="PRESENT side-channel simulation and "
                                 "correlation attack toolkit")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("encrypt", parents=[], help="encrypt one block")
    p.add_argument("--pt", required=True, help="plaintext, 16 hex digits")
    p.add_argument("--key", required=True, help="key, 20 or 32 hex digits")
    p.add_argument("--rounds", type=int,
                   help="run only N rounds and print intermediates")
    p.set_defaults(func=_cmd_encrypt)

    p = sub.add_parser("keysched", help="print the 32 round keys")
    p.add_argument("--key", required=True, help="key, 20 or 32 hex digits")
    p.set_defaults(func=_cmd_keysched)

    p = sub.add_parser("sim", help="simulate a trace set")
    p.add_argument("--config", required=True, help="simulation config file")
    p.add_argument("--out", required=True, help="output .cemt file")
    p.add_argument("--idle", action="store_true",
                   help="simulate a non-encryption (idle) set")
    p.add_argument("--n-traces", type=int, default=256,
                   help="idle set size (default 256)")
    p.set_defaults(func=_cmd_sim)

    p = sub.add_parser("filter", help="zero-phase bandpass a trace set")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--lo", type=float, required=True, help="low edge, Hz")
    p.add_argument("--hi", type=float, required=True, help="high edge, Hz")
    p.add_argument("--transition", type=float, default=0.0,
                   help="raised-cosine transition width, Hz")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_filter)

    p = sub.add_parser("sema", help="spectral comparison of enc vs idle sets")
    p.add_argument("--enc", required=True)
    p.add_argument("--idle", required=True)
    p.add_argument("--new-ratio", type=float, default=5.0)
    p.add_argument("--amp-ratio", type=float, default=2.0)
    p.add_argument("--out", required=True, help="output JSON report")
    p.set_defaults(func=_cmd_sema)

    p = sub.add_parser("attack", help="correlation attack on a trace set")
    p.add_argument("--traces", required=True)
    p.add_argument("--band", help="bandpass lo:hi in Hz before attacking")
    p.add_argument("--window", help="sample window lo:hi")
    p.add_argument("--bytes", default="0-7",
                   help="byte positions to attack, e.g. 0-7 or 0,3")
    p.add_argument("--known-pair", help="pt:ct hex pair for full-key search")
    p.add_argument("--dump-surface",
                   help="write correlation surfaces to PREFIX.byteN.csv")
    p.add_argument("--out", required=True, help="output JSON result")
    p.set_defaults(func=_cmd_attack)

    p = sub.add_parser("eval", help="success rate vs trace count")
    p.add_argument("--config", required=True)
    p.add_argument("--trace-counts", default="32,64,128,256")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int,
                   help="evaluation seed (default: config seed)")
    p.add_argument("--out", required=True, help="output CSV curve")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("report", help="top-R leakage probability table")
    p.add_argument("--config", required=True)
    p.add_argument("--traces", type=int, default=256,
                   help="traces per trial")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--top-r", type=int, default=5)
    p.add_argument("--seed", type=int,
                   help="evaluation seed (default: config seed)")
    p.add_argument("--out", help="also write the table as CSV")
    p.set_defaults(func=_cmd_report)

    return parser


def dispatch(argv) -> int:
    """Route argv to a subcommand; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args)
    except ValueError as e:
        print(f"cematk: error: {e}", file=sys.stderr)
        return 1
    except (CematkError, OSError) as e:
        print(f"cematk: {e}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
