"""Command-line front end.

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import sys

from .harness import (ConfigError, RunConfig, awgn_siso_reference, complexity_sweep,
                      loglog_slope, oracle_compare, run_trials)
from .constellation import build_qam
from .io import format_csv, load_run_config, write_csv, write_plotdata
from .rlb import RlbConfig


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _detector_list(text: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in text.split(",") if t.strip())


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--out", help="CSV output path (default: stdout)")
    common.add_argument("--detectors", type=_detector_list,
                        help="comma list from mf,zf,mmse,mmse-sic,las,rlb-mf,rlb-mmse,ml")
    common.add_argument("--workers", type=int, default=1, help="worker processes")

    parser = _Parser(prog="rlblas", description="RLB-LAS MIMO detection simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="BER-vs-SNR Monte Carlo run")
    run.add_argument("--config", required=True, help="key = value run config file")
    run.add_argument("--plotdata", help="also write per-detector (snr, ber) blocks here")
    run.add_argument("--siso", action="store_true",
                     help="print the analytic AWGN SISO reference for the SNR grid")

    sweep = sub.add_parser("sweep", parents=[common], help="flops/symbol vs K = N at a target BER")
    sweep.add_argument("--k-list", type=_int_list, default=[8, 16, 32, 64])
    sweep.add_argument("--target-ber", type=float, default=1e-2)
    sweep.add_argument("--snr-grid", type=_float_list, default=[float(s) for s in range(0, 21)])
    sweep.add_argument("--runs", type=int, default=100)
    sweep.add_argument("--vectors-per-run", type=int, default=10)

    oc = sub.add_parser("oracle-compare", parents=[common],
                        help="MF-RLB-LAS against exhaustive ML at small K")
    oc.add_argument("--k", type=int, default=4)
    oc.add_argument("--snr", type=float, default=12.0)
    oc.add_argument("--trials", type=int, default=10000)
    return parser


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_run(args) -> None:
    config = load_run_config(args.config, master_seed=args.seed, detectors=args.detectors)
    records = run_trials(config, workers=args.workers)
    if args.out:
        write_csv(records, args.out)
    else:
        sys.stdout.write(format_csv(records))
    if args.plotdata:
        write_plotdata(records, args.plotdata)
    if args.siso:
        ref = awgn_siso_reference(config.snr_grid_db, build_qam(config.constellation_order,
                                                                config.scale_mode))
        for snr, ber in ref:
            print(f"# awgn-siso {snr!r} {ber!r}", file=sys.stderr)


def _cmd_sweep(args) -> None:
    detectors = args.detectors or ("rlb-mf",)
    if len(detectors) != 1:
        raise ConfigError("sweep takes exactly one detector")
    config = RunConfig(K=min(args.k_list), N=min(args.k_list), snr_grid_db=args.snr_grid,
                       runs=args.runs, vectors_per_run=args.vectors_per_run,
                       detectors=detectors,
                       master_seed=args.seed or 0, rlb=RlbConfig())
    points = complexity_sweep(args.k_list, args.target_ber, config, detectors[0], args.workers)
    lines = ["K,snr_db,ber,avg_flops_per_symbol"]
    for p in points:
        lines.append(",".join("" if v is None else repr(v) if isinstance(v, float) else str(v)
                              for v in (p.K, p.snr_db, p.ber, p.avg_flops_per_symbol)))
    _emit("\n".join(lines) + "\n", args.out)
    try:
        print(f"# log-log slope {loglog_slope(points):.3f}", file=sys.stderr)
    except ValueError:
        pass


def _cmd_oracle(args) -> None:
    if args.detectors and tuple(args.detectors) != ("rlb-mf",):
        raise ConfigError("oracle-compare checks rlb-mf only")
    res = oracle_compare(args.k, args.snr, args.trials, master_seed=args.seed or 0)
    text = (f"trials,matched,match_fraction,bits,rlb_ber,ml_ber\n"
            f"{res.trials},{res.matched},{res.match_fraction!r},{res.bits},"
            f"{res.rlb_ber!r},{res.ml_ber!r}\n")
    _emit(text, args.out)


COMMANDS = {"run": _cmd_run, "sweep": _cmd_sweep, "oracle-compare": _cmd_oracle}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
