"""Command-line interface.

Subcommands: ``crb point`` (one scenario point), ``crb sweep`` (a
frequency/SNR/length sweep), ``crb psd`` (ambient PSD grid).  Flags
override config-file values; ``--print-config`` dumps the effective
configuration and exits.  Output is CSV on stdout or ``--out``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure
(singular or ill-conditioned Fisher matrix).
"""

from __future__ import annotations

import argparse
import sys as _sys

from . import scenarios
from .fisher import FisherConditionError
from .scenarios import ConfigError


def _add_common(parser: argparse.ArgumentParser, sweep: bool):
    parser.add_argument("--config", metavar="PATH",
                        help="flat key-value config file")
    parser.add_argument("--system", metavar="PATH",
                        help="system coefficient file, or 'surrogate'")
    parser.add_argument("--case", choices=["1", "2", "both"])
    parser.add_argument("--seed", type=int)
    parser.add_argument("--trials", type=int, metavar="M")
    parser.add_argument("--samples", type=int, metavar="N")
    parser.add_argument("--threads", type=int)
    parser.add_argument("--fo-amp", type=float, dest="fo_amp")
    parser.add_argument("--fo-phase-rad", type=float, dest="fo_phase_rad")
    parser.add_argument("--fo-freq-hz", type=float, dest="fo_freq_hz")
    parser.add_argument("--snr-db", type=float, dest="snr_db")
    parser.add_argument("--snr-mode", choices=["local", "global"],
                        dest="snr_mode")
    if sweep:
        parser.add_argument("--sweep", choices=["freq", "snr", "length"])
        parser.add_argument("--sweep-values", dest="sweep_values",
                            metavar="LIST",
                            help="comma-separated sweep values")
    parser.add_argument("--out", metavar="PATH",
                        help="output CSV path (default stdout)")
    parser.add_argument("--print-config", action="store_true",
                        help="dump the effective config and exit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crb",
        description="Asymptotic Cramer-Rao bounds for joint mode and "
                    "forced-oscillation estimation")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("point", help="run one scenario point"),
                sweep=False)
    _add_common(sub.add_parser("sweep", help="run a parameter sweep"),
                sweep=True)
    _add_common(sub.add_parser("psd", help="emit the ambient PSD grid"),
                sweep=False)
    return parser


_CONFIG_KEYS = ("system", "case", "fo_amp", "fo_phase_rad", "fo_freq_hz",
                "snr_db", "snr_mode", "sweep", "sweep_values", "samples",
                "trials", "seed", "threads")


def _config_from_args(args) -> scenarios.ScenarioConfig:
    file_values = {}
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                file_values = scenarios.parse_config_text(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
    overrides = {key: getattr(args, key, None) for key in _CONFIG_KEYS}
    if args.command == "sweep" and file_values.get("sweep", "none") == "none" \
            and overrides.get("sweep") is None:
        raise ConfigError("sweep command needs a sweep axis "
                          "(--sweep or config)")
    return scenarios.make_config(file_values, overrides)


def _open_out(args):
    if args.out:
        return open(args.out, "w", encoding="utf-8", newline="\n")
    return _sys.stdout


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return 1

    if args.print_config:
        _sys.stdout.write(scenarios.config_text(cfg))
        return 0

    try:
        system = scenarios.load_system(cfg)
        if args.command == "psd":
            table = scenarios.emit_psd(cfg, system)
            out = _open_out(args)
            try:
                scenarios.psd_to_csv(table, out)
            finally:
                if out is not _sys.stdout:
                    out.close()
            return 0

        if args.command == "point":
            rows = scenarios.run_point(cfg, system, point_index=0,
                                       mc_threads=cfg.threads)
        else:
            rows = scenarios.run_sweep(cfg, system)
    except ConfigError as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return 1
    except FisherConditionError as exc:
        print(f"numerical failure: {exc}", file=_sys.stderr)
        return 2

    out = _open_out(args)
    try:
        scenarios.rows_to_csv(rows, out)
    finally:
        if out is not _sys.stdout:
            out.close()

    failures = [r for r in rows if r.error]
    for row in failures:
        print(f"point {row.point_index}: {row.error}", file=_sys.stderr)
    return 2 if failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
