"""Command-line entry point: ``slabglauber <command> [options]``.

Exit status: 0 on success, 1 when ``certify`` could not certify the whole
candidate, 2 on invalid arguments, 3 when a certified-stable site flipped.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from .experiments import COMMANDS, CertificateViolation, ExperimentConfig, run_command

EXIT_INVALID = 2
EXIT_CERTIFICATE = 3


def _center(text: str) -> tuple[int, int]:
    try:
        x, y = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("center must look like X,Y")
    return (x, y)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slabglauber",
        description="Zero-temperature Glauber dynamics on 2D slabs.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--k", type=int, default=2, help="slab thickness")
    parser.add_argument("--L", type=int, default=64, help="in-plane torus side (even, >= 8)")
    parser.add_argument("--bc", choices=["free", "periodic"], default="free",
                        help="vertical boundary condition")
    parser.add_argument("--p", type=float, default=0.5, help="initial density of + spins")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--replicas", type=int, default=1)
    parser.add_argument("--t-max", type=float, default=1024.0, help="run length in sweeps")
    parser.add_argument("--sample-interval", type=float, default=1.0, help="sweeps between samples")
    parser.add_argument("--construction", default="none",
                        choices=["none", "event-a", "event-a-prime", "event-periodic"])
    parser.add_argument("--center", type=_center, default=None,
                        help="in-plane construction center X,Y (default: torus middle)")
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument("--snapshot-every", type=float, default=None,
                        help="write spin snapshots every N sweeps")
    parser.add_argument("--workers", type=int, default=1, help="replica threads")
    parser.add_argument("--density", type=float, default=None,
                        help="bootstrap: sample eta directly at this density")
    parser.add_argument("--blocks", type=int, default=None,
                        help="bootstrap: block torus side in density mode (default L/2)")
    parser.add_argument("--window-min", type=int, default=3,
                        help="blinker: first doubling window exponent checked")
    parser.add_argument("--window-max", type=int, default=None,
                        help="blinker: last doubling window exponent checked")
    parser.add_argument("--snapshot", type=Path, default=None, help="certify: input spin snapshot")
    parser.add_argument("--candidate", default=None,
                        help="certify: construction name, table-N, inverted-table-N, or a file "
                             "of 'x y z' lines")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def series_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["replica", "t_sweeps", "observable", "value"])
    for r, ts, name, value in rows:
        writer.writerow([r, repr(float(ts)), name, repr(value)])
    return buf.getvalue()


def summary_json(summary: dict) -> str:
    return json.dumps(summary, indent=2, sort_keys=True) + "\n"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = ExperimentConfig(
            command=args.command, k=args.k, L=args.L, bc=args.bc, p=args.p,
            seed=args.seed, replicas=args.replicas, t_max=args.t_max,
            sample_interval=args.sample_interval, construction=args.construction,
            center=args.center, out=args.out, snapshot_every=args.snapshot_every,
            workers=args.workers, density=args.density, blocks=args.blocks,
            window_min=args.window_min, window_max=args.window_max,
            snapshot=args.snapshot, candidate=args.candidate)
        result = run_command(cfg)
    except CertificateViolation as exc:
        print(f"certificate violated: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATE
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "summary.json").write_text(summary_json(result.summary))
        if cfg.command == "certify":
            (args.out / "certified.txt").write_text(result.listing or "")
        else:
            (args.out / "series.csv").write_text(series_csv(result.series))
        for name, text in result.snapshots.items():
            (args.out / name).write_text(text)
    elif cfg.command == "certify":
        sys.stdout.write(result.listing or "")
    else:
        sys.stdout.write(summary_json(result.summary))
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
