"""Command-line entry point.

    isdf run [config.json] [--preset fig2|fig3|fig4] [--engines a,m,q]
             [--trials N] [--seed S] [--out DIR] [--format csv|json|dat] [--strict]
    isdf fit [--m 7] [--init table1|none] [--out fit.json]

``ISDF_WORKERS`` sets how many grid points run at once.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import sweep
from .config import ENGINE_ALIASES, PRESETS, ConfigError, load_document, preset, spec_from_dict
from .qexp import CALIBRATION_REGION, MixtureFit, refit, table1_fit

log = logging.getLogger("isdfplc")


def _engines(text: str) -> list[str]:
    names = [ENGINE_ALIASES.get(e.strip(), e.strip()) for e in text.split(",") if e.strip()]
    if not names:
        raise argparse.ArgumentTypeError("no engines given")
    return names


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isdf", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a sweep or a figure preset")
    run.add_argument("config", nargs="?", help="JSON sweep configuration")
    run.add_argument("--preset", choices=PRESETS)
    run.add_argument("--engines", type=_engines, help="comma list of analytic,montecarlo,quadrature (or a,m,q)")
    run.add_argument("--trials", type=int, help="Monte-Carlo trials per grid point")
    run.add_argument("--seed", type=int)
    run.add_argument("--out", help="output directory")
    run.add_argument("--format", choices=("csv", "json", "dat"), default="csv")
    run.add_argument("--fit", help="mixture fit JSON to use instead of the published seven-term constants")
    run.add_argument("--strict", action="store_true", help="exit non-zero if any engine failed")

    fit = sub.add_parser("fit", help="refit the Q(exp(t)) mixture")
    fit.add_argument("--m", type=int, default=7)
    fit.add_argument("--init", choices=("table1", "none"), default="table1")
    fit.add_argument("--region", type=float, nargs=2, default=CALIBRATION_REGION)
    fit.add_argument("--restarts", type=int, default=20)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--out")
    return parser


def _overrides(args) -> dict:
    doc = load_document(args.config) if args.config else {}
    if args.engines:
        doc["engines"] = args.engines
    if args.trials is not None:
        doc["n_trials"] = args.trials
    if args.seed is not None:
        doc["seed"] = args.seed
    return doc


def cmd_run(args) -> int:
    if not args.config and not args.preset:
        raise ConfigError([("$", "give a config file, a --preset, or both")])
    doc = _overrides(args)
    specs = preset(args.preset, doc) if args.preset else [spec_from_dict(doc)]
    out_dir = Path(args.out or specs[0].output_path or "results")
    fit = MixtureFit.load(args.fit) if args.fit else table1_fit()

    files, any_failed = {}, False
    for spec in specs:
        started = time.perf_counter()
        rows = sweep.run_sweep(spec, fit=fit)
        path = sweep.emit(rows, args.format, out_dir / f"{spec.name}.{args.format}")
        files[spec.name] = path.name
        any_failed |= sweep.failed(rows)
        log.info("%s: %d rows in %.1fs -> %s", spec.name, len(rows), time.perf_counter() - started, path)
    doc = sweep.manifest(specs, files, preset=args.preset, fit=fit)
    (out_dir / "manifest.json").write_text(json.dumps(doc, indent=2) + "\n")
    print(f"wrote {len(files)} file(s) and manifest.json to {out_dir}")
    if any_failed:
        log.warning("some engines failed; see the error column")
    return 1 if (any_failed and args.strict) else 0


def cmd_fit(args) -> int:
    init = table1_fit() if args.init == "table1" else None
    if init is not None and args.m != init.m:
        raise SystemExit("--init table1 requires --m 7")
    result = refit(args.m, tuple(args.region), init, restarts=args.restarts, seed=args.seed)
    print(f"M={result.m} rmse={result.rmse:.6g} sse={result.sse:.6g}")
    if args.out:
        result.dump(args.out)
    else:
        print(json.dumps(result.to_dict(), indent=2))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return cmd_run(args)
        return cmd_fit(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
