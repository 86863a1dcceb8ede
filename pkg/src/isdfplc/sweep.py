"""Run parameter sweeps and write their rows as CSV, JSON or gnuplot data."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from importlib import metadata
from pathlib import Path

from . import analytic, simulator
from .config import FIG4_DF, SweepSpec
from .qexp import MixtureFit, table1_fit

log = logging.getLogger(__name__)

#: Column order of the CSV output.  The first fourteen columns are fixed;
#: the tail carries the quadrature BER, the indicator-count BER and errors.
COLUMNS = (
    "sweep_value",
    "gamma_sd_th",
    "gamma_sr_th",
    "outage_analytic",
    "outage_mc",
    "outage_mc_se",
    "usage_analytic",
    "usage_mc",
    "usage_mc_se",
    "ber_literal",
    "ber_coherent",
    "ber_mc",
    "ber_mc_se",
    "slots_mc",
    "ber_literal_quad",
    "ber_coherent_quad",
    "ber_mc_indicator",
    "ber_mc_indicator_se",
    "error",
)
SIG_DIGITS = 10


@dataclass
class SweepRow:
    """One grid point.  ``None`` marks a quantity whose engine did not run.

    ``ber_mc`` is the semi-analytic estimate (mean per-round error
    probability); ``ber_mc_indicator`` counts simulated bit errors.
    """

    sweep_value: float
    gamma_sd_th: float | None = None
    gamma_sr_th: float | None = None
    outage_analytic: float | None = None
    outage_mc: float | None = None
    outage_mc_se: float | None = None
    usage_analytic: float | None = None
    usage_mc: float | None = None
    usage_mc_se: float | None = None
    ber_literal: float | None = None
    ber_coherent: float | None = None
    ber_mc: float | None = None
    ber_mc_se: float | None = None
    slots_mc: float | None = None
    ber_literal_quad: float | None = None
    ber_coherent_quad: float | None = None
    ber_mc_indicator: float | None = None
    ber_mc_indicator_se: float | None = None
    error: str | None = None
    elapsed_s: float | None = None

    def rounded(self) -> "SweepRow":
        """Copy with every number cut to the emitted precision and no timing."""
        values = {k: _round(v) for k, v in asdict(self).items()}
        values["elapsed_s"] = None
        return SweepRow(**values)


def _round(v):
    if isinstance(v, float) and math.isfinite(v):
        return float(f"{v:.{SIG_DIGITS}g}")
    return v


def _ber_modes(spec: SweepSpec) -> tuple[str, ...]:
    return ("paper_literal", "coherent") if spec.ber_mode == "both" else (spec.ber_mode,)


def evaluate_point(spec: SweepSpec, value: float, fit: MixtureFit | None = None) -> SweepRow:
    """Run every selected engine at one grid value.

    Engine failures are caught and recorded in ``error`` so the sweep goes on.
    """
    started = time.perf_counter()
    row = SweepRow(sweep_value=value)
    errors = []
    try:
        sys = analytic.derive(spec.config_at(value))
    except ValueError as exc:
        row.error = f"config: {exc}"
        return row
    row.gamma_sd_th = sys.thresholds.gamma_sd
    row.gamma_sr_th = sys.thresholds.gamma_sr_rd
    modes = _ber_modes(spec)
    targets = {"paper_literal": "ber_literal", "coherent": "ber_coherent"}

    if "analytic" in spec.engines:
        try:
            row.outage_analytic = analytic.outage_probability(sys)
            row.usage_analytic = analytic.relay_usage(sys)
            for mode in modes:
                setattr(row, targets[mode], analytic.average_ber(sys, fit, mode))
        except Exception as exc:  # noqa: BLE001 - recorded in-row by design
            errors.append(f"analytic: {exc}")
    if "quadrature" in spec.engines:
        try:
            for mode in modes:
                value_q = analytic.average_ber(sys, mode=mode, integrator="quadrature")
                setattr(row, targets[mode] + "_quad", value_q)
        except Exception as exc:  # noqa: BLE001
            errors.append(f"quadrature: {exc}")
    if "montecarlo" in spec.engines:
        try:
            # single-threaded here: rows already run in parallel
            est = simulator.simulate(sys, spec.n_trials, spec.seed, workers=1)
            row.outage_mc, row.outage_mc_se = est.outage.mean, est.outage.std_error
            row.usage_mc, row.usage_mc_se = est.relay_usage.mean, est.relay_usage.std_error
            ber = simulator.estimate_ber_semianalytic(sys, spec.n_trials, spec.seed, workers=1)
            row.ber_mc, row.ber_mc_se = ber.mean, ber.std_error
            row.ber_mc_indicator, row.ber_mc_indicator_se = est.ber.mean, est.ber.std_error
            row.slots_mc = est.slots.mean
        except Exception as exc:  # noqa: BLE001
            errors.append(f"montecarlo: {exc}")
    row.error = "; ".join(errors) or None
    row.elapsed_s = time.perf_counter() - started
    return row


def run_sweep(spec: SweepSpec, workers: int | None = None,
              fit: MixtureFit | None = None) -> list[SweepRow]:
    """One row per grid value, in grid order whatever the completion order."""
    fit = fit or table1_fit()
    workers = workers or simulator.default_workers()
    point = lambda v: evaluate_point(spec, v, fit)  # noqa: E731
    if workers > 1 and len(spec.grid) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(point, spec.grid))
    else:
        rows = [point(v) for v in spec.grid]
    for row in rows:
        if row.error:
            log.warning("%s at %s=%g: %s", spec.name, spec.sweep_variable, row.sweep_value, row.error)
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.{SIG_DIGITS}g}"
    return str(v)


def _render_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([_fmt(getattr(row, c)) for c in COLUMNS])
    return buf.getvalue()


def _render_json(rows, include_timing: bool) -> str:
    docs = []
    for row in rows:
        doc = {c: _round(getattr(row, c)) for c in COLUMNS}
        if include_timing:
            doc["elapsed_s"] = row.elapsed_s
        docs.append(doc)
    return json.dumps(docs, indent=2, allow_nan=True) + "\n"


def _render_dat(rows) -> str:
    numeric = [c for c in COLUMNS if c != "error"]
    lines = ["# " + " ".join(numeric)]
    for row in rows:
        lines.append(" ".join(_fmt(getattr(row, c)) or "NaN" for c in numeric))
    return "\n".join(lines) + "\n"


def emit(rows, fmt: str, path, include_timing: bool = False) -> Path:
    """Write ``rows`` as ``csv``, ``json`` or gnuplot-friendly ``dat``."""
    if not rows:
        raise ValueError("nothing to emit")
    if fmt == "csv":
        text = _render_csv(rows)
    elif fmt == "json":
        text = _render_json(rows, include_timing)
    elif fmt == "dat":
        text = _render_dat(rows)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def _parse_cell(name: str, text: str):
    if text == "":
        return None
    if name == "error":
        return text
    return float(text)


def read_rows(path) -> list[SweepRow]:
    """Read rows written by :func:`emit` in CSV or JSON form."""
    path = Path(path)
    if path.suffix == ".json":
        return [SweepRow(**doc) for doc in json.loads(path.read_text())]
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != COLUMNS:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [SweepRow(**{k: _parse_cell(k, v) for k, v in rec.items()}) for rec in reader]


def failed(rows) -> bool:
    return any(row.error for row in rows)


def _version(dist: str) -> str:
    try:
        return metadata.version(dist)
    except metadata.PackageNotFoundError:
        return "unknown"


def manifest(specs: list[SweepSpec], files: dict[str, str], preset: str | None = None,
             fit: MixtureFit | None = None) -> dict:
    """Everything needed to regenerate the output files bit for bit."""
    fit = fit or table1_fit()
    doc = {
        "preset": preset,
        "curves": [
            {"name": s.name, "config": s.to_dict(), "config_hash": s.config_hash(),
             "seed": s.seed, "file": files.get(s.name)}
            for s in specs
        ],
        "fit": fit.to_dict(),
        "block_size": simulator.BLOCK_SIZE,
        "versions": {
            "isdfplc": _version("artifact"),
            "numpy": _version("numpy"),
            "scipy": _version("scipy"),
            "python": platform.python_version(),
        },
    }
    if preset == "fig4":
        doc["notes"] = f"relay placements d_f = {list(FIG4_DF)} are chosen, not read off the figure"
    return doc
