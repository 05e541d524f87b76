"""Command-line front end: ``diffbeam {design,evaluate,sweep,nulls}``.

Exit codes: 0 success, 2 invalid configuration or input, 3 design failed.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from .array import wavenumber
from .designer import (METRICS_HEADER, beampattern_grid_csv, design_broadband, filters_from_json,
                       filters_to_json, parse_design_config)
from .errors import CoefficientsNotNormalized, ConfigInvalid, DesignFailed, DiffBeamError
from .harness import (MeasuredSteeringSet, PerturbationModel, offline_beampattern, offline_pattern_csv,
                      score_offline_pattern, synth_steering_set)
from .pattern import nulls_from_coefficients

EXIT_OK, EXIT_ERROR, EXIT_CONFIG, EXIT_DESIGN = 0, 1, 2, 3


def load_config_document(path: str) -> dict:
    """Read a JSON config from disk, falling back to the bundled examples by name."""
    p = Path(path)
    if p.exists():
        text = p.read_text()
    else:
        bundled = resources.files("diffbeam") / "configs" / p.name
        if not bundled.is_file():
            raise ConfigInvalid("config", f"file not found: {path}")
        text = bundled.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid("config", f"not valid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ConfigInvalid("document", "top level must be an object")
    return doc


def apply_overrides(doc: dict, args: argparse.Namespace) -> dict:
    doc = copy.deepcopy(doc)
    if getattr(args, "steer_deg", None) is not None:
        doc["steer_deg"] = args.steer_deg
    if getattr(args, "wng_slack_db", None) is not None:
        doc["wng_slack_db"] = args.wng_slack_db
    if getattr(args, "method", None) is not None:
        doc["method"] = args.method.upper()
    overrides = {key: getattr(args, attr, None)
                 for key, attr in (("min_hz", "fmin"), ("max_hz", "fmax"), ("count", "fcount"))}
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if overrides:
        grid = dict(doc.get("frequencies", {}))
        grid.update(overrides)
        doc.pop("frequencies_hz", None)
        doc["frequencies"] = grid
    return doc


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _output_dir(args) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def run_design(args: argparse.Namespace) -> int:
    doc = apply_overrides(load_config_document(args.config), args)
    spec, geom = parse_design_config(doc)
    filters, report = design_broadband(spec, geom, workers=args.threads)
    out = _output_dir(args)
    _write(out / "filters.json", filters_to_json(filters))
    _write(out / "metrics.csv", report.to_csv())
    _write(out / "beampattern.csv", beampattern_grid_csv(filters, geom, spec.speed_of_sound))
    failed = sum(not r.ok for r in report.rows)
    print(f"designed {len(filters)} of {len(report.rows)} frequencies ({spec.method.value}); "
          f"outputs in {out}", file=sys.stderr)
    if failed:
        print(f"warning: {failed} frequencies failed, see metrics.csv status column", file=sys.stderr)
    return EXIT_OK


def _freq_label(f: float) -> str:
    return f"{f:.6g}".replace(".", "p")


def run_evaluate(args: argparse.Namespace) -> int:
    doc = apply_overrides(load_config_document(args.config), args)
    spec, geom = parse_design_config(doc)
    if args.filters:
        try:
            filters = filters_from_json(Path(args.filters).read_text())
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigInvalid("filters", str(exc)) from None
    else:
        filters, _ = design_broadband(spec, geom, workers=args.threads)
    if not filters:
        raise ConfigInvalid("filters", "no filters to evaluate")
    for filt in filters:
        if len(filt.weights) != geom.M:
            raise ConfigInvalid("filters", f"filter length {len(filt.weights)} does not match {geom.M} microphones")

    perturb = PerturbationModel(args.gain_sigma_db, args.phase_sigma_deg, args.position_sigma_m,
                                args.sensor_noise_db, args.seed)
    measured = None
    if args.measured:
        if args.measured_frequency_hz is None:
            raise ConfigInvalid("measured_frequency_hz", "required with --measured")
        try:
            measured = MeasuredSteeringSet.from_csv(Path(args.measured).read_text(), args.measured_frequency_hz)
        except (OSError, ValueError) as exc:
            raise ConfigInvalid("measured", str(exc)) from None
        targets = [args.measured_frequency_hz]
    elif args.frequencies:
        targets = args.frequencies
    else:
        targets = [f.frequency_hz for f in filters]

    steer_deg = math.degrees(spec.steer_theta_s)
    null_targets = []
    for o in spec.null_offsets:
        null_targets.append((steer_deg + math.degrees(o)) % 360.0)
        if not math.isclose(o, math.pi):
            null_targets.append((steer_deg - math.degrees(o)) % 360.0)

    out = _output_dir(args)
    results = []
    for target in targets:
        filt = min(filters, key=lambda f: abs(f.frequency_hz - target))
        f = filt.frequency_hz
        if measured is None:
            steering_set = synth_steering_set(geom, wavenumber(f, spec.speed_of_sound), perturb, frequency_hz=f)
        else:
            steering_set = measured
        values = offline_beampattern(steering_set, filt.weights)
        _write(out / f"offline_{_freq_label(f)}Hz.csv", offline_pattern_csv(steering_set, values))
        score = score_offline_pattern(steering_set.angles_deg, values, steer_deg, null_targets)
        results.append({"frequency_hz": f, **score.to_json_dict()})
        nulls = ", ".join(f"{n.measured_deg:g} ({n.depth_db:.1f} dB)" for n in score.nulls)
        print(f"{f:9.2f} Hz  main lobe {score.mainlobe_deg:g} deg (error {score.mainlobe_error_deg:g})  "
              f"nulls {nulls}")
    summary = {
        "steer_deg": steer_deg,
        "null_targets_deg": null_targets,
        "source": "measured" if measured is not None else "synthetic",
        "perturbation": perturb.describe(),
        "results": results,
    }
    _write(out / "summary.json", json.dumps(summary, indent=2) + "\n")
    return EXIT_OK


def run_sweep(args: argparse.Namespace) -> int:
    base = load_config_document(args.config)
    out = _output_dir(args)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["param", "value"] + METRICS_HEADER)
    for value in args.values:
        doc = apply_overrides(base, args)
        doc[args.param] = value
        spec, geom = parse_design_config(doc)
        _, report = design_broadband(spec, geom, workers=args.threads)
        for line in report.to_csv().splitlines()[1:]:
            writer.writerow([args.param, f"{value:g}"] + next(csv.reader([line])))
    _write(out / "sweep.csv", buf.getvalue())
    return EXIT_OK


def _parse_number(text: str) -> float:
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def run_nulls(args: argparse.Namespace) -> int:
    offsets = nulls_from_coefficients(args.coeffs)
    print(", ".join(f"{round(math.degrees(o), 6):g}" for o in offsets))
    return EXIT_OK


def _add_design_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="design JSON (or the name of a bundled config)")
    p.add_argument("--output-dir", default=".", help="directory for generated files")
    p.add_argument("--steer-deg", type=float, help="override the steering direction")
    p.add_argument("--wng-slack-db", type=float, help="override the WNG slack v")
    p.add_argument("--method", choices=["nc", "inc", "NC", "INC"], help="override the design method")
    p.add_argument("--fmin", type=float, help="lowest grid frequency in Hz")
    p.add_argument("--fmax", type=float, help="highest grid frequency in Hz")
    p.add_argument("--fcount", type=int, help="number of grid frequencies")
    p.add_argument("--threads", type=int, default=None,
                   help="parallel frequency solves (default: $DIFFBEAM_THREADS or 1; 0 = auto)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diffbeam", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="design filters over a frequency grid")
    _add_design_overrides(p)
    p.set_defaults(func=run_design)

    p = sub.add_parser("evaluate", help="score filters on synthetic or measured transfer functions")
    _add_design_overrides(p)
    p.add_argument("--filters", help="filters JSON from 'design' (default: design in-process)")
    p.add_argument("--measured", help="measured steering set CSV (theta_deg,mic_index,re,im)")
    p.add_argument("--measured-frequency-hz", type=float)
    p.add_argument("--frequencies", type=float, nargs="+", help="evaluate only these frequencies (Hz)")
    p.add_argument("--gain-sigma-db", type=float, default=0.0)
    p.add_argument("--phase-sigma-deg", type=float, default=0.0)
    p.add_argument("--position-sigma-m", type=float, default=0.0)
    p.add_argument("--sensor-noise-db", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=run_evaluate)

    p = sub.add_parser("sweep", help="repeat a design over values of one parameter")
    _add_design_overrides(p)
    p.add_argument("--param", required=True, choices=["steer_deg", "wng_slack_db"])
    p.add_argument("--values", type=float, nargs="+", required=True)
    p.set_defaults(func=run_sweep)

    p = sub.add_parser("nulls", help="null offsets (degrees) of a cosine-series pattern")
    p.add_argument("coeffs", type=_parse_number, nargs="+", help="coefficients a_0 .. a_N; fractions allowed")
    p.set_defaults(func=run_nulls)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigInvalid, CoefficientsNotNormalized) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DesignFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DESIGN
    except DiffBeamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
