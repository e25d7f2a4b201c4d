"""Command-line front end.

Subcommands wire the pipeline end to end: ``synth`` makes traces, ``fit``
builds a model file, ``inspect`` prints threshold rows, ``simulate``
writes synthetic traces, ``evaluate`` scores agreement, ``sweep`` grids
interval length against state count. All randomized commands take an
explicit seed (echoed in outputs); all file writes are atomic.

Exit codes: 0 success, 1 usage error, 2 data/validation error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from ._version import __version__
from . import evaluate as ev
from . import markov, simulate as sim_mod, synth, trace as trace_mod
from .errors import DataError, NumericalError, ToolkitError
from .quantizer import QuantizerConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _atomic_write_text(path: str, text: str) -> None:
    """Write via temp file + rename so failures never leave partial output."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-",
                               suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _positive_float(value: str) -> float:
    x = float(value)
    if not x > 0:
        raise argparse.ArgumentTypeError(f"{value!r} is not positive")
    return x


def _states_count(value: str) -> int:
    n = int(value)
    if n < 2:
        raise argparse.ArgumentTypeError("state count must be at least 2")
    return n


def _float_list(value: str) -> list:
    try:
        items = [float(x) for x in value.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad float list {value!r}") from None
    if not items:
        raise argparse.ArgumentTypeError("empty list")
    return items


def _int_list(value: str) -> list:
    try:
        items = [int(x) for x in value.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad int list {value!r}") from None
    if not items or any(n < 2 for n in items):
        raise argparse.ArgumentTypeError("state counts must all be >= 2")
    return items


def build_parser() -> _Parser:
    parser = _Parser(prog="tunnelfsmc",
                     description="Location-dependent FSMC channel modeling "
                                 "from distance-stamped SNR traces")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a model from a trace CSV")
    p_fit.add_argument("--trace", required=True)
    group = p_fit.add_mutually_exclusive_group(required=True)
    group.add_argument("--interval-m", type=_positive_float)
    group.add_argument("--interval-wavelengths", type=_positive_float)
    p_fit.add_argument("--freq-hz", type=_positive_float,
                       help="carrier frequency (with --interval-wavelengths)")
    p_fit.add_argument("--states", type=_states_count, default=4)
    p_fit.add_argument("--family", default="auto",
                       choices=["auto", "nakagami", "rice", "rayleigh"])
    p_fit.add_argument("--tol", type=_positive_float, default=1e-6)
    p_fit.add_argument("--max-iter", type=int, default=500)
    p_fit.add_argument("--origin-m", type=float, default=0.0)
    p_fit.add_argument("--min-fit-samples", type=int, default=10)
    p_fit.add_argument("--out", required=True)

    p_ins = sub.add_parser("inspect", help="print model summary / threshold rows")
    p_ins.add_argument("model")
    p_ins.add_argument("--at-m", type=float, default=None,
                       help="print the interval containing this distance")

    p_sim = sub.add_parser("simulate", help="simulate a trace from a model")
    p_sim.add_argument("model")
    p_sim.add_argument("--start", type=float, required=True)
    p_sim.add_argument("--end", type=float, required=True)
    p_sim.add_argument("--step", type=_positive_float, default=None,
                       help="spatial step (default: interval length / "
                            f"{sim_mod.DEFAULT_STEP_FRACTION})")
    p_sim.add_argument("--seed", type=int, required=True)
    p_sim.add_argument("--out", required=True)

    p_eval = sub.add_parser("evaluate",
                            help="score a simulated trace against a measured one")
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--sim", required=True)
    p_eval.add_argument("--measured", required=True)
    p_eval.add_argument("--bin-m", type=_positive_float, default=None,
                        help="MSE bin width (default: simulated-trace spacing)")
    p_eval.add_argument("--compare-at-m", type=float, default=None,
                        help="also compare transition triples for the "
                             "interval at this distance")
    p_eval.add_argument("--format", default="json", choices=["json", "text"])
    p_eval.add_argument("--out", default=None)
    p_eval.add_argument("--plot-csv", default=None,
                        help="write distance_m,measured_snr,simulated_snr")

    p_swp = sub.add_parser("sweep",
                           help="grid interval length x state count by holdout MSE")
    p_swp.add_argument("--trace", required=True)
    p_swp.add_argument("--holdout", required=True)
    p_swp.add_argument("--intervals", type=_float_list, required=True)
    p_swp.add_argument("--states", type=_int_list, required=True)
    p_swp.add_argument("--seed", type=int, default=0)
    p_swp.add_argument("--bin-m", type=_positive_float, default=None)
    p_swp.add_argument("--sim-step", type=_positive_float, default=None)
    p_swp.add_argument("--family", default="auto",
                       choices=["auto", "nakagami", "rice", "rayleigh"])
    p_swp.add_argument("--min-fit-samples", type=int, default=10)
    p_swp.add_argument("--format", default="json", choices=["json", "text"])
    p_swp.add_argument("--out", default=None)
    p_swp.add_argument("--plot-csv", default=None,
                       help="write interval_m,n_states,mse")

    p_syn = sub.add_parser("synth", help="generate a synthetic trace")
    src = p_syn.add_mutually_exclusive_group(required=True)
    src.add_argument("--spec", help="SynthSpec JSON file")
    src.add_argument("--from-model", help="sample a fitted model's simulator")
    p_syn.add_argument("--samples-per-interval", type=int, default=None)
    p_syn.add_argument("--seed", type=int, default=None,
                       help="override the spec seed / seed for --from-model")
    p_syn.add_argument("--out", required=True)
    return parser


def render_report(report: ev.EvaluationReport, fmt: str = "json") -> str:
    """Report in the JSON schema or as an aligned text table."""
    if fmt == "json":
        return json.dumps(_report_payload(report), indent=2) + "\n"
    if fmt != "text":
        raise DataError(f"unknown report format {fmt!r}")
    return _report_text(report)


def _report_payload(report: ev.EvaluationReport) -> dict:
    comparison = []
    for row in report.comparison:
        comparison.append({
            "state": row.state,
            "model": list(row.model),
            "empirical": None if row.empirical is None else list(row.empirical),
            "abs_diffs": None if row.abs_diffs is None else list(row.abs_diffs),
            "max_abs_diff": row.max_abs_diff,
        })
    sweep = [{"interval_m": c.interval_m, "n_states": c.n_states,
              "mse": c.mse, "seed": c.seed,
              **({"error": c.error} if c.error else {})}
             for c in report.sweep]
    return {
        "mse": report.mse,
        "bin_width_m": report.bin_width,
        "coverage_fraction": report.coverage_fraction,
        "comparison": comparison,
        "sweep": sweep,
    }


def _fmt(value, width: int = 0) -> str:
    if value is None:
        text = "-"
    elif isinstance(value, float):
        text = f"{value:.6g}"
    else:
        text = str(value)
    return text.rjust(width) if width else text


def _report_text(report: ev.EvaluationReport) -> str:
    lines = []
    if report.mse is not None:
        cov = "" if report.coverage_fraction is None else \
            f", coverage {report.coverage_fraction:.3g}"
        lines.append(f"mse: {report.mse:.6g} "
                     f"(bin {_fmt(report.bin_width)} m{cov})")
    if report.comparison:
        header = ["state",
                  "model:p(k,k-1)", "model:p(k,k)", "model:p(k,k+1)",
                  "meas:p(k,k-1)", "meas:p(k,k)", "meas:p(k,k+1)",
                  "max|diff|"]
        rows = [header]
        for row in report.comparison:
            emp = row.empirical or (None, None, None)
            rows.append([f"k={row.state}",
                         _fmt(row.model[0]), _fmt(row.model[1]),
                         _fmt(row.model[2]), _fmt(emp[0]), _fmt(emp[1]),
                         _fmt(emp[2]), _fmt(row.max_abs_diff)])
        widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
        for r in rows:
            lines.append("  ".join(c.rjust(w) for c, w in zip(r, widths)))
    if report.sweep:
        rows = [["interval_m", "n_states", "mse", "seed", "error"]]
        for c in report.sweep:
            rows.append([_fmt(c.interval_m), str(c.n_states), _fmt(c.mse),
                         str(c.seed), c.error or ""])
        widths = [max(len(r[i]) for r in rows) for i in range(5)]
        for r in rows:
            lines.append("  ".join(col.ljust(w) for col, w in zip(r, widths)).rstrip())
    return "\n".join(lines) + "\n"


def _cmd_fit(args) -> int:
    measurement = trace_mod.load_trace(args.trace)
    metadata = {}
    if args.interval_m is not None:
        delta = args.interval_m
    else:
        if args.freq_hz is None:
            raise UsageError("--interval-wavelengths requires --freq-hz")
        delta = trace_mod.interval_length_from_wavelengths(
            args.interval_wavelengths, args.freq_hz)
        metadata["carrier_frequency_hz"] = args.freq_hz
        metadata["interval_wavelengths"] = args.interval_wavelengths
    cfg = QuantizerConfig(tol=args.tol, max_iter=args.max_iter)
    model = markov.build_model(
        measurement, delta, args.states, cfg=cfg, family_policy=args.family,
        origin=args.origin_m, min_fit_samples=args.min_fit_samples,
        metadata=metadata)
    _atomic_write_text(args.out, markov.serialize_model(model))
    print(f"fit: {model.n_intervals} intervals "
          f"({model.interval_length:.6g} m, {model.n_states} states) "
          f"-> {args.out}")
    return EXIT_OK


def _cmd_inspect(args) -> int:
    model = markov.load_model(args.model)
    lo, hi = model.coverage
    print(f"model: {model.n_intervals} intervals x "
          f"{model.interval_length:.6g} m, {model.n_states} states, "
          f"coverage [{lo:.6g}, {hi:.6g}] m, id {model.fingerprint()}")
    if args.at_m is None:
        return EXIT_OK
    iv = model.interval_at(args.at_m)
    lo, hi = (model.origin + (iv.index - 1) * model.interval_length,
              model.origin + iv.index * model.interval_length)
    fam = "" if iv.family is None else f", family {iv.family.family}"
    print(f"interval {iv.index} [{lo:.6g}, {hi:.6g}) m: "
          f"{iv.sample_count} samples{fam}, "
          f"m={iv.snr_pdf.m:.6g}, mean_snr={iv.snr_pdf.mean_snr:.6g}")
    print("thresholds: " + ", ".join(repr(t) for t in
                                     iv.levels.thresholds.tolist()))
    print("representatives: " + ", ".join(repr(r) for r in
                                          iv.levels.representatives.tolist()))
    print("state_probs: " + ", ".join(repr(p) for p in
                                      iv.state_probs.tolist()))
    return EXIT_OK


def _cmd_simulate(args) -> int:
    model = markov.load_model(args.model)
    step = args.step if args.step is not None else sim_mod.default_step(model)
    result = sim_mod.simulate(model, sim_mod.Trajectory(args.start, args.end,
                                                        step), args.seed)
    _atomic_write_text(args.out, sim_mod.serialize_sim_csv(result))
    print(f"simulate: {len(result)} steps seed={args.seed} -> {args.out}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    model = markov.load_model(args.model)
    simulated = sim_mod.load_sim_csv(args.sim)
    measured = trace_mod.load_trace(args.measured)
    if args.bin_m is not None:
        bin_width = args.bin_m
    else:
        diffs = np.diff(simulated.distances)
        diffs = diffs[diffs > 0]
        bin_width = float(np.median(diffs)) if diffs.size else \
            sim_mod.default_step(model)
    details = ev.mse_details(simulated, measured, bin_width)
    comparison = ()
    if args.compare_at_m is not None:
        index = model.interval_index_at(args.compare_at_m)
        slices = trace_mod.partition(measured, model.interval_length,
                                     model.origin)
        if index > len(slices):
            raise DataError(f"measured trace has no samples near "
                            f"{args.compare_at_m} m")
        comparison = tuple(ev.compare_matrices(model.intervals[index - 1],
                                               slices[index - 1]))
    report = ev.EvaluationReport(mse=details.mse, bin_width=bin_width,
                                 coverage_fraction=details.coverage_fraction,
                                 comparison=comparison)
    rendered = render_report(report, args.format)
    if args.out:
        _atomic_write_text(args.out, rendered)
    else:
        sys.stdout.write(rendered)
    if args.plot_csv:
        _atomic_write_text(args.plot_csv,
                           _fig3_csv(simulated, measured, bin_width))
    target = args.out or "stdout"
    print(f"evaluate: mse={details.mse:.6g} over {details.n_common_bins} "
          f"bins -> {target}")
    return EXIT_OK


def _fig3_csv(simulated, measured, bin_width: float) -> str:
    bins_s, means_s = ev.bin_means(simulated.distances, simulated.snrs,
                                   bin_width)
    bins_m, means_m = ev.bin_means(measured.distances, measured.snrs,
                                   bin_width)
    common, i_s, i_m = np.intersect1d(bins_s, bins_m, return_indices=True)
    lines = ["distance_m,measured_snr,simulated_snr"]
    centers = (common + 0.5) * bin_width
    for c, m, s in zip(centers.tolist(), means_m[i_m].tolist(),
                       means_s[i_s].tolist()):
        lines.append(f"{c!r},{m!r},{s!r}")
    return "\n".join(lines) + "\n"


def _cmd_sweep(args) -> int:
    fit_trace = trace_mod.load_trace(args.trace)
    holdout = trace_mod.load_trace(args.holdout)
    cells = ev.sweep(fit_trace, holdout, args.intervals, args.states,
                     base_seed=args.seed, bin_width=args.bin_m,
                     sim_step=args.sim_step, family_policy=args.family,
                     min_fit_samples=args.min_fit_samples)
    report = ev.EvaluationReport(bin_width=args.bin_m, sweep=tuple(cells))
    rendered = render_report(report, args.format)
    if args.out:
        _atomic_write_text(args.out, rendered)
    else:
        sys.stdout.write(rendered)
    if args.plot_csv:
        lines = ["interval_m,n_states,mse"]
        lines.extend(f"{c.interval_m!r},{c.n_states},{c.mse!r}"
                     for c in cells if c.mse is not None)
        _atomic_write_text(args.plot_csv, "\n".join(lines) + "\n")
    failed = sum(1 for c in cells if c.error)
    suffix = f" ({failed} failed)" if failed else ""
    print(f"sweep: {len(cells)} cells{suffix} -> {args.out or 'stdout'}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    if args.spec:
        spec = synth.load_spec(args.spec)
        if args.seed is not None:
            spec = synth.SynthSpec(spec.path_loss, spec.fading, spec.span,
                                   spec.sample_spacing, args.seed)
        result = synth.synth_trace(spec)
    else:
        if args.samples_per_interval is None or args.seed is None:
            raise UsageError("--from-model requires --samples-per-interval "
                             "and --seed")
        model = markov.load_model(args.from_model)
        result = synth.synth_from_model(model, args.samples_per_interval,
                                        args.seed)
    _atomic_write_text(args.out, trace_mod.serialize_trace(result))
    print(f"synth: {len(result)} samples -> {args.out}")
    return EXIT_OK


_COMMANDS = {
    "fit": _cmd_fit,
    "inspect": _cmd_inspect,
    "simulate": _cmd_simulate,
    "evaluate": _cmd_evaluate,
    "sweep": _cmd_sweep,
    "synth": _cmd_synth,
}


def dispatch(argv) -> int:
    """Parse and run; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # argparse --help/--version
        code = exc.code
        return EXIT_OK if code in (0, None) else EXIT_USAGE
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ToolkitError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
