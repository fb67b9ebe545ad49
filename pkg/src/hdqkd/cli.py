"""Command-line front end.

Exit codes: 0 success, 1 invalid configuration or arguments, 2 runtime
failure, 3 detection alarm (``detect --gate`` only).
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import replace

import numpy as np

from . import analytics, attacks, reproduction
from .analytics import PerformancePoint
from .config import ConfigError, ExperimentConfig, dump_config, load_config
from .detection import CORRECT_BASIS, WRONG_BASIS, QuadratureHistogram, monitor
from .physics import CoherentPulse, quadrature_mean, quadrature_sigma
from .protocol import Transcript, fmt, round6, run_session

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_ALARM = 0, 1, 2, 3


def _write_json(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) if isinstance(v, float) else v for v in row])


def _load(args) -> ExperimentConfig:
    overrides = {"seed": args.seed, "n_pulses": args.pulses, "alpha": args.alpha}
    return load_config(args.config, overrides)


def _sweep_inputs(config: ExperimentConfig):
    channel = config.session.channel
    mu = quadrature_mean(CoherentPulse(config.sweep.n_sig), channel, 0)
    sigma = config.sweep.sigma if config.sweep.sigma is not None else quadrature_sigma(channel)
    return config.sweep.n_sig, mu, sigma


def _point_row(p: PerformancePoint, flagged: bool):
    return [p.x_plus, p.p_d, p.e_int, p.eta_d, p.gain, int(flagged)]


def cmd_simulate(args) -> int:
    config = _load(args)
    transcript, report = run_session(config.session)
    transcript.to_csv(os.path.join(args.out, "transcript.csv"))
    report.to_json(os.path.join(args.out, "report.json"))
    dump_config(config, os.path.join(args.out, "config.json"))
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _load(args)
    grid = np.asarray(args.x_plus if args.x_plus is not None else config.sweep.grid(), dtype=float)
    if grid.size == 0:
        raise ConfigError("sweep grid is empty")
    n_sig, mu, sigma = _sweep_inputs(config)
    rows = [_point_row(analytics.performance(n_sig, sigma, float(x), mu=mu), False) for x in np.sort(grid)]
    x_opt, _ = analytics.optimize_threshold(n_sig, sigma, mu=mu)
    rows.append(_point_row(analytics.performance(n_sig, sigma, x_opt, mu=mu), True))
    _write_csv(os.path.join(args.out, "sweep.csv"), ["x_plus", "p_d", "e_int", "eta_d", "gain", "optimum"], rows)
    return EXIT_OK


def cmd_optimize(args) -> int:
    config = _load(args)
    n_sig, mu, sigma = _sweep_inputs(config)
    x_opt, g = analytics.optimize_threshold(n_sig, sigma, mu=mu)
    p = analytics.performance(n_sig, sigma, x_opt, mu=mu)
    _write_json(os.path.join(args.out, "optimize.json"), {
        "n_sig": round6(n_sig), "mu": round6(mu), "sigma": round6(sigma), "x_plus": round6(x_opt),
        "gain": round6(g), "p_d": round6(p.p_d), "e_int": round6(p.e_int), "eta_d": round6(p.eta_d),
    })
    return EXIT_OK


def _session_summary(report):
    return {
        "ber_measured": round6(report.ber_measured),
        "sifted_error_rate": round6(report.sifted_error_rate),
        "p_d_measured": round6(report.p_d_measured),
        "n_correct_basis": report.n_correct_basis,
        "alarm": report.alarm,
        "detection_reports": [
            {"test_name": r.test_name, "statistic": round6(r.statistic), "p_value": round6(r.p_value),
             "alarm": r.alarm}
            for r in report.detection_reports
        ],
    }


def _pooled_correlation(a, b, groups):
    ra, rb = np.empty_like(a), np.empty_like(b)
    for g in np.unique(groups):
        sel = groups == g
        ra[sel] = a[sel] - a[sel].mean()
        rb[sel] = b[sel] - b[sel].mean()
    r = float(np.corrcoef(ra, rb)[0, 1]) if a.size > 2 else float("nan")
    return r, r * math.sqrt(a.size)


def eve_statistics(transcript: Transcript) -> dict:
    """Eve's accuracy on the pulses she touched, from a session transcript."""
    touched = transcript.eve_intercepted
    est = transcript.eve_estimate
    alice = transcript.alice_phase
    out = {"n_attacked": int(touched.sum())}
    hit = est[touched] == alice[touched]
    out["phase_accuracy"] = round6(hit.mean()) if hit.size else None
    # sign decisions where Eve's estimate lies in Alice's bit basis
    same = touched & (est % 180 == alice % 180)
    out["sign_error_rate"] = round6(np.mean(est[same] != alice[same])) if same.any() else None
    if transcript.eve_quadrature is not None:
        sel = (est % 180) == transcript.bob_basis
        groups = alice[sel] * 1000 + transcript.bob_basis[sel]
        r, z = _pooled_correlation(transcript.quadrature[sel], transcript.eve_quadrature[sel], groups)
        out["bob_eve_correlation"] = round6(r)
        out["bob_eve_correlation_z"] = round6(z)
        out["n_same_basis"] = int(sel.sum())
    return out


def cmd_attack(args) -> int:
    config = _load(args)
    attacked = config.session
    if attacked.eve.variant == attacks.NONE:
        raise ConfigError("attack needs an Eve variant other than 'none'")
    honest = replace(attacked, eve=attacks.EveStrategy())
    if attacked.eve.variant == attacks.BEAMSPLIT:
        # the legitimate line Eve replaced already lost the tapped fraction
        honest = replace(honest, channel=attacked.reference_channel())
    _, honest_report = run_session(honest)
    transcript, eve_report = run_session(attacked)
    delta = (eve_report.ber_measured - honest_report.ber_measured
             if math.isfinite(eve_report.ber_measured) and math.isfinite(honest_report.ber_measured) else None)
    _write_json(os.path.join(args.out, "attack.json"), {
        "variant": attacked.eve.variant,
        "honest": _session_summary(honest_report),
        "attacked": _session_summary(eve_report),
        "delta_ber": round6(delta),
        "delta_sifted_error_rate": round6(eve_report.sifted_error_rate - honest_report.sifted_error_rate),
        "eve": eve_statistics(transcript),
    })
    return EXIT_OK


def cmd_detect(args) -> int:
    config = _load(args)
    path = args.transcript or os.path.join(args.out, "transcript.csv")
    try:
        transcript = Transcript.from_csv(path)
    except (OSError, ValueError, IndexError) as exc:
        raise ConfigError(f"cannot read transcript {path}: {exc}") from exc
    session = config.session
    correct = transcript.basis_correct
    x = transcript.quadrature
    reports = monitor(x[correct], x[~correct], session.pulse.n_sig, session.reference_channel(), session.alpha)
    QuadratureHistogram.from_samples(x[correct], CORRECT_BASIS).to_csv(os.path.join(args.out, "histogram_correct.csv"))
    QuadratureHistogram.from_samples(x[~correct], WRONG_BASIS).to_csv(os.path.join(args.out, "histogram_wrong.csv"))
    alarm = any(r.alarm for r in reports)
    _write_json(os.path.join(args.out, "detect.json"), {
        "alpha": session.alpha,
        "alarm": alarm,
        "reports": [{"test_name": r.test_name, "statistic": round6(r.statistic), "p_value": round6(r.p_value),
                     "alarm": r.alarm} for r in reports],
    })
    return EXIT_ALARM if alarm and args.gate else EXIT_OK


def cmd_reproduce_paper(args) -> int:
    out = args.out
    seed = args.seed if args.seed is not None else reproduction.DEFAULT_SEED
    n_pulses = args.pulses or 1000

    curves = reproduction.theoretical_curves(1.0)
    keys = list(curves)
    _write_csv(os.path.join(out, "fig1_theory_pdf.csv"), keys,
               [[float(curves[k][i]) for k in keys] for i in range(len(curves["x"]))])

    rep = reproduction.reproduce_experiment(seed=seed, n_pulses=n_pulses)
    phi = reproduction.total_phase(rep.transcript)
    for phase in (0, 90, 180, 270):
        hist = QuadratureHistogram.from_samples(rep.transcript.quadrature[phi == phase], f"phase_{phase}",
                                                bins=30, range=(-2.5, 2.5))
        hist.to_csv(os.path.join(out, f"fig3_hist_phase{phase}.csv"))

    _write_csv(os.path.join(out, "table1.csv"),
               ["phase", "n", "mean", "mean_se", "std", "std_se", "paper_mean", "paper_std"],
               [[r.phase, r.n, r.mean, r.mean_se, r.std, r.std_se, *reproduction.EXPERIMENT_TABLE[r.phase]]
                for r in rep.table])

    rows = []
    for n_sig, x_plus, e_paper, p_paper in reproduction.ANALYTIC_POINTS:
        p = analytics.performance(n_sig, 0.5, x_plus)
        rows.append([n_sig, x_plus, p.e_int, p.p_d, p.eta_d, p.gain, e_paper, p_paper])
    _write_csv(os.path.join(out, "operating_points.csv"),
               ["n_sig", "x_plus", "e_int", "p_d", "eta_d", "gain", "paper_e_int", "paper_p_d"], rows)

    _write_json(os.path.join(out, "experiment_points.json"), {
        "seed": seed,
        "n_pulses": n_pulses,
        "sigma": reproduction.EXPERIMENT_SIGMA,
        "expected_mean": round6(rep.expected_mean),
        "n_correct_basis": rep.report.n_correct_basis,
        "x_plus_0": {"p_d": round6(rep.p_d_at_zero), "ber": round6(rep.ber_at_zero), "paper_p_d": 1.0,
                     "paper_ber": 0.34},
        "x_plus_0.98": {"phase_jitter_deg": round6(rep.jitter_deg), "p_d": round6(rep.p_d_high),
                        "ber": round6(rep.ber_high), "expected_p_d": round6(rep.expected_p_d_high),
                        "expected_ber": round6(rep.expected_ber_high), "paper_p_d": 0.076, "paper_ber": 0.081},
    })
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "optimize": cmd_optimize,
    "attack": cmd_attack,
    "detect": cmd_detect,
    "reproduce-paper": cmd_reproduce_paper,
}


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config file")
    common.add_argument("--seed", type=int, help="random seed (overrides config)")
    common.add_argument("--out", metavar="DIR", default=".", help="output directory")
    common.add_argument("--alpha", type=float, help="detection significance level")
    common.add_argument("--pulses", type=int, help="number of pulses (overrides config)")

    parser = argparse.ArgumentParser(prog="hdqkd", description="Homodyne-detection QKD simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run one session, write transcript and report")
    sweep = sub.add_parser("sweep", parents=[common], help="closed-form figures of merit over a threshold grid")
    sweep.add_argument("--x-plus", type=_float_list, help="comma-separated thresholds (overrides config)")
    sub.add_parser("optimize", parents=[common], help="threshold maximizing p_d times mutual information")
    sub.add_parser("attack", parents=[common], help="compare an attacked session with an honest baseline")
    detect = sub.add_parser("detect", parents=[common], help="test a transcript's quadrature distributions")
    detect.add_argument("--transcript", metavar="PATH", help="transcript CSV (default OUT/transcript.csv)")
    detect.add_argument("--gate", action="store_true", help="exit with code 3 on alarm")
    sub.add_parser("reproduce-paper", parents=[common], help="write figure/table data for the reported experiment")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        os.makedirs(args.out, exist_ok=True)
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"hdqkd {args.command}: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"hdqkd {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
