"""Single command-line entry point for the toolkit.

Subcommands cover labeling, contact analysis, spectrograms, single
simulated trials, and the policy benchmark. Every invocation is
deterministic given (inputs, config, seed) and every artifact starts
with a provenance header carrying the tool version and config hash.

Exit codes: 0 success, 2 input/format problems, 3 violated modeling
assumptions, 4 internal failures.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ToolConfig, load_config
from .contact import (
    escape_velocity,
    generalized_force,
    is_pinching,
    parse_contact_model,
    violates_constraints,
)
from .episode_io import read_episode, write_episode
from .errors import AssumptionViolated, ComplianceKitError, FormatError
from .flipsim import (
    FlipScenario,
    STATUS_NAMES,
    default_policies,
    run_benchmark,
    run_trial,
)
from .labeling import direction_and_force_from_action, label_episode
from .wrench_signal import spectrogram

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_ASSUMPTION = 3
EXIT_INTERNAL = 4

LABELS_TEXT_HEADER = "#compliancekit-labels v1"


def _provenance(config: ToolConfig, seed: int) -> str:
    return f"# compliancekit {__version__} config {config.config_hash()} seed {seed}"


def _provenance_record(config: ToolConfig, seed: int) -> dict:
    return {"tool": "compliancekit", "version": __version__,
            "config_hash": config.config_hash(), "seed": seed}


def _emit(out, text: str) -> None:
    if out is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")


def _scenario_for(config: ToolConfig, name: str, seed: int) -> FlipScenario:
    if name == "default":
        return FlipScenario(seed=seed)
    if name not in config.scenarios:
        raise FormatError(
            f"unknown scenario {name!r}; config defines {sorted(config.scenarios) or 'none'}")
    scn = config.scenarios[name]
    return FlipScenario(**{**scn.__dict__, "seed": seed})


# --- subcommands -------------------------------------------------------------

def cmd_label(args, config: ToolConfig) -> int:
    episode = read_episode(args.episode)
    labels = label_episode(episode, config.schedule, config.k_high,
                           label_rate=config.label_rate,
                           filter_window=config.filter_window)
    n = len(labels)
    in_contact = sum(1 for lab in labels
                     if direction_and_force_from_action(lab)[0] is not None)
    k_lows = np.array([lab.k_low for lab in labels])
    edges = np.linspace(config.schedule.k_min, config.k_high, 9)
    hist, _ = np.histogram(k_lows, bins=edges)

    if args.format == "records":
        lines = [json.dumps(_provenance_record(config, args.seed))]
        for lab in labels:
            lines.append(json.dumps({"t": lab.t, "action": lab.as_vector().tolist()}))
        _emit(args.out, "\n".join(lines))
    else:
        lines = [LABELS_TEXT_HEADER, _provenance(config, args.seed)]
        for lab in labels:
            lines.append("label " + " ".join(repr(float(v))
                                             for v in (lab.t, *lab.as_vector())))
        _emit(args.out, "\n".join(lines))

    pct = 100.0 * in_contact / n if n else 0.0
    print(f"labels: {n} steps, {pct:.1f}% in contact", file=sys.stderr)
    print(f"k_low histogram ({edges[0]:.0f}..{edges[-1]:.0f} N/m, 8 bins): "
          + " ".join(str(int(c)) for c in hist), file=sys.stderr)
    return EXIT_OK


def cmd_analyze_contact(args, config: ToolConfig) -> int:
    model = parse_contact_model(Path(args.model).read_text(), name=str(args.model))
    if model.lam.min() <= 0.0:
        raise AssumptionViolated(
            f"all contact forces must be positive, got min lambda = {model.lam.min():.6g}")
    v0 = np.zeros(model.n_dims) if args.v0 is None else np.array(
        [float(v) for v in args.v0.split(",")])
    if v0.shape != (model.n_dims,):
        raise FormatError(f"--v0 needs {model.n_dims} comma-separated values")

    pinching = is_pinching(model)
    force = generalized_force(model)
    report = {"pinching": pinching, "generalized_force": force.tolist()}
    lines = [_provenance(config, args.seed),
             f"contacts: {model.n_contacts} in {model.n_dims} dimensions",
             f"pinching: {str(pinching).lower()}",
             "generalized force J^T lambda: "
             + " ".join(f"{v:.6g}" for v in force)]
    if not pinching:
        k, v = escape_velocity(model, v0)
        residual = violates_constraints(model, v)
        report.update({"escape_k": k, "escape_v": v.tolist(), "violations": residual})
        lines.append(f"escape certificate: k = {k:.6g}")
        lines.append("escape velocity: " + " ".join(f"{x:.6g}" for x in v))
        lines.append(f"constraint violations: {len(residual)}")
    if args.format == "records":
        _emit(args.out, json.dumps(_provenance_record(config, args.seed)) + "\n"
              + json.dumps(report))
    else:
        _emit(args.out, "\n".join(lines))
    return EXIT_OK


def cmd_spectrogram(args, config: ToolConfig) -> int:
    episode = read_episode(args.episode)
    track = episode.wrench_track
    t_now = float(track.t[-1]) if args.t_now is None else args.t_now
    tensor = spectrogram(track, t_now, config.spectrogram)
    if args.format == "records":
        payload = json.dumps(_provenance_record(config, args.seed)) + "\n" + json.dumps({
            "t_now": t_now, "shape": list(tensor.data.shape),
            "frame_times": tensor.frame_times.tolist(),
            "freqs": tensor.freqs.tolist(), "data": tensor.data.tolist(),
        })
        _emit(args.out, payload)
    else:
        peak = tensor.freqs[tensor.data.sum(axis=1).argmax(axis=1)]
        lines = [_provenance(config, args.seed),
                 f"spectrogram at t = {t_now:.6g}: shape "
                 f"{tensor.data.shape[0]} x {tensor.data.shape[1]} x {tensor.data.shape[2]}",
                 "peak frequency per channel [Hz]: "
                 + " ".join(f"{f:.6g}" for f in peak)]
        _emit(args.out, "\n".join(lines))
    return EXIT_OK


def cmd_simulate(args, config: ToolConfig) -> int:
    scenario = _scenario_for(config, args.scenario, args.seed)
    policies = default_policies()
    if args.policy not in policies:
        raise FormatError(f"unknown policy {args.policy!r}; choose from {sorted(policies)}")
    result = run_trial(scenario, policies[args.policy], trial_seed=args.trial,
                       record=args.out is not None)
    if args.out is not None:
        episode = result.to_episode({"policy": args.policy, "scenario": args.scenario,
                                     "trial": args.trial, "seed": args.seed,
                                     "tool_version": __version__,
                                     "config_hash": config.config_hash()})
        write_episode(args.out, episode)
    line = (f"trial {args.trial} [{args.policy} / {args.scenario}]: "
            f"{result.status_name}, {result.ticks} ticks, "
            f"max |f| = {result.max_force:.3f} N")
    if args.format == "records":
        print(json.dumps(_provenance_record(config, args.seed)))
        print(json.dumps({"policy": args.policy, "scenario": args.scenario,
                          "trial": args.trial, "status": result.status_name,
                          "ticks": result.ticks, "max_force": result.max_force}))
    else:
        print(_provenance(config, args.seed))
        print(line)
    return EXIT_OK


def cmd_compare(args, config: ToolConfig) -> int:
    scenarios = dict(config.scenarios) or {"default": FlipScenario(seed=args.seed)}
    if args.seed:
        scenarios = {name: FlipScenario(**{**scn.__dict__, "seed": args.seed})
                     for name, scn in scenarios.items()}
    trials = args.trials if args.trials is not None else config.trials_per_cell
    table = run_benchmark(scenarios, default_policies(), trials_per_cell=trials)
    if args.format == "records":
        lines = [json.dumps(_provenance_record(config, args.seed))]
        lines += [json.dumps(rec) for rec in table.records]
        _emit(args.out, "\n".join(lines))
    else:
        _emit(args.out, _provenance(config, args.seed) + "\n"
              + f"success rates over {trials} trials per cell\n" + table.to_text())
    return EXIT_OK


# --- argument plumbing -------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="compliancekit",
        description="Force-adaptive stiffness toolkit: labeling, contact "
                    "analysis, spectrograms, and a flipping benchmark.")
    parser.add_argument("--config", default=None, help="INI config file "
                        "(default: $COMPLIANCEKIT_CONFIG, then built-ins)")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None,
                       help="overrides the config seed")
        p.add_argument("--out", default=None, help="artifact path (default: stdout)")
        p.add_argument("--format", choices=("text", "records"), default="text")

    p = sub.add_parser("label", help="turn an episode into per-step action labels")
    p.add_argument("episode")
    common(p)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("analyze-contact", help="pinching verdict and escape certificate")
    p.add_argument("model", help="contact model text file")
    p.add_argument("--v0", default=None, help="initial velocity, comma-separated")
    common(p)
    p.set_defaults(func=cmd_analyze_contact)

    p = sub.add_parser("spectrogram", help="wrench spectrogram tensor of an episode")
    p.add_argument("episode")
    p.add_argument("--t-now", type=float, default=None, dest="t_now",
                   help="window end time (default: end of wrench track)")
    common(p)
    p.set_defaults(func=cmd_spectrogram)

    p = sub.add_parser("simulate", help="run one flipping trial")
    p.add_argument("--scenario", default="default")
    p.add_argument("--policy", default="adaptive")
    p.add_argument("--trial", type=int, default=0, help="trial index (noise seed)")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", aliases=["compare-policies"],
                       help="success-rate benchmark over policies")
    p.add_argument("--trials", type=int, default=None,
                   help="trials per (policy, scenario) cell")
    common(p)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        if args.seed is None:
            args.seed = config.seed
        return args.func(args, config)
    except AssumptionViolated as exc:
        print(f"assumption violated: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except (FormatError, FileNotFoundError, IsADirectoryError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ComplianceKitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
