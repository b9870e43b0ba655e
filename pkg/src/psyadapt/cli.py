"""Command-line front end.

Every subcommand prints JSON to stdout so the tool composes with scripts;
--pretty switches to aligned human-readable tables. Session files are the
versioned JSON produced by session_save.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .bayes import GaussianPrior
from .placement import (
    ESTIMATOR_GAUSSIAN,
    ESTIMATOR_KDE,
    EntropyBelow,
    FixedTrials,
    PsiPolicy,
    StimulusGrid,
    TPolicy,
)
from .psychometric import Design, ForcedChoice, Params, Slope, Threshold, Width, YesNo
from .session import (
    cost_curve_digest,
    session_create,
    session_digest,
    session_estimate,
    session_load,
    session_next,
    session_record_estimate,
    session_replay,
    session_respond,
    session_save,
)
from .simlab import GaussianObserver, load_study_config, observer_respond, run_study

__all__ = ["main", "build_parser"]


def _print(obj, pretty: bool) -> None:
    if not pretty:
        print(json.dumps(obj))
        return
    _print_pretty(obj, indent=0)


def _print_pretty(obj, indent: int) -> None:
    pad = "  " * indent
    if isinstance(obj, dict):
        width = max((len(str(k)) for k in obj), default=0)
        for k, v in obj.items():
            if isinstance(v, (dict, list)) and v and not _is_short(v):
                print(f"{pad}{k}:")
                _print_pretty(v, indent + 1)
            else:
                print(f"{pad}{str(k):<{width}}  {_fmt(v)}")
    elif isinstance(obj, list):
        for v in obj[:20]:
            print(f"{pad}- {_fmt(v)}")
        if len(obj) > 20:
            print(f"{pad}... ({len(obj)} rows)")
    else:
        print(f"{pad}{_fmt(obj)}")


def _is_short(v) -> bool:
    if isinstance(v, list):
        return len(v) <= 6 and all(not isinstance(e, (dict, list)) for e in v)
    return False


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(e) for e in v) + "]"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {_fmt(e)}" for k, e in v.items()) + "}"
    return str(v)


def _session_args(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--session", required=required, help="session file path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=None, help="posterior sample count")
    p.add_argument("--grid", type=int, default=None, help="stimulus grid size")
    p.add_argument("--pretty", action="store_true", help="tables instead of JSON")


def _parse_triplet(text: str, what: str) -> tuple[float, float, float]:
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 3:
        raise SystemExit(f"{what} needs 3 comma-separated numbers, got {text!r}")
    return tuple(parts)  # type: ignore[return-value]


def _functional_from_flag(name: str, threshold_level: float, width_margin: float):
    if name == "threshold":
        return Threshold(level=threshold_level)
    if name == "width":
        return Width(margin=width_margin)
    if name == "slope":
        return Slope()
    raise SystemExit(f"unknown functional {name!r}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="psyadapt",
        description="Adaptive Bayesian estimation of psychometric functions.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="create a session file")
    _session_args(p)
    p.add_argument("--task", choices=["forced_choice", "yes_no"], default="forced_choice")
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--x-lo", type=float, default=0.0)
    p.add_argument("--x-hi", type=float, default=8.0)
    p.add_argument("--prior-mean", default="3.0,0.0,-3.8918202981106265")
    p.add_argument("--prior-sd", default="0.7071067811865476,0.7071067811865476,0.3")
    p.add_argument("--policy", choices=["psi", "t"], default="psi")
    p.add_argument("--functional", choices=["threshold", "width", "slope"], default="threshold")
    p.add_argument("--threshold-level", type=float, default=None)
    p.add_argument("--width-margin", type=float, default=0.05)
    p.add_argument(
        "--estimator",
        choices=[ESTIMATOR_GAUSSIAN, ESTIMATOR_KDE],
        default=ESTIMATOR_GAUSSIAN,
    )
    p.add_argument("--refine-rounds", type=int, default=2)
    p.add_argument("--stop-trials", type=int, default=None)
    p.add_argument("--stop-entropy", type=float, default=None)

    p = sub.add_parser("next", help="propose the next stimulus")
    _session_args(p)

    p = sub.add_parser("respond", help="record a binary response")
    _session_args(p)
    p.add_argument("r", type=int, choices=[0, 1], help="observer response")

    p = sub.add_parser("estimate", help="posterior summary report")
    _session_args(p)

    p = sub.add_parser("simulate", help="autopilot a session against a synthetic observer")
    _session_args(p)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--observer", required=True, help="true mu,nu,lambda e.g. 3.5,0.5,0.02")

    p = sub.add_parser("study", help="run a Monte-Carlo study from a config file")
    p.add_argument("--config", required=True, help="YAML study description")
    p.add_argument("--out", default=None, help="CSV output path (default: stdout)")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--pretty", action="store_true")

    p = sub.add_parser("diagnose", help="verify replay and summarize session health")
    _session_args(p)

    p = sub.add_parser("serve", help="run the HTTP JSON service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8777)
    p.add_argument("--state-dir", default=None, help="directory for session persistence")
    p.add_argument("--log-level", default="info")

    return ap


def _cmd_init(args) -> dict:
    task = ForcedChoice(gamma=args.gamma) if args.task == "forced_choice" else YesNo()
    design = Design(task=task, x_lo=args.x_lo, x_hi=args.x_hi)
    prior = GaussianPrior(
        mean=_parse_triplet(args.prior_mean, "--prior-mean"),
        sd=_parse_triplet(args.prior_sd, "--prior-sd"),
    )
    grid = StimulusGrid.over(
        design, points=args.grid or 45, refine_rounds=args.refine_rounds
    )
    samples = args.samples or 5000
    if args.policy == "psi":
        policy = PsiPolicy(grid=grid, sample_count=samples)
    else:
        level = args.threshold_level
        if level is None:
            g = args.gamma if args.task == "forced_choice" else 0.0
            level = g + 0.5 * (1.0 - g) if args.task == "forced_choice" else 0.5
        policy = TPolicy(
            functional=_functional_from_flag(args.functional, level, args.width_margin),
            grid=grid,
            estimator=args.estimator,
            sample_count=samples,
        )
    if args.stop_entropy is not None:
        rule = EntropyBelow(threshold=args.stop_entropy)
    else:
        rule = FixedTrials(count=args.stop_trials or 100)
    st = session_create(design, prior, policy, rule, args.seed)
    session_save(st, args.session)
    return {"id": st.id, "file": args.session, "digest": session_digest(st)}


def _cmd_next(args) -> dict:
    st = session_load(args.session)
    x, curve, st2 = session_next(st)
    session_save(st2, args.session)
    return {
        "x": float(x),
        "trial": len(st2.trials) + 1,
        "cost_curve": [[float(a), float(b)] for a, b in zip(curve.levels, curve.values)],
        "chosen": int(curve.chosen),
        "cost_digest": cost_curve_digest(curve),
    }


def _cmd_respond(args) -> dict:
    st = session_load(args.session)
    st2 = session_respond(st, args.r)
    session_save(st2, args.session)
    return {
        "trials": len(st2.trials),
        "stopped": st2.stopped,
        "posterior_mode": [float(v) for v in st2.posterior.mode_array],
        "posterior_sd": [float(v) for v in st2.posterior.standard_deviations],
    }


def _cmd_estimate(args) -> dict:
    st = session_load(args.session)
    report = session_estimate(st, seed=args.seed, sample_count=args.samples or 4000)
    st2 = session_record_estimate(st, report)
    session_save(st2, args.session)
    return report


def _cmd_simulate(args) -> dict:
    st = session_load(args.session)
    mu, nu, lam = _parse_triplet(args.observer, "--observer")
    truth = Params(mu=mu, nu=nu, eta=math.log(lam / (1.0 - lam)))
    observer = GaussianObserver(params=truth, design=st.design)
    rng = np.random.default_rng(np.random.SeedSequence((st.seed, 0x51A1, args.seed)))
    placed = []
    for t in range(1, args.trials + 1):
        if st.stopped is not None:
            break
        x, _, st = session_next(st)
        r = observer_respond(observer, x, t, rng)
        st = session_respond(st, r)
        placed.append([float(x), int(r)])
    session_save(st, args.session)
    report = session_estimate(st, seed=args.seed, sample_count=args.samples or 4000)
    return {
        "trials_run": len(placed),
        "stopped": st.stopped,
        "placed": placed,
        "posterior_mode": [float(v) for v in st.posterior.mode_array],
        "true_params": [mu, nu, lam],
        "estimate": {
            "mu": report["reparameterized"]["mu"],
            "threshold": report["functionals"]["threshold"],
        },
    }


def _cmd_study(args) -> dict:
    cfg, cfg_seed = load_study_config(args.config)
    seed = args.seed if args.seed is not None else cfg_seed
    report = run_study(cfg, seed)
    csv_text = report.to_csv()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(csv_text)
    else:
        sys.stdout.write(csv_text)
    return {
        "rows": [
            {
                "scheme": r.scheme,
                "trials": r.trials,
                "mean_estimate": r.mean_estimate,
                "mse": r.mse,
                "reps": r.reps,
                "failures": r.failures,
            }
            for r in report.rows
        ],
        "csv": args.out or "stdout",
        "seed": seed,
    }


def _cmd_diagnose(args) -> dict:
    st = session_load(args.session)
    replayed = session_replay(st)
    digest = session_digest(st)
    replay_ok = session_digest(replayed) == digest
    refit_mode = replayed.posterior.mode_array
    cached_ok = bool(np.allclose(refit_mode, st.posterior.mode_array, atol=1e-5))
    from .bayes import posterior_entropy_gaussian

    return {
        "id": st.id,
        "digest": digest,
        "trials": len(st.trials),
        "stopped": st.stopped,
        "replay_matches": replay_ok,
        "cached_posterior_consistent": cached_ok,
        "entropy_nats": float(posterior_entropy_gaussian(st.posterior)),
        "events": len(st.events),
    }


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        from .server import serve_http

        serve_http(
            host=args.host,
            port=args.port,
            state_dir=args.state_dir,
            log_level=args.log_level,
        )
        return 0
    handlers = {
        "init": _cmd_init,
        "next": _cmd_next,
        "respond": _cmd_respond,
        "estimate": _cmd_estimate,
        "simulate": _cmd_simulate,
        "study": _cmd_study,
        "diagnose": _cmd_diagnose,
    }
    out = handlers[args.command](args)
    pretty = getattr(args, "pretty", False)
    if args.command == "study" and not args.out and not pretty:
        # CSV already went to stdout; keep machine output uncluttered
        return 0
    _print(out, pretty)
    return 0


if __name__ == "__main__":
    sys.exit(main())
