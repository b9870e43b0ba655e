"""Session lifecycle: propose, respond, estimate, persist, replay.

A session is event-sourced. Every mutation appends to an event log, and the
log replays to the exact same state digest, which is what makes saved files
auditable. The posterior is never chained trial-to-trial: each response
triggers a fresh fit of the full dataset from the original prior, so the
cached posterior is always the one a cold fit would produce.

Randomness is budgeted through (seed, draw_counter): every operation that
consumes randomness derives a child stream from the pair and bumps the
counter, so a session resumed from disk continues the stream it left.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from typing import Any, Optional

import numpy as np
from scipy.special import ndtri

from .bayes import (
    Dataset,
    GaussianPrior,
    LaplacePosterior,
    functional_samples,
    laplace_fit,
    posterior_entropy_gaussian,
    posterior_response_quantiles,
    prior_to_laplace,
    sample_laplace,
    weighted_quantile,
)
from .errors import (
    AlreadyPending,
    CorruptFile,
    DomainError,
    NoPendingStimulus,
    SchemaVersionMismatch,
    SessionStopped,
)
from .placement import (
    ESTIMATOR_GAUSSIAN,
    ESTIMATOR_KDE,
    CostCurve,
    EntropyBelow,
    FixedTrials,
    PlacementPolicy,
    ProbabilityWithin,
    PsiPolicy,
    StimulusGrid,
    StoppingRule,
    TPolicy,
    select_next,
    should_stop,
)
from .psychometric import (
    Custom,
    Design,
    ForcedChoice,
    Functional,
    Slope,
    Threshold,
    Width,
    YesNo,
    params_to_natural,
)

__all__ = [
    "SCHEMA_VERSION",
    "SessionState",
    "session_create",
    "session_next",
    "session_respond",
    "session_estimate",
    "session_record_estimate",
    "session_save",
    "session_load",
    "session_replay",
    "session_digest",
    "cost_curve_digest",
]

SCHEMA_VERSION = 1


@dataclass(frozen=True, eq=False)
class SessionState:
    id: str
    design: Design
    prior: GaussianPrior
    policy: PlacementPolicy
    stopping_rule: StoppingRule
    seed: int
    draw_counter: int
    trials: Dataset
    posterior: LaplacePosterior
    pending_stimulus: Optional[float]
    stopped: Optional[str]
    events: tuple[dict, ...]
    created_at: str
    updated_at: str

    def __len__(self) -> int:
        return len(self.trials)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _canonical(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _sha(payload: str) -> str:
    return hashlib.sha256(payload.encode()).hexdigest()


def cost_curve_digest(curve: CostCurve) -> str:
    return _sha(
        _canonical(
            {
                "levels": list(map(float, curve.levels)),
                "values": list(map(float, curve.values)),
                "chosen": int(curve.chosen),
            }
        )
    )


# ---------------------------------------------------------------------------
# JSON codecs for the component types. Custom functionals hold opaque
# callables and cannot be persisted; everything else round-trips.


def _task_to_json(task) -> dict:
    if isinstance(task, ForcedChoice):
        return {"kind": "forced_choice", "gamma": task.gamma}
    return {"kind": "yes_no"}


def _task_from_json(raw: dict):
    if raw["kind"] == "forced_choice":
        return ForcedChoice(gamma=float(raw["gamma"]))
    if raw["kind"] == "yes_no":
        return YesNo()
    raise CorruptFile(f"unknown task kind {raw.get('kind')!r}")


def _design_to_json(d: Design) -> dict:
    return {"task": _task_to_json(d.task), "x_lo": d.x_lo, "x_hi": d.x_hi}


def _design_from_json(raw: dict) -> Design:
    return Design(
        task=_task_from_json(raw["task"]),
        x_lo=float(raw["x_lo"]),
        x_hi=float(raw["x_hi"]),
    )


def _functional_to_json(f: Functional) -> dict:
    if isinstance(f, Threshold):
        return {"kind": "threshold", "level": f.level}
    if isinstance(f, Width):
        return {"kind": "width", "margin": f.margin}
    if isinstance(f, Slope):
        return {"kind": "slope"}
    if isinstance(f, Custom):
        raise DomainError("custom functionals hold opaque callables and cannot be persisted")
    raise DomainError(f"unknown functional {f!r}")


def _functional_from_json(raw: dict) -> Functional:
    kind = raw.get("kind")
    if kind == "threshold":
        return Threshold(level=float(raw["level"]))
    if kind == "width":
        return Width(margin=float(raw["margin"]))
    if kind == "slope":
        return Slope()
    raise CorruptFile(f"unknown functional kind {kind!r}")


def _grid_to_json(g: StimulusGrid) -> dict:
    return {
        "levels": list(map(float, g.levels)),
        "refine_rounds": g.refine_rounds,
        "refine_shrink": g.refine_shrink,
    }


def _grid_from_json(raw: dict) -> StimulusGrid:
    return StimulusGrid(
        levels=tuple(float(v) for v in raw["levels"]),
        refine_rounds=int(raw["refine_rounds"]),
        refine_shrink=float(raw["refine_shrink"]),
    )


def _policy_to_json(p: PlacementPolicy) -> dict:
    if isinstance(p, PsiPolicy):
        return {
            "kind": "psi",
            "grid": _grid_to_json(p.grid),
            "sample_count": p.sample_count,
            "approximate": p.approximate,
        }
    if isinstance(p, TPolicy):
        return {
            "kind": "t",
            "functional": _functional_to_json(p.functional),
            "grid": _grid_to_json(p.grid),
            "estimator": p.estimator,
            "sample_count": p.sample_count,
        }
    raise DomainError(f"unknown policy {p!r}")


def _policy_from_json(raw: dict) -> PlacementPolicy:
    kind = raw.get("kind")
    if kind == "psi":
        return PsiPolicy(
            grid=_grid_from_json(raw["grid"]),
            sample_count=int(raw["sample_count"]),
            approximate=bool(raw["approximate"]),
        )
    if kind == "t":
        estimator = raw["estimator"]
        if estimator not in (ESTIMATOR_GAUSSIAN, ESTIMATOR_KDE):
            raise CorruptFile(f"unknown estimator {estimator!r}")
        return TPolicy(
            functional=_functional_from_json(raw["functional"]),
            grid=_grid_from_json(raw["grid"]),
            estimator=estimator,
            sample_count=int(raw["sample_count"]),
        )
    raise CorruptFile(f"unknown policy kind {kind!r}")


def _rule_to_json(r: StoppingRule) -> dict:
    if isinstance(r, FixedTrials):
        return {"kind": "fixed_trials", "count": r.count}
    if isinstance(r, EntropyBelow):
        return {"kind": "entropy_below", "threshold": r.threshold}
    if isinstance(r, ProbabilityWithin):
        return {
            "kind": "probability_within",
            "functional": _functional_to_json(r.functional),
            "lo": r.lo,
            "hi": r.hi,
            "confidence": r.confidence,
        }
    raise DomainError(f"unknown stopping rule {r!r}")


def _rule_from_json(raw: dict) -> StoppingRule:
    kind = raw.get("kind")
    if kind == "fixed_trials":
        return FixedTrials(count=int(raw["count"]))
    if kind == "entropy_below":
        return EntropyBelow(threshold=float(raw["threshold"]))
    if kind == "probability_within":
        return ProbabilityWithin(
            functional=_functional_from_json(raw["functional"]),
            lo=float(raw["lo"]),
            hi=float(raw["hi"]),
            confidence=float(raw["confidence"]),
        )
    raise CorruptFile(f"unknown stopping rule kind {kind!r}")


def _prior_to_json(p: GaussianPrior) -> dict:
    return {"mean": list(map(float, p.mean)), "sd": list(map(float, p.sd))}


def _prior_from_json(raw: dict) -> GaussianPrior:
    return GaussianPrior(mean=tuple(raw["mean"]), sd=tuple(raw["sd"]))


def _config_json(
    design: Design,
    prior: GaussianPrior,
    policy: PlacementPolicy,
    rule: StoppingRule,
    seed: int,
) -> dict:
    return {
        "design": _design_to_json(design),
        "prior": _prior_to_json(prior),
        "policy": _policy_to_json(policy),
        "stopping_rule": _rule_to_json(rule),
        "seed": seed,
    }


def _state_json(st: SessionState, with_times: bool) -> dict:
    out = _config_json(st.design, st.prior, st.policy, st.stopping_rule, st.seed)
    out.update(
        {
            "schema_version": SCHEMA_VERSION,
            "id": st.id,
            "draw_counter": st.draw_counter,
            "trials": [[float(t.x), int(t.r)] for t in st.trials.trials],
            "pending_stimulus": st.pending_stimulus,
            "stopped": st.stopped,
            "events": list(st.events),
        }
    )
    if with_times:
        out["created_at"] = st.created_at
        out["updated_at"] = st.updated_at
    return out


def session_digest(st: SessionState) -> str:
    """Content hash of everything except timestamps and derived posterior."""
    return _sha(_canonical(_state_json(st, with_times=False)))


def _child_rng(seed: int, counter: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, counter)))


def session_create(
    design: Design,
    prior: GaussianPrior,
    policy: PlacementPolicy,
    stopping_rule: StoppingRule,
    seed: int,
) -> SessionState:
    """Fresh session; the posterior starts as the prior's Gaussian form."""
    # id derives from the configuration so equal setups collide on purpose:
    # re-creating a session is idempotent rather than silently forking.
    cfg = _config_json(design, prior, policy, stopping_rule, int(seed))
    sid = _sha(_canonical(cfg))[:16]
    now = _now()
    return SessionState(
        id=sid,
        design=design,
        prior=prior,
        policy=policy,
        stopping_rule=stopping_rule,
        seed=int(seed),
        draw_counter=0,
        trials=Dataset(trials=(), design=design),
        posterior=prior_to_laplace(prior),
        pending_stimulus=None,
        stopped=None,
        events=({"type": "created"},),
        created_at=now,
        updated_at=now,
    )


def session_next(st: SessionState) -> tuple[float, CostCurve, SessionState]:
    """Propose the next stimulus from the cached posterior."""
    if st.stopped is not None:
        raise SessionStopped(f"session stopped: {st.stopped}")
    if st.pending_stimulus is not None:
        raise AlreadyPending("a proposed stimulus is already awaiting its response")
    rng = _child_rng(st.seed, st.draw_counter)
    x, curve = select_next(st.policy, st.posterior, st.design, seed=rng)
    event = {"type": "proposed", "x": float(x), "cost_digest": cost_curve_digest(curve)}
    st2 = replace(
        st,
        draw_counter=st.draw_counter + 1,
        pending_stimulus=float(x),
        events=st.events + (event,),
        updated_at=_now(),
    )
    return float(x), curve, st2


def session_respond(st: SessionState, r: int) -> SessionState:
    """Record the response, refit the posterior, evaluate the stopping rule."""
    if st.pending_stimulus is None:
        raise NoPendingStimulus("respond requires a proposed stimulus")
    if r not in (0, 1):
        raise DomainError(f"response must be 0 or 1, got {r!r}")
    x = st.pending_stimulus
    data = st.trials.append(x, int(r))
    lp = laplace_fit(data, st.prior, warm_start=st.posterior.mode)
    events = st.events + ({"type": "responded", "x": float(x), "r": int(r)},)

    counter = st.draw_counter + 1
    stop_samples = None
    if isinstance(st.stopping_rule, ProbabilityWithin):
        stop_samples = sample_laplace(
            lp, st.policy.sample_count, _child_rng(st.seed, st.draw_counter)
        )
    stopped = st.stopped
    if stopped is None and should_stop(st.stopping_rule, lp, stop_samples, len(data), st.design):
        stopped = _stop_reason(st.stopping_rule)
        events = events + ({"type": "stopped", "reason": stopped},)
    return replace(
        st,
        draw_counter=counter,
        trials=data,
        posterior=lp,
        pending_stimulus=None,
        stopped=stopped,
        events=events,
        updated_at=_now(),
    )


def _stop_reason(rule: StoppingRule) -> str:
    if isinstance(rule, FixedTrials):
        return f"fixed_trials:{rule.count}"
    if isinstance(rule, EntropyBelow):
        return f"entropy_below:{rule.threshold:g}"
    return "probability_within"


_Z95 = float(ndtri(0.975))
_CURVE_POINTS = 61
_QUANTS = (0.025, 0.25, 0.5, 0.75, 0.975)


def _interval_pair(samples, weights, mode: float, sd: float) -> dict:
    lo, hi = weighted_quantile(samples, weights, (0.025, 0.975))
    return {
        "quantile_95": [float(lo), float(hi)],
        "hessian_95": [mode - _Z95 * sd, mode + _Z95 * sd],
    }


def _default_threshold_level(d: Design) -> float:
    if isinstance(d.task, ForcedChoice):
        g = d.task.gamma
        return g + 0.5 * (1.0 - g)
    return 0.5


def session_estimate(st: SessionState, seed: int = 0, sample_count: int = 4000) -> dict:
    """Posterior summary: parameters both ways, intervals both ways, curves.

    Pure: does not advance the session stream. Intervals come in two flavors,
    quantile (from posterior draws, seeded by the report seed) and Hessian
    (mode plus/minus 1.96 Laplace sd), labeled distinctly.
    """
    lp = st.posterior
    d = st.design
    # estimate streams live beside the session streams, keyed by report seed
    s = sample_laplace(lp, sample_count, np.random.SeedSequence((st.seed, 0x0E57, seed)))
    mode = lp.mode_array
    sds = lp.standard_deviations

    reparam = {}
    for j, name in enumerate(("mu", "nu", "eta")):
        col = s.column(name)
        reparam[name] = {
            "mode": float(mode[j]),
            "mean": float(col @ s.weights),
            "sd": float(sds[j]),
            **_interval_pair(col, s.weights, float(mode[j]), float(sds[j])),
        }

    mode_mu, mode_sigma, mode_lam = params_to_natural(lp.mode)
    natural = {}
    for (name, mode_val), trans in zip(
        (("mu", mode_mu), ("sigma", mode_sigma), ("lambda", mode_lam)),
        (
            lambda a: a[:, 0],
            lambda a: np.exp(a[:, 1]),
            lambda a: 1.0 / (1.0 + np.exp(-a[:, 2])),
        ),
    ):
        vals = trans(s.samples)
        lo, hi = weighted_quantile(vals, s.weights, (0.025, 0.975))
        natural[name] = {
            "mode": float(mode_val),
            "mean": float(vals @ s.weights),
            "quantile_95": [float(lo), float(hi)],
        }

    functionals = {}
    specs = [
        ("threshold", Threshold(level=_default_threshold_level(d))),
        ("width", Width(margin=0.05)),
        ("slope", Slope()),
    ]
    for name, func in specs:
        try:
            fs = functional_samples(s, func, d)
        except Exception:
            functionals[name] = None
            continue
        mean = float(fs.values @ fs.weights)
        var = float(((fs.values - mean) ** 2) @ fs.weights)
        lo, hi = weighted_quantile(fs.values, fs.weights, (0.025, 0.975))
        entry = {
            "mean": mean,
            "sd": math.sqrt(max(var, 0.0)),
            "quantile_95": [float(lo), float(hi)],
            "dropped": fs.dropped,
        }
        if isinstance(func, Threshold):
            entry["level"] = func.level
        if isinstance(func, Width):
            entry["margin"] = func.margin
        functionals[name] = entry

    xs = np.linspace(d.x_lo, d.x_hi, _CURVE_POINTS)
    bands = posterior_response_quantiles(s, xs, _QUANTS, d)
    curve = {
        "x": [float(v) for v in xs],
        "quantiles": {
            f"q{int(q * 1000)}": [float(v) for v in bands[:, i]]
            for i, q in enumerate(_QUANTS)
        },
    }

    return {
        "trials": len(st.trials),
        "stopped": st.stopped,
        "entropy_nats": float(posterior_entropy_gaussian(lp)),
        "reparameterized": reparam,
        "natural": natural,
        "functionals": functionals,
        "predicted_curve": curve,
        "report_seed": int(seed),
        "sample_count": int(sample_count),
    }


def session_record_estimate(st: SessionState, report: dict) -> SessionState:
    """Append an audit event holding the report digest."""
    digest = _sha(_canonical(report))
    return replace(
        st,
        events=st.events + ({"type": "estimated", "summary_digest": digest},),
        updated_at=_now(),
    )


def session_save(st: SessionState, path) -> None:
    """Canonical, versioned JSON; byte-stable across save/load/save."""
    payload = _canonical(_state_json(st, with_times=True)) + "\n"
    with open(path, "w") as fh:
        fh.write(payload)


def session_load(path) -> SessionState:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError, OSError) as exc:
        raise CorruptFile(f"cannot read session file {path}: {exc}") from exc
    if not isinstance(raw, dict) or "schema_version" not in raw:
        raise CorruptFile(f"{path} is not a session file")
    if raw["schema_version"] != SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"file has schema {raw['schema_version']}, this build reads {SCHEMA_VERSION}; "
            "no migration is defined"
        )
    try:
        design = _design_from_json(raw["design"])
        prior = _prior_from_json(raw["prior"])
        policy = _policy_from_json(raw["policy"])
        rule = _rule_from_json(raw["stopping_rule"])
        trials = raw["trials"]
        data = Dataset.from_arrays(
            np.array([t[0] for t in trials], dtype=float),
            np.array([t[1] for t in trials], dtype=int),
            design,
        )
        pending = raw["pending_stimulus"]
        st = SessionState(
            id=str(raw["id"]),
            design=design,
            prior=prior,
            policy=policy,
            stopping_rule=rule,
            seed=int(raw["seed"]),
            draw_counter=int(raw["draw_counter"]),
            trials=data,
            posterior=_refit(data, prior),
            pending_stimulus=None if pending is None else float(pending),
            stopped=raw["stopped"],
            events=tuple(raw["events"]),
            created_at=str(raw["created_at"]),
            updated_at=str(raw["updated_at"]),
        )
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise CorruptFile(f"session file {path} is malformed: {exc}") from exc
    return st


def _refit(data: Dataset, prior: GaussianPrior) -> LaplacePosterior:
    if len(data) == 0:
        return prior_to_laplace(prior)
    return laplace_fit(data, prior)


def session_replay(st: SessionState) -> SessionState:
    """Rebuild the state from its own event log; digests must match."""
    out = session_create(st.design, st.prior, st.policy, st.stopping_rule, st.seed)
    for ev in st.events:
        kind = ev["type"]
        if kind == "created":
            continue
        if kind == "proposed":
            x, curve, out = session_next(out)
            if abs(x - ev["x"]) > 1e-12 or cost_curve_digest(curve) != ev["cost_digest"]:
                raise CorruptFile("event log does not replay: proposal diverged")
        elif kind == "responded":
            out = session_respond(out, int(ev["r"]))
        elif kind == "estimated":
            out = replace(out, events=out.events + (dict(ev),))
        elif kind == "stopped":
            # appended by session_respond when the rule fires; nothing to do
            if not out.events or out.events[-1].get("type") != "stopped":
                raise CorruptFile("event log does not replay: unexplained stop")
        else:
            raise CorruptFile(f"unknown event type {kind!r}")
    return out
