"""HTTP JSON facade over sessions, for UIs and remote experiment runners.

State lives in process memory keyed by session id, with per-session locks so
concurrent mutations serialize; reads snapshot the current immutable state.
With a state_dir configured every mutation is mirrored to disk and unknown
ids fall back to the directory, so a service restart loses nothing.
"""

from __future__ import annotations

import os
import threading
from typing import Optional

import numpy as np
from fastapi import Body, FastAPI, HTTPException

from .bayes import (
    SampleSet,
    prior_to_laplace,
    psi_sample_matrix,
    sample_laplace,
)
from .errors import (
    AlreadyPending,
    CorruptFile,
    NoPendingStimulus,
    OutOfRange,
    PsyadaptError,
    SchemaVersionMismatch,
    SessionStopped,
)
from .placement import select_next
from .psychometric import Threshold, evaluate_functional
from .session import (
    SessionState,
    _design_from_json,
    _design_to_json,
    _policy_from_json,
    _policy_to_json,
    _prior_from_json,
    _prior_to_json,
    _rule_from_json,
    _rule_to_json,
    session_create,
    session_digest,
    session_estimate,
    session_load,
    session_next,
    session_respond,
    session_save,
)

__all__ = ["create_app", "serve_http"]

_CONFLICT = (AlreadyPending, NoPendingStimulus, SessionStopped)


class _Store:
    """Session registry: single writer per id, snapshot reads."""

    def __init__(self, state_dir: Optional[str] = None):
        self._sessions: dict[str, SessionState] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        self.state_dir = state_dir
        if state_dir:
            os.makedirs(state_dir, exist_ok=True)

    def lock_for(self, sid: str) -> threading.Lock:
        with self._registry_lock:
            if sid not in self._locks:
                self._locks[sid] = threading.Lock()
            return self._locks[sid]

    def get(self, sid: str) -> SessionState:
        st = self._sessions.get(sid)
        if st is None and self.state_dir:
            path = os.path.join(self.state_dir, f"{sid}.json")
            if os.path.exists(path):
                st = session_load(path)
                self._sessions[sid] = st
        if st is None:
            raise HTTPException(status_code=404, detail=f"no session {sid!r}")
        return st

    def put(self, st: SessionState) -> None:
        self._sessions[st.id] = st
        if self.state_dir:
            session_save(st, os.path.join(self.state_dir, f"{st.id}.json"))


def _state_summary(st: SessionState) -> dict:
    return {
        "id": st.id,
        "trials": len(st.trials),
        "pending_stimulus": st.pending_stimulus,
        "stopped": st.stopped,
        "draw_counter": st.draw_counter,
        "digest": session_digest(st),
        "design": _design_to_json(st.design),
        "prior": _prior_to_json(st.prior),
        "policy": _policy_to_json(st.policy),
        "stopping_rule": _rule_to_json(st.stopping_rule),
        "posterior": {
            "mode": [float(v) for v in st.posterior.mode_array],
            "sd": [float(v) for v in st.posterior.standard_deviations],
        },
        "created_at": st.created_at,
        "updated_at": st.updated_at,
    }


def _curve_json(curve) -> dict:
    return {
        "points": [[float(x), float(v)] for x, v in zip(curve.levels, curve.values)],
        "chosen": int(curve.chosen),
    }


_PREVIEW_QUANTS = (0.025, 0.25, 0.5, 0.75, 0.975)


def _function_draws(s: SampleSet, design, x_grid: np.ndarray) -> dict:
    p = psi_sample_matrix(x_grid, s, design)
    thr = Threshold(level=_mid_level(design))
    thresholds = []
    for i in range(p.shape[0]):
        try:
            thresholds.append(float(evaluate_functional(thr, s.params_at(i), design)))
        except OutOfRange:
            thresholds.append(None)
    quants = np.empty((len(_PREVIEW_QUANTS), x_grid.size))
    from .bayes import weighted_quantile

    for j in range(x_grid.size):
        quants[:, j] = weighted_quantile(p[:, j], s.weights, _PREVIEW_QUANTS)
    return {
        "x": [float(v) for v in x_grid],
        "curves": [[float(v) for v in row] for row in p],
        "thresholds": thresholds,
        "quantile_grid": {
            f"q{int(q * 1000)}": [float(v) for v in quants[i]]
            for i, q in enumerate(_PREVIEW_QUANTS)
        },
    }


def _mid_level(design) -> float:
    from .psychometric import ForcedChoice

    if isinstance(design.task, ForcedChoice):
        g = design.task.gamma
        return g + 0.5 * (1.0 - g)
    return 0.5


def _posterior_slices(st: SessionState, points: int = 41) -> dict:
    """2-D marginal density grids of the Gaussian posterior, one per pair."""
    mode = st.posterior.mode_array
    cov = st.posterior.covariance
    names = ("mu", "nu", "eta")
    out = {}
    for i in range(3):
        for j in range(i + 1, 3):
            sub = cov[np.ix_([i, j], [i, j])]
            prec = np.linalg.inv(sub)
            si, sj = np.sqrt(sub[0, 0]), np.sqrt(sub[1, 1])
            ax_i = np.linspace(mode[i] - 3 * si, mode[i] + 3 * si, points)
            ax_j = np.linspace(mode[j] - 3 * sj, mode[j] + 3 * sj, points)
            di = ax_i[:, None] - mode[i]
            dj = ax_j[None, :] - mode[j]
            quad = prec[0, 0] * di**2 + 2 * prec[0, 1] * di * dj + prec[1, 1] * dj**2
            dens = np.exp(-0.5 * quad) / (
                2 * np.pi * np.sqrt(np.linalg.det(sub))
            )
            out[f"{names[i]}_{names[j]}"] = {
                names[i]: [float(v) for v in ax_i],
                names[j]: [float(v) for v in ax_j],
                "density": [[float(v) for v in row] for row in dens],
            }
    return out


def create_app(state_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="psyadapt session service")
    store = _Store(state_dir)
    app.state.store = store

    @app.exception_handler(PsyadaptError)
    async def _psyadapt_error(request, exc: PsyadaptError):
        from fastapi.responses import JSONResponse

        if isinstance(exc, _CONFLICT):
            code = 409
        elif isinstance(exc, (CorruptFile, SchemaVersionMismatch)):
            code = 400
        else:
            code = 422
        return JSONResponse(
            status_code=code,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.post("/sessions")
    def create(payload: dict = Body(...)):
        design = _design_from_json(payload["design"])
        prior = _prior_from_json(payload["prior"])
        policy = _policy_from_json(payload["policy"])
        rule = _rule_from_json(payload["stopping_rule"])
        seed = int(payload.get("seed", 0))
        st = session_create(design, prior, policy, rule, seed)
        with store.lock_for(st.id):
            existing = store._sessions.get(st.id)
            if existing is not None:
                # identical config+seed maps to the same id: return it as-is
                return _state_summary(existing)
            store.put(st)
        return _state_summary(st)

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        return _state_summary(store.get(sid))

    @app.post("/sessions/{sid}/next")
    def next_stimulus(sid: str):
        with store.lock_for(sid):
            st = store.get(sid)
            x, curve, st2 = session_next(st)
            store.put(st2)
        return {
            "x": float(x),
            "cost_curve": _curve_json(curve),
            "state": _state_summary(st2),
        }

    @app.post("/sessions/{sid}/respond")
    def respond(sid: str, payload: dict = Body(...)):
        if "r" not in payload:
            raise HTTPException(status_code=422, detail="body must carry r: 0 or 1")
        with store.lock_for(sid):
            st = store.get(sid)
            st2 = session_respond(st, int(payload["r"]))
            store.put(st2)
        return _state_summary(st2)

    @app.get("/sessions/{sid}/estimate")
    def estimate(sid: str, seed: int = 0, samples: int = 4000):
        st = store.get(sid)
        return session_estimate(st, seed=seed, sample_count=samples)

    @app.get("/sessions/{sid}/diagnostics")
    def diagnostics(sid: str, seed: int = 0, draws: int = 30, replicates: int = 20):
        st = store.get(sid)
        d = st.design
        x_grid = np.linspace(d.x_lo, d.x_hi, 61)
        base = np.random.SeedSequence((st.seed, 0xD1A6, seed))
        streams = base.spawn(5)

        x, curve = select_next(st.policy, st.posterior, d, seed=streams[0])
        prior_draws = sample_laplace(prior_to_laplace(st.prior), draws, streams[1])
        post_draws = sample_laplace(st.posterior, draws, streams[2])
        prior_view = _function_draws(prior_draws, d, x_grid)

        ppc = None
        if len(st.trials) > 0:
            from .bayes import posterior_predictive_simulate

            s = sample_laplace(st.posterior, 1000, streams[3])
            reps = posterior_predictive_simulate(
                s, st.trials.xs, replicates, streams[4], d
            )
            ppc = {
                "real": [[i + 1, float(t.x), int(t.r)] for i, t in enumerate(st.trials.trials)],
                "replicates": [
                    [[i + 1, float(x_), int(r_)] for i, (x_, r_) in enumerate(zip(rep.xs, rep.rs))]
                    for rep in reps
                ],
            }

        return {
            "proposed_x": float(x),
            "cost_curve": _curve_json(curve),
            "posterior_slices": _posterior_slices(st),
            "prior_function_draws": prior_view,
            "posterior_function_draws": _function_draws(post_draws, d, x_grid),
            "prior_response_contours": prior_view["quantile_grid"],
            "ppc": ppc,
        }

    @app.post("/priors/preview")
    def priors_preview(payload: dict = Body(...)):
        prior = _prior_from_json(payload["prior"])
        design = _design_from_json(payload["design"])
        draws = int(payload.get("draws", 30))
        seed = int(payload.get("seed", 0))
        if draws < 1:
            raise HTTPException(status_code=422, detail="draws must be >= 1")
        x_grid = np.linspace(design.x_lo, design.x_hi, 61)
        s = sample_laplace(prior_to_laplace(prior), draws, np.random.SeedSequence((seed, 0x9E11)))
        return _function_draws(s, design, x_grid)

    return app


def serve_http(
    host: str = "127.0.0.1",
    port: int = 8777,
    state_dir: Optional[str] = None,
    log_level: str = "info",
) -> None:
    """Run the service until interrupted."""
    import uvicorn

    uvicorn.run(create_app(state_dir), host=host, port=port, log_level=log_level)
