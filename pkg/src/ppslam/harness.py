"""Co-simulation of truth and observer, CSV logging and run metrics."""

from __future__ import annotations

import csv
import json
import math
import time
import warnings
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import _backend
from .constants import DEFAULT_LOG_INTERVAL, LYAPUNOV_SLACK
from .errors import ConfigInvalid, EnvelopeViolation
from .lie import Pose, is_rotation
from .observer import (INTEGRATORS, MeasurementFrame, ObserverGains, ObserverState, advance,
                       check_gain_condition, evaluate, pose_error)
from .ppf import PerformanceEnvelope, check_initial_error, envelope_at, envelope_from_initial_error
from .world import (ScenarioConfig, TruthState, make_rng, measure_landmarks, measure_velocity,
                    paper_scenario, trajectory_distance, truth_step)

BACKENDS = ("matrix", "quaternion")


# --- configuration -------------------------------------------------------------

@dataclass(frozen=True)
class EnvelopeRule:
    """Either ``from_initial_error`` (width = scale*|e0| + offset) or ``explicit``."""

    rule: str = "from_initial_error"
    scale: float = 1.2
    offset: float = 1.8
    xi_inf: float = 0.1
    ell: float = 1.0
    explicit: dict | None = None

    def build(self, e0: np.ndarray) -> PerformanceEnvelope:
        if self.rule == "from_initial_error":
            return envelope_from_initial_error(e0, self.scale, self.offset, self.xi_inf, self.ell)
        if self.rule == "explicit":
            if self.explicit is None:
                raise ConfigInvalid("explicit envelope rule needs parameters")
            env = PerformanceEnvelope.from_dict(self.explicit)
            try:
                env = PerformanceEnvelope(*(np.broadcast_to(getattr(env, f), e0.shape) for f in
                                            ("xi0", "xi_inf", "ell", "delta_bar", "delta_under")))
            except ValueError:
                raise ConfigInvalid("explicit envelope does not broadcast to (n, 3)") from None
            return env
        raise ConfigInvalid(f"unknown envelope rule {self.rule!r}")

    def to_dict(self) -> dict:
        if self.rule == "explicit":
            return {"rule": "explicit", **(self.explicit or {})}
        return {"rule": self.rule, "scale": self.scale, "offset": self.offset,
                "xi_inf": self.xi_inf, "ell": self.ell}

    @classmethod
    def from_dict(cls, d: dict) -> "EnvelopeRule":
        d = dict(d)
        rule = d.pop("rule", "from_initial_error")
        if rule == "explicit":
            return cls(rule="explicit", explicit=d)
        try:
            return cls(rule=rule, **d)
        except TypeError as exc:
            raise ConfigInvalid(str(exc)) from None


@dataclass(frozen=True)
class InitialEstimate:
    R_hat0: np.ndarray = field(default_factory=lambda: np.eye(3))
    P_hat0: np.ndarray = field(default_factory=lambda: np.zeros(3))
    p_hat0: np.ndarray | None = None     # None: all landmarks at the origin
    b_hat0: np.ndarray = field(default_factory=lambda: np.zeros(6))

    def state(self, n: int, backend: str) -> ObserverState:
        R = np.asarray(self.R_hat0, dtype=float)
        if not is_rotation(R):
            raise ConfigInvalid("R_hat0 is not a rotation matrix")
        lm = np.zeros((n, 3)) if self.p_hat0 is None else np.asarray(self.p_hat0, dtype=float)
        if lm.shape != (n, 3):
            raise ConfigInvalid(f"p_hat0 must have shape ({n}, 3)")
        return ObserverState.initial(n, R, np.asarray(self.P_hat0, dtype=float), lm,
                                     np.asarray(self.b_hat0, dtype=float),
                                     quaternion=(backend == "quaternion"))

    def to_dict(self) -> dict:
        return {"R_hat0": np.asarray(self.R_hat0).tolist(), "P_hat0": np.asarray(self.P_hat0).tolist(),
                "p_hat0": None if self.p_hat0 is None else np.asarray(self.p_hat0).tolist(),
                "b_hat0": np.asarray(self.b_hat0).tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "InitialEstimate":
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigInvalid(str(exc)) from None


@dataclass(frozen=True)
class MetricWindows:
    steady_after: float = 30.0
    settle_window: tuple[float, float] = (35.0, 40.0)
    inside_after: float = 10.0
    trajectory_window: tuple[float, float] = (30.0, 40.0)

    @classmethod
    def from_dict(cls, d: dict) -> "MetricWindows":
        d = dict(d)
        for k in ("settle_window", "trajectory_window"):
            if k in d:
                d[k] = tuple(float(v) for v in d[k])
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigInvalid(str(exc)) from None


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig
    gains: ObserverGains
    envelope: EnvelopeRule = EnvelopeRule()
    initial: InitialEstimate = InitialEstimate()
    backend: str = "matrix"
    integrator: str = "imex"
    log_interval: float = DEFAULT_LOG_INTERVAL
    metrics: MetricWindows = MetricWindows()
    output_dir: str = "out"

    def __post_init__(self):
        object.__setattr__(self, "gains", self.gains.for_landmarks(self.scenario.n))
        self.validate()

    def validate(self) -> None:
        if self.backend not in BACKENDS:
            raise ConfigInvalid(f"backend must be one of {BACKENDS}")
        if self.integrator not in INTEGRATORS:
            raise ConfigInvalid(f"integrator must be one of {sorted(INTEGRATORS)}")
        if self.log_interval <= 0:
            raise ConfigInvalid("log_interval must be positive")
        stride = self.log_interval / self.scenario.dt
        if abs(stride - round(stride)) > 1e-9 * max(1.0, stride) or round(stride) < 1:
            raise ConfigInvalid("dt must divide log_interval")
        steps = self.scenario.duration / self.scenario.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ConfigInvalid("dt must divide duration")

    @property
    def n_steps(self) -> int:
        return int(round(self.scenario.duration / self.scenario.dt))

    @property
    def stride(self) -> int:
        return int(round(self.log_interval / self.scenario.dt))

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.to_dict(),
            "observer": {"gains": self.gains.to_dict(), "initial": self.initial.to_dict()},
            "envelope": self.envelope.to_dict(),
            "backend": self.backend,
            "integrator": self.integrator,
            "log_interval": self.log_interval,
            "metrics": {k: list(v) if isinstance(v, tuple) else v
                        for k, v in asdict(self.metrics).items()},
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        try:
            scenario = ScenarioConfig.from_dict(d["scenario"])
            obs = d.get("observer", {})
            gains = (ObserverGains.from_dict(obs["gains"]) if "gains" in obs
                     else ObserverGains.paper(scenario.n))
            return cls(
                scenario=scenario,
                gains=gains,
                envelope=EnvelopeRule.from_dict(d.get("envelope", {})),
                initial=InitialEstimate.from_dict(obs.get("initial", {})),
                backend=d.get("backend", "matrix"),
                integrator=d.get("integrator", "imex"),
                log_interval=float(d.get("log_interval", DEFAULT_LOG_INTERVAL)),
                metrics=MetricWindows.from_dict(d.get("metrics", {})),
                output_dir=d.get("output_dir", "out"),
            )
        except KeyError as exc:
            raise ConfigInvalid(f"config is missing {exc}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigInvalid):
                raise
            raise ConfigInvalid(str(exc)) from None

    def with_overrides(self, *, seed=None, backend=None, noise=None, duration=None, dt=None,
                       output_dir=None) -> "ExperimentConfig":
        sc = self.scenario
        changes = {}
        if seed is not None:
            changes["seed"] = int(seed)
        if noise is not None and not noise:
            changes["noise_std"] = 0.0
            changes["feature_noise_std"] = 0.0
        if duration is not None:
            changes["duration"] = float(duration)
        if dt is not None:
            changes["dt"] = float(dt)
        cfg = self
        if changes:
            cfg = replace(cfg, scenario=replace(sc, **changes))
        if backend is not None:
            cfg = replace(cfg, backend=backend)
        if output_dir is not None:
            cfg = replace(cfg, output_dir=str(output_dir))
        return cfg


def paper_config(noise: bool = False) -> ExperimentConfig:
    """Reference scenario with the matching observer gains and envelope rule."""
    sc = paper_scenario()
    if not noise:
        sc = replace(sc, noise_std=0.0)
    return ExperimentConfig(scenario=sc, gains=ObserverGains.paper(sc.n))


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"{path}: {exc}") from None
    return ExperimentConfig.from_dict(data)


def save_config(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n", encoding="utf-8")


# --- run log -------------------------------------------------------------------

_AX = ("x", "y", "z")
_TW = ("wx", "wy", "wz", "vx", "vy", "vz")


def log_columns(n: int) -> list[str]:
    """CSV header for a run with ``n`` landmarks."""
    mat = [f"{r}{c}" for r in range(3) for c in range(3)]
    cols = ["t"]
    cols += [f"R_{m}" for m in mat] + [f"P_{a}" for a in _AX]
    cols += [f"Rhat_{m}" for m in mat] + [f"Phat_{a}" for a in _AX]
    for prefix in ("p", "phat", "e", "E", "bound"):
        cols += [f"{prefix}{i + 1}_{a}" for i in range(n) for a in _AX]
    cols += [f"bhat_{c}" for c in _TW] + [f"btilde_{c}" for c in _TW]
    cols += ["lyapunov", "backend"]
    return cols


@dataclass
class RunLog:
    """Time series of one run, one row per logging interval."""

    t: np.ndarray
    R: np.ndarray
    P: np.ndarray
    R_hat: np.ndarray
    P_hat: np.ndarray
    p: np.ndarray
    p_hat: np.ndarray
    e: np.ndarray
    E: np.ndarray
    bound: np.ndarray
    b_hat: np.ndarray
    b_tilde: np.ndarray
    lyapunov: np.ndarray
    backend: str

    @property
    def n(self) -> int:
        return self.p.shape[1]

    def __len__(self) -> int:
        return len(self.t)

    def rows(self):
        for k in range(len(self.t)):
            yield ([self.t[k]] + list(self.R[k].ravel()) + list(self.P[k])
                   + list(self.R_hat[k].ravel()) + list(self.P_hat[k])
                   + list(self.p[k].ravel()) + list(self.p_hat[k].ravel())
                   + list(self.e[k].ravel()) + list(self.E[k].ravel()) + list(self.bound[k].ravel())
                   + list(self.b_hat[k]) + list(self.b_tilde[k]) + [self.lyapunov[k]])


class _LogBuilder:
    def __init__(self, n: int, capacity: int, backend: str):
        K = capacity
        self.k = 0
        self.backend = backend
        self.a = {
            "t": np.empty(K), "R": np.empty((K, 3, 3)), "P": np.empty((K, 3)),
            "R_hat": np.empty((K, 3, 3)), "P_hat": np.empty((K, 3)),
            "p": np.empty((K, n, 3)), "p_hat": np.empty((K, n, 3)), "e": np.empty((K, n, 3)),
            "E": np.empty((K, n, 3)), "bound": np.empty((K, n, 3)),
            "b_hat": np.empty((K, 6)), "b_tilde": np.empty((K, 6)), "lyapunov": np.empty(K),
        }

    def add(self, t, truth: TruthState, state: ObserverState, diag, bound):
        a, k = self.a, self.k
        a["t"][k] = t
        a["R"][k] = truth.pose.rotation
        a["P"][k] = truth.pose.position
        a["R_hat"][k] = state.pose_est.rotation
        a["P_hat"][k] = state.pose_est.position
        a["p"][k] = truth.landmarks
        a["p_hat"][k] = state.landmark_est
        a["e"][k] = diag.e
        a["E"][k] = diag.E
        a["bound"][k] = bound
        a["b_hat"][k] = state.bias_est
        a["b_tilde"][k] = diag.b_tilde
        a["lyapunov"][k] = diag.lyapunov
        self.k += 1

    def build(self) -> RunLog:
        return RunLog(**{key: v[:self.k].copy() for key, v in self.a.items()}, backend=self.backend)


def emit_csv(log: RunLog, path) -> None:
    """Write the log with one header row; floats use 17 significant digits."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(log_columns(log.n))
        for row in log.rows():
            w.writerow([format(float(v), ".17g") for v in row] + [log.backend])


def read_csv(path) -> RunLog:
    path = Path(path)
    with path.open("r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        body = list(reader)
    n, rem = divmod(len(header) - 1 - 24 - 12 - 2, 15)
    if rem or header != log_columns(n):
        raise ValueError(f"{path}: header does not match the run-log schema")
    backend = body[0][-1] if body else "matrix"
    data = np.array([[float(v) for v in r[:-1]] for r in body]).reshape(len(body), len(header) - 1)
    K = len(body)
    c = 1
    out = {"t": data[:, 0]}

    def take(width, shape):
        nonlocal c
        block = data[:, c:c + width].reshape((K,) + shape)
        c += width
        return block

    out["R"] = take(9, (3, 3))
    out["P"] = take(3, (3,))
    out["R_hat"] = take(9, (3, 3))
    out["P_hat"] = take(3, (3,))
    for key in ("p", "p_hat", "e", "E", "bound"):
        out[key] = take(3 * n, (n, 3))
    out["b_hat"] = take(6, (6,))
    out["b_tilde"] = take(6, (6,))
    out["lyapunov"] = data[:, c]
    return RunLog(**out, backend=backend)


# --- metrics -------------------------------------------------------------------

@dataclass
class RunMetrics:
    envelope_violation_count: int
    max_abs_e_after_steady: float | None
    bias_error_final: float | None
    settle_R_drift: float | None
    settle_P_drift: float | None
    runtime_s: float | None
    failed: bool = False
    failure_time: float | None = None
    inside_fraction_after: float | None = None
    trajectory_rms: float | None = None
    trajectory_rms_aligned: float | None = None
    max_E_norm_final: float | None = None
    lyapunov_max_increase_rate: float | None = None
    lyapunov_monotone_violations: int | None = None
    n_steps: int | None = None
    n_rows: int = 0
    backend: str = "matrix"
    integrator: str | None = None
    kernel: str | None = None

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return None
            return v
        return {k: clean(v) for k, v in asdict(self).items()}

    @property
    def passed(self) -> bool:
        return not self.failed and self.envelope_violation_count == 0


def _window(t, lo, hi=None):
    m = t >= lo - 1e-9
    if hi is not None:
        m &= t <= hi + 1e-9
    return m


def compute_metrics(log: RunLog, scenario: ScenarioConfig, windows: MetricWindows = MetricWindows(),
                    *, runtime_s=None, violations: int = 0, failure_time=None,
                    expected_rows: int | None = None, step_stats: dict | None = None,
                    integrator=None, kernel=None) -> RunMetrics:
    """Summary statistics derivable from a run log (plus optional run-time extras)."""
    t = log.t
    K = len(t)
    nan = float("nan")
    m_steady = _window(t, windows.steady_after)
    max_e = float(np.max(np.abs(log.e[m_steady]))) if m_steady.any() else nan
    bias_err = float(np.linalg.norm(log.b_tilde[-1])) if K else nan

    # pose-error settling relative to the end of the window
    lo, hi = windows.settle_window
    m_settle = _window(t, lo, hi)
    R_drift = P_drift = nan
    if m_settle.any() and t[-1] >= hi - 1e-9:
        idx = np.flatnonzero(m_settle)
        Rt = np.einsum("kij,klj->kil", log.R_hat[idx], log.R[idx])
        Pt = log.P_hat[idx] - np.einsum("kij,kj->ki", Rt, log.P[idx])
        R_drift = float(np.max(np.linalg.norm(Rt - Rt[-1], axis=(1, 2))))
        P_drift = float(np.max(np.linalg.norm(Pt - Pt[-1], axis=1)))

    # fraction of post-transient samples strictly inside the envelopes
    m_in = _window(t, windows.inside_after)
    inside = nan
    if expected_rows is None:
        expected_rows = K
    dt_row = t[1] - t[0] if K > 1 else None
    if dt_row:
        total_after = int(np.sum(np.arange(expected_rows) * dt_row >= windows.inside_after - 1e-9))
    else:
        total_after = int(m_in.sum())
    if total_after:
        ok = np.all(np.abs(log.e[m_in]) < log.bound[m_in], axis=(1, 2))
        inside = float(ok.sum() / total_after)

    lo, hi = windows.trajectory_window
    m_traj = _window(t, lo, hi)
    traj = traj_al = nan
    if m_traj.any():
        d = trajectory_distance(scenario, t[m_traj], log.P_hat[m_traj])
        traj = float(np.sqrt(np.mean(d ** 2)))
        # same positions after undoing the final constant pose offset
        R_c, P_c = pose_error(Pose(log.R[-1], log.P[-1]), Pose(log.R_hat[-1], log.P_hat[-1]))
        aligned = (log.P_hat[m_traj] - P_c) @ R_c
        d = trajectory_distance(scenario, t[m_traj], aligned)
        traj_al = float(np.sqrt(np.mean(d ** 2)))

    E_fin = float(np.max(np.linalg.norm(log.E[-1], axis=1))) if K else nan
    if step_stats is None and K > 1:
        dL = np.diff(log.lyapunov) / np.diff(t)
        step_stats = {"lyapunov_max_increase_rate": float(np.max(dL)),
                      "lyapunov_monotone_violations": int(np.sum(dL > LYAPUNOV_SLACK))}
    step_stats = step_stats or {}

    def opt(v):
        return None if v is None or not math.isfinite(v) else v

    return RunMetrics(
        envelope_violation_count=int(violations),
        max_abs_e_after_steady=opt(max_e),
        bias_error_final=opt(bias_err),
        settle_R_drift=opt(R_drift),
        settle_P_drift=opt(P_drift),
        runtime_s=runtime_s,
        failed=violations > 0,
        failure_time=failure_time,
        inside_fraction_after=opt(inside),
        trajectory_rms=opt(traj),
        trajectory_rms_aligned=opt(traj_al),
        max_E_norm_final=opt(E_fin),
        lyapunov_max_increase_rate=step_stats.get("lyapunov_max_increase_rate"),
        lyapunov_monotone_violations=step_stats.get("lyapunov_monotone_violations"),
        n_steps=step_stats.get("n_steps"),
        n_rows=K,
        backend=log.backend,
        integrator=integrator,
        kernel=kernel,
    )


# --- simulation ------------------------------------------------------------------

@dataclass
class RunResult:
    log: RunLog
    metrics: RunMetrics
    envelopes: PerformanceEnvelope
    final_state: ObserverState
    violation: EnvelopeViolation | None = None


def initial_envelopes(cfg: ExperimentConfig) -> PerformanceEnvelope:
    """Envelopes built from the initial error of the configured initial estimate."""
    sc = cfg.scenario
    state = cfg.initial.state(sc.n, cfg.backend)
    truth = TruthState.initial(sc)
    y0 = measure_landmarks(truth)
    e0 = state.landmark_est - state.pose_est.apply(y0)
    return cfg.envelope.build(e0)


def simulate(cfg: ExperimentConfig, *, kernel: str | None = None,
             log_interval: float | None = None) -> RunResult:
    """Co-simulate truth and observer for ``cfg.scenario.duration`` seconds."""
    sc = cfg.scenario
    n, dt, N = sc.n, sc.dt, cfg.n_steps
    stride = cfg.stride if log_interval is None else int(round(log_interval / dt))
    if stride < 1:
        raise ConfigInvalid("log interval shorter than dt")
    rng = make_rng(sc.seed)
    truth = TruthState.initial(sc)
    state = cfg.initial.state(n, cfg.backend)
    gains = cfg.gains

    y = measure_landmarks(truth, rng, sc.feature_noise_std)
    e0 = state.landmark_est - state.pose_est.apply(y)
    envs = cfg.envelope.build(e0)
    check_initial_error(envs, e0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        check_gain_condition(gains, envs)

    u_true = sc.u_true
    builder = _LogBuilder(n, N // stride + 1, cfg.backend)
    kname = kernel or _backend.IMPLEMENTATION
    L_prev = None
    max_rate = -math.inf
    mono_viol = 0
    violation = None
    violations = 0
    failure_time = None
    start = time.perf_counter()
    for k in range(N + 1):
        t = k * dt
        if k > 0:
            y = measure_landmarks(truth, rng, sc.feature_noise_std)
        try:
            if k < N:
                frame = MeasurementFrame(measure_velocity(u_true, sc, rng), y, t)
                new_state, diag = advance(state, frame, envs, gains, dt, integrator=cfg.integrator,
                                          kernel=kernel, truth=truth.pose, bias_true=sc.bias_true)
            else:
                frame = MeasurementFrame(u_true + sc.bias_true, y, t)
                new_state = state
                diag = evaluate(state, frame, envs, gains, kernel=kernel, truth=truth.pose,
                                bias_true=sc.bias_true)
        except EnvelopeViolation as exc:
            violation = exc
            xi = envelope_at(envs, t)
            e = state.landmark_est - state.pose_est.apply(y)
            s = e / xi
            violations = int(np.sum(~((s > -envs.delta_under) & (s < envs.delta_bar)))) or 1
            failure_time = t
            break
        L = diag.lyapunov
        if L_prev is not None:
            rate = (L - L_prev) / dt
            max_rate = max(max_rate, rate)
            if rate > LYAPUNOV_SLACK:
                mono_viol += 1
        L_prev = L
        if k % stride == 0:
            builder.add(t, truth, state, diag, envs.delta_bar * diag.xi)
        state = new_state
        if k < N:
            truth = truth_step(truth, sc, dt)
    runtime = time.perf_counter() - start
    log = builder.build()
    stats = {"lyapunov_max_increase_rate": max_rate if math.isfinite(max_rate) else None,
             "lyapunov_monotone_violations": mono_viol, "n_steps": N}
    metrics = compute_metrics(log, sc, cfg.metrics, runtime_s=runtime, violations=violations,
                              failure_time=failure_time, expected_rows=N // stride + 1,
                              step_stats=stats, integrator=cfg.integrator, kernel=kname)
    return RunResult(log, metrics, envs, state, violation)


def run(cfg: ExperimentConfig, **kw) -> tuple[RunLog, RunMetrics]:
    res = simulate(cfg, **kw)
    return res.log, res.metrics


def write_outputs(result: RunResult, cfg: ExperimentConfig, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"log": out / "run.csv", "metrics": out / "metrics.json", "config": out / "config.json"}
    emit_csv(result.log, paths["log"])
    paths["metrics"].write_text(json.dumps(result.metrics.to_dict(), indent=2) + "\n", encoding="utf-8")
    save_config(cfg, paths["config"])
    return {k: str(v) for k, v in paths.items()}


# --- backend comparison ----------------------------------------------------------

def compare_backends(cfg: ExperimentConfig, *, kernel: str | None = None) -> dict:
    """Run both attitude backends on the same measurement stream.

    Every step is compared; for each quantity the report gives the supremum
    difference and the time at which it occurs.
    """
    runs = {}
    for b in BACKENDS:
        runs[b] = simulate(replace(cfg, backend=b), kernel=kernel, log_interval=cfg.scenario.dt)
    a, q = runs["matrix"].log, runs["quaternion"].log
    K = min(len(a), len(q))
    t = a.t[:K]
    diffs = {
        "rotation": np.linalg.norm(a.R_hat[:K] - q.R_hat[:K], axis=(1, 2)),
        "position": np.linalg.norm(a.P_hat[:K] - q.P_hat[:K], axis=1),
        "landmarks": np.max(np.linalg.norm(a.p_hat[:K] - q.p_hat[:K], axis=2), axis=1),
        "bias": np.linalg.norm(a.b_hat[:K] - q.b_hat[:K], axis=1),
    }
    report = {"duration": cfg.scenario.duration, "dt": cfg.scenario.dt, "samples": int(K),
              "failed": any(r.violation is not None for r in runs.values())}
    for name, d in diffs.items():
        i = int(np.argmax(d)) if K else 0
        report[name] = {"max": float(d[i]) if K else 0.0, "t": float(t[i]) if K else 0.0}
    report["max"] = max(report[name]["max"] for name in diffs)
    return report
