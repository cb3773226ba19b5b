"""Experiment configuration, batched Monte-Carlo runner and result files.

One experiment propagates the reference motion, synthesizes gyro and vector
measurements from a seeded stream, and runs the semi-direct and/or direct
estimator over them. Monte-Carlo runs are simulated as one batch: every
run owns its random stream (seed ``base ^ run_index``) but the filters step
all runs together, which is what keeps 20 x 30 000 steps inside a minute.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import NDArray

from . import estimators as est
from . import ppf
from .attitude import angle_axis_to_rot, quat_to_rot, rot_to_euler, rot_to_quat
from .errors import ConfigInvalid, EmptyWindow, EnvelopeViolated, NearUnstableSet
from .sensors import (
    GyroModel,
    VectorSensorModel,
    constant_profile,
    gyro_measure,
    make_rng,
    omega_profile,
    propagate_truth,
    vector_measure,
)
from .so3 import dist_identity, project_so3
from .wahba import ObservationSet, augment_with_cross, svd_wahba

log = logging.getLogger(__name__)

ESTIMATORS = ("semi", "direct")
FORMS = ("cont", "disc", "quat")
POLICIES = ("strict", "explore")
INTEGRATORS = ("euler", "rk4", "adaptive")

# initial estimate of the discrete-form benchmark, 4 decimals
DISCRETE_R_HAT0 = (
    (-0.8959, -0.1209, 0.4275),
    (0.3824, -0.6998, 0.6034),
    (0.2262, 0.7041, 0.6731),
)

COLUMNS = (
    "t", "dist", "xi", "E", "mu",
    "phi_true", "theta_true", "psi_true", "phi_est", "theta_est", "psi_est",
    "bhat_x", "bhat_y", "bhat_z", "sigmahat_x", "sigmahat_y", "sigmahat_z",
    "w_norm",
)  # fmt: skip


# -- configuration -------------------------------------------------------------


@dataclass(frozen=True)
class InitialAttitude:
    """An initial attitude, either as angle-axis or as an explicit matrix.

    A matrix that is only approximately orthonormal (e.g. rounded to four
    decimals) is replaced by its nearest rotation.
    """

    angle_deg: float = 0.0
    axis: tuple[float, float, float] = (1.0, 0.0, 0.0)
    matrix: tuple[tuple[float, ...], ...] | None = None

    def rotation(self) -> NDArray:
        if self.matrix is not None:
            M = np.asarray(self.matrix, dtype=float)
            if M.shape != (3, 3):
                raise ConfigInvalid(f"initial matrix must be 3x3, got {M.shape}")
            return project_so3(M)
        axis = np.asarray(self.axis, dtype=float)
        n = np.linalg.norm(axis)
        if n == 0:
            raise ConfigInvalid("rotation axis is zero")
        return angle_axis_to_rot(np.deg2rad(self.angle_deg), axis / n)


def _default_vectors() -> tuple[VectorSensorModel, ...]:
    return (
        VectorSensorModel(ref=(1.0, -1.0, 1.0), bias=(-0.1, 0.1, 0.05), noise_std=0.12, weight=1.4),
        VectorSensorModel(ref=(0.0, 0.0, 1.0), bias=(0.0, 0.0, 0.1), noise_std=0.12, weight=1.4),
    )


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce a run; defaults are the continuous-form
    benchmark (30 s, large initial error, noisy and biased sensors).

    ``rate_profile`` is ``"reference"`` for the built-in sinusoidal body rate
    or three numbers for a constant rate. ``cross_weight`` appends the
    normalized cross product of the first two vectors with that weight
    (``None`` disables it). ``window`` is the averaging interval of the
    summary statistics; ``None`` as its end means the run duration.
    """

    duration: float = 30.0
    dt: float = 1e-3
    seed: int = 0
    runs: int = 1
    estimator: str = "both"
    form: str = "cont"
    mode: str = "consistent"
    policy: str = "strict"
    integrator: str = "euler"
    max_step_angle: float = 0.05
    ratio_margin: float = 1e-3
    denom_floor: float = est.GUARD
    clamp_sigma: bool = False
    project_every: int = 1000
    window: tuple[float, float | None] = (1.0, None)
    rate_profile: str | tuple[float, float, float] = "reference"
    ppf: ppf.PpfConfig = field(default_factory=ppf.PpfConfig)
    gains: est.Gains = field(default_factory=est.Gains)
    gyro: GyroModel = field(default_factory=lambda: GyroModel((0.1, -0.1, 0.1), 0.3))
    vectors: tuple[VectorSensorModel, ...] = field(default_factory=_default_vectors)
    cross_weight: float | None = 0.2
    true_initial: InitialAttitude = field(default_factory=InitialAttitude)
    estimate_initial: InitialAttitude = field(
        default_factory=lambda: InitialAttitude(angle_deg=178.0, axis=(4.0, 1.0, 5.0))
    )
    bias0: tuple[float, float, float] = (0.0, 0.0, 0.0)
    sigma0: tuple[float, float, float] = (0.0, 0.0, 0.0)

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.duration / self.dt + 1e-9))

    @property
    def estimators(self) -> tuple[str, ...]:
        return ESTIMATORS if self.estimator == "both" else (self.estimator,)

    @property
    def window_bounds(self) -> tuple[float, float]:
        lo, hi = self.window
        return float(lo), float(self.duration if hi is None else hi)

    def settings(self) -> est.FilterSettings:
        return est.FilterSettings(
            mode=self.mode,
            explore=self.policy == "explore",
            clamp_sigma=self.clamp_sigma,
            ratio_margin=self.ratio_margin,
            denom_floor=self.denom_floor,
        )

    def validate(self) -> ExperimentConfig:
        checks = [
            (self.duration > 0, "duration must be positive"),
            (self.dt > 0, "dt must be positive"),
            (self.runs >= 1, "runs must be at least 1"),
            (self.estimator in ESTIMATORS + ("both",), f"unknown estimator {self.estimator!r}"),
            (self.form in FORMS, f"unknown form {self.form!r}"),
            (self.policy in POLICIES, f"unknown policy {self.policy!r}"),
            (self.integrator in INTEGRATORS, f"unknown integrator {self.integrator!r}"),
            (len(self.vectors) >= 2, "need at least two vector sensors"),
            (self.project_every >= 0, "project_every must be non-negative"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigInvalid(msg)
        lo, hi = self.window_bounds
        if not 0 <= lo < hi <= self.duration + 1e-12:
            raise ConfigInvalid(f"window ({lo}, {hi}) is not inside [0, {self.duration}]")
        self.settings()
        d0 = float(dist_identity(self.true_initial.rotation().T @ self.estimate_initial.rotation()))
        if not self.ppf.xi0 > d0:
            raise ConfigInvalid(f"xi0 = {self.ppf.xi0} must exceed the initial error {d0:.6g}")
        return self

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ExperimentConfig:
        data = dict(data)
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigInvalid(f"unknown config keys: {sorted(unknown)}")
        try:
            if "ppf" in data:
                data["ppf"] = ppf.PpfConfig(**data["ppf"])
            if "gains" in data:
                data["gains"] = est.Gains(**data["gains"])
            if "gyro" in data:
                g = dict(data["gyro"])
                g["bias"] = tuple(g.get("bias", (0.0, 0.0, 0.0)))
                if isinstance(g.get("noise_std"), list):
                    g["noise_std"] = tuple(g["noise_std"])
                data["gyro"] = GyroModel(**g)
            if "vectors" in data:
                data["vectors"] = tuple(
                    VectorSensorModel(**{k: tuple(v) if isinstance(v, list) else v for k, v in s.items()})
                    for s in data["vectors"]
                )
            for key in ("true_initial", "estimate_initial"):
                if key in data:
                    a = dict(data[key])
                    if "axis" in a:
                        a["axis"] = tuple(a["axis"])
                    if a.get("matrix") is not None:
                        a["matrix"] = tuple(tuple(r) for r in a["matrix"])
                    data[key] = InitialAttitude(**a)
            for key in ("window", "bias0", "sigma0"):
                if key in data:
                    data[key] = tuple(data[key])
            if isinstance(data.get("rate_profile"), list):
                data["rate_profile"] = tuple(data["rate_profile"])
            return cls(**data)
        except TypeError as exc:
            raise ConfigInvalid(str(exc)) from exc


def continuous_config(**overrides) -> ExperimentConfig:
    """Continuous-form benchmark configuration."""
    return replace(ExperimentConfig(), **overrides)


def discrete_config(**overrides) -> ExperimentConfig:
    """Discrete-form benchmark: 10 ms sampling and its own initial estimate."""
    base = ExperimentConfig(
        dt=0.01, form="disc", estimate_initial=InitialAttitude(matrix=DISCRETE_R_HAT0)
    )
    return replace(base, **overrides)


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"{path}: {exc}") from exc
    return ExperimentConfig.from_dict(data)


def apply_overrides(cfg: ExperimentConfig, assignments: list[str]) -> ExperimentConfig:
    """Apply ``key=value`` or ``section.key=value`` assignments.

    Values are parsed as JSON when possible (``0.5``, ``[1, 2, 3]``, ``null``)
    and taken as plain strings otherwise.
    """
    data = json.loads(json.dumps(cfg.to_dict()))  # tuples become mutable lists
    for item in assignments:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigInvalid(f"override {item!r} is not of the form key=value")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = data
        *parents, leaf = key.split(".")
        for p in parents:
            if isinstance(node, list):
                p = int(p)
            elif p not in node:
                raise ConfigInvalid(f"unknown config key {key!r}")
            node = node[p]
        if isinstance(node, list):
            leaf = int(leaf)
        elif leaf not in node:
            raise ConfigInvalid(f"unknown config key {key!r}")
        node[leaf] = value
    return ExperimentConfig.from_dict(data)


# -- records and statistics ------------------------------------------------------


@dataclass
class TrajectoryRecord:
    """Per-step log of one run; ``columns`` maps each name in ``COLUMNS`` to an array.

    ``R_hat`` optionally holds the estimated attitude matrices, shape
    ``(n, 3, 3)``; it is kept in memory only and never written to CSV.
    """

    columns: dict[str, NDArray]
    R_hat: NDArray | None = None

    def __len__(self) -> int:
        return len(self.columns["t"])

    @classmethod
    def empty(cls) -> TrajectoryRecord:
        return cls({c: np.empty(0) for c in COLUMNS})

    def __getitem__(self, name: str) -> NDArray:
        return self.columns[name]


@dataclass(frozen=True)
class SummaryStats:
    """Statistics of one run over the summary window.

    ``dist`` is the true attitude error. ``envelope_passed`` requires a
    completed run whose error stays below the envelope for ``t > 0``.
    ``internal_breaches`` counts steps where the filter's own error left the
    envelope and was saturated (explore policy only).
    """

    estimator: str
    form: str
    seed: int
    mean: float
    std: float
    window_start: float
    window_end: float
    envelope_passed: bool
    first_breach_t: float | None
    n_breaches: int
    completed: bool
    abort_step: int | None = None
    abort_t: float | None = None
    abort_reason: str | None = None
    internal_breaches: int = 0
    first_internal_breach_t: float | None = None

    def to_flat(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class EnsembleStats:
    """Aggregate over Monte-Carlo runs; ``mean`` and ``std`` are taken over the
    per-run window means of completed runs."""

    estimator: str
    form: str
    n_runs: int
    n_completed: int
    pass_rate: float
    mean: float
    std: float
    runs: tuple[SummaryStats, ...]

    @property
    def run_means(self) -> NDArray:
        return np.array([r.mean for r in self.runs])

    def to_flat(self) -> dict[str, Any]:
        out = {k: getattr(self, k) for k in
               ("estimator", "form", "n_runs", "n_completed", "pass_rate", "mean", "std")}  # fmt: skip
        out["run_seeds"] = [r.seed for r in self.runs]
        out["run_means"] = [r.mean for r in self.runs]
        out["run_envelope_passed"] = [r.envelope_passed for r in self.runs]
        out["run_abort_t"] = [r.abort_t for r in self.runs]
        return out


def _window_stats(t: NDArray, dist: NDArray, window: tuple[float, float]) -> tuple[float, float]:
    lo, hi = window
    sel = (t >= lo - 1e-12) & (t <= hi + 1e-12)
    if not np.any(sel):
        raise EmptyWindow(f"no samples with t in [{lo}, {hi}]")
    d = dist[sel]
    return float(d.mean()), float(d.std())  # population std


def summarize(record: TrajectoryRecord, window: tuple[float, float]) -> SummaryStats:
    """Mean and population std of ``dist`` over ``window`` plus the envelope verdict.

    Raises
    ------
    EmptyWindow
        If no sample falls inside the window.
    """
    mean, std = _window_stats(record["t"], record["dist"], window)
    rep = ppf.envelope_check(record["dist"], record["xi"], start=min(1, len(record)))
    first = None if rep.first_breach is None else float(record["t"][rep.first_breach])
    return SummaryStats(
        estimator="", form="", seed=0, mean=mean, std=std,
        window_start=window[0], window_end=window[1],
        envelope_passed=rep.passed, first_breach_t=first, n_breaches=rep.n_breaches,
        completed=True,
    )  # fmt: skip


def _fmt(x: float) -> str:
    return repr(float(x))


def write_csv(record: TrajectoryRecord, path: str | Path) -> None:
    """Write one row per step with full-precision decimal values."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        cols = [record[c] for c in COLUMNS]
        for i in range(len(record)):
            w.writerow([_fmt(c[i]) for c in cols])


def read_csv(path: str | Path) -> TrajectoryRecord:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if tuple(header) != COLUMNS:
        raise ValueError(f"unexpected header {header}")
    data = np.array(body, dtype=float).reshape(len(body), len(COLUMNS))
    return TrajectoryRecord({c: data[:, i] for i, c in enumerate(COLUMNS)})


def _json_safe(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, list):
        return [_json_safe(v) for v in x]
    return x


def write_json(obj: dict[str, Any], path: str | Path) -> None:
    """Write a flat summary; non-finite numbers become ``null``."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({k: _json_safe(v) for k, v in obj.items()}, fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- simulation ----------------------------------------------------------------


@dataclass
class Scenario:
    """Truth and measurements shared by both estimators; batch axis 1 is the run."""

    t: NDArray
    R: NDArray
    omega_m: NDArray
    obs: ObservationSet
    seeds: tuple[int, ...]
    _R_y: NDArray | None = None

    @property
    def R_y(self) -> NDArray:
        if self._R_y is None:
            self._R_y = svd_wahba(self.obs)
        return self._R_y


def build_scenario(cfg: ExperimentConfig, seeds: list[int]) -> Scenario:
    n = cfg.n_steps
    profile = (
        omega_profile if cfg.rate_profile == "reference" else constant_profile(cfg.rate_profile)
    )
    t, R, omega = propagate_truth(cfg.true_initial.rotation(), cfg.dt, n, profile, cfg.project_every)
    gyro, refs, meas = [], [], []
    for s in seeds:
        rng = make_rng(s)
        gyro.append(gyro_measure(omega, cfg.gyro, cfg.dt, rng))
        pairs = [vector_measure(R, v, rng) for v in cfg.vectors]
        refs.append(np.stack([p[0] for p in pairs], axis=-2))
        meas.append(np.stack([p[1] for p in pairs], axis=-2))
    obs = ObservationSet(
        np.stack(refs, axis=1), np.stack(meas, axis=1), [v.weight for v in cfg.vectors]
    )
    if cfg.cross_weight is not None:
        if len(cfg.vectors) != 2:
            raise ConfigInvalid("cross_weight needs exactly two vector sensors")
        obs = augment_with_cross(obs, cfg.cross_weight)
    return Scenario(t, R, np.stack(gyro, axis=1), obs, tuple(seeds))


@dataclass
class _Trace:
    """Raw batched output of one estimator over all runs."""

    dist: NDArray
    E: NDArray
    mu: NDArray
    w_norm: NDArray
    att: NDArray | None
    bias: NDArray | None
    sigma: NDArray | None
    abort_step: NDArray
    abort_reason: list[str | None]
    internal: NDArray
    first_internal: NDArray


def _run_filter(kind: str, cfg: ExperimentConfig, sc: Scenario, keep_full: bool) -> _Trace:
    n, S = cfg.n_steps, len(sc.seeds)
    settings = cfg.settings()
    quat = cfg.form == "quat"
    disc = cfg.form == "disc"
    R0 = cfg.estimate_initial.rotation()
    att0 = rot_to_quat(R0) if quat else R0
    state = est.EstimatorState.initial(
        np.broadcast_to(att0, (S,) + att0.shape), cfg.bias0, cfg.sigma0
    )
    xi_t, xid_t = ppf.xi(sc.t, cfg.ppf)
    cap = cfg.ppf.delta_upper * (1.0 - settings.ratio_margin)

    meas = None
    if kind == "semi":
        meas = rot_to_quat(sc.R_y) if quat else sc.R_y
    else:
        # fill the per-step caches once for the whole batch
        sc.obs.lambda_min, sc.obs.m_body_inv_meas

    nan = np.full((n + 1, S), np.nan)
    dist, E, mu, w_norm = nan.copy(), nan.copy(), nan.copy(), nan.copy()
    att_shape = (4,) if quat else (3, 3)
    att_h = np.full((n + 1, S) + att_shape, np.nan) if keep_full else None
    bias_h = np.full((n + 1, S, 3), np.nan) if keep_full else None
    sigma_h = np.full((n + 1, S, 3), np.nan) if keep_full else None
    abort_step = np.full(S, -1)
    reasons: list[str | None] = [None] * S
    internal = np.zeros(S, dtype=int)
    first_internal = np.full(S, -1)
    alive = np.arange(S)

    def env_at(k: int, tau: float = 0.0) -> ppf.PpfSample:
        if disc:
            return est.discrete_envelope(k, cfg.dt, cfg.ppf)
        if tau == 0.0:
            return ppf.PpfSample(float(sc.t[k]), float(xi_t[k]), float(xid_t[k]))
        return ppf.sample(float(sc.t[k]) + tau, cfg.ppf)

    def derivs(st, k, idx, tau=0.0):
        env = env_at(k, tau)
        om = sc.omega_m[k, idx]
        if kind == "semi":
            y = meas[k, idx]
            if quat:
                return est.quat_semi_direct_derivs(st, om, y, env, cfg.ppf, cfg.gains, settings)
            literal = disc and settings.mode == "literal"
            return est.semi_direct_derivs(
                st, om, y, env, cfg.ppf, cfg.gains, settings, literal=literal
            )
        obs = sc.obs[(k, idx)]
        if quat:
            return est.quat_direct_derivs(st, om, obs, env, cfg.ppf, cfg.gains, settings)
        return est.direct_derivs(st, om, obs, env, cfg.ppf, cfg.gains, settings)

    def take(st, sel):
        return est.EstimatorState(st.att[sel], st.bias[sel], st.sigma[sel])

    def advance(st, d, k, idx):
        if disc or cfg.integrator == "euler":
            return est.step_continuous(st, d, cfg.dt, settings)

        def fn(s, tau):
            return derivs(s, k, idx, tau)

        if cfg.integrator == "rk4":
            return est.step_rk4(st, fn, cfg.dt, settings, first=d)[0]
        return est.step_adaptive(
            st, fn, cfg.dt, settings, max_angle=cfg.max_step_angle, first=d
        )[0]

    for k in range(n + 1):
        R_hat = quat_to_rot(state.att) if quat else state.att
        dist[k, alive] = dist_identity(sc.R[k].T @ R_hat)
        if keep_full:
            att_h[k, alive] = state.att
            bias_h[k, alive] = state.bias
            sigma_h[k, alive] = state.sigma
        while alive.size:
            try:
                d = derivs(state, k, alive)
                nxt = advance(state, d, k, alive) if k < n else None
                break
            except (EnvelopeViolated, NearUnstableSet) as exc:
                bad = np.ones(alive.size, bool) if exc.mask is None else exc.mask.reshape(-1)
                for j in alive[bad]:
                    abort_step[j] = k
                    reasons[j] = f"{type(exc).__name__} at step {k}: {exc}"
                log.info("%s: %d run(s) aborted at step %d (%s)", kind, bad.sum(), k, exc)
                alive = alive[~bad]
                state = take(state, ~bad)
        if not alive.size:
            break
        E[k, alive] = d.terms.E
        mu[k, alive] = d.terms.mu
        w_norm[k, alive] = np.linalg.norm(d.terms.W, axis=-1)
        if settings.explore:
            env = env_at(k)
            hit = (d.terms.dist / env.xi > cap) | (np.abs(d.terms.denom) < settings.guard)
            internal[alive] += hit
            new = hit & (first_internal[alive] < 0)
            first_internal[alive[new]] = k
        if nxt is None:
            break
        state = nxt
        if not quat and cfg.project_every and (k + 1) % cfg.project_every == 0:
            state = replace(state, att=project_so3(state.att))

    return _Trace(dist, E, mu, w_norm, att_h, bias_h, sigma_h, abort_step, reasons,
                  internal, first_internal)  # fmt: skip


def _record(sc: Scenario, tr: _Trace, j: int, cfg: ExperimentConfig) -> TrajectoryRecord:
    stop = cfg.n_steps + 1 if tr.abort_step[j] < 0 else int(tr.abort_step[j])
    att = tr.att[:stop, j]
    R_hat = quat_to_rot(att) if cfg.form == "quat" else att
    true_e = rot_to_euler(sc.R[:stop])
    est_e = rot_to_euler(R_hat)
    xi_t, _ = ppf.xi(sc.t[:stop], cfg.ppf)
    cols = {
        "t": sc.t[:stop], "dist": tr.dist[:stop, j], "xi": xi_t,
        "E": tr.E[:stop, j], "mu": tr.mu[:stop, j],
        "phi_true": true_e.roll, "theta_true": true_e.pitch, "psi_true": true_e.yaw,
        "phi_est": est_e.roll, "theta_est": est_e.pitch, "psi_est": est_e.yaw,
        "w_norm": tr.w_norm[:stop, j],
    }  # fmt: skip
    for i, ax in enumerate("xyz"):
        cols[f"bhat_{ax}"] = tr.bias[:stop, j, i]
        cols[f"sigmahat_{ax}"] = tr.sigma[:stop, j, i]
    return TrajectoryRecord(
        {c: np.ascontiguousarray(cols[c], dtype=float) for c in COLUMNS}, R_hat=R_hat
    )


def _summary(kind: str, cfg: ExperimentConfig, sc: Scenario, tr: _Trace, j: int) -> SummaryStats:
    completed = tr.abort_step[j] < 0
    stop = cfg.n_steps + 1 if completed else int(tr.abort_step[j])
    t, d = sc.t[:stop], tr.dist[:stop, j]
    xi_t, _ = ppf.xi(t, cfg.ppf)
    window = cfg.window_bounds
    try:
        mean, std = _window_stats(t, d, window)
    except EmptyWindow:
        mean = std = float("nan")
    rep = ppf.envelope_check(d, xi_t, start=min(1, stop))
    first = None if rep.first_breach is None else float(t[rep.first_breach])
    fi = int(tr.first_internal[j])
    return SummaryStats(
        estimator=kind, form=cfg.form, seed=sc.seeds[j], mean=mean, std=std,
        window_start=window[0], window_end=window[1],
        envelope_passed=bool(completed and rep.passed), first_breach_t=first,
        n_breaches=rep.n_breaches, completed=bool(completed),
        abort_step=None if completed else stop,
        abort_t=None if completed else float(sc.t[stop]),
        abort_reason=tr.abort_reason[j],
        internal_breaches=int(tr.internal[j]),
        first_internal_breach_t=None if fi < 0 else float(sc.t[fi]),
    )  # fmt: skip


@dataclass(frozen=True)
class RunResult:
    record: TrajectoryRecord
    summary: SummaryStats


def run_seeds(
    cfg: ExperimentConfig, seeds: list[int], keep_full: bool = False
) -> dict[str, tuple[list[SummaryStats], list[TrajectoryRecord] | None]]:
    """Run every configured estimator on the given seeds as one batch."""
    cfg.validate()
    sc = build_scenario(cfg, seeds)
    out = {}
    for kind in cfg.estimators:
        tr = _run_filter(kind, cfg, sc, keep_full)
        stats = [_summary(kind, cfg, sc, tr, j) for j in range(len(seeds))]
        recs = [_record(sc, tr, j, cfg) for j in range(len(seeds))] if keep_full else None
        out[kind] = (stats, recs)
    return out


def run_experiment(cfg: ExperimentConfig) -> dict[str, RunResult]:
    """Single run with seed ``cfg.seed``; one result per configured estimator.

    A strict-policy failure does not raise: the record stops before the
    failing step and the summary carries the step index and reason.
    """
    res = run_seeds(cfg, [cfg.seed], keep_full=True)
    return {k: RunResult(recs[0], stats[0]) for k, (stats, recs) in res.items()}


def run_monte_carlo(cfg: ExperimentConfig, n_runs: int | None = None) -> dict[str, EnsembleStats]:
    """``n_runs`` independent runs with seeds ``cfg.seed ^ i``."""
    n_runs = cfg.runs if n_runs is None else n_runs
    if n_runs < 1:
        raise ConfigInvalid("n_runs must be at least 1")
    seeds = [cfg.seed ^ i for i in range(n_runs)]
    res = run_seeds(cfg, seeds)
    out = {}
    for kind, (stats, _) in res.items():
        done = [s for s in stats if s.completed and not math.isnan(s.mean)]
        means = np.array([s.mean for s in done])
        out[kind] = EnsembleStats(
            estimator=kind,
            form=cfg.form,
            n_runs=n_runs,
            n_completed=len(done),
            pass_rate=sum(s.envelope_passed for s in stats) / n_runs,
            mean=float(means.mean()) if done else float("nan"),
            std=float(means.std()) if done else float("nan"),
            runs=tuple(stats),
        )
    return out
