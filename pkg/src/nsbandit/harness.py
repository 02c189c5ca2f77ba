"""Seeded Monte-Carlo experiments: configuration, execution and output files."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .env import (
    DEFAULT_MEAN_SET,
    AbruptConfig,
    ConfigError,
    MeanMatrix,
    RewardModel,
    SlowConfig,
    gen_abrupt_means,
    gen_slow_means,
    sample_rewards,
)
from .policy import (
    Dsee,
    LmDsee,
    Policy,
    RandomPolicy,
    SwUcbSharp,
    SwUcbSharpParams,
    Ucb,
    alpha_abrupt,
    alpha_slow,
    lmdsee_configure_abrupt,
    lmdsee_configure_slow,
)
from .policy.lmdsee import LmDseeParams
from .regret import AggregateTrace, BoundCurve, RegretTrace, aggregate, bound_ratio, regret_trace

log = logging.getLogger(__name__)

ENV_KINDS = ("abrupt", "slow")
POLICY_NAMES = ("lmdsee", "swucbsharp", "ucb", "dsee", "random")

# per-environment defaults for LM-DSEE (a, b) and SW-UCB# lambda
DEFAULT_AB = {"abrupt": (1.0, 0.25), "slow": (20.0, 1.0)}
DEFAULT_LAMBDA = {"abrupt": 12.3, "slow": 4.3}

REWARD_CHUNK = 8192
MAX_HORIZON = 10**7


@dataclass(frozen=True)
class EnvSpec:
    kind: str = "abrupt"
    nu: float = 0.2
    kappa: float = 1.0
    mean_set: tuple[float, ...] = DEFAULT_MEAN_SET
    init_low: float = 0.1
    init_high: float = 0.9


@dataclass(frozen=True)
class PolicySpec:
    """Policy choice plus tuning inputs; ``None`` means "derive from the environment"."""

    name: str = "lmdsee"
    tuning_env: Optional[str] = None
    nu: Optional[float] = None
    kappa: Optional[float] = None
    delta_min: Optional[float] = None
    kappa_max: float = 1.0
    a: Optional[float] = None
    b: Optional[float] = None
    lam: Optional[float] = None
    w: float = 1.0


@dataclass(frozen=True)
class ExperimentConfig:
    env: EnvSpec = field(default_factory=EnvSpec)
    policy: PolicySpec = field(default_factory=PolicySpec)
    n_arms: int = 10
    horizon: int = 100_000
    reward: RewardModel = field(default_factory=RewardModel)
    master_seed: int = 0
    replications: int = 20
    out_csv: Optional[str] = None
    out_json: Optional[str] = None

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["env"]["mean_set"] = list(self.env.mean_set)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        sub = {"env": EnvSpec, "policy": PolicySpec, "reward": RewardModel}
        kwargs: dict[str, Any] = {}
        for name, value in d.items():
            if name not in _FIELDS[cls]:
                raise ConfigError(f"unknown config key {name!r}")
            if name in sub:
                kwargs[name] = _build(sub[name], value, name)
            else:
                kwargs[name] = value
        return cls(**kwargs)


_FIELDS = {c: {f.name for f in dataclasses.fields(c)} for c in (EnvSpec, PolicySpec, RewardModel)}
_FIELDS[ExperimentConfig] = {f.name for f in dataclasses.fields(ExperimentConfig)}


def _build(cls, value, where: str):
    if not isinstance(value, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = set(value) - _FIELDS[cls]
    if unknown:
        raise ConfigError(f"unknown {where} keys {sorted(unknown)}")
    value = dict(value)
    if "mean_set" in value:
        value["mean_set"] = tuple(value["mean_set"])
    return cls(**value)


def validate(cfg: ExperimentConfig) -> None:
    if cfg.env.kind not in ENV_KINDS:
        raise ConfigError(f"env.kind must be one of {ENV_KINDS}")
    if cfg.policy.name not in POLICY_NAMES:
        raise ConfigError(f"policy.name must be one of {POLICY_NAMES}")
    if not isinstance(cfg.n_arms, int) or cfg.n_arms < 1:
        raise ConfigError("n_arms must be a positive integer")
    if not isinstance(cfg.horizon, int) or not 1 <= cfg.horizon <= MAX_HORIZON:
        raise ConfigError(f"horizon must be an integer in 1..{MAX_HORIZON}")
    if not isinstance(cfg.replications, int) or cfg.replications < 1:
        raise ConfigError("replications must be a positive integer")
    if not isinstance(cfg.master_seed, int) or not 0 <= cfg.master_seed < 2**64:
        raise ConfigError("master_seed must be a 64-bit non-negative integer")
    if cfg.policy.tuning_env is not None and cfg.policy.tuning_env not in ENV_KINDS:
        raise ConfigError(f"policy.tuning_env must be one of {ENV_KINDS}")
    env_config(cfg)


def env_config(cfg: ExperimentConfig):
    e = cfg.env
    if e.kind == "abrupt":
        return AbruptConfig(e.nu, cfg.horizon, cfg.n_arms, e.mean_set)
    return SlowConfig(e.kappa, cfg.horizon, cfg.n_arms, e.init_low, e.init_high)


def default_delta_min(env: EnvSpec, n_arms: int) -> float:
    """Smallest optimal-vs-other gap that a distinct draw from ``mean_set`` can produce."""
    vals = sorted(env.mean_set, reverse=True)
    if n_arms == len(vals):
        return vals[0] - vals[1]
    return min(x - y for x, y in zip(vals, vals[1:]))


def resolve(cfg: ExperimentConfig) -> dict:
    """Fill tuning defaults and compute derived parameters (rho, gamma, l, alpha, ...)."""
    validate(cfg)
    p = cfg.policy
    tenv = p.tuning_env or cfg.env.kind
    if tenv != cfg.env.kind:
        warnings.warn(
            f"policy tuned for a {tenv} environment but running in a {cfg.env.kind} one",
            stacklevel=2,
        )
    nu = cfg.env.nu if p.nu is None else p.nu
    kappa = cfg.env.kappa if p.kappa is None else p.kappa
    out: dict[str, Any] = {"policy": p.name, "tuning_env": tenv}
    if p.name == "lmdsee":
        a, b = DEFAULT_AB[tenv]
        a = a if p.a is None else p.a
        b = b if p.b is None else p.b
        if tenv == "abrupt":
            dmin = p.delta_min if p.delta_min is not None else _env_delta_min(cfg)
            params = lmdsee_configure_abrupt(cfg.n_arms, nu, dmin, a, b)
            out.update(nu=nu, delta_min=dmin)
        else:
            params = lmdsee_configure_slow(cfg.n_arms, kappa, p.kappa_max, a, b)
            out.update(kappa=kappa, kappa_max=p.kappa_max, kappa_tilde=min(kappa, p.kappa_max))
        out.update(rho=params.rho, gamma=params.gamma, gamma_rule="fixed" if params.gamma else "slow", l=params.l, a=a, b=b)
    elif p.name == "swucbsharp":
        lam = DEFAULT_LAMBDA[tenv] if p.lam is None else p.lam
        alpha = alpha_abrupt(nu) if tenv == "abrupt" else alpha_slow(kappa)
        SwUcbSharpParams(cfg.n_arms, alpha, lam)
        out.update(alpha=alpha, lam=lam)
        if tenv == "abrupt":
            out["nu"] = nu
            # carried for provenance only; the selection rule does not use it
            if p.delta_min is not None:
                out["delta_min"] = p.delta_min
            elif cfg.env.kind == "abrupt" and cfg.n_arms >= 2:
                out["delta_min"] = _env_delta_min(cfg)
        else:
            out["kappa"] = kappa
    elif p.name == "dsee":
        if not p.w > 0:
            raise ConfigError("w must be positive")
        out["w"] = p.w
    out.update(_bound_spec(cfg, out))
    return out


def _env_delta_min(cfg: ExperimentConfig) -> float:
    if cfg.env.kind != "abrupt":
        raise ConfigError("delta_min must be given when abrupt tuning runs in a slow environment")
    if cfg.n_arms < 2:
        raise ConfigError("delta_min is undefined for a single arm; set policy.delta_min")
    return default_delta_min(cfg.env, cfg.n_arms)


def _bound_spec(cfg: ExperimentConfig, resolved: dict) -> dict:
    """Which regret order the bound-ratio column is measured against."""
    if cfg.env.kind == "abrupt":
        return {"bound_tag": "abrupt", "bound_tuning": {"nu": cfg.env.nu}}
    if resolved["policy"] == "lmdsee" and "rho" in resolved:
        return {"bound_tag": "slow-lmdsee", "bound_tuning": {"rho": resolved["rho"]}}
    alpha = resolved.get("alpha", alpha_slow(cfg.env.kappa))
    return {"bound_tag": "slow-swucb", "bound_tuning": {"alpha": alpha}}


def make_policy(cfg: ExperimentConfig, resolved: dict, rng: np.random.Generator) -> Policy:
    n = cfg.n_arms
    name = resolved["policy"]
    if name == "lmdsee":
        return LmDsee(LmDseeParams(n, resolved["rho"], resolved["a"], resolved["b"], resolved["l"], resolved["gamma"]))
    if name == "swucbsharp":
        return SwUcbSharp(SwUcbSharpParams(n, resolved["alpha"], resolved["lam"], resolved.get("delta_min")))
    if name == "ucb":
        return Ucb(n)
    if name == "dsee":
        return Dsee(n, resolved["w"])
    return RandomPolicy(n, rng)


@dataclass
class RunRecord:
    replication: int
    seed: int
    digest: str
    trace: RegretTrace = field(repr=False)
    arms: np.ndarray = field(repr=False)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    resolved: dict
    records: list[RunRecord]
    aggregate: Optional[AggregateTrace]
    curve: Optional[BoundCurve]
    failures: list[dict] = field(default_factory=list)


class ReplicationFault(RuntimeError):
    def __init__(self, replication: int, cause: BaseException):
        super().__init__(f"replication {replication} failed: {cause!r}")
        self.replication = replication
        self.cause = cause


def replication_seed(master_seed: int, m: int) -> int:
    ss = np.random.SeedSequence(master_seed, spawn_key=(m,))
    return int(ss.generate_state(1, np.uint64)[0])


def arm_digest(arms: np.ndarray) -> str:
    return hashlib.sha256(np.asarray(arms, dtype="<i4").tobytes()).hexdigest()


def build_env(cfg: ExperimentConfig, rng: np.random.Generator) -> MeanMatrix:
    ec = env_config(cfg)
    if isinstance(ec, AbruptConfig):
        return gen_abrupt_means(ec, rng)
    return gen_slow_means(ec, rng)


def simulate(policy: Policy, mm: MeanMatrix, model: RewardModel, rng: np.random.Generator) -> np.ndarray:
    """Drive ``policy`` for the full horizon; returns the 1-based arm sequence.

    Rewards for all arms are drawn per chunk of steps, so the reward stream is
    independent of the policy's choices.
    """
    horizon = mm.horizon
    arms: list[int] = []
    select, update = policy.select, policy.update
    for c0 in range(0, horizon, REWARD_CHUNK):
        c1 = min(c0 + REWARD_CHUNK, horizon)
        rows = sample_rewards(mm.means[:, c0:c1], model, rng).T.tolist()
        for row in rows:
            arm = select()
            update(arm, row[arm - 1])
            arms.append(arm)
    return np.asarray(arms, dtype=np.int64)


def run_replication(cfg: ExperimentConfig, resolved: dict, m: int) -> RunRecord:
    seed = replication_seed(cfg.master_seed, m)
    env_ss, reward_ss, policy_ss = np.random.SeedSequence(seed).spawn(3)
    try:
        mm = build_env(cfg, np.random.default_rng(env_ss))
        policy = make_policy(cfg, resolved, np.random.default_rng(policy_ss))
        with np.errstate(all="raise"):
            arms = simulate(policy, mm, cfg.reward, np.random.default_rng(reward_ss))
            trace = regret_trace(mm, arms)
    except ConfigError:
        raise
    except (ArithmeticError, ValueError, IndexError, RuntimeError) as exc:
        raise ReplicationFault(m, exc) from exc
    return RunRecord(m, seed, arm_digest(arms), trace, arms)


def _run_one(args):
    cfg, resolved, m = args
    try:
        return run_replication(cfg, resolved, m)
    except ReplicationFault as fault:
        return fault


def thread_count() -> int:
    raw = os.environ.get("NSB_THREADS")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ConfigError(f"NSB_THREADS must be an integer, got {raw!r}") from None
        if n < 1:
            raise ConfigError("NSB_THREADS must be positive")
        return n
    return os.cpu_count() or 1


def run_experiment(cfg: ExperimentConfig, replications: Optional[list[int]] = None) -> ExperimentResult:
    """Run every replication of ``cfg`` and aggregate in replication-index order."""
    resolved = resolve(cfg)
    idx = list(range(cfg.replications)) if replications is None else list(replications)
    jobs = [(cfg, resolved, m) for m in idx]
    workers = min(thread_count(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_one, jobs))
    else:
        outcomes = [_run_one(j) for j in jobs]
    records, failures = [], []
    for out in outcomes:
        if isinstance(out, ReplicationFault):
            log.error("%s", out)
            failures.append({"replication": out.replication, "error": repr(out.cause)})
        else:
            records.append(out)
    records.sort(key=lambda r: r.replication)
    agg = curve = None
    if records:
        agg = aggregate(r.trace for r in records)
        curve = bound_ratio(agg, resolved["bound_tag"], **resolved["bound_tuning"])
    return ExperimentResult(cfg, resolved, records, agg, curve, failures)


def _fmt(x: float) -> str:
    if not np.isfinite(x):
        return "nan"
    return np.format_float_positional(x, precision=9, unique=False, fractional=False, trim="-")


def emit_csv(result: ExperimentResult, path) -> Path:
    """``t,mean_regret,std_regret,bound_ratio``; bound ratio is nan at t=1."""
    path = Path(path)
    agg, curve = result.aggregate, result.curve
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "mean_regret", "std_regret", "bound_ratio"])
            if agg is not None:
                ratio = np.concatenate(([np.nan], curve.values))
                for t in range(agg.horizon):
                    w.writerow([t + 1, _fmt(agg.mean[t]), _fmt(agg.std[t]), _fmt(ratio[t])])
    except OSError as exc:
        raise OSError(f"writing {path}: {exc}") from exc
    return path


def summary(result: ExperimentResult) -> dict:
    agg, curve = result.aggregate, result.curve
    if agg is None:
        return {"completed_replications": 0}
    return {
        "completed_replications": agg.replications,
        "final_mean_regret": float(agg.mean[-1]),
        "final_std_regret": float(agg.std[-1]),
        "final_bound_ratio": float(curve.values[-1]) if len(curve.values) else None,
        "bound_tag": curve.tag,
        "bound_exponent": curve.exponent,
    }


def result_document(result: ExperimentResult) -> dict:
    return {
        "config": result.config.to_dict(),
        "derived": result.resolved,
        "replications": [
            {"replication": r.replication, "seed": r.seed, "digest": r.digest, "final_regret": r.trace.final}
            for r in result.records
        ],
        "failures": result.failures,
        "summary": summary(result),
    }


def emit_json(result: ExperimentResult, path) -> Path:
    path = Path(path)
    text = json.dumps(result_document(result), indent=2, sort_keys=True) + "\n"
    try:
        with path.open("w", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"writing {path}: {exc}") from exc
    return path


def load_config(path) -> ExperimentConfig:
    """Read a config file; a result document written by :func:`emit_json` is accepted too."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    if "config" in doc and "derived" in doc:
        doc = doc["config"]
    return ExperimentConfig.from_dict(doc)
