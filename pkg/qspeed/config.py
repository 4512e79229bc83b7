from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

import yaml

SEED_ENV_VAR = "QSP_SEED"


@dataclass
class SimConfig:
    max_qubits: int = 24
    norm_tolerance: float = 1e-9
    unitary_tolerance: float = 1e-9


@dataclass
class RetryConfig:
    order_find: int = 20
    shor_restarts: int = 10
    grover: int = 10


@dataclass
class ShorConfig:
    max_qubits: int = 18


@dataclass
class PriorConfig:
    epsilon: float = 0.05
    k: float = 3.0
    precision: int = 6
    enumeration_cap: int = 12


@dataclass
class AgentConfig:
    episode_window: Optional[int] = 4
    episode_lookahead: Optional[int] = 2
    tree_budget: int = 4096
    k_confidence: float = 100.0
    epsilon_override: Optional[float] = None


@dataclass
class RunConfig:
    seed: Optional[int] = None
    strict_paper_mode: bool = False
    progress: bool = False


@dataclass
class AppConfig:
    sim: SimConfig = field(default_factory=SimConfig)
    retries: RetryConfig = field(default_factory=RetryConfig)
    shor: ShorConfig = field(default_factory=ShorConfig)
    prior: PriorConfig = field(default_factory=PriorConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    run: RunConfig = field(default_factory=RunConfig)


def default_config() -> AppConfig:
    return AppConfig()


def _optional_float(value) -> Optional[float]:
    return float(value) if value is not None else None


def _optional_int(value) -> Optional[int]:
    return int(value) if value is not None else None


def load_config(path: str) -> AppConfig:
    with open(path, "r", encoding="utf-8") as f:
        try:
            raw = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ValueError(f"{path}: not valid YAML: {e}") from e
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: expected a mapping of sections, got {type(raw).__name__}")

    sim_raw = raw.get("sim") or {}
    retries_raw = raw.get("retries") or {}
    shor_raw = raw.get("shor") or {}
    prior_raw = raw.get("prior") or {}
    agent_raw = raw.get("agent") or {}
    run_raw = raw.get("run") or {}

    sim_cfg = SimConfig(
        max_qubits=int(sim_raw.get("max_qubits", 24)),
        norm_tolerance=float(sim_raw.get("norm_tolerance", 1e-9)),
        unitary_tolerance=float(sim_raw.get("unitary_tolerance", 1e-9)),
    )
    retries_cfg = RetryConfig(
        order_find=int(retries_raw.get("order_find", 20)),
        shor_restarts=int(retries_raw.get("shor_restarts", 10)),
        grover=int(retries_raw.get("grover", 10)),
    )
    shor_cfg = ShorConfig(max_qubits=int(shor_raw.get("max_qubits", 18)))
    prior_cfg = PriorConfig(
        epsilon=float(prior_raw.get("epsilon", 0.05)),
        k=float(prior_raw.get("k", 3)),
        precision=int(prior_raw.get("precision", 6)),
        enumeration_cap=int(prior_raw.get("enumeration_cap", 12)),
    )
    agent_cfg = AgentConfig(
        episode_window=_optional_int(agent_raw.get("episode_window", 4)),
        episode_lookahead=_optional_int(agent_raw.get("episode_lookahead", 2)),
        tree_budget=int(agent_raw.get("tree_budget", 4096)),
        k_confidence=float(agent_raw.get("k_confidence", 100)),
        epsilon_override=_optional_float(agent_raw.get("epsilon_override")),
    )
    run_cfg = RunConfig(
        seed=int(run_raw["seed"]) if run_raw.get("seed") is not None else None,
        strict_paper_mode=bool(run_raw.get("strict_paper_mode", False)),
        progress=bool(run_raw.get("progress", False)),
    )
    return AppConfig(
        sim=sim_cfg,
        retries=retries_cfg,
        shor=shor_cfg,
        prior=prior_cfg,
        agent=agent_cfg,
        run=run_cfg,
    )


def resolve_seed(cli_seed: Optional[int], cfg: AppConfig) -> int:
    """--seed wins, then QSP_SEED, then run.seed from the file, then 0."""
    if cli_seed is not None:
        return int(cli_seed)
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed not in (None, ""):
        return int(env_seed)
    if cfg.run.seed is not None:
        return int(cfg.run.seed)
    return 0
