"""Expectimax agents over the (quasi-)speed prior and the toy environments they play."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from tqdm import tqdm

import prior
from errors import ArgumentError, ResourceLimitError
from machine import SK2, Machine

log = logging.getLogger("agent")

DEFAULT_EPISODE_WINDOW = 4
DEFAULT_EPISODE_LOOKAHEAD = 2
DEFAULT_TREE_BUDGET = 4096
DEFAULT_K_CONFIDENCE = 100.0
REWARDS = (0, 1)


class Conditioning(Enum):
    """How the prior sees percepts given actions.

    RELATIVE_REWARD stores each reward as the low action bit it paid for, which
    is a bijection of (o, r) once the action is fixed, and weighs the percept
    string alone. ACTION_CONTEXT weighs the plain percept string with the
    action string as the quasi-conditional context.
    """
    RELATIVE_REWARD = "RELATIVE_REWARD"
    ACTION_CONTEXT = "ACTION_CONTEXT"


# --- histories ---

@dataclass(frozen=True)
class Alphabets:
    observations: Tuple[int, ...] = (0, 1)
    actions: Tuple[int, ...] = (0, 1)

    def __post_init__(self):
        if not self.observations or not self.actions:
            raise ArgumentError("observation and action alphabets must be non-empty")
        if min(self.observations) < 0 or min(self.actions) < 0:
            raise ArgumentError("symbols are non-negative integers")

    @property
    def observation_bits(self) -> int:
        return max(1, (max(self.observations)).bit_length())

    @property
    def action_bits(self) -> int:
        return max(1, (max(self.actions)).bit_length())

    @property
    def percept_bits(self) -> int:
        """n: observation bits plus one reward bit."""
        return self.observation_bits + 1

    def percepts(self) -> List[Tuple[int, int]]:
        return [(o, r) for o in self.observations for r in REWARDS]

    def encode_percept(self, observation: int, reward: int) -> str:
        if reward not in REWARDS:
            raise ArgumentError(f"reward must be 0 or 1, got {reward}")
        return format(observation, f"0{self.observation_bits}b") + str(reward)

    def decode_percept(self, block: str) -> Tuple[int, int]:
        if len(block) != self.percept_bits:
            raise ArgumentError(f"percept block {block!r} is not {self.percept_bits} bits")
        return int(block[:-1], 2), int(block[-1])

    def encode_action(self, action: int) -> str:
        return format(action, f"0{self.action_bits}b")

    def decode_action(self, block: str) -> int:
        if len(block) != self.action_bits:
            raise ArgumentError(f"action block {block!r} is not {self.action_bits} bits")
        return int(block, 2)

    def model_block(self, action: int, observation: int, reward: int, conditioning: Conditioning) -> str:
        """The percept block the prior weighs for one step."""
        if conditioning == Conditioning.ACTION_CONTEXT:
            return self.encode_percept(observation, reward)
        if reward not in REWARDS:
            raise ArgumentError(f"reward must be 0 or 1, got {reward}")
        paid = (action & 1) if reward else (action & 1) ^ 1
        return format(observation, f"0{self.observation_bits}b") + str(paid)


BINARY = Alphabets()


@dataclass(frozen=True)
class Step:
    action: int
    observation: int
    reward: int


@dataclass
class PerceptHistory:
    steps: List[Step] = field(default_factory=list)
    alphabets: Alphabets = BINARY

    def append(self, action: int, observation: int, reward: int) -> None:
        self.steps.append(Step(action, observation, reward))

    def _tail(self, last: Optional[int]) -> List[Step]:
        if last is None:
            return self.steps
        return self.steps[max(0, len(self.steps) - last):] if last > 0 else []

    def percept_string(self, last: Optional[int] = None) -> str:
        steps = self._tail(last)
        return "".join(self.alphabets.encode_percept(s.observation, s.reward) for s in steps)

    def action_string(self, last: Optional[int] = None) -> str:
        steps = self._tail(last)
        return "".join(self.alphabets.encode_action(s.action) for s in steps)

    def model_string(self, conditioning: Conditioning, last: Optional[int] = None) -> str:
        steps = self._tail(last)
        return "".join(self.alphabets.model_block(s.action, s.observation, s.reward, conditioning) for s in steps)

    @classmethod
    def decode(cls, percepts: str, actions: str, alphabets: Alphabets = BINARY) -> "PerceptHistory":
        pw, aw = alphabets.percept_bits, alphabets.action_bits
        if len(percepts) % pw or len(actions) % aw or len(percepts) // pw != len(actions) // aw:
            raise ArgumentError("percept and action strings do not describe the same number of steps")
        history = cls([], alphabets)
        for i in range(len(percepts) // pw):
            o, r = alphabets.decode_percept(percepts[i * pw:(i + 1) * pw])
            history.append(alphabets.decode_action(actions[i * aw:(i + 1) * aw]), o, r)
        return history

    def __len__(self) -> int:
        return len(self.steps)


# --- decisions ---

@dataclass
class ActionDecision:
    """`prior_calls` counts the percept nodes weighed under one candidate action,
    sum over d of |O x R|^d |A|^(d-1); every candidate costs the same, so the
    whole decision made `total_prior_calls` = |A| times that."""
    action: int
    values: Dict[int, float]
    prior_calls: int
    epsilon_used: Optional[float] = None
    paper_epsilon: Optional[float] = None
    error_bounds: Dict[int, float] = field(default_factory=dict)
    depth: int = 0
    window: Optional[int] = None
    total_prior_calls: int = 0


def choose_action(values: Dict[int, float]) -> int:
    """Argmax; ties go to the lexicographically smallest action."""
    best = max(values.values())
    return min(a for a, v in values.items() if v == best)


def tree_leaves(alphabets: Alphabets, depth: int) -> int:
    return (len(alphabets.percepts()) * len(alphabets.actions)) ** depth


def prior_calls_per_action(alphabets: Alphabets, depth: int) -> int:
    percepts, actions = len(alphabets.percepts()), len(alphabets.actions)
    return sum(percepts ** d * actions ** (d - 1) for d in range(1, depth + 1))


def paper_epsilon(symbol_bits: int, horizon: int, alphabets: Alphabets, remaining: int) -> float:
    """1 / (n m 2^(|O| |A| (m - k))) with n the per-symbol bit width."""
    exponent = len(alphabets.observations) * len(alphabets.actions) * remaining
    return 1.0 / (symbol_bits * horizon * 2.0 ** exponent)


@lru_cache(maxsize=256)
def _prior_table(machine: Machine, n: int, context: str, enumeration_cap: int) -> Dict[str, Fraction]:
    table = prior.phase_count_table(machine, n, context=context, enumeration_cap=enumeration_cap)
    return {x: prior.exact_value_from_counts(counts, n) for x, counts in table.items()}


LeafPrior = Callable[[str, str], Tuple[float, float]]


def classical_leaf_prior(machine: Machine = SK2,
                         enumeration_cap: int = prior.DEFAULT_ENUMERATION_CAP) -> LeafPrior:
    """Exact S'(model, context) from a cached enumeration; an empty context gives S(model)."""
    def weight(model: str, context: str) -> Tuple[Fraction, float]:
        return _prior_table(machine, len(model), context, enumeration_cap)[model], 0.0
    return weight


def sampled_leaf_prior(machine: Machine, epsilon: float, k: float, rng: np.random.Generator,
                       enumeration_cap: int = prior.DEFAULT_ENUMERATION_CAP) -> LeafPrior:
    def weight(model: str, context: str) -> Tuple[float, float]:
        est = prior.quasi_conditional(model, context, epsilon=epsilon, k=k, rng=rng, machine=machine,
                                      enumeration_cap=enumeration_cap)
        return est.value, est.error_bound
    return weight


def search_depth(history: PerceptHistory, horizon: int, lookahead: Optional[int]) -> int:
    """m - k + 1, cut to `lookahead` when a receding horizon is asked for."""
    depth = horizon - len(history)
    if lookahead is not None:
        depth = min(depth, lookahead)
    if depth < 1:
        raise ArgumentError(f"no steps left: horizon {horizon}, current step {len(history) + 1}")
    return depth


def _expectimax(history: PerceptHistory, horizon: int, leaf_prior: LeafPrior, conditioning: Conditioning,
                window: Optional[int], lookahead: Optional[int], tree_budget: int,
                enumeration_cap: int) -> ActionDecision:
    """Each reward is weighted by the prior of the history up to the percept that
    carries it; under a measure this is the same as weighting the summed rewards
    by the prior of the whole path."""
    alphabets = history.alphabets
    depth = search_depth(history, horizon, lookahead)
    if len(alphabets.actions) == 1:
        only = alphabets.actions[0]
        return ActionDecision(only, {only: 0.0}, 0, depth=depth, window=window)
    leaves = tree_leaves(alphabets, depth)
    if leaves > tree_budget:
        raise ResourceLimitError(f"expectimax tree has {leaves} leaves, budget is {tree_budget}")

    past = history.model_string(conditioning, window)
    past_actions = history.action_string(window)
    longest = len(past) + depth * alphabets.percept_bits
    if longest > enumeration_cap:
        raise ResourceLimitError(f"{longest}-bit model strings are over the enumeration cap {enumeration_cap}")
    calls = 0

    def weigh(model: str, actions: str):
        nonlocal calls
        calls += 1
        context = past_actions + actions if conditioning == Conditioning.ACTION_CONTEXT else ""
        return leaf_prior(past + model, context)

    def chance(model: str, actions: str, action: int, left: int):
        acted = actions + alphabets.encode_action(action)
        total, err = 0, 0.0
        for o, r in alphabets.percepts():
            node = model + alphabets.model_block(action, o, r, conditioning)
            w, e = weigh(node, acted)
            total += r * w
            err += r * e
            if left > 1:
                v, ve = best(node, acted, left - 1)
                total += v
                err += ve
        return total, err

    def best(model: str, actions: str, left: int):
        top, top_err = None, 0.0
        for a in alphabets.actions:
            v, e = chance(model, actions, a, left)
            if top is None or v > top:
                top = v
            top_err = max(top_err, e)
        return top, top_err

    exact: Dict[int, float] = {}
    bounds: Dict[int, float] = {}
    for a in alphabets.actions:
        exact[a], bounds[a] = chance("", "", a, depth)
    action = choose_action(exact)
    values = {a: float(v) for a, v in exact.items()}
    per_action = calls // len(alphabets.actions)
    log.debug("step %d: values %s -> action %d (%d prior calls, depth %d)",
              len(history) + 1, values, action, calls, depth)
    return ActionDecision(action, values, per_action, error_bounds=bounds, depth=depth, window=window,
                          total_prior_calls=calls)


def aixi_spd_action(history: PerceptHistory, alphabets: Alphabets = BINARY, horizon: int = 2,
                    prior_method: prior.PriorMethod = prior.PriorMethod.CLASSICAL,
                    machine: Machine = SK2, conditioning: Conditioning = Conditioning.RELATIVE_REWARD,
                    window: Optional[int] = None, lookahead: Optional[int] = None,
                    tree_budget: int = DEFAULT_TREE_BUDGET,
                    epsilon: float = prior.DEFAULT_EPSILON, k: float = prior.DEFAULT_K,
                    rng: Optional[np.random.Generator] = None,
                    leaf_prior: Optional[LeafPrior] = None,
                    enumeration_cap: int = prior.DEFAULT_ENUMERATION_CAP) -> ActionDecision:
    """Full expectimax to the horizon over the whole history.

    `window` keeps only the last steps of the history and `lookahead` cuts the
    search short of the horizon; both default to off.
    """
    if history.alphabets != alphabets:
        history = PerceptHistory(list(history.steps), alphabets)
    if leaf_prior is None:
        if prior_method == prior.PriorMethod.CLASSICAL:
            leaf_prior = classical_leaf_prior(machine, enumeration_cap)
        else:
            leaf_prior = sampled_leaf_prior(machine, epsilon, k, rng if rng is not None else np.random.default_rng(0),
                                            enumeration_cap)
    return _expectimax(history, horizon, leaf_prior, conditioning, window, lookahead, tree_budget,
                       enumeration_cap)


def aixiq_action(history: PerceptHistory, alphabets: Alphabets = BINARY, horizon: int = 2,
                 epsilon_override: Optional[float] = None,
                 k_confidence: float = DEFAULT_K_CONFIDENCE,
                 rng: Optional[np.random.Generator] = None, machine: Machine = SK2,
                 conditioning: Conditioning = Conditioning.RELATIVE_REWARD,
                 window: Optional[int] = None, lookahead: Optional[int] = None,
                 tree_budget: int = DEFAULT_TREE_BUDGET,
                 enumeration_cap: int = prior.DEFAULT_ENUMERATION_CAP) -> ActionDecision:
    """Expectimax with every weight a sampled quasi-conditional estimate."""
    if history.alphabets != alphabets:
        history = PerceptHistory(list(history.steps), alphabets)
    remaining = horizon - (len(history) + 1)
    eps_default = paper_epsilon(alphabets.observation_bits, horizon, alphabets, max(0, remaining))
    eps = epsilon_override if epsilon_override is not None else eps_default
    if epsilon_override is not None:
        log.info("AIXIq epsilon %.4g overrides %.4g", epsilon_override, eps_default)
    rng = rng if rng is not None else np.random.default_rng(0)
    decision = _expectimax(history, horizon, sampled_leaf_prior(machine, eps, k_confidence, rng, enumeration_cap),
                           conditioning, window, lookahead, tree_budget, enumeration_cap)
    decision.epsilon_used = eps
    decision.paper_epsilon = eps_default
    return decision


# --- environments ---

class EnvKind(Enum):
    DETERMINISTIC_PATTERN = "DETERMINISTIC_PATTERN"
    BIASED_COIN = "BIASED_COIN"
    MATCH_LAST_OBSERVATION = "MATCH_LAST_OBSERVATION"


@dataclass(frozen=True)
class EnvironmentSpec:
    kind: EnvKind
    horizon: int = 20
    pattern: str = "01"
    bias: float = 0.5
    alphabets: Alphabets = BINARY

    def __post_init__(self):
        if not self.pattern or any(b not in "01" for b in self.pattern):
            raise ArgumentError(f"pattern must be a non-empty bit string, got {self.pattern!r}")
        if not 0.0 <= self.bias <= 1.0:
            raise ArgumentError(f"coin bias must be in [0, 1], got {self.bias}")
        if self.horizon < 1:
            raise ArgumentError("horizon must be >= 1")


class Environment:
    """Observation o_t, then reward for the action taken before seeing it."""

    def __init__(self, spec: EnvironmentSpec, rng: np.random.Generator):
        self.spec = spec
        self.rng = rng
        self.t = 0
        self.last_observation: Optional[int] = None

    def _observation(self) -> int:
        if self.spec.kind == EnvKind.BIASED_COIN:
            return int(self.rng.random() < self.spec.bias)
        return int(self.spec.pattern[self.t % len(self.spec.pattern)])

    def step(self, action: int) -> Tuple[int, int]:
        obs = self._observation()
        if self.spec.kind == EnvKind.MATCH_LAST_OBSERVATION:
            reward = int(self.last_observation is not None and action == self.last_observation)
        else:
            reward = int(action == obs)
        self.last_observation = obs
        self.t += 1
        return obs, reward


# --- episodes ---

class AgentKind(Enum):
    AIXI_SPD = "AIXI_SPD"
    AIXIQ = "AIXIQ"
    LAPLACE_BASELINE = "LAPLACE_BASELINE"
    RANDOM = "RANDOM"


Policy = Callable[[PerceptHistory, np.random.Generator], int]


def laplace_policy(history: PerceptHistory, rng: np.random.Generator) -> int:
    """Bet on the observation the rule of succession rates more likely (0 on ties)."""
    bits = "".join(str(s.observation & 1) for s in history.steps)
    return int(prior.laplace_predict(bits) > 0.5)


def follow_last_observation(history: PerceptHistory, rng: np.random.Generator) -> int:
    return history.steps[-1].observation if history.steps else 0


@dataclass
class Episode:
    steps: List[dict]
    total_reward: int
    seed: Optional[int] = None

    @property
    def mean_reward(self) -> float:
        return self.total_reward / len(self.steps) if self.steps else 0.0


def run_episode(env: EnvironmentSpec, agent: Union[AgentKind, Policy], episode_length: int,
                rng: np.random.Generator, seed: Optional[int] = None, machine: Machine = SK2,
                window: Optional[int] = DEFAULT_EPISODE_WINDOW,
                lookahead: Optional[int] = DEFAULT_EPISODE_LOOKAHEAD,
                tree_budget: int = DEFAULT_TREE_BUDGET, epsilon_override: Optional[float] = None,
                k_confidence: float = DEFAULT_K_CONFIDENCE, progress: bool = False,
                conditioning: Conditioning = Conditioning.RELATIVE_REWARD,
                enumeration_cap: int = prior.DEFAULT_ENUMERATION_CAP) -> Episode:
    """Expectimax agents plan on a receding horizon of `lookahead` steps over the
    last `window` steps; None for either means the full horizon or history."""
    if episode_length < 1:
        raise ArgumentError(f"episode length must be >= 1, got {episode_length}")
    environment = Environment(env, rng)
    history = PerceptHistory([], env.alphabets)
    horizon = max(env.horizon, episode_length)
    records: List[dict] = []
    total = 0

    steps = range(1, episode_length + 1)
    if progress:
        steps = tqdm(steps, desc=f"episode {agent.name if isinstance(agent, AgentKind) else 'policy'}")
    for step in steps:
        values: Dict[int, float] = {}
        calls = 0
        depth: Optional[int] = None
        if agent == AgentKind.RANDOM:
            action = int(rng.choice(env.alphabets.actions))
        elif agent == AgentKind.LAPLACE_BASELINE:
            action = laplace_policy(history, rng)
        elif agent in (AgentKind.AIXI_SPD, AgentKind.AIXIQ):
            if agent == AgentKind.AIXI_SPD:
                decision = aixi_spd_action(history, env.alphabets, horizon, machine=machine,
                                           conditioning=conditioning, window=window, lookahead=lookahead,
                                           tree_budget=tree_budget, enumeration_cap=enumeration_cap)
            else:
                decision = aixiq_action(history, env.alphabets, horizon, epsilon_override, k_confidence,
                                        rng, machine, conditioning, window, lookahead, tree_budget,
                                        enumeration_cap)
            action, values, calls, depth = decision.action, decision.values, decision.prior_calls, decision.depth
        else:
            action = int(agent(history, rng))

        obs, reward = environment.step(action)
        history.append(action, obs, reward)
        total += reward
        log.info("step %d: action=%d observation=%d reward=%d", step, action, obs, reward)
        records.append({
            "step": step,
            "action": action,
            "observation": obs,
            "reward": reward,
            "value_table": {str(a): v for a, v in values.items()},
            "prior_calls": calls,
            "depth": depth,
            "window": window if depth is not None else None,
            "seed": seed,
        })
    return Episode(records, total, seed)
