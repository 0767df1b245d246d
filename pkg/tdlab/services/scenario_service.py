"""
Scenario Service - Built-in and File Scenarios
Resolves scenario names and files into validated chain models.

Built-ins:
1. paper-3state (alias three-state) - A -> {B, C} with probability 1/2 each, reward-1 self-loops
   at B and C, weighting [0, 0.8, 0.2], features [eps, -1, 1]
2. gridworld-WxH - deterministic grid, terminal bottom-right, -1 per move
3. random-chain(n,k,seed) - seeded Dirichlet chain with stationary weighting

Scenario file keys: states, transition.<i>.<j>, reward.<i>.<j>, weighting,
discount, features.<i>, sampling, epsilon_feature, restart, episode_cap, name.
Numbers may be written as fractions (1/2). A feature entry 'epsilon' takes the
value of epsilon_feature.
"""

import re
import threading
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import structlog

from tdlab.core.config import get_settings
from tdlab.core.exceptions import ConfigError, ContractViolation, LabError, ScenarioError
from tdlab.core.chain import FeatureMap, MarkovRewardProcess, random_chain
from tdlab.core.agents import Transition
from tdlab.core.coop import GridWorld
from tdlab.schemas.experiment import SamplingRegime
from tdlab.schemas.flatfile import FlatConfig, FlatEntry, format_value, read_flat_file, parse_flat_text

logger = structlog.get_logger(__name__)

THREE_STATE = "paper-3state"
SCENARIO_ALIASES = {"three-state": THREE_STATE}
GRIDWORLD_PATTERN = re.compile(r"^gridworld-(\d+)x(\d+)$")
RANDOM_CHAIN_PATTERN = re.compile(r"^random-chain\(\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*\)$")

SCENARIO_KEYS = (
    "name", "states", "weighting", "discount", "sampling", "epsilon_feature",
    "restart", "episode_cap",
)


@dataclass(frozen=True, eq=False)
class Scenario:
    """A linear evaluation problem (mrp + features) or a control gridworld"""

    name: str
    mrp: Optional[MarkovRewardProcess] = None
    features: Optional[FeatureMap] = None
    sampling: SamplingRegime = SamplingRegime.IID_WEIGHTED
    epsilon_feature: Optional[float] = None
    restart: Optional[np.ndarray] = None
    episode_cap: int = 100
    gridworld: Optional[GridWorld] = None

    def __post_init__(self):
        if self.gridworld is not None:
            if self.mrp is not None or self.features is not None:
                raise ContractViolation("a gridworld scenario carries no chain or features")
            return
        if self.mrp is None or self.features is None:
            raise ContractViolation("a linear scenario needs both a chain and features")
        if self.features.n_states != self.mrp.n_states:
            raise ContractViolation(
                f"features cover {self.features.n_states} states, chain has {self.mrp.n_states}"
            )
        self.features.gram(self.mrp.norm, max_condition=get_settings().max_condition_number)
        if self.episode_cap < 1:
            raise ContractViolation(f"episode_cap must be >= 1, got {self.episode_cap}")
        restart = self.mrp.weighting if self.restart is None else np.array(self.restart, dtype=np.float64)
        if restart.shape != (self.mrp.n_states,) or np.any(restart < 0) or abs(restart.sum() - 1.0) > 1e-12:
            raise ContractViolation("restart must be a distribution over the chain's states")
        restart.setflags(write=False)
        object.__setattr__(self, "restart", restart)

    @property
    def is_linear(self) -> bool:
        return self.gridworld is None

    @property
    def discount(self) -> float:
        return self.gridworld.discount if self.gridworld is not None else self.mrp.discount

    @property
    def n_features(self) -> int:
        if self.features is None:
            raise ScenarioError(f"scenario {self.name} has no linear features")
        return self.features.n_features


def three_state_chain(discount: float, epsilon_feature: float) -> Tuple[MarkovRewardProcess, FeatureMap]:
    transition = np.array([
        [0.0, 0.5, 0.5],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
    ])
    reward = np.array([
        [0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
    ])
    weighting = np.array([0.0, 0.8, 0.2])
    mrp = MarkovRewardProcess(transition, reward, discount, weighting)
    return mrp, FeatureMap(np.array([[epsilon_feature], [-1.0], [1.0]]))


class ScenarioService:
    """Resolve, register and serialize scenarios"""

    def __init__(self):
        self._registry: Dict[tuple, Scenario] = {}
        self._lock = threading.Lock()

    def builtin_scenario(
        self,
        name: str,
        discount: Optional[float] = None,
        epsilon_feature: Optional[float] = None,
        sampling: Optional[SamplingRegime] = None,
    ) -> Scenario:
        """
        Build (or fetch the registered) built-in scenario.

        Registered scenarios are immutable, so repeated calls with the same
        arguments return the same object.
        """
        settings = get_settings()
        discount = settings.default_discount if discount is None else discount
        name = name.strip()
        key = (SCENARIO_ALIASES.get(name, name), discount, epsilon_feature, sampling)
        with self._lock:
            if key in self._registry:
                return self._registry[key]
        scenario = self._build_builtin(key[0], discount, epsilon_feature, sampling)
        with self._lock:
            scenario = self._registry.setdefault(key, scenario)
        logger.debug("scenario.registered", name=scenario.name, discount=discount)
        return scenario

    def _build_builtin(
        self,
        name: str,
        discount: float,
        epsilon_feature: Optional[float],
        sampling: Optional[SamplingRegime],
    ) -> Scenario:
        regime = sampling or SamplingRegime.IID_WEIGHTED
        name = SCENARIO_ALIASES.get(name, name)
        if name == THREE_STATE:
            eps = get_settings().default_epsilon_feature if epsilon_feature is None else epsilon_feature
            mrp, features = three_state_chain(discount, eps)
            return Scenario(name, mrp, features, regime, eps)

        match = GRIDWORLD_PATTERN.match(name)
        if match:
            width, height = int(match.group(1)), int(match.group(2))
            grid = GridWorld(width, height, terminals=((height - 1, width - 1),), discount=discount)
            return Scenario(name, gridworld=grid)

        match = RANDOM_CHAIN_PATTERN.match(name)
        if match:
            n, k, seed = (int(g) for g in match.groups())
            mrp, features = random_chain(n, k, seed, discount)
            return Scenario(f"random-chain({n},{k},{seed})", mrp, features, regime)

        raise ScenarioError(
            f"unknown scenario {name!r}; expected paper-3state, gridworld-WxH, "
            f"random-chain(n,k,seed) or a scenario file"
        )

    def is_builtin(self, name: str) -> bool:
        name = name.strip()
        return (
            name in (THREE_STATE, *SCENARIO_ALIASES)
            or bool(GRIDWORLD_PATTERN.match(name))
            or bool(RANDOM_CHAIN_PATTERN.match(name))
        )

    def resolve(
        self,
        name: str,
        discount: Optional[float] = None,
        epsilon_feature: Optional[float] = None,
        sampling: Optional[SamplingRegime] = None,
        base_dir: Optional[Path] = None,
    ) -> Scenario:
        """Built-in name, or a scenario file path (relative to base_dir)"""
        if self.is_builtin(name):
            return self.builtin_scenario(name, discount, epsilon_feature, sampling)
        path = Path(name)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        if not path.exists():
            raise ScenarioError(f"unknown scenario {name!r} (no built-in and no file at {path})")
        return self.load_scenario_file(path, discount, epsilon_feature, sampling)

    # ============= Scenario files =============

    def load_scenario_file(
        self,
        path: Path,
        discount: Optional[float] = None,
        epsilon_feature: Optional[float] = None,
        sampling: Optional[SamplingRegime] = None,
    ) -> Scenario:
        entries = read_flat_file(Path(path))
        scenario = self.parse_scenario(entries, default_name=Path(path).stem)
        if discount is None and epsilon_feature is None and sampling is None:
            return scenario
        overrides = dict(entries)
        if discount is not None:
            overrides["discount"] = FlatEntry("discount", format_value(discount))
        if epsilon_feature is not None:
            overrides["epsilon_feature"] = FlatEntry("epsilon_feature", format_value(epsilon_feature))
        if sampling is not None:
            overrides["sampling"] = FlatEntry("sampling", sampling.value)
        return self.parse_scenario(overrides, default_name=scenario.name)

    def parse_scenario_text(self, text: str, default_name: str = "scenario") -> Scenario:
        return self.parse_scenario(parse_flat_text(text), default_name)

    def parse_scenario(self, entries: FlatConfig, default_name: str = "scenario") -> Scenario:
        settings = get_settings()
        for key, entry in entries.items():
            head = key.split(".", 1)[0]
            if key not in SCENARIO_KEYS and head not in ("transition", "reward", "features"):
                raise ConfigError("unknown key", key_path=key, line=entry.line, column=entry.column)

        n = _integer(_required(entries, "states"))
        if n < 1:
            raise _entry_error(entries["states"], "states must be >= 1")
        discount = _number(entries["discount"]) if "discount" in entries else settings.default_discount
        eps = (
            _number(entries["epsilon_feature"])
            if "epsilon_feature" in entries else settings.default_epsilon_feature
        )

        transition = np.zeros((n, n))
        reward = np.zeros((n, n))
        feature_rows: Dict[int, List[float]] = {}
        for key, entry in entries.items():
            parts = key.split(".")
            if parts[0] in ("transition", "reward"):
                i, j = _indices(entry, parts, 2, n)
                (transition if parts[0] == "transition" else reward)[i, j] = _number(entry)
            elif parts[0] == "features":
                (i,) = _indices(entry, parts, 1, n)
                feature_rows[i] = [
                    eps if token.strip() == "epsilon" else _number(entry, token)
                    for token in entry.value.split(",")
                ]

        missing = [i for i in range(n) if i not in feature_rows]
        if missing:
            raise ConfigError("missing feature row", key_path=f"features.{missing[0]}")
        widths = {len(row) for row in feature_rows.values()}
        if len(widths) != 1:
            raise ConfigError("feature rows have different lengths", key_path="features")
        weighting = _vector(_required(entries, "weighting"), n)
        restart = _vector(entries["restart"], n) if "restart" in entries else None
        regime = SamplingRegime.IID_WEIGHTED
        if "sampling" in entries:
            try:
                regime = SamplingRegime(entries["sampling"].value)
            except ValueError:
                raise _entry_error(entries["sampling"], "sampling must be iid_weighted or trajectory")
        episode_cap = _integer(entries["episode_cap"]) if "episode_cap" in entries else 100
        name = entries["name"].value if "name" in entries else default_name

        try:
            mrp = MarkovRewardProcess(transition, reward, discount, weighting)
            features = FeatureMap(np.array([feature_rows[i] for i in range(n)]))
            return Scenario(name, mrp, features, regime, eps, restart, episode_cap)
        except LabError as e:
            raise ConfigError(e.message, key_path=_blame(e.message))

    def dump_scenario(self, scenario: Scenario) -> str:
        """Scenario file text for a linear scenario; reloads to equal arrays"""
        if not scenario.is_linear:
            raise ScenarioError(f"scenario {scenario.name} is a gridworld and has no file form")
        mrp, phi = scenario.mrp, scenario.features.matrix
        n = mrp.n_states
        lines = [
            f"# tdlab scenario: {scenario.name}",
            f"name = {scenario.name}",
            f"states = {n}",
            f"discount = {format_value(mrp.discount)}",
            f"sampling = {scenario.sampling.value}",
            f"episode_cap = {scenario.episode_cap}",
        ]
        if scenario.epsilon_feature is not None:
            lines.append(f"epsilon_feature = {format_value(scenario.epsilon_feature)}")
        lines.append(f"weighting = {format_value([float(v) for v in mrp.weighting])}")
        if not np.array_equal(scenario.restart, mrp.weighting):
            lines.append(f"restart = {format_value([float(v) for v in scenario.restart])}")
        for i in range(n):
            for j in range(n):
                if mrp.transition[i, j] != 0.0:
                    lines.append(f"transition.{i}.{j} = {format_value(float(mrp.transition[i, j]))}")
        for i in range(n):
            for j in range(n):
                if mrp.reward[i, j] != 0.0:
                    lines.append(f"reward.{i}.{j} = {format_value(float(mrp.reward[i, j]))}")
        for i in range(n):
            lines.append(f"features.{i} = {format_value([float(v) for v in phi[i]])}")
        return "\n".join(lines) + "\n"

    def expected_batch(self, scenario: Scenario) -> List[Tuple[Transition, float]]:
        """Every transition with positive weight pi(i) P(i, j)"""
        if not scenario.is_linear:
            raise ScenarioError(f"scenario {scenario.name} has no transition weights")
        mrp = scenario.mrp
        weights = mrp.weighting[:, None] * mrp.transition
        return [
            (Transition(int(i), int(j), float(mrp.reward[i, j])), float(weights[i, j]))
            for i, j in zip(*np.nonzero(weights))
        ]


# ============= Parsing helpers =============

def _entry_error(entry: FlatEntry, message: str) -> ConfigError:
    return ConfigError(message, key_path=entry.key, line=entry.line, column=entry.column)


def _required(entries: FlatConfig, key: str) -> FlatEntry:
    if key not in entries:
        raise ConfigError("required key is missing", key_path=key)
    return entries[key]


def _number(entry: FlatEntry, token: Optional[str] = None) -> float:
    text = (entry.value if token is None else token).strip()
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise _entry_error(entry, f"{text!r} is not a number")


def _integer(entry: FlatEntry) -> int:
    try:
        return int(entry.value)
    except ValueError:
        raise _entry_error(entry, f"{entry.value!r} is not an integer")


def _vector(entry: FlatEntry, length: int) -> np.ndarray:
    values = [_number(entry, token) for token in entry.value.split(",")]
    if len(values) != length:
        raise _entry_error(entry, f"expected {length} values, got {len(values)}")
    return np.array(values)


def _indices(entry: FlatEntry, parts: List[str], count: int, n: int) -> Tuple[int, ...]:
    if len(parts) != count + 1 or not all(p.isdigit() for p in parts[1:]):
        raise _entry_error(entry, f"expected {parts[0]}" + ".<i>" * count)
    indices = tuple(int(p) for p in parts[1:])
    if any(i >= n for i in indices):
        raise _entry_error(entry, f"state index out of range [0, {n})")
    return indices


def _blame(message: str) -> Optional[str]:
    """Key path a chain-model error refers to"""
    for key in ("transition", "reward", "features", "weighting", "discount", "restart"):
        if message.startswith(key) or f" {key}" in message:
            return key
    return None


# Singleton
_scenario_service: Optional[ScenarioService] = None


def get_scenario_service() -> ScenarioService:
    """Get or create scenario service instance"""
    global _scenario_service
    if _scenario_service is None:
        _scenario_service = ScenarioService()
    return _scenario_service
