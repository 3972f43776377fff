"""Multiple-microgrid energy management benchmark.

Scenario 1 (three storage-only microgrids, the first with a wind turbine)
is built as an exact :class:`TsgModel`.  Scenario 2 (five full microgrids)
is only available as a sampler because its joint state space is huge.

Storage requests outside the feasible window are clamped, not masked, and
abandonment is whole MW capped at current generation, so every agent keeps
a fixed action set in every state.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .chain_analytics import stationary_distribution
from .game_model import TsgModel

log = logging.getLogger(__name__)

WIND_TRANSITION = (
    (0.53, 0.18, 0.19, 0.04, 0.01, 0.05),
    (0.51, 0.08, 0.20, 0.08, 0.02, 0.11),
    (0.35, 0.11, 0.19, 0.11, 0.03, 0.21),
    (0.27, 0.15, 0.15, 0.14, 0.03, 0.26),
    (0.14, 0.11, 0.13, 0.15, 0.05, 0.42),
    (0.09, 0.03, 0.06, 0.06, 0.03, 0.73),
)
LOAD_TRANSITION = (
    (0.96, 0.04, 0.00, 0.00, 0.00, 0.00),
    (0.12, 0.74, 0.14, 0.00, 0.00, 0.00),
    (0.00, 0.14, 0.66, 0.19, 0.01, 0.00),
    (0.00, 0.00, 0.06, 0.77, 0.16, 0.01),
    (0.00, 0.00, 0.01, 0.22, 0.61, 0.16),
    (0.00, 0.00, 0.00, 0.01, 0.16, 0.83),
)
CHARGE_ACTIONS = (-2, -1, 0, 1, 2)
ROW_TOL = 1e-9


def _checked_rows(matrix, name):
    m = np.array(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.min() < 0:
        raise ValueError(f"{name} must be a square non-negative matrix")
    sums = m.sum(axis=1)
    bad = np.abs(sums - 1.0) > ROW_TOL
    if bad.any():
        log.warning("%s rows %s do not sum to one; renormalising", name, np.flatnonzero(bad).tolist())
    return m / sums[:, None]


@dataclass(frozen=True)
class MicrogridSpec:
    has_generator: tuple = (True, False, False)
    has_load: tuple = (False, False, False)
    abandonment_allowed: tuple = (True, False, False)
    storage_capacity: int = 5
    charge_bounds: tuple = (-2, 2)
    wind_levels: tuple = (0.0, 1.0, 2.0, 3.0, 4.0, 5.0)
    load_levels: tuple = (0.6, 1.2, 1.8, 2.4, 3.0, 3.6)
    storage_levels: tuple = (0, 1, 2, 3, 4, 5)
    wind_transition: np.ndarray = field(default=WIND_TRANSITION, compare=False)
    load_transition: np.ndarray = field(default=LOAD_TRANSITION, compare=False)

    def __post_init__(self):
        n = len(self.has_generator)
        if not (len(self.has_load) == len(self.abandonment_allowed) == n):
            raise ValueError("per-microgrid flags must have equal length")
        for name in ("wind_levels", "load_levels", "storage_levels"):
            levels = np.asarray(getattr(self, name), dtype=float)
            if np.any(np.diff(levels) <= 0):
                raise ValueError(f"{name} must be strictly increasing")
        if list(self.storage_levels) != list(range(self.storage_capacity + 1)):
            raise ValueError("storage levels must be 0..capacity in unit steps")
        wind = _checked_rows(self.wind_transition, "wind_transition")
        load = _checked_rows(self.load_transition, "load_transition")
        if wind.shape[0] != len(self.wind_levels) or load.shape[0] != len(self.load_levels):
            raise ValueError("transition sizes do not match level lists")
        wind.setflags(write=False)
        load.setflags(write=False)
        object.__setattr__(self, "wind_transition", wind)
        object.__setattr__(self, "load_transition", load)

    @property
    def num_microgrids(self) -> int:
        return len(self.has_generator)

    def agent_actions(self, i: int) -> list:
        """Action labels ``(c, v)``; ``c`` is the outer index."""
        vs = range(len(self.wind_levels)) if self.abandonment_allowed[i] else (0,)
        return [(c, v) for c in CHARGE_ACTIONS for v in vs]


def scenario1_spec() -> MicrogridSpec:
    return MicrogridSpec()


def scenario2_spec() -> MicrogridSpec:
    return MicrogridSpec(has_generator=(True,) * 5, has_load=(True,) * 5, abandonment_allowed=(True,) * 5)


def spec_from_dict(doc: dict) -> MicrogridSpec:
    known = {f for f in MicrogridSpec.__dataclass_fields__}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown microgrid keys: {sorted(unknown)}")
    args = {k: (tuple(v) if k not in ("wind_transition", "load_transition") and isinstance(v, list) else v)
            for k, v in doc.items()}
    return MicrogridSpec(**args)


def load_spec(path) -> MicrogridSpec:
    return spec_from_dict(json.loads(Path(path).read_text()))


def feasible_effective_action(storage_level, c, bounds=(-2, 2), capacity=5):
    """Clamp a requested discharge into ``[max(Cmin, E - Emax), min(Cmax, E)]``."""
    lo = np.maximum(bounds[0], np.asarray(storage_level) - capacity)
    hi = np.minimum(bounds[1], storage_level)
    out = np.clip(c, lo, hi)
    return out.item() if np.ndim(out) == 0 else out


def wind_stationary(spec: MicrogridSpec) -> np.ndarray:
    return stationary_distribution(spec.wind_transition)


def baseline_eta(spec: MicrogridSpec) -> float:
    """Long-run exchanged power with no storage use and no curtailment."""
    wind = float(wind_stationary(spec) @ np.asarray(spec.wind_levels))
    load = float(stationary_distribution(spec.load_transition) @ np.asarray(spec.load_levels))
    return sum(wind * g - load * l for g, l in zip(spec.has_generator, spec.has_load))


def build_scenario1(beta: float, spec: MicrogridSpec = None) -> TsgModel:
    """Exact model with state ``(G_1, E_1, E_2, E_3)`` (G_1 as wind index)."""
    spec = spec or scenario1_spec()
    if beta < 0:
        raise ValueError("beta must be non-negative")
    if spec.num_microgrids != 3 or any(spec.has_load) or spec.has_generator != (True, False, False):
        raise ValueError("scenario 1 needs three storage microgrids with wind only at the first")
    n_g = len(spec.wind_levels)
    n_e = spec.storage_capacity + 1
    g, e1, e2, e3 = (x.ravel() for x in np.meshgrid(np.arange(n_g), np.arange(n_e), np.arange(n_e),
                                                   np.arange(n_e), indexing="ij"))
    storage = (e1, e2, e3)
    acts = [spec.agent_actions(i) for i in range(3)]
    sizes = tuple(len(a) for a in acts)
    grids = np.meshgrid(*[np.arange(n) for n in sizes], indexing="ij")
    joint = [x.ravel() for x in grids]
    wind = np.asarray(spec.wind_levels)[g]
    reward = np.repeat(wind[:, None], len(joint[0]), axis=1)
    next_e = []
    for i in range(3):
        c_req = np.array([a[0] for a in acts[i]])[joint[i]]
        v_req = np.array([a[1] for a in acts[i]])[joint[i]]
        c_eff = feasible_effective_action(storage[i][:, None], c_req[None, :], spec.charge_bounds,
                                          spec.storage_capacity)
        reward = reward + c_eff
        if spec.has_generator[i]:
            reward = reward - np.minimum(v_req[None, :], wind[:, None])
        next_e.append(storage[i][:, None] - c_eff)
    base = ((next_e[0]) * n_e + next_e[1]) * n_e + next_e[2]
    next_states = (np.arange(n_g)[None, None, :] * n_e**3 + base[:, :, None])
    next_probs = np.broadcast_to(spec.wind_transition[g][:, None, :], next_states.shape)
    labels = tuple(zip(g.tolist(), e1.tolist(), e2.tolist(), e3.tolist()))
    return TsgModel(sizes, next_states, next_probs, reward, beta, labels, tuple(tuple(a) for a in acts))


def scenario1_state_index(g: int, e1: int, e2: int, e3: int, n_e: int = 6) -> int:
    return ((g * n_e + e1) * n_e + e2) * n_e + e3


class SampledEnv:
    """Sampling-only microgrid system; state is an ``(M, 3)`` integer array of
    (wind index, load index, storage level) rows."""

    def __init__(self, spec: MicrogridSpec, beta: float = 0.0, seed=0):
        self.spec = spec
        self.beta = float(beta)
        self.actions = [np.array(spec.agent_actions(i)) for i in range(spec.num_microgrids)]
        self.action_sizes = tuple(len(a) for a in self.actions)
        self._wind_cdf = np.cumsum(spec.wind_transition, axis=1)
        self._load_cdf = np.cumsum(spec.load_transition, axis=1)
        self._wind = np.asarray(spec.wind_levels)
        self._load = np.asarray(spec.load_levels)
        self._gen = np.asarray(spec.has_generator, dtype=float)
        self._has_load = np.asarray(spec.has_load, dtype=float)
        self.reset(seed)

    def reset(self, seed=None, state=None):
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        m = self.spec.num_microgrids
        self.state = np.zeros((m, 3), dtype=np.int64) if state is None else np.array(state, dtype=np.int64)
        return self.state.copy()

    def step(self, joint_action):
        """``joint_action`` holds one action index per agent."""
        s = self.state
        act = np.array([self.actions[i][a] for i, a in enumerate(joint_action)])
        c_eff = feasible_effective_action(s[:, 2], act[:, 0], self.spec.charge_bounds,
                                          self.spec.storage_capacity)
        gen = self._gen * self._wind[s[:, 0]]
        v_eff = np.minimum(act[:, 1], gen)
        reward = float(np.sum(gen - self._has_load * self._load[s[:, 1]] + c_eff - v_eff))
        m = s.shape[0]
        u = self.rng.random((m, 2))
        g_next = (u[:, 0:1] > self._wind_cdf[s[:, 0]]).sum(axis=1)
        l_next = (u[:, 1:2] > self._load_cdf[s[:, 1]]).sum(axis=1)
        top = len(self._wind) - 1
        self.state = np.stack([np.minimum(g_next, top), np.minimum(l_next, len(self._load) - 1),
                               s[:, 2] - c_eff], axis=1).astype(np.int64)
        return self.state.copy(), reward

    def features(self, state=None) -> np.ndarray:
        """Active one-hot feature indices per component chain, plus bias."""
        s = self.state if state is None else state
        n_g, n_l = len(self._wind), len(self._load)
        width = n_g + n_l + self.spec.storage_capacity + 1
        base = np.arange(s.shape[0]) * width
        idx = np.concatenate([base + s[:, 0], base + n_g + s[:, 1], base + n_g + n_l + s[:, 2]])
        return np.append(idx, s.shape[0] * width)

    @property
    def num_features(self) -> int:
        width = len(self._wind) + len(self._load) + self.spec.storage_capacity + 1
        return self.spec.num_microgrids * width + 1


def build_scenario2_sampler(beta: float, seed=0, spec: MicrogridSpec = None) -> SampledEnv:
    if beta < 0:
        raise ValueError("beta must be non-negative")
    return SampledEnv(spec or scenario2_spec(), beta, seed)


def reward_bound(spec: MicrogridSpec) -> float:
    """``sum_i (max G + max |c| + max L)``."""
    c = max(abs(b) for b in spec.charge_bounds)
    return sum(max(spec.wind_levels) * gflag + c + max(spec.load_levels) * lflag
               for gflag, lflag in zip(spec.has_generator, spec.has_load))


def with_transitions(spec: MicrogridSpec, wind=None, load=None) -> MicrogridSpec:
    return replace(spec, wind_transition=spec.wind_transition if wind is None else wind,
                   load_transition=spec.load_transition if load is None else load)
