"""Sequential mean-variance multi-agent policy iteration with saddle escape.

Each outer sweep draws a random agent order; every agent in turn replaces its
deterministic policy by a per-state best response to the exact advantage of
the current joint policy (marginalised over the other agents).  Converged
points are then classified by their zero-derivative deviations.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .chain_analytics import PolicyEval, evaluate, fundamental_matrix
from .errors import NonErgodicChainError, PreconditionError
from .game_model import JointPolicy, TsgModel
from .tolerances import DEFAULT, Tolerances

WITNESS_CAP = 10**4
TRACE_COLUMNS = ("outer", "inner", "agent", "eta", "zeta", "j", "changed_states")

STRICT = "strict_local_ne"
NONSTRICT = "local_ne_nonstrict"
SADDLE = "saddle_escapable"
BOUNDARY = "unclassified_boundary"


@dataclass
class SweepTrace:
    iterations: list = field(default_factory=list)
    permutations: list = field(default_factory=list)
    converged: bool = False
    final_policy: JointPolicy = None
    # index into ``iterations`` where each (re)started run begins
    restarts: list = field(default_factory=list)

    def j_values(self) -> np.ndarray:
        return np.array([r["j"] for r in self.iterations])

    def is_monotone(self, slack: float = DEFAULT.monotone_slack) -> bool:
        j = self.j_values()
        return bool(np.all(np.diff(j) >= -slack))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in self.iterations:
            w.writerow([r["outer"], r["inner"], r["agent"], repr(r["eta"]), repr(r["zeta"]),
                        repr(r["j"]), r["changed_states"]])
        return buf.getvalue()


@dataclass
class StationaryReport:
    """Witnesses are ``(agent, per-state actions)`` pairs; see :meth:`witness_policy`."""

    policy: JointPolicy
    classification: str
    zero_derivative_witnesses: list
    eta_mismatch_witnesses: list
    pruned_set_size: int
    truncated: bool = False
    eta: float = float("nan")
    j_value: float = float("nan")
    # witnesses whose deviation chain is not ergodic; skipped
    non_ergodic_witnesses: int = 0

    def witness_policy(self, witness) -> JointPolicy:
        """Joint policy of an ``(agent, actions)`` witness."""
        agent, alt = witness
        table = np.zeros_like(self.policy.per_agent[agent])
        table[np.arange(len(alt)), alt] = 1.0
        return self.policy.replace_agent(agent, table)

    def summary(self) -> dict:
        return {
            "classification": self.classification,
            "zero_derivative_witnesses": len(self.zero_derivative_witnesses),
            "eta_mismatch_witnesses": len(self.eta_mismatch_witnesses),
            # exact counts overflow doubles on large models
            "pruned_set_size": self.pruned_set_size if self.pruned_set_size < 2**53 else None,
            "pruned_set_size_log10": math.log10(self.pruned_set_size) if self.pruned_set_size else 0.0,
            "truncated": self.truncated,
            "eta": self.eta,
            "j": self.j_value,
            "non_ergodic_witnesses": self.non_ergodic_witnesses,
        }


def agent_expected_advantage(ev: PolicyEval, policy: JointPolicy, agent: int) -> np.ndarray:
    """``E_{a_-i ~ mu_-i}[A_f(s, a_i, a_-i)]`` as an ``(S, |A_i|)`` table."""
    sizes = policy.action_sizes
    adv = ev.advantage.reshape((ev.advantage.shape[0],) + sizes)
    weighted = adv * policy.others_table(agent)
    axes = tuple(1 + j for j in range(len(sizes)) if j != agent)
    return weighted.sum(axis=axes)


def best_response_update(model: TsgModel, current: JointPolicy, agent: int, ev: PolicyEval,
                         tie_rule: str = "keep_current", tol: Tolerances = DEFAULT) -> np.ndarray:
    """Deterministic per-state best response of ``agent``; returns ``(S, |A_i|)``."""
    if tie_rule not in ("keep_current", "lowest_index"):
        raise ValueError(f"unknown tie rule {tie_rule!r}")
    g = agent_expected_advantage(ev, current, agent)
    s = np.arange(g.shape[0])
    cur = current.per_agent[agent].argmax(axis=1)
    best = g.max(axis=1)
    lowest = np.argmax(g >= best[:, None] - tol.switch_margin, axis=1)
    if tie_rule == "keep_current":
        switch = best > g[s, cur] + tol.switch_margin
        chosen = np.where(switch, lowest, cur)
    else:
        chosen = lowest
    out = np.zeros_like(g)
    out[s, chosen] = 1.0
    return out


def _record(trace, outer, inner, agent, ev, changed):
    trace.iterations.append({"outer": outer, "inner": inner, "agent": agent, "eta": ev.eta,
                             "zeta": ev.zeta, "j": ev.j_value, "changed_states": int(changed)})


def run_mv_mapi(model: TsgModel, initial: JointPolicy, seed=0, max_outer: int = 100,
                tol: Tolerances = DEFAULT, tie_rule: str = "keep_current",
                rng: np.random.Generator = None, trace: SweepTrace = None) -> SweepTrace:
    """Run sequential policy iteration from a deterministic ``initial`` policy.

    ``rng`` overrides ``seed`` so restarts can continue one stream; passing
    ``trace`` appends to an existing trace.
    """
    if not initial.is_deterministic:
        raise PreconditionError("policy iteration starts from a deterministic policy")
    rng = rng if rng is not None else np.random.default_rng(seed)
    trace = trace if trace is not None else SweepTrace()
    trace.restarts.append(len(trace.iterations))
    trace.converged = False
    policy = initial
    ev = evaluate(model, policy, tol)
    _record(trace, 0, 0, -1, ev, 0)
    for k in range(1, max_outer + 1):
        order = [int(i) for i in rng.permutation(model.num_agents)]
        trace.permutations.append(order)
        sweep_changes = 0
        for h, agent in enumerate(order, start=1):
            table = best_response_update(model, policy, agent, ev, tie_rule, tol)
            changed = int(np.count_nonzero(table.argmax(1) != policy.per_agent[agent].argmax(1)))
            if changed:
                policy = policy.replace_agent(agent, table)
                ev = evaluate(model, policy, tol)
            sweep_changes += changed
            _record(trace, k, h, agent, ev, changed)
        if sweep_changes == 0:
            trace.converged = True
            break
    trace.final_policy = policy
    return trace


def check_first_order_stationary(model: TsgModel, policy: JointPolicy, tol: Tolerances = DEFAULT,
                                 ev: PolicyEval = None) -> tuple[bool, float]:
    """Largest unilateral single-action expected advantage; stationary iff <= tol."""
    ev = ev if ev is not None else evaluate(model, policy, tol)
    worst = max(float(agent_expected_advantage(ev, policy, i).max()) for i in range(policy.num_agents))
    return worst <= tol.stationarity, worst


def _behaviour_key(model: TsgModel, state: int, joint: int) -> tuple:
    """Reward and merged next-state distribution of one (state, joint action)."""
    nxt = model.next_states[state, joint]
    probs = model.next_probs[state, joint]
    order = np.argsort(nxt, kind="stable")
    targets, start = np.unique(nxt[order], return_index=True)
    mass = np.add.reduceat(probs[order], start)
    keep = mass > 0
    return float(model.reward[state, joint]), tuple(targets[keep].tolist()), tuple(mass[keep].tolist())


def _tied_alternatives(model: TsgModel, actions: np.ndarray, agent: int, g, cap: int, tol: Tolerances):
    """Zero-derivative deviations of ``agent`` from the deterministic point ``actions``.

    Tied actions whose (reward, transition) row equals that of another tied
    action, with the other agents held fixed, are behaviourally identical, so
    only one representative per class is enumerated.  Returns
    ``(alternatives, truncated, raw_count, copy)``: ``raw_count`` is the size
    of the full set before collapsing and ``copy`` is a one-state switch to a
    copy of the current action (same chain, same ``J``) or ``None``.
    """
    current = actions[agent]
    tied, raw, copy = [], 1, None
    for s, (row, c) in enumerate(zip(g, current)):
        cand = [int(c)] + [int(a) for a in np.flatnonzero(np.abs(row) <= tol.zero_derivative) if a != c]
        raw *= len(cand)
        if len(cand) == 1:
            tied.append(cand)
            continue
        acts = actions[:, s].copy()
        seen, reps = set(), []
        for a in cand:
            acts[agent] = a
            key = _behaviour_key(model, s, model.encode(acts))
            if not seen:
                own = key  # cand[0] is the current action
            if key in seen:
                if copy is None and key == own:
                    copy = current.copy()
                    copy[s] = a
                continue
            seen.add(key)
            reps.append(a)
        tied.append(reps)
    found, truncated = [], False
    combos = itertools.product(*tied)
    next(combos)  # all-current
    for combo in combos:
        if len(found) >= cap:
            truncated = True
            break
        found.append(np.array(combo, dtype=np.int64))
    return found, truncated, raw - 1, copy


class _DeviationEvaluator:
    """``(eta, zeta, J)`` of deterministic single-agent deviations from one point.

    A deviation rewriting ``k`` chain rows ``R`` satisfies
    ``pi' = pi + pi'_R E_R Z`` with ``E = P' - P`` and ``Z`` the fundamental
    matrix, so only a ``k x k`` system is solved per witness.
    """

    def __init__(self, model: TsgModel, policy: JointPolicy, ev: PolicyEval, tol: Tolerances):
        self.model, self.tol, self.ev = model, tol, ev
        self.actions = policy.actions()
        n = model.num_states
        self.joint = np.ravel_multi_index(tuple(self.actions), model.action_sizes)
        self.state_reward = model.reward[np.arange(n), self.joint]
        self.max_rank = max(8, n // 8)
        self._z = None

    @property
    def z(self):
        if self._z is None:
            self._z = fundamental_matrix(self.ev.chain, self.ev.stationary, self.tol)
        return self._z

    def __call__(self, agent: int, alt: np.ndarray) -> tuple:
        rows = np.flatnonzero(alt != self.actions[agent])
        model, ev = self.model, self.ev
        if len(rows) == 0:
            return ev.eta, ev.zeta, ev.j_value
        acts = self.actions.copy()
        acts[agent, rows] = alt[rows]
        if len(rows) > self.max_rank:
            out = evaluate(model, JointPolicy.deterministic(acts, model.action_sizes), self.tol)
            return out.eta, out.zeta, out.j_value
        n, k = model.num_states, len(rows)
        joint = np.ravel_multi_index(tuple(acts[:, rows]), model.action_sizes)
        e = -ev.chain[rows]
        np.add.at(e, (np.repeat(np.arange(k), model.next_states.shape[2]), model.next_states[rows, joint].ravel()),
                  model.next_probs[rows, joint].ravel())
        cols = np.flatnonzero(np.any(e != 0.0, axis=0))
        ez = e[:, cols] @ self.z[cols]
        m = np.eye(k) - ez[:, rows]
        if np.linalg.cond(m) * self.tol.rcond > 1.0:
            raise NonErgodicChainError("deviation chain is not ergodic")
        x = np.linalg.solve(m.T, ev.stationary[rows])
        pi = ev.stationary + x @ ez
        if pi.min() < -1e-10:
            raise NonErgodicChainError("deviation produced an invalid stationary vector")
        r = self.state_reward.copy()
        r[rows] = model.reward[rows, joint]
        eta = float(pi @ r)
        zeta = float(pi @ (r - eta) ** 2)
        return eta, zeta, eta - model.beta * zeta


def classify_stationary_point(model: TsgModel, policy: JointPolicy, tol: Tolerances = DEFAULT,
                              witness_cap: int = WITNESS_CAP) -> StationaryReport:
    """Classify a first-order stationary deterministic point by its
    zero-derivative deviations and whether they move the mean."""
    ev = evaluate(model, policy, tol)
    ok, worst = check_first_order_stationary(model, policy, tol, ev)
    if not ok:
        raise PreconditionError(f"policy is not first-order stationary (violation {worst:.3g})")
    if not policy.is_deterministic:
        raise PreconditionError("classification expects a deterministic policy")
    actions = policy.actions()
    witnesses, mismatches, improving = [], [], []
    truncated = False
    non_ergodic = 0
    deviation = _DeviationEvaluator(model, policy, ev, tol)
    pruned = 0
    for i in range(policy.num_agents):
        g = agent_expected_advantage(ev, policy, i)
        alts, cut, raw, copy = _tied_alternatives(model, actions, i, g, witness_cap, tol)
        truncated |= cut
        pruned += raw
        if copy is not None:
            # stands for every copy of the current action: same chain, same J
            witnesses.append((i, copy))
        for alt in alts:
            witnesses.append((i, alt))
            try:
                eta_alt, _, j_alt = deviation(i, alt)
            except NonErgodicChainError:
                non_ergodic += 1
                continue
            if abs(eta_alt - ev.eta) > tol.eta_equal:
                mismatches.append((i, alt))
                if j_alt > ev.j_value + 1e-12:
                    improving.append((j_alt, i, alt))
    if not witnesses:
        label = STRICT
    elif mismatches:
        label = SADDLE if improving else BOUNDARY
    elif truncated or non_ergodic:
        label = BOUNDARY
    else:
        label = NONSTRICT
    if improving:
        # strongest escape first; stable on ties
        improving.sort(key=lambda t: -t[0])
        mismatches = [(i, c) for _, i, c in improving] + [
            w for w in mismatches if all(w[1] is not c for _, _, c in improving)]
    return StationaryReport(policy, label, witnesses, mismatches, pruned, truncated,
                            ev.eta, ev.j_value, non_ergodic)


def run_modified_mv_mapi(model: TsgModel, initial: JointPolicy, seed=0, max_restarts: int = 20,
                         max_outer: int = 100, tol: Tolerances = DEFAULT,
                         witness_cap: int = WITNESS_CAP) -> tuple[SweepTrace, StationaryReport]:
    """Alternate policy iteration with classification, restarting from an
    improving mean-changing witness whenever one exists."""
    rng = np.random.default_rng(seed)
    trace = SweepTrace()
    start = initial
    report = None
    for _ in range(max_restarts + 1):
        run_mv_mapi(model, start, max_outer=max_outer, tol=tol, rng=rng, trace=trace)
        if not trace.converged:
            break
        report = classify_stationary_point(model, trace.final_policy, tol, witness_cap)
        if report.classification != SADDLE:
            break
        start = report.witness_policy(report.eta_mismatch_witnesses[0])
    if report is None:
        report = StationaryReport(trace.final_policy, BOUNDARY, [], [], 0, False)
    return trace, report


def restart_j_values(trace: SweepTrace) -> list:
    """Converged ``J`` at the end of each run inside a modified trace."""
    ends = trace.restarts[1:] + [len(trace.iterations)]
    return [trace.iterations[e - 1]["j"] for e in ends]
