"""Command-line experiment runner.

Every run writes into ``<out>/<command>/<run-name>/`` and a top-level
``summary.json``.  Files contain no timestamps or host data, so repeating a
command with the same config and seeds reproduces them byte for byte.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import env_microgrid as mg
from .chain_analytics import (evaluate, kemeny_constant, multi_agent_advantage, performance_derivative,
                              performance_difference_residual, poisson_residual, sequential_lower_bound,
                              trust_region_bound)
from .errors import CapacityError, NonErgodicChainError, PreconditionError
from .game_model import JointPolicy, TsgModel, enumerate_deterministic_policies, load_model, random_policy, \
    random_toy_game
from .mv_mapi import (NONSTRICT, STRICT, check_first_order_stationary, classify_stationary_point,
                      restart_j_values, run_modified_mv_mapi, run_mv_mapi)
from .mv_matrpo import TrainConfig, train
from .mv_matrpo.batch import importance_weighted_advantage
from .mv_matrpo.train import config_dict, learner_summary
from .oracle import exhaustive_search, finite_difference_derivative, verify_local_ne

log = logging.getLogger("mvtsg")

DEFAULT_BETAS = (0.0, 0.1, 0.5, 1.0, 2.0)
DEFAULT_SEEDS = (1, 2, 3, 4, 5, 6)
COMMANDS = ("mapi", "mapi-modified", "matrpo", "verify", "enumerate")
CONFIG_KEYS = {"command", "env", "beta", "seeds", "out", "jobs", "mapi", "matrpo", "microgrid", "verify",
               "enumerate"}


@dataclass
class ExperimentConfig:
    command: str
    env: str = "toy:7:2:2:2"
    beta_list: list = field(default_factory=lambda: list(DEFAULT_BETAS))
    seeds: list = field(default_factory=lambda: list(DEFAULT_SEEDS))
    out: str = "runs"
    jobs: int = 1
    mapi: dict = field(default_factory=dict)
    matrpo: dict = field(default_factory=dict)
    microgrid: dict = field(default_factory=dict)
    verify: dict = field(default_factory=dict)
    enumerate: dict = field(default_factory=dict)
    all_starts: bool = False

    def validate(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if not self.beta_list:
            raise ValueError("beta list must be nonempty")
        if not self.seeds:
            raise ValueError("seed list must be nonempty")
        if any(b < 0 for b in self.beta_list):
            raise ValueError("beta must be non-negative")


# ---------------------------------------------------------------- parsing


def parse_seeds(text: str) -> list:
    """``"1,3,5..7"`` -> ``[1, 3, 5, 6, 7]``."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..")
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ValueError(f"empty seed range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    return out


def parse_betas(text: str) -> list:
    return [float(x) for x in str(text).split(",") if x.strip()]


def parse_env(text: str, microgrid: dict = None):
    """Return ``(kind, builder)`` where ``builder(beta)`` makes the environment."""
    kind, _, rest = text.partition(":")
    spec_doc = microgrid or {}
    if kind == "scenario1":
        spec = mg.spec_from_dict(spec_doc) if spec_doc else mg.scenario1_spec()
        return "exact", lambda beta: mg.build_scenario1(beta, spec)
    if kind == "scenario2":
        spec = mg.spec_from_dict(spec_doc) if spec_doc else mg.scenario2_spec()
        return "sampled", lambda beta: mg.build_scenario2_sampler(beta, 0, spec)
    if kind == "toy":
        parts = rest.split(":") if rest else []
        if not 1 <= len(parts) <= 4:
            raise ValueError("toy environment is toy:seed[:agents[:states[:actions]]]")
        nums = [int(p) for p in parts] + [2] * (4 - len(parts))
        seed, agents, states, actions = nums
        return "exact", lambda beta: random_toy_game(seed, agents, states, actions, beta)
    if kind == "file":
        if not rest:
            raise ValueError("file environment needs a path")
        model = load_model(rest)
        return "exact", lambda beta: model.with_beta(beta)
    raise ValueError(f"unknown environment {text!r}")


def _is_scenario1(env: str) -> bool:
    return env.split(":")[0] == "scenario1"


# ---------------------------------------------------------------- output helpers


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return None if math.isnan(x) or math.isinf(x) else x
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    return x


def write_json(path: Path, doc) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n")


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _run_name(beta, seed) -> str:
    return f"beta={beta!r}_seed={seed}"


def _pool_map(fn, jobs, n):
    if n and n > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


def _table(rows, columns) -> str:
    head = " ".join(f"{c:>14}" for c in columns)
    lines = [head]
    for r in rows:
        cells = []
        for c in columns:
            v = r.get(c)
            cells.append(f"{v:>14.6g}" if isinstance(v, float) else f"{str(v):>14}")
        lines.append(" ".join(cells))
    return "\n".join(lines)


# ---------------------------------------------------------------- mapi


def _initial_policy(model: TsgModel, seed: int) -> JointPolicy:
    return random_policy(model, np.random.default_rng([seed, 0]), deterministic=True)


def _mapi_job(job):
    cfg, beta, seed, modified = job
    _, build = parse_env(cfg.env, cfg.microgrid)
    model = build(beta)
    opts = dict(cfg.mapi)
    max_outer = int(opts.get("max_outer", 100))
    tie_rule = opts.get("tie_rule", "keep_current")
    run_dir = Path(cfg.out) / cfg.command / _run_name(beta, seed)
    row = {"beta": beta, "seed": seed}
    initial = _initial_policy(model, seed)
    try:
        if modified:
            trace, report = run_modified_mv_mapi(model, initial, seed, int(opts.get("max_restarts", 20)),
                                                 max_outer)
        else:
            trace = run_mv_mapi(model, initial, seed, max_outer, tie_rule=tie_rule)
            report = None
            if trace.converged:
                report = classify_stationary_point(model, trace.final_policy)
    except (NonErgodicChainError, PreconditionError, CapacityError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
        write_json(run_dir / "report.json", row)
        return row
    write_text(run_dir / "trace.csv", trace.to_csv())
    last = trace.iterations[-1]
    stationary, worst = check_first_order_stationary(model, trace.final_policy)
    row.update(eta=last["eta"], zeta=last["zeta"], j=last["j"], converged=trace.converged,
               monotone=trace.is_monotone(), stationary=stationary, max_expected_advantage=worst,
               sweeps=len(trace.permutations), permutations=trace.permutations,
               final_actions=trace.final_policy.actions().tolist())
    if modified:
        row["restart_j"] = restart_j_values(trace)
    if report is not None:
        row["classification"] = report.classification
        row["report"] = report.summary()
    write_json(run_dir / "report.json", row)
    return row


def _all_starts(cfg: ExperimentConfig) -> dict:
    """Every deterministic start per (beta, seed), compared to enumeration."""
    _, build = parse_env(cfg.env, cfg.microgrid)
    cap = int(cfg.enumerate.get("cap", 10**4))
    out = []
    for beta in cfg.beta_list:
        model = build(beta)
        oracle = exhaustive_search(model, cap)
        best = -math.inf
        lines = ["start,seed,j,converged,stationary"]
        for k, start in enumerate(enumerate_deterministic_policies(model, cap)):
            for seed in cfg.seeds:
                trace = run_mv_mapi(model, start, seed)
                ok, _ = check_first_order_stationary(model, trace.final_policy)
                j = trace.iterations[-1]["j"]
                best = max(best, j)
                lines.append(f"{k},{seed},{j!r},{int(trace.converged)},{int(ok)}")
        write_text(Path(cfg.out) / cfg.command / f"all_starts_beta={beta!r}.csv", "\n".join(lines) + "\n")
        out.append({"beta": beta, "best_j": best, "global_max_j": oracle.global_max_j,
                    "gap": oracle.global_max_j - best, "agrees": bool(best >= oracle.global_max_j - 1e-9)})
    return {"all_starts": out}


def cmd_mapi(cfg: ExperimentConfig, modified: bool = False) -> int:
    jobs = [(cfg, b, s, modified) for b in cfg.beta_list for s in cfg.seeds]
    rows = _pool_map(_mapi_job, jobs, cfg.jobs)
    summary = {"command": cfg.command, "env": cfg.env, "runs": rows}
    if cfg.all_starts:
        summary.update(_all_starts(cfg))
    write_json(Path(cfg.out) / cfg.command / "summary.json", summary)
    print(_table([r for r in rows if "error" not in r], ["beta", "seed", "eta", "zeta", "j", "converged"]))
    for r in rows:
        if "error" in r:
            print(f"run beta={r['beta']} seed={r['seed']} failed: {r['error']}", file=sys.stderr)
    for a in summary.get("all_starts", []):
        print(f"beta={a['beta']}: best start J={a['best_j']:.10g} global max J={a['global_max_j']:.10g} "
              f"{'agrees' if a['agrees'] else 'DISAGREES'}")
    return 0


# ---------------------------------------------------------------- matrpo


def _train_config(cfg: ExperimentConfig, seed: int) -> TrainConfig:
    doc = dict(cfg.matrpo)
    if "features" not in doc and _is_scenario1(cfg.env):
        # tabular logits over 1296 states learn too slowly at desk scale
        doc["features"] = "components"
    if "eval_every" not in doc and _is_scenario1(cfg.env):
        # a full 1296-state evaluation each iteration would dominate the run
        doc["eval_every"] = 10
    doc["seed"] = seed
    doc.pop("beta", None)
    return TrainConfig.from_dict(doc)


def _matrpo_job(job):
    cfg, beta, seed = job
    kind, build = parse_env(cfg.env, cfg.microgrid)
    env = build(beta)
    tc = _train_config(cfg, seed)
    run_dir = Path(cfg.out) / cfg.command / _run_name(beta, seed)
    row = {"beta": beta, "seed": seed}
    try:
        state, trace = train(env, tc, beta)
    except (NonErgodicChainError, ValueError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
        write_json(run_dir / "summary.json", row)
        return row
    write_text(run_dir / "trace.csv", trace.to_csv())
    row.update(learner_summary(state, trace))
    row["finite"] = bool(all(np.isfinite(trace.column(c)).all() for c in ("eta_hat", "zeta_hat", "j_hat")))
    row["config"] = config_dict(tc)
    write_json(run_dir / "summary.json", row)
    return row


def _aggregate(rows, key):
    vals = np.array([r[key] for r in rows if r.get(key) is not None], dtype=float)
    if len(vals) == 0:
        return None
    se = float(vals.std(ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0
    return {"mean": float(vals.mean()), "std_error": se, "n": int(len(vals))}


def cmd_matrpo(cfg: ExperimentConfig) -> int:
    jobs = [(cfg, b, s) for b in cfg.beta_list for s in cfg.seeds]
    rows = _pool_map(_matrpo_job, jobs, cfg.jobs)
    per_beta = []
    for beta in cfg.beta_list:
        ok = [r for r in rows if r["beta"] == beta and "error" not in r]
        entry = {"beta": beta}
        for key in ("eta_exact", "zeta_exact", "j_exact", "eta_hat", "zeta_hat", "j_hat"):
            agg = _aggregate(ok, key)
            if agg is not None:
                entry[key] = agg
        per_beta.append(entry)
    write_json(Path(cfg.out) / cfg.command / "summary.json",
               {"command": cfg.command, "env": cfg.env, "runs": [{k: v for k, v in r.items() if k != "config"}
                                                                 for r in rows], "per_beta": per_beta})
    print(_table([r for r in rows if "error" not in r], ["beta", "seed", "eta_hat", "zeta_hat", "j_hat"]))
    for r in rows:
        if "error" in r:
            print(f"run beta={r['beta']} seed={r['seed']} failed: {r['error']}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------- enumerate


def cmd_enumerate(cfg: ExperimentConfig) -> int:
    kind, build = parse_env(cfg.env, cfg.microgrid)
    if kind != "exact":
        print("enumerate needs an exact environment", file=sys.stderr)
        return 2
    cap = int(cfg.enumerate.get("cap", 10**7))
    rows = []
    for beta in cfg.beta_list:
        model = build(beta)
        try:
            res = exhaustive_search(model, cap, keep_table=True)
        except CapacityError as exc:
            print(f"beta={beta}: {exc}", file=sys.stderr)
            return 2
        run_dir = Path(cfg.out) / cfg.command / f"beta={beta!r}"
        write_text(run_dir / "table.csv", res.table_csv())
        row = {"beta": beta, "global_max_j": res.global_max_j,
               "global_argmax": res.global_argmax.actions().tolist(), "num_ne": len(res.ne_set),
               "kemeny_star": res.kemeny_star}
        write_json(run_dir / "summary.json", row)
        rows.append(row)
    write_json(Path(cfg.out) / cfg.command / "summary.json", {"command": cfg.command, "env": cfg.env, "runs": rows})
    print(_table(rows, ["beta", "global_max_j", "num_ne", "kemeny_star"]))
    return 0


# ---------------------------------------------------------------- verify


def _verify_games(seed: int, n: int):
    rng = np.random.default_rng([seed, 17])
    for g in range(n):
        states = int(rng.integers(2, 4))
        beta = float(rng.choice([0.0, 0.5, 1.0, 2.0]))
        yield random_toy_game(int(rng.integers(2**31)), 2, states, 2, beta), np.random.default_rng([seed, g])


def _suite_perf_difference(games, fault):
    sign = -1.0 if fault == "mean-shift-sign" else 1.0
    worst, fails = 0.0, 0
    for model, rng in games:
        for _ in range(5):
            r = performance_difference_residual(model, random_policy(model, rng), random_policy(model, rng),
                                                mean_shift_sign=sign)
            worst = max(worst, r)
            fails += r >= 1e-8
    return fails, {"max_residual": worst}


def _suite_derivative(games, fault):
    worst, fails = 0.0, 0
    for model, rng in games:
        for _ in range(3):
            mu, d = random_policy(model, rng), random_policy(model, rng)
            exact = performance_derivative(model, mu, d)
            fd = finite_difference_derivative(model, mu, d)
            rel = abs(exact - fd) / max(abs(exact), 1e-6)
            worst = max(worst, rel)
            fails += rel >= 1e-3
    return fails, {"max_relative_error": worst}


def _suite_poisson(games, fault):
    worst, fails = 0.0, 0
    for model, rng in games:
        ev = evaluate(model, random_policy(model, rng))
        res = max(poisson_residual(model, ev),
                  float(np.abs((ev.policy_table * ev.advantage).sum(axis=1)).max()),
                  float(np.abs(ev.stationary @ ev.chain - ev.stationary).max()))
        worst = max(worst, res)
        fails += res >= 1e-8
    return fails, {"max_residual": worst}


def _suite_trust_bound(games, fault):
    fails, n = 0, 0
    for model, rng in games:
        kstar = exhaustive_search(model).kemeny_star
        for _ in range(20):
            mu, mu2 = random_policy(model, rng), random_policy(model, rng)
            k = max(kstar, kemeny_constant(evaluate(model, mu).chain), kemeny_constant(evaluate(model, mu2).chain))
            rep = trust_region_bound(model, mu, mu2, k)
            n += 1
            fails += not rep.holds
    return fails, {"pairs": n}


def _suite_sequential_bound(games, fault):
    fails, n = 0, 0
    for model, rng in games:
        kstar = exhaustive_search(model).kemeny_star
        for _ in range(10):
            mu, mu2 = random_policy(model, rng), random_policy(model, rng)
            k = max(kstar, kemeny_constant(evaluate(model, mu).chain), kemeny_constant(evaluate(model, mu2).chain))
            order = [int(i) for i in rng.permutation(model.num_agents)]
            out = sequential_lower_bound(model, mu, mu2, order, k)
            n += 1
            fails += out["j_new"] < out["lower_bound"] - 1e-8
    return fails, {"pairs": n}


def _suite_importance_weights(games, fault):
    worst, fails = 0.0, 0
    for model, rng in games:
        mu, prefix, cand = random_policy(model, rng), random_policy(model, rng), random_policy(model, rng)
        ev = evaluate(model, mu)
        order = [int(i) for i in rng.permutation(model.num_agents)]
        for h in range(1, model.num_agents + 1):
            agent = order[h - 1]
            gap = float(np.abs(multi_agent_advantage(ev, mu, order, h, prefix, cand.per_agent[agent])
                               - importance_weighted_advantage(ev, mu, prefix, cand.per_agent[agent], order, h)).max())
            worst = max(worst, gap)
            fails += gap >= 1e-10
    return fails, {"max_gap": worst}


def _suite_classification(games, fault):
    fails, counts = 0, {}
    for model, rng in games:
        trace = run_mv_mapi(model, random_policy(model, rng, deterministic=True), int(rng.integers(2**31)))
        ok, _ = check_first_order_stationary(model, trace.final_policy)
        if not (trace.converged and ok and trace.is_monotone()):
            fails += 1
            continue
        report = classify_stationary_point(model, trace.final_policy)
        counts[report.classification] = counts.get(report.classification, 0) + 1
        if report.classification in (STRICT, NONSTRICT) and not verify_local_ne(model, trace.final_policy):
            fails += 1
    return fails, {"labels": dict(sorted(counts.items()))}


SUITES = {
    "perf_difference": _suite_perf_difference,
    "derivative": _suite_derivative,
    "poisson": _suite_poisson,
    "trust_bound": _suite_trust_bound,
    "sequential_bound": _suite_sequential_bound,
    "importance_weights": _suite_importance_weights,
    "classification": _suite_classification,
}


def run_verify(games: int, seed: int, fault: str = None, suites=None) -> dict:
    out = {}
    for name in suites or SUITES:
        fails, extra = SUITES[name](_verify_games(seed, games), fault)
        out[name] = {"failures": int(fails), "passed": fails == 0, **extra}
    return out


def cmd_verify(cfg: ExperimentConfig) -> int:
    games = int(cfg.verify.get("games", 20))
    fault = cfg.verify.get("inject_fault")
    results = {}
    for seed in cfg.seeds:
        results[str(seed)] = run_verify(games, seed, fault, cfg.verify.get("suites"))
    any_fail = any(not r["passed"] for per in results.values() for r in per.values())
    write_json(Path(cfg.out) / cfg.command / "report.json",
               {"command": cfg.command, "games": games, "inject_fault": fault, "results": results})
    for seed, per in results.items():
        for name, r in per.items():
            print(f"seed {seed} {name:<15} {'PASS' if r['passed'] else 'FAIL'} failures={r['failures']}")
    return 1 if any_fail else 0


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mvtsg", description="Mean-variance team stochastic game experiments")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--env", help="scenario1 | scenario2 | toy:seed:agents:states:actions | file:path")
        s.add_argument("--beta", help="comma-separated list, e.g. 0,0.1,0.5")
        s.add_argument("--seed", help="comma-separated seeds and ranges, e.g. 1..4,9")
        s.add_argument("--out", help="output directory (default runs)")
        s.add_argument("--config", help="JSON config file")
        s.add_argument("--jobs", type=int, help="worker processes for independent runs")
        s.add_argument("-v", "--verbose", action="store_true")
        if name in ("mapi", "mapi-modified"):
            s.add_argument("--all-starts", action="store_true",
                           help="also run every deterministic start and compare with enumeration")
            s.add_argument("--max-outer", type=int)
        if name == "mapi-modified":
            s.add_argument("--max-restarts", type=int)
        if name == "matrpo":
            s.add_argument("--steps", type=int, help="total environment steps per run")
            s.add_argument("--variant", choices=("trust_region", "clip"))
            s.add_argument("--features", choices=("tabular", "components"))
        if name == "verify":
            s.add_argument("--games", type=int)
            s.add_argument("--suites", help="comma-separated subset of " + ",".join(SUITES))
            s.add_argument("--inject-fault", choices=("mean-shift-sign",),
                           help="flip the squared-mean sign in the performance-difference check")
        if name == "enumerate":
            s.add_argument("--cap", type=int)
    return p


def config_from_args(args) -> ExperimentConfig:
    doc = {}
    if args.config:
        doc = json.loads(Path(args.config).read_text())
        unknown = set(doc) - CONFIG_KEYS
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
    cfg = ExperimentConfig(command=args.command)
    cfg.env = args.env or doc.get("env", cfg.env)
    if args.beta is not None:
        cfg.beta_list = parse_betas(args.beta)
    elif "beta" in doc:
        cfg.beta_list = [float(b) for b in (doc["beta"] if isinstance(doc["beta"], list) else [doc["beta"]])]
    elif args.command in ("verify",):
        cfg.beta_list = [1.0]
    if args.seed is not None:
        cfg.seeds = parse_seeds(args.seed)
    elif "seeds" in doc:
        s = doc["seeds"]
        cfg.seeds = parse_seeds(s) if isinstance(s, str) else [int(x) for x in s]
    cfg.out = args.out or doc.get("out", cfg.out)
    cfg.jobs = args.jobs or int(doc.get("jobs", 1))
    for key in ("mapi", "matrpo", "microgrid", "verify", "enumerate"):
        setattr(cfg, key, dict(doc.get(key, {})))
    if getattr(args, "all_starts", False):
        cfg.all_starts = True
    if getattr(args, "max_outer", None):
        cfg.mapi["max_outer"] = args.max_outer
    if getattr(args, "max_restarts", None) is not None:
        cfg.mapi["max_restarts"] = args.max_restarts
    if getattr(args, "steps", None):
        cfg.matrpo["total_steps"] = args.steps
    if getattr(args, "variant", None):
        cfg.matrpo["variant"] = args.variant
    if getattr(args, "features", None):
        cfg.matrpo["features"] = args.features
    if getattr(args, "games", None):
        cfg.verify["games"] = args.games
    if getattr(args, "suites", None):
        cfg.verify["suites"] = [x for x in args.suites.split(",") if x]
        bad = set(cfg.verify["suites"]) - set(SUITES)
        if bad:
            raise ValueError(f"unknown suites: {sorted(bad)}")
    if getattr(args, "inject_fault", None):
        cfg.verify["inject_fault"] = args.inject_fault
    if getattr(args, "cap", None):
        cfg.enumerate["cap"] = args.cap
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
        # fail fast on a bad environment before any run starts
        parse_env(cfg.env, cfg.microgrid)[1](cfg.beta_list[0])
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if cfg.command == "mapi":
        return cmd_mapi(cfg)
    if cfg.command == "mapi-modified":
        return cmd_mapi(cfg, modified=True)
    if cfg.command == "matrpo":
        return cmd_matrpo(cfg)
    if cfg.command == "enumerate":
        return cmd_enumerate(cfg)
    return cmd_verify(cfg)


if __name__ == "__main__":
    sys.exit(main())
