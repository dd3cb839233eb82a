"""Experiment orchestration: seeded campaigns, metric logs, comparison
reports, plot emission, and a brute-force static oracle.

Every (algorithm, learning-rate, seed) tuple trains in its own directory
under the configured output root, writing append-only CSV metric files whose
bytes are reproducible from the tuple alone. ``compare_report`` and
``emit_plots`` consume those records; ``grid_search_oracle`` exhaustively
solves a one-slot antenna-placement/power problem for use as an independent
check on everything else.
"""

from __future__ import annotations

import concurrent.futures
import contextlib
import itertools
import json
import math
import multiprocessing
import os
import time
import zlib
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy import stats

from .agents import Transition, TrainingDiverged, make_agent
from .config import ExperimentConfig
from .env import PinchingIsacEnv, SystemConfig
from .physics import (
    AntennaLayout,
    Position3D,
    effective_gain,
    spacing_satisfied,
)

RUN_MANIFEST_VERSION = 1

TRAIN_COLUMNS = (
    "episode", "reward", "sum_rate", "mean_snr_linear", "steps",
    "energy_used_j", "snr_violations", "spacing_projections", "power_clips",
    "energy_exhausted",
)
EVAL_COLUMNS = (
    "episode", "eval_reward", "eval_sum_rate", "eval_mean_snr_linear",
)

# Final-window fraction used for "late training" summary statistics.
FINAL_WINDOW_FRACTION = 0.1

# Reference improvements reported for this system (paper-reported, not
# asserted): they are printed beside observed numbers, never tested against.
PAPER_REPORTED_IMPROVEMENTS = {
    ("merl", "td3", "sum_rate"): 20.3,
    ("merl", "ddpg", "sum_rate"): 44.4,
    ("merl", "td3", "snr"): 16.7,
}


@dataclass(frozen=True)
class RunKey:
    algorithm: str
    learning_rate: float
    seed: int

    @property
    def name(self) -> str:
        return f"{self.algorithm}_lr{self.learning_rate:g}_seed{self.seed}"


def _single_thread_blas():
    """BLAS pools lose badly to their own wake-up latency at the matrix
    sizes a batch-256 update produces (roughly 2x wall clock), and pinning
    them also makes metric bytes independent of the pool configuration."""
    try:
        from threadpoolctl import threadpool_limits
        return threadpool_limits(limits=1)
    except ImportError:
        return contextlib.nullcontext()


@dataclass(eq=False)
class RunRecord:
    key: RunKey
    run_dir: Path
    status: str
    train: dict[str, np.ndarray]
    evals: dict[str, np.ndarray]
    checkpoint_dir: Path | None
    wall_clock_s: float | None


def campaign_keys(exp: ExperimentConfig) -> list[RunKey]:
    """The (algorithm, LR, seed) grid a campaign covers. The sweep list,
    when non-empty, replaces the single learning rate."""
    rates = exp.learning_rate_sweep or (exp.learning_rate,)
    return [RunKey(algo, lr, seed)
            for algo, lr, seed in itertools.product(exp.algorithms, rates, exp.seeds)]


def _tuple_seed(key: RunKey) -> np.random.SeedSequence:
    return np.random.SeedSequence(
        [key.seed,
         zlib.crc32(key.algorithm.encode()),
         zlib.crc32(repr(key.learning_rate).encode())])


def _fmt(value) -> str:
    """Shortest exact decimal for floats so metric files are byte-stable and
    re-parse to the identical value."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


# ============================================================================
# Training / evaluation loops
# ============================================================================

def run_episode(env: PinchingIsacEnv, agent, *, train: bool) -> dict:
    """One episode; in training mode each transition feeds agent.train_step,
    in evaluation mode the agent acts deterministically and never learns."""
    env.reset()
    obs = env.flatten_state()
    budget = env.config.energy_budget_j
    totals = dict(reward=0.0, sum_rate=0.0, snr=0.0, steps=0,
                  snr_violations=0, spacing_projections=0, power_clips=0)
    exhausted = False
    while True:
        raw = agent.act(obs, explore=train)
        outcome = env.step(env.project_action(raw))
        next_obs = env.flatten_state(outcome.next_state)
        if train:
            bootstrap = 0.0 if (outcome.done
                                and outcome.constraint_report.energy_exhausted) else 1.0
            agent.train_step(Transition(obs, raw, outcome.reward, next_obs, bootstrap))
        totals["reward"] += outcome.reward
        totals["sum_rate"] += outcome.sum_rate
        if outcome.per_target_snr_linear.size:
            totals["snr"] += float(outcome.per_target_snr_linear.mean())
        totals["steps"] += 1
        report = outcome.constraint_report
        totals["snr_violations"] += int(report.snr_violation_margin_db < 0.0)
        totals["spacing_projections"] += int(report.spacing_projected)
        totals["power_clips"] += int(report.power_clipped)
        exhausted = report.energy_exhausted
        obs = next_obs
        if outcome.done:
            break
    return dict(
        reward=totals["reward"],
        sum_rate=totals["sum_rate"],
        mean_snr_linear=totals["snr"] / totals["steps"],
        steps=totals["steps"],
        energy_used_j=budget - env.state.remaining_energy_j,
        snr_violations=totals["snr_violations"],
        spacing_projections=totals["spacing_projections"],
        power_clips=totals["power_clips"],
        energy_exhausted=exhausted,
    )


def _evaluate(eval_env: PinchingIsacEnv, agent, episodes: int) -> dict:
    rewards, rates, snrs = [], [], []
    for _ in range(episodes):
        stats_ = run_episode(eval_env, agent, train=False)
        rewards.append(stats_["reward"])
        rates.append(stats_["sum_rate"])
        snrs.append(stats_["mean_snr_linear"])
    return dict(eval_reward=float(np.mean(rewards)),
                eval_sum_rate=float(np.mean(rates)),
                eval_mean_snr_linear=float(np.mean(snrs)))


def run_single(exp: ExperimentConfig, key: RunKey, *, resume: bool = True,
               log=None) -> RunRecord:
    """Train one (algorithm, LR, seed) tuple, persisting metrics
    incrementally. A completed run with a matching config hash is reused
    when ``resume`` is set: determinism makes the stored bytes equivalent to
    re-running."""
    run_dir = Path(exp.out_dir) / key.name
    manifest_path = run_dir / "manifest.json"
    if resume and manifest_path.exists():
        manifest = json.loads(manifest_path.read_text())
        if (manifest.get("status") == "completed"
                and manifest.get("config_hash") == exp.config_hash()
                and manifest.get("episodes") == exp.episodes):
            return _load_record(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    for stale in ("train.csv", "eval.csv", "manifest.json"):
        (run_dir / stale).unlink(missing_ok=True)

    env_seed, agent_seed, eval_seed = _tuple_seed(key).spawn(3)
    env = PinchingIsacEnv(exp.system, env_seed)
    eval_env = PinchingIsacEnv(exp.system, eval_seed)
    agent_cfg = replace(exp.agent, learning_rate=key.learning_rate)
    agent = make_agent(key.algorithm, env.observation_dim, env.action_dim,
                       agent_cfg, agent_seed)

    status, error = "completed", None
    started = time.perf_counter()
    with _single_thread_blas(), \
            open(run_dir / "train.csv", "w") as train_file, \
            open(run_dir / "eval.csv", "w") as eval_file:
        train_file.write(",".join(TRAIN_COLUMNS) + "\n")
        eval_file.write(",".join(EVAL_COLUMNS) + "\n")
        try:
            for episode in range(1, exp.episodes + 1):
                row = run_episode(env, agent, train=True)
                row["episode"] = episode
                train_file.write(
                    ",".join(_fmt(row[c]) for c in TRAIN_COLUMNS) + "\n")
                train_file.flush()
                if episode % exp.eval_every_episodes == 0 or episode == exp.episodes:
                    erow = _evaluate(eval_env, agent, exp.eval_episodes)
                    erow["episode"] = episode
                    eval_file.write(
                        ",".join(_fmt(erow[c]) for c in EVAL_COLUMNS) + "\n")
                    eval_file.flush()
                    if log:
                        log(f"{key.name} ep {episode}/{exp.episodes} "
                            f"eval_reward={erow['eval_reward']:.3f}")
        except (TrainingDiverged, FloatingPointError) as exc:
            status, error = "failed", str(exc)
    wall_clock = time.perf_counter() - started

    checkpoint_dir = None
    if status == "completed" and key.algorithm != "random":
        checkpoint_dir = run_dir / "checkpoint"
        agent.save(checkpoint_dir, extra_manifest={
            "config_hash": exp.config_hash(),
            "learning_rate": key.learning_rate,
            "seed": key.seed,
        })

    manifest = {
        "format_version": RUN_MANIFEST_VERSION,
        "algorithm": key.algorithm,
        "learning_rate": repr(key.learning_rate),
        "seed": key.seed,
        "episodes": exp.episodes,
        "config_hash": exp.config_hash(),
        "status": status,
        "error": error,
        "wall_clock_s": wall_clock,
        "checkpoint": str(checkpoint_dir.name) if checkpoint_dir else None,
    }
    manifest_path.write_text(json.dumps(manifest, indent=2))
    return _load_record(run_dir)


def _worker_init():
    # keep worker processes off each other's cores; takes effect because the
    # spawned interpreter has not imported numpy yet
    os.environ["OPENBLAS_NUM_THREADS"] = "1"
    os.environ["OMP_NUM_THREADS"] = "1"


def _run_single_in_worker(exp: ExperimentConfig, key: RunKey,
                          resume: bool) -> str:
    run_single(exp, key, resume=resume)
    return key.name


def run_campaign(exp: ExperimentConfig, *, resume: bool = True, log=None,
                 workers: int = 1) -> list[RunRecord]:
    """All campaign tuples; a failed run is recorded and the campaign
    continues. Tuples are independent (separate seeds, separate output
    directories), so ``workers > 1`` distributes them over processes; the
    per-run metric bytes do not depend on the worker count."""
    keys = campaign_keys(exp)
    if workers > 1:
        ctx = multiprocessing.get_context("spawn")
        with concurrent.futures.ProcessPoolExecutor(
                max_workers=workers, mp_context=ctx,
                initializer=_worker_init) as pool:
            futures = [pool.submit(_run_single_in_worker, exp, key, resume)
                       for key in keys]
            for future in concurrent.futures.as_completed(futures):
                name = future.result()
                if log:
                    log(f"{name} finished")
        return [_load_record(Path(exp.out_dir) / key.name) for key in keys]
    return [run_single(exp, key, resume=resume, log=log) for key in keys]


def _parse_csv(path: Path) -> dict[str, np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    columns = {name: np.array([float(r[i]) for r in rows])
               for i, name in enumerate(header)}
    return columns


def _load_record(run_dir: Path) -> RunRecord:
    manifest = json.loads((run_dir / "manifest.json").read_text())
    key = RunKey(manifest["algorithm"], float(manifest["learning_rate"]),
                 int(manifest["seed"]))
    checkpoint = manifest.get("checkpoint")
    return RunRecord(
        key=key,
        run_dir=run_dir,
        status=manifest["status"],
        train=_parse_csv(run_dir / "train.csv"),
        evals=_parse_csv(run_dir / "eval.csv"),
        checkpoint_dir=(run_dir / checkpoint) if checkpoint else None,
        wall_clock_s=manifest.get("wall_clock_s"),
    )


def load_records(out_dir) -> list[RunRecord]:
    """Read back every run directory under ``out_dir``."""
    out_dir = Path(out_dir)
    records = []
    for manifest_path in sorted(out_dir.glob("*/manifest.json")):
        records.append(_load_record(manifest_path.parent))
    if not records:
        raise FileNotFoundError(f"no run records under {out_dir}")
    return records


def evaluate_checkpoint(exp: ExperimentConfig, checkpoint_dir, *,
                        episodes: int, seed: int = 0) -> dict:
    """Load an agent checkpoint and run deterministic-policy episodes."""
    checkpoint_dir = Path(checkpoint_dir)
    manifest = json.loads((checkpoint_dir / "manifest.json").read_text())
    env = PinchingIsacEnv(exp.system, np.random.SeedSequence([seed, 0xE7A1]))
    agent = make_agent(manifest["algorithm"], env.observation_dim,
                       env.action_dim, exp.agent, seed)
    agent.load(checkpoint_dir)
    result = _evaluate(env, agent, episodes)
    result["algorithm"] = manifest["algorithm"]
    result["episodes"] = episodes
    return result


# ============================================================================
# Metric analysis
# ============================================================================

def moving_average(values, window: int) -> np.ndarray:
    """Trailing moving average: out[i] = mean(values[max(0, i-window+1):i+1])."""
    if window < 1:
        raise ValueError("window must be >= 1")
    values = np.asarray(values, dtype=float)
    out = np.empty_like(values)
    csum = np.concatenate([[0.0], np.cumsum(values)])
    for i in range(values.size):
        lo = max(0, i - window + 1)
        out[i] = (csum[i + 1] - csum[lo]) / (i + 1 - lo)
    return out


def final_window_values(record: RunRecord, column: str, episodes: int,
                        fraction: float = FINAL_WINDOW_FRACTION) -> np.ndarray:
    """Evaluation entries from the last ``fraction`` of the episode budget
    (falls back to the final entry if the cadence left none there)."""
    eps = record.evals["episode"]
    cut = (1.0 - fraction) * episodes
    mask = eps > cut
    values = record.evals[column][mask]
    if values.size == 0:
        values = record.evals[column][-1:]
    return values


def normalize_metrics(per_run_values: dict[str, float]) -> tuple[dict[str, float], bool]:
    """Min-max normalization across compared runs: the best run maps to 1.0,
    the worst to 0.0. A degenerate spread (max == min) maps everything to
    0.5 and sets the flag."""
    if len(per_run_values) < 2:
        raise ValueError("need at least two runs to normalize across")
    values = np.array(list(per_run_values.values()), dtype=float)
    lo, hi = float(values.min()), float(values.max())
    if hi == lo:
        return {k: 0.5 for k in per_run_values}, True
    return {k: (v - lo) / (hi - lo) for k, v in per_run_values.items()}, False


def _relative_improvement(a: float, b: float) -> float:
    """(a - b) / |b| in percent; positive when a is better."""
    if b == 0.0:
        return math.inf if a > 0 else 0.0
    return 100.0 * (a - b) / abs(b)


def compare_report(records: list[RunRecord], exp: ExperimentConfig) -> tuple[str, dict]:
    """Cross-algorithm summary over final-window evaluation metrics.

    Produces per-algorithm median/IQR across seeds, min-max-normalized
    scores, pairwise relative improvements on the raw means, and a one-sided
    rank test of merl against the random baseline on final evaluation
    rewards. Returns (text_report, machine_readable_dict).
    """
    completed = [r for r in records if r.status == "completed"]
    algorithms = sorted({r.key.algorithm for r in completed})
    if len(algorithms) < 2:
        raise ValueError("compare_report needs runs from at least two algorithms")

    metric_columns = {"reward": "eval_reward", "sum_rate": "eval_sum_rate",
                      "snr": "eval_mean_snr_linear"}
    per_algo: dict[str, dict[str, np.ndarray]] = {}
    per_run_final: dict[str, dict[str, float]] = {m: {} for m in metric_columns}
    for algo in algorithms:
        runs = [r for r in completed if r.key.algorithm == algo]
        per_algo[algo] = {}
        for metric, column in metric_columns.items():
            finals = np.array([
                float(np.mean(final_window_values(r, column, exp.episodes)))
                for r in runs])
            per_algo[algo][metric] = finals
            for r, v in zip(runs, finals):
                per_run_final[metric][r.key.name] = float(v)

    normalized: dict[str, dict[str, float]] = {}
    degenerate: dict[str, bool] = {}
    for metric in metric_columns:
        normalized[metric], degenerate[metric] = normalize_metrics(
            per_run_final[metric])

    data: dict = {"algorithms": {}, "improvements": [], "normalized": normalized,
                  "degenerate": degenerate}
    lines = ["Algorithm comparison over the final "
             f"{int(FINAL_WINDOW_FRACTION * 100)}% of {exp.episodes} episodes",
             "=" * 72]
    for algo in algorithms:
        entry = {}
        for metric in metric_columns:
            finals = per_algo[algo][metric]
            q1, med, q3 = np.percentile(finals, [25, 50, 75])
            norm_vals = [normalized[metric][r.key.name]
                         for r in completed if r.key.algorithm == algo]
            entry[metric] = {
                "median": float(med), "iqr": [float(q1), float(q3)],
                "mean": float(finals.mean()),
                "normalized_median": float(np.median(norm_vals)),
                "seeds": int(finals.size),
            }
        data["algorithms"][algo] = entry
        lines.append(
            f"{algo:>8}: reward median {entry['reward']['median']:.4g} "
            f"[{entry['reward']['iqr'][0]:.4g}, {entry['reward']['iqr'][1]:.4g}]  "
            f"sum-rate median {entry['sum_rate']['median']:.4g}  "
            f"snr median {entry['snr']['median']:.4g}  "
            f"({entry['reward']['seeds']} runs)")

    lines.append("")
    lines.append("Pairwise relative improvements of raw final-window means:")
    for metric in ("sum_rate", "snr"):
        for a, b in itertools.combinations(algorithms, 2):
            if (b, a, metric) in PAPER_REPORTED_IMPROVEMENTS:
                a, b = b, a  # orient the pair the way the reference is quoted
            imp = _relative_improvement(per_algo[a][metric].mean(),
                                        per_algo[b][metric].mean())
            ref = PAPER_REPORTED_IMPROVEMENTS.get((a, b, metric))
            ref_note = (f"  (reference {ref:+.1f}%, paper-reported, not asserted)"
                        if ref is not None else "")
            lines.append(f"  {a} vs {b} [{metric}]: {imp:+.1f}%{ref_note}")
            data["improvements"].append(
                {"better": a, "baseline": b, "metric": metric,
                 "percent": imp, "paper_reported_reference": ref})

    if "merl" in algorithms and "random" in algorithms:
        merl_runs = [r for r in completed if r.key.algorithm == "merl"]
        rand_runs = [r for r in completed if r.key.algorithm == "random"]
        if len(merl_runs) >= 2 and len(rand_runs) >= 2:
            merl_samples = np.concatenate([
                final_window_values(r, "eval_reward", exp.episodes)
                for r in merl_runs])
            rand_samples = np.concatenate([
                final_window_values(r, "eval_reward", exp.episodes)
                for r in rand_runs])
            test = stats.mannwhitneyu(merl_samples, rand_samples,
                                      alternative="greater")
            data["rank_test"] = {"statistic": float(test.statistic),
                                 "p_value": float(test.pvalue),
                                 "n_merl": int(merl_samples.size),
                                 "n_random": int(rand_samples.size)}
            lines.append("")
            lines.append(
                f"Rank test merl > random on final eval rewards: "
                f"U={test.statistic:.1f}, one-sided p={test.pvalue:.3g}")
        else:
            data["rank_test"] = None
            lines.append("")
            lines.append("Rank test skipped: need >= 2 seeds per algorithm.")

    return "\n".join(lines) + "\n", data


# ============================================================================
# Plot emission
# ============================================================================

def _write_plot_data(path: Path, columns: dict[str, np.ndarray]) -> None:
    names = list(columns)
    length = len(next(iter(columns.values())))
    with open(path, "w") as fh:
        fh.write("\t".join(names) + "\n")
        for i in range(length):
            fh.write("\t".join(_fmt(columns[c][i]) for c in names) + "\n")


def read_plot_data(path) -> dict[str, np.ndarray]:
    """Parse a plot-data file back; values round-trip exactly."""
    with open(path) as fh:
        names = fh.readline().rstrip("\n").split("\t")
        rows = [line.rstrip("\n").split("\t") for line in fh if line.strip()]
    return {name: np.array([float(r[i]) for r in rows])
            for i, name in enumerate(names)}


def emit_plots(records: list[RunRecord], exp: ExperimentConfig,
               out_dir=None) -> list[Path]:
    """Write per-figure plot-data files and SVG line/bar charts:
    per-run training-reward curves with moving averages, the normalized
    rate/SNR comparison, and (when several learning rates are present) the
    learning-rate sweep."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if not records:
        raise ValueError("no records to plot")
    out_dir = Path(out_dir) if out_dir is not None else Path(exp.out_dir) / "figures"
    out_dir.mkdir(parents=True, exist_ok=True)
    window = exp.moving_average_window
    created: list[Path] = []
    completed = [r for r in records if r.status == "completed"]

    # --- training reward curves, one data file per run --------------------
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for record in completed:
        episodes = record.train["episode"]
        rewards = record.train["reward"]
        ma = moving_average(rewards, window)
        data_path = out_dir / f"reward_{record.key.name}.dat"
        _write_plot_data(data_path, {
            "episode": episodes, "reward": rewards, "moving_average": ma})
        created.append(data_path)
        ax.plot(episodes, ma, label=record.key.name, linewidth=1.2)
    ax.set_xlabel("episode")
    ax.set_ylabel(f"episode reward (window {window})")
    ax.legend(fontsize=7)
    ax.grid(alpha=0.3)
    fig_path = out_dir / "reward_curves.svg"
    fig.savefig(fig_path, bbox_inches="tight")
    plt.close(fig)
    created.append(fig_path)

    # --- normalized comparison (needs >= 2 algorithms) ---------------------
    algorithms = sorted({r.key.algorithm for r in completed})
    if len(algorithms) >= 2:
        _, data = compare_report(records, exp)
        rate_norm = [data["algorithms"][a]["sum_rate"]["normalized_median"]
                     for a in algorithms]
        snr_norm = [data["algorithms"][a]["snr"]["normalized_median"]
                    for a in algorithms]
        data_path = out_dir / "normalized_comparison.dat"
        with open(data_path, "w") as fh:
            fh.write("algorithm\tnormalized_sum_rate\tnormalized_snr\n")
            for a, rn, sn in zip(algorithms, rate_norm, snr_norm):
                fh.write(f"{a}\t{_fmt(rn)}\t{_fmt(sn)}\n")
        created.append(data_path)
        x = np.arange(len(algorithms))
        fig, axes = plt.subplots(1, 2, figsize=(8, 3.5))
        for ax, vals, title in zip(axes, (rate_norm, snr_norm),
                                   ("normalized data rate", "normalized sensing SNR")):
            ax.bar(x, vals, width=0.6)
            ax.set_xticks(x, algorithms)
            ax.set_ylim(0, 1.05)
            ax.set_title(title, fontsize=10)
            ax.grid(alpha=0.3, axis="y")
        fig_path = out_dir / "normalized_comparison.svg"
        fig.savefig(fig_path, bbox_inches="tight")
        plt.close(fig)
        created.append(fig_path)

    # --- learning-rate sweep ------------------------------------------------
    merl_rates = sorted({r.key.learning_rate for r in completed
                         if r.key.algorithm == "merl"})
    if len(merl_rates) >= 2:
        fig, ax = plt.subplots(figsize=(7, 4.5))
        columns: dict[str, np.ndarray] = {}
        for lr in merl_rates:
            runs = [r for r in completed
                    if r.key.algorithm == "merl" and r.key.learning_rate == lr]
            length = min(r.train["episode"].size for r in runs)
            mean_reward = np.mean(
                [r.train["reward"][:length] for r in runs], axis=0)
            ma = moving_average(mean_reward, window)
            columns.setdefault("episode", runs[0].train["episode"][:length])
            columns[f"lr{lr:g}"] = mean_reward
            columns[f"lr{lr:g}_moving_average"] = ma
            ax.plot(columns["episode"], ma, label=f"lr={lr:g}", linewidth=1.2)
        data_path = out_dir / "lr_sweep.dat"
        _write_plot_data(data_path, columns)
        created.append(data_path)
        ax.set_xlabel("episode")
        ax.set_ylabel(f"episode reward (window {window})")
        ax.legend(fontsize=8)
        ax.grid(alpha=0.3)
        fig_path = out_dir / "lr_sweep.svg"
        fig.savefig(fig_path, bbox_inches="tight")
        plt.close(fig)
        created.append(fig_path)

    return created


# ============================================================================
# Grid-search oracle
# ============================================================================

class OracleIntractable(Exception):
    """The requested grid would exceed the evaluation guard."""


@dataclass(frozen=True)
class StaticScenario:
    """One-slot placement problem: a fixed user (and optionally a sensing
    target whose SNR threshold must hold)."""

    user: Position3D
    target: Position3D | None = None
    enforce_snr_constraint: bool = True


@dataclass(eq=False)
class OracleResult:
    layout: AntennaLayout
    power_w: float
    rate: float
    snr_linear: float | None
    evaluations: int


MAX_ORACLE_EVALUATIONS = 10_000_000


def _spaced_index_combos(num_points: int, count: int, min_gap: int):
    """Ascending index tuples with consecutive gaps >= min_gap."""
    def rec(start: int, remaining: int, prefix: tuple):
        if remaining == 0:
            yield prefix
            return
        # leave room for the rest of the antennas
        last = num_points - 1 - (remaining - 1) * min_gap
        for i in range(start, last + 1):
            yield from rec(i + min_gap, remaining - 1, prefix + (i,))
    yield from rec(0, count, ())


def _count_spaced_combos(num_points: int, count: int, min_gap: int) -> int:
    # choosing ascending indices with gaps >= g is choosing from a shrunk range
    effective = num_points - (count - 1) * (min_gap - 1)
    if effective < count:
        return 0
    return math.comb(effective, count)


def grid_search_oracle(scenario: StaticScenario, config: SystemConfig,
                       resolution_m: float, power_levels: int = 11) -> OracleResult:
    """Exhaustively maximize the served user's rate over discretized antenna
    positions (respecting the minimum spacing) and a power grid, subject to
    the sensing-SNR threshold when the scenario enforces it.

    Deliberately brute force: this is the independent check the learned
    solutions are compared against, so it shares no search logic with them.
    Refuses grids beyond MAX_ORACLE_EVALUATIONS with a size estimate.
    """
    if resolution_m <= 0:
        raise ValueError("resolution must be positive")
    wg = config.waveguide
    n = config.num_antennas
    num_points = int(math.floor((wg.x_max_m - wg.x_min_m) / resolution_m + 1e-9)) + 1
    grid = [wg.x_min_m + i * resolution_m for i in range(num_points)]
    min_gap = max(1, math.ceil(wg.min_spacing_m / resolution_m - 1e-12))
    combos = _count_spaced_combos(num_points, n, min_gap)
    evaluations = combos * power_levels
    if evaluations > MAX_ORACLE_EVALUATIONS:
        raise OracleIntractable(
            f"{combos} layouts x {power_levels} power levels = {evaluations} "
            f"evaluations exceeds the {MAX_ORACLE_EVALUATIONS} guard; "
            f"coarsen the resolution")
    if combos == 0:
        raise ValueError("grid too coarse to place all antennas at minimum spacing")

    # per-grid-point contribution to the effective gain at each probe point
    def contributions(point: Position3D) -> np.ndarray:
        out = np.empty(num_points, dtype=complex)
        for i, x in enumerate(grid):
            layout = AntennaLayout((x,))
            out[i] = effective_gain(point, layout, wg, config.carrier)
        return out

    user_contrib = contributions(scenario.user)
    target_contrib = (contributions(scenario.target)
                      if scenario.target is not None else None)
    powers = np.linspace(0.0, config.max_user_power_w, power_levels)
    noise = config.carrier.noise_power_w
    m = config.num_users

    best = None
    for combo in _spaced_index_combos(num_points, n, min_gap):
        xs = tuple(grid[i] for i in combo)
        if len(xs) > 1 and not spacing_satisfied(AntennaLayout(xs), wg.min_spacing_m):
            continue  # index stride guarantees this up to float rounding
        gain_user = abs(sum(user_contrib[i] for i in combo)) ** 2
        gain_target = (abs(sum(target_contrib[i] for i in combo)) ** 2
                       if target_contrib is not None else None)
        for p in powers:
            rate = math.log2(1.0 + gain_user * p / (n * noise)) / m
            snr = None
            if gain_target is not None:
                snr = (gain_target * p / n) / (gain_user * p / n + noise)
                if scenario.enforce_snr_constraint and snr < config.snr_threshold_linear:
                    continue
            if best is None or rate > best[0]:
                best = (rate, xs, p, snr)

    if best is None:
        raise ValueError("no feasible (layout, power) point on the grid")
    rate, xs, p, snr = best
    return OracleResult(layout=AntennaLayout(xs), power_w=float(p),
                        rate=float(rate), snr_linear=snr,
                        evaluations=evaluations)


__all__ = [
    "RunKey", "RunRecord", "campaign_keys", "run_single", "run_campaign",
    "run_episode", "load_records", "evaluate_checkpoint", "moving_average",
    "final_window_values", "normalize_metrics", "compare_report",
    "emit_plots", "read_plot_data", "grid_search_oracle", "StaticScenario",
    "OracleResult", "OracleIntractable", "MAX_ORACLE_EVALUATIONS",
    "PAPER_REPORTED_IMPROVEMENTS", "TRAIN_COLUMNS", "EVAL_COLUMNS",
    "FINAL_WINDOW_FRACTION",
]
