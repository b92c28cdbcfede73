"""Command line front end.

Four verbs: scenarios, optimize, evaluate, compare. Every command is a
deterministic function of (config file, seed); outputs land as flat files
in the chosen directory together with an echo of the effective config.

Exit codes: 0 success, 2 bad configuration or arguments, 3 a runtime
self-check tripped.
"""

from __future__ import annotations

import csv
import dataclasses
import functools
import json
import sys
import time
from pathlib import Path

import click
import numpy as np

from .config import ConfigError, load_config
from .devices import loss_coefficient
from .dispatch import InvariantViolation, SizingConfig, simulate
from .metrics import diverse_count, largest_ora
from .moga import run_baseline, run_samoga, write_frontier_csv, write_history_csv
from .objectives import Evaluator
from .scenarios import subsample, write_csv, write_json

ALGORITHM_CHOICES = ("samoga", "nsga2", "nsga-hs", "aga")
SCENARIO_CHOICES = ("10", "20", "30", "125")


def _guarded(fn):
    """Map domain errors to the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(2)
        except InvariantViolation as exc:
            click.echo(f"invariant violation: {exc}", err=True)
            sys.exit(3)

    return wrapper


def _common(fn):
    fn = click.option("--config", "config_path", type=click.Path(exists=True),
                      default=None, help="YAML overrides for the defaults.")(fn)
    fn = click.option("--seed", type=click.IntRange(min=0), default=None,
                      help="Master seed; falls back to the config value.")(fn)
    fn = click.option("--out", "out_dir", type=click.Path(file_okay=False),
                      default=None,
                      help="Output directory; falls back to the config value.")(fn)
    return fn


def _setup(config_path, seed, out_dir):
    cfg = load_config(config_path)
    seed = cfg.seed() if seed is None else seed
    out = Path(out_dir if out_dir is not None else cfg.data["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "effective_config.yaml").write_text(cfg.to_yaml())
    return cfg, seed, out


def _scenario_set(cfg, seed, count):
    full = cfg.build_scenario_set(seed=seed)
    if count == 125 or count == len(full):  # 125 reads as "everything"
        return full
    sub_seed = int(np.random.SeedSequence([seed, count]).generate_state(1)[0])
    try:
        return subsample(full, count, sub_seed)
    except ValueError as exc:
        raise ConfigError(str(exc))


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


@click.group()
def main():
    """Microgrid sizing experiments: scenario synthesis, multi-objective
    search, single-design audits, and algorithm comparisons."""


# --------------------------------------------------------------- scenarios

@main.command("scenarios")
@_common
@_guarded
def cmd_scenarios(config_path, seed, out_dir):
    """Generate the weighted scenario set and its subsamples."""
    cfg, seed, out = _setup(config_path, seed, out_dir)
    full = cfg.build_scenario_set(seed=seed)
    write_csv(full, out / "scenarios_full.csv")
    write_json(full, out / "scenarios_full.json")
    click.echo(f"wrote {len(full)} scenarios to {out / 'scenarios_full.csv'}")
    for m in cfg.subsample_sizes():
        if m >= len(full):
            continue
        sub_seed = int(np.random.SeedSequence([seed, m]).generate_state(1)[0])
        sub = subsample(full, m, sub_seed)
        write_csv(sub, out / f"scenarios_{m}.csv")
        write_json(sub, out / f"scenarios_{m}.json")
        click.echo(f"wrote subsample of {m} to {out / f'scenarios_{m}.csv'}")


# ---------------------------------------------------------------- optimize

def _run_algorithm(algorithm, settings, evaluator, bounds, lpsp_max):
    if algorithm == "samoga":
        return run_samoga(settings, evaluator, bounds, lpsp_max)
    return run_baseline(algorithm, settings, evaluator, bounds, lpsp_max)


def _frontier_metrics(frontier, worst, gaps):
    """Quality numbers over the feasible frontier; a frontier is uniformly
    feasible or uniformly infeasible, never mixed."""
    if len(frontier) == 0 or not frontier.points[0].objectives.feasible:
        return {"largest_ora": None, "best_solution": None,
                "diverse_count_cost": 0, "diverse_count_pec": 0,
                "feasible": False}
    area, best = largest_ora(frontier, worst)
    n_cost, n_pec = diverse_count(frontier, *gaps)
    return {
        "largest_ora": area,
        "best_solution": {
            "wt": best.config.n_wt, "pv": best.config.n_pv,
            "dg": best.config.n_dg, "bess": best.config.n_es,
            "cost": best.objectives.cost, "pec": best.objectives.pec,
        },
        "diverse_count_cost": n_cost,
        "diverse_count_pec": n_pec,
        "feasible": True,
    }


@main.command("optimize")
@_common
@click.option("--algorithm", type=click.Choice(ALGORITHM_CHOICES),
              default="samoga", help="Search variant to run.")
@click.option("--scenarios", "scenario_count",
              type=click.Choice(SCENARIO_CHOICES), default="125",
              help="Scenario subset size; 125 means the full product set.")
@_guarded
def cmd_optimize(config_path, seed, out_dir, algorithm, scenario_count):
    """Search the sizing space and export the Pareto frontier."""
    cfg, seed, out = _setup(config_path, seed, out_dir)
    algo = algorithm.replace("-", "_")
    scenario_set = _scenario_set(cfg, seed, int(scenario_count))
    problem = cfg.sizing_problem()
    evaluator = Evaluator(scenario_set, problem)
    settings = cfg.ga_settings(seed=seed)

    started = time.perf_counter()
    result = _run_algorithm(algo, settings, evaluator, problem.bounds,
                            problem.lpsp_max)
    elapsed = time.perf_counter() - started

    write_frontier_csv(result.frontier, out / f"frontier_{algo}.csv")
    write_history_csv(result.history, out / f"history_{algo}.csv")

    doc = {"algorithm": algo, "seed": seed,
           "scenario_count": len(scenario_set),
           "frontier_size": len(result.frontier),
           "n_evaluations": evaluator.misses,
           "runtime_seconds": elapsed}
    doc.update(_frontier_metrics(result.frontier, cfg.worst_case(),
                                 cfg.diverse_gaps()))
    _write_json(out / f"metrics_{algo}.json", doc)
    click.echo(f"{algo}: frontier of {len(result.frontier)} written to "
               f"{out / f'frontier_{algo}.csv'}")


# ---------------------------------------------------------------- evaluate

def _write_trace_csv(trace, scenario, path):
    header = ["t", "load_kw", "wt_kw", "pv_kw", "dg_kw", "charge_kw",
              "discharge_kw", "grid_kw", "lps_kw", "dg_units_on",
              "loss_fraction"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for rec, q in zip(trace.steps, trace.battery_q_series):
            writer.writerow([rec.t] + [repr(float(x)) for x in
                             (rec.p_load, rec.p_wt, rec.p_pv, rec.p_dg,
                              rec.p_ch, rec.p_dc, rec.p_grid, rec.lps)]
                            + [rec.dg_on, repr(float(q))])


def _write_capacity_series(daily_ah, bess, days, path):
    """Day-level capacity of one battery unit with replacement jumps.

    Capacity decays with cumulative throughput and snaps back to nominal
    whenever the accumulated loss crosses the replacement threshold.
    """
    coef = loss_coefficient(bess) / 100.0
    ah_eol = (bess.q_max_loss / coef) ** (1.0 / bess.z_exp) if coef > 0 else None
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["day", "throughput_ah", "capacity_kwh",
                         "replacements"])
        for day in range(days + 1):
            ah = daily_ah * day
            if ah_eol is None:
                n_re, resid = 0, 0.0
            else:
                n_re = int(ah // ah_eol)
                resid = ah - n_re * ah_eol
            q = coef * resid ** bess.z_exp if coef > 0 else 0.0
            writer.writerow([day, repr(float(ah)),
                             repr(float(bess.e_nominal * (1.0 - q))), n_re])


@main.command("evaluate")
@_common
@click.option("--scenarios", "scenario_count",
              type=click.Choice(SCENARIO_CHOICES), default="125",
              help="Scenario subset size; 125 means the full product set.")
@click.argument("n_wt", type=click.IntRange(min=0))
@click.argument("n_pv", type=click.IntRange(min=0))
@click.argument("n_dg", type=click.IntRange(min=0))
@click.argument("n_es", type=click.IntRange(min=0))
@_guarded
def cmd_evaluate(config_path, seed, out_dir, scenario_count,
                 n_wt, n_pv, n_dg, n_es):
    """Deep-dive one sizing: traces, battery capacity series, costs.

    Arguments are device counts in the order WT PV DG BESS.
    """
    cfg, seed, out = _setup(config_path, seed, out_dir)
    scenario_set = _scenario_set(cfg, seed, int(scenario_count))
    problem = cfg.sizing_problem()
    sizing = SizingConfig(n_wt=n_wt, n_pv=n_pv, n_dg=n_dg, n_es=n_es)

    objectives, breakdown = Evaluator(scenario_set, problem).full(sizing)

    daily_ah = 0.0
    for i, scen in enumerate(scenario_set.scenarios):
        trace = simulate(sizing, scen, problem.params)
        _write_trace_csv(trace, scen, out / f"trace_s{i:03d}.csv")
        daily_ah += scen.probability * trace.battery_total_ah

    if n_es > 0:
        _write_capacity_series(daily_ah, problem.params.bess, problem.days,
                               out / "capacity_series.csv")

    # paired run with the fade law switched off isolates the wear cost
    bess0 = dataclasses.replace(problem.params.bess, kappa=0.0)
    problem0 = dataclasses.replace(
        problem, params=dataclasses.replace(problem.params, bess=bess0))
    objectives0, _ = Evaluator(scenario_set, problem0).full(sizing)

    doc = {
        "config": {"wt": n_wt, "pv": n_pv, "dg": n_dg, "bess": n_es},
        "seed": seed,
        "scenario_count": len(scenario_set),
        "objectives": {"cost": objectives.cost, "pec": objectives.pec,
                       "lpsp": objectives.lpsp,
                       "feasible": objectives.feasible},
        "cost_breakdown": {
            "initial": breakdown.c_init,
            "om": breakdown.c_om,
            "dg_fuel": breakdown.c_dg_fuel,
            "grid_buy": breakdown.c_grid_buy,
            "grid_sell": breakdown.c_grid_sell,
            "degradation": breakdown.c_degradation,
            "total": breakdown.total,
        },
        "degradation_comparison": {
            "cost_with_fade": objectives.cost,
            "cost_without_fade": objectives0.cost,
            "difference": objectives.cost - objectives0.cost,
        },
        "daily_throughput_ah_per_unit": daily_ah,
    }
    _write_json(out / "objectives.json", doc)
    click.echo(f"cost {objectives.cost:.2f} $, pec {objectives.pec:.2f} kg, "
               f"lpsp {objectives.lpsp:.4f} "
               f"({'feasible' if objectives.feasible else 'infeasible'})")


# ----------------------------------------------------------------- compare

def _mean_std(values):
    values = [v for v in values if v is not None]
    if not values:
        return None, None
    arr = np.array(values, dtype=float)
    return float(arr.mean()), float(arr.std())


@main.command("compare")
@_common
@_guarded
def cmd_compare(config_path, seed, out_dir):
    """Run every algorithm over the configured subset sizes and seeds."""
    cfg, seed, out = _setup(config_path, seed, out_dir)
    problem = cfg.sizing_problem()
    worst = cfg.worst_case()
    gaps = cfg.diverse_gaps()
    sizes = [int(s) for s in cfg.data["compare"]["scenario_sizes"]]
    algorithms = list(cfg.data["compare"]["algorithms"])
    reps = int(cfg.data["compare"]["repetitions"])

    raw = {metric: {s: {a: [] for a in algorithms} for s in sizes}
           for metric in ("largest_ora", "diverse_count_cost",
                          "diverse_count_pec", "frontier_size")}
    for size in sizes:
        scenario_set = _scenario_set(cfg, seed, size)
        # one cache per subset: every algorithm and repetition scores a
        # sizing against identical scenarios, so results are shareable
        evaluator = Evaluator(scenario_set, problem)
        for rep in range(reps):
            rep_seed = int(np.random.SeedSequence(
                [seed, size, rep]).generate_state(1)[0])
            for algo in algorithms:
                settings = cfg.ga_settings(seed=rep_seed)
                result = _run_algorithm(algo, settings, evaluator,
                                        problem.bounds, problem.lpsp_max)
                m = _frontier_metrics(result.frontier, worst, gaps)
                raw["largest_ora"][size][algo].append(m["largest_ora"])
                raw["diverse_count_cost"][size][algo].append(
                    m["diverse_count_cost"])
                raw["diverse_count_pec"][size][algo].append(
                    m["diverse_count_pec"])
                raw["frontier_size"][size][algo].append(len(result.frontier))
            click.echo(f"size {size} rep {rep + 1}/{reps} done "
                       f"({evaluator.misses} distinct sizings so far)")

    report = {"seed": seed, "repetitions": reps, "scenario_sizes": sizes,
              "algorithms": algorithms}
    for metric, by_size in raw.items():
        means, stds = [], []
        for size in sizes:
            row_m, row_s = [], []
            for algo in algorithms:
                m, s = _mean_std(by_size[size][algo])
                row_m.append(m)
                row_s.append(s)
            means.append(row_m)
            stds.append(row_s)
        report[metric] = {"mean": means, "std": stds,
                          "samples": {str(size): by_size[size]
                                      for size in sizes}}
    _write_json(out / "comparison.json", report)
    click.echo(f"report written to {out / 'comparison.json'}")


if __name__ == "__main__":
    main()
