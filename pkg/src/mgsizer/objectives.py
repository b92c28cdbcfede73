"""Economic and environmental objective evaluation.

A sizing is scored over a weighted scenario set: one simulated day per
scenario, probability-weighted, with operational terms extended to a
one-year life cycle (capital counted once). The two objectives are the
comprehensive cost in dollars and the CO2 mass attributed to diesel
generation in kilograms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .devices import degradation_cost, loss_coefficient
from .dispatch import (
    MicrogridParams,
    SizingBounds,
    SizingConfig,
    check_dg_feasibility,
    simulate,
)

_LPSP_TOL = 1e-12


@dataclass(frozen=True)
class CostBreakdown:
    c_init: float
    c_om: float
    c_dg_fuel: float
    c_grid_buy: float
    c_grid_sell: float
    c_degradation: float
    total: float

    def identity_residual(self) -> float:
        """Relative gap between total and the five-term sum (sell negative)."""
        s = (self.c_init + self.c_om + self.c_dg_fuel + self.c_grid_buy
             - self.c_grid_sell + self.c_degradation)
        scale = max(abs(self.total), 1.0)
        return abs(self.total - s) / scale


@dataclass(frozen=True)
class ObjectiveVector:
    cost: float
    pec: float
    lpsp: float
    feasible: bool


@dataclass(frozen=True)
class TariffSchedule:
    """Hourly buy/sell prices in $/kWh, one row shared by all scenarios or
    one row per scenario. Selling never pays more than buying costs."""

    buy: np.ndarray
    sell: np.ndarray

    def __post_init__(self):
        buy = np.atleast_1d(np.asarray(self.buy, dtype=float))
        sell = np.atleast_1d(np.asarray(self.sell, dtype=float))
        if buy.shape != sell.shape:
            raise ValueError("buy and sell schedules must share a shape")
        if np.any(buy < 0) or np.any(sell < 0):
            raise ValueError("tariffs must be nonnegative")
        if np.any(sell > buy + 1e-12):
            raise ValueError("sell price must not exceed buy price")
        object.__setattr__(self, "buy", buy)
        object.__setattr__(self, "sell", sell)

    @classmethod
    def flat(cls, buy: float = 0.10, sell: float = 0.05, hours: int = 24):
        return cls(buy=np.full(hours, buy), sell=np.full(hours, sell))

    def rows(self, scenario_index: int):
        if self.buy.ndim == 2:
            return self.buy[scenario_index], self.sell[scenario_index]
        return self.buy, self.sell


@dataclass(frozen=True)
class SizingProblem:
    """Everything needed to score a sizing: devices, prices, and limits."""

    params: MicrogridParams
    tariffs: TariffSchedule
    bounds: SizingBounds
    lpsp_max: float = 0.40
    days: int = 365
    audit_dg: bool = False


def cost_initial(config: SizingConfig, params: MicrogridParams) -> float:
    return (config.n_wt * params.wt.unit_cost
            + config.n_pv * params.pv.unit_cost
            + config.n_dg * params.dg.unit_cost
            + config.n_es * params.bess.unit_cost)


def cost_om(config: SizingConfig, horizon_hours: float,
            params: MicrogridParams) -> float:
    """Count-based upkeep over the horizon. Battery wear is priced by the
    degradation term instead, so storage carries no hourly rate here."""
    hourly = (config.n_wt * params.wt.om_cost_per_hour
              + config.n_pv * params.pv.om_cost_per_hour
              + config.n_dg * params.dg.om_cost_per_hour)
    return horizon_hours * hourly


def cost_dg_fuel(traces, pi, diesel_price: float) -> float:
    """Expected diesel spend over the traces' horizon."""
    return float(sum(p * tr.diesel_liters for p, tr in zip(pi, traces))
                 * diesel_price)


def cost_grid(traces, pi, tariffs: TariffSchedule, dt: float = 1.0):
    """Expected (buy $, sell $) over the traces' horizon."""
    buy_total = sell_total = 0.0
    for w, (p, tr) in enumerate(zip(pi, traces)):
        buy_row, sell_row = tariffs.rows(w)
        b = s = 0.0
        for rec in tr.steps:
            if rec.p_grid < 0.0:
                b += -rec.p_grid * dt * buy_row[rec.t % len(buy_row)]
            elif rec.p_grid > 0.0:
                s += rec.p_grid * dt * sell_row[rec.t % len(sell_row)]
        buy_total += p * b
        sell_total += p * s
    return float(buy_total), float(sell_total)


def cost_degradation_expected(states_per_scenario, pi, bess) -> float:
    """Probability-weighted battery wear cost of the simulated horizon."""
    return float(sum(p * degradation_cost(states, bess)
                     for p, states in zip(pi, states_per_scenario)))


def annualized_degradation_cost(daily_ah_per_unit: float, n_units: int,
                                bess, days: int = 365) -> float:
    """Extend one simulated day's per-unit throughput to a days-long horizon.

    Replacements are placed analytically at the throughput where the loss
    fraction reaches end of life; the remainder is prorated. With days=1
    and no replacement this equals degradation_cost of the final state.
    """
    if n_units <= 0 or daily_ah_per_unit <= 0.0:
        return 0.0
    coef = loss_coefficient(bess) / 100.0  # loss fraction per Ah^z
    if coef == 0.0:
        return 0.0
    ah_total = daily_ah_per_unit * days
    ah_eol = (bess.q_max_loss / coef) ** (1.0 / bess.z_exp)
    n_re = int(ah_total // ah_eol)
    residual_q = coef * (ah_total - n_re * ah_eol) ** bess.z_exp
    per_unit = (n_re + residual_q / bess.q_max_loss) * bess.unit_cost
    return n_units * per_unit


def pec(traces, pi, co2_rate: float, dt: float = 1.0) -> float:
    """Expected kg of CO2 from diesel generation over the traces' horizon."""
    total = 0.0
    for p, tr in zip(pi, traces):
        total += p * sum(rec.p_dg for rec in tr.steps) * dt * co2_rate
    return float(total)


def renewable_proportion(config: SizingConfig, scenario_set) -> float:
    """Expected renewable energy over expected load energy; may exceed 1."""
    gen = load = 0.0
    for s in scenario_set:
        gen += s.probability * float(config.n_wt * s.wt_profile.sum()
                                     + config.n_pv * s.pv_profile.sum())
        load += s.probability * float(s.load_profile.sum())
    if load <= 0.0:
        return 0.0
    return gen / load


def evaluate(config: SizingConfig, scenario_set,
             problem: SizingProblem):
    """Score one sizing; returns (ObjectiveVector, CostBreakdown).

    Out-of-bound or supply-shy configurations come back flagged
    infeasible, never as exceptions, so an optimizer can keep them under
    penalty pressure.
    """
    params = problem.params
    pi = [s.probability for s in scenario_set]
    traces = [simulate(config, s, params) for s in scenario_set]

    hours_per_day = scenario_set.scenarios[0].n_hours * params.dt
    days = problem.days

    c_init = cost_initial(config, params)
    c_om = cost_om(config, hours_per_day * days, params)
    c_fuel = days * cost_dg_fuel(traces, pi, params.dg.diesel_price)
    buy_day, sell_day = cost_grid(traces, pi, problem.tariffs, params.dt)
    c_buy, c_sell = days * buy_day, days * sell_day
    c_degr = float(sum(
        p * annualized_degradation_cost(tr.battery_total_ah, config.n_es,
                                        params.bess, days)
        for p, tr in zip(pi, traces)))
    total = c_init + c_om + c_fuel + c_buy - c_sell + c_degr

    pec_val = days * pec(traces, pi, params.dg.co2_rate, params.dt)

    lps_energy = sum(p * sum(r.lps for r in tr.steps)
                     for p, tr in zip(pi, traces)) * params.dt
    load_energy = sum(p * sum(r.p_load for r in tr.steps)
                      for p, tr in zip(pi, traces)) * params.dt
    lpsp_val = 0.0 if load_energy <= 0.0 else lps_energy / load_energy

    dg_ok = True
    if problem.audit_dg:
        dg_ok = all(not check_dg_feasibility(tr, params.dg) for tr in traces)

    feasible = (lpsp_val <= problem.lpsp_max + _LPSP_TOL
                and config.within(problem.bounds)
                and dg_ok)

    objectives = ObjectiveVector(cost=float(total), pec=float(pec_val),
                                 lpsp=float(lpsp_val), feasible=feasible)
    breakdown = CostBreakdown(c_init=float(c_init), c_om=float(c_om),
                              c_dg_fuel=float(c_fuel), c_grid_buy=float(c_buy),
                              c_grid_sell=float(c_sell),
                              c_degradation=float(c_degr), total=float(total))
    return objectives, breakdown


class Evaluator:
    """Memoizing front-end for evaluate, keyed by the four device counts.

    A genetic run revisits the same sizing many times; caching makes the
    evaluation cost proportional to the number of DISTINCT sizings.
    """

    def __init__(self, scenario_set, problem: SizingProblem):
        self.scenario_set = scenario_set
        self.problem = problem
        self._cache: dict = {}
        self.calls = 0
        self.misses = 0

    def full(self, config: SizingConfig):
        key = config.as_tuple()
        self.calls += 1
        hit = self._cache.get(key)
        if hit is None:
            self.misses += 1
            hit = evaluate(config, self.scenario_set, self.problem)
            self._cache[key] = hit
        return hit

    def __call__(self, config: SizingConfig) -> ObjectiveVector:
        return self.full(config)[0]
