"""Rule-based merit-order microgrid operation.

Each timestep is settled in a fixed priority order: renewables serve load
first; surplus charges the batteries then exports; deficit discharges the
batteries, then raises diesel units under their commitment/ramp windows,
then imports. Whatever remains unserved is recorded as lost power supply,
never raised as an error. The power balance holds exactly by construction
at every step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .devices import (
    BatteryState,
    BessParams,
    DgParams,
    PvParams,
    WtParams,
    actual_capacity,
    battery_step,
    capacity_loss,
    initial_energy,
)
from .validation import check_count

BALANCE_TOL = 1e-9  # kW
_RAMP_TOL = 1e-9


class InvariantViolation(RuntimeError):
    """A runtime self-check failed (power balance, commitment audit, ...)."""


@dataclass(frozen=True)
class SizingBounds:
    """Upper device counts; each must be one less than a power of two so
    the optimizer's bit encoding is exactly bijective."""

    n_wt_max: int = 31
    n_pv_max: int = 16383
    n_dg_max: int = 15
    n_es_max: int = 255

    def __post_init__(self):
        for name in ("n_wt_max", "n_pv_max", "n_dg_max", "n_es_max"):
            v = check_count(getattr(self, name), name)
            if v < 1 or (v + 1) & v != 0:
                raise ValueError(f"{name} must be 2**k - 1, got {v}")

    def as_tuple(self):
        return (self.n_wt_max, self.n_pv_max, self.n_dg_max, self.n_es_max)


@dataclass(frozen=True)
class SizingConfig:
    """The decision vector: how many of each device to install."""

    n_wt: int
    n_pv: int
    n_dg: int
    n_es: int

    def __post_init__(self):
        for name in ("n_wt", "n_pv", "n_dg", "n_es"):
            object.__setattr__(self, name, check_count(getattr(self, name), name))

    def within(self, bounds: SizingBounds) -> bool:
        return (self.n_wt <= bounds.n_wt_max and self.n_pv <= bounds.n_pv_max
                and self.n_dg <= bounds.n_dg_max and self.n_es <= bounds.n_es_max)

    def as_tuple(self):
        return (self.n_wt, self.n_pv, self.n_dg, self.n_es)


@dataclass(frozen=True)
class MicrogridParams:
    """Device parameters plus grid-exchange limits for one experiment.

    import_cap/export_cap are kW limits on grid exchange; None means
    unlimited. An islanded system uses 0.0 for both.
    """

    wt: WtParams
    pv: PvParams
    dg: DgParams
    bess: BessParams
    import_cap: float | None = None
    export_cap: float | None = None
    dt: float = 1.0
    e_init: float | None = None

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        for name in ("import_cap", "export_cap"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be >= 0 or None, got {v}")

    def start_energy(self) -> float:
        return initial_energy(self.bess) if self.e_init is None else self.e_init


@dataclass(frozen=True)
class StepRecord:
    """One settled timestep. p_grid is signed, positive = export."""

    t: int
    p_wt: float
    p_pv: float
    p_dg: float
    p_ch: float
    p_dc: float
    p_grid: float
    p_load: float
    lps: float
    dg_on: int


@dataclass(frozen=True)
class OperationTrace:
    steps: tuple
    final_battery_states: tuple
    diesel_liters: float
    energy_bought: float  # kWh imported over the horizon
    energy_sold: float  # kWh exported
    dg_unit_outputs: np.ndarray  # (T, n_dg) kW per unit
    battery_total_ah: float  # per-unit Ah cycled, not reset by replacement
    battery_q_series: np.ndarray  # per-step loss fraction of one unit


def _dg_windows(dg_prev, p: DgParams):
    """Per-unit feasible output windows for this step.

    Returns (must_run, floors, ceilings): must_run marks units that cannot
    shut down; floors/ceilings bound each unit's output if it runs this
    step (0 output means off, permitted only when not must_run).
    """
    must_run, floors, ceilings = [], [], []
    start_ceil = min(p.p_rated, p.startup_ramp)
    for prev in dg_prev:
        if prev > 0.0:
            lo = max(p.p_min, prev - p.ramp_down)
            hi = min(p.p_rated, prev + p.ramp_up)
            must_run.append(prev > p.shutdown_ramp + _RAMP_TOL)
            floors.append(lo)
            ceilings.append(hi)
        else:
            must_run.append(False)
            floors.append(p.p_min)
            ceilings.append(start_ceil)
    return must_run, floors, ceilings


def _battery_limits(state: BatteryState, p: BessParams, dt: float):
    """Per-unit charge/discharge power limits honoring the shrinking capacity.

    Charge headroom is projected against the capacity two worst-case
    throughput steps ahead. That margin keeps stored energy below the
    fading capacity through the NEXT step as well, whatever it brings, so
    the post-step bound check can never trip on a later tiny discharge.
    """
    step_ah = max(p.p_ch_max, p.p_dc_max) * dt * 1000.0 / p.voltage
    q_proj = capacity_loss(state.throughput_ah + 2.0 * step_ah, p)
    cap_proj = actual_capacity(q_proj, p)
    ch = max(0.0, min(p.p_ch_max, (cap_proj - state.energy) / (p.eta_ch * dt)))
    dc = max(0.0, min(p.p_dc_max, (state.energy - p.e_min) * p.eta_dc / dt))
    return ch, dc


def dispatch_step(config: SizingConfig, t: int, wt_kw: float, pv_kw: float,
                  load_kw: float, battery: BatteryState | None, dg_prev,
                  params: MicrogridParams):
    """Settle one timestep; returns (StepRecord, battery', dg_outputs).

    battery is the representative unit state (identical units run in
    lockstep; pass None when no batteries are installed). dg_prev holds
    the previous per-unit diesel outputs.
    """
    p_wt = config.n_wt * wt_kw
    p_pv = config.n_pv * pv_kw
    dt = params.dt

    outputs = [0.0] * config.n_dg
    must_run, floors, ceilings = _dg_windows(dg_prev, params.dg)

    # units that cannot shut down run at least at their floor
    base_dg = 0.0
    for i in range(config.n_dg):
        if must_run[i]:
            outputs[i] = floors[i]
            base_dg += floors[i]

    if battery is not None and config.n_es > 0:
        ch_lim_unit, dc_lim_unit = _battery_limits(battery, params.bess, dt)
    else:
        ch_lim_unit = dc_lim_unit = 0.0

    p_ch = p_dc = 0.0
    grid_import = grid_export = 0.0
    lps = 0.0
    net = load_kw - p_wt - p_pv - base_dg

    if net >= 0.0:
        remaining = net
        # storage first
        p_dc = min(remaining, config.n_es * dc_lim_unit)
        remaining -= p_dc
        # raise the committed units toward their ceilings, in index order
        if remaining > 0.0:
            for i in range(config.n_dg):
                if must_run[i]:
                    extra = min(remaining, ceilings[i] - outputs[i])
                    if extra > 0.0:
                        outputs[i] += extra
                        remaining -= extra
                    if remaining <= 0.0:
                        break
        # running units that could stop: keep them on only when still useful
        if remaining > 0.0:
            for i in range(config.n_dg):
                if dg_prev[i] > 0.0 and not must_run[i] and remaining >= floors[i]:
                    outputs[i] = min(ceilings[i], remaining)
                    remaining -= outputs[i]
                    if remaining <= 0.0:
                        break
        # cold units last; starting one must not overshoot the residual
        if remaining > 0.0:
            for i in range(config.n_dg):
                if dg_prev[i] == 0.0 and remaining >= floors[i] and ceilings[i] >= floors[i]:
                    outputs[i] = min(ceilings[i], remaining)
                    remaining -= outputs[i]
                    if remaining <= 0.0:
                        break
        if remaining > 0.0:
            cap = remaining if params.import_cap is None else params.import_cap
            grid_import = min(remaining, cap)
            remaining -= grid_import
        lps = max(0.0, remaining)
    else:
        surplus = -net
        p_ch = min(surplus, config.n_es * ch_lim_unit)
        surplus -= p_ch
        if surplus > 0.0:
            cap = surplus if params.export_cap is None else params.export_cap
            grid_export = min(surplus, cap)
            surplus -= grid_export
        if surplus > 0.0:
            # leftover generation has nowhere to go: curtail wind, then PV,
            # then (only if committed units overproduce) diesel as a last resort
            shed = min(surplus, p_wt)
            p_wt -= shed
            surplus -= shed
        if surplus > 0.0:
            shed = min(surplus, p_pv)
            p_pv -= shed
            surplus -= shed
        if surplus > 0.0:
            for i in reversed(range(config.n_dg)):
                if outputs[i] > 0.0:
                    shed = min(surplus, outputs[i])
                    outputs[i] -= shed
                    surplus -= shed
                    if surplus <= 0.0:
                        break

    if battery is not None and config.n_es > 0:
        battery = battery_step(battery, p_ch / config.n_es, p_dc / config.n_es,
                               dt, params.bess, e_init=params.start_energy())

    p_dg = sum(outputs)
    dg_on = sum(1 for o in outputs if o > 0.0)
    p_grid = grid_export - grid_import

    record = StepRecord(t=t, p_wt=p_wt, p_pv=p_pv, p_dg=p_dg, p_ch=p_ch,
                        p_dc=p_dc, p_grid=p_grid, p_load=load_kw, lps=lps,
                        dg_on=dg_on)

    residual = (record.p_wt + record.p_pv + record.p_dg + record.p_dc
                - record.p_ch - record.p_grid - (record.p_load - record.lps))
    if abs(residual) > BALANCE_TOL:
        raise InvariantViolation(
            f"power balance residual {residual} kW at t={t}"
        )
    return record, battery, tuple(outputs)


def simulate(config: SizingConfig, scenario, params: MicrogridParams) -> OperationTrace:
    """Fold dispatch_step over one scenario day; deterministic."""
    horizon = scenario.n_hours
    dt = params.dt
    battery = (BatteryState(energy=params.start_energy())
               if config.n_es > 0 else None)
    dg_prev = (0.0,) * config.n_dg

    steps = []
    dg_matrix = np.zeros((horizon, config.n_dg))
    q_series = np.zeros(horizon)
    liters = 0.0
    bought = sold = 0.0
    total_ah = 0.0

    for t in range(horizon):
        rec, battery, dg_prev = dispatch_step(
            config, t, float(scenario.wt_profile[t]), float(scenario.pv_profile[t]),
            float(scenario.load_profile[t]), battery, dg_prev, params,
        )
        steps.append(rec)
        if config.n_dg:
            dg_matrix[t] = dg_prev
        if battery is not None:
            q_series[t] = battery.q_loss
            total_ah += (rec.p_ch + rec.p_dc) / config.n_es * dt * 1000.0 / params.bess.voltage
        liters += params.dg.fuel_rate * rec.p_dg * dt
        if rec.p_grid < 0.0:
            bought += -rec.p_grid * dt
        else:
            sold += rec.p_grid * dt

    finals = (battery,) * config.n_es if battery is not None else ()
    return OperationTrace(
        steps=tuple(steps),
        final_battery_states=finals,
        diesel_liters=liters,
        energy_bought=bought,
        energy_sold=sold,
        dg_unit_outputs=dg_matrix,
        battery_total_ah=total_ah,
        battery_q_series=q_series,
    )


def lps_of_step(record: StepRecord) -> float:
    """Unserved load implied by the record's own supply terms."""
    supply = (record.p_wt + record.p_pv + record.p_dg + record.p_dc
              - record.p_ch - record.p_grid)
    return max(0.0, record.p_load - supply)


def lpsp(trace: OperationTrace) -> float:
    """Fraction of load energy unserved over the trace; 0 for zero load."""
    total_load = sum(s.p_load for s in trace.steps)
    if total_load <= 0.0:
        return 0.0
    return sum(s.lps for s in trace.steps) / total_load


def check_dg_feasibility(trace: OperationTrace, p: DgParams):
    """Audit every diesel unit's bounds, ramps and on/off transitions.

    Returns a list of (t, unit, message) tuples; empty means feasible.
    """
    violations = []
    m = trace.dg_unit_outputs
    if m.size == 0:
        return violations
    horizon, n_units = m.shape
    start_ceil = min(p.p_rated, p.startup_ramp)
    for i in range(n_units):
        prev = 0.0
        for t in range(horizon):
            out = float(m[t, i])
            if out > 0.0:
                if out < p.p_min - _RAMP_TOL or out > p.p_rated + _RAMP_TOL:
                    violations.append(
                        (t, i, f"output {out} outside [{p.p_min}, {p.p_rated}]"))
                if prev == 0.0 and out > start_ceil + _RAMP_TOL:
                    violations.append(
                        (t, i, f"startup to {out} exceeds ramp {start_ceil}"))
                if prev > 0.0:
                    if out - prev > p.ramp_up + _RAMP_TOL:
                        violations.append(
                            (t, i, f"ramp up {out - prev} exceeds {p.ramp_up}"))
                    if prev - out > p.ramp_down + _RAMP_TOL:
                        violations.append(
                            (t, i, f"ramp down {prev - out} exceeds {p.ramp_down}"))
            elif prev > 0.0 and prev > p.shutdown_ramp + _RAMP_TOL:
                violations.append(
                    (t, i, f"shutdown from {prev} exceeds ramp {p.shutdown_ramp}"))
            prev = out
    return violations


def write_trace_csv(trace: OperationTrace, path) -> None:
    """Fixed column order: t, p_wt, p_pv, p_dg, p_ch, p_dc, p_grid, p_load, lps."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "p_wt", "p_pv", "p_dg", "p_ch", "p_dc",
                         "p_grid", "p_load", "lps"])
        for s in trace.steps:
            writer.writerow([s.t] + [repr(float(x)) for x in
                                     (s.p_wt, s.p_pv, s.p_dg, s.p_ch, s.p_dc,
                                      s.p_grid, s.p_load, s.lps)])
