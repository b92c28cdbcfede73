"""Device models for the four microgrid technologies.

Pure functions plus immutable parameter/state records for wind turbines,
PV panels, diesel generators and battery storage, including the nonlinear
throughput-driven battery capacity fade law and its replacement accounting.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .validation import (
    check_finite_number,
    check_fraction,
    check_nonnegative,
    check_positive,
)

# The fade law yields percent of nominal capacity with the default
# constants; state is kept as a fraction to avoid 100x unit slips.
_PERCENT = 100.0

_ENERGY_TOL = 1e-9  # kWh slack for float noise in bound checks


@dataclass(frozen=True)
class WtParams:
    """Wind turbine ratings and costs.

    Attributes
    ----------
    v_cin, v_cout, v_r : float
        Cut-in, cut-out and rated wind speeds in m/s.
    p_rated : float
        Rated electrical output of one turbine, kW.
    unit_cost : float
        Purchase cost per turbine, $.
    om_cost_per_hour : float
        Operating and maintenance cost per turbine-hour, $/h.
    """

    v_cin: float = 3.0
    v_cout: float = 25.0
    v_r: float = 12.0
    p_rated: float = 100.0
    unit_cost: float = 100_000.0
    om_cost_per_hour: float = 1.14

    def __post_init__(self):
        check_positive(self.v_cin, "v_cin")
        check_positive(self.p_rated, "p_rated")
        check_nonnegative(self.unit_cost, "unit_cost")
        check_nonnegative(self.om_cost_per_hour, "om_cost_per_hour")
        if not (self.v_cin < self.v_r < self.v_cout):
            raise ValueError(
                f"speed ordering must be v_cin < v_r < v_cout, got "
                f"({self.v_cin}, {self.v_r}, {self.v_cout})"
            )


@dataclass(frozen=True)
class PvParams:
    """Photovoltaic panel ratings and costs.

    k_p is the signed temperature coefficient (fraction per kelvin);
    t_stc defaults to standard test conditions.
    """

    p_rated: float = 0.33
    g_stc: float = 1.0
    t_stc: float = 298.15
    k_p: float = -0.004
    unit_cost: float = 400.0
    om_cost_per_hour: float = 0.0057

    def __post_init__(self):
        check_positive(self.p_rated, "p_rated")
        check_positive(self.g_stc, "g_stc")
        check_positive(self.t_stc, "t_stc")
        check_finite_number(self.k_p, "k_p")
        check_nonnegative(self.unit_cost, "unit_cost")
        check_nonnegative(self.om_cost_per_hour, "om_cost_per_hour")


@dataclass(frozen=True)
class DgParams:
    """Diesel generator ratings, ramp limits, and fuel/emission factors.

    Ramp limits are per timestep; startup_ramp/shutdown_ramp bound the
    output jump when a unit switches on/off. p_min is the floor while
    committed. Defaults leave ramps unrestrictive (= p_rated).
    """

    p_rated: float = 500.0
    p_min: float = 150.0
    ramp_up: float = 500.0
    ramp_down: float = 500.0
    startup_ramp: float = 500.0
    shutdown_ramp: float = 500.0
    unit_cost: float = 40_000.0
    om_cost_per_hour: float = 0.0685
    fuel_rate: float = 0.25  # L per kWh generated
    co2_rate: float = 0.23204  # kg CO2 per kWh generated
    diesel_price: float = 1.11  # $ per L

    def __post_init__(self):
        check_positive(self.p_rated, "p_rated")
        check_nonnegative(self.p_min, "p_min")
        if self.p_min > self.p_rated:
            raise ValueError(f"p_min {self.p_min} exceeds p_rated {self.p_rated}")
        for name in ("ramp_up", "ramp_down", "startup_ramp", "shutdown_ramp",
                     "unit_cost", "om_cost_per_hour", "fuel_rate", "co2_rate",
                     "diesel_price"):
            check_nonnegative(getattr(self, name), name)


@dataclass(frozen=True)
class BessParams:
    """Battery unit ratings plus the capacity-fade law constants.

    The fade law is kappa * exp(e_a / (gas_const * temp_env)) * AH**z_exp,
    read in percent of nominal capacity and stored as a fraction. A unit
    is replaced once its loss fraction reaches q_max_loss.
    """

    e_nominal: float = 50.0
    e_min: float = 5.0
    p_ch_max: float = 25.0
    p_dc_max: float = 25.0
    eta_ch: float = 0.961
    eta_dc: float = 0.961
    voltage: float = 240.0
    unit_cost: float = 10_000.0
    kappa: float = 19_300.0
    e_a: float = -31_000.0
    gas_const: float = 8.314
    z_exp: float = 0.554
    q_max_loss: float = 0.20
    temp_env: float = 290.0

    def __post_init__(self):
        check_positive(self.e_nominal, "e_nominal")
        check_nonnegative(self.e_min, "e_min")
        if not self.e_min < self.e_nominal:
            raise ValueError(
                f"e_min {self.e_min} must be below e_nominal {self.e_nominal}"
            )
        check_nonnegative(self.p_ch_max, "p_ch_max")
        check_nonnegative(self.p_dc_max, "p_dc_max")
        check_fraction(self.eta_ch, "eta_ch", open_left=True)
        check_fraction(self.eta_dc, "eta_dc", open_left=True)
        check_positive(self.voltage, "voltage")
        check_nonnegative(self.unit_cost, "unit_cost")
        check_nonnegative(self.kappa, "kappa")
        check_finite_number(self.e_a, "e_a")
        check_positive(self.gas_const, "gas_const")
        check_positive(self.z_exp, "z_exp")
        check_positive(self.temp_env, "temp_env")
        if not 0 < self.q_max_loss < 1:
            raise ValueError(f"q_max_loss must be in (0, 1), got {self.q_max_loss}")


@dataclass(frozen=True)
class BatteryState:
    """Mutable-by-replacement battery bookkeeping, one record per unit."""

    energy: float  # kWh currently stored
    throughput_ah: float = 0.0  # cumulative Ah since last replacement
    q_loss: float = 0.0  # capacity-loss fraction of nominal
    n_replacements: int = 0


def wt_power(v: float, p: WtParams) -> float:
    """Power of one turbine at wind speed v (m/s), via the cubic rise curve.

    Zero below cut-in and at/above cut-out; cubic interpolation between
    cut-in and rated speed; flat at p_rated between rated and cut-out.
    """
    if v < 0:
        raise ValueError(f"wind speed must be >= 0, got {v}")
    if v < p.v_cin or v >= p.v_cout:
        return 0.0
    if v <= p.v_r:
        num = v**3 - p.v_cin**3
        den = p.v_r**3 - p.v_cin**3
        return p.p_rated * num / den
    return p.p_rated


def pv_power(g_en: float, t_en: float, p: PvParams) -> float:
    """Power of one panel at irradiance g_en (kW/m^2) and ambient t_en (K).

    Linear in irradiance with a temperature derating; clamped at zero from
    below for extreme temperatures.
    """
    if g_en < 0:
        raise ValueError(f"irradiance must be >= 0, got {g_en}")
    out = p.p_rated * (g_en / p.g_stc) * (1.0 + p.k_p * (t_en - p.t_stc))
    return max(0.0, out)


def loss_coefficient(p: BessParams) -> float:
    """Arrhenius prefactor of the fade law, in percent-per-Ah^z units."""
    import math

    return p.kappa * math.exp(p.e_a / (p.gas_const * p.temp_env))


def capacity_loss(throughput_ah: float, p: BessParams) -> float:
    """Capacity-loss fraction after cycling throughput_ah ampere-hours.

    Strictly increasing and concave in throughput for 0 < z_exp < 1;
    exactly zero at zero throughput.
    """
    if throughput_ah < 0:
        raise ValueError(f"throughput must be >= 0, got {throughput_ah}")
    if throughput_ah == 0.0:
        return 0.0
    return loss_coefficient(p) * throughput_ah**p.z_exp / _PERCENT


def step_throughput(prev_ah: float, p_ch: float, p_dc: float, dt: float,
                    voltage: float) -> float:
    """Accumulate ampere-hour throughput over one step of charge/discharge."""
    if p_ch < 0 or p_dc < 0:
        raise ValueError("charge/discharge power must be >= 0")
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    # kW -> W before dividing by volts, so the result is in Ah
    return prev_ah + (p_ch + p_dc) * dt * 1000.0 / voltage


def actual_capacity(q_loss: float, p: BessParams) -> float:
    """Usable nominal capacity (kWh) remaining at loss fraction q_loss."""
    if q_loss < 0:
        raise ValueError(f"q_loss must be >= 0, got {q_loss}")
    return (1.0 - q_loss) * p.e_nominal


def initial_energy(p: BessParams) -> float:
    """Default start-of-horizon energy: midway between floor and nominal."""
    return p.e_min + 0.5 * (p.e_nominal - p.e_min)


def battery_step(state: BatteryState, p_ch: float, p_dc: float, dt: float,
                 p: BessParams, e_init: float | None = None) -> BatteryState:
    """Advance one battery unit by one step of p_ch charging or p_dc discharging.

    Exactly one of p_ch/p_dc may be positive. The energy ledger is
    energy + eta_ch*p_ch*dt - p_dc*dt/eta_dc; throughput and loss update
    from the power cycled. Reaching q_max_loss triggers a replacement:
    the unit count increments and throughput/loss/energy reset.

    Raises ValueError if the resulting energy leaves
    [e_min, actual_capacity]; the caller is responsible for clamping
    powers to the feasible window beforehand.
    """
    if p_ch < 0 or p_ch > p.p_ch_max + _ENERGY_TOL:
        raise ValueError(f"p_ch {p_ch} outside [0, {p.p_ch_max}]")
    if p_dc < 0 or p_dc > p.p_dc_max + _ENERGY_TOL:
        raise ValueError(f"p_dc {p_dc} outside [0, {p.p_dc_max}]")
    if p_ch > 0 and p_dc > 0:
        raise ValueError("simultaneous charge and discharge is not allowed")

    energy = state.energy + p.eta_ch * p_ch * dt - (p_dc / p.eta_dc) * dt
    ah = step_throughput(state.throughput_ah, p_ch, p_dc, dt, p.voltage)
    q = capacity_loss(ah, p)

    if q >= p.q_max_loss:
        # end of life: swap in a fresh unit
        fresh = initial_energy(p) if e_init is None else e_init
        return BatteryState(
            energy=fresh,
            throughput_ah=0.0,
            q_loss=0.0,
            n_replacements=state.n_replacements + 1,
        )

    cap = actual_capacity(q, p)
    if energy < p.e_min - _ENERGY_TOL or energy > cap + _ENERGY_TOL:
        raise ValueError(
            f"energy {energy} kWh leaves [{p.e_min}, {cap}]; "
            "caller must clamp charge/discharge power first"
        )
    return replace(
        state,
        energy=min(max(energy, p.e_min), cap),
        throughput_ah=ah,
        q_loss=q,
    )


def degradation_cost(states, p: BessParams) -> float:
    """Dollar cost of battery wear: full replacements plus prorated residual loss."""
    total = 0.0
    for s in states:
        total += s.n_replacements * p.unit_cost
        total += (s.q_loss / p.q_max_loss) * p.unit_cost
    return total
