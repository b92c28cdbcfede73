"""Experiment configuration: defaults, YAML overrides, object builders.

A config file is a key-value tree; anything not overridden falls back
to the built-in defaults below. Unknown keys anywhere in the tree are
rejected so typos cannot silently revert a setting to its default.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np
import yaml

from .devices import BessParams, DgParams, PvParams, WtParams, pv_power, wt_power
from .dispatch import MicrogridParams, SizingBounds
from .metrics import WorstCase
from .moga import GaSettings
from .objectives import SizingProblem, TariffSchedule
from .scenarios import (
    HourlyDistribution,
    ScenarioSet,
    build_scenario_set,
    kmeans_reduce,
    lhs_sample,
)


class ConfigError(ValueError):
    """Config file failed validation; maps to CLI exit code 2."""


_LOAD_MEANS = [1300, 1250, 1200, 1180, 1200, 1300, 1500, 1800,
               2000, 2100, 2050, 2000, 1950, 1900, 1900, 1950,
               2100, 2250, 2300, 2250, 2100, 1900, 1600, 1400]
_WIND_MEANS = [9.5, 9.8, 10.0, 9.7, 9.2, 8.8, 8.2, 7.6,
               7.0, 6.7, 6.5, 6.5, 6.6, 6.8, 7.0, 7.2,
               7.5, 7.9, 8.3, 8.7, 9.0, 9.2, 9.4, 9.5]
_IRR_MEANS = [0.0, 0.0, 0.0, 0.0, 0.0, 0.02, 0.08, 0.20,
              0.35, 0.55, 0.72, 0.83, 0.85, 0.80, 0.68, 0.52,
              0.35, 0.18, 0.06, 0.01, 0.0, 0.0, 0.0, 0.0]

DEFAULTS = {
    "schema_version": 1,
    "seed": 0,
    "output_dir": "results",
    "devices": {
        "wt": {"v_cin": 3.0, "v_cout": 25.0, "v_r": 12.0,
               "p_rated": 100.0, "unit_cost": 100000.0,
               "om_cost_per_hour": 1.14},
        "pv": {"p_rated": 0.33, "g_stc": 1.0, "t_stc": 298.15,
               "k_p": -0.004, "unit_cost": 400.0,
               "om_cost_per_hour": 0.0057},
        "dg": {"p_rated": 500.0, "p_min": 150.0, "ramp_up": 500.0,
               "ramp_down": 500.0, "startup_ramp": 500.0,
               "shutdown_ramp": 500.0, "unit_cost": 40000.0,
               "om_cost_per_hour": 0.0685, "fuel_rate": 0.25,
               "co2_rate": 0.23204, "diesel_price": 1.11},
        "bess": {"e_nominal": 50.0, "e_min": 5.0, "p_ch_max": 25.0,
                 "p_dc_max": 25.0, "eta_ch": 0.961, "eta_dc": 0.961,
                 "voltage": 240.0, "unit_cost": 10000.0,
                 "kappa": 19300.0, "e_a": -31000.0, "gas_const": 8.314,
                 "z_exp": 0.554, "q_max_loss": 0.20, "temp_env": 290.0},
    },
    "grid": {"import_cap": None, "export_cap": None},
    "battery_init_energy": None,
    "bounds": {"n_wt": 31, "n_pv": 16383, "n_dg": 15, "n_es": 255},
    "lpsp_max": 0.40,
    "annualization_days": 365,
    "tariffs": {"buy": 0.10, "sell": 0.05},
    "scenarios": {
        "n_samples": 1000,
        "k_per_dimension": 5,
        "subsample_sizes": [10, 20, 30],
        "cell_temp": 298.15,
        "wind_speed": {"means": _WIND_MEANS, "sd_fraction": 0.22,
                       "lower": 0.0, "upper": 25.0},
        "irradiance": {"means": _IRR_MEANS, "sd_fraction": 0.25,
                       "lower": 0.0, "upper": 1.2},
        "load": {"means": _LOAD_MEANS, "sd_fraction": 0.08,
                 "lower": 0.0, "upper": 5000.0},
    },
    "ga": {"pop_size": 30, "max_iter": 50, "p_c0": 0.65, "p_m0": 0.01,
           "alpha": 10.0, "beta": 10.0, "n_groups": 5,
           "group_stat": "mean"},
    "worst_case": {"cost": 1.6e7, "pec": 4.0e6},
    "diverse_gaps": {"cost": 1.0e5, "pec": 2.0e4},
    "compare": {"repetitions": 5, "scenario_sizes": [10, 20, 30],
                "algorithms": ["samoga", "nsga2", "nsga_hs", "aga"]},
}


def deep_merge(base: dict, override: dict, path: str = "") -> dict:
    """Recursively overlay override onto base; unknown keys are errors.

    Dicts merge key by key; every other value (lists included) replaces
    the default wholesale.
    """
    merged = copy.deepcopy(base)
    for key, value in override.items():
        here = f"{path}.{key}" if path else str(key)
        if key not in base:
            raise ConfigError(f"unknown config key: {here}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            merged[key] = deep_merge(base[key], value, here)
        elif isinstance(base[key], dict) and value is not None:
            raise ConfigError(f"{here} must be a mapping")
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _num(value, where: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where} must be a number, got {value!r}")


def _opt_num(value, where: str):
    return None if value is None else _num(value, where)


def _count(value, where: str) -> int:
    f = _num(value, where)
    if f != int(f):
        raise ConfigError(f"{where} must be an integer, got {value!r}")
    return int(f)


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated, fully-merged experiment settings."""

    data: dict

    @classmethod
    def from_overrides(cls, overrides: dict | None = None) -> "ExperimentConfig":
        """Defaults with a partial override tree merged on top, validated."""
        return _validate(cls(data=deep_merge(DEFAULTS, overrides or {})))

    # ------------------------------------------------------------ builders

    def wt_params(self) -> WtParams:
        d = self.data["devices"]["wt"]
        return WtParams(**{k: _num(v, f"devices.wt.{k}")
                           for k, v in d.items()})

    def pv_params(self) -> PvParams:
        d = self.data["devices"]["pv"]
        return PvParams(**{k: _num(v, f"devices.pv.{k}")
                           for k, v in d.items()})

    def dg_params(self) -> DgParams:
        d = self.data["devices"]["dg"]
        return DgParams(**{k: _num(v, f"devices.dg.{k}")
                           for k, v in d.items()})

    def bess_params(self) -> BessParams:
        d = self.data["devices"]["bess"]
        return BessParams(**{k: _num(v, f"devices.bess.{k}")
                             for k, v in d.items()})

    def microgrid_params(self) -> MicrogridParams:
        grid = self.data["grid"]
        return MicrogridParams(
            wt=self.wt_params(), pv=self.pv_params(), dg=self.dg_params(),
            bess=self.bess_params(),
            import_cap=_opt_num(grid["import_cap"], "grid.import_cap"),
            export_cap=_opt_num(grid["export_cap"], "grid.export_cap"),
            e_init=_opt_num(self.data["battery_init_energy"],
                            "battery_init_energy"))

    def sizing_bounds(self) -> SizingBounds:
        b = self.data["bounds"]
        return SizingBounds(n_wt_max=_count(b["n_wt"], "bounds.n_wt"),
                            n_pv_max=_count(b["n_pv"], "bounds.n_pv"),
                            n_dg_max=_count(b["n_dg"], "bounds.n_dg"),
                            n_es_max=_count(b["n_es"], "bounds.n_es"))

    def tariff_schedule(self, hours: int = 24) -> TariffSchedule:
        t = self.data["tariffs"]

        def row(v, name):
            if isinstance(v, (list, tuple)):
                if len(v) != hours:
                    raise ConfigError(
                        f"tariffs.{name} must have {hours} entries")
                return np.array([_num(x, f"tariffs.{name}") for x in v])
            return np.full(hours, _num(v, f"tariffs.{name}"))

        return TariffSchedule(buy=row(t["buy"], "buy"),
                              sell=row(t["sell"], "sell"))

    def sizing_problem(self) -> SizingProblem:
        return SizingProblem(
            params=self.microgrid_params(),
            tariffs=self.tariff_schedule(),
            bounds=self.sizing_bounds(),
            lpsp_max=_num(self.data["lpsp_max"], "lpsp_max"),
            days=_count(self.data["annualization_days"],
                        "annualization_days"))

    def ga_settings(self, seed=None) -> GaSettings:
        g = self.data["ga"]
        return GaSettings(
            pop_size=_count(g["pop_size"], "ga.pop_size"),
            max_iter=_count(g["max_iter"], "ga.max_iter"),
            p_c0=_num(g["p_c0"], "ga.p_c0"),
            p_m0=_num(g["p_m0"], "ga.p_m0"),
            alpha=_num(g["alpha"], "ga.alpha"),
            beta=_num(g["beta"], "ga.beta"),
            n_groups=_count(g["n_groups"], "ga.n_groups"),
            seed=self.seed() if seed is None else seed,
            group_stat=g["group_stat"])

    def worst_case(self) -> WorstCase:
        w = self.data["worst_case"]
        return WorstCase(cost_star=_num(w["cost"], "worst_case.cost"),
                         pec_star=_num(w["pec"], "worst_case.pec"))

    def diverse_gaps(self) -> tuple:
        d = self.data["diverse_gaps"]
        return (_num(d["cost"], "diverse_gaps.cost"),
                _num(d["pec"], "diverse_gaps.pec"))

    def seed(self) -> int:
        return _count(self.data["seed"], "seed")

    def subsample_sizes(self) -> tuple:
        sizes = self.data["scenarios"]["subsample_sizes"]
        return tuple(_count(s, "scenarios.subsample_sizes") for s in sizes)

    def _hourly(self, block: str) -> HourlyDistribution:
        d = self.data["scenarios"][block]
        means = np.array([_num(v, f"scenarios.{block}.means")
                          for v in d["means"]])
        sd_frac = _num(d["sd_fraction"], f"scenarios.{block}.sd_fraction")
        return HourlyDistribution(
            means=means, sds=sd_frac * means,
            lower=_num(d["lower"], f"scenarios.{block}.lower"),
            upper=_num(d["upper"], f"scenarios.{block}.upper"))

    # ------------------------------------------------------------ pipeline

    def build_scenario_set(self, seed=None) -> ScenarioSet:
        """Sample hourly weather and load, map weather to per-unit device
        power, then reduce each dimension to k weighted day profiles and
        take their product (k^3 scenarios)."""
        s = self.data["scenarios"]
        n = _count(s["n_samples"], "scenarios.n_samples")
        k = _count(s["k_per_dimension"], "scenarios.k_per_dimension")
        cell_temp = _num(s["cell_temp"], "scenarios.cell_temp")
        base_seed = self.seed() if seed is None else seed
        state = np.random.SeedSequence(base_seed).generate_state(6, np.uint64)
        wind_ss, irr_ss, load_ss, *reduce_ss = (int(x) for x in state)

        wt = self.wt_params()
        pv = self.pv_params()

        wind = lhs_sample(self._hourly("wind_speed"), n, wind_ss)
        wt_kw = np.vectorize(lambda v: wt_power(v, wt))(wind)
        irr = lhs_sample(self._hourly("irradiance"), n, irr_ss)
        pv_kw = np.vectorize(lambda g: pv_power(g, cell_temp, pv))(irr)
        load = lhs_sample(self._hourly("load"), n, load_ss)

        return build_scenario_set(
            kmeans_reduce(wt_kw, k, reduce_ss[0]),
            kmeans_reduce(pv_kw, k, reduce_ss[1]),
            kmeans_reduce(load, k, reduce_ss[2]),
            seed=base_seed)

    # ------------------------------------------------------------- echo

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.data, sort_keys=True,
                              default_flow_style=False)


def _validate(config: ExperimentConfig) -> ExperimentConfig:
    """Build every derived object once so bad values fail at load time."""
    try:
        config.sizing_problem()
        config.ga_settings()
        config.worst_case()
        config.diverse_gaps()
        config.subsample_sizes()
        for block in ("wind_speed", "irradiance", "load"):
            config._hourly(block)
        for algo in config.data["compare"]["algorithms"]:
            if algo not in ("samoga", "nsga2", "nsga_hs", "aga"):
                raise ConfigError(f"unknown algorithm {algo!r} in compare")
        _count(config.data["compare"]["repetitions"],
               "compare.repetitions")
        version = _count(config.data["schema_version"], "schema_version")
        if version != 1:
            raise ConfigError(f"unsupported schema_version {version}")
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    return config


def load_config(path=None) -> ExperimentConfig:
    """Merged, validated config; path None means pure defaults."""
    override = {}
    if path is not None:
        with open(path) as fh:
            loaded = yaml.safe_load(fh)
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a mapping at top level")
        override = loaded
    merged = deep_merge(DEFAULTS, override)
    return _validate(ExperimentConfig(data=merged))
