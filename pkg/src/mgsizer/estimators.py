"""Estimator front-ends for the sizing search.

Each optimizer is wrapped in a scikit-learn style estimator: construct
with hyperparameters, fit on a ScenarioSet, read the fitted frontier
from trailing-underscore attributes, and use predict to score explicit
sizing configurations. get_params/set_params/clone work as usual, so
the sizers drop into sklearn model-selection tooling.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .dispatch import SizingConfig
from .moga import GaSettings, run_baseline, run_samoga
from .objectives import Evaluator, SizingProblem
from .scenarios import ScenarioSet


class _SizerBase(BaseEstimator):
    """Shared fit/predict plumbing; subclasses pin the algorithm."""

    _variant = ""

    def __init__(self, problem=None, pop_size=30, max_iter=50, p_c0=0.65,
                 p_m0=0.01, alpha=10.0, beta=10.0, n_groups=5,
                 group_stat="mean", random_state=None):
        self.problem = problem
        self.pop_size = pop_size
        self.max_iter = max_iter
        self.p_c0 = p_c0
        self.p_m0 = p_m0
        self.alpha = alpha
        self.beta = beta
        self.n_groups = n_groups
        self.group_stat = group_stat
        self.random_state = random_state

    def _settings(self) -> GaSettings:
        return GaSettings(pop_size=self.pop_size, max_iter=self.max_iter,
                          p_c0=self.p_c0, p_m0=self.p_m0, alpha=self.alpha,
                          beta=self.beta, n_groups=self.n_groups,
                          seed=self.random_state,
                          group_stat=self.group_stat)

    def fit(self, X, y=None):
        """Run the search over a ScenarioSet; y is ignored."""
        if not isinstance(X, ScenarioSet):
            raise TypeError("X must be a ScenarioSet")
        if not isinstance(self.problem, SizingProblem):
            raise ValueError("problem must be a SizingProblem instance")
        settings = self._settings()
        evaluator = Evaluator(X, self.problem)
        if self._variant == "samoga":
            result = run_samoga(settings, evaluator,
                                self.problem.bounds,
                                self.problem.lpsp_max)
        else:
            result = run_baseline(self._variant, settings, evaluator,
                                  self.problem.bounds,
                                  self.problem.lpsp_max)
        self.scenario_set_ = X
        self.evaluator_ = evaluator
        self.result_ = result
        self.frontier_ = result.frontier
        self.history_ = result.history
        self.n_evaluations_ = evaluator.misses
        return self

    def _check_fitted(self):
        if not hasattr(self, "frontier_"):
            raise NotFittedError(
                f"{type(self).__name__} must be fitted before use")

    def predict(self, X) -> np.ndarray:
        """Objective pairs, shape (n, 2): columns cost $ and pec kg.

        X is an iterable of SizingConfig or (n_wt, n_pv, n_dg, n_es)
        count tuples, scored on the fitted scenario set.
        """
        self._check_fitted()
        rows = []
        for item in X:
            config = (item if isinstance(item, SizingConfig)
                      else SizingConfig(*item))
            obj = self.evaluator_(config)
            rows.append((obj.cost, obj.pec))
        return np.array(rows, dtype=float).reshape(-1, 2)

    def frontier_array(self) -> np.ndarray:
        """Fitted frontier as an (n, 2) cost/pec array."""
        self._check_fitted()
        return self.frontier_.objective_array()


class SamogaSizer(_SizerBase):
    """Self-adaptive GA: stall-driven probabilities, grouped selection."""

    _variant = "samoga"


class Nsga2Sizer(_SizerBase):
    """NSGA-II reference: constant probabilities, binary tournament."""

    _variant = "nsga2"


class NsgaHsSizer(_SizerBase):
    """NSGA-II with grouped hierarchical selection in place of
    tournaments."""

    _variant = "nsga_hs"


class AgaSizer(_SizerBase):
    """Linear probability schedule on the NSGA-II engine."""

    _variant = "aga"


SIZERS = {
    "samoga": SamogaSizer,
    "nsga2": Nsga2Sizer,
    "nsga_hs": NsgaHsSizer,
    "aga": AgaSizer,
}
