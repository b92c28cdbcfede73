"""Stochastic scenario generation and reduction.

Pipeline: stratified (Latin hypercube) sampling of hourly profiles from
truncated-normal marginals, K-means reduction of each dimension to a few
weighted typical days, and a Cartesian product across the wind/PV/load
dimensions into a weighted scenario set. Every stage is seeded and
bit-for-bit reproducible.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy.stats import truncnorm
from sklearn.cluster import KMeans

from .validation import check_profile_array

PROB_TOL = 1e-9


@dataclass(frozen=True)
class HourlyDistribution:
    """Independent truncated-normal marginals, one per hour of the day.

    An hour with sd == 0 degenerates to the constant mean.
    """

    means: np.ndarray
    sds: np.ndarray
    lower: float = 0.0
    upper: float = float("inf")

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float)
        sds = np.asarray(self.sds, dtype=float)
        if means.shape != sds.shape or means.ndim != 1:
            raise ValueError("means and sds must be 1-d arrays of equal length")
        if np.any(sds < 0):
            raise ValueError("sds must be nonnegative")
        if np.any(means < self.lower) or np.any(means > self.upper):
            raise ValueError("means must lie within [lower, upper]")
        if not self.lower < self.upper:
            raise ValueError("lower must be below upper")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "sds", sds)

    @property
    def n_hours(self) -> int:
        return self.means.shape[0]


@dataclass(frozen=True)
class Scenario:
    """One weighted joint day: per-unit WT kW, per-unit PV kW, aggregate load kW."""

    wt_profile: np.ndarray
    pv_profile: np.ndarray
    load_profile: np.ndarray
    probability: float

    def __post_init__(self):
        object.__setattr__(self, "wt_profile",
                           check_profile_array(self.wt_profile, "wt_profile"))
        object.__setattr__(self, "pv_profile",
                           check_profile_array(self.pv_profile, "pv_profile"))
        object.__setattr__(self, "load_profile",
                           check_profile_array(self.load_profile, "load_profile"))
        n = self.wt_profile.shape[0]
        if self.pv_profile.shape[0] != n or self.load_profile.shape[0] != n:
            raise ValueError("profiles must share one horizon length")
        if not 0.0 < self.probability <= 1.0:
            raise ValueError(f"probability must be in (0, 1], got {self.probability}")

    @property
    def n_hours(self) -> int:
        return self.wt_profile.shape[0]


@dataclass(frozen=True)
class ScenarioSet:
    scenarios: tuple
    seed: int | None = None

    def __post_init__(self):
        if not self.scenarios:
            raise ValueError("scenario set must be non-empty")
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        total = sum(s.probability for s in self.scenarios)
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities must sum to 1, got {total}")

    def __len__(self) -> int:
        return len(self.scenarios)

    def __iter__(self):
        return iter(self.scenarios)

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([s.probability for s in self.scenarios])


def stratified_uniforms(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """(n, d) uniforms with one point per 1/n-quantile band in every column."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    out = np.empty((n, d))
    for j in range(d):
        perm = rng.permutation(n)
        out[:, j] = (perm + rng.random(n)) / n
    return out


def lhs_sample(spec: HourlyDistribution, n: int, seed) -> np.ndarray:
    """Draw n day profiles, Latin-hypercube stratified independently per hour.

    Returns an (n, n_hours) array. Zero-sd hours return the constant mean.
    Deterministic for a given seed.
    """
    rng = np.random.default_rng(seed)
    u = stratified_uniforms(n, spec.n_hours, rng)
    out = np.empty_like(u)
    for h in range(spec.n_hours):
        mu, sd = spec.means[h], spec.sds[h]
        if sd == 0.0:
            out[:, h] = mu
            continue
        a = (spec.lower - mu) / sd
        b = (spec.upper - mu) / sd
        out[:, h] = truncnorm.ppf(u[:, h], a, b, loc=mu, scale=sd)
    return out


def kmeans_reduce(samples: np.ndarray, k: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """Cluster day profiles into k typical days with occurrence frequencies.

    Lloyd iteration with seeded k-means++ initialization; probability of a
    centroid is its cluster's share of the samples. Centroids are returned
    sorted by profile mean so the output order is stable.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[0] == 0:
        raise ValueError("samples must be a non-empty (n, hours) array")
    n = samples.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")

    seed_int = int(np.random.SeedSequence(seed).generate_state(1)[0] % (2**32 - 1))
    km = KMeans(n_clusters=k, init="k-means++", n_init=1, max_iter=300,
                algorithm="lloyd", random_state=seed_int)
    labels = km.fit_predict(samples)
    counts = np.bincount(labels, minlength=k).astype(float)
    centroids = km.cluster_centers_
    probs = counts / n

    order = np.argsort(centroids.mean(axis=1), kind="stable")
    return centroids[order], probs[order]


def build_scenario_set(wt, pv, load, seed=None) -> ScenarioSet:
    """Cross three reduced dimensions into the full product scenario set.

    Each argument is a (centroids, probabilities) pair; the joint
    probability of a combination is the product of its marginals.
    """
    wt_c, wt_p = wt
    pv_c, pv_p = pv
    load_c, load_p = load
    for name, probs in (("wt", wt_p), ("pv", pv_p), ("load", load_p)):
        if abs(float(np.sum(probs)) - 1.0) > PROB_TOL:
            raise ValueError(f"{name} probabilities must sum to 1")

    scenarios = []
    for i in range(len(wt_c)):
        for j in range(len(pv_c)):
            for m in range(len(load_c)):
                scenarios.append(Scenario(
                    wt_profile=wt_c[i],
                    pv_profile=pv_c[j],
                    load_profile=load_c[m],
                    probability=float(wt_p[i] * pv_p[j] * load_p[m]),
                ))
    return ScenarioSet(scenarios=tuple(scenarios), seed=seed)


def subsample(scenario_set: ScenarioSet, m: int, seed) -> ScenarioSet:
    """Pick m scenarios without replacement and renormalize their weights.

    Original ordering is preserved, so m == len(set) is an exact identity
    up to renormalization.
    """
    n = len(scenario_set)
    if not 1 <= m <= n:
        raise ValueError(f"m must be in [1, {n}], got {m}")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(n, size=m, replace=False))
    picked = [scenario_set.scenarios[i] for i in idx]
    total = sum(s.probability for s in picked)
    scenarios = tuple(
        Scenario(s.wt_profile, s.pv_profile, s.load_profile, s.probability / total)
        for s in picked
    )
    return ScenarioSet(scenarios=scenarios, seed=scenario_set.seed)


# --- flat-file round trip ---------------------------------------------------

def write_csv(scenario_set: ScenarioSet, path) -> None:
    """One row per scenario: wt_0..wt_{H-1}, pv_0.., load_0.., probability."""
    n_hours = scenario_set.scenarios[0].n_hours
    header = ([f"wt_{h}" for h in range(n_hours)]
              + [f"pv_{h}" for h in range(n_hours)]
              + [f"load_{h}" for h in range(n_hours)]
              + ["probability"])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for s in scenario_set:
            # python float repr round-trips exactly
            row = ([repr(float(x)) for x in s.wt_profile]
                   + [repr(float(x)) for x in s.pv_profile]
                   + [repr(float(x)) for x in s.load_profile]
                   + [repr(float(s.probability))])
            writer.writerow(row)


def read_csv(path) -> ScenarioSet:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        n_hours = sum(1 for c in header if c.startswith("wt_"))
        scenarios = []
        for row in reader:
            vals = [float(x) for x in row]
            scenarios.append(Scenario(
                wt_profile=np.array(vals[:n_hours]),
                pv_profile=np.array(vals[n_hours:2 * n_hours]),
                load_profile=np.array(vals[2 * n_hours:3 * n_hours]),
                probability=vals[-1],
            ))
    return ScenarioSet(scenarios=tuple(scenarios))


def write_json(scenario_set: ScenarioSet, path) -> None:
    doc = {
        "seed": scenario_set.seed,
        "scenarios": [
            {
                "wt": list(s.wt_profile),
                "pv": list(s.pv_profile),
                "load": list(s.load_profile),
                "probability": s.probability,
            }
            for s in scenario_set
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def read_json(path) -> ScenarioSet:
    with open(path) as fh:
        doc = json.load(fh)
    scenarios = tuple(
        Scenario(np.array(s["wt"]), np.array(s["pv"]), np.array(s["load"]),
                 s["probability"])
        for s in doc["scenarios"]
    )
    return ScenarioSet(scenarios=scenarios, seed=doc.get("seed"))
