"""Synthetic replicate data and the calibration / discrimination experiments.

Each signal draws a component label, a latent value shared by both replicates,
and independent per-replicate noise; the split of the component variance into
shared and independent parts is what sets the within-component correlation.
Latent values are pushed through a t5 probability integral transform and a
one-sided z-test so the resulting p-values are miscalibrated but rank-faithful.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dists
from .errors import DomainError
from .mixture import FitConfig, FitResult, fit
from .ranking import ScoredPairSet, rank_scores
from .selection import IdrTable, idr_table, select_at_idr
from .combine import fisher_statistics, stouffer_statistics

__all__ = [
    "SimComponent",
    "SimScenario",
    "SimDataset",
    "CalibrationRow",
    "CalibrationTable",
    "TradeoffRow",
    "TradeoffTable",
    "ScenarioReport",
    "scenario_report",
    "scenario_preset",
    "simulate_dataset",
    "fit_dataset",
    "calibration_experiment",
    "discrimination_experiment",
    "ranking_tradeoff",
    "correct_calls_at_incorrect",
]

NOMINAL_GRID = tuple(np.round(np.arange(1, 41) * 0.005, 3))
METHODS = ("idr", "rep1", "fisher", "stouffer")

# component index 1 is the genuine-signal component in every scenario
GENUINE = 1


@dataclass(frozen=True)
class SimComponent:
    pi: float
    mu: float
    rho: float
    sigma_sq: float = 1.0


@dataclass(frozen=True)
class SimScenario:
    components: tuple
    n: int
    seed: int
    label: str = ""

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        total = sum(c.pi for c in comps)
        if abs(total - 1.0) > 1e-9:
            raise DomainError(f"component proportions sum to {total}, not 1")
        c0 = comps[0]
        if not (c0.mu == 0.0 and c0.rho == 0.0 and c0.sigma_sq == 1.0):
            raise DomainError("component 0 must be the standard independent "
                              "noise component")
        for c in comps:
            if not (0.0 <= c.rho < 1.0):
                raise DomainError(f"rho must lie in [0, 1), got {c.rho}")


@dataclass(frozen=True)
class SimDataset:
    pvalues1: np.ndarray
    pvalues2: np.ndarray
    truth: np.ndarray

    @property
    def n(self) -> int:
        return int(self.truth.size)

    def scores(self) -> ScoredPairSet:
        """Higher-is-better scores for the copula mixture fit."""
        return ScoredPairSet(-self.pvalues1, -self.pvalues2)


_PRESETS = {
    "S1": (SimComponent(0.35, 0.0, 0.0), SimComponent(0.65, 2.5, 0.84)),
    "S2": (SimComponent(0.70, 0.0, 0.0), SimComponent(0.30, 2.5, 0.40)),
    "S3": (SimComponent(0.95, 0.0, 0.0), SimComponent(0.05, 2.5, 0.84)),
    "S4": (SimComponent(0.28, 0.0, 0.0), SimComponent(0.65, 3.0, 0.84),
           SimComponent(0.07, 0.0, 0.64)),
}


def scenario_preset(name: str, n: int = 10000, seed: int = 0) -> SimScenario:
    """One of the four benchmark parameterizations S1-S4."""
    try:
        comps = _PRESETS[name]
    except KeyError:
        raise DomainError(f"unknown scenario {name!r}; expected one of "
                          f"{sorted(_PRESETS)}") from None
    return SimScenario(components=comps, n=n, seed=seed, label=name)


def _marginal_mixture_cdf(z: np.ndarray, scenario: SimScenario) -> np.ndarray:
    out = np.zeros_like(z, dtype=float)
    for c in scenario.components:
        out += c.pi * dists.normal_cdf((z - c.mu) / np.sqrt(c.sigma_sq))
    return out


def simulate_dataset(scenario: SimScenario) -> SimDataset:
    """Draw one paired dataset; identical seeds give bit-identical output."""
    rng = np.random.default_rng(scenario.seed)
    n = scenario.n
    pis = np.array([c.pi for c in scenario.components])
    truth = rng.choice(len(scenario.components), size=n, p=pis)

    mus = np.array([c.mu for c in scenario.components])[truth]
    sig2 = np.array([c.sigma_sq for c in scenario.components])[truth]
    rhos = np.array([c.rho for c in scenario.components])[truth]
    tau = np.sqrt(rhos * sig2)        # shared part
    omega = np.sqrt((1.0 - rhos) * sig2)  # replicate-specific part

    latent = mus + tau * rng.standard_normal(n)
    z1 = latent + omega * rng.standard_normal(n)
    z2 = latent + omega * rng.standard_normal(n)

    def to_pvalue(z: np.ndarray) -> np.ndarray:
        u = np.clip(_marginal_mixture_cdf(z, scenario), 1e-15, 1.0 - 1e-15)
        x = dists.t5_quantile(u)
        # survival form keeps small p-values exact
        p = dists.normal_cdf(-x)
        return np.clip(p, 1e-300, 1.0 - 1e-16)

    return SimDataset(pvalues1=to_pvalue(z1), pvalues2=to_pvalue(z2),
                      truth=truth)


def fit_dataset(data: SimDataset, config: FitConfig | None = None,
                threads: int = 1) -> tuple[FitResult, IdrTable]:
    """Rank-transform, fit the copula mixture, and build the idr table."""
    ranked = rank_scores(data.scores())
    result = fit(ranked, config, threads=threads)
    return result, idr_table(ranked, result.theta)


@dataclass(frozen=True)
class CalibrationRow:
    method: str
    nominal: float
    empirical_fdr: float
    n_selected: float


@dataclass(frozen=True)
class CalibrationTable:
    scenario: str
    n_reps: int
    rows: tuple


@dataclass(frozen=True)
class TradeoffRow:
    method: str
    rep: int
    threshold: float
    incorrect: int
    correct: int


@dataclass(frozen=True)
class TradeoffTable:
    scenario: str
    n_reps: int
    rows: tuple


def _baseline_pvalues(data: SimDataset) -> dict:
    return {
        "rep1": data.pvalues1,
        "fisher": fisher_statistics(data.pvalues1, data.pvalues2),
        "stouffer": stouffer_statistics(data.pvalues1, data.pvalues2),
    }


def _replicate_runs(scenario: SimScenario, n_reps: int,
                    fit_config: FitConfig | None, threads: int = 1):
    for rep in range(n_reps):
        rep_scenario = SimScenario(scenario.components, scenario.n,
                                   scenario.seed + rep, scenario.label)
        data = simulate_dataset(rep_scenario)
        config = fit_config if fit_config is not None else FitConfig()
        config = FitConfig(**{**config.__dict__,
                              "rng_seed": config.rng_seed + rep})
        result, table = fit_dataset(data, config, threads=threads)
        yield rep, data, result, table


def calibration_experiment(scenario: SimScenario, n_reps: int,
                           nominal_levels=NOMINAL_GRID,
                           fit_config: FitConfig | None = None,
                           threads: int = 1) -> CalibrationTable:
    """Empirical FDR at each nominal level, averaged over replicate datasets.

    The idr method selects by cumulative IDR; the baselines select by
    BH-adjusted p-values.  A signal counts as false whenever its true
    component is not the genuine one.
    """
    if n_reps < 1:
        raise DomainError("n_reps must be >= 1")
    levels = [float(a) for a in nominal_levels]
    fdr_acc = {(m, a): [] for m in METHODS for a in levels}
    sel_acc = {(m, a): [] for m in METHODS for a in levels}

    for _, data, _, table in _replicate_runs(scenario, n_reps, fit_config,
                                             threads):
        false_mask = data.truth != GENUINE
        adjusted = {m: dists.bh_adjust(p)
                    for m, p in _baseline_pvalues(data).items()}
        for alpha in levels:
            n_sel = select_at_idr(table, alpha) if alpha > 0 else 0
            sel_idx = table.original_index[:n_sel]
            fdr_acc[("idr", alpha)].append(_fdr(false_mask, sel_idx))
            sel_acc[("idr", alpha)].append(n_sel)
            for m, adj in adjusted.items():
                sel = np.nonzero(adj <= alpha)[0]
                fdr_acc[(m, alpha)].append(_fdr(false_mask, sel))
                sel_acc[(m, alpha)].append(sel.size)

    rows = tuple(
        CalibrationRow(m, a, float(np.mean(fdr_acc[(m, a)])),
                       float(np.mean(sel_acc[(m, a)])))
        for m in METHODS for a in levels)
    return CalibrationTable(scenario.label, n_reps, rows)


def _fdr(false_mask: np.ndarray, selected: np.ndarray) -> float:
    if selected.size == 0:
        return 0.0
    return float(np.count_nonzero(false_mask[selected])) / selected.size


def discrimination_experiment(scenario: SimScenario, n_reps: int,
                              thresholds=NOMINAL_GRID,
                              fit_config: FitConfig | None = None,
                              threads: int = 1) -> TradeoffTable:
    """(incorrect, correct) call counts at each threshold, per method and
    replicate dataset.

    For the idr method a signal is called when its local idr is below the
    threshold; for the baselines, when its BH-adjusted p-value is below the
    threshold.  A call is correct when the signal's true component is the
    genuine one.
    """
    if n_reps < 1:
        raise DomainError("n_reps must be >= 1")
    rows = []
    for rep, data, _, table in _replicate_runs(scenario, n_reps, fit_config,
                                               threads):
        genuine = data.truth == GENUINE
        per_signal_idr = np.empty(data.n)
        per_signal_idr[table.original_index] = table.local_idr
        stats = {"idr": per_signal_idr}
        stats.update({m: dists.bh_adjust(p)
                      for m, p in _baseline_pvalues(data).items()})
        for thr in thresholds:
            for m, values in stats.items():
                called = values < thr
                rows.append(TradeoffRow(
                    m, rep, float(thr),
                    incorrect=int(np.count_nonzero(called & ~genuine)),
                    correct=int(np.count_nonzero(called & genuine))))
    return TradeoffTable(scenario.label, n_reps, tuple(rows))


@dataclass(frozen=True)
class ScenarioReport:
    """Everything the simulate CLI emits, from a single pass over the reps."""

    scenario: str
    n_reps: int
    fit_rows: tuple  # (rep, pi1, mu1, sigma1_sq, rho1, loglik, converged)
    calibration: CalibrationTable
    tradeoff: TradeoffTable


def scenario_report(scenario: SimScenario, n_reps: int,
                    nominal_levels=NOMINAL_GRID,
                    fit_config: FitConfig | None = None,
                    threads: int = 1) -> ScenarioReport:
    """Fit each replicate dataset once and derive the parameter summary,
    calibration table, and trade-off table from the shared fits."""
    if n_reps < 1:
        raise DomainError("n_reps must be >= 1")
    levels = [float(a) for a in nominal_levels]
    fit_rows = []
    trade_rows = []
    fdr_acc = {(m, a): [] for m in METHODS for a in levels}
    sel_acc = {(m, a): [] for m in METHODS for a in levels}
    for rep, data, result, table in _replicate_runs(scenario, n_reps,
                                                    fit_config, threads):
        th = result.theta
        fit_rows.append((rep, th.pi1, th.mu1, th.sigma1_sq, th.rho1,
                         result.loglik, result.converged))
        false_mask = data.truth != GENUINE
        genuine = ~false_mask
        adjusted = {m: dists.bh_adjust(p)
                    for m, p in _baseline_pvalues(data).items()}
        per_signal_idr = np.empty(data.n)
        per_signal_idr[table.original_index] = table.local_idr
        stats = {"idr": per_signal_idr, **adjusted}
        for alpha in levels:
            n_sel = select_at_idr(table, alpha) if alpha > 0 else 0
            sel_idx = table.original_index[:n_sel]
            fdr_acc[("idr", alpha)].append(_fdr(false_mask, sel_idx))
            sel_acc[("idr", alpha)].append(n_sel)
            for m, adj in adjusted.items():
                sel = np.nonzero(adj <= alpha)[0]
                fdr_acc[(m, alpha)].append(_fdr(false_mask, sel))
                sel_acc[(m, alpha)].append(sel.size)
            for m, values in stats.items():
                called = values < alpha
                trade_rows.append(TradeoffRow(
                    m, rep, alpha,
                    incorrect=int(np.count_nonzero(called & false_mask)),
                    correct=int(np.count_nonzero(called & genuine))))
    calibration = CalibrationTable(
        scenario.label, n_reps,
        tuple(CalibrationRow(m, a, float(np.mean(fdr_acc[(m, a)])),
                             float(np.mean(sel_acc[(m, a)])))
              for m in METHODS for a in levels))
    tradeoff = TradeoffTable(scenario.label, n_reps, tuple(trade_rows))
    return ScenarioReport(scenario.label, n_reps, tuple(fit_rows),
                          calibration, tradeoff)


def ranking_tradeoff(statistic: np.ndarray, truth: np.ndarray):
    """Cumulative (incorrect, correct) counts along the ascending ranking of
    a per-signal statistic (smaller means more confidently called)."""
    order = np.argsort(statistic, kind="stable")
    genuine = (truth[order] == GENUINE)
    correct = np.cumsum(genuine)
    incorrect = np.cumsum(~genuine)
    return incorrect, correct


def correct_calls_at_incorrect(statistic: np.ndarray, truth: np.ndarray,
                               target_incorrect: int) -> int:
    """Correct calls made just before the (target+1)-th incorrect call."""
    incorrect, correct = ranking_tradeoff(statistic, truth)
    admissible = np.nonzero(incorrect <= target_incorrect)[0]
    return int(correct[admissible[-1]]) if admissible.size else 0
