"""Frobenius loss and PRIAL aggregation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UndefinedPrialError


def frobenius_loss(estimate: np.ndarray, truth_inv: np.ndarray) -> float:
    """Squared Frobenius distance between an estimate and the true precision."""
    estimate = np.asarray(estimate, dtype=float)
    truth_inv = np.asarray(truth_inv, dtype=float)
    if estimate.shape != truth_inv.shape:
        raise ValueError(f"shape mismatch: {estimate.shape} vs {truth_inv.shape}")
    diff = estimate - truth_inv
    return float(np.sum(diff * diff))


def prial(mean_loss_estimator: float, mean_loss_baseline: float) -> float:
    """Percentage relative improvement in average loss over the baseline."""
    if not mean_loss_baseline > 0.0:
        raise UndefinedPrialError(
            f"PRIAL undefined: baseline mean loss must be positive, got {mean_loss_baseline}"
        )
    return (1.0 - mean_loss_estimator / mean_loss_baseline) * 100.0


@dataclass(frozen=True)
class EstimatorSummary:
    estimator_id: str
    mean_loss: float
    prial_percent: float
    replications: int
    mean_alpha: float
    mean_beta: float
    status: str = "ok"
    reason: str = ""


@dataclass(frozen=True)
class PrialReport:
    """Per-estimator average losses and PRIALs for one grid point (p, n)."""

    p: int
    n: int
    ratio: float
    baseline_id: str
    summaries: tuple[EstimatorSummary, ...]

    def summary(self, estimator_id: str) -> EstimatorSummary:
        for entry in self.summaries:
            if entry.estimator_id == estimator_id:
                return entry
        raise KeyError(estimator_id)


def summarize_replications(
    p: int,
    n: int,
    ratio: float,
    baseline_id: str,
    order: list[str],
    losses: dict[str, np.ndarray],
    weights: dict[str, tuple[np.ndarray, np.ndarray]],
    skipped: dict[str, str],
) -> PrialReport:
    """Reduce per-replication losses into a PrialReport.

    ``order`` fixes the row order; skipped estimators get NaN numerics and a
    reason. The aggregation is an ordered reduction, so results do not depend
    on how the replication phase was parallelized.
    """
    if baseline_id not in losses:
        raise ValueError(f"baseline estimator {baseline_id!r} was not evaluated")
    baseline_mean = float(np.mean(losses[baseline_id]))
    summaries = []
    for estimator_id in order:
        if estimator_id in skipped:
            summaries.append(
                EstimatorSummary(
                    estimator_id=estimator_id,
                    mean_loss=math.nan,
                    prial_percent=math.nan,
                    replications=0,
                    mean_alpha=math.nan,
                    mean_beta=math.nan,
                    status="skipped",
                    reason=skipped[estimator_id],
                )
            )
            continue
        loss_array = losses[estimator_id]
        mean_loss = float(np.mean(loss_array))
        if estimator_id in weights:
            alphas, betas = weights[estimator_id]
            mean_alpha = float(np.mean(alphas))
            mean_beta = float(np.mean(betas))
        else:
            mean_alpha = math.nan
            mean_beta = math.nan
        summaries.append(
            EstimatorSummary(
                estimator_id=estimator_id,
                mean_loss=mean_loss,
                prial_percent=prial(mean_loss, baseline_mean),
                replications=int(loss_array.size),
                mean_alpha=mean_alpha,
                mean_beta=mean_beta,
            )
        )
    return PrialReport(p=p, n=n, ratio=ratio, baseline_id=baseline_id, summaries=tuple(summaries))
