"""Posterior summaries of ensemble predictions.

Member predictions are stacked along axis 0.  The posterior mean is their
average, the uncertainty is the sample standard deviation (N - 1
denominator), and the 95% band is the mean plus or minus 1.96 standard
deviations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientMembers

CI_MULTIPLIER_95 = 1.96


@dataclass(frozen=True)
class PosteriorSummary:
    mean: np.ndarray
    std: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    n_members: int
    multiplier: float = CI_MULTIPLIER_95

    @property
    def half_width(self) -> np.ndarray:
        return self.multiplier * self.std


def _stack(member_preds) -> np.ndarray:
    preds = np.asarray(member_preds, dtype=float)
    if preds.ndim == 0 or preds.shape[0] == 0 or preds.size == 0:
        raise InsufficientMembers("no member predictions")
    return preds


def posterior_mean(member_preds) -> np.ndarray:
    preds = _stack(member_preds)
    # shifting by the first member keeps agreeing members exact
    return preds[0] + (preds - preds[0]).mean(axis=0)


def posterior_std(member_preds) -> np.ndarray:
    preds = _stack(member_preds)
    if preds.shape[0] < 2:
        raise InsufficientMembers("sample standard deviation needs at least 2 members")
    mu = posterior_mean(preds)
    return np.sqrt(((preds - mu) ** 2).sum(axis=0) / (preds.shape[0] - 1))


def confidence_interval(mean, std, multiplier: float = CI_MULTIPLIER_95, n_members: int = 0) -> PosteriorSummary:
    if multiplier < 0:
        raise ValueError("multiplier must be non-negative")
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    half = multiplier * std
    return PosteriorSummary(mean, std, mean - half, mean + half, n_members, multiplier)


def summarize(member_preds, multiplier: float = CI_MULTIPLIER_95) -> PosteriorSummary:
    preds = _stack(member_preds)
    return confidence_interval(posterior_mean(preds), posterior_std(preds), multiplier, preds.shape[0])


def coverage(summary: PosteriorSummary, truth) -> np.ndarray:
    """Fraction of truth values inside the band, per output column."""
    truth = np.asarray(truth, dtype=float)
    inside = (truth >= summary.ci_low) & (truth <= summary.ci_high)
    return inside.reshape(-1, inside.shape[-1]).mean(axis=0)
