"""Holdout evaluation: single regressor versus ensemble mean.

Metrics mirror the usual tabulation-surrogate battery: mean absolute error
per output, total absolute source-energy error grouped by flamelet key and
by axial-position bin, per-flamelet profiles with confidence bands, and an
ensemble-size sweep.  All errors are in physical units.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._io import atomic_write_text
from .dataset import TARGET_NAMES, EncodedSet
from .ensemble import EnsembleConfig, EnsembleModel, predict_members, train_members
from .errors import ConfigError, DimensionMismatch, TrainingError
from .network import Mlp, forward
from .plotting import Panel, render_svg
from .uncertainty import coverage, posterior_mean, summarize

SE = len(TARGET_NAMES) - 1
# Table order: source energy first, then the key species terms.
REPORT_ORDER = (SE,) + tuple(range(SE))
DEFAULT_BIN_EDGES = tuple(round(0.11 * i, 2) for i in range(10)) + (1.0,)
NEAR_BEST = 1.05
MODELS = ("single_model", "deep_ensemble")


def fmt(x: float) -> str:
    return f"{float(x):.16e}"


def winner(single: float, ensemble: float) -> str:
    if single == ensemble:
        return "tie"
    return "single_model" if single < ensemble else "deep_ensemble"


def mae_by_target(preds, truth) -> np.ndarray:
    preds = np.asarray(preds, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if preds.shape != truth.shape:
        raise DimensionMismatch(f"prediction shape {preds.shape} != truth shape {truth.shape}")
    if preds.ndim != 2 or len(preds) == 0:
        raise DimensionMismatch("expected a non-empty (M, k+1) matrix")
    return np.abs(preds - truth).mean(axis=0)


def mse_by_target(preds, truth) -> np.ndarray:
    return ((np.asarray(preds) - np.asarray(truth)) ** 2).mean(axis=0)


def total_abs_error_by_flamelet(holdout: EncodedSet, preds: dict, target: int = SE) -> dict:
    """Per flamelet key, the summed absolute error of each model on one output.

    Keys are ordered by the first model's total, largest first.
    """
    names = list(preds)
    totals = {}
    for key in np.unique(holdout.keys):
        rows = holdout.keys == key
        totals[float(key)] = {name: float(np.abs(preds[name][rows, target]
                                                 - holdout.targets[rows, target]).sum())
                              for name in names}
    first = names[0]
    return dict(sorted(totals.items(), key=lambda kv: (-kv[1][first], kv[0])))


def bin_index(x_pos, bin_edges=DEFAULT_BIN_EDGES) -> np.ndarray:
    """Half-open bins ``[lo, hi)``; the last bin also takes its upper edge."""
    edges = np.asarray(bin_edges, dtype=float)
    if edges.ndim != 1 or len(edges) < 2 or np.any(np.diff(edges) <= 0):
        raise ConfigError("bin edges must be strictly increasing")
    x = np.asarray(x_pos, dtype=float)
    if np.any((x < edges[0]) | (x > edges[-1])):
        raise ConfigError(f"x_pos outside [{edges[0]}, {edges[-1]}]")
    idx = np.searchsorted(edges, x, side="right") - 1
    return np.minimum(idx, len(edges) - 2)


def total_abs_error_by_xpos_bins(holdout: EncodedSet, preds: dict, bin_edges=DEFAULT_BIN_EDGES,
                                 target: int = SE) -> dict:
    """Map ``(lo, hi)`` -> per-model summed absolute error, in bin order."""
    edges = [float(e) for e in bin_edges]
    if edges[0] != 0.0 or edges[-1] != 1.0:
        raise ConfigError("bin edges must cover [0, 1]")
    idx = bin_index(holdout.x_pos, edges)
    out = {}
    for b in range(len(edges) - 1):
        rows = idx == b
        out[(edges[b], edges[b + 1])] = {
            name: float(np.abs(p[rows, target] - holdout.targets[rows, target]).sum())
            for name, p in preds.items()}
    return out


def jensen_terms(member_preds, truth) -> tuple[np.ndarray, np.ndarray]:
    """(MSE of the ensemble mean, average member MSE) per output column."""
    member_preds = np.asarray(member_preds, dtype=float)
    ens = mse_by_target(posterior_mean(member_preds), truth)
    members = posterior_mean([mse_by_target(p, truth) for p in member_preds])
    return ens, members


@dataclass
class EvaluationReport:
    mae: dict  # model name -> (k+1,) array, target column order
    by_flamelet: dict
    by_xpos: dict
    global_abs_error: dict  # model name -> total |S_e error| over the holdout
    ensemble_mse: np.ndarray
    mean_member_mse: np.ndarray
    coverage: np.ndarray
    metadata: dict = field(default_factory=dict)

    def mae_rows(self):
        for j in REPORT_ORDER:
            s, e = self.mae["single_model"][j], self.mae["deep_ensemble"][j]
            yield TARGET_NAMES[j], s, e, winner(s, e)

    def ensemble_wins(self) -> int:
        return sum(1 for *_, w in self.mae_rows() if w == "deep_ensemble")

    def partition_residuals(self) -> dict:
        """Relative gap between grouped totals and the global total, per grouping and model."""
        out = {}
        for group, table in (("flamelet", self.by_flamelet), ("xpos", self.by_xpos)):
            for name, total in self.global_abs_error.items():
                grouped = sum(row[name] for row in table.values())
                out[(group, name)] = abs(grouped - total) / max(abs(total), 1e-300)
        return out

    def mae_csv(self) -> str:
        lines = ["term,single_model,deep_ensemble,winner"]
        lines += [f"{t},{fmt(s)},{fmt(e)},{w}" for t, s, e, w in self.mae_rows()]
        return "\n".join(lines) + "\n"

    def by_flamelet_csv(self, top: int | None = None) -> str:
        lines = ["flamelet_key,single_model,deep_ensemble,winner"]
        for key, row in list(self.by_flamelet.items())[:top]:
            s, e = row["single_model"], row["deep_ensemble"]
            lines.append(f"{fmt(key)},{fmt(s)},{fmt(e)},{winner(s, e)}")
        return "\n".join(lines) + "\n"

    def by_xpos_csv(self, top: int | None = None) -> str:
        lines = ["bin_lo,bin_hi,single_model,deep_ensemble,winner"]
        for (lo, hi), row in list(self.by_xpos.items())[:top]:
            s, e = row["single_model"], row["deep_ensemble"]
            lines.append(f"{lo},{hi},{fmt(s)},{fmt(e)},{winner(s, e)}")
        return "\n".join(lines) + "\n"

    def uncertainty_csv(self) -> str:
        lines = ["term,coverage_95,ensemble_mse,mean_member_mse"]
        for j in REPORT_ORDER:
            lines.append(f"{TARGET_NAMES[j]},{fmt(self.coverage[j])},{fmt(self.ensemble_mse[j])},"
                         f"{fmt(self.mean_member_mse[j])}")
        return "\n".join(lines) + "\n"

    def write(self, out_dir, top: int | None = None) -> list[Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        files = {
            "report_mae.csv": self.mae_csv(),
            "report_by_flamelet.csv": self.by_flamelet_csv(top),
            "report_by_xpos.csv": self.by_xpos_csv(top),
            "report_uncertainty.csv": self.uncertainty_csv(),
        }
        for name, text in files.items():
            atomic_write_text(out_dir / name, text)
        return [out_dir / n for n in files]


def compare_models(single: Mlp, ens: EnsembleModel, holdout: EncodedSet,
                   bin_edges=DEFAULT_BIN_EDGES) -> EvaluationReport:
    """Score the single model and the ensemble mean on the same holdout."""
    single_fp = single.metadata.get("fingerprint")
    mismatch = single_fp is not None and single_fp != ens.fingerprint
    if mismatch:
        warnings.warn(f"single model fingerprint {single_fp} differs from ensemble {ens.fingerprint}")
    p_single = forward(single, holdout.inputs)
    members = predict_members(ens, holdout.inputs)
    summary = summarize(members)
    preds = {"single_model": p_single, "deep_ensemble": summary.mean}
    ens_mse, member_mse = jensen_terms(members, holdout.targets)
    return EvaluationReport(
        mae={name: mae_by_target(p, holdout.targets) for name, p in preds.items()},
        by_flamelet=total_abs_error_by_flamelet(holdout, preds),
        by_xpos=total_abs_error_by_xpos_bins(holdout, preds, bin_edges),
        global_abs_error={name: float(np.abs(p[:, SE] - holdout.targets[:, SE]).sum())
                          for name, p in preds.items()},
        ensemble_mse=ens_mse,
        mean_member_mse=member_mse,
        coverage=coverage(summary, holdout.targets),
        metadata={
            "strategy": ens.config.strategy.value,
            "n_members": ens.n_members,
            "ensemble_seed": ens.config.seed,
            "single_seed": single.metadata.get("train_config", {}).get("seed"),
            "ensemble_fingerprint": ens.fingerprint,
            "single_fingerprint": single_fp,
            "fingerprint_mismatch": mismatch,
            "n_holdout_points": len(holdout),
            "n_holdout_flamelets": len(np.unique(holdout.keys)),
        },
    )


# --------------------------------------------------------------------------
# Ensemble-size sweep
# --------------------------------------------------------------------------

@dataclass
class AblationResult:
    n_values: list[int]
    mae: np.ndarray  # (len(n_values), k+1), target column order
    chosen_n: int
    strategy: str
    seed: int

    def curves(self) -> dict:
        """Per-target MAE as a function of ensemble size, report order."""
        return {TARGET_NAMES[j]: self.mae[:, j] for j in REPORT_ORDER}

    def to_csv(self) -> str:
        names = [TARGET_NAMES[j] for j in REPORT_ORDER]
        lines = ["n_members,strategy,seed," + ",".join(f"mae_{n}" for n in names) + ",chosen"]
        for row, n in enumerate(self.n_values):
            vals = ",".join(fmt(self.mae[row, j]) for j in REPORT_ORDER)
            lines.append(f"{n},{self.strategy},{self.seed},{vals},{int(n == self.chosen_n)}")
        return "\n".join(lines) + "\n"

    def to_svg(self) -> str:
        x = np.asarray(self.n_values, dtype=float)
        panels = [Panel(name, x, [("holdout MAE", curve)], xlabel="ensemble size N")
                  for name, curve in self.curves().items()]
        return render_svg(panels, columns=4)


def select_n(n_values, mae: np.ndarray, near_best: float = NEAR_BEST, atol: float = 1e-9) -> int:
    """Smallest N with the most targets whose MAE is within 5% of that target's best.

    Gaps below ``atol`` count as ties, so round-off on an already exact fit
    does not pick a winner.
    """
    mae = np.asarray(mae, dtype=float)
    near = mae <= near_best * mae.min(axis=0) + atol
    counts = near.sum(axis=1)
    return int(list(n_values)[int(np.argmax(counts))])


def ablation_study(train_val: EncodedSet, holdout: EncodedSet, cfg: EnsembleConfig,
                   n_range=range(2, 13), threads: int = 1) -> AblationResult:
    """Holdout MAE of the ensemble mean for every size in ``n_range``.

    Member ``i`` does not depend on the ensemble size, so the largest
    ensemble is trained once and every smaller N uses its first N members.
    """
    n_values = sorted(set(int(n) for n in n_range))
    if not n_values:
        raise ConfigError("n_range is empty")
    if n_values[0] < 2:
        raise ConfigError("ensemble sizes start at 2")
    n_max = n_values[-1]
    cfg_max = EnsembleConfig(n_max, cfg.strategy, cfg.sample_fraction, cfg.with_replacement, cfg.base, cfg.seed)
    try:
        members = [m for m, _ in train_members(train_val, cfg_max, range(n_max), threads)]
    except TrainingError as exc:
        raise TrainingError(f"ablation N={n_max}: {exc}", member=exc.member, n_members=n_max) from exc
    preds = np.stack([forward(m, holdout.inputs) for m in members])
    mae = np.stack([mae_by_target(posterior_mean(preds[:n]), holdout.targets) for n in n_values])
    return AblationResult(n_values, mae, select_n(n_values, mae), cfg.strategy.value, cfg.seed)


# --------------------------------------------------------------------------
# Per-flamelet profiles
# --------------------------------------------------------------------------

@dataclass
class FlameletProfile:
    key: float
    x_pos: np.ndarray
    truth: np.ndarray
    single: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray

    def __len__(self) -> int:
        return len(self.x_pos)

    def to_csv(self) -> str:
        cols = ["x_pos"]
        for j in REPORT_ORDER:
            n = TARGET_NAMES[j]
            cols += [f"truth_{n}", f"single_{n}", f"mean_{n}", f"std_{n}", f"ci_low_{n}", f"ci_high_{n}"]
        lines = [",".join(cols)]
        for i in range(len(self)):
            vals = [fmt(self.x_pos[i])]
            for j in REPORT_ORDER:
                vals += [fmt(a[i, j]) for a in (self.truth, self.single, self.mean, self.std,
                                                 self.ci_low, self.ci_high)]
            lines.append(",".join(vals))
        return "\n".join(lines) + "\n"

    def to_svg(self) -> str:
        panels = [Panel(TARGET_NAMES[j], self.x_pos,
                        [("truth", self.truth[:, j]), ("single model", self.single[:, j]),
                         ("ensemble mean", self.mean[:, j])],
                        band=(self.ci_low[:, j], self.ci_high[:, j]), xlabel="x_pos")
                  for j in REPORT_ORDER]
        return render_svg(panels, columns=4,
                          legend=["truth", "single model", "ensemble mean (95% band)"])


def flamelet_profile_report(ens: EnsembleModel, single: Mlp, flamelet: EncodedSet) -> FlameletProfile:
    """Truth, single prediction and ensemble band along one flamelet."""
    keys = np.unique(flamelet.keys)
    if len(keys) != 1:
        raise ConfigError("profile needs the points of exactly one flamelet")
    order = np.argsort(flamelet.x_pos, kind="stable")
    pts = flamelet.subset(order)
    summary = summarize(predict_members(ens, pts.inputs))
    return FlameletProfile(float(keys[0]), pts.x_pos, pts.targets, forward(single, pts.inputs),
                           summary.mean, summary.std, summary.ci_low, summary.ci_high)
