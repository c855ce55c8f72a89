"""Semi-synthetic score laws from a tabular applicant dataset.

Pipeline: read a comma-separated table, drop unusable rows, binarize the
sensitive attribute (``white`` -> group 1, anything else -> group 0),
standardize numeric features, fit a logistic regression by gradient ascent
and fit one Gaussian per group to the fitted logits.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
import tomli

from .distributions import fit_gaussian


@dataclass(frozen=True)
class IngestConfig:
    group_column: str = "race1"
    label_column: str = "pass_bar"
    feature_columns: tuple = ("lsat", "ugpa", "zfygpa", "zgpa", "fulltime", "fam_inc", "male", "tier")
    majority_values: tuple = ("white",)
    include_group_feature: bool = True
    l2: float = 1e-4
    tol: float = 1e-6
    max_iter: int = 10_000

    @classmethod
    def from_file(cls, path) -> "IngestConfig":
        with open(path, "rb") as fh:
            data = tomli.load(fh)
        data = data.get("ingest", data)
        kw = {}
        for key in cls.__dataclass_fields__:
            if key in data:
                val = data[key]
                kw[key] = tuple(str(v) for v in val) if isinstance(val, list) else val
        return cls(**kw)


@dataclass
class ApplicantRecords:
    """Preprocessed table: standardized features, group and label per row."""

    features: np.ndarray
    group: np.ndarray
    label: np.ndarray
    feature_names: list = field(default_factory=list)

    def __len__(self) -> int:
        return self.label.size


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray
    intercept: float
    iterations: int
    grad_norm: float

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.weights + self.intercept

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-self.decision_function(X)))


def preprocess(rows: pd.DataFrame, cfg: IngestConfig = IngestConfig()) -> ApplicantRecords:
    required = [cfg.group_column, cfg.label_column, *cfg.feature_columns]
    missing = [c for c in required if c not in rows.columns]
    if missing:
        raise ValueError(f"input is missing required columns: {missing}")
    df = rows[required].copy()
    for col in (cfg.label_column, *cfg.feature_columns):
        df[col] = pd.to_numeric(df[col], errors="coerce")
    df = df.replace([np.inf, -np.inf], np.nan).dropna()
    df = df[df[cfg.group_column].astype(str).str.strip() != ""]
    majority = {str(v).strip().lower() for v in cfg.majority_values}
    group = df[cfg.group_column].astype(str).str.strip().str.lower().isin(majority).astype(int)
    label = (df[cfg.label_column] > 0).astype(int)

    X = df[list(cfg.feature_columns)].to_numpy(dtype=float)
    names = list(cfg.feature_columns)
    if cfg.include_group_feature:
        X = np.column_stack([X, group.to_numpy(dtype=float)])
        names.append("group")
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    return ApplicantRecords((X - mu) / sd, group.to_numpy(), label.to_numpy(), names)


def _objective(w, b, X, y, l2):
    z = X @ w + b
    ll = np.mean(y * z - np.logaddexp(0.0, z))
    return ll - 0.5 * l2 * float(w @ w)


def log_likelihood_gradient(w, b, X, y, l2):
    """Gradient of the mean penalized log-likelihood (intercept unpenalized)."""
    z = X @ w + b
    resid = y - 1.0 / (1.0 + np.exp(-z))
    gw = X.T @ resid / y.size - l2 * w
    gb = resid.mean()
    return gw, gb


def fit_logistic(X: np.ndarray, y: np.ndarray, l2: float = 1e-4, tol: float = 1e-6,
                 max_iter: int = 10_000) -> LogisticModel:
    """Maximize the L2-penalized log-likelihood by gradient ascent.

    Steps are chosen by backtracking (Armijo) starting from the previous
    accepted step; the start point is zero, so the fit is deterministic.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if y.size < 2 or np.unique(y).size < 2:
        raise ValueError("need at least two records with both labels present")
    w = np.zeros(X.shape[1])
    b = 0.0
    step = 1.0
    f = _objective(w, b, X, y, l2)
    gw, gb = log_likelihood_gradient(w, b, X, y, l2)
    gnorm = float(np.sqrt(gw @ gw + gb * gb))
    it = 0
    while gnorm >= tol and it < max_iter:
        it += 1
        step = min(step * 2.0, 1e6)
        while True:
            w_new = w + step * gw
            b_new = b + step * gb
            f_new = _objective(w_new, b_new, X, y, l2)
            if f_new >= f + 0.5 * step * gnorm ** 2 or step < 1e-12:
                break
            step *= 0.5
        w, b, f = w_new, b_new, f_new
        gw, gb = log_likelihood_gradient(w, b, X, y, l2)
        gnorm = float(np.sqrt(gw @ gw + gb * gb))
    return LogisticModel(w, float(b), it, gnorm)


def extract_score_distributions(records: ApplicantRecords, model: LogisticModel) -> tuple:
    """Per-group Gaussians fitted to the logit scores (group 0 first)."""
    scores = model.decision_function(records.features)
    out = []
    for g in (0, 1):
        sel = scores[records.group == g]
        if sel.size < 2:
            raise ValueError(f"group {g} has fewer than two records")
        out.append(fit_gaussian(sel))
    return tuple(out)


def ingest_file(path, cfg: Optional[IngestConfig] = None) -> tuple:
    """Full pipeline on a CSV file; returns (group-0 Gaussian, group-1 Gaussian, model)."""
    cfg = cfg or IngestConfig()
    rows = pd.read_csv(Path(path))
    records = preprocess(rows, cfg)
    model = fit_logistic(records.features, records.label, cfg.l2, cfg.tol, cfg.max_iter)
    d0, d1 = extract_score_distributions(records, model)
    return d0, d1, model
