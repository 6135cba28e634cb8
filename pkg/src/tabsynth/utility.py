"""Propensity-score utility: merge original and synthetic rows, fit a CART
propensity model, and report the pMSE statistic with its permutation null.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .data_model import BINARY, Dataset, column_stats
from .transform import bimodality_coefficient
from .tree import fit_cart, predict_proba_batch


@dataclass(frozen=True)
class CartParams:
    min_leaf: int = 20
    max_depth: int = 25


@dataclass(frozen=True)
class UtilityReport:
    pmse: float
    c: float
    null_mean: float
    null_sd: float
    pmse_ratio: float
    ratio_degenerate: bool
    n_orig: int
    n_syn: int
    n_perm: int
    marginals: dict = field(default_factory=dict)


def _check_schemas(original: Dataset, synthetic: Dataset) -> None:
    if original.columns != synthetic.columns:
        raise ValueError("original and synthetic schemas differ")


def _merged(original: Dataset, synthetic: Dataset):
    features = np.vstack([original.values, synthetic.values])
    labels = np.concatenate(
        [np.zeros(original.n), np.ones(synthetic.n)]
    )
    return features, labels


def _pmse_of(features, labels, params: CartParams) -> float:
    tree = fit_cart(features, labels, min_leaf=params.min_leaf, max_depth=params.max_depth)
    probs = predict_proba_batch(tree, features)
    c = labels.mean()
    return float(np.mean((probs - c) ** 2))


def pmse(
    original: Dataset, synthetic: Dataset, params: CartParams | None = None, seed=None
) -> tuple[float, float]:
    """In-sample propensity mean-squared error and the synthetic fraction c."""
    _check_schemas(original, synthetic)
    params = params or CartParams()
    features, labels = _merged(original, synthetic)
    return _pmse_of(features, labels, params), float(labels.mean())


def pmse_ratio(
    original: Dataset,
    synthetic: Dataset,
    params: CartParams | None = None,
    n_perm: int = 100,
    seed=0,
) -> UtilityReport:
    """pMSE relative to its permutation-estimated null expectation.

    The null refits the tree on label permutations of the same merged data;
    values near 1 mean the synthetic data is indistinguishable from
    sampling noise.
    """
    _check_schemas(original, synthetic)
    if n_perm < 2:
        raise ValueError("need at least 2 permutations")
    params = params or CartParams()
    features, labels = _merged(original, synthetic)
    observed = _pmse_of(features, labels, params)
    rng = np.random.default_rng(seed)
    null = np.array(
        [_pmse_of(features, rng.permutation(labels), params) for _ in range(n_perm)]
    )
    null_mean = float(null.mean())
    null_sd = float(null.std(ddof=1))
    degenerate = null_mean == 0.0
    ratio = float("inf") if degenerate else observed / null_mean
    return UtilityReport(
        pmse=observed,
        c=float(labels.mean()),
        null_mean=null_mean,
        null_sd=null_sd,
        pmse_ratio=ratio,
        ratio_degenerate=degenerate,
        n_orig=original.n,
        n_syn=synthetic.n,
        n_perm=n_perm,
        marginals=_marginal_summaries(original, synthetic),
    )


def _marginal_summaries(original: Dataset, synthetic: Dataset) -> dict:
    out = {}
    for spec in original.columns:
        xo = original.column(spec.name)
        xs = synthetic.column(spec.name)
        if spec.kind == BINARY:
            out[spec.name] = {
                "kind": spec.kind,
                "freq_orig": float(xo.mean()),
                "freq_syn": float(xs.mean()),
            }
        else:
            out[spec.name] = {
                "kind": spec.kind,
                "orig": _cont_summary(xo),
                "syn": _cont_summary(xs),
            }
    return out


def _cont_summary(x: np.ndarray) -> dict:
    stats = column_stats(x)
    try:
        bc = bimodality_coefficient(x)
    except ValueError:
        bc = float("nan")
    return {
        "mean": stats["mean"],
        "sd": stats["sd"],
        "skewness": stats["skewness"],
        "kurtosis": stats["kurtosis"],
        "bimodality": bc,
        "min": stats["min"],
        "max": stats["max"],
    }


def marginal_report(original: Dataset, synthetic: Dataset, bins: int = 30) -> dict:
    """Shared-bin histograms plus moment summaries per variable, for
    external plotting."""
    _check_schemas(original, synthetic)
    out = {}
    for spec in original.columns:
        xo = original.column(spec.name)
        xs = synthetic.column(spec.name)
        pooled_min = min(xo.min(), xs.min())
        pooled_max = max(xo.max(), xs.max())
        if pooled_min == pooled_max:
            pooled_max = pooled_min + 1.0
        edges = np.linspace(pooled_min, pooled_max, bins + 1)
        count_o, _ = np.histogram(xo, bins=edges)
        count_s, _ = np.histogram(xs, bins=edges)
        entry = {
            "kind": spec.kind,
            "bin_edges": edges.tolist(),
            "count_orig": count_o.tolist(),
            "count_syn": count_s.tolist(),
        }
        entry.update(_marginal_summaries_single(spec, xo, xs))
        out[spec.name] = entry
    return out


def _marginal_summaries_single(spec, xo, xs):
    if spec.kind == BINARY:
        return {"freq_orig": float(xo.mean()), "freq_syn": float(xs.mean())}
    return {"orig": _cont_summary(xo), "syn": _cont_summary(xs)}


def report_to_dict(report: UtilityReport) -> dict:
    d = {
        "pmse": report.pmse,
        "c": report.c,
        "null_mean": report.null_mean,
        "null_sd": report.null_sd,
        "pmse_ratio": report.pmse_ratio,
        "ratio_degenerate": report.ratio_degenerate,
        "n_orig": report.n_orig,
        "n_syn": report.n_syn,
        "n_perm": report.n_perm,
        "marginals": report.marginals,
    }
    if report.ratio_degenerate:
        d["pmse_ratio"] = "inf"
    return d


def save_report(report: UtilityReport, path) -> None:
    with open(path, "w") as fh:
        json.dump(report_to_dict(report), fh, indent=2)
        fh.write("\n")


def save_marginal_csvs(report: dict, out_dir) -> list:
    """One CSV per variable: bin_left, bin_right, count_orig, count_syn."""
    import os

    paths = []
    os.makedirs(out_dir, exist_ok=True)
    for name, entry in report.items():
        path = os.path.join(out_dir, f"{name}.csv")
        edges = entry["bin_edges"]
        with open(path, "w") as fh:
            fh.write("bin_left,bin_right,count_orig,count_syn\n")
            for k in range(len(edges) - 1):
                fh.write(
                    f"{edges[k]!r},{edges[k + 1]!r},"
                    f"{entry['count_orig'][k]},{entry['count_syn'][k]}\n"
                )
        paths.append(path)
    return paths
