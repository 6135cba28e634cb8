"""Per-column pre-transformations: a shifted Box-Cox step fitted by maximum
likelihood, then a signed piecewise power step fitted by coordinate descent
against a quantile-gap normality criterion. Both steps are exactly invertible
and bracketed by two-standard-deviation scaling.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import grad_core as gc
from .data_model import (
    Dataset,
    ScalingParams,
    column_stats,
    destandardize,
    quantile,
    standardize,
)


@dataclass(frozen=True)
class BoxCoxParams:
    lambda1: float
    lambda2: float = 0.0


@dataclass(frozen=True)
class PowerParams:
    alpha: float = 0.0
    beta1: float = -1.0
    beta2: float = 1.0
    rho: float = 1.0

    def validate(self):
        if not (self.beta1 < 0.0 < self.beta2 and self.rho > 0.0):
            raise ValueError(
                f"invalid power params: beta1={self.beta1}, beta2={self.beta2}, "
                f"rho={self.rho} (need beta1<0<beta2, rho>0)"
            )


def boxcox_forward(y: np.ndarray, p: BoxCoxParams) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    shifted = y + p.lambda2
    if np.any(shifted <= 0):
        i = int(np.argmax(shifted <= 0))
        raise ValueError(
            f"nonpositive shifted value {shifted.flat[i]} at index {i} "
            f"(lambda2={p.lambda2})"
        )
    if p.lambda1 == 0.0:
        return np.log(shifted)
    return (shifted**p.lambda1 - 1.0) / p.lambda1


def boxcox_inverse(t: np.ndarray, p: BoxCoxParams) -> np.ndarray:
    """Inverse Box-Cox with truncation: out-of-domain inputs are clamped so
    the result stays finite rather than raising."""
    t = np.asarray(t, dtype=float)
    if p.lambda1 == 0.0:
        return np.exp(t) - p.lambda2
    base = p.lambda1 * t + 1.0
    if p.lambda1 > 0.0:
        base = np.maximum(base, 0.0)
    else:
        # for negative lambda1 the limit at the domain edge diverges; a small
        # positive floor keeps the output finite
        base = np.maximum(base, 1e-6)
    return base ** (1.0 / p.lambda1) - p.lambda2


def fit_lambda2(y: np.ndarray) -> float:
    """Shift making the column strictly positive with a margin of 1% of sd."""
    y = np.asarray(y, dtype=float)
    delta = 0.01 * float(np.std(y))
    lo = float(np.min(y))
    if lo > delta:
        return 0.0
    return delta - lo


def boxcox_loglik(y: np.ndarray, lambda1: float, lambda2: float) -> float:
    """Profile log-likelihood of the transformed data under normality,
    including the Jacobian term."""
    y = np.asarray(y, dtype=float)
    t = boxcox_forward(y, BoxCoxParams(lambda1, lambda2))
    n = y.size
    var = float(np.var(t))
    if var <= 0:
        return -math.inf
    return -0.5 * n * math.log(var) + (lambda1 - 1.0) * float(np.sum(np.log(y + lambda2)))


@dataclass(frozen=True)
class LambdaFit:
    lambda1: float
    log_likelihood: float
    converged: bool


@dataclass(frozen=True)
class BoxCoxFitConfig:
    max_iter: int = 300
    learning_rate: float = 0.05
    tol: float = 1e-7
    bound: float = 5.0  # safety box for the optimizer, wider than any sane MLE


def fit_lambda1(y: np.ndarray, lambda2: float, config: BoxCoxFitConfig | None = None) -> LambdaFit:
    """Maximize the Box-Cox profile log-likelihood over lambda1 by adaptive
    gradient ascent from lambda1 = 1; returns the best iterate seen."""
    config = config or BoxCoxFitConfig()
    y = np.asarray(y, dtype=float)
    log_shifted = np.log(y + lambda2)
    if np.any(~np.isfinite(log_shifted)):
        raise ValueError("y + lambda2 must be strictly positive")
    n = y.size
    sum_log = float(np.sum(log_shifted))

    lam = gc.Tensor(1.0)
    opt = gc.Adam(config.learning_rate)
    best_lam, best_ll = 1.0, boxcox_loglik(y, 1.0, lambda2)
    converged = False
    for _ in range(config.max_iter):
        lam_prev = float(lam.value)
        # t = ((y + l2)^lam - 1) / lam, written via exp/log for a smooth graph
        t = (gc.exp(lam * log_shifted) - 1.0) / lam
        centered = t - gc.tmean(t)
        var = gc.tmean(centered**2)
        neg_ll = 0.5 * gc.log(var) - (lam - 1.0) * (sum_log / n)
        neg_ll.backward()
        opt.step([lam], [lam.grad])
        lam.value = np.clip(lam.value, -config.bound, config.bound)
        if abs(float(lam.value)) < 1e-9:
            lam.value = np.asarray(1e-9)
        ll = boxcox_loglik(y, float(lam.value), lambda2)
        if ll > best_ll:
            best_ll, best_lam = ll, float(lam.value)
        if abs(float(lam.value) - lam_prev) < config.tol:
            converged = True
            break
    return LambdaFit(lambda1=best_lam, log_likelihood=best_ll, converged=converged)


def power_forward(x: np.ndarray, p: PowerParams) -> np.ndarray:
    p.validate()
    x = np.asarray(x, dtype=float)
    s = np.where(x < p.alpha, p.beta1 * (p.alpha - x), p.beta2 * (x - p.alpha))
    return np.sign(s) * np.abs(s) ** p.rho


def power_inverse(t: np.ndarray, p: PowerParams) -> np.ndarray:
    p.validate()
    t = np.asarray(t, dtype=float)
    s = np.sign(t) * np.abs(t) ** (1.0 / p.rho)
    return np.where(s < 0, p.alpha - s / p.beta1, p.alpha + s / p.beta2)


def two_sigma_criterion(x: np.ndarray) -> float:
    """Sum of absolute deviations of four quantile gaps from the sample sd;
    near zero for normal-shaped data."""
    x = np.asarray(x, dtype=float)
    if x.size < 4:
        raise ValueError("need at least 4 observations")
    sd = float(np.std(x))
    if sd == 0.0:
        return 0.0
    q02, q16, med, q84, q98 = (quantile(x, p) for p in (0.02, 0.16, 0.5, 0.84, 0.98))
    return (
        abs(q84 - med - sd)
        + abs(med - q16 - sd)
        + abs(q16 - q02 - sd)
        + abs(q98 - q84 - sd)
    )


def bimodality_coefficient(x: np.ndarray) -> float:
    """(skewness^2 + 1) / kurtosis; 1/3 for a normal, 5/9 for a uniform."""
    stats = column_stats(x)
    if not math.isfinite(stats["skewness"]):
        raise ValueError("bimodality coefficient undefined for zero-variance data")
    return (stats["skewness"] ** 2 + 1.0) / stats["kurtosis"]


# -- differentiable pieces for the power fit ------------------------------


def _quantile_node(t: gc.Tensor, order: np.ndarray, p: float) -> gc.Tensor:
    """Linear-interpolated quantile with the sort order frozen at the current
    values (subgradient through the two active order statistics)."""
    n = order.size
    pos = (n - 1) * p
    lo = int(math.floor(pos))
    w = pos - lo
    a = gc.tsum(gc.gather(t, order[lo : lo + 1]))
    if w == 0.0:
        return a
    b = gc.tsum(gc.gather(t, order[lo + 1 : lo + 2]))
    return a * (1.0 - w) + b * w


def two_sigma_criterion_node(t: gc.Tensor) -> gc.Tensor:
    n = t.value.size
    order = np.argsort(t.value, kind="stable")
    sd = gc.sqrt(gc.tmean((t - gc.tmean(t)) ** 2))
    q02, q16, med, q84, q98 = (
        _quantile_node(t, order, p) for p in (0.02, 0.16, 0.5, 0.84, 0.98)
    )
    return (
        gc.absolute(q84 - med - sd)
        + gc.absolute(med - q16 - sd)
        + gc.absolute(q16 - q02 - sd)
        + gc.absolute(q98 - q84 - sd)
    )


def power_forward_node(
    x: np.ndarray, alpha: gc.Tensor, beta1: gc.Tensor, beta2: gc.Tensor, rho: gc.Tensor
) -> gc.Tensor:
    """Differentiable signed power map; the side split is frozen at the
    current alpha (piecewise-smooth subgradient)."""
    xt = gc.Tensor(x)
    below = x < float(alpha.value)
    s = gc.where(below, beta1 * (alpha - xt), beta2 * (xt - alpha))
    sgn = np.sign(s.value)
    abs_s = gc.clip(gc.absolute(s), 1e-300, np.inf)
    return gc.exp(rho * gc.log(abs_s)) * sgn


@dataclass(frozen=True)
class PowerFitConfig:
    rounds: int = 10  # outer coordinate-descent rounds
    epochs: int = 100  # gradient steps per parameter per round
    learning_rate: float = 0.01
    optimizer: str = "adam"
    eps: float = 1e-3  # projection margin keeping the map invertible


def fit_power_params(x: np.ndarray, config: PowerFitConfig | None = None) -> PowerParams:
    """Coordinate descent on the 2-sigma criterion, one parameter at a time in
    the order alpha, rho, beta1, beta2, starting from the identity map. The
    best parameters seen anywhere along the trajectory are returned."""
    config = config or PowerFitConfig()
    x = np.asarray(x, dtype=float)
    params = {
        "alpha": gc.Tensor(0.0),
        "rho": gc.Tensor(1.0),
        "beta1": gc.Tensor(-1.0),
        "beta2": gc.Tensor(1.0),
    }
    opts = {name: gc.make_optimizer(config.optimizer, config.learning_rate) for name in params}

    def current() -> PowerParams:
        return PowerParams(
            alpha=float(params["alpha"].value),
            beta1=float(params["beta1"].value),
            beta2=float(params["beta2"].value),
            rho=float(params["rho"].value),
        )

    def project():
        params["beta1"].value = np.minimum(params["beta1"].value, -config.eps)
        params["beta2"].value = np.maximum(params["beta2"].value, config.eps)
        params["rho"].value = np.maximum(params["rho"].value, config.eps)

    best = current()
    best_crit = two_sigma_criterion(x)
    for _ in range(config.rounds):
        for name in ("alpha", "rho", "beta1", "beta2"):
            target = params[name]
            for _ in range(config.epochs):
                crit = two_sigma_criterion_node(
                    power_forward_node(
                        x, params["alpha"], params["beta1"], params["beta2"], params["rho"]
                    )
                )
                if crit.item() < best_crit:
                    best_crit, best = crit.item(), current()
                crit.backward()
                g = target.grad if target.grad is not None else np.zeros_like(target.value)
                opts[name].step([target], [g])
                project()
    final = two_sigma_criterion(power_forward(x, current()))
    if final < best_crit:
        best_crit, best = final, current()
    return best


# -- per-column pipeline ---------------------------------------------------


@dataclass(frozen=True)
class ColumnTransform:
    boxcox: BoxCoxParams
    scale_a: ScalingParams
    power: PowerParams
    scale_b: ScalingParams


@dataclass(frozen=True)
class TransformModel:
    """Fitted per-column transforms for the continuous columns of a schema;
    binary columns pass through untouched."""

    columns: dict[str, ColumnTransform] = field(default_factory=dict)

    def covers(self, schema) -> bool:
        wanted = {c.name for c in schema if c.is_numericish}
        return wanted == set(self.columns)


@dataclass(frozen=True)
class TransformFitConfig:
    boxcox: BoxCoxFitConfig = field(default_factory=BoxCoxFitConfig)
    power: PowerFitConfig = field(default_factory=PowerFitConfig)


def fit_column_transform(y: np.ndarray, config: TransformFitConfig | None = None) -> ColumnTransform:
    config = config or TransformFitConfig()
    lambda2 = fit_lambda2(y)
    fit = fit_lambda1(y, lambda2, config.boxcox)
    bc = BoxCoxParams(lambda1=fit.lambda1, lambda2=lambda2)
    t = boxcox_forward(y, bc)
    scaled_a, scale_a = standardize(t)
    power = fit_power_params(scaled_a, config.power)
    transformed = power_forward(scaled_a, power)
    _, scale_b = standardize(transformed)
    return ColumnTransform(boxcox=bc, scale_a=scale_a, power=power, scale_b=scale_b)


def scaling_only_column(y: np.ndarray) -> ColumnTransform:
    """Degenerate transform used by the plain-VAE baseline: Box-Cox pinned to
    the linear case and an identity power map, so the whole chain reduces to
    two-standard-deviation scaling."""
    lambda2 = fit_lambda2(y)
    bc = BoxCoxParams(lambda1=1.0, lambda2=lambda2)
    scaled_a, scale_a = standardize(boxcox_forward(y, bc))
    _, scale_b = standardize(scaled_a)
    return ColumnTransform(boxcox=bc, scale_a=scale_a, power=PowerParams(), scale_b=scale_b)


def fit_transform_model(
    data: Dataset, config: TransformFitConfig | None = None, scaling_only: bool = False
) -> TransformModel:
    cols = {}
    for spec in data.columns:
        if not spec.is_numericish:
            continue
        y = data.column(spec.name)
        cols[spec.name] = (
            scaling_only_column(y) if scaling_only else fit_column_transform(y, config)
        )
    return TransformModel(columns=cols)


def forward_column(y: np.ndarray, ct: ColumnTransform) -> np.ndarray:
    t = boxcox_forward(y, ct.boxcox)
    t = (t - ct.scale_a.mean) / ct.scale_a.two_sd
    t = power_forward(t, ct.power)
    return (t - ct.scale_b.mean) / ct.scale_b.two_sd


def inverse_column(t: np.ndarray, ct: ColumnTransform) -> np.ndarray:
    x = destandardize(t, ct.scale_b)
    x = power_inverse(x, ct.power)
    x = destandardize(x, ct.scale_a)
    return boxcox_inverse(x, ct.boxcox)


def apply_forward(data: Dataset, model: TransformModel) -> Dataset:
    if not model.covers(data.columns):
        raise ValueError("transform model does not match the dataset schema")
    out = data.values.copy()
    for j, spec in enumerate(data.columns):
        if spec.is_numericish:
            out[:, j] = forward_column(data.values[:, j], model.columns[spec.name])
    return Dataset(columns=data.columns, values=out)


def apply_inverse(data: Dataset, model: TransformModel) -> Dataset:
    if not model.covers(data.columns):
        raise ValueError("transform model does not match the dataset schema")
    out = data.values.copy()
    for j, spec in enumerate(data.columns):
        if spec.is_numericish:
            col = inverse_column(data.values[:, j], model.columns[spec.name])
            if spec.kind == "integer_continuous":
                col = np.round(col)
            out[:, j] = col
    return Dataset(columns=data.columns, values=out)


# -- serialization --------------------------------------------------------


def model_to_dict(model: TransformModel) -> dict:
    return {
        name: {
            "lambda1": ct.boxcox.lambda1,
            "lambda2": ct.boxcox.lambda2,
            "scale_a": {"mean": ct.scale_a.mean, "two_sd": ct.scale_a.two_sd},
            "alpha": ct.power.alpha,
            "beta1": ct.power.beta1,
            "beta2": ct.power.beta2,
            "rho": ct.power.rho,
            "scale_b": {"mean": ct.scale_b.mean, "two_sd": ct.scale_b.two_sd},
        }
        for name, ct in model.columns.items()
    }


def model_from_dict(d: dict) -> TransformModel:
    cols = {}
    for name, rec in d.items():
        cols[name] = ColumnTransform(
            boxcox=BoxCoxParams(lambda1=rec["lambda1"], lambda2=rec["lambda2"]),
            scale_a=ScalingParams(**rec["scale_a"]),
            power=PowerParams(
                alpha=rec["alpha"], beta1=rec["beta1"], beta2=rec["beta2"], rho=rec["rho"]
            ),
            scale_b=ScalingParams(**rec["scale_b"]),
        )
    return TransformModel(columns=cols)


def save_model(model: TransformModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
        fh.write("\n")


def load_model(path) -> TransformModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
