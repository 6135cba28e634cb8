"""Benchmark data generator: correlated mixed binary/continuous columns from
a latent Gaussian, plus a bimodal column driven by a binary treatment
indicator (N(0,1) under control, N(4,1) under treatment by default).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .data_model import BINARY, CONTINUOUS, INTEGER_CONTINUOUS, ColumnSpec, Dataset


@dataclass(frozen=True)
class MarginalSpec:
    name: str
    kind: str  # binary | gaussian | lognormal
    prevalence: float = 0.5
    mu: float = 0.0
    sigma: float = 1.0
    integer: bool = False

    def column_spec(self) -> ColumnSpec:
        if self.kind == "binary":
            return ColumnSpec(self.name, BINARY)
        return ColumnSpec(self.name, INTEGER_CONTINUOUS if self.integer else CONTINUOUS)


@dataclass(frozen=True)
class BimodalSpec:
    name: str
    driver: str  # name of the binary column switching the component
    mean0: float = 0.0
    sd0: float = 1.0
    mean1: float = 4.0
    sd1: float = 1.0


@dataclass(frozen=True)
class SimConfig:
    n: int
    marginals: tuple[MarginalSpec, ...]
    bimodal: BimodalSpec
    correlation: np.ndarray = field(repr=False)
    seed: int = 0

    def __post_init__(self):
        corr = np.asarray(self.correlation, dtype=float)
        object.__setattr__(self, "correlation", corr)
        object.__setattr__(self, "marginals", tuple(self.marginals))
        d = len(self.marginals)
        if corr.shape != (d, d):
            raise ValueError("correlation matrix must match the marginal count")
        if not np.allclose(corr, corr.T) or not np.allclose(np.diag(corr), 1.0):
            raise ValueError("correlation must be symmetric with unit diagonal")
        for m in self.marginals:
            if m.kind == "binary" and not 0.0 < m.prevalence < 1.0:
                raise ValueError(f"prevalence of {m.name!r} outside (0, 1)")

    def schema(self) -> list[ColumnSpec]:
        cols = [m.column_spec() for m in self.marginals]
        cols.append(ColumnSpec(self.bimodal.name, CONTINUOUS))
        return cols


def default_config(n: int = 2500, seed: int = 0) -> SimConfig:
    """21 columns: 12 binary, 8 latent-driven continuous (slight and severe
    lognormal skew included, one integer-valued), and one bimodal column
    switched by a binary treatment indicator."""
    prevalences = np.linspace(0.1, 0.7, 12)
    marginals = [
        MarginalSpec(name=f"v{k + 1:02d}", kind="binary", prevalence=float(prevalences[k]))
        for k in range(12)
    ]
    marginals += [
        MarginalSpec(name="v13", kind="gaussian", mu=0.0, sigma=1.0),
        MarginalSpec(name="v14", kind="gaussian", mu=10.0, sigma=2.0),
        MarginalSpec(name="v15", kind="lognormal", mu=0.0, sigma=0.4),
        MarginalSpec(name="v16", kind="lognormal", mu=0.0, sigma=1.2),
        MarginalSpec(name="v17", kind="lognormal", mu=1.0, sigma=0.8),
        MarginalSpec(name="v18", kind="gaussian", mu=5.0, sigma=1.0),
        MarginalSpec(name="v19", kind="gaussian", mu=50.0, sigma=10.0, integer=True),
        MarginalSpec(name="v20", kind="gaussian", mu=-3.0, sigma=2.0),
    ]
    d = len(marginals)
    corr = np.full((d, d), 0.15)
    np.fill_diagonal(corr, 1.0)
    bimodal = BimodalSpec(name="v21", driver="v07")
    return SimConfig(n=n, marginals=tuple(marginals), bimodal=bimodal, correlation=corr, seed=seed)


def generate_benchmark(config: SimConfig) -> Dataset:
    """Draw correlated latent normals, map each through its marginal, then
    append the treatment-driven bimodal column."""
    rng = np.random.default_rng(config.seed)
    d = len(config.marginals)
    chol = np.linalg.cholesky(config.correlation)
    z = rng.standard_normal((config.n, d)) @ chol.T
    cols = []
    by_name = {}
    for k, m in enumerate(config.marginals):
        zk = z[:, k]
        if m.kind == "binary":
            col = (zk > ndtri(1.0 - m.prevalence)).astype(float)
        elif m.kind == "gaussian":
            col = m.mu + m.sigma * zk
        elif m.kind == "lognormal":
            col = np.exp(m.mu + m.sigma * zk)
        else:
            raise ValueError(f"unknown marginal kind {m.kind!r}")
        if m.integer:
            col = np.round(col)
        cols.append(col)
        by_name[m.name] = col
    driver = by_name[config.bimodal.driver]
    eps = rng.standard_normal(config.n)
    bim = np.where(
        driver == 0.0,
        config.bimodal.mean0 + config.bimodal.sd0 * eps,
        config.bimodal.mean1 + config.bimodal.sd1 * eps,
    )
    cols.append(bim)
    ds = Dataset(columns=tuple(config.schema()), values=np.column_stack(cols))
    ds.validate()
    return ds


# -- serialization --------------------------------------------------------


def config_to_dict(config: SimConfig) -> dict:
    return {
        "n": config.n,
        "seed": config.seed,
        "marginals": [
            {
                "name": m.name,
                "kind": m.kind,
                "prevalence": m.prevalence,
                "mu": m.mu,
                "sigma": m.sigma,
                "integer": m.integer,
            }
            for m in config.marginals
        ],
        "bimodal": {
            "name": config.bimodal.name,
            "driver": config.bimodal.driver,
            "mean0": config.bimodal.mean0,
            "sd0": config.bimodal.sd0,
            "mean1": config.bimodal.mean1,
            "sd1": config.bimodal.sd1,
        },
        "correlation": config.correlation.tolist(),
    }


def config_from_dict(d: dict) -> SimConfig:
    return SimConfig(
        n=d["n"],
        seed=d.get("seed", 0),
        marginals=tuple(MarginalSpec(**m) for m in d["marginals"]),
        bimodal=BimodalSpec(**d["bimodal"]),
        correlation=np.array(d["correlation"], dtype=float),
    )


def save_config(config: SimConfig, path) -> None:
    with open(path, "w") as fh:
        json.dump(config_to_dict(config), fh, indent=2)
        fh.write("\n")


def load_config(path) -> SimConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))
