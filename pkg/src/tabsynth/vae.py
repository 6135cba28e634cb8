"""Variational autoencoder over mixed continuous/binary tables: Gaussian
encoder, shared decoder trunk with Gaussian heads for continuous columns and
Bernoulli heads for binary columns, trained on the negative evidence bound.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import grad_core as gc
from .data_model import BINARY, Dataset
from .transform import TransformModel, apply_inverse

LOG_2PI = float(np.log(2.0 * np.pi))
PI_CLAMP = 1e-7


@dataclass(frozen=True)
class VaeArchitecture:
    input_dim: int
    hidden_dim: int
    latent_dim: int
    n_continuous: int
    n_binary: int
    # original column indices, continuous block first then binary block
    continuous_idx: tuple[int, ...] = ()
    binary_idx: tuple[int, ...] = ()

    def __post_init__(self):
        if self.n_continuous + self.n_binary != self.input_dim:
            raise ValueError("continuous + binary counts must equal input_dim")
        if min(self.input_dim, self.hidden_dim, self.latent_dim) < 1:
            raise ValueError("all dimensions must be >= 1")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 50
    learning_rate: float = 0.01
    seed: int = 0
    optimizer: str = "adam"

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")


@dataclass
class VaeModel:
    arch: VaeArchitecture
    enc_trunk: gc.Mlp
    enc_mu: gc.DenseLayer
    enc_logvar: gc.DenseLayer
    dec_trunk: gc.Mlp
    dec_mu: gc.DenseLayer
    dec_logvar: gc.DenseLayer
    dec_logit: gc.DenseLayer
    config: TrainConfig | None = None

    def parameters(self) -> list[gc.Tensor]:
        return (
            self.enc_trunk.parameters()
            + self.enc_mu.parameters()
            + self.enc_logvar.parameters()
            + self.dec_trunk.parameters()
            + self.dec_mu.parameters()
            + self.dec_logvar.parameters()
            + self.dec_logit.parameters()
        )


def init_vae(arch: VaeArchitecture, seed) -> VaeModel:
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    ss = seed.spawn(7)

    def head(in_dim, out_dim, s):
        mlp = gc.init_params([in_dim, out_dim], s, activations=["identity"])
        return mlp.layers[0]

    return VaeModel(
        arch=arch,
        enc_trunk=gc.init_params([arch.input_dim, arch.hidden_dim], ss[0], activations=["tanh"]),
        enc_mu=head(arch.hidden_dim, arch.latent_dim, ss[1]),
        enc_logvar=head(arch.hidden_dim, arch.latent_dim, ss[2]),
        dec_trunk=gc.init_params([arch.latent_dim, arch.hidden_dim], ss[3], activations=["tanh"]),
        dec_mu=head(arch.hidden_dim, arch.n_continuous, ss[4]),
        dec_logvar=head(arch.hidden_dim, arch.n_continuous, ss[5]),
        dec_logit=head(arch.hidden_dim, arch.n_binary, ss[6]),
    )


# -- forward passes -------------------------------------------------------


def encode_t(model: VaeModel, x) -> tuple[gc.Tensor, gc.Tensor]:
    h = model.enc_trunk(x)
    mu = model.enc_mu(h)
    sigma = gc.exp(model.enc_logvar(h) * 0.5)
    return mu, sigma


def encode(model: VaeModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mu, sigma = encode_t(model, np.asarray(x, dtype=float))
    return mu.value, sigma.value


def reparameterize(mu, sigma, noise):
    """z = mu + sigma * noise; works on Tensors or plain arrays."""
    return mu + sigma * noise


def decode_t(model: VaeModel, z) -> tuple[gc.Tensor, gc.Tensor, gc.Tensor]:
    h = model.dec_trunk(z)
    mu_x = model.dec_mu(h)
    sigma_x = gc.exp(model.dec_logvar(h) * 0.5)
    pi_x = gc.sigmoid(gc.affine(h, model.dec_logit.weights, model.dec_logit.biases))
    return mu_x, sigma_x, pi_x


def decode(model: VaeModel, z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mu_x, sigma_x, pi_x = decode_t(model, np.asarray(z, dtype=float))
    return mu_x.value, sigma_x.value, pi_x.value


def kl_gauss(mu: np.ndarray, sigma: np.ndarray) -> float:
    """KL(N(mu, sigma^2) || N(0, I)) for diagonal Gaussians."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    return float(0.5 * np.sum(mu**2 + sigma**2 - 1.0 - 2.0 * np.log(sigma)))


def _loss_batch(model: VaeModel, x: np.ndarray, noise: np.ndarray) -> gc.Tensor:
    """Mean per-row negative evidence bound over a batch whose columns are
    ordered continuous-then-binary."""
    arch = model.arch
    nc = arch.n_continuous
    x = np.atleast_2d(np.asarray(x, dtype=float))
    noise = np.atleast_2d(np.asarray(noise, dtype=float))
    xc, xb = x[:, :nc], x[:, nc:]

    mu_z, sigma_z = encode_t(model, x)
    z = mu_z + sigma_z * noise
    mu_x, sigma_x, pi_x = decode_t(model, z)

    kl = 0.5 * gc.tsum(mu_z**2 + sigma_z**2 - 1.0 - gc.log(sigma_z**2), axis=1)
    gauss_nll = gc.tsum(
        0.5 * (LOG_2PI + gc.log(sigma_x**2) + ((gc.Tensor(xc) - mu_x) / sigma_x) ** 2),
        axis=1,
    )
    pi = gc.clip(pi_x, PI_CLAMP, 1.0 - PI_CLAMP)
    bern_nll = -gc.tsum(xb * gc.log(pi) + (1.0 - xb) * gc.log(1.0 - pi), axis=1)
    return gc.tmean(kl + gauss_nll + bern_nll)


def loss(model: VaeModel, x: np.ndarray, noise: np.ndarray) -> float:
    """Negative evidence bound for one row with a fixed latent noise draw."""
    return _loss_batch(model, x[None, :], noise[None, :]).item()


def _reorder(values: np.ndarray, arch: VaeArchitecture) -> np.ndarray:
    return values[:, list(arch.continuous_idx) + list(arch.binary_idx)]


def _restore_order(values: np.ndarray, arch: VaeArchitecture) -> np.ndarray:
    out = np.empty_like(values)
    for pos, j in enumerate(list(arch.continuous_idx) + list(arch.binary_idx)):
        out[:, j] = values[:, pos]
    return out


def arch_for_schema(schema, hidden_dim=None, latent_dim=3) -> VaeArchitecture:
    cont = tuple(j for j, c in enumerate(schema) if c.kind != BINARY)
    binr = tuple(j for j, c in enumerate(schema) if c.kind == BINARY)
    p = len(cont) + len(binr)
    return VaeArchitecture(
        input_dim=p,
        hidden_dim=hidden_dim if hidden_dim is not None else p,
        latent_dim=latent_dim,
        n_continuous=len(cont),
        n_binary=len(binr),
        continuous_idx=cont,
        binary_idx=binr,
    )


def train(
    data: Dataset, arch: VaeArchitecture, config: TrainConfig
) -> tuple[VaeModel, list[float]]:
    """Mini-batch training on transformed-space data; deterministic per seed.

    Returns the model and the per-epoch mean loss trace.
    """
    x_all = _reorder(data.values, arch)
    n = x_all.shape[0]
    ss = np.random.SeedSequence(config.seed).spawn(2)
    model = init_vae(arch, ss[0])
    rng = np.random.default_rng(ss[1])
    params = model.parameters()
    opt = gc.make_optimizer(config.optimizer, config.learning_rate)
    trace: list[float] = []
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            batch = x_all[idx]
            noise = rng.standard_normal((len(idx), arch.latent_dim))
            loss_t = _loss_batch(model, batch, noise)
            if not np.isfinite(loss_t.value):
                raise gc.GradientError(
                    f"non-finite loss at epoch {epoch}, batch starting {start}"
                )
            loss_t.backward()
            grads = [
                p.grad if p.grad is not None else np.zeros_like(p.value) for p in params
            ]
            opt.step(params, grads)
            epoch_losses.append(loss_t.item() * len(idx))
        trace.append(float(np.sum(epoch_losses) / n))
    model.config = config
    return model, trace


def generate(
    model: VaeModel,
    n: int,
    schema,
    mode: str = "prior",
    data_opt: Dataset | None = None,
    seed=0,
) -> Dataset:
    """Sample n synthetic rows in transformed space.

    Prior mode draws latents from N(0, I) and touches no original data;
    posterior mode draws latents from the encoder posterior of resampled
    original rows.
    """
    arch = model.arch
    rng = np.random.default_rng(seed)
    if mode == "prior":
        z = rng.standard_normal((n, arch.latent_dim))
    elif mode == "posterior":
        if data_opt is None:
            raise ValueError("posterior mode requires the original dataset")
        rows = _reorder(data_opt.values, arch)
        pick = rng.integers(0, rows.shape[0], size=n)
        mu, sigma = encode(model, rows[pick])
        z = mu + sigma * rng.standard_normal((n, arch.latent_dim))
    else:
        raise ValueError(f"unknown generation mode {mode!r}")
    if n == 0:
        return Dataset(columns=tuple(schema), values=np.zeros((0, arch.input_dim)))
    mu_x, sigma_x, pi_x = decode(model, z)
    xc = mu_x + sigma_x * rng.standard_normal(mu_x.shape)
    xb = (rng.random(pi_x.shape) < pi_x).astype(float)
    values = _restore_order(np.hstack([xc, xb]), arch)
    return Dataset(columns=tuple(schema), values=values)


def synthesize(
    data: Dataset,
    tmodel: TransformModel,
    vmodel: VaeModel,
    n: int,
    mode: str = "prior",
    seed=0,
) -> Dataset:
    """End-to-end generation: sample in transformed space, then invert the
    per-column transforms (including integer rounding)."""
    synthetic = generate(vmodel, n, data.columns, mode=mode, data_opt=data, seed=seed)
    if n == 0:
        return synthetic
    return apply_inverse(synthetic, tmodel)


# -- serialization --------------------------------------------------------


def model_to_dict(model: VaeModel) -> dict:
    def layer(l):
        return gc.mlp_to_dict(gc.Mlp([l]))[0]

    return {
        "architecture": {
            "input_dim": model.arch.input_dim,
            "hidden_dim": model.arch.hidden_dim,
            "latent_dim": model.arch.latent_dim,
            "n_continuous": model.arch.n_continuous,
            "n_binary": model.arch.n_binary,
            "continuous_idx": list(model.arch.continuous_idx),
            "binary_idx": list(model.arch.binary_idx),
        },
        "encoder": {
            "trunk": gc.mlp_to_dict(model.enc_trunk),
            "mu": layer(model.enc_mu),
            "logvar": layer(model.enc_logvar),
        },
        "decoder": {
            "trunk": gc.mlp_to_dict(model.dec_trunk),
            "mu": layer(model.dec_mu),
            "logvar": layer(model.dec_logvar),
            "logit": layer(model.dec_logit),
        },
    }


def model_from_dict(d: dict) -> VaeModel:
    a = d["architecture"]
    arch = VaeArchitecture(
        input_dim=a["input_dim"],
        hidden_dim=a["hidden_dim"],
        latent_dim=a["latent_dim"],
        n_continuous=a["n_continuous"],
        n_binary=a["n_binary"],
        continuous_idx=tuple(a["continuous_idx"]),
        binary_idx=tuple(a["binary_idx"]),
    )

    def layer(e):
        return gc.mlp_from_dict([e]).layers[0]

    return VaeModel(
        arch=arch,
        enc_trunk=gc.mlp_from_dict(d["encoder"]["trunk"]),
        enc_mu=layer(d["encoder"]["mu"]),
        enc_logvar=layer(d["encoder"]["logvar"]),
        dec_trunk=gc.mlp_from_dict(d["decoder"]["trunk"]),
        dec_mu=layer(d["decoder"]["mu"]),
        dec_logvar=layer(d["decoder"]["logvar"]),
        dec_logit=layer(d["decoder"]["logit"]),
    )


def save_model(model: VaeModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh)
        fh.write("\n")


def load_model(path) -> VaeModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))


def save_loss_trace(trace: list[float], path) -> None:
    with open(path, "w") as fh:
        fh.write("epoch,mean_loss\n")
        for i, v in enumerate(trace):
            fh.write(f"{i},{v!r}\n")
