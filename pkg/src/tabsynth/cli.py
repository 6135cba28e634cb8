"""Batch front-end: simulate | fit | generate | evaluate | pipeline.

Every command is deterministic given its configuration; the master seed fans
out to fixed per-stage sub-seeds. Existing output files are never overwritten
unless --force is given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import data_model, simgen, utility, vae
from . import transform as tr


@dataclass
class RunConfig:
    seed: int = 0
    data_csv: str | None = None
    schema_json: str | None = None
    sim: dict = field(default_factory=dict)
    transform: dict = field(default_factory=dict)
    train: dict = field(default_factory=dict)
    latent_dim: int = 3
    hidden_dim: int | None = None  # None -> input dimension
    generate: dict = field(default_factory=dict)
    evaluate: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path) as fh:
            raw = json.load(fh)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    def stage_seeds(self) -> dict[str, int]:
        state = np.random.SeedSequence(self.seed).generate_state(8)
        names = ["sim", "train_a", "gen_a", "eval_a", "train_b", "gen_b", "eval_b", "spare"]
        return {name: int(s) for name, s in zip(names, state)}

    def transform_config(self) -> tr.TransformFitConfig:
        bc = tr.BoxCoxFitConfig(**self.transform.get("boxcox", {}))
        pw = tr.PowerFitConfig(**self.transform.get("power", {}))
        return tr.TransformFitConfig(boxcox=bc, power=pw)

    def train_config(self, seed: int) -> vae.TrainConfig:
        return vae.TrainConfig(seed=seed, **self.train)

    def cart_params(self) -> utility.CartParams:
        return utility.CartParams(
            min_leaf=self.evaluate.get("min_leaf", 20),
            max_depth=self.evaluate.get("max_depth", 25),
        )


class CliError(Exception):
    pass


def _prepare_out(path: str, force: bool) -> None:
    if os.path.exists(path) and not force:
        raise CliError(f"refusing to overwrite {path} (use --force)")


def _out_path(out_dir: str, name: str, force: bool) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    _prepare_out(path, force)
    return path


def _load_data(data_path, schema_path):
    schema = data_model.load_schema(schema_path)
    return data_model.load_csv(data_path, schema), schema


def cmd_simulate(args) -> None:
    if args.config:
        cfg = simgen.load_config(args.config)
        if args.seed is not None:
            cfg = simgen.config_from_dict({**simgen.config_to_dict(cfg), "seed": args.seed})
    else:
        cfg = simgen.default_config(n=args.n, seed=args.seed if args.seed is not None else 0)
    data = simgen.generate_benchmark(cfg)
    data_model.save_csv(data, _out_path(args.out, "data.csv", args.force))
    data_model.save_schema(data.columns, _out_path(args.out, "schema.json", args.force))
    simgen.save_config(cfg, _out_path(args.out, "sim_config.json", args.force))
    print(f"wrote {data.n}x{data.p} benchmark to {args.out}")


def _fit_models(data, run: RunConfig, train_seed: int, scaling_only: bool):
    tmodel = tr.fit_transform_model(
        data, run.transform_config(), scaling_only=scaling_only
    )
    transformed = tr.apply_forward(data, tmodel)
    arch = vae.arch_for_schema(
        data.columns, hidden_dim=run.hidden_dim, latent_dim=run.latent_dim
    )
    model, trace = vae.train(transformed, arch, run.train_config(train_seed))
    return tmodel, model, trace


def cmd_fit(args) -> None:
    run = RunConfig.load(args.config) if args.config else RunConfig()
    if args.seed is not None:
        run.seed = args.seed
    data, _ = _load_data(args.data, args.schema)
    seeds = run.stage_seeds()
    tmodel, model, trace = _fit_models(data, run, seeds["train_a"], args.scaling_only)
    tr.save_model(tmodel, _out_path(args.out, "transform_model.json", args.force))
    vae.save_model(model, _out_path(args.out, "vae_model.json", args.force))
    vae.save_loss_trace(trace, _out_path(args.out, "loss_trace.csv", args.force))
    print(f"fit complete; final epoch mean loss {trace[-1]:.4f}" if trace else "fit complete")


def cmd_generate(args) -> None:
    data, schema = _load_data(args.data, args.schema)
    tmodel = tr.load_model(args.transform_model)
    model = vae.load_model(args.vae_model)
    n = args.n if args.n is not None else data.n
    syn = vae.synthesize(data, tmodel, model, n, mode=args.mode, seed=args.seed or 0)
    data_model.save_csv(syn, _out_path(args.out, "synthetic.csv", args.force))
    print(f"wrote {syn.n} synthetic rows to {args.out}/synthetic.csv")


def cmd_evaluate(args) -> None:
    schema = data_model.load_schema(args.schema)
    original = data_model.load_csv(args.original, schema)
    synthetic = data_model.load_csv(args.synthetic, schema)
    params = utility.CartParams(min_leaf=args.min_leaf, max_depth=args.max_depth)
    report = utility.pmse_ratio(
        original, synthetic, params, n_perm=args.n_perm, seed=args.seed or 0
    )
    utility.save_report(report, _out_path(args.out, "report.json", args.force))
    marginals = utility.marginal_report(original, synthetic, bins=args.bins)
    utility.save_marginal_csvs(marginals, os.path.join(args.out, "marginals"))
    print(
        f"pmse={report.pmse:.5f} null_mean={report.null_mean:.5f} "
        f"ratio={report.pmse_ratio:.3f}"
    )


def cmd_pipeline(args) -> None:
    run = RunConfig.load(args.config) if args.config else RunConfig()
    if args.seed is not None:
        run.seed = args.seed
    seeds = run.stage_seeds()

    if run.data_csv:
        data, _ = _load_data(run.data_csv, run.schema_json)
    else:
        sim_cfg = (
            simgen.config_from_dict(run.sim)
            if run.sim
            else simgen.default_config(seed=seeds["sim"])
        )
        data = simgen.generate_benchmark(sim_cfg)
        data_model.save_csv(data, _out_path(args.out, "data.csv", args.force))
        data_model.save_schema(data.columns, _out_path(args.out, "schema.json", args.force))

    n_syn = run.generate.get("n", data.n)
    mode = run.generate.get("mode", "prior")
    n_perm = run.evaluate.get("n_perm", 100)
    variants = [
        ("ptvae", False, seeds["train_a"], seeds["gen_a"], seeds["eval_a"]),
        ("vae", True, seeds["train_b"], seeds["gen_b"], seeds["eval_b"]),
    ]
    for name, scaling_only, train_seed, gen_seed, eval_seed in variants:
        sub = os.path.join(args.out, name)
        tmodel, model, trace = _fit_models(data, run, train_seed, scaling_only)
        syn = vae.synthesize(data, tmodel, model, n_syn, mode=mode, seed=gen_seed)
        tr.save_model(tmodel, _out_path(sub, "transform_model.json", args.force))
        vae.save_model(model, _out_path(sub, "vae_model.json", args.force))
        vae.save_loss_trace(trace, _out_path(sub, "loss_trace.csv", args.force))
        data_model.save_csv(syn, _out_path(sub, "synthetic.csv", args.force))
        report = utility.pmse_ratio(data, syn, run.cart_params(), n_perm=n_perm, seed=eval_seed)
        utility.save_report(report, _out_path(sub, "report.json", args.force))
        utility.save_marginal_csvs(
            utility.marginal_report(data, syn), os.path.join(sub, "marginals")
        )
        print(f"{name}: pmse={report.pmse:.5f} ratio={report.pmse_ratio:.3f}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tabsynth",
        description="Synthetic mixed-type tabular data generation and evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate the benchmark dataset")
    p.add_argument("--config", help="simulation config JSON")
    p.add_argument("--n", type=int, default=2500)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit transforms and train the generator")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--config", help="run config JSON")
    p.add_argument("--seed", type=int)
    p.add_argument("--scaling-only", action="store_true", help="baseline: skip the transforms")
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("generate", help="sample synthetic rows from fitted models")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--transform-model", required=True)
    p.add_argument("--vae-model", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--mode", choices=["prior", "posterior"], default="prior")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="score synthetic against original data")
    p.add_argument("--original", required=True)
    p.add_argument("--synthetic", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--min-leaf", type=int, default=20)
    p.add_argument("--max-depth", type=int, default=25)
    p.add_argument("--n-perm", type=int, default=100)
    p.add_argument("--bins", type=int, default=30)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", help="one-shot run incl. plain-generator baseline")
    p.add_argument("--config", help="run config JSON")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (CliError, ValueError, OSError, data_model.SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
