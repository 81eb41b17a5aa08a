"""Command-line entry point: ``gridcop <subcommand> ...``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical error.
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .copula import project
from .errors import (
    ChainFormatError,
    ConfigError,
    DataError,
    DomainError,
    EmptyChain,
    GridCopulaError,
    NumericalError,
)
from .experiments import StudySpec, generate_dataset, run_comparison_study, run_model_study, write_csv
from .grid import refine_uniformly, uniform_grid
from .io import load_config, read_copula, read_data_csv, write_chain, write_copula, write_data_csv
from .likelihood import GaussianMarginal, KnownMarginal
from .measures import hellinger, integrated_squared_error, kendall_tau, spearman_rho
from .mcmc import SamplerConfig, posterior_mean, prior_simulation_R, run_chain
from .priors import CARPrior, HierarchicalPrior, ICARPrior, SquaredL2Prior
from .reference import Independence, make_reference, tau_to_param

EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 2, 3, 4


def _reference(spec):
    if spec is None:
        return Independence()
    return make_reference(spec.family, **dict(spec.params))


def _marginal(m):
    p = dict(m.params)
    if m.kind == "uniform":
        return KnownMarginal.uniform()
    if m.kind == "normal":
        return KnownMarginal.normal(float(p.get("loc", 0.0)), float(p.get("scale", 1.0)))
    if m.kind == "normal_mixture":
        return KnownMarginal.normal_mixture(float(p.get("mean1", 1.0)), float(p.get("mean2", -1.0)))
    return GaussianMarginal(float(p.get("loc", 0.0)), float(p.get("scale", 1.0)))


def _prior(cfg):
    ps = cfg.prior
    try:
        centering = _reference(ps.centering)
        if ps.variant in ("flat", "l2"):
            base = SquaredL2Prior(float(ps.alpha_star), centering)
        elif ps.variant == "car":
            base = CARPrior(float(ps.alpha_star), float(ps.gamma), ps.weights, centering)
        else:
            base = ICARPrior(float(ps.alpha_star), ps.weights, centering)
        return HierarchicalPrior(base, float(ps.r)) if ps.hierarchical else base
    except (ValueError, NotImplementedError) as exc:
        raise ConfigError(f"prior: {exc}") from None


def cmd_fit(args) -> int:
    cfg = load_config(args.config)
    data = read_data_csv(cfg.resolve(cfg.data.path), cfg.data.columns, cfg.data.header)
    g = cfg.grid.build(data.d)
    if data.d != g.dims:
        raise ConfigError(f"grid: {g.dims} dimensions but the data has {data.d} columns")
    marg = [_marginal(m) for m in cfg.marginals] or [KnownMarginal.uniform() for _ in range(g.dims)]
    if len(marg) != g.dims:
        raise ConfigError(f"marginals: {len(marg)} entries for {g.dims} dimensions")
    prior = _prior(cfg)
    s = cfg.sampler
    try:
        scfg = SamplerConfig(
            iterations=int(s.iterations), burn_in=int(s.burn_in), thinning=int(s.thinning), seed=int(s.seed),
            hit_and_run_r=float(cfg.prior.r), marginal_step_scale=float(s.marginal_step_scale),
            record_hellinger_to=_reference(s.reference) if "hellinger" in s.functionals else None,
            record_measures=bool({"kendall_tau", "spearman_rho"} & set(s.functionals)),
            store_samples=True, proposals_per_sweep=s.proposals_per_sweep,
            hastings_correction=bool(s.hastings_correction),
        )
    except ValueError as exc:
        raise ConfigError(f"sampler: {exc}") from None
    out = run_chain(data, g, prior, marg, scfg)
    mean = posterior_mean(out)

    od = cfg.resolve(cfg.output.directory)
    od.mkdir(parents=True, exist_ok=True)
    if "text" in cfg.output.formats:
        write_chain(od / "chain.txt", g, out.samples)
    if "binary" in cfg.output.formats:
        write_chain(od / "chain.bin", g, out.samples, binary=True)
    write_copula(od / "posterior_mean.json", mean)

    dens = out.samples / g.volumes.ravel()
    lo, hi = np.quantile(dens, [0.025, 0.975], axis=0)
    rows = []
    for k, cell in enumerate(g.cells()):
        centers = [g.centers(i)[c] for i, c in enumerate(cell)]
        rows.append(list(cell) + centers + [mean.flat[k] / g.volumes.ravel()[k], lo[k], hi[k]])
    header = [f"i{j + 1}" for j in range(g.dims)] + [f"u{j + 1}" for j in range(g.dims)] + [
        "density_mean", "density_q025", "density_q975"]
    write_csv(od / "density_summary.csv", header, rows)

    if out.functionals:
        names = sorted(out.functionals)
        write_csv(od / "functionals.csv", names, np.column_stack([out.functionals[n] for n in names]).tolist())
    report = {
        move: {"accepted": a, "proposed": p, "rate": (a / p if p else None)}
        for move, (a, p) in out.acceptance.items()
    }
    (od / "acceptance.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    manifest = {
        "config_hash": cfg.config_hash(),
        "seed": scfg.seed,
        "iterations": scfg.iterations,
        "proposals_per_sweep": out.n_proposals // scfg.iterations,
        "total_proposals": out.n_proposals,
        "samples": out.n_recorded,
        "versions": _versions(),
    }
    (od / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"fit: {out.n_recorded} samples, copula acceptance {out.acceptance_rate('copula'):.3f}; wrote {od}")
    return 0


def _versions() -> dict:
    import numba
    import scipy

    return {"gridcop": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__}


def _family_params(args) -> dict:
    fam = args.family.lower()
    if args.tau is not None:
        p = tau_to_param(fam, args.tau)
        return {"rho": p} if fam == "gaussian" else {"theta": p}
    if fam == "gaussian":
        if args.rho is None:
            raise ConfigError("gaussian family needs --rho or --tau")
        return {"rho": args.rho}
    if fam in ("clayton", "gumbel"):
        if args.theta is None:
            raise ConfigError(f"{fam} family needs --theta or --tau")
        return {"theta": args.theta}
    return {}


def cmd_simulate(args) -> int:
    params = _family_params(args)
    try:
        data = generate_dataset(args.family.lower(), params, args.n, marginals=args.marginals, seed=args.seed)
    except (ValueError, DomainError) as exc:
        raise ConfigError(str(exc)) from None
    write_data_csv(args.out, data)
    print(f"simulate: wrote {data.n} rows to {args.out}")
    return 0


def cmd_measures(args) -> int:
    C = read_copula(args.file)
    C2 = C
    if C.dims != 2:
        from .copula import bivariate_margin

        C2 = bivariate_margin(C, 0, 1)
    print(f"kendall_tau {kendall_tau(C2):.12g}")
    print(f"spearman_rho {spearman_rho(C2):.12g}")
    if args.family:
        ref = make_reference(args.family, **_family_params(args))
        fine = project(ref, refine_uniformly(C.grid, args.refine))
        print(f"hellinger {hellinger(C, fine):.12g}")
        print(f"ise {integrated_squared_error(C, fine, scale=args.ise_scale):.12g}")
    return 0


def cmd_project(args) -> int:
    ref = make_reference(args.family, **_family_params(args))
    C = project(ref, uniform_grid(args.d, args.m))
    write_copula(args.out, C)
    print(f"project: wrote {args.m}^{args.d} copula to {args.out}")
    return 0


def _study_spec(args, kind: str) -> StudySpec:
    base = {}
    if args.config:
        import yaml

        p = Path(args.config)
        if not p.exists():
            raise ConfigError(f"study config not found: {p}")
        base = yaml.safe_load(p.read_text(encoding="utf-8")) or {}
        if not isinstance(base, dict):
            raise ConfigError("study config must be a mapping")
    known = set(StudySpec.__dataclass_fields__) - {"kind"}
    bad = sorted(set(base) - known)
    if bad:
        raise ConfigError(f"study config: unknown key(s) {bad}")
    for k in ("models", "families", "taus", "sample_sizes"):
        if k in base:
            base[k] = tuple(base[k])
    flags = {}
    if args.out:
        flags["output_dir"] = args.out
    if args.seed is not None:
        flags["seed"] = args.seed
    if args.replicates is not None:
        flags["replicates"] = args.replicates
    try:
        spec = StudySpec.comparison_defaults(**base) if kind == "comparison-study" else StudySpec(kind=kind, **base)
        if args.paper_scale:
            spec = spec.paper_scale()
        return replace(spec, **flags)  # explicit flags win over config and --paper-scale
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"study config: {exc}") from None


def cmd_study_models(args) -> int:
    spec = _study_spec(args, "model-study")
    rows = run_model_study(spec)
    for r in rows:
        print(f"{r['model']} N={r['N']} rep={r['replicate']}: hellinger {r['hellinger_mean']:.5f} "
              f"[{r['hellinger_lo']:.5f}, {r['hellinger_hi']:.5f}]")
    return 0


def cmd_study_comparison(args) -> int:
    spec = _study_spec(args, "comparison-study")
    _, table = run_comparison_study(spec)
    for r in table:
        cells = " ".join(f"{k}={v:.5f}" for k, v in r.items() if k not in ("tau", "N"))
        print(f"tau={r['tau']} N={r['N']} {cells}")
    return 0


def cmd_prior_sim(args) -> int:
    g = uniform_grid(2, args.m)
    cfg = SamplerConfig(iterations=args.iterations, burn_in=args.burn_in, thinning=args.thinning, seed=args.seed)
    r = prior_simulation_R(g, args.alpha_star, cfg, r=args.r)
    write_csv(args.out, ["rho"], [[x] for x in r])
    print(f"prior-sim: {r.size} draws, mean {r.mean():.4f}, sd {r.std():.4f}; wrote {args.out}")
    return 0


def _family_args(p, required=True):
    p.add_argument("--family", required=required, help="independence, gaussian, clayton, gumbel or mixture")
    p.add_argument("--theta", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--tau", type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gridcop", description="Bayesian grid-uniform copula estimation")
    ap.add_argument("--version", action="version", version=f"gridcop {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model described by a JSON/YAML config")
    p.add_argument("config")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="simulate a dataset from a parametric copula")
    _family_args(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--marginals", choices=["normal", "uniform"], default="normal")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("measures", help="dependence measures of a copula or chain file")
    p.add_argument("file")
    _family_args(p, required=False)
    p.add_argument("--refine", type=int, default=4)
    p.add_argument("--ise-scale", choices=["density", "cdf"], default="density")
    p.set_defaults(func=cmd_measures)

    p = sub.add_parser("project", help="project a parametric copula onto a uniform grid")
    _family_args(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_project)

    studies = (
        ("study-models", cmd_study_models, "fit quality against sample size for the benchmark models"),
        ("study-comparison", cmd_study_comparison, "integrated squared error of the smoothing prior vs the flat prior"),
    )
    for name, fn, help_text in studies:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="YAML/JSON mapping of study settings")
        p.add_argument("--out")
        p.add_argument("--seed", type=int)
        p.add_argument("--replicates", type=int)
        p.add_argument("--paper-scale", action="store_true", help="use full-length run settings (hours to days of compute)")
        p.set_defaults(func=fn)

    p = sub.add_parser("prior-sim", help="simulate the implied prior of the centering correlation")
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--alpha-star", type=float, default=400.0)
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--iterations", type=int, default=2000)
    p.add_argument("--burn-in", type=int, default=200)
    p.add_argument("--thinning", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_prior_sim)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, ChainFormatError, EmptyChain, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, ArithmeticError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except GridCopulaError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
