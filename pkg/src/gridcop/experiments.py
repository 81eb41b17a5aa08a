"""Simulation studies: fit quality against sample size, and proposal vs. flat prior.

Chain lengths in a ``StudySpec`` are counted in elementary exchange
proposals and converted to sweeps (one sweep = one proposal per cell).

Seed splitting: the task identified by integer key ``(k1, k2, ...)`` gets
``SeedSequence([master_seed, k1, k2, ...])``; its first 64-bit word seeds the
data and its second the chain. Replicates therefore never share a stream and
results do not depend on the number of workers.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .copula import project
from .grid import refine_uniformly, uniform_grid
from .likelihood import Dataset, KnownMarginal
from .measures import hellinger, integrated_squared_error
from .mcmc import SamplerConfig, posterior_mean, run_chain
from .priors import CARPrior, HierarchicalPrior, ICARPrior, SquaredL2Prior
from .reference import GaussMixture, Gaussian, from_tau, make_reference, norm_ppf
from .errors import ValidationError

MODELS = {
    "model1": ("clayton", {"theta": 3.0}),
    "model2": ("gaussian", {"rho": 0.5}),
    "model3": ("mixture", {"mean1": (1.0, 1.0), "mean2": (-1.0, -1.0)}),
}

PAPER_MODEL_SCALE = dict(grid_m=50, sample_sizes=(500, 1000, 5000, 10000), proposals=2_000_000,
                         burn_in_proposals=20_000, thinning_proposals=1_000)
PAPER_COMPARISON_SCALE = dict(grid_m=6, sample_sizes=(30, 100, 400, 800), replicates=100,
                              proposals=2_000_000, burn_in_proposals=20_000, thinning_proposals=1_000)


@dataclass(frozen=True)
class StudySpec:
    kind: str  # "model-study" or "comparison-study"
    models: tuple[str, ...] = ("model1", "model2", "model3")
    families: tuple[str, ...] = ("gaussian", "gumbel", "clayton")
    taus: tuple[float, ...] = (0.05, 0.35, 0.50, 0.64)
    sample_sizes: tuple[int, ...] = (250, 1000, 4000)
    grid_m: int = 10
    alpha_star: float = 400.0
    inner: str = "icar"  # icar | car | l2
    gamma: float = 0.9
    hierarchical: bool = True
    r: float = 0.5
    replicates: int = 1
    seed: int = 2024
    proposals: int = 200_000
    burn_in_proposals: int = 20_000
    thinning_proposals: int = 1_000
    refine: int = 4
    ise_scale: str = "density"
    output_dir: str = "study_out"
    workers: int | None = None

    def __post_init__(self):
        if self.kind not in ("model-study", "comparison-study"):
            raise ValidationError(f"unknown study kind {self.kind!r}")
        if self.replicates < 1:
            raise ValidationError("replicates must be at least 1")
        if self.grid_m < 2:
            raise ValidationError("grid_m must be at least 2")
        if self.inner not in ("icar", "car", "l2"):
            raise ValidationError(f"unknown prior variant {self.inner!r}")
        if self.proposals <= self.burn_in_proposals:
            raise ValidationError("proposals must exceed burn_in_proposals")
        for m in self.models:
            if m not in MODELS:
                raise ValidationError(f"unknown model {m!r}; choose from {sorted(MODELS)}")
        if any(n < 0 for n in self.sample_sizes):
            raise ValidationError("sample sizes must be nonnegative")

    @classmethod
    def comparison_defaults(cls, **kw) -> "StudySpec":
        base = dict(kind="comparison-study", grid_m=6, alpha_star=40.0, sample_sizes=(30, 100, 400, 800),
                    replicates=20)
        base.update(kw)
        return cls(**base)

    def paper_scale(self) -> "StudySpec":
        extra = PAPER_MODEL_SCALE if self.kind == "model-study" else PAPER_COMPARISON_SCALE
        return replace(self, **extra)

    def sampler_config(self, n_cells: int, seed: int, truth=None) -> SamplerConfig:
        sweeps = lambda p: max(1, math.ceil(p / n_cells))
        it = sweeps(self.proposals)
        burn = min(sweeps(self.burn_in_proposals), it - 1)
        return SamplerConfig(iterations=it, burn_in=burn, thinning=sweeps(self.thinning_proposals), seed=seed,
                             hit_and_run_r=self.r, record_hellinger_to=truth, hellinger_refine=self.refine,
                             record_measures=False, store_samples=False)


def task_seeds(master: int, *key: int) -> tuple[int, int]:
    """(data seed, chain seed) for the task ``key``."""
    words = np.random.SeedSequence([int(master), *map(int, key)]).generate_state(2, np.uint64)
    return int(words[0]), int(words[1])


def true_copula(family: str, params: dict):
    return make_reference(family, **dict(params))


def known_marginals(family: str, params: dict | None = None, d: int = 2) -> list[KnownMarginal]:
    """Marginal models matching ``generate_dataset``'s output scale."""
    if family in ("mixture", "gauss_mixture"):
        ref = true_copula(family, params or {})
        return [KnownMarginal.normal_mixture(ref.mean1[j], ref.mean2[j]) for j in range(ref.dims)]
    return [KnownMarginal.normal() for _ in range(d)]


def generate_dataset(family: str, params: dict, N: int, marginals: str = "normal", seed: int = 0) -> Dataset:
    """Sample ``N`` points from the copula and push them through the marginals.

    ``marginals="normal"`` gives standard normal margins (the mixture family
    keeps its natural mixture margins); ``"uniform"`` returns the copula
    sample itself.
    """
    ref = true_copula(family, params)
    d = ref.dims
    if N == 0:
        return Dataset(np.zeros((0, d)))
    rng = np.random.default_rng(seed)
    if marginals == "uniform":
        return Dataset(ref.sample(N, rng))
    if marginals != "normal":
        raise ValidationError(f"unknown marginal kind {marginals!r}")
    if isinstance(ref, GaussMixture):
        return Dataset(ref.sample_raw(N, rng))
    u = ref.sample(N, rng)
    u = np.clip(u, 1e-300, 1.0 - 1e-16)
    return Dataset(norm_ppf(u))


def study_prior(spec: StudySpec, alpha_star: float):
    centering = Gaussian.bivariate(0.0)
    if spec.inner == "icar":
        base = ICARPrior(alpha_star, centering=centering)
    elif spec.inner == "car":
        base = CARPrior(alpha_star, spec.gamma, centering=centering)
    else:
        base = SquaredL2Prior(alpha_star, centering)
    if spec.hierarchical and alpha_star > 0:
        return HierarchicalPrior(base, spec.r)
    return base


def _workers(spec: StudySpec, n_tasks: int) -> int:
    cap = spec.workers or os.cpu_count() or 1
    env = os.environ.get("GRIDCOP_THREADS")
    if env:
        try:
            cap = min(cap, max(1, int(env)))
        except ValueError:
            raise ValidationError(f"GRIDCOP_THREADS must be an integer, got {env!r}") from None
    return max(1, min(cap, n_tasks))


def _map(fn, tasks: list, spec: StudySpec) -> list:
    n = _workers(spec, len(tasks))
    if n == 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, tasks))


# -- model study ---------------------------------------------------------


def _model_task(args):
    spec, key, model, N = args
    family, params = MODELS[model]
    data_seed, chain_seed = task_seeds(spec.seed, *key)
    data = generate_dataset(family, params, N, seed=data_seed)
    g = uniform_grid(2, spec.grid_m)
    truth = true_copula(family, params)
    cfg = spec.sampler_config(g.n_cells, chain_seed, truth)
    out = run_chain(data, g, study_prior(spec, spec.alpha_star), known_marginals(family, params), cfg)
    mean = posterior_mean(out)
    h = out.functionals["hellinger"]
    ref_fine = project(truth, refine_uniformly(g, spec.refine))
    return {
        "model": model,
        "N": N,
        "replicate": key[-1],
        "hellinger_mean": float(h.mean()),
        "hellinger_lo": float(np.quantile(h, 0.025)),
        "hellinger_hi": float(np.quantile(h, 0.975)),
        "hellinger_posterior_mean": hellinger(mean, ref_fine),
        "acceptance": out.acceptance_rate("copula"),
        "density": mean.densities(),
    }


def run_model_study(spec: StudySpec, write: bool = True) -> list[dict]:
    """Fit every (model, N) pair; summaries per replicate, in task order."""
    tasks = []
    for mi, model in enumerate(spec.models):
        for ni, N in enumerate(spec.sample_sizes):
            for rep in range(spec.replicates):
                tasks.append((spec, (0, mi, ni, rep), model, N))
    rows = _map(_model_task, tasks, spec)
    if write:
        out = Path(spec.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        cols = ["model", "N", "replicate", "hellinger_mean", "hellinger_lo", "hellinger_hi",
                "hellinger_posterior_mean", "acceptance"]
        write_csv(out / "model_study.csv", cols, [[r[c] for c in cols] for r in rows])
        centers = uniform_grid(2, spec.grid_m).centers(0)
        for r in rows:
            name = f"density_{r['model']}_N{r['N']}_rep{r['replicate']}.csv"
            dens = r["density"]
            body = [[centers[i]] + list(dens[i]) for i in range(dens.shape[0])]
            write_csv(out / name, ["u\\v"] + [_fmt(c) for c in centers], body)
    return rows


# -- comparison study ------------------------------------------------------


def _comparison_task(args):
    spec, key, family, tau, N = args
    data_seed, chain_seed = task_seeds(spec.seed, *key)
    truth = from_tau(family, tau)
    params = truth.params()
    data = generate_dataset(family, params, N, seed=data_seed)
    g = uniform_grid(2, spec.grid_m)
    ref_fine = project(truth, refine_uniformly(g, spec.refine))
    marg = known_marginals(family, params)
    res = {}
    for name, a_star in (("proposal", spec.alpha_star), ("flat", 0.0)):
        cfg = spec.sampler_config(g.n_cells, chain_seed)
        out = run_chain(data, g, study_prior(spec, a_star), marg, cfg)
        res[name] = integrated_squared_error(posterior_mean(out), ref_fine, scale=spec.ise_scale)
    return {"family": family, "tau": tau, "N": N, "replicate": key[-1], **res}


def run_comparison_study(spec: StudySpec, write: bool = True) -> tuple[list[dict], list[dict]]:
    """Mean ISE of proposal and flat prior per (family, tau, N).

    Returns ``(replicate_rows, table_rows)``; table values are scaled by 1e3.
    """
    tasks = []
    for fi, fam in enumerate(spec.families):
        for ti, tau in enumerate(spec.taus):
            for ni, N in enumerate(spec.sample_sizes):
                for rep in range(spec.replicates):
                    tasks.append((spec, (1, fi, ti, ni, rep), fam, tau, N))
    reps = _map(_comparison_task, tasks, spec)
    table = []
    for tau in spec.taus:
        for N in spec.sample_sizes:
            row = {"tau": tau, "N": N}
            for fam in spec.families:
                sel = [r for r in reps if r["family"] == fam and r["tau"] == tau and r["N"] == N]
                row[f"{fam}_proposal"] = 1e3 * float(np.mean([r["proposal"] for r in sel]))
                row[f"{fam}_flat"] = 1e3 * float(np.mean([r["flat"] for r in sel]))
            table.append(row)
    if write:
        out = Path(spec.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        cols = ["family", "tau", "N", "replicate", "proposal", "flat"]
        write_csv(out / "comparison_replicates.csv", cols, [[r[c] for c in cols] for r in reps])
        tcols = ["tau", "N"] + [f"{f}_{p}" for f in spec.families for p in ("proposal", "flat")]
        write_csv(out / "comparison_table.csv", tcols, [[r[c] for c in tcols] for r in table])
    return reps, table


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    """Deterministic CSV: dot decimals, shortest round-trip float repr, LF line ends."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        for r in rows:
            w.writerow([_fmt(x) for x in r])
