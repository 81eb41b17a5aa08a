"""Persistence: chains, copula files, data CSVs and run configurations.

Chain text format::

    gridcop-chain 1 records=<k>
    {"cuts": [[...], [...]]}
    <mass vector, 17 significant digits, space separated>   (k lines)

The binary variant shares the two header lines (magic ``gridcop-chain-bin``)
and is followed by ``k * n_cells`` little-endian float64 values.
"""

from __future__ import annotations

import csv
import hashlib
import json
import re
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .copula import GridCopula
from .errors import ChainFormatError, ConfigError, DataError
from .grid import Grid, uniform_grid
from .likelihood import Dataset

CHAIN_MAGIC = "gridcop-chain"
CHAIN_MAGIC_BIN = "gridcop-chain-bin"
CHAIN_VERSION = 1
_HEADER = re.compile(r"^(gridcop-chain(?:-bin)?) (\d+) records=(\d+)$")


# -- chains --------------------------------------------------------------


def _grid_line(g: Grid) -> str:
    return json.dumps({"cuts": [[float(x) for x in c] for c in g.cuts]})


def _parse_grid_line(line: str, lineno: int) -> Grid:
    try:
        return Grid(json.loads(line)["cuts"])
    except Exception as exc:
        raise ChainFormatError(f"line {lineno}: bad grid serialization ({exc})") from None


def write_chain(path, g: Grid, samples: np.ndarray, binary: bool = False) -> None:
    samples = np.asarray(samples, dtype=float).reshape(-1, g.n_cells)
    k = samples.shape[0]
    magic = CHAIN_MAGIC_BIN if binary else CHAIN_MAGIC
    head = f"{magic} {CHAIN_VERSION} records={k}\n{_grid_line(g)}\n"
    if binary:
        with open(path, "wb") as fh:
            fh.write(head.encode("ascii"))
            fh.write(samples.astype("<f8").tobytes())
        return
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(head)
        for row in samples:
            fh.write(" ".join(f"{x:.17g}" for x in row))
            fh.write("\n")


def read_chain(path) -> tuple[Grid, np.ndarray]:
    """Returns ``(grid, samples)`` with ``samples`` of shape ``(k, n_cells)``."""
    with open(path, "rb") as fh:
        raw = fh.read()
    first, _, rest = raw.partition(b"\n")
    m = _HEADER.match(first.decode("ascii", "replace").strip())
    if not m:
        raise ChainFormatError(f"line 1: not a chain file header: {first[:60]!r}")
    magic, version, k = m.group(1), int(m.group(2)), int(m.group(3))
    if version != CHAIN_VERSION:
        raise ChainFormatError(f"line 1: unsupported chain format version {version} (expected {CHAIN_VERSION})")
    second, _, body = rest.partition(b"\n")
    g = _parse_grid_line(second.decode("ascii", "replace"), 2)
    n = g.n_cells
    if magic == CHAIN_MAGIC_BIN:
        if len(body) != 8 * k * n:
            raise ChainFormatError(
                f"line 1: header declares {k} records but the binary body holds {len(body) / (8 * n):.6g}"
            )
        return g, np.frombuffer(body, dtype="<f8").reshape(k, n).astype(float)
    lines = body.decode("ascii", "replace").splitlines()
    if len(lines) != k:
        raise ChainFormatError(f"line 1: header declares {k} records but the file has {len(lines)}")
    out = np.empty((k, n))
    for i, line in enumerate(lines):
        parts = line.split()
        if len(parts) != n:
            raise ChainFormatError(f"line {i + 3}: expected {n} values, found {len(parts)}")
        try:
            out[i] = [float(p) for p in parts]
        except ValueError:
            raise ChainFormatError(f"line {i + 3}: non-numeric value") from None
    return g, out


# -- single copulas --------------------------------------------------------


def write_copula(path, C: GridCopula) -> None:
    doc = {"cuts": [[float(x) for x in c] for c in C.grid.cuts], "mass": [float(x) for x in C.flat]}
    Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")


def read_copula(path, tol: float = 1e-9) -> GridCopula:
    """Read a copula file, or a chain file (giving its sample mean)."""
    p = Path(path)
    if not p.exists():
        raise DataError(f"no such file: {p}")
    with open(p, "rb") as fh:
        head = fh.read(len(CHAIN_MAGIC))
    try:
        if head == CHAIN_MAGIC.encode():
            g, s = read_chain(p)
            if s.shape[0] == 0:
                raise DataError(f"{p}: chain holds no samples")
            return GridCopula(g, s.mean(axis=0), tol=tol)
        doc = json.loads(p.read_text(encoding="utf-8"))
        return GridCopula(Grid(doc["cuts"]), doc["mass"], tol=tol)
    except DataError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise DataError(f"{p}: malformed copula file ({exc})") from None


# -- data ------------------------------------------------------------------


def read_data_csv(path, columns=None, header: bool = True) -> Dataset:
    """Numeric CSV reader. Decimal separator is always '.', whatever the locale."""
    p = Path(path)
    if not p.exists():
        raise DataError(f"data file not found: {p}")
    with open(p, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    names = None
    if header:
        if not rows:
            raise DataError(f"{p}: empty file, expected a header row")
        names = [c.strip() for c in rows[0]]
        rows = rows[1:]
    idx = None
    if columns is not None:
        idx = []
        for c in columns:
            if isinstance(c, str):
                if names is None or c not in names:
                    raise DataError(f"{p}: column {c!r} not found")
                idx.append(names.index(c))
            else:
                idx.append(int(c))
    data = []
    width = None
    for r, row in enumerate(rows, start=2 if header else 1):
        if not row or all(not x.strip() for x in row):
            continue
        sel = row if idx is None else [row[i] if i < len(row) else "" for i in idx]
        try:
            vals = [float(x) for x in sel]
        except ValueError:
            raise DataError(f"{p}: row {r}: non-numeric or missing value in {sel!r}") from None
        if not all(np.isfinite(vals)):
            raise DataError(f"{p}: row {r}: non-finite value")
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise DataError(f"{p}: row {r}: expected {width} fields, found {len(vals)}")
        data.append(vals)
    if not data:
        d = len(idx) if idx is not None else (len(names) if names else 2)
        return Dataset(np.zeros((0, d)))
    return Dataset(np.array(data))


def write_data_csv(path, data: Dataset, names=None) -> None:
    names = names or [f"y{j + 1}" for j in range(data.d)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in data.observations:
            w.writerow([repr(float(x)) for x in row])


# -- configuration ----------------------------------------------------------


def _strict(cls, doc: Any, where: str):
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: expected a mapping")
    allowed = {f.name for f in fields(cls)}
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {unknown}; allowed {sorted(allowed)}")
    try:
        return cls(**doc)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass
class DataSection:
    path: str
    columns: list | None = None
    header: bool = True


@dataclass
class GridSection:
    m: int | list | None = None
    d: int | None = None
    cuts: list | None = None

    def build(self, d_default: int) -> Grid:
        if (self.m is None) == (self.cuts is None):
            raise ConfigError("grid: give exactly one of 'm' or 'cuts'")
        try:
            if self.cuts is not None:
                return Grid(self.cuts)
            d = self.d or d_default
            if isinstance(self.m, list):
                return Grid([np.arange(1, k + 1) / k for k in self.m])
            return uniform_grid(d, int(self.m))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"grid: {exc}") from None


@dataclass
class CenteringSection:
    family: str = "independence"
    params: dict = field(default_factory=dict)


@dataclass
class PriorSection:
    variant: str = "icar"  # flat | l2 | car | icar
    alpha_star: float = 0.0
    gamma: float | None = None
    weights: str = "adjacency"
    centering: Any = None
    hierarchical: bool = False
    r: float = 0.5


@dataclass
class MarginalSection:
    kind: str = "uniform"  # uniform | normal | normal_mixture | gaussian (estimated)
    params: dict = field(default_factory=dict)


@dataclass
class SamplerSection:
    iterations: int = 1000
    burn_in: int = 100
    thinning: int = 1
    seed: int = 0
    functionals: list = field(default_factory=lambda: ["kendall_tau", "spearman_rho"])
    reference: Any = None  # centering-style mapping, needed for "hellinger"
    proposals_per_sweep: int | None = None
    marginal_step_scale: float = 0.1
    hastings_correction: bool = True


@dataclass
class OutputSection:
    directory: str = "fit_out"
    formats: list = field(default_factory=lambda: ["text"])


@dataclass
class RunConfig:
    data: DataSection
    grid: GridSection
    prior: PriorSection
    marginals: list
    sampler: SamplerSection
    output: OutputSection
    raw: dict = field(repr=False, default_factory=dict)
    base_dir: Path = field(repr=False, default=Path("."))

    def config_hash(self) -> str:
        return config_hash(self.raw)

    def resolve(self, p: str) -> Path:
        q = Path(p)
        return q if q.is_absolute() else self.base_dir / q


def config_hash(doc: Any) -> str:
    """SHA-256 of the canonical JSON form (sorted keys, no whitespace)."""
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


_TOP = {"data", "grid", "prior", "marginals", "sampler", "output"}


def parse_config(doc: Any, base_dir=".") -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be a mapping")
    unknown = sorted(set(doc) - _TOP)
    if unknown:
        raise ConfigError(f"config: unknown section(s) {unknown}; allowed {sorted(_TOP)}")
    for req in ("data", "grid"):
        if req not in doc:
            raise ConfigError(f"config: missing section {req!r}")
    data = _strict(DataSection, doc["data"], "data")
    grid = _strict(GridSection, doc["grid"], "grid")
    prior = _strict(PriorSection, doc.get("prior"), "prior")
    if prior.centering is not None:
        prior.centering = _strict(CenteringSection, prior.centering, "prior.centering")
    if prior.variant not in ("flat", "l2", "car", "icar"):
        raise ConfigError(f"prior.variant: unknown variant {prior.variant!r}")
    if prior.variant == "flat":
        if prior.alpha_star != 0:
            raise ConfigError("prior.alpha_star: the flat prior takes alpha_star = 0")
    elif not (isinstance(prior.alpha_star, (int, float)) and prior.alpha_star > 0):
        raise ConfigError(f"prior.alpha_star: must be positive for variant {prior.variant!r}")
    if prior.variant == "car" and prior.gamma is None:
        raise ConfigError("prior.gamma: required for the CAR variant")
    marg_doc = doc.get("marginals") or []
    if not isinstance(marg_doc, list):
        raise ConfigError("marginals: expected a list, one entry per dimension")
    marginals = [_strict(MarginalSection, m, f"marginals[{i}]") for i, m in enumerate(marg_doc)]
    for i, m in enumerate(marginals):
        if m.kind not in ("uniform", "normal", "normal_mixture", "gaussian"):
            raise ConfigError(f"marginals[{i}].kind: unknown kind {m.kind!r}")
    sampler = _strict(SamplerSection, doc.get("sampler"), "sampler")
    if sampler.reference is not None:
        sampler.reference = _strict(CenteringSection, sampler.reference, "sampler.reference")
    for f in sampler.functionals:
        if f not in ("kendall_tau", "spearman_rho", "hellinger"):
            raise ConfigError(f"sampler.functionals: unknown functional {f!r}")
    if "hellinger" in sampler.functionals and sampler.reference is None:
        raise ConfigError("sampler.reference: required when recording 'hellinger'")
    output = _strict(OutputSection, doc.get("output"), "output")
    for f in output.formats:
        if f not in ("text", "binary"):
            raise ConfigError(f"output.formats: unknown format {f!r}")
    return RunConfig(data, grid, prior, marginals, sampler, output, raw=doc, base_dir=Path(base_dir))


def load_config(path) -> RunConfig:
    """Read a JSON or YAML run configuration."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        doc = yaml.safe_load(p.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{p}: cannot parse ({exc})") from None
    return parse_config(doc, base_dir=p.parent)
