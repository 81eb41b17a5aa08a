"""Golden-file checks for every CLI subcommand.

Set GRIDCOP_REGEN_GOLDEN=1 to rewrite the expected files after an
intentional output change.
"""

import json
import os
from pathlib import Path

import pytest
import yaml

from gridcop.cli import main

GOLDEN = Path(__file__).parent / "golden"
REGEN = os.environ.get("GRIDCOP_REGEN_GOLDEN") == "1"


def check(name: str, produced: Path | str):
    text = produced.read_text() if isinstance(produced, Path) else produced
    target = GOLDEN / name
    if REGEN:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text)
    assert text == target.read_text(), f"{name} differs from the golden copy"


def _manifest_without_versions(p: Path) -> str:
    doc = json.loads(p.read_text())
    doc.pop("versions")
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def test_simulate(tmp_path):
    out = tmp_path / "d.csv"
    assert main(["simulate", "--family", "clayton", "--tau", "0.5", "--n", "12", "--seed", "3",
                 "--out", str(out)]) == 0
    check("simulate_clayton.csv", out)


def test_project(tmp_path):
    out = tmp_path / "p.json"
    assert main(["project", "--family", "gumbel", "--theta", "2", "--m", "4", "--out", str(out)]) == 0
    check("project_gumbel.json", out)


def test_measures(tmp_path, capsys):
    out = tmp_path / "p.json"
    main(["project", "--family", "gaussian", "--rho", "0.3", "--m", "5", "--out", str(out)])
    capsys.readouterr()
    assert main(["measures", str(out), "--family", "gaussian", "--rho", "0.3", "--refine", "2"]) == 0
    check("measures_gaussian.txt", capsys.readouterr().out)


def test_prior_sim(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["prior-sim", "--m", "4", "--alpha-star", "50", "--iterations", "30", "--burn-in", "10",
                 "--seed", "2", "--out", str(out)]) == 0
    check("prior_sim.csv", out)


def test_fit(tmp_path):
    main(["simulate", "--family", "gaussian", "--rho", "0.5", "--n", "60", "--seed", "1",
          "--out", str(tmp_path / "data.csv")])
    cfg = {
        "data": {"path": "data.csv"},
        "grid": {"m": 3},
        "prior": {"variant": "icar", "alpha_star": 20.0, "hierarchical": True,
                  "centering": {"family": "gaussian", "params": {"rho": 0.0}}},
        "marginals": [{"kind": "gaussian"}, {"kind": "normal"}],
        "sampler": {"iterations": 40, "burn_in": 10, "thinning": 10, "seed": 5},
        "output": {"directory": "out"},
    }
    (tmp_path / "run.yaml").write_text(yaml.safe_dump(cfg))
    assert main(["fit", str(tmp_path / "run.yaml")]) == 0
    od = tmp_path / "out"
    for name in ("chain.txt", "posterior_mean.json", "density_summary.csv", "functionals.csv", "acceptance.json"):
        check(f"fit/{name}", od / name)
    check("fit/manifest.json", _manifest_without_versions(od / "manifest.json"))


@pytest.mark.parametrize("cmd", ["study-models", "study-comparison"])
def test_studies(tmp_path, cmd):
    settings = {"sample_sizes": [25], "grid_m": 3, "proposals": 450, "burn_in_proposals": 90,
                "thinning_proposals": 45, "refine": 2, "workers": 1}
    if cmd == "study-models":
        settings["models"] = ["model1"]
        names = ["model_study.csv", "density_model1_N25_rep0.csv"]
    else:
        settings.update(families=["clayton"], taus=[0.35])
        names = ["comparison_replicates.csv", "comparison_table.csv"]
    (tmp_path / "s.yaml").write_text(yaml.safe_dump(settings))
    assert main([cmd, "--config", str(tmp_path / "s.yaml"), "--out", str(tmp_path / "o"), "--seed", "9",
                 "--replicates", "2"]) == 0
    for name in names:
        check(f"{cmd}/{name}", tmp_path / "o" / name)
