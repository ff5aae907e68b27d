import logging
import re
from pathlib import Path

import pytest
from pydantic import ValidationError

from ncc_minimax.config import Config
from ncc_minimax.models import CSV_COLUMNS, ExperimentConfig, SchemeName, SolverConfig, TraceRecord


def _experiment(**overrides):
    config = {"problem": {"name": "toy_bilinear"}, "solvers": [{"scheme": "pvr"}]}
    config.update(overrides)
    return config


def test_solver_defaults():
    config = SolverConfig(scheme="zerosarah")
    assert config.scheme == SchemeName.ZEROSARAH
    assert config.display_label == "zerosarah"
    assert config.smoothed
    assert not SolverConfig(scheme="vr_agda").smoothed
    assert SolverConfig(scheme="pvr", label="pvr-p0.1").display_label == "pvr-p0.1"


@pytest.mark.parametrize("field, value", [("rho", 1.5), ("p", 0.0), ("eta_x", -1.0), ("T", -1),
                                          ("batch_size", 0), ("a", 0.5)])
def test_solver_config_ranges(field, value):
    with pytest.raises(ValidationError):
        SolverConfig(scheme="pvr", **{field: value})


def test_duplicate_labels_are_rejected():
    with pytest.raises(ValidationError):
        ExperimentConfig.model_validate(_experiment(solvers=[{"scheme": "pvr"}, {"scheme": "pvr"}]))
    ExperimentConfig.model_validate(_experiment(solvers=[{"scheme": "pvr"}, {"scheme": "pvr", "label": "pvr-2"}]))


def test_missing_data_path_is_rejected(tmp_path):
    with pytest.raises(ValidationError):
        ExperimentConfig.model_validate(_experiment(problem={"name": "robust_logistic",
                                                             "data": str(tmp_path / "missing.libsvm")}))


def test_bare_data_names_resolve_against_the_data_dir(tmp_path, monkeypatch):
    (tmp_path / "a9a").write_text("+1 1:1\n")
    config = _experiment(problem={"name": "robust_logistic", "data": "a9a"})
    monkeypatch.setattr(Config, "DATA_DIR", str(tmp_path / "elsewhere"))
    with pytest.raises(ValidationError):
        ExperimentConfig.model_validate(config)
    monkeypatch.setattr(Config, "DATA_DIR", str(tmp_path))
    assert ExperimentConfig.model_validate(config).problem.data == "a9a"
    assert Config.data_path("a9a") == str(tmp_path / "a9a")


def test_unknown_problem_name_is_rejected():
    with pytest.raises(ValidationError):
        ExperimentConfig.model_validate(_experiment(problem={"name": "matrix_game"}))


def test_csv_row_formatting():
    record = TraceRecord(t=3, oracle_count=12, primal=0.1, res_x=1.0, res_y=0.5, wall_s=2.5)
    row = record.csv_row(with_accuracy=False, with_wall=False)
    assert len(row) == len(CSV_COLUMNS)
    assert row[:6] == ["3", "12", "0", "0.10000000000000001", "1", "0.5"]
    assert row[6:] == ["", "", "", ""]
    assert record.csv_row(with_accuracy=True, with_wall=True)[-2:] == ["2.5", ""]
    assert record.stationarity == 1.0


def test_master_seed_override(monkeypatch, caplog):
    assert Config.master_seed(4) == 4
    monkeypatch.setenv("NCC_SEED", "11")
    assert Config.master_seed(4) == 11
    monkeypatch.setenv("NCC_SEED", "eleven")
    with caplog.at_level(logging.WARNING):
        assert Config.master_seed(4) == 4
    assert "NCC_SEED" in caplog.text


def test_default_environment_is_valid():
    assert Config.validate()


REPO_ROOT = Path(__file__).resolve().parent.parent
# distribution name -> module a source file imports for it
IMPORT_NAMES = {"python-dotenv": "dotenv", "httpx": "fastapi.testclient"}


def _requirements(path):
    names = []
    for line in path.read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            names.append(re.split(r"[\[<>=!~ ]", line, maxsplit=1)[0])
    return names


def _imported_modules():
    pattern = re.compile(r"^\s*(?:from|import)\s+([\w.]+)", re.MULTILINE)
    modules = set()
    for folder in ("ncc_minimax", "tests"):
        for source in (REPO_ROOT / folder).glob("*.py"):
            modules.update(pattern.findall(source.read_text()))
    for source in ("ncc_api.py", "ncc.py"):
        modules.update(pattern.findall((REPO_ROOT / source).read_text()))
    return modules


@pytest.mark.parametrize("requirements", ["requirements.txt", "ncc_minimax/requirements.txt"])
def test_every_requirement_is_imported(requirements):
    modules = _imported_modules()
    for name in _requirements(REPO_ROOT / requirements):
        module = IMPORT_NAMES.get(name, name.replace("-", "_"))
        assert any(m == module or m.startswith(module + ".") for m in modules), f"{name} is never imported"


def test_library_requirements_leave_out_the_service_stack():
    library = set(_requirements(REPO_ROOT / "ncc_minimax" / "requirements.txt"))
    assert library == {"numpy", "scipy", "python-dotenv", "pydantic"}
    assert library < set(_requirements(REPO_ROOT / "requirements.txt"))
