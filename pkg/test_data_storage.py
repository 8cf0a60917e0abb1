"""
Tests for structure files, scheme/formula loading and the settings layer
"""

import pytest

import schemes
from config import get_settings, resolve_cap
from data_storage import DataStorage, StructureFile, structure_from_json, structure_to_json
from errors import SignatureError
from logic import FiniteStructure, Rel, Var


def test_structure_json_round_trip():
    A = FiniteStructure(3, {"E": {(0, 1), (1, 0)}}, {"c": 2}, {"f": {(0,): 1, (1,): 2, (2,): 0}})
    assert structure_from_json(structure_to_json(A)) == A


def test_function_rows_end_with_the_value():
    model = StructureFile.from_structure(FiniteStructure(2, functions={"g": {(0, 1): 1, (0, 0): 0, (1, 0): 0, (1, 1): 1}}))
    assert model.functions["g"][1] == [0, 1, 1]


@pytest.mark.parametrize("text", [
    '{"universe": 0}',
    '{"universe": 2, "relations": {"E": [[0, 5]]}}',
    '{"universe": 2, "functions": {"f": [[1]]}}',
    '{"relations": {}}',
])
def test_invalid_structure_files(text):
    with pytest.raises(SignatureError):
        structure_from_json(text)


def test_storage_resolves_relative_paths(tmp_path):
    storage = DataStorage(tmp_path)
    storage.save_structure(schemes.path_graph(3), "graphs/p3.json")
    assert (tmp_path / "graphs" / "p3.json").exists()
    assert storage.load_structure("graphs/p3.json") == schemes.path_graph(3)
    assert not list((tmp_path / "graphs").glob("*.tmp"))


def test_storage_loads_schemes_and_formulas(tmp_path):
    (tmp_path / "s.scm").write_text("(scheme (signature (rel E 2)) (superclass) (rule (order 0) (forall (x) (not (rel E x x)))))")
    (tmp_path / "f.fml").write_text("(rel E x y)")
    storage = DataStorage(tmp_path)
    scheme = storage.load_scheme("s.scm")
    assert scheme.rule_ids() == ["rule0"]
    assert storage.load_formula("f.fml", scheme.signature) == Rel("E", (Var("x"), Var("y")))


def test_storage_write_replaces_existing_file(tmp_path):
    storage = DataStorage(tmp_path)
    storage.write_text("out.txt", "first")
    storage.write_text("out.txt", "second")
    assert storage.read_text("out.txt") == "second"


def test_settings_defaults(monkeypatch):
    for name in ("ENUMERATION_CAP", "SURVIVAL_CAP", "AXIOM_SIZE_CAP", "LOG_LEVEL"):
        monkeypatch.delenv("SEPCLASS_" + name, raising=False)
    settings = get_settings()
    assert settings.enumeration_cap == 6
    assert settings.survival_cap == 16
    assert settings.axiom_size_cap == 1_000_000
    assert settings.log_level == "WARNING"


def test_settings_from_environment(monkeypatch):
    monkeypatch.setenv("SEPCLASS_SURVIVAL_CAP", "4")
    monkeypatch.setenv("SEPCLASS_LOG_LEVEL", "debug")
    assert get_settings().survival_cap == 4
    assert get_settings().log_level == "DEBUG"
    assert resolve_cap(None, "survival_cap") == 4
    assert resolve_cap(9, "survival_cap") == 9


def test_invalid_setting_is_rejected(monkeypatch):
    monkeypatch.setenv("SEPCLASS_ENUMERATION_CAP", "0")
    with pytest.raises(ValueError):
        get_settings()
