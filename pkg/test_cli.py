"""
End-to-end tests for the command-line front end
"""

import itertools
import json

import pytest

import cli
import schemes
from axiomgen import generate_axioms
from data_storage import structure_to_json
from logic import FiniteStructure
from scheme_format import print_scheme
from separation import Verdict
from tptp import read_fof


@pytest.fixture
def files(tmp_path):
    def write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    return {
        "c4": write("c4.json", structure_to_json(schemes.cycle_graph(4))),
        "c5": write("c5.json", structure_to_json(schemes.cycle_graph(5))),
        "p3": write("p3.json", structure_to_json(schemes.path_graph(3))),
        "directed": write("directed.json", structure_to_json(FiniteStructure(2, {"E": {(0, 1)}}))),
        "dupa": write("dupa.json", structure_to_json(schemes.dupa_structure(2))),
        "colouring2": write("colouring2.scm", print_scheme(schemes.colouring_scheme(2))),
        "colouring3": write("colouring3.scm", print_scheme(schemes.colouring_scheme(3))),
        "dupa_scheme": write("dupa.scm", print_scheme(schemes.dupa_scheme())),
        "filters": write("filters.scm", print_scheme(schemes.poset_scheme(schemes.OMEGA, schemes.OMEGA))),
        "edge": write("edge.fml", "(exists (x y) (rel E x y))"),
        "marked": write("marked.fml", "(mon 1 x)"),
        "dir": tmp_path,
    }


def run(capsys, *argv):
    code = cli.main(list(argv))
    return code, capsys.readouterr().out


# ---------------------------------------------------------------- check

def test_check_even_cycle(capsys, files):
    code, out = run(capsys, "check", files["c4"], files["colouring2"])
    assert code == cli.EXIT_TRUE
    assert "verdict=in" in out.splitlines()
    assert "agree=true" in out


def test_check_odd_cycle(capsys, files):
    code, out = run(capsys, "check", files["c5"], files["colouring2"], "--method", "direct")
    assert code == cli.EXIT_FALSE
    assert "verdict=out" in out


def test_check_json_report(capsys, files):
    code, out = run(capsys, "--json", "check", files["c5"], files["colouring2"], "--method", "game")
    report = json.loads(out)
    assert code == cli.EXIT_FALSE
    assert report["verdict"] == "out"
    assert "game" in report["timings"]


def test_check_superclass_violation(capsys, files):
    code, out = run(capsys, "check", files["directed"], files["colouring2"])
    assert code == cli.EXIT_FALSE
    assert "verdict=superclass-violation" in out


def test_check_reports_disagreement(capsys, files, monkeypatch):
    monkeypatch.setattr(cli, "check_membership_direct", lambda *args: Verdict.OUT)
    code, out = run(capsys, "check", files["c4"], files["colouring2"])
    assert code == cli.EXIT_ERROR
    assert "verdict=error" in out
    assert "direct=out" in out and "game=in" in out


def test_missing_file_is_an_operational_error(capsys, files):
    code, out = run(capsys, "check", str(files["dir"] / "nope.json"), files["colouring2"])
    assert code == cli.EXIT_ERROR
    assert "verdict=error" in out


def test_signature_mismatch(capsys, files):
    code, _ = run(capsys, "check", files["dupa"], files["colouring2"])
    assert code == cli.EXIT_ERROR


# ---------------------------------------------------------------- game

def test_game_rounds(capsys, files):
    code, out = run(capsys, "game", files["c5"], files["colouring2"], "--rounds", "1")
    assert code == cli.EXIT_TRUE
    assert "verdict=true" in out and "game=simple" in out


@pytest.mark.parametrize("argv", [
    ("game", "--rounds", "-1"),
    ("game", "--omega", "--max-index", "-2"),
    ("crosscheck", "--rounds", "-1"),
])
def test_negative_counts_are_rejected(capsys, files, argv):
    command, *flags = argv
    with pytest.raises(SystemExit) as exit_info:
        cli.main([command, files["c5"], files["colouring2"], *flags])
    assert exit_info.value.code == 2
    assert "must be >= 0" in capsys.readouterr().err


def test_game_omega_loss_carries_a_trace(capsys, files):
    code, out = run(capsys, "game", files["c5"], files["colouring2"], "--omega")
    assert code == cli.EXIT_FALSE
    assert "verdict=finite" in out
    assert "trace=0:open(" in out


def test_game_survival(capsys, files):
    code, out = run(capsys, "game", files["c4"], files["colouring2"], "--survival")
    assert code == cli.EXIT_TRUE
    assert "verdict=omega" in out


def test_game_needs_a_rule_when_ambiguous(capsys, files):
    code, _ = run(capsys, "game", files["dupa"], files["dupa_scheme"], "--omega")
    assert code == cli.EXIT_ERROR
    code, out = run(capsys, "game", files["dupa"], files["dupa_scheme"], "--omega", "--rule", "sigma2")
    assert code == cli.EXIT_TRUE
    assert "rule=sigma2" in out


def test_generated_rule_needs_max_index(capsys, files, tmp_path):
    poset = tmp_path / "chain.json"
    poset.write_text(structure_to_json(schemes.chain_poset(2)), encoding="utf-8")
    code, _ = run(capsys, "game", str(poset), files["filters"], "--omega")
    assert code == cli.EXIT_ERROR
    code, out = run(capsys, "game", str(poset), files["filters"], "--omega", "--max-index", "4")
    assert code == cli.EXIT_TRUE
    assert "max_index=4" in out


# ---------------------------------------------------------------- axioms

def test_axioms_to_stdout(capsys, files):
    code, out = run(capsys, "axioms", files["colouring2"], "--rounds", "1")
    assert code == cli.EXIT_TRUE
    lines = out.splitlines()
    assert lines[0] == "; rule=sigma r=0 i=0"
    assert lines[-2:] == ["; sentences=6", "; universal=true"]


def test_axioms_tptp_to_file(capsys, files):
    target = files["dir"] / "out" / "colouring.p"
    code, out = run(capsys, "axioms", files["colouring2"], "--rounds", "0", "--format", "tptp", "-o", str(target))
    assert code == cli.EXIT_TRUE
    assert "sentences=3" in out
    text = target.read_text(encoding="utf-8")
    assert text.count("fof(") == 3
    cells = generate_axioms(schemes.colouring_scheme(2), 0)
    assert [(name, formula) for name, _, formula in read_fof(text)] == [(c.tag, c.sentence) for c in cells]


def test_axioms_json_to_stdout(capsys, files):
    code, out = run(capsys, "--json", "axioms", files["colouring2"], "--rounds", "0")
    assert code == cli.EXIT_TRUE
    report = json.loads(out)
    assert report["verdict"] == "written"
    assert report["detail"]["sentences"] == 3
    assert report["detail"]["universal"] is True
    assert report["detail"]["text"].startswith("; rule=sigma r=0 i=0")


def test_axioms_size_guard(capsys, files, monkeypatch):
    monkeypatch.setenv("SEPCLASS_AXIOM_SIZE_CAP", "1000000")
    code, out = run(capsys, "axioms", files["colouring3"], "--rounds", "2", "--max-index", "2")
    assert code == cli.EXIT_ERROR
    assert "verdict=error" in out


def test_axioms_report_non_universal_theories(capsys, files):
    code, out = run(capsys, "axioms", files["dupa_scheme"], "--rounds", "0")
    assert code == cli.EXIT_TRUE
    assert out.splitlines()[-1] == "; universal=false"


# ---------------------------------------------------------------- eval

def test_eval_sentence(capsys, files):
    code, out = run(capsys, "eval", files["c4"], files["edge"], "--scheme", files["colouring2"])
    assert code == cli.EXIT_TRUE
    assert "verdict=true" in out


def test_eval_with_assignment_and_sets(capsys, files):
    code, _ = run(capsys, "eval", files["c4"], files["marked"], "--assign", "x=0", "--mon", "1=0,2")
    assert code == cli.EXIT_TRUE
    code, _ = run(capsys, "eval", files["c4"], files["marked"], "--assign", "x=1", "--mon", "1=0,2")
    assert code == cli.EXIT_FALSE


def test_eval_rejects_bad_assignment(capsys, files):
    code, _ = run(capsys, "eval", files["c4"], files["marked"], "--assign", "x")
    assert code == cli.EXIT_ERROR


# ---------------------------------------------------------------- crosscheck and pseudoelementary

def test_crosscheck_agrees(capsys, files):
    code, out = run(capsys, "crosscheck", files["c5"], files["colouring2"], "--rounds", "1")
    assert code == cli.EXIT_TRUE
    assert "verdict=agree" in out and "cells=6" in out


def test_crosscheck_times_add_up_over_cells(capsys, files, monkeypatch):
    ticks = itertools.count()
    monkeypatch.setattr(cli.time, "perf_counter", lambda: float(next(ticks)))
    code, out = run(capsys, "--json", "crosscheck", files["c5"], files["colouring2"], "--rounds", "1")
    assert code == cli.EXIT_TRUE
    report = json.loads(out)
    assert report["detail"]["cells"] == 6
    assert report["timings"] == {"formula": 6.0, "game": 6.0}


def test_pseudo_to_stdout(capsys, files):
    code, out = run(capsys, "pseudo", files["colouring2"])
    assert code == cli.EXIT_TRUE
    assert "(rel R_sigma_1 2)" in out


def test_pseudo_tptp_to_file(capsys, files):
    target = files["dir"] / "theory.p"
    code, out = run(capsys, "pseudo", files["colouring2"], "--format", "tptp", "-o", str(target))
    assert code == cli.EXIT_TRUE
    assert "fresh_relations=R_sigma_1/2;R_sigma_2/2" in out
    assert "fof(theory_0, axiom," in target.read_text(encoding="utf-8")


def test_pseudo_generated_scheme_needs_max_index(capsys, files):
    code, _ = run(capsys, "pseudo", files["filters"])
    assert code == cli.EXIT_ERROR


def test_pseudo_check(capsys, files):
    code, out = run(capsys, "pseudo-check", files["p3"], files["colouring2"])
    assert code == cli.EXIT_TRUE
    assert "verdict=in" in out


# ---------------------------------------------------------------- scheme export

def test_scheme_export(capsys):
    code, out = run(capsys, "scheme", "poset", "3", "omega")
    assert code == cli.EXIT_TRUE
    assert out.startswith("(scheme")
    assert "poset-filter-3-omega" in out


def test_scheme_export_bad_parameters(capsys):
    code, out = run(capsys, "scheme", "colouring")
    assert code == cli.EXIT_ERROR
    assert "verdict=error" in out


def test_exported_scheme_loads_back(capsys, files):
    target = files["dir"] / "h.scm"
    code, _ = run(capsys, "scheme", "harmonious", "2", "-o", str(target))
    assert code == cli.EXIT_TRUE
    code, out = run(capsys, "check", files["p3"], str(target))
    assert code == cli.EXIT_FALSE
    assert "verdict=out" in out
