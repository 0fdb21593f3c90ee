"""End-to-end CLI behaviour: artefacts, exit codes, fingerprint checks."""

import json
import shutil
import sys

import pytest

from suptest.cli import main
from suptest.encoding import canonical_dumps
from suptest.mutation import OUTPUT_FAULT, generate_mutants
from suptest.supervisor import load_behavior, to_guarded_actions


@pytest.fixture()
def behaviour(tmp_path, welding_cell_path):
    dest = tmp_path / "welding-cell.cb"
    shutil.copy(welding_cell_path, dest)
    return dest


@pytest.fixture()
def translated(tmp_path, behaviour):
    out = tmp_path / "artefacts"
    assert main(["translate", str(behaviour), "--out", str(out)]) == 0
    return out


@pytest.fixture()
def abstracted(tmp_path, translated):
    sfsm_path = translated / "reference.sfsm"
    assert main(["abstract", str(sfsm_path), "--out", str(translated)]) == 0
    assert main(["classes", str(sfsm_path),
                 "--out", str(translated / "partition.json")]) == 0
    return translated


def read(path):
    return json.loads(path.read_text())


class TestTranslate:
    def test_writes_program_and_sfsm(self, translated):
        program = read(translated / "program.gap")
        reference = read(translated / "reference.sfsm")
        assert len(program["actions"]) == 16
        assert reference["initial"] == "HS0_HC0_HRW0"
        assert "derivedFrom" in program and "derivedFrom" in reference

    def test_missing_file_exits_2(self, tmp_path, capsys):
        assert main(["translate", str(tmp_path / "nope.cb")]) == 2
        assert "error:" in capsys.readouterr().err


class TestGenerateAndCheck:
    def test_h_suite_round_trip(self, abstracted, capsys):
        fsm = abstracted / "fsm.json"
        suite = abstracted / "suite-h.json"
        assert main(["generate", str(fsm), "--out", str(suite)]) == 0
        assert "h-suite" in capsys.readouterr().out
        assert main(["check-suite", str(fsm), str(suite)]) == 0
        assert "PASS" in capsys.readouterr().out

    def test_m_below_state_count_fails(self, abstracted):
        fsm = abstracted / "fsm.json"
        code = main(["generate", str(fsm), "--m", "1",
                     "--out", str(abstracted / "bad.json")])
        assert code == 2

    def test_check_refuses_foreign_suite(self, abstracted, capsys):
        fsm = abstracted / "fsm.json"
        suite_path = abstracted / "suite-h.json"
        assert main(["generate", str(fsm), "--out", str(suite_path)]) == 0
        doc = read(suite_path)
        doc["referenceFingerprint"] = "0" * 16
        suite_path.write_text(canonical_dumps(doc))
        assert main(["check-suite", str(fsm), str(suite_path)]) == 2
        assert "different reference" in capsys.readouterr().err


class TestConcretize:
    def test_refuses_mismatched_artefacts(self, abstracted, capsys):
        fsm = abstracted / "fsm.json"
        suite = abstracted / "suite-h.json"
        assert main(["generate", str(fsm), "--out", str(suite)]) == 0
        partition = abstracted / "partition.json"
        doc = read(partition)
        doc["derivedFrom"]["sfsm"] = "f" * 16
        partition.write_text(canonical_dumps(doc))
        code = main(["concretize", str(suite), str(partition),
                     str(abstracted / "abstraction.json"),
                     "--out", str(abstracted / "concrete.json")])
        assert code == 2
        assert "different SFSMs" in capsys.readouterr().err


class TestRun:
    def concrete_suite(self, abstracted):
        fsm = abstracted / "fsm.json"
        suite = abstracted / "suite-h.json"
        concrete = abstracted / "suite-concrete.json"
        assert main(["generate", str(fsm), "--out", str(suite)]) == 0
        assert main(["concretize", str(suite),
                     str(abstracted / "partition.json"),
                     str(abstracted / "abstraction.json"),
                     "--out", str(concrete)]) == 0
        return concrete

    def test_reference_passes(self, abstracted, capsys):
        concrete = self.concrete_suite(abstracted)
        sut = (f"{sys.executable} -m suptest serve-reference "
               f"{abstracted / 'program.gap'}")
        assert main(["run", str(concrete), "--sut", sut,
                     "--out", str(abstracted / "report.json")]) == 0
        assert "COMPLETE PASS" in capsys.readouterr().out
        assert read(abstracted / "report.json")["completePass"] is True

    def test_mutant_sut_fails(self, abstracted, behaviour, capsys):
        concrete = self.concrete_suite(abstracted)
        program = to_guarded_actions(load_behavior(behaviour))
        mutant = generate_mutants(program, operators=[OUTPUT_FAULT])[0]
        mutant_path = abstracted / "mutant.gap"
        mutant_path.write_text(canonical_dumps(mutant.target.to_obj()))
        sut = f"{sys.executable} -m suptest serve-reference {mutant_path}"
        assert main(["run", str(concrete), "--sut", sut]) == 1
        assert "NOT CONFORMING" in capsys.readouterr().out


class TestMutate:
    def test_abstract_suite_kills_fsm_mutants(self, abstracted, capsys):
        fsm = abstracted / "fsm.json"
        suite = abstracted / "suite-h.json"
        assert main(["generate", str(fsm), "--out", str(suite)]) == 0
        code = main(["mutate", str(fsm), "--kind", "fsm",
                     "--suite", str(suite),
                     "--ops", OUTPUT_FAULT, "--limit", "25",
                     "--csv", str(abstracted / "mutants.csv")])
        assert code == 0
        assert "score: 1.000" in capsys.readouterr().out
        csv = (abstracted / "mutants.csv").read_text().splitlines()
        assert csv[0] == "mutant,status,first_failing_case"
        assert len(csv) == 26


class TestRender:
    def test_sfsm_and_fsm_dot(self, abstracted):
        for model in ("reference.sfsm", "fsm.json"):
            out = abstracted / f"{model}.dot"
            assert main(["render", str(abstracted / model),
                         "--out", str(out)]) == 0
            assert out.read_text().startswith("digraph")


class TestPipeline:
    def test_complete_pass_and_artefacts(self, tmp_path, behaviour, capsys):
        out = tmp_path / "pipeline"
        assert main(["pipeline", str(behaviour), "--out", str(out)]) == 0
        assert "COMPLETE PASS" in capsys.readouterr().out
        for name in ("program.gap", "reference.sfsm", "partition.json",
                     "fsm.json", "abstraction.json", "suite-h.json",
                     "suite-concrete.json", "reference.dot", "fsm.dot",
                     "report.json"):
            assert (out / name).exists(), name

    def test_repeat_runs_byte_identical(self, tmp_path, behaviour):
        out1 = tmp_path / "run1"
        out2 = tmp_path / "run2"
        assert main(["pipeline", str(behaviour), "--out", str(out1)]) == 0
        assert main(["pipeline", str(behaviour), "--out", str(out2)]) == 0
        for child in sorted(out1.iterdir()):
            assert (out2 / child.name).read_bytes() == child.read_bytes(), child.name

    def test_config_env_override(self, tmp_path, behaviour, monkeypatch):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"m_extra": 1}))
        monkeypatch.setenv("SUPTEST_CONFIG", str(config))
        out = tmp_path / "pipeline"
        assert main(["pipeline", str(behaviour), "--out", str(out)]) == 0
        suite = read(out / "suite-h.json")
        fsm = read(out / "fsm.json")
        assert suite["mBound"] == len(fsm["states"]) + 1
