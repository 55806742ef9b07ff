import json
import math

import numpy as np
import pytest
import jsonschema

from plabs.cli import main
from plabs.core import AbsNormalForm
from plabs.cpl import CplSystem
from plabs.docio import (document_from_dict, document_to_dict, load_document,
                         problem_schema, report_schema, save_document)
from plabs.errors import DocumentError
from plabs.gallery import cyclic, random_form

from test_graph import check_dot_grammar


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--format", "json")
    report = json.loads(out)
    jsonschema.validate(report, report_schema())
    return code, report, err


class TestDocio:
    def test_round_trip_bit_exact(self, tmp_path, rng):
        form = random_form(3, 4, seed=77)
        path = tmp_path / "f.json"
        save_document(form, path, name="roundtrip", target=[0.1, 1 / 3, math.pi])
        doc = load_document(path)
        for name in ("c", "b", "Z", "L", "J", "Y"):
            assert getattr(doc.problem, name).tobytes() == getattr(form, name).tobytes()
        assert doc.target.tolist() == [0.1, 1 / 3, math.pi]
        # a second hop reproduces the same bytes on disk
        path2 = tmp_path / "g.json"
        save_document(doc.problem, path2, name="roundtrip",
                      target=doc.target)
        assert path.read_text() == path2.read_text()

    def test_awkward_floats_survive(self, tmp_path):
        vals = [5e-324, 1.7976931348623157e308, -0.1, 2**-52, 1 + 2**-52]
        sys = CplSystem(S=np.diag(vals), c_hat=vals)
        path = tmp_path / "c.json"
        save_document(sys, path)
        loaded = load_document(path).problem
        assert loaded.c_hat.tobytes() == sys.c_hat.tobytes()
        assert loaded.S.tobytes() == sys.S.tobytes()

    def test_documents_validate_against_schema(self, tmp_path):
        schema = problem_schema()
        jsonschema.validate(document_to_dict(random_form(2, 3, seed=1)), schema)
        jsonschema.validate(document_to_dict(cyclic(3, 0.65)), schema)

    def test_triangularity_enforced_on_load(self):
        doc = document_to_dict(random_form(2, 3, seed=2))
        doc["L"][0][2] = 1.0
        with pytest.raises(DocumentError):
            document_from_dict(doc)

    def test_kind_and_shape_errors(self):
        with pytest.raises(DocumentError):
            document_from_dict({"kind": "mystery"})
        with pytest.raises(DocumentError):
            document_from_dict({"kind": "cpl", "s": 2, "S": [[1.0]], "c_hat": [0.0, 0.0]})


class TestGenDiagnose:
    def test_rump_diagnose_reports_sign_radius(self, tmp_path, capsys):
        path = tmp_path / "rump.json"
        assert run(capsys, "gen", "--example", "rump", "--n", "5", "-o", str(path))[0] == 0
        code, report, _ = run_json(capsys, "diagnose", str(path))
        assert code == 0
        assert report["sign_real_radius"] == pytest.approx(0.9, abs=1e-8)
        assert report["sigma_coherent"] is True

    def test_cyclic_newton_cycles_exit_3(self, tmp_path, capsys):
        path = tmp_path / "c.json"
        run(capsys, "gen", "--example", "cyclic", "--s", "3", "--a", "0.65",
            "-o", str(path))
        code, report, _ = run_json(capsys, "solve", str(path), "--method",
                                   "newton-cpl", "--z0", "1,1,-1")
        assert code == 3
        assert report["status"] == "cycled"
        assert report["period"] == 3

    def test_cyclic_signed_ge_solves(self, tmp_path, capsys):
        path = tmp_path / "c.json"
        run(capsys, "gen", "--example", "cyclic", "--s", "3", "--a", "0.65",
            "-o", str(path))
        code, report, _ = run_json(capsys, "solve", str(path), "--method", "signed-ge")
        assert code == 0
        assert np.allclose(report["z"], [1 / 0.35] * 3, atol=1e-9)
        assert report["verified_residual"] <= 1e-10

    def test_modulus_and_seidel_on_cpl_document(self, tmp_path, capsys):
        path = tmp_path / "c.json"
        run(capsys, "gen", "--example", "cyclic", "--s", "4", "--a", "0.5",
            "-o", str(path))
        for method in ("modulus", "seidel"):
            code, report, _ = run_json(capsys, "solve", str(path), "--method", method)
            assert code == 0
            assert np.allclose(report["z"], [2.0] * 4, atol=1e-8)


class TestSubcommands:
    def test_validate_text_and_json(self, tmp_path, capsys):
        path = tmp_path / "k.json"
        run(capsys, "gen", "--example", "one_d_kink", "--zeta", "0.5", "-o", str(path))
        code, out, _ = run(capsys, "validate", str(path))
        assert code == 0 and "switching depth nu: 1" in out
        code, report, _ = run_json(capsys, "validate", str(path))
        assert report["ok"] is True and report["nu"] == 1

    def test_eval(self, tmp_path, capsys):
        path = tmp_path / "k.json"
        run(capsys, "gen", "--example", "one_d_kink", "--zeta", "1.0", "-o", str(path))
        code, report, _ = run_json(capsys, "eval", str(path), "--x", "0")
        assert code == 0
        assert report["z"] == [-1.0, 1.0]
        assert report["y"] == [0.0]
        assert report["sigma"] == "-+"

    def test_oracle(self, tmp_path, capsys):
        path = tmp_path / "c.json"
        run(capsys, "gen", "--example", "cyclic", "--s", "3", "--a", "0.65",
            "-o", str(path))
        code, report, _ = run_json(capsys, "oracle", str(path))
        assert code == 0
        assert report["count"] == 1
        assert np.allclose(report["solutions"][0], [1 / 0.35] * 3, atol=1e-9)

    def test_lcp(self, tmp_path, capsys):
        path = tmp_path / "c.json"
        run(capsys, "gen", "--example", "cyclic", "--s", "3", "--a", "0.65",
            "-o", str(path))
        code, report, _ = run_json(capsys, "lcp", str(path))
        assert code == 0
        assert report["p_matrix"] is True
        assert len(report["solutions"]) == 1

    def test_graph_with_dot_export(self, tmp_path, capsys):
        path = tmp_path / "c.json"
        dot = tmp_path / "g.dot"
        run(capsys, "gen", "--example", "cyclic", "--s", "3", "--a", "0.65",
            "-o", str(path))
        code, report, _ = run_json(capsys, "graph", str(path), "--dot", str(dot))
        assert code == 0
        assert any(c["cycle_length"] == 3 for c in report["components"])
        assert any(c["fixed_point"] for c in report["components"])
        declared, edges = check_dot_grammar(dot.read_text())
        assert len(declared) == 8

    def test_tridiag_solve(self, tmp_path, capsys):
        path = tmp_path / "t.json"
        run(capsys, "gen", "--example", "tridiag_max", "--n", "12", "-o", str(path))
        code, report, _ = run_json(capsys, "solve", str(path), "--method",
                                   "newton-cpl")
        assert code == 0 and report["exact"]


class TestExitCodes:
    def test_missing_file_is_2(self, capsys):
        code, _, err = run(capsys, "validate", "/nonexistent/x.json")
        assert code == 2

    def test_malformed_json_is_2(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert run(capsys, "validate", str(path))[0] == 2

    def test_usage_error_is_1(self, capsys, tmp_path):
        assert run(capsys, "solve")[0] == 1          # missing args
        assert run(capsys, "frobnicate")[0] == 1     # unknown subcommand
        path = tmp_path / "k.json"
        run(capsys, "gen", "--example", "one_d_kink", "--zeta", "0.5", "-o", str(path))
        assert run(capsys, "eval", str(path), "--x", "1,2,3")[0] == 1
        # a family parameter missing entirely is also a usage error
        assert run(capsys, "gen", "--example", "one_d_kink", "-o",
                   str(tmp_path / "y.json"))[0] == 1

    def test_unknown_example_is_1(self, capsys, tmp_path):
        assert run(capsys, "gen", "--example", "nope", "-o",
                   str(tmp_path / "x.json"))[0] == 1

    def test_singular_smooth_part_needs_regularize(self, tmp_path, capsys):
        path = tmp_path / "s.json"
        run(capsys, "gen", "--example", "schueth", "-o", str(path))
        code, _, err = run(capsys, "oracle", str(path))
        assert code == 4 and "regularize" in err
        code, report, _ = run_json(capsys, "oracle", str(path), "--regularize")
        assert code == 0
        assert report["count"] >= 1

    def test_too_large_is_4(self, tmp_path, capsys):
        path = tmp_path / "r.json"
        run(capsys, "gen", "--example", "rump", "--n", "18", "-o", str(path))
        assert run(capsys, "oracle", str(path))[0] == 4

    def test_help_is_0(self, capsys):
        assert run(capsys, "--help")[0] == 0

    def test_maxiter_is_3(self, tmp_path, capsys):
        path = tmp_path / "t.json"
        run(capsys, "gen", "--example", "tridiag_max", "--n", "32", "-o", str(path))
        code, report, _ = run_json(capsys, "solve", str(path), "--method",
                                   "modulus", "--maxit", "3")
        assert code == 3 and report["status"] == "maxiter"


class TestLimits:
    def test_env_cap_override(self, tmp_path, capsys, monkeypatch):
        path = tmp_path / "r.json"
        run(capsys, "gen", "--example", "rump", "--n", "8", "-o", str(path))
        monkeypatch.setenv("PLABS_LIMIT", "4")
        assert run(capsys, "oracle", str(path))[0] == 4
        monkeypatch.setenv("PLABS_LIMIT", "10")
        assert run(capsys, "oracle", str(path))[0] == 0

    def test_explicit_limit_beats_env(self, tmp_path, capsys, monkeypatch):
        path = tmp_path / "r.json"
        run(capsys, "gen", "--example", "rump", "--n", "8", "-o", str(path))
        monkeypatch.setenv("PLABS_LIMIT", "4")
        assert run(capsys, "oracle", str(path), "--limit", "9")[0] == 0

    def test_large_limit_warns(self, tmp_path, capsys):
        path = tmp_path / "r.json"
        run(capsys, "gen", "--example", "rump", "--n", "4", "-o", str(path))
        code, _, err = run(capsys, "oracle", str(path), "--limit", "21")
        assert code == 0 and "warning" in err


class TestTargetHandling:
    def test_target_folds_into_solve(self, tmp_path, capsys):
        form = random_form(3, 3, seed=55, target_norm=0.4)
        # pick the image of a known point as target; Newton must recover a root
        from plabs.core import evaluate

        x_star = np.array([0.3, -0.2, 0.5])
        y_target = evaluate(form, x_star).y
        path = tmp_path / "t.json"
        save_document(form, path, target=y_target)
        code, report, _ = run_json(capsys, "solve", str(path), "--method", "newton-opl")
        assert code == 0
        assert report["verified_residual"] <= 1e-9
