import json

import pytest

from hdw.cli import main


def write_model(tmp_path, data, name="model.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


@pytest.fixture
def oscillator_model(tmp_path):
    return write_model(tmp_path, {
        "name": "oscillator",
        "chart": {"m": 1, "n": 1},
        "hamiltonian": "p1_1^2/2 + u1^2/2",
        "currents": [{"name": "action", "F": "u1*p1_1"}],
        "initial": {"u": ["1"], "p": ["0"]},
        "solver": {"dt": 0.01, "t_final": 0.1},
    })


@pytest.fixture
def wave_model(tmp_path):
    K = 32
    dx = 2 * 3.141592653589793 / K
    return write_model(tmp_path, {
        "model": "wave",
        "currents": [{"name": "flux", "Y": ["1"], "beta": ["0", "0"]}],
        "initial": {"u": ["sin(x2)"], "M": ["-cos(x2)"]},
        "solver": {"dt": dx / 4, "t_final": 0.2, "K": K, "dx": dx},
    })


class TestParseCheck:
    def test_valid(self, capsys):
        assert main(["parse-check", "p1_1^2/2"]) == 0
        assert "ok:" in capsys.readouterr().out

    def test_invalid(self, capsys):
        assert main(["parse-check", "u1 + * 2"]) == 2
        assert "offset 5" in capsys.readouterr().err

    def test_mixed(self):
        assert main(["parse-check", "u1", "((("]) == 2


class TestBracket:
    def test_prints_expression_and_value(self, oscillator_model, capsys):
        code = main(["bracket", "--model", oscillator_model,
                     "--at", "x1=0,u1=1,p1_1=2"])
        assert code == 0
        out = capsys.readouterr().out
        assert "action:" in out
        assert "3" in out  # frozen oscillator value

    def test_unknown_current(self, oscillator_model, capsys):
        assert main(["bracket", "--model", oscillator_model,
                     "--current", "nope"]) == 2
        assert "available" in capsys.readouterr().err

    def test_missing_model_file(self, tmp_path):
        assert main(["bracket", "--model", str(tmp_path / "absent.json")]) == 2


class TestSimulate:
    def test_ode_outputs(self, oscillator_model, tmp_path, capsys):
        out = tmp_path / "run"
        assert main(["simulate", "--model", oscillator_model,
                     "--out", str(out)]) == 0
        csv = (out / "trajectory.csv").read_text().splitlines()
        assert csv[0] == "t,u1,p1_1"
        assert len(csv) == 12  # header + 11 snapshots
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["model"] == "oscillator"
        assert manifest["residual_norms"]["evolution_u"]["max"] < 1e-3

    def test_field_outputs(self, wave_model, tmp_path):
        out = tmp_path / "run"
        assert main(["simulate", "--model", wave_model, "--out", str(out)]) == 0
        csv = (out / "trajectory.csv").read_text().splitlines()
        assert csv[0] == "t,x,u1,M1,P1"

    def test_byte_stable(self, wave_model, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["simulate", "--model", wave_model, "--out", str(out1)])
        main(["simulate", "--model", wave_model, "--out", str(out2)])
        assert (out1 / "trajectory.csv").read_bytes() == (out2 / "trajectory.csv").read_bytes()
        assert (out1 / "manifest.json").read_bytes() == (out2 / "manifest.json").read_bytes()

    def test_missing_solver_block(self, tmp_path):
        path = write_model(tmp_path, {
            "chart": {"m": 1, "n": 1},
            "hamiltonian": "p1_1^2/2",
            "initial": {"u": ["0"], "p": ["0"]},
        })
        assert main(["simulate", "--model", path, "--out", str(tmp_path)]) == 2


class TestModelFileValidation:
    def test_unknown_top_level_key(self, tmp_path, capsys):
        path = write_model(tmp_path, {"chart": {"m": 1, "n": 1},
                                      "hamiltonian": "0", "frobnicate": 1})
        assert main(["bracket", "--model", path]) == 2
        assert "frobnicate" in capsys.readouterr().err

    def test_unknown_nested_key(self, tmp_path):
        path = write_model(tmp_path, {"chart": {"m": 1, "n": 1, "q": 2},
                                      "hamiltonian": "0"})
        assert main(["bracket", "--model", path]) == 2

    def test_bad_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert main(["bracket", "--model", str(path)]) == 2

    def test_unknown_builtin(self, tmp_path):
        path = write_model(tmp_path, {"model": "antigravity"})
        assert main(["bracket", "--model", path]) == 2

    def test_hamiltonian_out_of_scope(self, tmp_path):
        path = write_model(tmp_path, {"chart": {"m": 1, "n": 1},
                                      "hamiltonian": "u7"})
        assert main(["bracket", "--model", path]) == 2

    def test_current_mixing_forms(self, tmp_path, capsys):
        path = write_model(tmp_path, {
            "chart": {"m": 2, "n": 1}, "hamiltonian": "0",
            "currents": [{"name": "x", "F": "u1", "Y": ["1"]}]})
        assert main(["bracket", "--model", path]) == 2
        assert "mixes" in capsys.readouterr().err


class TestVerify:
    def test_single_suite(self, capsys, tmp_path):
        code = main(["verify", "--suite", "m1-reduction",
                     "--out", str(tmp_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "[PASS] mechanics_reduction" in out
        payload = json.loads((tmp_path / "verification.json").read_text())
        assert payload[0]["passed"] is True

    def test_seed_flag(self, capsys):
        assert main(["verify", "--suite", "m1-reduction", "--seed", "9"]) == 0

    def test_unknown_suite_is_usage_error(self):
        assert main(["verify", "--suite", "bogus"]) == 2

    def test_usage_error_on_no_command(self):
        assert main([]) == 2


def test_numeric_failure_exit_code(tmp_path):
    # {u1, ln(p1_1)} = 1/p1_1, so evaluating at p1_1=0 is a numeric failure (3)
    path = write_model(tmp_path, {
        "chart": {"m": 1, "n": 1},
        "hamiltonian": "ln(p1_1)",
        "currents": [{"name": "q", "F": "u1"}],
    })
    assert main(["bracket", "--model", path, "--at", "x1=0,u1=1,p1_1=0"]) == 3
