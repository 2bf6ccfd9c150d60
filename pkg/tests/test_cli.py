import json
import os

import jsonschema
import pytest

from cflab import cli


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def load_schema(name):
    path = os.path.join(os.path.dirname(cli.__file__), "schemas", f"{name}.schema.json")
    with open(path) as fh:
        return json.load(fh)


class TestExpand:
    def test_example(self, capsys):
        code, out, _ = run_cli(capsys, "expand", "--num", "2", "--den", "5")
        assert code == 0
        payload = json.loads(out)
        assert payload == [2, 2]
        jsonschema.validate(payload, load_schema("expand"))

    def test_convergent_csv(self, capsys):
        code, out, _ = run_cli(
            capsys, "expand", "--num", "113", "--den", "355", "--convergents", "-"
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert json.loads(lines[0]) == [3, 7, 16]
        assert lines[1].strip() == "p,q"
        assert lines[-1].strip() == "113,355"

    def test_domain_error_exit(self, capsys):
        code, _, err = run_cli(capsys, "expand", "--num", "5", "--den", "3")
        assert code == 1 and "domain" in err


class TestPhi:
    def test_json_schema(self, capsys):
        code, out, _ = run_cli(capsys, "phi", "--family", "powerlog", "--params", "1,2")
        assert code == 0
        payload = json.loads(out)
        jsonschema.validate(payload, load_schema("phi"))
        assert payload["B"] == 1.0
        assert payload["classifications"]["MAIN3"] == "Divergent"

    def test_infinite_B_serialized(self, capsys):
        code, out, _ = run_cli(capsys, "phi", "--family", "doubleexp", "--params", "2,3")
        payload = json.loads(out)
        jsonschema.validate(payload, load_schema("phi"))
        assert payload["B"] == "inf" and payload["b"] == 3.0


class TestDim:
    def test_json_schema(self, capsys):
        code, out, _ = run_cli(
            capsys, "dim", "--set", "F3", "--phi-family", "doubleexp",
            "--phi-params", "2,3", "--tol", "1e-4",
        )
        assert code == 0
        payload = json.loads(out)
        jsonschema.validate(payload, load_schema("dim"))
        assert payload["s"] == 0.25 and payload["branch"] == "B=inf"

    def test_finite_B(self, capsys):
        code, out, _ = run_cli(
            capsys, "dim", "--set", "F3", "--phi-family", "exp",
            "--phi-params", "2", "--tol", "1e-4",
        )
        payload = json.loads(out)
        jsonschema.validate(payload, load_schema("dim"))
        assert 0.5 < payload["s"] < 1.0
        assert payload["branch"] == "B_finite" and payload["hi"] - payload["lo"] <= 2e-4


class TestSeries:
    def test_single_M(self, capsys):
        code, out, _ = run_cli(
            capsys, "series", "--id", "S3", "--params", "ell=1", "--M", "10"
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0].strip() == "M,value,error_bound,predicted,ratio"
        cells = lines[1].split(",")
        assert float(cells[1]) == pytest.approx(7381 / 2520, rel=1e-12)

    def test_grid(self, capsys):
        code, out, _ = run_cli(
            capsys, "series", "--id", "S1", "--params", "ell=2",
            "--M-grid", "100:10000:3",
        )
        assert code == 0
        assert len(out.strip().splitlines()) == 4

    def test_resource_exit(self, capsys):
        code, _, err = run_cli(
            capsys, "series", "--id", "S1", "--params", "ell=4", "--M", "1e9"
        )
        assert code == 2 and "resource" in err


class TestEventsAndPressure:
    def test_events_csv(self, capsys):
        code, out, _ = run_cli(
            capsys, "events", "--ell", "1", "--phi-family", "powerlog",
            "--phi-params", "0,0", "--horizon", "50", "--seed", "1",
            "--samples", "3",
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0].strip() == "sample_id,tau_F,tau_E,j,k,overlap"
        assert len(lines) == 4

    def test_pressure_table(self, capsys):
        code, out, _ = run_cli(
            capsys, "pressure", "--s", "0.8,1.0", "--alphabet", "100"
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0].strip() == "s,N,pressure"
        p08 = float(lines[1].split(",")[2])
        p10 = float(lines[2].split(",")[2])
        assert p08 > p10


class TestExperimentCli:
    def test_run_and_report(self, tmp_path, capsys):
        config = tmp_path / "exp.cfg"
        config.write_text(
            "kind = khinchin\nell = 1\nhorizon = 1000\nsamples = 20\n"
            "seed = 11\ncheckpoints = 100,1000\n"
        )
        out_dir = tmp_path / "out"
        code, out, _ = run_cli(
            capsys, "experiment", "run", "--config", str(config), "--out", str(out_dir)
        )
        assert code == 0
        payload = json.loads(out)
        jsonschema.validate(payload, load_schema("experiment"))
        assert (out_dir / "khinchin.csv").exists()
        code, out, _ = run_cli(capsys, "experiment", "report", "--dir", str(out_dir))
        assert code == 0
        assert "khinchin.csv" in out

    def test_env_threads_fallback(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("CFLAB_THREADS", "2")
        config = tmp_path / "exp.cfg"
        config.write_text(
            "kind = trimmed\nell = 1\nhorizon = 500\nsamples = 8\nseed = 3\n"
            "checkpoints = 500\n"
        )
        code, out, _ = run_cli(
            capsys, "experiment", "run", "--config", str(config),
            "--out", str(tmp_path / "o2"),
        )
        assert code == 0


class TestErrorsAndHelp:
    def test_unknown_flag_rejected(self, capsys):
        code, _, err = run_cli(capsys, "expand", "--num", "1", "--den", "2", "--bogus")
        assert code == 1

    def test_unknown_subcommand(self, capsys):
        code, _, _ = run_cli(capsys, "frobnicate")
        assert code == 1

    def test_help_lists_flags(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["dim", "--help"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        for flag in ("--set", "--phi-family", "--phi-params", "--tol"):
            assert flag in out
