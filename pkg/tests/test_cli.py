import json
import subprocess
import sys

import pytest

from recatom import __version__
from recatom.cli import (
    EXIT_CONFIG,
    EXIT_FAIL,
    EXIT_OK,
    EXIT_RUNTIME,
    EXIT_USAGE,
    SEED_ENV,
    UsageError,
    build_config,
    main,
    parse_invocation,
    render_invocation,
)
from recatom.montecarlo import ConfigError

BIN = "binomial:r=2,alpha=0.5"


def write_config(path, **overrides):
    data = {"kind": "clt", "dist": BIN, "params": {"k": 64}, "replicates": 50, "master_seed": 11}
    data.update(overrides)
    path.write_text(json.dumps(data))
    return str(path)


class TestParse:
    def test_happy_path(self):
        inv = parse_invocation(["clt", "--dist", BIN, "--k", "4096", "--reps", "20000", "--seed", "42", "--workers", "4"])
        assert inv.subcommand == "clt"
        assert inv.flags == {"dist": BIN, "k": 4096, "reps": 20000, "seed": 42, "workers": 4}
        assert inv.output == "csv" and inv.out_path is None

    def test_unknown_subcommand(self, capsys):
        assert main(["frobnicate"]) == EXIT_USAGE
        assert "usage:" in capsys.readouterr().err

    def test_bad_dist_names_parameter(self, capsys):
        assert main(["clt", "--dist", "binomial:r=0,alpha=0.5"]) == EXIT_CONFIG
        assert "r must be >= 1" in capsys.readouterr().err

    @pytest.mark.parametrize(
        "argv",
        [
            ["clt", "--dist", BIN, "--k", "many"],
            ["clt", "--dist", BIN, "--reps", "0"],
            ["clt", "--dist", BIN, "--seed", "-3"],
            ["clt", "--dist", BIN, "--beta", "0.1"],
            ["coverage", "--dist", BIN, "--formula", "wrong"],
            ["be-exact", "--k", "1,x"],
            [],
        ],
    )
    def test_usage_errors(self, argv):
        with pytest.raises(UsageError) as info:
            parse_invocation(argv)
        assert info.value.code == EXIT_USAGE

    @pytest.mark.parametrize(
        "argv",
        [
            ["clt", "--dist", BIN, "--k", "64", "--reps", "10", "--seed", "18446744073709551615"],
            ["be-exact", "--dist", BIN, "--k", "1,2,16384", "--p", "0.25,0.5"],
            ["coverage", "--dist", BIN, "--n", "100", "--u", "0.1", "--formula", "as-published", "--output", "both",
             "--out", "run", "--table-out", "tab.csv"],
            ["lil", "--config", "c.json", "--k-max", "5000", "--k-min", "100", "--endpoint", "lower"],
            ["dominance", "--dist", "binomial:r=2,alpha=0.7", "--beta", "0.3"],
            ["validate-config", "--config", "c.json"],
            ["version"],
        ],
    )
    def test_render_round_trip(self, argv):
        inv = parse_invocation(argv)
        assert parse_invocation(render_invocation(inv)) == inv


class TestBuildConfig:
    def test_precedence(self, tmp_path):
        path = write_config(tmp_path / "c.json")
        inv = parse_invocation(["clt", "--config", path])
        assert build_config(inv, {}).master_seed == 11
        inv = parse_invocation(["clt", "--config", path, "--seed", "12"])
        assert build_config(inv, {}).master_seed == 12
        assert build_config(inv, {SEED_ENV: "13"}).master_seed == 13

    def test_flags_override_config_params(self, tmp_path):
        path = write_config(tmp_path / "c.json")
        cfg = build_config(parse_invocation(["clt", "--config", path, "--k", "128", "--reps", "7"]), {})
        assert cfg.params["k"] == 128 and cfg.replicates == 7

    def test_conflicting_dist(self, tmp_path, capsys, monkeypatch):
        path = write_config(tmp_path / "c.json")
        with pytest.raises(ConfigError):
            build_config(parse_invocation(["clt", "--config", path, "--dist", "binomial:r=3,alpha=0.5"]), {})
        # the same law given both ways is not a conflict
        build_config(parse_invocation(["clt", "--config", path, "--dist", BIN]), {})
        monkeypatch.delenv(SEED_ENV, raising=False)
        assert main(["clt", "--config", path, "--dist", "binomial:r=3,alpha=0.5"]) == EXIT_CONFIG

    def test_kind_mismatch(self, tmp_path):
        path = write_config(tmp_path / "c.json")
        with pytest.raises(ConfigError):
            build_config(parse_invocation(["lil", "--config", path]), {})

    def test_bad_env_seed(self):
        with pytest.raises(ConfigError):
            build_config(parse_invocation(["clt", "--dist", BIN]), {SEED_ENV: "abc"})

    def test_missing_dist(self):
        with pytest.raises(ConfigError):
            build_config(parse_invocation(["clt"]), {})

    def test_formula_spelling(self):
        cfg = build_config(parse_invocation(["coverage", "--dist", BIN, "--formula", "as-published"]), {})
        assert cfg.params["formula"] == "as_published"


class TestMain:
    def test_version(self, capsys):
        assert main(["version"]) == EXIT_OK
        assert capsys.readouterr().out.strip() == f"recatom {__version__}"

    def test_validate_config(self, tmp_path, capsys):
        path = write_config(tmp_path / "c.json")
        assert main(["validate-config", "--config", path]) == EXIT_OK
        shown = json.loads(capsys.readouterr().out)
        assert shown["params"]["k"] == 64 and "ks_max" in shown["params"]
        bad = write_config(tmp_path / "bad.json", params={"k": -1})
        assert main(["validate-config", "--config", bad]) == EXIT_CONFIG

    def test_csv_and_json_agree(self, tmp_path, monkeypatch):
        monkeypatch.delenv(SEED_ENV, raising=False)
        argv = ["hitting-law", "--dist", BIN, "--k", "2", "--reps", "300", "--seed", "5"]
        code = main(argv + ["--output", "both", "--out", str(tmp_path / "run")])
        csv_text = (tmp_path / "run.csv").read_text()
        data = json.loads((tmp_path / "run.json").read_text())
        rows = [line.split(",") for line in csv_text.splitlines()[1:]]
        assert [r[0] for r in rows] == [r["name"] for r in data["results"]]
        for row, res in zip(rows, data["results"]):
            assert float(row[1]) == pytest.approx(res["value"], rel=1e-8)
        assert code == (EXIT_OK if data["pass"] else EXIT_FAIL)

    def test_table_out(self, tmp_path, monkeypatch):
        monkeypatch.delenv(SEED_ENV, raising=False)
        argv = ["be-exact", "--dist", BIN, "--k", "1,2,3", "--p", "0.5", "--out", str(tmp_path / "r.csv"),
                "--table-out", str(tmp_path / "t.csv")]
        assert main(argv) in (EXIT_OK, EXIT_FAIL)
        lines = (tmp_path / "t_be.csv").read_text().splitlines()
        assert len(lines) == 4

    def test_failing_threshold(self, monkeypatch, capsys):
        monkeypatch.delenv(SEED_ENV, raising=False)
        # 30 replicates cannot bring the TV distance under 0.02
        assert main(["hitting-law", "--dist", BIN, "--k", "5", "--reps", "30"]) == EXIT_FAIL
        assert ",fail" in capsys.readouterr().out

    def test_unwritable_output(self, tmp_path, monkeypatch):
        monkeypatch.delenv(SEED_ENV, raising=False)
        target = tmp_path / "missing-dir" / "out.csv"
        assert main(["finiteness", "--dist", BIN, "--horizon", "50", "--reps", "20", "--out", str(target)]) == EXIT_RUNTIME

    def test_byte_identical_runs(self, tmp_path, monkeypatch):
        monkeypatch.delenv(SEED_ENV, raising=False)
        outs = []
        for i, workers in enumerate(("1", "2", "1")):
            out = tmp_path / f"o{i}.csv"
            main(["multinomial", "--dist", BIN, "--n", "400", "--reps", "200", "--seed", "99", "--workers", workers,
                  "--out", str(out)])
            outs.append(out.read_bytes())
        assert outs[0] == outs[1] == outs[2]


def test_console_module():
    proc = subprocess.run([sys.executable, "-m", "recatom", "version"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.startswith("recatom ")
