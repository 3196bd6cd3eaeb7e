import json
import os

import numpy as np
import pytest

from spinmetro import cli
from spinmetro.config import ConfigError, validate_config
from spinmetro.tables import (ResultTable, config_hash, read_csv_table,
                              read_json_table, write_table)

GOOD_ESTIMATION = """
experiment = "estimation"
seed = 5
estimator = "sme"
repetitions = [1, 10]
trials = 200
phi_min = -0.5
phi_max = 0.5
points = 3
search_lo = -1.5707963
search_hi = 1.5707963

[sensor]
state = "css"
n_atoms = 4
basis = "jy"
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


class TestValidation:
    def test_good_config(self, tmp_path):
        assert cli.main(["validate", write(tmp_path, "c.toml",
                                           GOOD_ESTIMATION)]) == 0

    def test_negative_delta2_names_key(self, tmp_path, capsys):
        cfg = """
experiment = "oqi"
n_atoms = 4
[prior]
kind = "gaussian"
delta2 = -0.1
"""
        rc = cli.main(["validate", write(tmp_path, "c.toml", cfg)])
        assert rc == 2
        assert "prior.delta2" in capsys.readouterr().err

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = GOOD_ESTIMATION + "\nbogus_knob = 3\n"
        rc = cli.main(["validate", write(tmp_path, "c.toml", cfg)])
        assert rc == 2
        assert "bogus_knob" in capsys.readouterr().err

    def test_unknown_sensor_key(self):
        cfg = {"experiment": "response", "phi_min": 0.0, "phi_max": 1.0,
               "points": 3,
               "sensor": {"state": "css", "n_atoms": 4, "basis": "jy",
                          "oops": 1}}
        with pytest.raises(ConfigError, match="sensor.oops"):
            validate_config(cfg)

    def test_missing_file(self, capsys):
        assert cli.main(["validate", "/nonexistent/x.toml"]) == 2

    def test_bad_figure_number(self):
        assert cli.main(["fig", "12"]) == 2


class TestRun:
    def test_estimation_run_csv(self, tmp_path):
        cfg = write(tmp_path, "c.toml", GOOD_ESTIMATION)
        out = str(tmp_path / "res.csv")
        assert cli.main(["--out", out, "run", cfg]) == 0
        table = read_csv_table(out)
        assert table.columns[:3] == ["repetitions", "phi", "mse"]
        assert len(table.rows) == 6
        meta = json.load(open(out + ".meta.json"))
        assert meta["config_hash"] == config_hash(meta["config"])

    def test_seed_override_changes_hash_not_randomness_contract(self,
                                                                tmp_path):
        cfg = write(tmp_path, "c.toml", GOOD_ESTIMATION)
        out1 = str(tmp_path / "a.csv")
        out2 = str(tmp_path / "b.csv")
        assert cli.main(["--out", out1, "run", cfg]) == 0
        assert cli.main(["--out", out2, "run", cfg]) == 0
        assert open(out1).read() == open(out2).read()

    def test_numerical_violation_exit_code(self, tmp_path, monkeypatch):
        from spinmetro import experiments

        def boom(cfg):
            raise AssertionError("contract broken")

        monkeypatch.setitem(experiments.RUNNERS, "estimation", boom)
        cfg = write(tmp_path, "c.toml", GOOD_ESTIMATION)
        assert cli.main(["--out", str(tmp_path / "x.csv"), "run", cfg]) == 3

    def test_list_experiments(self, capsys):
        assert cli.main(["list-experiments"]) == 0
        out = capsys.readouterr().out
        assert "dynamic-range" in out and "clock-run" in out


class TestOperatorCache:
    def test_cache_dir_persists_blobs(self, tmp_path, monkeypatch):
        import importlib

        from spinmetro import spincore as sc

        monkeypatch.setenv("SPINMETRO_CACHE_DIR", str(tmp_path))
        sc._op_cache.clear()
        op = sc.collective_op(6, "jy")
        blobs = list(tmp_path.glob("*.npy"))
        assert len(blobs) == 1
        sc._op_cache.clear()
        again = sc.collective_op(6, "jy")  # served from the blob
        assert np.array_equal(op.matrix, again.matrix)
        sc._op_cache.clear()

    def test_matrices_read_only(self):
        from spinmetro import spincore as sc

        op = sc.collective_op(5, "jx")
        with pytest.raises(ValueError):
            op.matrix[0, 0] = 1.0


class TestJsonFormat:
    def test_fig_json_output(self, tmp_path):
        out = str(tmp_path / "fig1.json")
        assert cli.main(["--out", out, "--format", "json", "fig", "1"]) == 0
        table = read_json_table(out)
        assert table.columns == ["phi", "mean", "variance"]
        assert table.meta["n_atoms"] == 16
        assert "wall_time_s" not in table.meta


class TestFigReproducibility:
    def test_fig1_byte_identical(self, tmp_path):
        a = str(tmp_path / "a.csv")
        b = str(tmp_path / "b.csv")
        assert cli.main(["--out", a, "--seed", "3", "fig", "1"]) == 0
        assert cli.main(["--out", b, "--seed", "3", "fig", "1"]) == 0
        assert open(a, "rb").read() == open(b, "rb").read()
        assert open(a + ".meta.json", "rb").read() == \
            open(b + ".meta.json", "rb").read()


class TestTables:
    def test_empty_rows_header_only(self, tmp_path):
        t = ResultTable(["a", "b"], [], {"n": 1})
        path = str(tmp_path / "t.csv")
        write_table(t, path, "csv")
        assert open(path).read() == "a,b\n"

    def test_json_round_trip_exact(self, tmp_path):
        rows = [(1, 0.1 + 0.2, -1.2345678901234567e-12),
                (2, np.pi, 6.25e-4)]
        t = ResultTable(["k", "x", "y"], rows, {"hash": "h"})
        path = str(tmp_path / "t.json")
        write_table(t, path, "json")
        back = read_json_table(path)
        for r0, r1 in zip(rows, back.rows):
            assert list(r0) == list(r1)

    def test_csv_17_digits(self, tmp_path):
        t = ResultTable(["x"], [(np.pi,)], {})
        path = str(tmp_path / "t.csv")
        write_table(t, path, "csv")
        body = open(path).read().splitlines()[1]
        assert float(body) == np.pi

    def test_hash_whitespace_insensitive(self):
        a = {"b": 1, "a": {"c": [1, 2]}}
        b = {"a": {"c": [1, 2]}, "b": 1}
        assert config_hash(a) == config_hash(b)
        assert config_hash(a) != config_hash({"b": 2, "a": {"c": [1, 2]}})

    def test_column_count_enforced(self):
        with pytest.raises(Exception):
            ResultTable(["a"], [(1, 2)], {})
