import json
import subprocess
import sys

import numpy as np
import pytest

from mmspec import io as mio
from mmspec.cli import (
    SWEEP_COLUMNS,
    ExperimentConfig,
    cmd_estimate,
    cmd_simulate,
    cmd_sweep,
    main,
    read_sweep_csv,
)
from mmspec.errors import ConfigError, ParseError
from mmspec.estimation import estimate, match_permutation
from mmspec.model import DEFAULT_B, GraphSample


def _files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


class TestEdgeList:
    def test_roundtrip(self, tmp_path):
        g = GraphSample(5, np.array([[0, 1], [0, 4], [2, 3]], dtype=np.int32))
        mio.write_edge_list(tmp_path / "g.txt", g)
        assert (tmp_path / "g.txt").read_text() == "# n=5\n1 2\n1 5\n3 4\n"
        h = mio.read_edge_list(tmp_path / "g.txt")
        assert h.n == 5
        np.testing.assert_array_equal(h.edges, g.edges)

    def test_normalizes_order_and_duplicates(self, tmp_path):
        (tmp_path / "g.txt").write_text("# n=4\n3 1\n1 3\n\n2 4\n")
        h = mio.read_edge_list(tmp_path / "g.txt")
        np.testing.assert_array_equal(h.edges, [[0, 2], [1, 3]])

    @pytest.mark.parametrize(
        "body, line",
        [("1 2\n1 x\n", 3), ("1 2\n2 3 4\n", 3), ("1 9\n", 2), ("1 2\n\n3 3\n", 4), ("0 1\n", 2)],
    )
    def test_malformed_line_named(self, tmp_path, body, line):
        p = tmp_path / "g.txt"
        p.write_text("# n=5\n" + body)
        with pytest.raises(ParseError) as exc:
            mio.read_edge_list(p)
        assert exc.value.line == line
        assert f"line {line}" in str(exc.value)

    def test_bad_header(self, tmp_path):
        p = tmp_path / "g.txt"
        p.write_text("1 2\n")
        with pytest.raises(ParseError) as exc:
            mio.read_edge_list(p)
        assert exc.value.line == 1

    def test_matrix_csv_lossless(self, tmp_path, rng):
        a = rng.random((4, 3))
        mio.write_matrix_csv(tmp_path / "a.csv", a)
        np.testing.assert_array_equal(mio.read_matrix_csv(tmp_path / "a.csv"), a)


class TestConfig:
    def test_defaults(self):
        cfg = ExperimentConfig.from_dict({})
        np.testing.assert_array_equal(cfg.B, DEFAULT_B)
        assert cfg.alphas == [[1.0, 1.0, 1.0]]

    @pytest.mark.parametrize(
        "data, field",
        [
            ({"replicates": 0}, "replicates"),
            ({"n_grid": [100, 100]}, "n_grid"),
            ({"n_grid": [500, 100]}, "n_grid"),
            ({"policies": ["bogus"]}, "policies"),
            ({"model": {"B": [[0.5, 0.9], [0.1, 0.5]]}}, "model"),
            ({"model": {"k": 4}}, "model.k"),
            ({"nn": 3}, "nn"),
            ({"seed": 1.5}, "seed"),
        ],
    )
    def test_field_errors(self, data, field):
        with pytest.raises(ConfigError) as exc:
            ExperimentConfig.from_dict(data)
        assert exc.value.field == field
        assert field in str(exc.value)

    def test_invalid_json(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text('{"n": 3,\n oops}')
        with pytest.raises(ConfigError, match="line 2"):
            ExperimentConfig.load(p)


class TestSimulate:
    def test_byte_identical(self, tmp_path):
        cfg = ExperimentConfig.from_dict({"n": 100, "seed": 7})
        cmd_simulate(cfg, tmp_path / "a")
        cmd_simulate(cfg, tmp_path / "b")
        fa, fb = _files(tmp_path / "a"), _files(tmp_path / "b")
        assert set(fa) == {"graph.txt", "pi.csv", "x.csv", "model.json"}
        assert fa == fb

    def test_zero_b(self, tmp_path):
        cfg = ExperimentConfig.from_dict({"model": {"B": [[0.0, 0.0], [0.0, 0.0]], "alpha": [1, 1]},
                                          "n": 50})
        cmd_simulate(cfg, tmp_path)
        assert (tmp_path / "graph.txt").read_text() == "# n=50\n"

    def test_density(self, tmp_path):
        n = 5000
        cfg = ExperimentConfig.from_dict({"n": n, "seed": 3})
        g = cmd_simulate(cfg, tmp_path)
        # U-statistic standard error of the density over the node draws
        p = g.truth.pi @ DEFAULT_B @ g.truth.pi.T
        h = (p.sum(axis=1) - p.diagonal()) / (n - 1)
        se = np.sqrt(4 * h.var() / n + 4.7 / 9 * (1 - 4.7 / 9) / (n * (n - 1) / 2))
        assert abs(g.density - 4.7 / 9) < 3 * se


class TestEstimate:
    def test_roundtrip_bit_identical(self, tmp_path):
        cfg = ExperimentConfig.from_dict({"n": 300, "seed": 11})
        g = cmd_simulate(cfg, tmp_path)
        res = cmd_estimate(tmp_path / "graph.txt", 3, 3, "rate", out=tmp_path / "r.json")
        lib = estimate(g, 3, 3, "rate")
        np.testing.assert_array_equal(res.b_hat, lib.b_hat)
        np.testing.assert_array_equal(res.pi_hat, lib.pi_hat)
        np.testing.assert_array_equal(res.alpha_hat, lib.alpha_hat)
        saved = json.loads((tmp_path / "r.json").read_text())
        np.testing.assert_array_equal(np.array(saved["b_hat"]), lib.b_hat)

    def test_error_scale_at_5000(self, tmp_path):
        cfg = ExperimentConfig.from_dict({"n": 5000, "seed": 1})
        cmd_simulate(cfg, tmp_path)
        res = cmd_estimate(tmp_path / "graph.txt", 3, 3, "rate")
        assert match_permutation(res.b_hat, DEFAULT_B).error < 0.35


class TestSweep:
    CFG = {"n_grid": [60, 120], "replicates": 2, "seed": 5, "policies": ["none", "fixed:0.9", "rate"]}

    def test_deterministic_and_parses(self, tmp_path):
        cfg = ExperimentConfig.from_dict(self.CFG)
        cmd_sweep(cfg, tmp_path / "a.csv")
        cmd_sweep(cfg, tmp_path / "b.csv", jobs=2)
        ra, rb = read_sweep_csv(tmp_path / "a.csv"), read_sweep_csv(tmp_path / "b.csv")
        assert len(ra) == 2 * 2 * 3
        header = (tmp_path / "a.csv").read_text().splitlines()[0]
        assert header == ",".join(SWEEP_COLUMNS)
        for x, y in zip(ra, rb):
            for col in SWEEP_COLUMNS:
                if col != "runtime":
                    assert x[col] == y[col] or (x[col] != x[col] and y[col] != y[col])
        keys = [(r["n"], r["replicate"], r["policy"]) for r in ra]
        assert keys == sorted(keys, key=lambda t: (t[0], t[1], ["none", "fixed:0.9"].index(t[2])
                                                   if t[2] in ("none", "fixed:0.9") else 2))

    def test_paired_seeds(self, tmp_path):
        cfg = ExperimentConfig.from_dict(self.CFG)
        rows = cmd_sweep(cfg, tmp_path / "a.csv")
        for rep in range(2):
            seeds = {r["seed"] for r in rows if r["replicate"] == rep}
            assert seeds == {5 + rep}
        # eta = 1 and fixed 0.9 share the graph: same vertex set before shrinkage
        # is implied by identical seeds; errors differ only through eta
        etas = {r["policy"]: r["eta"] for r in rows if r["n"] == 60 and r["replicate"] == 0}
        assert etas["none"] == 1.0 and etas["fixed:0.9"] == 0.9

    def test_lossless_floats(self, tmp_path):
        cfg = ExperimentConfig.from_dict(self.CFG)
        rows = cmd_sweep(cfg, tmp_path / "a.csv")
        back = read_sweep_csv(tmp_path / "a.csv")
        for r, b in zip(rows, back):
            assert r["B_error"] == b["B_error"]

    def test_error_rows(self, tmp_path):
        # n = 3 cannot host a 3-d embedding; the sweep records it instead of aborting
        cfg = ExperimentConfig.from_dict({"n_grid": [3, 60], "replicates": 1})
        rows = cmd_sweep(cfg, tmp_path / "a.csv")
        assert all(r["error"] for r in rows if r["n"] == 3)
        assert not any(r.get("error") for r in rows if r["n"] == 60)


class TestMain:
    def test_simulate_estimate(self, tmp_path, capsys):
        assert main(["simulate", "--out", str(tmp_path), "--n", "200", "--seed", "2"]) == 0
        assert main(["estimate", str(tmp_path / "graph.txt"), "--k", "3", "--d", "3",
                     "--policy", "rate", "--out", str(tmp_path / "r.json")]) == 0
        assert json.loads((tmp_path / "r.json").read_text())["policy"].startswith("rate:")

    def test_parse_error_exit(self, tmp_path, capsys):
        p = tmp_path / "g.txt"
        p.write_text("# n=4\n1 2\nfoo\n")
        assert main(["estimate", str(p), "--k", "2", "--d", "2"]) == 2
        assert "line 3" in capsys.readouterr().err

    def test_numeric_error_exit(self, tmp_path, capsys):
        p = tmp_path / "g.txt"
        p.write_text("# n=6\n")  # empty graph: degenerate geometry
        assert main(["estimate", str(p), "--k", "3", "--d", "3"]) == 3

    def test_config_error_exit(self, tmp_path, capsys):
        c = tmp_path / "c.json"
        c.write_text(json.dumps({"replicates": 0}))
        assert main(["sweep", "--config", str(c), "--out", str(tmp_path / "s.csv")]) == 2
        assert "replicates" in capsys.readouterr().err

    def test_sweep_policy_flags(self, tmp_path):
        c = tmp_path / "c.json"
        c.write_text(json.dumps({"n_grid": [60], "replicates": 1}))
        out = tmp_path / "s.csv"
        assert main(["sweep", "--config", str(c), "--out", str(out), "--policy", "none",
                     "--policy", "rate:1"]) == 0
        assert [r["policy"] for r in read_sweep_csv(out)] == ["none", "rate:1.0"]

    def test_module_entry_point(self, tmp_path):
        r = subprocess.run([sys.executable, "-m", "mmspec", "--help"], capture_output=True, text=True)
        assert r.returncode == 0 and "simulate" in r.stdout


@pytest.mark.parametrize("name", ["vertex_distance.json", "policy_comparison.json", "quick.json"])
def test_shipped_configs_load(name):
    from pathlib import Path

    cfg = ExperimentConfig.load(Path(__file__).resolve().parents[1] / "configs" / name)
    assert cfg.replicates >= 1 and cfg.n_grid == sorted(cfg.n_grid)
