"""Command-line surface: artifacts, determinism, exit codes."""

import csv
import json
import subprocess
import sys

import numpy as np
import pytest
import scipy.sparse as sp

from dcgof import NumericalError, load_graph
from dcgof.cli import main

from conftest import planted_graph


@pytest.fixture(scope="module")
def graph_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "graph.txt"
    g, _ = planted_graph(300, 2, beta=0.1, lam=18, seed=41)
    up = sp.triu(g.adjacency, k=1).tocoo()
    lines = [f"{i + 1} {j + 1}" for i, j in zip(up.row, up.col)]
    path.write_text("\n".join(lines) + "\n")
    return str(path)


@pytest.fixture(scope="module")
def params_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "model.json"
    cfg = {"kind": "dcsbm", "n": 300, "K": 1, "B": [[1.0]],
           "dist": "poisson", "lambda": 10}
    path.write_text(json.dumps(cfg))
    return str(path)


class TestGof:
    def test_byte_identical_given_seed(self, graph_file, capsys):
        argv = ["gof", graph_file, "--method", "snac+", "--k", "2", "--seed", "7"]
        assert main(argv) == 0
        first = capsys.readouterr().out
        assert main(argv) == 0
        second = capsys.readouterr().out
        assert first.encode() == second.encode()

    def test_json_contains_config_and_seed(self, graph_file, tmp_path):
        out = tmp_path / "o.json"
        assert main(["gof", graph_file, "--method", "snac+", "--k", "2",
                     "--seed", "3", "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["seed"] == 3
        assert payload["config"]["method"] == "snac+"
        assert payload["method"] == "SNAC+"

    @pytest.mark.parametrize("method", ["nac+", "as", "as-sbm", "lr", "bic"])
    def test_other_methods_run(self, method, graph_file, tmp_path):
        out = tmp_path / f"{method}.json"
        assert main(["gof", graph_file, "--method", method, "--k", "2",
                     "--seed", "1", "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert "statistic" in payload

    def test_emit_csv(self, graph_file, capsys):
        assert main(["gof", graph_file, "--method", "snac+", "--k", "2",
                     "--seed", "2", "--emit", "csv"]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0].startswith("# config")
        header = out[1].split(",")
        assert "statistic" in header and "p_value" in header

    def test_emit_svg_rejected_for_gof(self, graph_file):
        assert main(["gof", graph_file, "--method", "snac+", "--k", "2",
                     "--emit", "svg"]) == 2

    def test_debiased_full_variant(self, graph_file, tmp_path):
        out = tmp_path / "boot.json"
        assert main(["gof", graph_file, "--method", "nac+", "--k", "2",
                     "--boot", "3", "--seed", "1", "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["debiased"] is True
        assert payload["p_value"] is not None


class TestSelect:
    def test_single_community_chosen(self, tmp_path, params_file):
        graph = tmp_path / "k1.txt"
        assert main(["simulate", "--params", params_file, "--seed", "5",
                     "--out", str(graph)]) == 0
        out = tmp_path / "sel.json"
        assert main(["select", str(graph), "--kmax", "4", "--seed", "2",
                     "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["chosen_K"] == 1
        assert payload["censored"] is False

    def test_bic_selection(self, graph_file, tmp_path):
        out = tmp_path / "bic.json"
        assert main(["select", graph_file, "--method", "bic", "--kmax", "4",
                     "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["method"] == "BIC"
        assert payload["chosen_K"] == 2


class TestSimulate:
    def test_writes_graph_and_labels(self, tmp_path, params_file):
        graph, labels = tmp_path / "g.txt", tmp_path / "z.csv"
        assert main(["simulate", "--params", params_file, "--seed", "9",
                     "--out", str(graph), "--labels-out", str(labels)]) == 0
        g = load_graph(str(graph))
        assert g.n > 0 and g.edge_sum > 0
        rows = [r for r in labels.read_text().splitlines()
                if r and not r.startswith("#")]
        assert rows[0] == "node,label"
        assert len(rows) == g.n + 1

    def test_graph_file_embeds_config(self, tmp_path, params_file):
        graph = tmp_path / "g2.txt"
        main(["simulate", "--params", params_file, "--seed", "1",
              "--out", str(graph)])
        first = graph.read_text().splitlines()[0]
        assert first.startswith("# config")
        assert '"seed": 1' in first


class TestCluster:
    def test_labels_csv(self, graph_file, tmp_path):
        out = tmp_path / "labels.csv"
        assert main(["cluster", graph_file, "--k", "2", "--seed", "4",
                     "--out", str(out)]) == 0
        with open(out) as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
        assert rows[0] == ["node", "label"]
        labs = {int(r[1]) for r in rows[1:]}
        assert labs == {1, 2}

    def test_dump_embedding(self, graph_file, tmp_path):
        out = tmp_path / "l.csv"
        emb = tmp_path / "emb.csv"
        assert main(["cluster", graph_file, "--k", "2", "--seed", "4",
                     "--out", str(out), "--dump-embedding", str(emb)]) == 0
        data = np.loadtxt(emb, delimiter=",", skiprows=1)
        g = load_graph(graph_file)
        assert data.shape == (g.n, 2)

    def test_reduce_flag(self, graph_file, tmp_path, capsys):
        assert main(["cluster", graph_file, "--k", "2", "--reduce-q", "0.9"]) == 0
        rows = [r for r in capsys.readouterr().out.splitlines()
                if r and not r.startswith("#")]
        g = load_graph(graph_file)
        assert 0 < len(rows) - 1 < g.n


class TestProfile:
    def test_writes_csv_curve_and_svg(self, graph_file, tmp_path, capsys):
        prefix = tmp_path / "prof"
        assert main(["profile", graph_file, "--kmin", "1", "--kmax", "4",
                     "--repeats", "3", "--seed", "5",
                     "--out-prefix", str(prefix)]) == 0
        pts = (tmp_path / "prof.csv").read_text().splitlines()
        assert pts[0].startswith("# config")
        assert pts[1] == "K,statistic,split_seed"
        assert len(pts) == 2 + 4 * 3
        curve = (tmp_path / "prof_curve.csv").read_text().splitlines()
        assert curve[1] == "K,fit_gcv,fit_smooth,d1,d2"
        svg = (tmp_path / "prof.svg").read_text()
        assert "<svg" in svg
        summary = json.loads(capsys.readouterr().out)
        assert 1 <= summary["elbow_smooth"] <= 4


class TestBench:
    def test_tidy_csv(self, tmp_path, params_file):
        out = tmp_path / "bench.csv"
        assert main(["bench", "--params", params_file, "--methods", "snac+,bic",
                     "--kmin", "1", "--kmax", "3", "--reps", "2",
                     "--seed", "3", "--out", str(out)]) == 0
        with open(out) as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
        assert rows[0] == ["rep", "method", "K", "statistic", "decision"]
        body = rows[1:]
        assert len(body) == 2 * 2 * 3  # reps x methods x K values
        assert {r[1] for r in body} == {"snac+", "bic"}
        decisions = {r[4] for r in body}
        assert decisions <= {"0", "1"}

    def test_rows_reproducible_from_seed(self, tmp_path, params_file):
        out = tmp_path / "rows.csv"
        argv = ["bench", "--params", params_file, "--methods", "snac+",
                "--kmin", "1", "--kmax", "2", "--reps", "2",
                "--seed", "8", "--out", str(out)]
        main(argv)
        first = out.read_bytes()
        main(argv)
        assert out.read_bytes() == first


class TestExitCodes:
    def test_unknown_flag_is_usage_error(self, capsys):
        assert main(["gof", "--frobnicate"]) == 1
        assert "usage" in capsys.readouterr().err

    def test_missing_command_is_usage_error(self):
        assert main([]) == 1

    def test_missing_file_is_data_error(self, capsys):
        assert main(["gof", "/no/such/file", "--method", "snac+",
                     "--k", "2"]) == 2

    def test_malformed_graph_is_data_error(self, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("1 2\nnot numbers\n")
        assert main(["gof", str(bad), "--method", "snac+", "--k", "2"]) == 2

    def test_numerical_failure_maps_to_3(self, monkeypatch):
        import dcgof.cli as cli_mod

        def boom(args):
            raise NumericalError("synthetic failure")

        monkeypatch.setattr(cli_mod, "dispatch", boom)
        assert cli_mod.main(["gof", "x", "--method", "snac+", "--k", "2"]) == 3

    def test_console_script_installed(self):
        proc = subprocess.run([sys.executable, "-m", "dcgof.cli", "--version"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "dcgof" in proc.stdout
