"""Command line interface tests.

Everything runs through click's CliRunner; the node command additionally
exercises real TCP sockets on localhost.
"""

import json
import socket
import threading

import pytest
from click.testing import CliRunner

from dei.cli import main
from dei.experiment import ExperimentSpec, NodeSpec, OperatorSpec, save_spec
from dei.mars import MarsConfig

SMALL = MarsConfig(core_size=800, max_cycles=400, max_warrior_length=20,
                   min_separation=40, rounds_per_pair=2)


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "mars.json"
    path.write_text(json.dumps(SMALL.to_dict()))
    return str(path)


@pytest.fixture
def imp_file(tmp_path):
    path = tmp_path / "imp.red"
    path.write_text("MOV 0, 1\n")
    return str(path)


@pytest.fixture
def dat_file(tmp_path):
    path = tmp_path / "dat.red"
    path.write_text("DAT #0, #0\n")
    return str(path)


class TestParse:
    def test_canonical_output(self, runner, imp_file):
        result = runner.invoke(main, ["parse", imp_file])
        assert result.exit_code == 0, result.output
        assert "MOV.I $0, $1" in result.output
        assert ";hash " in result.output

    def test_name_from_filename(self, runner, imp_file):
        result = runner.invoke(main, ["parse", imp_file])
        assert ";name imp" in result.output

    def test_syntax_error_fails(self, runner, tmp_path):
        bad = tmp_path / "bad.red"
        bad.write_text("FROB 1, 2\n")
        result = runner.invoke(main, ["parse", str(bad)])
        assert result.exit_code != 0
        assert "opcode" in result.output

    def test_core_size_normalizes_fields(self, runner, tmp_path):
        w = tmp_path / "w.red"
        w.write_text("JMP -2, 0\n")
        result = runner.invoke(main, ["parse", str(w), "--core-size", "10"])
        assert result.exit_code == 0, result.output
        assert "JMP.B $8, $0" in result.output


class TestBattle:
    def test_imp_beats_bomb(self, runner, imp_file, dat_file, small_config):
        result = runner.invoke(main, ["battle", imp_file, dat_file,
                                      "--config", small_config, "--seed", "1"])
        assert result.exit_code == 0, result.output
        assert "winner: imp" in result.output
        assert "dat: " in result.output and "died" in result.output

    def test_deterministic_for_seed(self, runner, imp_file, dat_file,
                                    small_config):
        args = ["battle", imp_file, dat_file, "--config", small_config,
                "--seed", "42"]
        assert runner.invoke(main, args).output == runner.invoke(main, args).output

    def test_trace_jsonl(self, runner, imp_file, dat_file, small_config,
                         tmp_path):
        trace = tmp_path / "trace.jsonl"
        result = runner.invoke(main, ["battle", imp_file, dat_file,
                                      "--config", small_config, "--seed", "1",
                                      "--trace", str(trace)])
        assert result.exit_code == 0, result.output
        steps = [json.loads(line) for line in trace.read_text().splitlines()]
        assert steps[0]["cycle"] == 0
        assert steps[0]["warrior"] == 0
        assert steps[0]["instruction"] == "MOV.I $0, $1"
        assert any(s["died"] for s in steps)

    def test_bad_config_fails(self, runner, imp_file, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text('{"core_size": -1}')
        result = runner.invoke(main, ["battle", imp_file, "--config", str(cfg)])
        assert result.exit_code != 0
        assert "bad battle config" in result.output


class TestEvalGenerality:
    def test_bundled_corpus(self, runner, imp_file, small_config):
        result = runner.invoke(main, ["eval-generality", imp_file,
                                      "--config", small_config, "--seed", "7"])
        assert result.exit_code == 0, result.output
        assert "generality: 1.000000 (10 opponents)" in result.output

    def test_explicit_corpus_dir(self, runner, imp_file, dat_file,
                                 small_config, tmp_path):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        (corpus / "dat.red").write_text("DAT #0, #0\n")
        result = runner.invoke(main, ["eval-generality", imp_file,
                                      "--corpus", str(corpus),
                                      "--config", small_config])
        assert result.exit_code == 0, result.output
        assert "(1 opponents)" in result.output

    def test_empty_corpus_fails(self, runner, imp_file, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        result = runner.invoke(main, ["eval-generality", imp_file,
                                      "--corpus", str(empty)])
        assert result.exit_code != 0
        assert "corpus" in result.output


def tiny_spec(tmp_path, name="cli-exp", trial_seeds=(21,)):
    spec = ExperimentSpec(
        name=name,
        condition="diverse",
        rounds=2,
        iters_per_round=3,
        nodes=(
            NodeSpec("n0", OperatorSpec(kind="mock", bias="mover")),
            NodeSpec("n1", OperatorSpec(kind="mock", bias="bomber")),
        ),
        trial_seeds=trial_seeds,
        mars=SMALL,
    )
    path = tmp_path / "exp.json"
    save_spec(spec, path)
    return str(path)


class TestSim:
    def test_runs_and_persists(self, runner, tmp_path):
        spec_path = tiny_spec(tmp_path)
        out = tmp_path / "run"
        result = runner.invoke(main, ["sim", "--experiment", spec_path,
                                      "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert "trial 21:" in result.output
        assert (out / "experiment.json").exists()
        assert (out / "trial-21" / "node-n0" / "archive.jsonl").exists()
        assert (out / "trial-21" / "node-n1" / "rounds.jsonl").exists()

    def test_rerun_is_byte_identical(self, runner, tmp_path):
        spec_path = tiny_spec(tmp_path)

        def run(out):
            result = runner.invoke(main, ["sim", "--experiment", spec_path,
                                          "--out", str(out)])
            assert result.exit_code == 0, result.output
            return {p.relative_to(out): p.read_bytes()
                    for p in sorted(out.rglob("*.json*"))}

        assert run(tmp_path / "a") == run(tmp_path / "b")

    def test_bad_spec_fails(self, runner, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        result = runner.invoke(main, ["sim", "--experiment", str(bad),
                                      "--out", str(tmp_path / "out")])
        assert result.exit_code != 0


class TestReport:
    @pytest.fixture
    def run_dir(self, runner, tmp_path):
        spec_path = tiny_spec(tmp_path)
        out = tmp_path / "run"
        result = runner.invoke(main, ["sim", "--experiment", spec_path,
                                      "--out", str(out)])
        assert result.exit_code == 0, result.output
        return out

    def test_writes_all_by_default(self, runner, run_dir, tmp_path):
        out = tmp_path / "rep"
        result = runner.invoke(main, ["report", str(run_dir),
                                      "--out", str(out)])
        assert result.exit_code == 0, result.output
        names = sorted(p.name for p in out.iterdir())
        assert names == ["generality_vs_round.svg", "merged.csv",
                         "merged_qd_vs_round.svg", "summary.csv"]

    def test_csv_only(self, runner, run_dir, tmp_path):
        out = tmp_path / "rep-csv"
        result = runner.invoke(main, ["report", str(run_dir),
                                      "--out", str(out), "--csv"])
        assert result.exit_code == 0, result.output
        names = sorted(p.name for p in out.iterdir())
        assert names == ["merged.csv", "summary.csv"]

    def test_not_a_run_dir_fails(self, runner, tmp_path):
        junk = tmp_path / "junk"
        junk.mkdir()
        result = runner.invoke(main, ["report", str(junk),
                                      "--out", str(tmp_path / "rep")])
        assert result.exit_code != 0


class TestMergeArchives:
    @pytest.fixture
    def archives(self, runner, tmp_path):
        spec_path = tiny_spec(tmp_path)
        out = tmp_path / "run"
        result = runner.invoke(main, ["sim", "--experiment", spec_path,
                                      "--out", str(out)])
        assert result.exit_code == 0, result.output
        return sorted(str(p) for p in out.rglob("archive.jsonl"))

    def test_requires_pool_or_as_is(self, runner, archives, tmp_path,
                                    small_config):
        result = runner.invoke(main, ["merge-archives", *archives,
                                      "--out", str(tmp_path / "m.jsonl"),
                                      "--config", small_config])
        assert result.exit_code != 0
        assert "--pool" in result.output

    def test_as_is_merge(self, runner, archives, tmp_path, small_config):
        out = tmp_path / "merged.jsonl"
        result = runner.invoke(main, ["merge-archives", *archives,
                                      "--out", str(out), "--as-is",
                                      "--config", small_config])
        assert result.exit_code == 0, result.output
        assert out.exists()
        header = json.loads(out.read_text().splitlines()[0])
        assert header["kind"] == "archive"

    def test_rescored_merge(self, runner, archives, tmp_path, small_config):
        pool = tmp_path / "pool"
        pool.mkdir()
        (pool / "dat.red").write_text("DAT #0, #0\n")
        out = tmp_path / "rescored.jsonl"
        result = runner.invoke(main, ["merge-archives", *archives,
                                      "--out", str(out), "--pool", str(pool),
                                      "--config", small_config, "--seed", "4"])
        assert result.exit_code == 0, result.output
        rows = [json.loads(l) for l in out.read_text().splitlines()[1:]]
        # every elite was re-scored against the shared single-opponent pool
        assert all(0.0 <= row["fitness"] <= 4.0 for row in rows)


def free_port():
    s = socket.socket()
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    return port


def node_config(tmp_path, name, *, port, peer_id, peers_file=None, bias,
                rng_seed, rounds=2, pause=0.0):
    config = {
        "node": {"node_id": name, "rounds": rounds, "iters_per_round": 3,
                 "rng_seed": rng_seed},
        "operator": {"kind": "mock", "bias": bias},
        "mars": SMALL.to_dict(),
        "listen": f"127.0.0.1:{port}",
        "peer_id": peer_id,
        "out": str(tmp_path / f"out_{name}"),
        "heartbeat_interval": 0.05,
        "round_pause": pause,
    }
    if peers_file is not None:
        config["peers_file"] = str(peers_file)
    path = tmp_path / f"node_{name}.json"
    path.write_text(json.dumps(config))
    return str(path)


class TestNode:
    def test_solo_node_writes_artifacts(self, runner, tmp_path):
        config = node_config(tmp_path, "a", port=0, peer_id="aa" * 32,
                             bias="mover", rng_seed=5)
        result = runner.invoke(main, ["node", "--config", config])
        assert result.exit_code == 0, result.output
        assert "listening on 127.0.0.1:" in result.output
        out = tmp_path / "out_a"
        rounds = [json.loads(l)
                  for l in (out / "rounds.jsonl").read_text().splitlines()]
        assert [r["round"] for r in rounds] == [1, 2]
        assert all(r["calls"] == 3 for r in rounds)
        header = json.loads(
            (out / "archive.jsonl").read_text().splitlines()[0])
        assert header["kind"] == "archive"

    def test_two_nodes_exchange_over_tcp(self, tmp_path):
        port_x, port_y = free_port(), free_port()
        pid_x, pid_y = "aa" * 32, "bb" * 32
        peers_x = tmp_path / "peers_x.txt"
        peers_x.write_text(f"{pid_y} 127.0.0.1:{port_y}\n")
        peers_y = tmp_path / "peers_y.txt"
        peers_y.write_text(f"{pid_x} 127.0.0.1:{port_x}\n")
        config_x = node_config(tmp_path, "x", port=port_x, peer_id=pid_x,
                               peers_file=peers_x, bias="mover", rng_seed=5,
                               rounds=3, pause=0.3)
        config_y = node_config(tmp_path, "y", port=port_y, peer_id=pid_y,
                               peers_file=peers_y, bias="bomber", rng_seed=9,
                               rounds=3, pause=0.3)

        results = {}

        def run(name, config):
            # one runner per thread: CliRunner captures are not shared
            results[name] = CliRunner().invoke(
                main, ["node", "--config", config])

        threads = [threading.Thread(target=run, args=("x", config_x)),
                   threading.Thread(target=run, args=("y", config_y))]
        for t in threads:
            t.start()
        for t in threads:
            t.join(timeout=120)
        assert results["x"].exit_code == 0, results["x"].output
        assert results["y"].exit_code == 0, results["y"].output

        received = 0
        for name in ("x", "y"):
            rounds_file = tmp_path / f"out_{name}" / "rounds.jsonl"
            rounds = [json.loads(l)
                      for l in rounds_file.read_text().splitlines()]
            assert len(rounds) == 3
            received += sum(r["received"] for r in rounds)
        assert received > 0, "no champions crossed the TCP link"


class TestAxlShimArgs:
    def test_bad_remote_spec_fails(self, runner):
        result = runner.invoke(main, ["axl-shim", "--remote", "nonsense"])
        assert result.exit_code != 0
        assert "--remote" in result.output
