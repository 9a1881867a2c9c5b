import json
import math
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from dei.experiment import (
    ExperimentSpec,
    NetworkSpec,
    NodeSpec,
    OperatorSpec,
    ReportError,
    RunData,
    SpecError,
    TrialData,
    generality,
    load_corpus,
    load_pool_seeds,
    load_run,
    load_spec,
    run_experiment,
    run_trial,
    save_spec,
    write_line_svg,
    write_merged_csv,
    write_report,
    write_summary_csv,
)
from dei.experiment.runner import MESH_WARMUP
from dei.mars import MarsConfig
from dei.mutation import LlmEndpointConfig, MockOperator
from dei.redcode import parse

SMALL = MarsConfig(core_size=800, max_cycles=400, max_warrior_length=20,
                   min_separation=40, rounds_per_pair=2)
IMP = parse("MOV 0, 1", name="imp")
DAT = parse("DAT #0, #0", name="duck")

MOCK = OperatorSpec(kind="mock", bias="balanced")
PROFILES = ("balanced", "mover", "splitter", "bomber")


def quad_nodes(profiles=PROFILES, latencies=None):
    latencies = latencies or [1.0] * len(profiles)
    return tuple(
        NodeSpec(node_id=f"n{i}", operator=OperatorSpec(kind="mock", bias=p),
                 call_latency=lat)
        for i, (p, lat) in enumerate(zip(profiles, latencies))
    )


def small_spec(**overrides):
    defaults = dict(
        name="unit", condition="diverse", rounds=2, iters_per_round=3,
        nodes=quad_nodes(), trial_seeds=(11,), mars=SMALL,
    )
    defaults.update(overrides)
    return ExperimentSpec(**defaults)


class TestOperatorSpec:
    def test_mock_identity_and_build(self):
        op = MOCK.build(SMALL)
        assert isinstance(op, MockOperator)
        assert op.identity == "mock:balanced" == MOCK.identity

    def test_llm_requires_endpoint(self):
        with pytest.raises(SpecError, match="endpoint"):
            OperatorSpec(kind="llm")

    def test_replay_requires_session(self):
        endpoint = LlmEndpointConfig(base_url="http://h", model_name="m")
        with pytest.raises(SpecError, match="session"):
            OperatorSpec(kind="replay", endpoint=endpoint)
        spec = OperatorSpec(kind="replay", endpoint=endpoint, session="s.jsonl")
        assert spec.identity == "llm:m"

    def test_record_only_for_llm(self):
        with pytest.raises(SpecError, match="record"):
            OperatorSpec(kind="mock", record="out.jsonl")

    def test_dict_round_trip(self):
        endpoint = LlmEndpointConfig(base_url="http://h", model_name="m")
        spec = OperatorSpec(kind="llm", endpoint=endpoint, record="cap.jsonl")
        assert OperatorSpec.from_dict(spec.to_dict()) == spec
        with pytest.raises(SpecError, match="unknown"):
            OperatorSpec.from_dict({"kind": "mock", "speed": 3})


class TestExperimentSpec:
    def test_condition_shapes(self):
        with pytest.raises(SpecError, match="solo"):
            small_spec(condition="solo")
        with pytest.raises(SpecError, match="identical"):
            small_spec(condition="homogeneous")
        with pytest.raises(SpecError, match="distinct"):
            small_spec(nodes=quad_nodes(["balanced"] * 4))
        solo = small_spec(condition="solo", nodes=quad_nodes(["balanced"])[:1])
        assert solo.total_budget == 2 * 3

    def test_unique_ids_and_seeds(self):
        dup = quad_nodes()[:2] + (quad_nodes()[0],)
        with pytest.raises(SpecError, match="unique"):
            small_spec(nodes=dup)
        with pytest.raises(SpecError, match="unique"):
            small_spec(trial_seeds=(1, 1))

    def test_budget_rounding_window(self):
        # 4 x 62 = 248 against a declared 250: inside the 2-per-round window
        spec = small_spec(rounds=1, iters_per_round=62,
                          declared_budget=250)
        assert spec.total_budget == 248
        with pytest.raises(SpecError, match="budget"):
            small_spec(rounds=1, iters_per_round=61, declared_budget=250)

    def test_file_round_trip(self, tmp_path):
        spec = small_spec(network=NetworkSpec(latency_range=(0.01, 0.02)))
        path = tmp_path / "exp.json"
        save_spec(spec, path)
        assert load_spec(path) == spec

    def test_load_rejects_bad_files(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{nope")
        with pytest.raises(SpecError, match="JSON"):
            load_spec(path)
        path.write_text('{"name": "x", "what": 1}')
        with pytest.raises(SpecError, match="unknown"):
            load_spec(path)


class TestGenerality:
    def test_tie_and_win_scores_full(self):
        assert generality(IMP, [IMP, DAT], SMALL, seed=7) == 1.0

    def test_dat_bomb_scores_zero(self):
        assert generality(DAT, [IMP], SMALL, seed=7) == 0.0

    def test_empty_corpus_is_an_error(self):
        with pytest.raises(ValueError, match="empty"):
            generality(IMP, [], SMALL)

    def test_bundled_sets_load_sorted_and_disjoint(self):
        corpus = load_corpus(config=SMALL)
        seeds = load_pool_seeds(config=SMALL)
        assert [w.name for w in corpus] == sorted(w.name for w in corpus)
        assert len(corpus) == 10
        assert len(seeds) == 4
        assert not ({w.content_hash() for w in corpus}
                    & {w.content_hash() for w in seeds})

    def test_missing_directory_is_an_error(self, tmp_path):
        with pytest.raises(ValueError, match="no .red files"):
            load_corpus(tmp_path, SMALL)


class TestRunTrial:
    def test_solo_accounting(self, tmp_path):
        spec = small_spec(condition="solo", rounds=2, iters_per_round=5,
                          nodes=quad_nodes(["balanced"])[:1])
        result = run_trial(spec, 11, tmp_path)
        report_calls = [r.calls for r in result.reports["n0"]]
        assert report_calls == [5, 5]
        assert result.to_dict()["budget"]["total"] == 10
        node_dir = tmp_path / "trial-11" / "node-n0"
        assert (node_dir / "archive.jsonl").exists()
        rounds = (node_dir / "rounds.jsonl").read_text().splitlines()
        assert len(rounds) == 2
        assert json.loads(rounds[0])["completed_at"] == 5.0
        # solo merged metrics are the node's own archive metrics
        final = result.merged_rounds[-1]
        assert final["coverage"] == result.archives["n0"].coverage()

    def test_diverse_accounting(self, tmp_path):
        spec = small_spec()
        result = run_trial(spec, 11, tmp_path)
        assert result.to_dict()["budget"]["total"] == 24
        assert len(result.archives) == 4
        for nid in ("n0", "n1", "n2", "n3"):
            assert (tmp_path / "trial-11" / f"node-{nid}" / "archive.jsonl").exists()
        assert len(result.merged_rounds) == 2
        # merged coverage dominates every node's own coverage
        merged_cov = result.merged_rounds[-1]["coverage"]
        assert all(merged_cov >= a.coverage() - 1e-12
                   for a in result.archives.values())

    def test_rerun_is_bit_identical(self, tmp_path):
        spec = small_spec()
        run_trial(spec, 11, tmp_path / "a")
        run_trial(spec, 11, tmp_path / "b")
        files_a = sorted((tmp_path / "a").rglob("*.json*"))
        files_b = sorted((tmp_path / "b").rglob("*.json*"))
        assert [p.name for p in files_a] == [p.name for p in files_b]
        for pa, pb in zip(files_a, files_b):
            assert pa.read_bytes() == pb.read_bytes(), pa.name

    def test_trial_seeds_differ(self):
        spec = small_spec()
        first = run_trial(spec, 11)
        second = run_trial(spec, 12)
        a = [r.to_dict() for r in first.reports["n0"]]
        b = [r.to_dict() for r in second.reports["n0"]]
        assert a != b

    def test_champions_cross_nodes(self):
        spec = small_spec(rounds=3)
        result = run_trial(spec, 11)
        total_received = sum(r.received
                             for reps in result.reports.values()
                             for r in reps)
        assert total_received > 0

    def test_generality_curves_cover_rounds(self):
        spec = small_spec()
        result = run_trial(spec, 11)
        for curve in result.generality_curves.values():
            assert len(curve) == spec.rounds
            assert all(v is None or 0 <= v <= 1 for v in curve)

    def test_no_barrier_latency_isolation(self):
        base = small_spec()
        skewed = small_spec(nodes=quad_nodes(latencies=[1.0, 1.0, 1.0, 10.0]))
        t_base = run_trial(base, 11).completion_times
        t_skew = run_trial(skewed, 11).completion_times
        for nid in ("n0", "n1", "n2"):
            assert t_skew[nid] == t_base[nid]
        base_work = t_base["n3"][-1] - MESH_WARMUP
        skew_work = t_skew["n3"][-1] - MESH_WARMUP
        assert skew_work == pytest.approx(base_work * 10)

    def test_overlapping_corpus_rejected(self, tmp_path):
        shared = tmp_path / "shared"
        shared.mkdir()
        (shared / "one.red").write_text("MOV 0, 1\n")
        spec = small_spec(seeds_dir=str(shared), corpus_dir=str(shared))
        with pytest.raises(SpecError, match="overlaps"):
            run_trial(spec, 11)

    def test_run_experiment_layout(self, tmp_path):
        spec = small_spec(trial_seeds=(3, 4))
        results = run_experiment(spec, tmp_path)
        assert [r.trial_seed for r in results] == [3, 4]
        assert (tmp_path / "experiment.json").exists()
        assert load_spec(tmp_path / "experiment.json") == spec
        assert (tmp_path / "trial-3").is_dir()
        assert (tmp_path / "trial-4").is_dir()


def synthetic_run(condition, peaks, novelty, merged):
    trials = [
        TrialData(
            trial_seed=i,
            generality={"n0": [peak]},
            merged_rounds=[merged],
            novelty_values=list(novelty),
        )
        for i, peak in enumerate(peaks)
    ]
    nodes = (quad_nodes(["balanced"])[0],)
    spec = ExperimentSpec(name="syn", condition=condition, rounds=1,
                          iters_per_round=1, nodes=nodes, trial_seeds=(1,),
                          mars=SMALL)
    return RunData(spec=spec, trials=trials)


class TestReport:
    def test_mean_and_sample_std(self, tmp_path):
        run = synthetic_run("solo", peaks=[0.6, 0.8], novelty=[],
                            merged={"coverage": 0.1, "qd_score": 1.0})
        path = tmp_path / "summary.csv"
        write_summary_csv([run], path)
        rows = path.read_text().splitlines()
        peak_row = rows[1].split(",")
        assert peak_row[2] == "peak_generality"
        assert peak_row[3] == "0.700000"
        assert math.isclose(float(peak_row[4]), 0.141421, abs_tol=1e-6)

    def test_solo_novelty_is_absent_marker(self, tmp_path):
        run = synthetic_run("solo", peaks=[0.5], novelty=[],
                            merged={"coverage": 0.1, "qd_score": 1.0})
        path = tmp_path / "summary.csv"
        write_summary_csv([run], path)
        novelty_row = path.read_text().splitlines()[2].split(",")
        assert novelty_row[2] == "niche_novelty"
        assert novelty_row[3] == "—"
        assert novelty_row[4] == "—"

    def test_merged_table_shape(self, tmp_path):
        run = synthetic_run("solo", peaks=[0.5], novelty=[],
                            merged={"coverage": 0.25, "qd_score": 2.5})
        path = tmp_path / "merged.csv"
        write_merged_csv([run], path)
        header, row = path.read_text().splitlines()
        assert header.startswith("condition,operators,coverage_mean")
        assert row.split(",")[2] == "0.250000"

    def test_svg_is_valid_xml(self, tmp_path):
        path = tmp_path / "plot.svg"
        write_line_svg(path, [("a", [(1, 0.1), (2, 0.4)]),
                              ("b", [(1, 0.2), (2, 0.3)])],
                       "t", "x", "y")
        root = ET.parse(path).getroot()
        assert root.tag.endswith("svg")
        polylines = [e for e in root.iter() if e.tag.endswith("polyline")]
        assert len(polylines) == 2

    def test_empty_run_set_is_an_error(self, tmp_path):
        with pytest.raises(ReportError, match="no run"):
            write_report([], tmp_path)

    def test_not_a_run_directory(self, tmp_path):
        with pytest.raises(ReportError, match="experiment.json"):
            load_run(tmp_path)

    def test_end_to_end_report(self, tmp_path):
        spec = small_spec(trial_seeds=(3,))
        run_experiment(spec, tmp_path / "run")
        paths = write_report([tmp_path / "run"], tmp_path / "out")
        for p in paths:
            assert p.exists() and p.stat().st_size > 0
        summary = (tmp_path / "out" / "summary.csv").read_text().splitlines()
        assert len(summary) == 3  # header + 2 metrics for one condition
        data = load_run(tmp_path / "run")
        assert data.label.startswith("diverse (")
        assert len(data.trials) == 1
