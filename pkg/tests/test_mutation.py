import collections
import json

import httpx
import pytest
from scipy import stats

from dei.mars import BehavioralCharacteristic
from dei.mutation import (
    BackendError,
    HttpChatBackend,
    LlmEndpointConfig,
    LlmOperator,
    MockOperator,
    OperatorFailure,
    PromptContext,
    RecordingBackend,
    ReplayBackend,
    bias_profile,
    build_prompt,
    default_rules,
    extract_program,
)
from dei.redcode import Opcode, parse, serialize

IMP = parse("MOV 0, 1", name="imp")
NEW_CTX = PromptContext(mode="new", rules_digest=default_rules())
MUT_CTX = PromptContext(
    mode="mutate",
    rules_digest=default_rules(),
    parent=IMP,
    parent_fitness=1.0,
    parent_bc=BehavioralCharacteristic(tsp=80000.0, mc=1.0),
)


class TestPromptContext:
    def test_mutate_requires_parent_fields(self):
        with pytest.raises(ValueError, match="parent"):
            PromptContext(mode="mutate", rules_digest="r")
        with pytest.raises(ValueError, match="parent_bc"):
            PromptContext(mode="mutate", rules_digest="r", parent=IMP, parent_fitness=0.5)

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            PromptContext(mode="evolve", rules_digest="r")


class TestPrompts:
    def test_new_prompt_contains_rules_verbatim(self):
        assert default_rules() in build_prompt(NEW_CTX)

    def test_mutate_prompt_substitutions(self):
        text = build_prompt(MUT_CTX)
        assert "MOV.I $0, $1" in text
        assert "1.0" in text
        assert "80000" in text
        assert default_rules() in text

    def test_mode_mismatch_raises(self):
        op = MockOperator()
        with pytest.raises(ValueError):
            op.generate(MUT_CTX, 0)
        with pytest.raises(ValueError):
            op.mutate(NEW_CTX, 0)


class TestMockOperator:
    def test_generate_deterministic_and_bounded(self):
        op = MockOperator("balanced")
        for seed in range(50):
            w1 = op.generate(NEW_CTX, seed)
            w2 = op.generate(NEW_CTX, seed)
            assert w1 == w2
            assert 1 <= len(w1) <= 100
            assert w1.origin == "mock:balanced"

    def test_mutate_deterministic(self):
        op = MockOperator("mover")
        for seed in range(50):
            assert op.mutate(MUT_CTX, seed) == op.mutate(MUT_CTX, seed)
            assert op.mutate(MUT_CTX, seed).origin == "mock:mover"

    def test_unknown_profile(self):
        with pytest.raises(ValueError):
            MockOperator("quantum")
        with pytest.raises(ValueError):
            bias_profile("")

    def test_profiles_have_distinct_opcode_distributions(self):
        # 10,000 sampled instructions per profile; chi-squared must separate
        # every pair at p < 0.01
        samples = {}
        for profile in ("balanced", "mover", "splitter", "bomber"):
            op = MockOperator(profile)
            counts = collections.Counter()
            seed = 0
            while sum(counts.values()) < 10_000:
                for ins in op.generate(NEW_CTX, seed).instructions:
                    counts[int(ins.opcode)] += 1
                seed += 1
            samples[profile] = counts
        profiles = list(samples)
        for i, a in enumerate(profiles):
            for b in profiles[i + 1:]:
                rows = []
                for name in (a, b):
                    rows.append([samples[name].get(k, 0) for k in range(16)])
                cols = [k for k in range(16) if rows[0][k] + rows[1][k] > 0]
                table = [[row[k] for k in cols] for row in rows]
                _, p, _, _ = stats.chi2_contingency(table)
                assert p < 0.01, (a, b, p)


def canned(responses):
    """Chat backend returning scripted responses in order."""
    queue = list(responses)

    class Backend:
        requests: list = []

        def complete(self, request):
            Backend.requests.append(request)
            if not queue:
                raise BackendError("script exhausted")
            return queue.pop(0)

    return Backend()


class TestExtraction:
    def test_plain_response(self):
        w = extract_program("MOV 0, 1", name="x")
        assert serialize(w) == serialize(parse("MOV 0, 1", name="x"))

    def test_fenced_response(self):
        text = "Here is my warrior:\n```redcode\nMOV 0, 1\n```\nGood luck!"
        w = extract_program(text, name="x")
        assert len(w) == 1
        assert w.instructions[0].opcode == Opcode.MOV

    def test_first_valid_block_wins(self):
        text = (
            "```\nthis is not redcode at all %%%\n```\n"
            "```\nADD #4, 3\nMOV 2, @2\nJMP -2\n```\n"
            "```\nMOV 0, 1\n```\n"
        )
        w = extract_program(text, name="x")
        assert len(w) == 3
        assert w.instructions[0].opcode == Opcode.ADD

    def test_prose_raises(self):
        with pytest.raises(Exception):
            extract_program("I cannot write programs today.", name="x")


class TestLlmOperator:
    CFG = LlmEndpointConfig(base_url="http://model.test/v1", model_name="test-model")

    def test_config_validation(self):
        with pytest.raises(ValueError):
            LlmEndpointConfig(base_url="", model_name="m")
        with pytest.raises(ValueError):
            LlmEndpointConfig(base_url="u", model_name="m", max_retries=-1)
        with pytest.raises(ValueError):
            LlmEndpointConfig(base_url="u", model_name="m", timeout=0)
        assert LlmEndpointConfig.from_dict(self.CFG.to_dict()) == self.CFG

    def test_generate_strips_fences(self):
        op = LlmOperator(self.CFG, backend=canned(["```\nMOV 0, 1\n```"]))
        w = op.generate(NEW_CTX, seed=7)
        assert len(w) == 1
        assert w.origin == "llm:test-model"

    def test_retry_appends_parse_error(self):
        backend = canned(["no program here", "```\nMOV 0, 1\n```"])
        op = LlmOperator(self.CFG, backend=backend)
        w = op.mutate(MUT_CTX, seed=7)
        assert len(w) == 1
        retry_request = backend.requests[-1]
        assert len(retry_request["messages"]) == 3
        assert "failed to assemble" in retry_request["messages"][-1]["content"]

    def test_failure_after_retries_exhausted(self):
        op = LlmOperator(self.CFG, backend=canned(["prose"] * 4))
        with pytest.raises(OperatorFailure) as err:
            op.generate(NEW_CTX, seed=7)
        assert len(err.value.attempts) == 4

    def test_backend_errors_count_as_attempts(self):
        op = LlmOperator(self.CFG, backend=canned([]))
        with pytest.raises(OperatorFailure):
            op.generate(NEW_CTX, seed=7)

    def test_http_backend_round_trip(self):
        def handler(request: httpx.Request) -> httpx.Response:
            assert request.url.path.endswith("/chat/completions")
            assert request.headers["authorization"] == "Bearer sk-test"
            body = json.loads(request.content)
            assert body["model"] == "test-model"
            assert body["temperature"] == 1.0
            return httpx.Response(
                200,
                json={"choices": [{"message": {"content": "```\nMOV 0, 1\n```"}}]},
            )

        cfg = LlmEndpointConfig(
            base_url="http://model.test/v1",
            model_name="test-model",
            api_key_env="TEST_MODEL_KEY",
        )
        client = httpx.Client(transport=httpx.MockTransport(handler))
        backend = HttpChatBackend(cfg, client=client)
        import os

        os.environ["TEST_MODEL_KEY"] = "sk-test"
        try:
            op = LlmOperator(cfg, backend=backend)
            assert len(op.generate(NEW_CTX, seed=1)) == 1
        finally:
            del os.environ["TEST_MODEL_KEY"]

    def test_http_backend_missing_key(self):
        cfg = LlmEndpointConfig(
            base_url="http://model.test/v1",
            model_name="m",
            api_key_env="DEI_ABSENT_KEY_FOR_TEST",
        )
        backend = HttpChatBackend(cfg, client=httpx.Client(
            transport=httpx.MockTransport(lambda r: httpx.Response(200, json={}))))
        with pytest.raises(BackendError, match="DEI_ABSENT_KEY_FOR_TEST"):
            backend.complete({"messages": []})

    def test_http_backend_http_error(self):
        cfg = LlmEndpointConfig(base_url="http://model.test/v1", model_name="m")
        backend = HttpChatBackend(cfg, client=httpx.Client(
            transport=httpx.MockTransport(lambda r: httpx.Response(500, text="boom"))))
        with pytest.raises(BackendError):
            backend.complete({"messages": []})


class TestRecordReplay:
    def test_record_then_replay_identical(self, tmp_path):
        cfg = LlmEndpointConfig(base_url="http://model.test/v1", model_name="m")
        session = str(tmp_path / "session.jsonl")
        scripted = [
            "not a program",
            "```\nMOV 0, 1\n```",
            "```\nADD #4, 3\nMOV 2, @2\nJMP -2\nDAT #0, #0\n```",
        ]
        recorder = RecordingBackend(canned(scripted), session)
        live = LlmOperator(cfg, backend=recorder)
        w1 = live.generate(NEW_CTX, seed=1)   # burns attempt 1, succeeds on 2
        w2 = live.mutate(MUT_CTX, seed=2)

        replayed = LlmOperator(cfg, backend=ReplayBackend(session))
        assert replayed.generate(NEW_CTX, seed=1) == w1
        assert replayed.mutate(MUT_CTX, seed=2) == w2

    def test_replay_miss_raises(self, tmp_path):
        session = tmp_path / "session.jsonl"
        session.write_text("")
        backend = ReplayBackend(str(session))
        with pytest.raises(BackendError):
            backend.complete({"messages": [], "seed": 0})

    def test_session_file_shape(self, tmp_path):
        session = str(tmp_path / "session.jsonl")
        backend = RecordingBackend(canned(["```\nMOV 0, 1\n```"]), session)
        cfg = LlmEndpointConfig(base_url="http://x/v1", model_name="m")
        LlmOperator(cfg, backend=backend).generate(NEW_CTX, seed=3)
        lines = open(session).read().splitlines()
        assert len(lines) == 1
        record = json.loads(lines[0])
        assert record["request"]["seed"] == 3
        assert "MOV" in record["response"]
        assert ReplayBackend(session).remaining() == 1
