import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ragforge.corpus import QAItem
from ragforge.embed import HashingEmbeddingProvider
from ragforge.errors import JudgeParseError, MetricUnavailableError
from ragforge.evaluate import (
    JudgeScore,
    aggregate_scores,
    bertscore_greedy,
    confusion_matrix,
    hit_rate,
    judge_answer,
    load_human_ratings,
    parse_judge_score,
    rouge_l,
    round_half_up,
)
from ragforge.generate import GeneratedAnswer, LlmClient
from ragforge.index import RankedList, tokenize
from ragforge.mockllm import MockChatEndpoint

from .oracles import oracle_bertscore, oracle_hash_embed, oracle_hit_flags, oracle_lcs, oracle_tokenize

provider = HashingEmbeddingProvider()


def _answer(qa_id, retrieved_ids, match=False):
    return GeneratedAnswer(
        qa_id=qa_id,
        answer_text="text",
        retrieved=RankedList(entries=tuple((cid, 1.0 - 0.1 * i) for i, cid in enumerate(retrieved_ids)), source="dense"),
        match=match,
        model_id="mock:deterministic",
        config_fingerprint="f",
        latency_ms=0,
    )


def _item(qa_id, program, topic):
    return QAItem(qa_id, "q?", "ref.", program, topic, "en")


LABELS = {
    "p1": ("prog-a", "costs"),
    "p2": ("prog-a", "duration"),
    "p3": ("prog-b", "costs"),
    "p4": ("prog-b", "application"),
}


class TestHitRate:
    def test_three_of_four(self):
        answers = [
            _answer("q1", ["p1"]),            # hit
            _answer("q2", ["p2", "p1"]),      # hit at rank 2
            _answer("q3", ["p3"]),            # hit
            _answer("q4", ["p1", "p2"]),      # miss
        ]
        qa = [
            _item("q1", "prog-a", "costs"),
            _item("q2", "prog-a", "costs"),
            _item("q3", "prog-b", "costs"),
            _item("q4", "prog-b", "application"),
        ]
        report = hit_rate(answers, qa, LABELS)
        assert (report.hits, report.total) == (3, 4)
        assert report.rate == pytest.approx(75.0)
        assert dict(report.flags) == {"q1": True, "q2": True, "q3": True, "q4": False}

    def test_right_program_wrong_topic_is_not_a_hit(self):
        report = hit_rate([_answer("q1", ["p2"])], [_item("q1", "prog-a", "costs")], LABELS)
        assert report.hits == 0

    def test_only_top_k_counts(self):
        answers = [_answer("q1", ["p2", "p3", "p4", "p2x", "p3x", "p1"])]
        labels = dict(LABELS, p2x=("x", "y"), p3x=("x", "z"))
        report = hit_rate(answers, [_item("q1", "prog-a", "costs")], labels, k=5)
        assert report.hits == 0  # the gold chunk sits at rank 6

    def test_missing_alignment_is_error(self):
        with pytest.raises(ValueError, match="no answer"):
            hit_rate([_answer("q1", ["p1"])], [_item("q2", "prog-a", "costs")], LABELS)

    def test_matches_independent_rescan(self):
        answers = [_answer(f"q{i}", ids) for i, ids in enumerate([["p1", "p3"], ["p4"], ["p2"], []])]
        qa = [
            _item("q0", "prog-b", "costs"),
            _item("q1", "prog-b", "application"),
            _item("q2", "prog-a", "costs"),
            _item("q3", "prog-a", "costs"),
        ]
        report = hit_rate(answers, qa, LABELS)
        expected = oracle_hit_flags(
            {a.qa_id: [cid for cid, _ in a.retrieved.entries] for a in answers},
            {it.qa_id: (it.gold_program_id, it.gold_topic_id) for it in qa},
            LABELS,
        )
        assert dict(report.flags) == expected

    def test_empty_input(self):
        report = hit_rate([], [], LABELS)
        assert (report.hits, report.total, report.rate) == (0, 0, 0.0)


class TestRougeL:
    def test_identity(self):
        assert rouge_l("the cat sat", "the cat sat") == pytest.approx((1.0, 1.0, 1.0))

    def test_cat_sat_example(self):
        score = rouge_l("the cat sat", "the cat")
        lcs = oracle_lcs(oracle_tokenize("the cat sat"), oracle_tokenize("the cat"))
        assert lcs == 2
        assert score.precision == pytest.approx(lcs / 3, abs=1e-9)
        assert score.recall == pytest.approx(lcs / 2, abs=1e-9)
        assert score.f1 == pytest.approx(0.8, abs=1e-9)

    def test_disjoint_vocabulary(self):
        assert rouge_l("alpha beta", "gamma delta") == pytest.approx((0.0, 0.0, 0.0))

    def test_empty_candidate(self):
        assert rouge_l("", "reference words") == pytest.approx((0.0, 0.0, 0.0))

    def test_whitespace_invariance(self):
        assert rouge_l("a  b\tc", "a b c") == pytest.approx((1.0, 1.0, 1.0))

    @given(st.text(min_size=1, max_size=60))
    @settings(max_examples=50)
    def test_self_similarity_property(self, text):
        if not tokenize(text):
            return
        assert rouge_l(text, text) == pytest.approx((1.0, 1.0, 1.0))

    @given(st.lists(st.sampled_from("abcde"), min_size=1, max_size=12),
           st.lists(st.sampled_from("abcde"), min_size=1, max_size=12))
    @settings(max_examples=80)
    def test_lcs_matches_full_table_oracle(self, xs, ys):
        cand, ref = " ".join(xs), " ".join(ys)
        score = rouge_l(cand, ref)
        lcs = oracle_lcs(xs, ys)
        assert score.precision == pytest.approx(lcs / len(xs), abs=1e-12)
        assert score.recall == pytest.approx(lcs / len(ys), abs=1e-12)


class TestBertscore:
    def test_identity_is_one(self):
        score = bertscore_greedy("tuition fees apply", "tuition fees apply", provider)
        assert score.f1 == pytest.approx(1.0, abs=1e-6)

    def test_precision_recall_swap_symmetry(self):
        x, y = "fees for the master", "costs of the program"
        assert bertscore_greedy(x, y, provider).precision == pytest.approx(
            bertscore_greedy(y, x, provider).recall, abs=1e-12
        )

    def test_toy_pair_matches_loop_oracle(self):
        cand, ref = "tuition fees per semester", "semester fees and contributions"
        engine = bertscore_greedy(cand, ref, provider)
        p, r, f1 = oracle_bertscore(oracle_tokenize(cand), oracle_tokenize(ref), oracle_hash_embed)
        assert engine.precision == pytest.approx(p, abs=1e-9)
        assert engine.recall == pytest.approx(r, abs=1e-9)
        assert engine.f1 == pytest.approx(f1, abs=1e-9)

    def test_f1_bounded(self):
        score = bertscore_greedy("a b c", "c d e", provider)
        assert score.f1 <= 1 + 1e-9

    def test_provider_failure_marks_metric_unavailable(self):
        from ragforge.errors import TransportError

        class DownProvider:
            provider_id = "down"
            dim = 4

            def embed(self, texts):
                raise TransportError("no embeddings today")

        with pytest.raises(MetricUnavailableError):
            bertscore_greedy("a", "b", DownProvider())


class ScriptedEndpoint:
    def __init__(self, responses):
        self.responses = list(responses)

    def chat(self, messages, model_id, temperature):
        return self.responses.pop(0)


class TestJudge:
    def test_parse_first_integer(self):
        assert parse_judge_score("Score: 4 because it is good") == 4
        assert parse_judge_score("5") == 5

    def test_parse_failure(self):
        with pytest.raises(JudgeParseError):
            parse_judge_score("great answer")
        with pytest.raises(JudgeParseError):
            parse_judge_score("I rate it 7 out of 10")

    def test_mock_judge_is_rouge_driven(self):
        llm = LlmClient(endpoint=MockChatEndpoint(), model_id="mock:deterministic")
        context = "Tuition is 3000 euros per semester."
        perfect = judge_answer("q?", context, context, "faithfulness", llm, qa_id="q1", match=True)
        assert perfect.score == 5
        assert perfect.match is True
        disjoint = judge_answer("q?", "zebras run fast", context, "faithfulness", llm, qa_id="q2")
        assert disjoint.score == 1

    def test_mock_judge_middle_formula(self):
        llm = LlmClient(endpoint=MockChatEndpoint(), model_id="mock:deterministic")
        context = "alpha beta gamma delta"
        answer = "alpha beta zz qq"
        expected = max(1, min(5, 1 + round(4 * rouge_l(answer, context).f1)))
        assert judge_answer("q?", answer, context, "relevance", llm).score == expected

    def test_reask_once_then_succeed(self):
        llm = LlmClient(endpoint=ScriptedEndpoint(["no score here", "Score: 3"]), model_id="m")
        assert judge_answer("q?", "a", "c", "fluency", llm).score == 3

    def test_two_parse_failures_raise(self):
        llm = LlmClient(endpoint=ScriptedEndpoint(["nope", "still nope"]), model_id="m")
        with pytest.raises(JudgeParseError):
            judge_answer("q?", "a", "c", "fluency", llm)

    def test_unknown_feature_rejected(self):
        llm = LlmClient(endpoint=ScriptedEndpoint([]), model_id="m")
        with pytest.raises(ValueError, match="feature"):
            judge_answer("q?", "a", "c", "helpfulness", llm)

    def test_judge_score_validation(self):
        with pytest.raises(ValueError):
            JudgeScore("q", "relevance", 6)
        with pytest.raises(ValueError):
            JudgeScore("q", "relevance", 3, rater="alien")


def _scores(feature, match_scores, nomatch_scores):
    out = []
    for i, s in enumerate(match_scores):
        out.append(JudgeScore(f"m{i}", feature, s, match=True))
    for i, s in enumerate(nomatch_scores):
        out.append(JudgeScore(f"n{i}", feature, s, match=False))
    return out


class TestConfusionMatrix:
    def test_top_configuration_pattern(self):
        # 20 judged answers, half retrieved correctly: all 10 matches score 5,
        # half the non-matches score 5 and half score below.
        scores = _scores("faithfulness", [5] * 10, [5] * 5 + [4] * 5)
        cm = confusion_matrix(scores, threshold=5)
        assert (cm.tp, cm.fn, cm.fp, cm.tn) == (10, 0, 5, 5)
        assert cm.tp + cm.fn == 10 and cm.fp + cm.tn == 10

    def test_threshold_one_never_rejects(self):
        scores = _scores("relevance", [1, 3, 5], [2, 4])
        cm = confusion_matrix(scores, threshold=1)
        assert cm.fn == 0 and cm.tn == 0

    def test_empty_input(self):
        cm = confusion_matrix([], threshold=5)
        assert (cm.tp, cm.fn, cm.fp, cm.tn) == (0, 0, 0, 0)

    def test_mixed_features_rejected(self):
        scores = [JudgeScore("a", "relevance", 5), JudgeScore("b", "fluency", 5)]
        with pytest.raises(ValueError, match="mix"):
            confusion_matrix(scores, 5)

    @given(st.lists(st.tuples(st.booleans(), st.integers(1, 5)), max_size=40), st.integers(1, 5))
    @settings(max_examples=100)
    def test_marginals_property(self, pairs, threshold):
        scores = [
            JudgeScore(f"q{i}", "coherence", score, match=match)
            for i, (match, score) in enumerate(pairs)
        ]
        cm = confusion_matrix(scores, threshold)
        assert cm.total == len(scores)
        assert cm.tp + cm.fn == sum(1 for m, _ in pairs if m)
        assert cm.fp + cm.tn == sum(1 for m, _ in pairs if not m)

    @given(st.lists(st.tuples(st.booleans(), st.integers(1, 5)), max_size=30))
    @settings(max_examples=60)
    def test_raising_threshold_never_increases_tp_or_fp(self, pairs):
        scores = [
            JudgeScore(f"q{i}", "coherence", score, match=match)
            for i, (match, score) in enumerate(pairs)
        ]
        previous = None
        for threshold in (1, 2, 3, 4, 5):
            cm = confusion_matrix(scores, threshold)
            if previous is not None:
                assert cm.tp <= previous.tp
                assert cm.fp <= previous.fp
            previous = cm


class TestAggregation:
    def test_single_score(self):
        rows = [{"feature": "relevance", "match": True, "score": 4}]
        assert aggregate_scores(rows, ("feature", "match")) == {("relevance", True): 4.0}

    def test_two_scores_mean(self):
        rows = [{"g": "x", "score": 4}, {"g": "x", "score": 5}]
        assert aggregate_scores(rows, ("g",)) == {("x",): 4.5}

    def test_twelve_record_fixture_matches_spreadsheet(self):
        # means computed independently by hand: Match row = (5+4+4)/3 etc.
        rows = [
            {"model": "a", "match": True, "score": 5}, {"model": "a", "match": True, "score": 4},
            {"model": "a", "match": True, "score": 4}, {"model": "a", "match": False, "score": 2},
            {"model": "a", "match": False, "score": 3}, {"model": "a", "match": False, "score": 2},
            {"model": "b", "match": True, "score": 3}, {"model": "b", "match": True, "score": 5},
            {"model": "b", "match": True, "score": 5}, {"model": "b", "match": False, "score": 1},
            {"model": "b", "match": False, "score": 2}, {"model": "b", "match": False, "score": 1},
        ]
        means = aggregate_scores(rows, ("model", "match"))
        assert means == {
            ("a", True): 4.3,   # 13/3 = 4.333 -> 4.3
            ("a", False): 2.3,  # 7/3 = 2.333 -> 2.3
            ("b", True): 4.3,   # 13/3
            ("b", False): 1.3,  # 4/3
        }

    def test_half_up_rounding(self):
        assert round_half_up(2.25, 1) == 2.3
        assert round_half_up(2.24, 1) == 2.2
        rows = [{"g": 1, "score": 2}, {"g": 1, "score": 3}]  # mean 2.5
        assert aggregate_scores(rows, ("g",)) == {(1,): 2.5}


class TestHumanRatings:
    def test_load_and_join_match_flags(self, tmp_path):
        path = tmp_path / "human.jsonl"
        path.write_text(
            json.dumps({"qa_id": "q1", "feature": "fluency", "score": 4, "rater": "human"}) + "\n"
            + json.dumps({"qa_id": "q2", "feature": "fluency", "score": 2, "rater": "human"}) + "\n",
            encoding="utf-8",
        )
        scores = load_human_ratings(path, match_by_qa={"q1": True, "q2": False})
        assert [s.rater for s in scores] == ["human", "human"]
        assert [s.match for s in scores] == [True, False]
        cm = confusion_matrix(scores, threshold=4)
        assert (cm.tp, cm.fn, cm.fp, cm.tn) == (1, 0, 0, 1)

    def test_bad_record_is_schema_error(self, tmp_path):
        from ragforge.errors import SchemaError

        path = tmp_path / "human.jsonl"
        path.write_text('{"qa_id": "q1", "feature": "fluency"}\n', encoding="utf-8")
        with pytest.raises(SchemaError, match="human.jsonl:1"):
            load_human_ratings(path)
