from pathlib import Path

import pytest

import pslvqa

FIXTURES = Path(__file__).resolve().parents[2] / "tests" / "fixtures"


def read(rel):
    return (FIXTURES / rel).read_text()


def test_two_answer_inference():
    for solver in ("admm", "simplex"):
        s = pslvqa.infer(read("two_answer/rules.psl"), read("two_answer/data.jsonl"), solver=solver)
        assert s["converged"]
        assert s["objective"] == pytest.approx(0.6, abs=1e-4)
        assert s["values"]["ans(a)"] == pytest.approx(1.0, abs=1e-4)
        assert s["values"]["ans(b)"] == pytest.approx(0.0, abs=1e-4)


def test_grid_oracle_and_dump():
    rules, data = read("two_answer/rules.psl"), read("two_answer/data.jsonl")
    assert pslvqa.grid_oracle(rules, data)["objective"] == pytest.approx(0.6)
    assert "ans(a) | word(a)" in pslvqa.dump_grounding(rules, data)


def test_errors_become_exceptions():
    with pytest.raises(pslvqa.PslError):
        pslvqa.infer("0.8 votesFor(X,Z)", "")
    with pytest.raises(ValueError):
        pslvqa.luk_and(1.5, 0.2)


def test_lukasiewicz():
    assert pslvqa.luk_and(0.75, 0.5) == 0.25
    assert pslvqa.luk_or(0.75, 0.5) == 1.0
    assert pslvqa.luk_not(0.25) == 0.75


def test_similarity_and_extraction():
    emb = str(FIXTURES / "captions" / "embeddings.txt")
    assert pslvqa.similarity("dressed in", "dressed in", embeddings=[emb]) == pytest.approx(1.0)
    assert pslvqa.similarity("a", "b", sims="a | b | 0.4") == pytest.approx(0.4)
    vocab = read("captions/vocab.txt").split("\n")
    triplets = pslvqa.extract(read("captions/captions.conll"), [v for v in vocab if v.strip()],
                              embeddings=[emb])
    assert ("man", "dressed in", "shirt") in [t[:3] for t in triplets]


def test_answer_ranking():
    ranked = pslvqa.answer(str(FIXTURES / "adversarial"))
    assert ranked[0]["answer"] == "church"
    assert sum(a["value"] for a in ranked) <= 1.0 + 1e-6


def test_learning():
    weights, text = pslvqa.learn(read("learning/rules.psl"), [read("learning/data/instance.jsonl")])
    assert weights[0] > weights[1]
    assert "label(X) <- pos(X)" in text
