import json
import math
import sys

import pytest

import clinli


def test_text_processing():
    assert clinli.tokenize("Pt has h/o CHF, BP 13.3") == ["pt", "has", "h/o", "chf", ",", "bp", "13.3"]
    assert clinli.split_sentences("Fever noted. Dr. Lee saw him. Temp 38.5 today.") == [
        "Fever noted.",
        "Dr. Lee saw him.",
        "Temp 38.5 today.",
    ]
    sections = clinli.segment_note("HOSPITAL COURSE: Stable.\nPAST MEDICAL HISTORY: CHF.", "n1")
    assert [s["section"] for s in sections] == ["hospital_course", "past_medical_history"]
    assert sections[0]["note_id"] == "n1"


def test_jsonl_round_trip(tmp_path):
    train, dev, test = clinli.synthetic_dataset("clinical", planted=True, sizes=(12, 3, 3), seed=4)
    assert (len(train), len(dev), len(test)) == (12, 3, 3)
    path = tmp_path / "train.jsonl"
    clinli.write_jsonl(path, train)
    back, skipped = clinli.read_jsonl(path)
    assert back == train and skipped == 0
    with open(path, "a") as f:
        f.write(json.dumps({"gold_label": "-", "sentence1": "a", "sentence2": "b"}) + "\n")
    assert clinli.read_jsonl(path)[1] == 1


def test_kappa():
    table = [[20, 5, 0], [10, 15, 5], [0, 5, 40]]
    labels = ["entailment", "contradiction", "neutral"]
    a, b = [], []
    for i, row in enumerate(table):
        for j, count in enumerate(row):
            a += [labels[i]] * count
            b += [labels[j]] * count
    assert clinli.cohens_kappa(a, b) == pytest.approx(0.3975 / 0.6475, abs=1e-12)
    assert clinli.cohens_kappa(a, a) == 1.0
    with pytest.raises(clinli.ConfigError):
        clinli.cohens_kappa(["maybe"], ["neutral"])


def test_ontology():
    g = clinli.ConceptGraph.demo()
    assert len(g) > 0
    first = g.concept_ids()[0]
    assert g.shortest_path(first, first) == 0
    spans = g.match(clinli.tokenize("the patient has pneumonia"))
    assert spans and spans[0][:2] == (3, 4)
    ph, hp = g.kb_attention(["pneumonia"], ["lung", "x"])
    assert sum(ph[0]) == pytest.approx(1.0) and hp[1] == [0.0]
    with pytest.raises(clinli.Error):
        g.shortest_path(first, "no-such-concept")


def test_retrofit_and_vectors(tmp_path):
    v = clinli.Vectors(2)
    v.add("i", [0.0, 0.0])
    v.add("j", [2.0, 0.0])
    v.add("k", [5.0, 5.0])
    out, objective = clinli.retrofit(v, [("i", "j")], iterations=60)
    assert out["i"][0] == pytest.approx(2 / 3, abs=1e-12)
    assert out["k"] == [5.0, 5.0]
    # the objective is a rounded sum, so allow a few ulps once converged
    assert all(b <= a * (1 + 4 * sys.float_info.epsilon) for a, b in zip(objective, objective[1:]))
    path = tmp_path / "v.txt"
    out.write(path)
    assert clinli.Vectors.read(path)["j"] == out["j"]


def test_features():
    names = clinli.feature_names()
    assert len(names) == 35
    pair = clinli.NliPair("p", ["no", "fever"], ["fever"], "contradiction")
    f = clinli.extract_features(pair, graph=clinli.ConceptGraph.demo())
    assert len(f) == 35 and all(math.isfinite(x) for x in f)
    assert clinli.bleu(["a", "b", "c"], ["a", "b", "c", "d"]) == pytest.approx(math.exp(1 - 4 / 3), abs=1e-15)
    assert clinli.levenshtein("kitten", "sitting") == 3


def test_cli_train_and_model(tmp_path):
    assert "train:training.patience = 5" in clinli.describe("train")
    code, _, err = clinli.run_cli(["train", "--out", str(tmp_path), "--set", "hiden=1"])
    assert code == 2 and "hiden" in err
    code, _, err = clinli.run_cli([
        "train", "--out", str(tmp_path), "--set", "data.synthetic=clinical", "--set", "data.planted=true",
        "--set", "data.sizes=[24,6,6]", "--set", "seeds=[1]", "--set", "model.embedding_dim=8",
        "--set", "model.hidden=8", "--set", "training.max_epochs=3",
    ])
    assert code == 0, err
    model = clinli.NliModel.load(tmp_path / "experiment" / "1" / "best.ckpt")
    assert model.architecture == "bow"
    _, _, test = clinli.synthetic_dataset("clinical", planted=True, sizes=(24, 6, 6), seed=1)
    preds = model.predict(test)
    assert len(preds) == 6
    for p in preds:
        assert sum(p["probs"].values()) == pytest.approx(1.0)
        assert p["label"] in ("entailment", "contradiction", "neutral")
