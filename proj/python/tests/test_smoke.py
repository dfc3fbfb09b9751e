import json
import math
import os
from pathlib import Path

import pytest

import greenrec

ML100K = Path(os.environ.get("GREENREC_ML100K", "data/ml-100k/u.data"))


def test_co2_examples():
    assert greenrec.co2e_savings_kg(0.48) == pytest.approx(51.02, abs=0.01)
    assert greenrec.co2e_savings_kg(1.0) == 0.0
    with pytest.raises(ValueError):
        greenrec.co2e_savings_kg(0.5, intensity_g_per_kwh=-1)


def test_ndcg():
    assert greenrec.ndcg_at_k([4, 7], [7], 10) == pytest.approx(1 / math.log2(3))
    assert greenrec.ndcg_at_k([1, 2], [2, 1]) == 1.0
    with pytest.raises(ValueError):
        greenrec.ndcg_at_k([1], [])


def write_ratings(path, users=30, items=20):
    lines = []
    for u in range(users):
        for i in range(items):
            if (u * 7 + i * 3) % 5 < 3:
                lines.append(f"{u}\t{i}\t{1 + (u + i) % 5}\t{u * items + i}")
    path.write_text("\n".join(lines) + "\n")


def test_stats_and_preprocess(tmp_path):
    data = tmp_path / "r.tsv"
    write_ratings(data)
    stats = greenrec.dataset_stats(str(data))
    assert stats["users"] == 30 and stats["items"] == 20
    assert 0 < stats["sparsity_pct"] < 100
    out = tmp_path / "pruned.tsv"
    report = greenrec.preprocess(str(data), k=5, out=str(out))
    assert report["after"]["interactions"] <= report["before"]["interactions"]
    assert out.exists()
    with pytest.raises(ValueError):
        greenrec.dataset_stats(str(data), schema="user=0")


def test_run_and_reports(tmp_path):
    data = tmp_path / "r.tsv"
    write_ratings(data)
    config = {
        "datasets": [{"name": "toy", "path": str(data), "prune_k": 3}],
        "portions": [0.5, 1.0],
        "algorithms": ["Popularity", {"kind": "ItemKNN", "grid": {"neighbors": [5, 10]}}],
        "seeds": [1, 2],
        "output_dir": str(tmp_path / "out"),
    }
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps(config))
    store = greenrec.run_experiment(str(cfg))
    assert len(store["records"]) == 8
    assert all(0 <= r["ndcg_at_10"] <= 1 for r in store["records"])
    again = greenrec.load_results(str(tmp_path / "out"))
    assert [r["ndcg_at_10"] for r in again["records"]] == [r["ndcg_at_10"] for r in store["records"]]
    rel = greenrec.relative_performance(str(tmp_path / "out"))
    assert all(c["percent"] == 100.0 for c in rel if c["portion"] == 1.0)
    assert greenrec.runtime_profile(str(tmp_path / "out"))[1.0] == 1.0
    paths = greenrec.report(str(tmp_path / "out"), "co2_table")
    assert paths and all(Path(p).exists() for p in paths)


@pytest.mark.skipif(not ML100K.exists(), reason="MovieLens 100K not downloaded")
def test_ml100k_tables():
    raw = greenrec.dataset_stats(str(ML100K))
    assert (raw["users"], raw["items"], raw["interactions"]) == (943, 1682, 100000)
    core = greenrec.dataset_stats(str(ML100K), k=10)
    assert (core["users"], core["items"], core["interactions"]) == (943, 1152, 97953)
