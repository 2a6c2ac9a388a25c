import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from streamedit.bench import (
    TASKS,
    BenchEntry,
    BenchSource,
    DiversityKMeans,
    MockJudge,
    ScoreRecord,
    aggregate,
    build_benchmark,
    conditioning_stub,
    diverse_sources,
    embed_texts,
    expand_agreement_rows,
    expected_count,
    fixture_records,
    load_agreement_table,
    load_manifest,
    load_scores,
    load_vlm_table,
    preference_agreement,
    save_manifest,
    save_scores,
    select_diverse,
)

# ------------------------------------------------------------------ k-means


def blobs(k=4, per=25, seed=0):
    rng = np.random.default_rng(seed)
    centers = np.eye(k) * 20.0
    X = np.concatenate([c + rng.standard_normal((per, k)) * 0.3 for c in centers])
    return X, np.repeat(np.arange(k), per)


def test_kmeans_recovers_separated_blobs():
    X, truth = blobs()
    km = DiversityKMeans(4, random_state=1).fit(X)
    # same partition up to relabelling
    pairs = set(zip(truth, km.labels_))
    assert len(pairs) == 4 and len({p[1] for p in pairs}) == 4


def test_kmeans_k_equals_n_gives_zero_inertia():
    X = np.random.default_rng(2).standard_normal((7, 3))
    km = DiversityKMeans(7).fit(X)
    assert km.inertia_ == pytest.approx(0.0, abs=1e-12)
    assert len(set(km.labels_)) == 7


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), k=st.integers(1, 6))
def test_kmeans_objective_non_increasing(seed, k):
    X = np.random.default_rng(seed).standard_normal((40, 3))
    km = DiversityKMeans(k, random_state=seed).fit(X)
    h = km.inertia_history_
    assert all(b <= a + 1e-9 for a, b in zip(h, h[1:]))
    assert km.n_iter_ <= km.max_iter


def test_kmeans_is_deterministic_given_seed():
    X = np.random.default_rng(3).standard_normal((50, 4))
    a = DiversityKMeans(5, random_state=7).fit(X)
    b = DiversityKMeans(5, random_state=7).fit(X)
    assert np.array_equal(a.labels_, b.labels_)


def test_kmeans_rejects_too_many_clusters():
    with pytest.raises(ValueError):
        DiversityKMeans(5).fit(np.zeros((3, 2)))


def test_kmeans_predict_matches_labels():
    X, _ = blobs()
    km = DiversityKMeans(4, random_state=0).fit(X)
    assert np.array_equal(km.predict(X), km.labels_)


# ------------------------------------------------------------------ diversity selection


def test_select_ten_per_cluster_gives_hundred():
    X, truth = blobs(k=10, per=15)
    ids = [f"v{i:03d}" for i in range(len(X))]
    km = DiversityKMeans(10, random_state=0).fit(X)
    chosen = select_diverse(ids, X, km.labels_, km.cluster_centers_, per_cluster=10)
    assert len(chosen) == 100 and len(set(chosen)) == 100


def test_select_one_per_cluster_is_nearest_to_centroid():
    X, _ = blobs(k=3, per=10)
    ids = list(range(len(X)))
    km = DiversityKMeans(3, random_state=0).fit(X)
    chosen = select_diverse(ids, X, km.labels_, km.cluster_centers_, per_cluster=1)
    for j, i in enumerate(chosen):
        members = np.flatnonzero(km.labels_ == j)
        d = ((X[members] - km.cluster_centers_[j]) ** 2).sum(1)
        assert i == members[d.argmin()]


def test_select_small_cluster_warns_and_takes_all():
    X = np.array([[0.0], [0.1], [10.0]])
    with pytest.warns(UserWarning):
        chosen = select_diverse(["a", "b", "c"], X, np.array([0, 0, 1]), np.array([[0.05], [10.0]]), per_cluster=2)
    assert sorted(chosen) == ["a", "b", "c"]


def _sources(n=60):
    objs = ["cup", "knife", "phone", "book", "drill", "pan"]
    scenes = ["kitchen counter", "garage workbench", "office desk", "living room"]
    return [BenchSource(f"s{i:03d}", source_object=objs[i % 6], scene=scenes[(i * 7) % 4] + f" view {i % 5}")
            for i in range(n)]


def test_diverse_sources_invariant_to_input_permutation():
    src = _sources()
    a, _ = diverse_sources(src, n_clusters=5, per_cluster=3)
    perm = [src[i] for i in np.random.default_rng(0).permutation(len(src))]
    b, _ = diverse_sources(perm, n_clusters=5, per_cluster=3)
    assert [s.source_id for s in a] == [s.source_id for s in b]


def test_embedding_is_deterministic_and_normalised():
    e1 = embed_texts(["red cup kitchen", "drill garage"])
    e2 = embed_texts(["red cup kitchen", "drill garage"])
    assert np.array_equal(e1, e2)
    np.testing.assert_allclose(np.linalg.norm(e1, axis=1), 1.0)


# ------------------------------------------------------------------ benchmark assembly


def test_benchmark_has_1700_entries_and_400_change_object():
    entries = build_benchmark([f"s{i}" for i in range(100)])
    assert len(entries) == 1700
    counts = {t: sum(e.task == t for e in entries) for t in TASKS}
    assert counts["ChangeObject"] == 400
    assert counts["AddObject"] == counts["RemoveObject"] == 50
    assert all(counts[t] == 100 for t in TASKS if t not in ("ChangeObject", "AddObject", "RemoveObject"))
    variants = [e.variant for e in entries if e.task == "ChangeObject" and e.source_id == "s0"]
    assert sum(v.startswith("replace-effect") for v in variants) == 2 and len(variants) == 4


@pytest.mark.parametrize("n", [0, 1, 7, 50, 120])
def test_benchmark_size_matches_closed_form(n):
    assert len(build_benchmark([f"s{i}" for i in range(n)])) == expected_count(n)


def test_benchmark_closed_form_for_full_pools():
    n = 30
    pool = [f"p{i}" for i in range(50)]
    entries = build_benchmark([f"s{i}" for i in range(n)], add_sources=pool, remove_sources=pool)
    assert len(entries) == 12 * n + 4 * n + 50 + 50


def test_fixed_instructions_and_conditioning():
    entries = build_benchmark([BenchSource("s0", caption="a man slicing bread")])
    by_task = {e.task: e for e in entries}
    assert by_task["VideoToDepth"].instruction == "Turn the video into a depth map."
    assert "a man slicing bread" in by_task["DepthToVideo"].instruction
    assert by_task["PoseToVideo"].conditioning_kind == "pose"
    assert by_task["Stylization"].conditioning_kind is None
    assert conditioning_stub("depth")["signal"].shape == (1, 8, 8)


def test_missing_template_raises():
    with pytest.raises(KeyError, match="Reasoning"):
        build_benchmark(["s0"], templates={"VideoToDepth": "x"})


def test_unknown_task_rejected():
    with pytest.raises(ValueError):
        BenchEntry("0", "s", "Dance", "")


def test_manifest_round_trip(tmp_path):
    entries = build_benchmark(["a", "b"])
    save_manifest(tmp_path / "m.jsonl", entries)
    assert load_manifest(tmp_path / "m.jsonl") == entries


# ------------------------------------------------------------------ aggregation


def _entries(spec):
    out = []
    for task, n in spec.items():
        out += [BenchEntry(f"{task}-{i}", f"s{i}", task, "") for i in range(n)]
    return out


def test_equal_weighting_not_pooled():
    entries = _entries({"AddObject": 1, "Reasoning": 3})
    records = [ScoreRecord("AddObject-0", "VLM", 4.0)] + [ScoreRecord(f"Reasoning-{i}", "VLM", 8.0) for i in range(3)]
    with pytest.warns(UserWarning):
        rep = aggregate(records, entries + _entries({"Stylization": 1}))
    assert rep.overall["VLM"] == 6.0
    assert rep.missing["VLM"] == ["Stylization"]


def test_single_record_overall():
    rep = aggregate([ScoreRecord("AddObject-0", "PickScore", 19.1)], _entries({"AddObject": 1}))
    assert rep.overall["PickScore"] == 19.1


def test_overall_invariant_to_duplicating_a_task():
    entries = _entries({"AddObject": 2, "Reasoning": 2})
    recs = [ScoreRecord("AddObject-0", "VLM", 3.0), ScoreRecord("AddObject-1", "VLM", 5.0),
            ScoreRecord("Reasoning-0", "VLM", 9.0), ScoreRecord("Reasoning-1", "VLM", 7.0)]
    dup = recs + [r for r in recs if r.entry_id.startswith("Reasoning")]
    assert aggregate(recs, entries).overall == aggregate(dup, entries).overall


def test_table4_overall_from_per_task_scores():
    rep = aggregate(*fixture_records("EgoEdit"))
    table = load_vlm_table()
    assert abs(rep.overall["VLM"] - table["EgoEdit"]["printed_overall"]) < 0.01
    assert rep.overall["VLM"] == pytest.approx(np.mean(table["EgoEdit"]["scores"]), abs=1e-12)


def test_unknown_entry_and_bad_scores_raise():
    with pytest.raises(KeyError):
        aggregate([ScoreRecord("nope", "VLM", 1.0)], [])
    with pytest.raises(ValueError):
        ScoreRecord("x", "VLM", 11.0)
    with pytest.raises(ValueError):
        ScoreRecord("x", "BLEU", 1.0)


def test_mock_judge_and_score_file(tmp_path):
    e = BenchEntry("0", "s", "AddObject", "")
    rec = MockJudge({"0": {"VLM": 7.5}}).score(e)
    save_scores(tmp_path / "s.jsonl", [rec])
    assert load_scores(tmp_path / "s.jsonl") == [rec]


def test_report_grid_lists_overall():
    rep = aggregate(*fixture_records("EgoEdit"))
    assert rep.grid().splitlines()[1].endswith("7.76")


# ------------------------------------------------------------------ agreement


def test_identical_preferences_agree_fully():
    r = preference_agreement([9, 1, 9], [1, 9, 1], ["A", "B", "A"])
    assert r.overall == 100.0


def test_hand_counted_fixture_26_of_30():
    a = [8.0] * 30
    b = [5.0] * 30
    human = ["A"] * 26 + ["B"] * 4
    assert preference_agreement(a, b, human).overall == pytest.approx(86.7, abs=0.05)


def test_ties_go_to_a_and_are_counted():
    r = preference_agreement([5, 5], [5, 1], ["A", "A"])
    assert r.overall == 100.0 and r.total_ties == 1


def test_agreement_symmetric_under_relabelling():
    rng = np.random.default_rng(4)
    a, b = rng.random(40), rng.random(40)
    human = list(rng.choice(["A", "B"], 40))
    swap = ["B" if h == "A" else "A" for h in human]
    assert preference_agreement(a, b, human).overall == preference_agreement(b, a, swap).overall


def test_agreement_rejects_unpaired():
    with pytest.raises(ValueError):
        preference_agreement([1, 2], [1], ["A", "B"])
    with pytest.raises(ValueError):
        preference_agreement([1], [2], ["C"])


@pytest.mark.parametrize("baseline,expected", [("LucyEdit", 86.2), ("InsV2V", 84.9)])
def test_table3_agreement(baseline, expected):
    table = load_agreement_table()
    sa, sb, human, tasks = expand_agreement_rows(table["rows"], baseline)
    r = preference_agreement(sa, sb, human, tasks)
    assert round(r.overall, 1) == expected
    for row in table["rows"]:
        assert round(r.per_task[row["task"]], 1) == row["agreement"][baseline]
    # the constructed samples also reproduce the printed preference totals
    assert sum(x > y for x, y in zip(sa, sb)) == table["printed_totals"]["judge_ours"][baseline]
    assert human.count("A") == table["printed_totals"]["human_ours"][baseline]
