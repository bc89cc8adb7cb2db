import math

import numpy as np
import pytest

from casengine.analysis import (
    PairwiseComparison,
    Trajectory,
    beta_sweep,
    exploration_radius,
    fit_bradley_terry,
    load_comparisons,
    novelty_vs_artists,
    novelty_vs_artworks,
    pooled_step_threshold,
    repetition_rate,
    return_rate,
    saturation_generation,
    trajectory_metrics,
)
from casengine.datasets import ConceptSequence
from casengine.embed import DeterministicTextEmbedder
from casengine.errors import ArgumentError, DataError, FittingError
from casengine.vocab import ArtistRecord, ArtworkRecord


# -- combination validity -----------------------------------------------------


def art(i, concepts):
    return ArtworkRecord(artwork_id=f"aw{i}", artist_id=f"ar{i}", concepts=frozenset(concepts))


def artist(k, vocab):
    return ArtistRecord(artist_id=f"ar{k}", vocabulary=frozenset(vocab), artwork_count=1)


def test_novelty_vs_artworks_hand_case():
    artworks = [art(0, {0, 1, 2}), art(1, {3, 4})]
    # S={1,2,5}: vs aw0 -> {5} (1), vs aw1 -> {1,2,5} (3); min = 1
    assert novelty_vs_artworks({1, 2, 5}, artworks) == 1
    assert novelty_vs_artworks({0, 1}, artworks) == 0
    assert novelty_vs_artworks({9}, artworks) == 1


def test_novelty_vs_artists_hand_case():
    artists = [artist(0, {0, 1, 2, 3}), artist(1, {4, 5})]
    assert novelty_vs_artists({0, 4}, artists) == 1
    assert novelty_vs_artists({0, 1, 2}, artists) == 0


def test_novelty_brute_force_random_property(synthetic_corpus):
    """Independent brute force over random concept sets; also N_cog <= N_art
    whenever each artist's vocabulary is a union of their artworks."""
    vocabulary, artworks, artists = synthetic_corpus
    rng = np.random.default_rng(0)
    for _ in range(200):
        s = set(rng.choice(vocabulary.size, size=rng.integers(1, 8), replace=False).tolist())
        brute_art = min(len(s - set(a.concepts)) for a in artworks)
        brute_cog = min(len(s - set(a.vocabulary)) for a in artists)
        assert novelty_vs_artworks(s, artworks) == brute_art
        assert novelty_vs_artists(s, artists) == brute_cog
        assert brute_cog <= brute_art


def test_novelty_empty_inputs_rejected():
    with pytest.raises(ArgumentError):
        novelty_vs_artworks({0}, [])
    with pytest.raises(ArgumentError):
        novelty_vs_artists({0}, [])


# -- beta sweep ----------------------------------------------------------------


def test_beta_sweep_shape_and_determinism(synthetic_corpus, synthetic_scorers):
    vocabulary, artworks, artists = synthetic_corpus
    coherence, context = synthetic_scorers
    seeds = [ConceptSequence((0,)), ConceptSequence((10,))]
    kwargs = dict(
        temperatures=[1.0, 2.5],
        betas=[0.0, 0.85],
        n_candidates=32,
        max_length=5,
        trials=2,
        seed=3,
    )
    cells = beta_sweep(seeds, coherence, context, artworks, artists, **kwargs)
    assert len(cells) == 4
    assert [(c.temperature, c.beta) for c in cells] == [
        (1.0, 0.0),
        (1.0, 0.85),
        (2.5, 0.0),
        (2.5, 0.85),
    ]
    for c in cells:
        assert c.trials == 4
        assert c.mean_n_art is not None and c.mean_n_cog is not None
        assert c.mean_n_cog <= c.mean_n_art
    again = beta_sweep(seeds, coherence, context, artworks, artists, **kwargs)
    assert [(c.mean_n_art, c.mean_n_cog) for c in again] == [
        (c.mean_n_art, c.mean_n_cog) for c in cells
    ]


def test_beta_sweep_high_beta_raises_atypicality(synthetic_corpus, synthetic_scorers):
    vocabulary, artworks, artists = synthetic_corpus
    coherence, context = synthetic_scorers
    seeds = [ConceptSequence((int(i),)) for i in np.random.default_rng(1).choice(100, 6, replace=False)]
    cells = beta_sweep(
        seeds, coherence, context, artworks, artists,
        temperatures=[2.5], betas=[0.0, 0.85],
        n_candidates=64, max_length=5, trials=2, seed=9,
    )
    by_beta = {c.beta: c for c in cells}
    assert by_beta[0.85].mean_n_cog > by_beta[0.0].mean_n_cog


# -- repetition -----------------------------------------------------------------


class TableEmbedder:
    """Embedder with a fixed vector per label, for exact-similarity fixtures."""

    def __init__(self, table):
        from casengine.embed import EmbeddingVector

        self.table = {k: EmbeddingVector(np.array(v, float), kind="text") for k, v in table.items()}

    def embed_text(self, text):
        return self.table[text]


def test_repetition_rate_hand_fixture():
    # runs A and B share "x" exactly; "y"/"z" are orthogonal to everything else
    emb = TableEmbedder({"x": [1, 0, 0], "y": [0, 1, 0], "z": [0, 0, 1]})
    report = repetition_rate([("A", ["x", "y"]), ("B", ["x", "z"])], emb, threshold=0.85)
    assert report.per_run_rate == {"A": 0.5, "B": 0.5}
    assert report.mean_rate == pytest.approx(0.5)
    assert report.top_repeated[0][0] == "x"


def test_repetition_threshold_is_strict():
    # cosine exactly at the threshold must NOT count
    s = 0.85
    emb = TableEmbedder({"a": [1, 0], "b": [s, math.sqrt(1 - s * s)]})
    report = repetition_rate([("A", ["a"]), ("B", ["b"])], emb, threshold=0.85)
    assert report.mean_rate == 0.0


def test_repetition_ignores_within_run_duplicates():
    emb = TableEmbedder({"x": [1, 0], "y": [0, 1], "w": [0, 1]})
    # "x" appears twice inside run A only: no cross-run match for it
    report = repetition_rate([("A", ["x", "x", "y"]), ("B", ["w"])], emb)
    assert report.per_run_rate["A"] == pytest.approx(1 / 3)


def test_repetition_requires_two_runs():
    with pytest.raises(ArgumentError):
        repetition_rate([("A", ["x"])], DeterministicTextEmbedder())


def test_repetition_skips_unembeddable():
    class Flaky:
        def embed_text(self, text):
            from casengine.errors import EmbeddingError

            if text == "bad":
                raise EmbeddingError("nope")
            return DeterministicTextEmbedder().embed_text(text)

    report = repetition_rate([("A", ["bad", "hello"]), ("B", ["hello"])], Flaky())
    assert report.skipped_concepts == 1
    assert report.per_run_rate["A"] == 1.0  # only "hello" counted, and it repeats


# -- trajectory metrics -----------------------------------------------------------


def test_exploration_radius_hand_case():
    traj = Trajectory(np.array([[0, 0], [3, 4], [1, 1]], float))
    assert exploration_radius(traj) == pytest.approx(5.0)


def test_exploration_radius_brute_force_random():
    rng = np.random.default_rng(2)
    for _ in range(100):
        pts = rng.normal(size=(rng.integers(1, 12), 5))
        brute = max(math.dist(pts[0], p) for p in pts)
        assert exploration_radius(Trajectory(pts)) == pytest.approx(brute)


def test_return_rate_hand_traced_ping_pong():
    """Path 0 -> 1 -> 0 -> 1 (1-D). Steps are all 1, median threshold 1.
    t=2: dist to {0,1} is 0 -> return. t=3: dist to {0,1,0} is 0 -> return.
    Rate = 2/3."""
    traj = Trajectory(np.array([[0.0], [1.0], [0.0], [1.0]]))
    assert return_rate(traj) == pytest.approx(2 / 3)


def test_return_rate_strictly_monotone_path_is_zero():
    # equally spaced line: min distance to previous equals the threshold (strict <)
    traj = Trajectory(np.array([[0.0], [1.0], [2.0], [3.0]]))
    assert return_rate(traj) == 0.0


def test_return_rate_explicit_threshold():
    traj = Trajectory(np.array([[0.0], [1.0], [2.0], [3.0]]))
    assert return_rate(traj, threshold=1.5) == pytest.approx(2 / 3)


def test_return_rate_length_guard():
    with pytest.raises(ArgumentError):
        return_rate(Trajectory(np.array([[0.0], [1.0]])))


def test_pooled_step_threshold():
    t1 = Trajectory(np.array([[0.0], [1.0], [3.0]]))  # steps 1, 2
    t2 = Trajectory(np.array([[0.0], [4.0]]))  # step 4
    assert pooled_step_threshold([t1, t2]) == pytest.approx(2.0)
    with pytest.raises(ArgumentError):
        pooled_step_threshold([Trajectory(np.zeros((1, 1)))])


def test_saturation_generation_hand_case():
    # radii: 0, 1, 5, 4 -> target 4.75, first t>=1 reaching it is t=2
    traj = Trajectory(np.array([[0.0], [1.0], [5.0], [4.0]]))
    assert saturation_generation(traj) == 2


def test_saturation_at_095_boundary_counts():
    # radii 0, 0.95, 1.0 -> target 0.95; non-strict comparison -> t=1
    traj = Trajectory(np.array([[0.0], [0.95], [1.0]]))
    assert saturation_generation(traj) == 1


def test_trajectory_metrics_bundle():
    traj = Trajectory(np.array([[0.0], [1.0], [0.0], [1.0]]))
    m = trajectory_metrics(traj)
    assert m.exploration_radius == pytest.approx(1.0)
    assert m.return_rate == pytest.approx(2 / 3)
    assert m.saturation_generation == 1


def test_trajectory_must_be_2d():
    with pytest.raises(ArgumentError):
        Trajectory(np.zeros(5))


# -- Bradley-Terry ------------------------------------------------------------------


def comps(pairs):
    return [PairwiseComparison(a, b, w) for a, b, w in pairs]


def test_bt_two_methods_3_to_1_gives_half_ln3():
    """Wins 3:1 between two methods: theta difference = ln 3 exactly at the MLE."""
    data = comps([("A", "B", "A")] * 3 + [("A", "B", "B")])
    est = fit_bradley_terry(data)
    assert est.theta["A"] - est.theta["B"] == pytest.approx(math.log(3), abs=1e-6)
    assert est.theta["A"] + est.theta["B"] == pytest.approx(0.0, abs=1e-9)


def test_bt_sum_zero_constraint():
    rng = np.random.default_rng(4)
    methods = ["A", "B", "C", "D"]
    data = []
    for _ in range(300):
        i, j = rng.choice(4, size=2, replace=False)
        a, b = methods[i], methods[j]
        data.append(PairwiseComparison(a, b, a if rng.random() < 0.6 else b))
    est = fit_bradley_terry(data)
    assert sum(est.theta.values()) == pytest.approx(0.0, abs=1e-9)


def test_bt_parameter_recovery_within_3_se():
    """Simulate from known skills; each fitted theta within 3 SE of truth."""
    rng = np.random.default_rng(7)
    truth = {"A": 1.0, "B": 0.0, "C": -1.0}
    truth = {m: v - np.mean(list(truth.values())) for m, v in truth.items()}
    methods = list(truth)
    data = []
    for _ in range(2000):
        i, j = rng.choice(3, size=2, replace=False)
        a, b = methods[i], methods[j]
        pa = 1 / (1 + math.exp(truth[b] - truth[a]))
        data.append(PairwiseComparison(a, b, a if rng.random() < pa else b))
    est = fit_bradley_terry(data)
    for m in methods:
        assert abs(est.theta[m] - truth[m]) <= 3 * est.standard_error[m], m


def test_bt_significance_markers():
    # overwhelming evidence A >> B
    data = comps([("A", "B", "A")] * 500 + [("A", "B", "B")] * 50)
    est = fit_bradley_terry(data)
    assert est.significance[("A", "B")] == "***"
    # coin-flip evidence
    even = comps([("A", "B", "A")] * 10 + [("A", "B", "B")] * 10)
    est2 = fit_bradley_terry(even)
    assert est2.significance[("A", "B")] == "ns"
    assert est2.theta["A"] == pytest.approx(0.0, abs=1e-9)


def test_bt_drops_isolated_method_with_warning():
    data = comps([("A", "B", "A"), ("A", "B", "B")])
    data.append(PairwiseComparison("C", "D", "C"))
    # disconnected graph must be refused
    with pytest.raises(FittingError):
        fit_bradley_terry(data)


def test_bt_empty_and_degenerate():
    with pytest.raises(FittingError):
        fit_bradley_terry([])


def test_bt_winner_must_be_participant():
    with pytest.raises(DataError):
        PairwiseComparison("A", "B", "C")


def test_load_comparisons_tsv_and_filter(tmp_path):
    p = tmp_path / "comps.tsv"
    p.write_text(
        "item_a\titem_b\twinner\tcriterion\n"
        "A\tB\tA\toriginality\n"
        "A\tB\tB\taesthetics\n"
        "# comment\n"
        "B\tC\tB\toriginality\n"
    )
    rows = load_comparisons(p)
    assert len(rows) == 3
    orig = load_comparisons(p, criterion="originality")
    assert len(orig) == 2
    assert all(r.criterion == "originality" for r in orig)


def test_load_comparisons_csv_default_criterion(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("A,B,A\n")
    rows = load_comparisons(p)
    assert rows == [PairwiseComparison("A", "B", "A", "originality")]
    bad = tmp_path / "bad.csv"
    bad.write_text("A,B\n")
    with pytest.raises(DataError):
        load_comparisons(bad)
