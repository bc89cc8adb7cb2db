"""Analysis suite: combination-validity metrics, the beta sweep, repetition
analysis, long-range trajectory metrics, and Bradley-Terry skill fitting."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .datasets import ConceptSequence
from .embed import TextEmbedder, cosine
from .errors import ArgumentError, DataError, EmbeddingError, FittingError, SamplerExhaustedError
from .sampler import CasConfig, rank_candidates
from .scorer import SequenceScorer, sample_continuations
from .vocab import ArtistRecord, ArtworkRecord


# -- combination validity ---------------------------------------------------

def novelty_vs_artworks(concepts: set[int], artworks: Sequence[ArtworkRecord]) -> int:
    """Minimum over artworks of |S \\ A_i|: concepts absent from the closest artwork."""
    if not artworks:
        raise ArgumentError("artworks must be non-empty")
    return min(len(concepts - set(aw.concepts)) for aw in artworks)


def novelty_vs_artists(concepts: set[int], artists: Sequence[ArtistRecord]) -> int:
    """Minimum over artists of |S \\ V_k|: concepts outside the closest artist vocabulary."""
    if not artists:
        raise ArgumentError("artists must be non-empty")
    return min(len(concepts - set(ar.vocabulary)) for ar in artists)


@dataclass
class SweepCell:
    temperature: float
    beta: float
    mean_n_art: float | None
    mean_n_cog: float | None
    trials: int


def select_top_candidate(
    seed: ConceptSequence,
    coherence: SequenceScorer,
    context: SequenceScorer,
    cfg: CasConfig,
) -> ConceptSequence:
    """Draw N candidates and return the top-scored sequence at cfg.beta."""
    candidates = sample_continuations(
        coherence, seed, cfg.n_candidates, cfg.temperature, cfg.max_length, cfg.seed
    )
    ranked = rank_candidates(candidates, coherence, context, cfg.beta)
    return ranked[0].sequence


def beta_sweep(
    seeds: Sequence[ConceptSequence],
    coherence: SequenceScorer,
    context: SequenceScorer,
    artworks: Sequence[ArtworkRecord],
    artists: Sequence[ArtistRecord],
    temperatures: Sequence[float],
    betas: Sequence[float],
    n_candidates: int = 256,
    max_length: int = 10,
    trials: int = 1,
    seed: int = 0,
) -> list[SweepCell]:
    """Mean combination-validity of top-scored selections per (temperature, beta)."""
    cells: list[SweepCell] = []
    for temperature in temperatures:
        for beta in betas:
            n_art_vals: list[int] = []
            n_cog_vals: list[int] = []
            for trial in range(trials):
                for si, seed_seq in enumerate(seeds):
                    cell_seed = int(
                        np.random.SeedSequence(
                            entropy=[seed & 0xFFFFFFFF, trial, si, int(temperature * 1000)]
                        ).generate_state(1)[0]
                    )
                    cfg = CasConfig(
                        n_candidates=n_candidates,
                        beta=beta,
                        temperature=temperature,
                        max_length=max_length,
                        seed=cell_seed,
                    )
                    try:
                        selected = select_top_candidate(seed_seq, coherence, context, cfg)
                    except SamplerExhaustedError:
                        continue
                    s = set(selected.tokens)
                    n_art_vals.append(novelty_vs_artworks(s, artworks))
                    n_cog_vals.append(novelty_vs_artists(s, artists))
            cells.append(
                SweepCell(
                    temperature=temperature,
                    beta=beta,
                    mean_n_art=float(np.mean(n_art_vals)) if n_art_vals else None,
                    mean_n_cog=float(np.mean(n_cog_vals)) if n_cog_vals else None,
                    trials=len(n_art_vals),
                )
            )
    return cells


# -- repetition ---------------------------------------------------------------

@dataclass
class RepetitionReport:
    per_run_rate: dict[str, float]
    mean_rate: float
    top_repeated: list[tuple[str, int]]
    skipped_concepts: int = 0


def repetition_rate(
    run_concepts: Sequence[tuple[str, Sequence[str]]],
    embedder: TextEmbedder,
    threshold: float = 0.85,
) -> RepetitionReport:
    """Cross-run concept repetition by embedding similarity.

    A concept in one run counts as repeated when any concept in any other run
    has cosine similarity strictly above the threshold. Mirrors the repetition
    analysis used to compare inspiration methods.
    """
    if len(run_concepts) < 2:
        raise ArgumentError("repetition analysis needs at least two runs")
    skipped = 0
    vectors: dict[tuple[str, str], object] = {}
    for run_id, labels in run_concepts:
        for lbl in labels:
            if (run_id, lbl) in vectors:
                continue
            try:
                vectors[(run_id, lbl)] = embedder.embed_text(lbl)
            except EmbeddingError:
                skipped += 1
                vectors[(run_id, lbl)] = None

    per_run: dict[str, float] = {}
    match_counts: dict[str, int] = {}
    for run_id, labels in run_concepts:
        repeated = 0
        total = 0
        for lbl in labels:
            vec = vectors[(run_id, lbl)]
            if vec is None:
                continue
            total += 1
            hit = False
            for other_id, other_labels in run_concepts:
                if other_id == run_id:
                    continue
                for other_lbl in other_labels:
                    ovec = vectors[(other_id, other_lbl)]
                    if ovec is None:
                        continue
                    if cosine(vec, ovec) > threshold:
                        hit = True
                        match_counts[lbl] = match_counts.get(lbl, 0) + 1
            if hit:
                repeated += 1
        per_run[run_id] = repeated / total if total else 0.0
    top = sorted(match_counts.items(), key=lambda kv: (-kv[1], kv[0]))[:15]
    return RepetitionReport(
        per_run_rate=per_run,
        mean_rate=float(np.mean(list(per_run.values()))),
        top_repeated=top,
        skipped_concepts=skipped,
    )


# -- long-range trajectory metrics --------------------------------------------

@dataclass
class Trajectory:
    embeddings: np.ndarray  # (generations, dim)
    method: str = ""
    run_id: str = ""

    def __post_init__(self) -> None:
        self.embeddings = np.asarray(self.embeddings, dtype=float)
        if self.embeddings.ndim != 2:
            raise ArgumentError("trajectory must be a 2-D array of embeddings")

    def __len__(self) -> int:
        return int(self.embeddings.shape[0])


def exploration_radius(trajectory: Trajectory) -> float:
    """Maximum Euclidean distance of any point from the starting embedding."""
    points = trajectory.embeddings
    if len(points) < 1:
        raise ArgumentError("trajectory must contain at least one point")
    return float(np.linalg.norm(points - points[0], axis=1).max())


def return_rate(trajectory: Trajectory, threshold: float | None = None) -> float:
    """Fraction of generations (after the first) that revisit earlier territory.

    The threshold defaults to the median consecutive-step distance of this
    trajectory; a return occurs when the minimum distance to all previous
    points falls strictly below it.
    """
    points = trajectory.embeddings
    length = len(points)
    if length < 3:
        raise ArgumentError("return rate needs a trajectory of length >= 3")
    steps = np.linalg.norm(np.diff(points, axis=0), axis=1)
    if threshold is None:
        threshold = float(np.median(steps))
    returns = 0
    for t in range(2, length):
        dmin = float(np.linalg.norm(points[:t] - points[t], axis=1).min())
        if dmin < threshold:
            returns += 1
    return returns / (length - 1)


def pooled_step_threshold(trajectories: Sequence[Trajectory]) -> float:
    """Median consecutive-step distance pooled over a method's trajectories."""
    steps: list[float] = []
    for traj in trajectories:
        steps.extend(np.linalg.norm(np.diff(traj.embeddings, axis=0), axis=1).tolist())
    if not steps:
        raise ArgumentError("no steps available for threshold computation")
    return float(np.median(steps))


def saturation_generation(trajectory: Trajectory) -> int:
    """First generation whose radius reaches >= 95% of the maximum radius."""
    points = trajectory.embeddings
    if len(points) < 2:
        raise ArgumentError("saturation needs a trajectory of length >= 2")
    radii = np.linalg.norm(points - points[0], axis=1)
    target = 0.95 * radii.max()
    for t, r in enumerate(radii):
        if t >= 1 and r >= target:
            return t
    return len(points) - 1


@dataclass
class TrajectoryMetrics:
    exploration_radius: float
    return_rate: float
    saturation_generation: int


def trajectory_metrics(trajectory: Trajectory) -> TrajectoryMetrics:
    return TrajectoryMetrics(
        exploration_radius=exploration_radius(trajectory),
        return_rate=return_rate(trajectory),
        saturation_generation=saturation_generation(trajectory),
    )


# -- Bradley-Terry -------------------------------------------------------------

@dataclass(frozen=True)
class PairwiseComparison:
    item_a: str
    item_b: str
    winner: str
    criterion: str = "originality"

    def __post_init__(self) -> None:
        if self.winner not in (self.item_a, self.item_b):
            raise DataError(f"winner {self.winner!r} is neither item of the comparison")


@dataclass
class SkillEstimate:
    methods: list[str]
    theta: dict[str, float]
    standard_error: dict[str, float]
    covariance: np.ndarray = field(repr=False, default=None)
    significance: dict[tuple[str, str], str] = field(default_factory=dict)

    def z_score(self, a: str, b: str) -> float:
        ia, ib = self.methods.index(a), self.methods.index(b)
        var = self.covariance[ia, ia] + self.covariance[ib, ib] - 2 * self.covariance[ia, ib]
        return (self.theta[a] - self.theta[b]) / math.sqrt(max(var, 1e-300))


def _connected_components(methods: list[str], wins: np.ndarray) -> list[set[str]]:
    parent = list(range(len(methods)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(methods)):
        for j in range(len(methods)):
            if wins[i, j] + wins[j, i] > 0:
                ri, rj = find(i), find(j)
                parent[ri] = rj
    groups: dict[int, set[str]] = {}
    for i, m in enumerate(methods):
        groups.setdefault(find(i), set()).add(m)
    return list(groups.values())


def _significance_marker(z: float) -> str:
    a = abs(z)
    if a >= 3.2905:  # two-sided p < 0.001
        return "***"
    if a >= 2.5758:  # p < 0.01
        return "**"
    if a >= 1.9600:  # p < 0.05
        return "*"
    return "ns"


def fit_bradley_terry(
    comparisons: Sequence[PairwiseComparison],
    tol: float = 1e-12,
    max_iter: int = 100000,
) -> SkillEstimate:
    """Maximum-likelihood skill parameters under P(a beats b) = e^ta/(e^ta+e^tb).

    Fitted by minorization-maximization updates until the gradient norm drops
    below 1e-10, normalized to sum(theta) = 0. Standard errors come from the
    pseudo-inverse of the Fisher information restricted to the sum-zero space;
    pairwise significance uses Wald z-tests on theta differences.
    """
    if not comparisons:
        raise FittingError("no comparisons supplied")
    all_methods = sorted({c.item_a for c in comparisons} | {c.item_b for c in comparisons})
    index = {m: i for i, m in enumerate(all_methods)}
    k = len(all_methods)
    wins = np.zeros((k, k), dtype=float)
    for c in comparisons:
        loser = c.item_b if c.winner == c.item_a else c.item_a
        wins[index[c.winner], index[loser]] += 1.0

    # Exclude methods with no decided comparisons at all.
    totals = wins.sum(axis=1) + wins.sum(axis=0)
    keep = [i for i in range(k) if totals[i] > 0]
    dropped = [all_methods[i] for i in range(k) if totals[i] == 0]
    if dropped:
        warnings.warn(f"methods with zero wins and zero losses excluded: {dropped}")
    methods = [all_methods[i] for i in keep]
    wins = wins[np.ix_(keep, keep)]
    k = len(methods)
    if k < 2:
        raise FittingError("need at least two methods with decided comparisons")

    components = _connected_components(methods, wins)
    if len(components) > 1:
        raise FittingError(f"comparison graph is disconnected: {components}")

    n_ij = wins + wins.T
    w = wins.sum(axis=1)
    p = np.ones(k)
    for _ in range(max_iter):
        denom = np.zeros(k)
        for i in range(k):
            mask = n_ij[i] > 0
            denom[i] = (n_ij[i, mask] / (p[i] + p[mask])).sum()
        # Guard against all-win / all-loss methods drifting to infinity.
        p_new = np.where(denom > 0, w / np.maximum(denom, 1e-300), p)
        p_new = np.maximum(p_new, 1e-300)
        p_new /= np.exp(np.mean(np.log(p_new)))
        theta = np.log(p_new)
        # Gradient of the log-likelihood in theta.
        grad = np.zeros(k)
        for i in range(k):
            mask = n_ij[i] > 0
            grad[i] = w[i] - (n_ij[i, mask] * p_new[i] / (p_new[i] + p_new[mask])).sum()
        p = p_new
        if np.linalg.norm(grad) < 1e-10:
            break
    else:
        if np.linalg.norm(grad) > 1e-6:
            raise FittingError("MM iteration did not converge")

    theta = np.log(p)
    theta -= theta.mean()

    # Fisher information in theta; singular along the all-ones direction.
    fisher = np.zeros((k, k))
    pi = np.exp(theta)
    for i in range(k):
        for j in range(k):
            if i == j or n_ij[i, j] == 0:
                continue
            pij = pi[i] / (pi[i] + pi[j])
            fisher[i, j] -= n_ij[i, j] * pij * (1 - pij)
            fisher[i, i] += n_ij[i, j] * pij * (1 - pij)
    covariance = np.linalg.pinv(fisher)
    se = {m: float(math.sqrt(max(covariance[i, i], 0.0))) for i, m in enumerate(methods)}

    estimate = SkillEstimate(
        methods=methods,
        theta={m: float(theta[i]) for i, m in enumerate(methods)},
        standard_error=se,
        covariance=covariance,
    )
    for i, a in enumerate(methods):
        for b in methods[i + 1 :]:
            estimate.significance[(a, b)] = _significance_marker(estimate.z_score(a, b))
    return estimate


def load_comparisons(path, criterion: str | None = None) -> list[PairwiseComparison]:
    """Read tab- or comma-delimited rows: item_a, item_b, winner[, criterion]."""
    from pathlib import Path as _Path

    rows: list[PairwiseComparison] = []
    text = _Path(path).read_text(encoding="utf-8")
    for ln, line in enumerate(text.splitlines()):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in (line.split("\t") if "\t" in line else line.split(","))]
        if ln == 0 and parts[0].lower() == "item_a":
            continue
        if len(parts) < 3:
            raise DataError(f"malformed comparison line {ln + 1}: {line!r}")
        crit = parts[3] if len(parts) > 3 else "originality"
        if criterion is not None and crit != criterion:
            continue
        rows.append(PairwiseComparison(parts[0], parts[1], parts[2], crit))
    return rows
