"""Open-ended concept-exploration engine: coherence/context sequence scoring,
cultural-alien sampling, the novelty-regulated art-agent loop, and analysis."""

from .vocab import (
    ArtistRecord,
    ArtworkRecord,
    CaptionCorpus,
    Concept,
    Vocabulary,
    assign_concepts,
    build_artist_records,
    build_vocabulary,
)
from .datasets import (
    ConceptSequence,
    SequenceDataset,
    build_artist_dataset,
    build_artwork_dataset,
)
from .scorer import CooccurrenceModel, sample_continuations, train
from .sampler import (
    CasConfig,
    InspirationProposal,
    RankedCandidate,
    cas_sample,
    cas_score,
    random_sample,
    rank_by_nll,
)
from .agent import (
    AgentSession,
    Backends,
    ConceptPool,
    GenerationRecord,
    RunConfig,
    RunLog,
    compute_novelty,
    filter_pool,
    run,
)
from .analysis import (
    PairwiseComparison,
    SkillEstimate,
    Trajectory,
    TrajectoryMetrics,
    exploration_radius,
    fit_bradley_terry,
    novelty_vs_artists,
    novelty_vs_artworks,
    repetition_rate,
    return_rate,
    saturation_generation,
)
from .embed import (
    DeterministicImageEmbedder,
    DeterministicTextEmbedder,
    EmbeddingVector,
    cosine,
)

__version__ = "0.1.0"
