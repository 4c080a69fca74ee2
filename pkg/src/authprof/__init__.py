"""Zero and few-shot author profiling.

Texts are scored against natural-language label hypotheses with a
Siamese similarity model; per-text probabilities are summed per author
and arg-maxed.  Few-shot training uses a batch-softmax loss with
in-batch negatives, and training texts per author can be chosen at
random or by clustering-based instance selection.  Everything is
deterministic per seed.
"""

from .corpus import (
    Author,
    FoldSplit,
    LabeledDataset,
    load_dataset,
    stratified_kfold,
    subsample_users,
    write_dataset,
)
from .embed import (
    EmbeddingTable,
    HashedTfidfEncoder,
    embed_text,
    fit_encoder,
    is_degenerate,
    l2_normalize,
    load_embeddings,
    similarity,
)
from .entail import (
    CONTRADICTED,
    ENTAILED,
    Hypothesis,
    HypothesisSet,
    PairExample,
    PairScoreTable,
    generate_pairs,
    identity_hypotheses,
    load_hypotheses,
    load_hypothesis_sets,
    load_pair_scores,
)
from .errors import ValidationError
from .evaluation import (
    EvalConfig,
    EvalReport,
    LogisticModel,
    Metrics,
    accuracy,
    baseline_char_lr,
    best_report,
    cross_validate,
    macro_f1,
    sweep_hypotheses,
    sweep_shots,
)
from .profiling import (
    PredictionResult,
    SiamesePipeline,
    aggregate_author,
    predict_author,
    predict_author_from_table,
    text_probabilities,
)
from .selection import (
    ClusterResult,
    SelectionConfig,
    agglomerative_clusters,
    cosine_distance,
    select_instances,
    select_random,
)
from .siamese import (
    ProjectionHead,
    TrainConfig,
    batch_softmax_loss,
    head_loss_and_grad,
    identity_head,
    init_head,
    load_head,
    make_batches,
    project,
    save_head,
    train,
    zero_shot_scores,
)
from .synth import two_class_corpus

__version__ = "0.1.0"
