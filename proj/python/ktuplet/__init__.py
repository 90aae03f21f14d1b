"""K-tuplet metric learning toolkit.

Thin Python layer over the C++ core: datasets, tuplet losses, embedding
and comparator training, and episodic few-shot evaluation.
"""

from ktuplet._core import (
    Comparator,
    Dataset,
    EmbeddingModel,
    EvalReport,
    KtupletError,
    ci95,
    class_feature,
    evaluate,
    k_tuplet_loss,
    load_csv,
    mse_similarity_loss,
    nn_classify,
    sample_episode,
    sample_tuplets,
    save_csv,
    select_classes,
    semi_hard_filter,
    semi_hard_loss,
    split_by_class,
    synth_gaussian,
    train_comparator,
    train_embedding,
)

__all__ = [
    "Comparator",
    "Dataset",
    "EmbeddingModel",
    "EvalReport",
    "KtupletError",
    "ci95",
    "class_feature",
    "evaluate",
    "k_tuplet_loss",
    "load_csv",
    "mse_similarity_loss",
    "nn_classify",
    "sample_episode",
    "sample_tuplets",
    "save_csv",
    "select_classes",
    "semi_hard_filter",
    "semi_hard_loss",
    "split_by_class",
    "synth_gaussian",
    "train_comparator",
    "train_embedding",
]

__version__ = "0.1.0"
