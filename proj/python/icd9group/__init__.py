"""ICD9 disease-group prediction from unstructured physician notes.

The heavy lifting lives in the compiled :mod:`icd9group._core` extension:
hybrid document embeddings (trained skipgram fused with a pretrained
biomedical table through learned gates), a feed-forward multi-label
classifier trained with plain SGD, the TF-IDF baseline, and the
sample-wise evaluation metrics.
"""

from icd9group._core import (  # noqa: F401
    DataError,
    EmbeddingTable,
    ModelParams,
    NumericError,
    Scaler,
    TfidfModel,
    UsageError,
    __version__,
    auprc,
    auroc,
    binarize,
    compare_baselines,
    default_stopwords,
    embed_document,
    evaluate,
    generate_synthetic,
    gradient_check,
    group_labels,
    init_model,
    load_embeddings,
    mcc,
    parse_and_group,
    preprocess_note,
    run_pipeline,
    save_embeddings,
    seeded_pretrained_table,
    train_model,
    train_skipgram,
    vectorize_corpus,
)

__all__ = [
    "DataError",
    "EmbeddingTable",
    "ModelParams",
    "NumericError",
    "Scaler",
    "TfidfModel",
    "UsageError",
    "auprc",
    "auroc",
    "binarize",
    "compare_baselines",
    "default_stopwords",
    "embed_document",
    "evaluate",
    "generate_synthetic",
    "gradient_check",
    "group_labels",
    "init_model",
    "load_embeddings",
    "mcc",
    "parse_and_group",
    "preprocess_note",
    "run_pipeline",
    "save_embeddings",
    "seeded_pretrained_table",
    "train_model",
    "train_skipgram",
    "vectorize_corpus",
]
