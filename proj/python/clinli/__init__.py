"""Clinical natural language inference toolkit."""

from ._core import (
    ConceptGraph,
    ConfigError,
    Error,
    NliModel,
    NliPair,
    NumericError,
    ParseError,
    ShapeError,
    Vectors,
    annotation_instructions,
    bleu,
    cohens_kappa,
    describe,
    extract_features,
    feature_names,
    levenshtein,
    read_jsonl,
    retrofit,
    run_cli,
    segment_note,
    split_sentences,
    synthetic_dataset,
    tokenize,
    write_jsonl,
)

__all__ = [name for name in dir() if not name.startswith("_")]
