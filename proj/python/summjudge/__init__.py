"""Summary evaluation with traditional metrics and an LLM judge."""

from ._summjudge import (
    ConfigError,
    CorpusError,
    Error,
    NumericalError,
    ValidationError,
    __version__,
    coherence_score,
    compression_ratio,
    correlate_files,
    correlate_tables,
    count_syllables,
    evaluate,
    flesch_reading_ease,
    normalize_conciseness,
    normalize_readability,
    p_value_two_tailed,
    parse_verdict,
    pearson_r,
    readability,
    render_prompt,
    rouge_l,
    rouge_n,
    run_metrics,
    singular_values,
    split_sentences,
    student_t_two_tailed,
    tokenize_words,
)

__all__ = [name for name in dir() if not name.startswith("_")]
