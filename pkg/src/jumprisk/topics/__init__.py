"""Topic taxonomy, LDA posterior classification, prompts and agreement statistics."""
from .taxonomy import TAXONOMY, CATEGORY_IDS, SHORT_NAMES, UNATTRIBUTABLE, NONE_OF_THE_ABOVE, taxonomy_block
from .lda import LdaModel, TopicVerdict, lda_posterior, classify_lda, classify_text, ngram_counts, tokenize
from .stats import (
    Agreement, agreement_matrix, wilson_interval, summarize_jumps, round_to_total,
    TABLE2_COLUMNS, TABLE2_ROWS,
)
from .prompts import (
    render_prompt, parse_verdict, jump_context, FakeLlm, LlmClient, classify_jump_llm,
    Retrieval, TopicProposal, PromptError, VerdictParseError, VerdictValidationError,
)

__all__ = [
    "TAXONOMY",
    "CATEGORY_IDS",
    "SHORT_NAMES",
    "UNATTRIBUTABLE",
    "NONE_OF_THE_ABOVE",
    "taxonomy_block",
    "LdaModel",
    "TopicVerdict",
    "lda_posterior",
    "classify_lda",
    "classify_text",
    "ngram_counts",
    "tokenize",
    "Agreement",
    "agreement_matrix",
    "wilson_interval",
    "summarize_jumps",
    "round_to_total",
    "TABLE2_COLUMNS",
    "TABLE2_ROWS",
    "render_prompt",
    "parse_verdict",
    "jump_context",
    "FakeLlm",
    "LlmClient",
    "classify_jump_llm",
    "Retrieval",
    "TopicProposal",
    "PromptError",
    "VerdictParseError",
    "VerdictValidationError",
]
