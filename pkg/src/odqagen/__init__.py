"""Train/test generalization auditing for open-domain QA datasets."""

from .ablate import (
    Ineligible,
    SwapInstance,
    answer_mask,
    entity_swap,
    randomize_passages,
    verify_swap,
)
from .categorize import (
    CategoryAssignment,
    GeneralizationCategorizer,
    SubsetPartition,
    TrainIndex,
    build_train_index,
    classify,
    finalize_subsets,
    pair_for_verification,
)
from .data import (
    AnnotationBundle,
    DatasetError,
    Passage,
    Prediction,
    Question,
    RetrievalSet,
    SchemaError,
    VerificationLabel,
    load_dataset,
)
from .decompose import (
    AtomSet,
    EntityMention,
    QuestionDecomposer,
    derive_atoms,
    extract_question_word,
    filter_other_args,
)
from .evaluate import (
    EvalReport,
    answer_in_train_rate,
    answerable_filter,
    atom_breakdown,
    entity_frequency_accuracy,
    evaluate,
    exact_match,
    load_report,
    retrieval_topk_accuracy,
    write_report,
)
from .patterns import (
    FrequencyBins,
    Pattern,
    PatternFrequency,
    attach_pattern_frequencies,
    bin_patterns,
    extract_pattern,
    pattern_frequency_table,
)
from .stemming import stem
from .text import NormalizedText, normalize_answer

__version__ = "0.1.0"
