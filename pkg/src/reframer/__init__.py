"""Sentence-level news reframing toolkit.

Builds fill-in-the-blank reframing instances from a span-annotated news
corpus, emits training sets for the eight strategy variants, drives any
generation backend through a small HTTP/mock/replay protocol, and
evaluates outputs automatically (ROUGE, frame-vocabulary overlap) and
from human annotation exports.
"""

from .config import RunConfig, load_config
from .corpus import Article, FrameSpan, SplitAssignment, assign_splits, load_corpus
from .entities import Entity, entity_jaccard, extract_entities
from .frames import Frame, map_code_to_frame
from .gateway import (
    GenerationRequest,
    HttpBackend,
    MockBackend,
    ReframedInstance,
    ReplayBackend,
    mock_generate,
    reframe_batch,
    run_protocol_conformance,
)
from .instances import (
    Instance,
    build_instances,
    filter_instances,
    label_sentences,
)
from .metrics import (
    FrameVocabulary,
    RougeScore,
    build_frame_vocabulary,
    framing_overlap,
    harmonic_mean,
    rouge_l,
    rouge_n,
    strip_entities,
)
from .reporting import (
    AnnotationRecord,
    aggregate_scores,
    direction_matrix,
    majority_agreement,
    select_models,
)
from .strategies import (
    TrainingExample,
    build_finetune_set,
    build_pretrain_set,
    emit_training_plan,
    select_adversarial_target,
    serialize_input,
)
from .textseg import Sentence, segment_sentences, tokenize
from .variants import Variant, enumerate_variants

__version__ = "0.1.0"
