"""Frame-sequence language models, selectional preferences, and implicit-role
resolution."""

__version__ = "0.1.0"

from .frames import (
    ArgumentUnit,
    FrameSequence,
    make_frame,
    parse_conll2009,
    parse_frame_records,
)
from .vocab import EncodedFrame, Vocabulary, build_vocabulary, decode_frame, encode_frame
from .embeddings import load_word_vectors
from .verbmap import VerbMap, build_verb_map
from .model import FrameModel, ModelConfig, TrainReport, load_model, save_model, train
from .selpref import (
    SelPrefConfig,
    nominal_selectional_preference,
    selectional_preference,
    selectional_preference_exhaustive,
    top_k_next,
)
from .resolver import (
    Document,
    FillerPrediction,
    ResolverConfig,
    ResolverQuery,
    context_window,
    explicit_fallback,
    recency_adjust,
    resolve,
    resolve_all,
)
from .evaluation import GoldPosition, Metrics, dice, evaluate, score_prediction

__all__ = [
    "ArgumentUnit",
    "FrameSequence",
    "make_frame",
    "parse_conll2009",
    "parse_frame_records",
    "EncodedFrame",
    "Vocabulary",
    "build_vocabulary",
    "encode_frame",
    "decode_frame",
    "load_word_vectors",
    "VerbMap",
    "build_verb_map",
    "FrameModel",
    "ModelConfig",
    "TrainReport",
    "train",
    "save_model",
    "load_model",
    "SelPrefConfig",
    "top_k_next",
    "selectional_preference",
    "selectional_preference_exhaustive",
    "nominal_selectional_preference",
    "Document",
    "ResolverQuery",
    "ResolverConfig",
    "FillerPrediction",
    "context_window",
    "explicit_fallback",
    "recency_adjust",
    "resolve",
    "resolve_all",
    "GoldPosition",
    "Metrics",
    "dice",
    "score_prediction",
    "evaluate",
]
