"""Synthetic corpus generation and retrieval-quality measurement."""

from .generate import CorpusConfig, GeneratedCorpus, Qrels, generate_corpus, write_corpus
from .metrics import f1_score, precision_recall_f1
from .experiment import (
    ExperimentConfig,
    ExperimentReport,
    REFERENCE_MEANS,
    default_config,
    run_experiment,
)
from .report import write_report

__all__ = [
    "CorpusConfig",
    "ExperimentConfig",
    "ExperimentReport",
    "GeneratedCorpus",
    "Qrels",
    "REFERENCE_MEANS",
    "default_config",
    "f1_score",
    "generate_corpus",
    "precision_recall_f1",
    "run_experiment",
    "write_corpus",
    "write_report",
]
