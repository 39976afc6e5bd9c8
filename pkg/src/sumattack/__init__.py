"""Adversarial robustness toolkit for multi-document abstractive
summarization: lead-targeting perturbations, exclusion/ROUGE metrics,
gradient-dump influence scoring, and poisoned-dataset construction."""

from sumattack._kernels import KERNEL_BACKEND
from sumattack.corpus import Document, DocumentCluster, LeadTarget, load_corpus, save_corpus
from sumattack.errors import SumattackError
from sumattack.metrics import percentage_exclusion, rouge, sentence_included
from sumattack.perturb import PerturbationKind, apply_attack
from sumattack.summarize import SummarizerSpec, summarize_cluster

__version__ = "0.1.0"

__all__ = [
    "Document",
    "DocumentCluster",
    "KERNEL_BACKEND",
    "LeadTarget",
    "PerturbationKind",
    "SumattackError",
    "SummarizerSpec",
    "__version__",
    "apply_attack",
    "load_corpus",
    "percentage_exclusion",
    "rouge",
    "save_corpus",
    "sentence_included",
    "summarize_cluster",
]
