"""Sub-sentence summary highlighting for multi-document news topics.

The pipeline over-generates candidate sub-sentence segments, scores how
self-contained each one is, and selects an informative, non-redundant
subset with a trainable quality/diversity determinantal point process.
Selections are evaluated with ROUGE and rendered as highlights over the
source documents.
"""

from .corpus import Topic, load_topic, load_topics, tokenize
from .dpp import QualityModel, build_L, map_select, project_psd, subset_log_prob, train
from .rouge import rouge_n, rouge_su4
from .segment import CandidateSegment, enumerate_candidates, quartile_filter

__version__ = "0.1.0"

__all__ = [
    "Topic",
    "load_topic",
    "load_topics",
    "tokenize",
    "QualityModel",
    "build_L",
    "subset_log_prob",
    "project_psd",
    "train",
    "map_select",
    "rouge_n",
    "rouge_su4",
    "CandidateSegment",
    "enumerate_candidates",
    "quartile_filter",
    "__version__",
]
