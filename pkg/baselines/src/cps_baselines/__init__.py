"""Classical bag-of-words baselines emitting cps-synergy prediction files."""

from .features import EmptyCorpus, default_tokenizer, featurize
from .runner import MODELS, FoldMismatch, run_baseline

__version__ = "0.1.0"
