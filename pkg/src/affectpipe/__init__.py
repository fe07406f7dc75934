"""affectpipe: bi-modal ternary affect recognition over story narratives.

Acoustic Fisher-Vector features and lexicon-driven linguistic features
feed kernel classifiers under speaker-disjoint cross-validation; ordinal
rule-based fusion merges per-system decisions. See the module map in the
README for where each stage lives.
"""

from .errors import AffectPipeError, ConfigError, DataError, NumericalError
from .labels import LABELS, Label

__version__ = "0.1.0"

__all__ = [
    "AffectPipeError",
    "ConfigError",
    "DataError",
    "NumericalError",
    "Label",
    "LABELS",
    "__version__",
]
