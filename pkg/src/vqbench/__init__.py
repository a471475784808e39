"""Video quality benchmark tooling.

Subpackages and modules:

* taxonomy: keyword-driven prompt categorization
* subjective: raw ratings to mean opinion scores
* pairstudy: pairwise comparisons, majority votes, win rates
* metrics: SRCC/PLCC/KRCC agreement metrics
* store: video container, dataset splits, checkpoints
* synthgen: deterministic synthetic clips with known ground truth
* scorer: the trainable four-dimension quality scorer
* protocol: ten-split evaluation driver
* service: annotation web service
* cli: command-line entry points
"""

__version__ = "0.1.0"

from .subjective import DIMENSIONS

__all__ = ["DIMENSIONS", "__version__"]
