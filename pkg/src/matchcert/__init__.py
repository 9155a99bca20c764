"""PAC certification of precision and recall for network reconciliation.

The package computes distribution-free confidence bounds for node-matching
algorithms from samples drawn without replacement: core mean bounds
(:mod:`matchcert.bounds`), network and match-set data structures
(:mod:`matchcert.graphs`), baseline matchers (:mod:`matchcert.matchers`),
correlated-pair synthesis (:mod:`matchcert.synth`), without-replacement
samplers and the train/validation subsampling procedure
(:mod:`matchcert.sampling`), batch and query validation certificates
(:mod:`matchcert.batch`, :mod:`matchcert.query`), and a CLI plus Monte
Carlo coverage harness (:mod:`matchcert.cli`, :mod:`matchcert.coverage`).
"""

from .errors import MatchcertError

__version__ = "0.1.0"

__all__ = ["MatchcertError", "__version__"]
