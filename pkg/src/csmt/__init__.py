"""Toolkit for building and evaluating code-switched English-Thai
medical translation: keyword-mask translation pipeline, dataset
utilities, MT metrics, preference ratings, and a ranking-survey
service.

Submodules are imported explicitly (csmt.textseg, csmt.masking,
csmt.metrics, csmt.datapipe, csmt.rating, csmt.backends,
csmt.surveysvc, csmt.kernels); this package root stays light.
"""

__version__ = "0.1.0"
