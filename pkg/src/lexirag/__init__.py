"""lexirag: hybrid retrieval and intent-routed answer generation for
diachronic Arabic dictionary corpora."""

__version__ = "0.1.0"
