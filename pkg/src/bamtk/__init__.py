"""Toolkit for building Bambara/French/English translation corpora and models.

The pipeline runs: LIFT dictionary ingestion -> rule-based cleaning ->
human alignment (HTTP service + appendable exports) -> segmentation
(word / character / BPE with subword dropout) -> deterministic splits ->
transformer training and beam-search decoding -> BLEU/chrF scoring and
experiment grids.
"""

__version__ = "0.1.0"
