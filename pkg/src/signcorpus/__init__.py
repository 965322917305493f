"""Toolkit for building and evaluating continuous sign language corpora.

The package covers the stages needed to turn subtitled, interpreter-overlaid
broadcast video into a gloss-annotated corpus: activity segmentation of the
signer window, subtitle strip change detection and OCR, subtitle regrouping,
sign/subtitle alignment, gloss annotation parsing and canonicalization,
train/dev/test splitting, corpus statistics, and evaluation metrics.
"""

__version__ = "0.1.0"
