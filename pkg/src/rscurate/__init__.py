"""rscurate: curation pipeline for large remote-sensing image-text corpora."""

__version__ = "0.1.0"
