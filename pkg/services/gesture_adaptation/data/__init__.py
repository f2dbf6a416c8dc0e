"""Segment ingestion, cross-validation folds and batch sampling."""
