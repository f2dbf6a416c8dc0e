"""Experiment orchestration and run artifacts."""
