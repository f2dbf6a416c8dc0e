"""Shared test builders and numerical checks."""
