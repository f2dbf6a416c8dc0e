"""Synthetic two-domain benchmark generation."""
