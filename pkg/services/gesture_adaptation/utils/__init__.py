"""Utility modules for the gesture adaptation toolkit."""
