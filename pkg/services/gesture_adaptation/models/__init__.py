"""Data models for the gesture adaptation toolkit."""
