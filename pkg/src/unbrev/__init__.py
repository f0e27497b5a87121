"""Noisy-channel expansion of deletion-based abbreviations in context."""

__version__ = "0.1.0"
