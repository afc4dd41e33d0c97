"""Stance labelling and polarization measures for retweet data."""

__version__ = "0.1.0"
