"""Bagged deep-ensemble surrogates for flamelet chemistry tabulation."""

__version__ = "0.1.0"
