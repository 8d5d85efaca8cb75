"""Certified truncated arithmetic for skew polynomial and bounded skew power series rings."""

__version__ = "0.1.0"
