"""Theorem-carrying transactions on a small deterministic contract chain."""

__version__ = "0.1.0"
