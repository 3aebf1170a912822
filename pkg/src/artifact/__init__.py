"""Deterministic equivalents for ridge regression and random feature models."""
