"""Geodesics on surfaces and on their constant-distance offsets."""

__all__ = ["main"]
