"""Tests for the PathInf package."""
