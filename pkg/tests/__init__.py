"""
Tests for shallowmimic.
"""
