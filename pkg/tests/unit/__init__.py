"""Unit tests for nbody-spin."""
