"""Integration tests for nbody-spin."""
