"""Test suite for nbody-spin."""
