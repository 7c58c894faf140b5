"""End-to-end tests for nbody-spin."""
