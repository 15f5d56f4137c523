"""Wasserstein distance to independence models."""
