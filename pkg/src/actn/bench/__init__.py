"""Sweep harness: configs in, convergence records out."""
