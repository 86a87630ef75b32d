"""Integrand families: polynomials, hypercube Gaussians and MERA-structured functions."""
