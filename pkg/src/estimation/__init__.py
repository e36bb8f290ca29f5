"""
Estimation module for grasmle.

This module provides the Grassmannian model G_sigma, the negative
log-likelihood of an empirical measure with its Riemannian derivatives, and
the fixed-point and Newton solvers for the likelihood equation.
"""
