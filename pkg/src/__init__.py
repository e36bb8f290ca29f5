"""
grasmle - maximum likelihood estimation for the Grassmannian distribution

Sampling, density evaluation, Riemannian likelihood calculus on unimodular
positive definite matrices, two solvers for the likelihood equation, and
existence/uniqueness diagnostics.
"""

__version__ = "0.1.0"

# Imports removed to avoid circular dependencies
# Import modules directly when needed

from .utils import logger
logger.debug("grasmle initialized")
