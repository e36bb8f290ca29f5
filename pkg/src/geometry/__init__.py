"""
Geometry module for grasmle.

This module provides the two manifolds the estimator works on:
the parameter space Pos(m) of unimodular positive definite matrices and the
Grassmann manifold Gr(m, r) of observed subspaces.
"""
