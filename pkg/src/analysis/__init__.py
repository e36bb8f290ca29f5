"""
Analysis module for grasmle.

Simulation studies built on the estimation and existence modules.
"""
