"""
Existence module for grasmle.

This module decides whether a sample has a unique Grassmannian estimate:
exact checks for lines (r = 1) and for skew lines in P^3 (Gr(4, 2)), a witness
search for any (m, r), and the dimension-count/LP machinery behind the generic
sample-size bound.
"""
