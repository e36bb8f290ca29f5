"""
CLI module for command-line interface

estimate: sample, fit, experiment
diagnose: check, bound, mc-critical
"""
