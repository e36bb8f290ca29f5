"""
Ingestion module for the JSON sample, parameter and report files
"""
