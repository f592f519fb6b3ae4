"""
Integration tests for the cocycle laboratory.
"""
