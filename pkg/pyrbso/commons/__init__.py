"""
This package provides common type definitions and functionality for general use.
"""
