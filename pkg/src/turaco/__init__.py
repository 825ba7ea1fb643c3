"""Complexity-guided sampling for stratified neural surrogates of Turaco programs."""

__version__ = "0.1.0"
