"""linclt - a verification lab for the CLT of stationary linear processes."""

__version__ = "0.1.0"
