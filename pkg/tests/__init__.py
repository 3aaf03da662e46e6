"""Test package for linclt."""
