"""Test functions, left-invariant derivatives, seminorms and convolution."""
