"""Numerical and symbolic lab for the semilinear heat equation u_t = Δu + f(u) on R^n."""

__version__ = "0.1.0"
