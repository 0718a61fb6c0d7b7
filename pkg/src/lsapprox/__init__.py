"""Laplace-Stieltjes lattice approximations of distribution functions."""
