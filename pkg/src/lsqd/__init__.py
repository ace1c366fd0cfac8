"""Least-squares meshless discretization of elliptic PDEs."""
