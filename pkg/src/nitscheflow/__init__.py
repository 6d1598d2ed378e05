"""Equal-order FEM solver for incompressible flow with balanced Nitsche
boundary conditions, valid down to the inviscid limit."""

__version__ = "0.1.0"
