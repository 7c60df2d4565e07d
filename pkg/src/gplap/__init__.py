"""Game-theoretic graph p-Laplacian learning on the flat torus."""

__version__ = "0.1.0"
