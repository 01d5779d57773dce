"""Wilson loops in two-dimensional Yang-Mills: geometry, kernels, diagrams and series."""
__version__ = "0.1.0"
