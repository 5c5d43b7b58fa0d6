"""Single-swap local search for facility location and discrete (fuzzy) K-means,
with the Max-2-SAT gadget reductions and enumeration-based audits."""

__version__ = "0.1.0"
