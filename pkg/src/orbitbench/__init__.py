"""orbitbench: desk-scale experiments on entropy under length-restricted
orbit equivalence (word metrics, weighted graphings, skeleta, cocycles,
entropy estimators)."""

__version__ = "0.1.0"
