"""Active-learning quality assurance workbench for rendered vehicle imagery."""

__version__ = "0.1.0"
