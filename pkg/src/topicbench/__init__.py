"""Abstract topic classification workbench: three interchangeable document
embedding backends, a from-scratch random forest, local surrogate
explanations, and an expert review workflow with an agreement score."""

__version__ = "0.1.0"
