"""Example-based concept explanations for precipitation segmentation models."""

__version__ = "0.1.0"
