"""Pretrained-model scoring bridge speaking the expanse external-scorer protocol."""

__version__ = "0.1.0"
