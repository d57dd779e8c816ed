"""Bit-accurate NBTI aging simulator for DNN accelerator weight memories."""

__version__ = "0.1.0"
