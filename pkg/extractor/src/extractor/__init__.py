"""Adapter that runs a pretrained speech model over a corpus and writes
layerprobe-format dataset roots (manifest, feature dumps, alignment
TSVs, F0/energy tracks)."""

__version__ = "0.1.0"
