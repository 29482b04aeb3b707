"""
Ingestion Sub-package
=====================

    - dataset  : DeterministicDataset, StochasticDataset, CostMatrix
    - loader   : File I/O for the wide and long formats
    - registry : Disk cache of enumeration artifacts
"""

from revpref.ingestion.dataset import CostMatrix, DeterministicDataset, StochasticDataset
from revpref.ingestion.loader import (
    DatasetLoader,
    load_deterministic,
    load_prices,
    load_stochastic,
    write_deterministic,
    write_stochastic,
)
from revpref.ingestion.registry import ArtifactRegistry

__all__ = [
    "CostMatrix",
    "DeterministicDataset",
    "StochasticDataset",
    "DatasetLoader",
    "load_deterministic",
    "load_prices",
    "load_stochastic",
    "write_deterministic",
    "write_stochastic",
    "ArtifactRegistry",
]
