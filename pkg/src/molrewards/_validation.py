"""Input validation helpers shared by the estimator layer."""

from __future__ import annotations

import numpy as np


def check_embedding_matrix(X, name: str = "X") -> np.ndarray:
    """Coerce to a finite 2-D float array with at least one row."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_objective_matrix(X, n_channels: int, name: str = "X") -> np.ndarray:
    arr = check_embedding_matrix(X, name)
    if arr.shape[1] != n_channels:
        raise ValueError(f"{name} must have {n_channels} columns, got {arr.shape[1]}")
    return arr


def check_smiles_sequence(X, name: str = "X") -> list[str]:
    if isinstance(X, str):
        raise TypeError(f"{name} must be a sequence of SMILES strings, not one string")
    items = list(X)
    for i, s in enumerate(items):
        if not isinstance(s, str) or not s:
            raise TypeError(f"{name}[{i}] must be a non-empty SMILES string")
    return items
