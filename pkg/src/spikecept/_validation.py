"""Input checks shared by the estimator API."""
from __future__ import annotations

import numpy as np
from sklearn.exceptions import NotFittedError

from .errors import ConfigurationError


def check_images(X, name: str = "X") -> np.ndarray:
    """Return ``X`` as an ``(n, 784)`` float array of pixel intensities in [0, 255]."""
    X = np.asarray(X)
    if X.dtype == object or not np.issubdtype(X.dtype, np.number):
        raise ConfigurationError(f"{name} must be numeric, got dtype {X.dtype}")
    if X.ndim == 3 and X.shape[1:] == (28, 28):
        X = X.reshape(len(X), -1)
    if X.ndim != 2 or X.shape[1] != 784:
        raise ConfigurationError(f"{name} must have shape (n, 784) or (n, 28, 28), got {X.shape}")
    X = X.astype(np.float64, copy=False)
    if not np.isfinite(X).all():
        raise ConfigurationError(f"{name} contains NaN or infinity")
    if X.size and (X.min() < 0 or X.max() > 255):
        raise ConfigurationError(f"{name} pixel values must lie in [0, 255]")
    return X


def check_labels(y, n: int) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1 or len(y) != n:
        raise ConfigurationError(f"y must be 1-D with {n} entries, got shape {y.shape}")
    if not np.issubdtype(y.dtype, np.integer):
        if not np.all(np.mod(y, 1) == 0):
            raise ConfigurationError("y must hold integer class labels")
        y = y.astype(np.int64)
    if y.size and (y.min() < 0 or y.max() > 9):
        raise ConfigurationError("class labels must be digits 0-9")
    return y.astype(np.int64)


def check_fitted(est, attr: str = "network_") -> None:
    if not hasattr(est, attr):
        raise NotFittedError(f"{type(est).__name__} is not fitted yet; call fit first")
