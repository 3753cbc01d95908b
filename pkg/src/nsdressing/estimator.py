"""Estimator-style wrapper around the dressing construction.

``fit`` validates the spectral data and freezes the configuration;
``predict`` evaluates the dressed potential at rows ``(x1, x2)`` of ``X``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .core import ConfigError, DressingConfig, c_chain, validate_config
from .dressing import dressed_chi, dressed_jost, potential

__all__ = ["SolitonDressing"]


class SolitonDressing(BaseEstimator):
    """Multisoliton potential on a background.

    Parameters
    ----------
    lambdas : sequence of complex
        Spectral parameters, none of them real.
    coupling : array-like of shape (n, n)
        Hermitian coupling matrix.
    background : BackgroundModel or None
        Seed potential; ``None`` means the zero background.

    Nothing is learned from data: ``fit`` ignores ``X`` apart from checking
    that it has two columns, and raises :class:`ConfigError` when the
    parameters violate the regularity conditions.
    """

    def __init__(self, lambdas=(1j,), coupling=((1.0,),), background=None):
        self.lambdas = lambdas
        self.coupling = coupling
        self.background = background

    def fit(self, X=None, y=None):
        if X is not None:
            check_array(X, ensure_min_features=2)
        cfg = DressingConfig.from_arrays(
            np.asarray(self.lambdas, dtype=complex).reshape(-1),
            np.asarray(self.coupling, dtype=complex).reshape(len(np.atleast_1d(self.lambdas)), -1),
            self.background,
        )
        report = validate_config(cfg.params, cfg.coupling)
        if not report.ok:
            raise ConfigError("; ".join(v.message for v in report.errors))
        self.config_ = cfg
        self.report_ = report
        self.c_chain_ = c_chain(cfg) if cfg.n else np.zeros(0)
        self.n_features_in_ = 2
        return self

    def _coords(self, X):
        check_is_fitted(self, "config_")
        X = check_array(X, dtype=float)
        if X.shape[1] != 2:
            raise ValueError(f"X must have 2 columns (x1, x2), got {X.shape[1]}")
        return X[:, 0], X[:, 1]

    def predict(self, X) -> np.ndarray:
        """Dressed potential ``u_N`` at each row of ``X``."""
        coords = self._coords(X)
        return np.asarray(potential(self.config_, coords), dtype=float)

    def jost(self, X, k: complex, reduced: bool = False) -> np.ndarray:
        """Dressed Jost solution (or its reduced form ``chi_N``) at spectral parameter ``k``."""
        coords = self._coords(X)
        fn = dressed_chi if reduced else dressed_jost
        return np.asarray(fn(self.config_, coords, complex(k)), dtype=complex)

    def score(self, X, y) -> float:
        """Negative maximum absolute deviation of :meth:`predict` from ``y``."""
        return -float(np.max(np.abs(self.predict(X) - np.asarray(y, dtype=float))))
