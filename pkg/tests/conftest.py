import numpy as np
import pytest

from nsdressing.configio import golden_configs
from nsdressing.core import DressingConfig, validate_config


def random_config(rng: np.random.Generator, n: int, ordered: bool = True,
                  distinct_re: bool = True) -> DressingConfig:
    """Random valid configuration: Hermitian coupling whose signed blocks are definite."""
    while True:
        mags = np.sort(rng.uniform(0.4, 1.6, n))[::-1]
        if ordered and n > 1 and np.min(-np.diff(mags)) < 0.08:
            continue
        signs = rng.choice([-1.0, 1.0], n)
        re = rng.uniform(-1.2, 1.2, n)
        if distinct_re and n > 1 and np.min(np.diff(np.sort(re))) < 0.15:
            continue
        lam = re + 1j * signs * mags
        M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        H = 0.3 * (M + M.conj().T) / 2
        C = np.zeros((n, n), complex)
        for s in (1, -1):
            idx = np.flatnonzero(signs == s)
            if idx.size:
                K = rng.normal(size=(idx.size, idx.size)) + 1j * rng.normal(size=(idx.size, idx.size))
                C[np.ix_(idx, idx)] = s * (K @ K.conj().T / idx.size + 0.5 * np.eye(idx.size))
        pos, neg = np.flatnonzero(signs > 0), np.flatnonzero(signs < 0)
        C[np.ix_(pos, neg)] = H[np.ix_(pos, neg)]
        C[np.ix_(neg, pos)] = H[np.ix_(pos, neg)].conj().T
        cfg = DressingConfig.from_arrays(lam, C)
        if validate_config(cfg.params, cfg.coupling).ok:
            return cfg


@pytest.fixture(scope="session")
def golden():
    return golden_configs()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
