"""Spectral data of the dressed operator: the transformed continuous kernel,
the discrete constants ``d_{l,m}``, Jost values at conjugate points and the
boundary-value jump relation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .asymptotics import transmission
from .background import DomainError
from .core import ConfigError, CouplingMatrix, DressingConfig, SpectralParameters
from .dressing import dressed_g, dressed_jost

__all__ = [
    "SpectralKernel",
    "DiscreteData",
    "transform_kernel",
    "discrete_constants",
    "value_at_conjugate",
    "conjugate_factor",
    "relation_residual",
    "jump_check",
]


@dataclass(frozen=True)
class SpectralKernel:
    """Kernel ``F(k, p)`` on the real axis; ``is_zero`` marks reflectionless data."""

    F: Callable[[float, float], complex]
    is_zero: bool = False

    @classmethod
    def zero(cls) -> "SpectralKernel":
        return cls(lambda k, p: 0j, True)

    def __call__(self, k, p):
        if self.is_zero:
            return np.zeros(np.broadcast(np.asarray(k), np.asarray(p)).shape, dtype=complex)[()]
        return self.F(k, p)


@dataclass(frozen=True)
class DiscreteData:
    d: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.d)):
            raise ConfigError("non-finite discrete constants")


def _kernel_factor(lambdas: np.ndarray, k, p):
    k = np.asarray(k, dtype=complex)
    p = np.asarray(p, dtype=complex)
    out = np.ones(np.broadcast(k, p).shape, dtype=complex)
    for lam in lambdas:
        if lam.imag > 0:
            out = out * ((k - lam) * (p - lam.conjugate())) / ((k - lam.conjugate()) * (p - lam))
    return out


def transform_kernel(kernel: SpectralKernel, params: SpectralParameters | Sequence[complex],
                     coupling: CouplingMatrix | None = None) -> SpectralKernel:
    """Continuous spectral data after dressing.

    Only parameters with positive imaginary part contribute; the coupling does
    not enter and is accepted for signature symmetry.
    """
    lam = params.lambdas if isinstance(params, SpectralParameters) else np.asarray(params, dtype=complex)
    if kernel.is_zero:
        return SpectralKernel.zero()
    lam = np.array(lam)
    base = kernel.F

    def F(k, p):
        return base(k, p) * _kernel_factor(lam, k, p)

    return SpectralKernel(F, False)


def discrete_constants(params: SpectralParameters, coupling: CouplingMatrix) -> DiscreteData:
    """Constants ``d_{l,m}`` in ``Phi_N(x, lambda_m) = sum_l d_{l,m} Phi_N(x, conj(lambda_l))``.

    Factors raised to a zero exponent are taken as 1 without evaluating them.
    """
    lam = params.lambdas
    n = params.n
    if len(set(lam.tolist())) != n:
        raise ConfigError("coincident spectral parameters")
    C = coupling.C
    left = np.ones(n, dtype=complex)
    right = np.ones(n, dtype=complex)
    for l in range(n):
        for j in range(n):
            if j != l and lam[l].imag * lam[j].imag > 0:
                left[l] *= (lam[l].conjugate() - lam[j]) / (lam[l].conjugate() - lam[j].conjugate())
    for m in range(n):
        for j in range(n):
            if -lam[m].imag * lam[j].imag > 0:
                right[m] *= (lam[m] - lam[j].conjugate()) / (lam[m] - lam[j])
    d = 2 * C * lam.imag[:, None] * left[:, None] * right[None, :]
    return DiscreteData(d)


def conjugate_factor(params: SpectralParameters, l: int) -> complex:
    """Factor ``f_l`` with ``Phi_N(x, conj(lambda_l)) = f_l * phi_l(x)`` (``l`` 1-based)."""
    lam = params.lambdas
    i = l - 1
    ll = lam[i].conjugate()
    prod = 1.0 + 0j
    for j in range(params.n):
        if j != i and lam[i].imag * lam[j].imag > 0:
            prod *= (ll - lam[j].conjugate()) / (ll - lam[j])
    return prod / (2 * lam[i].imag)


def value_at_conjugate(config: DressingConfig, point, l: int):
    """``Phi_N(x, conj(lambda_l))``, where ``F_N`` itself has a pole; ``l`` is 1-based."""
    return conjugate_factor(config.params, l) * dressed_g(config, point, l)


def relation_residual(config: DressingConfig, point) -> float:
    """Max over ``m`` of the relative residual of the discrete linear relation."""
    d = discrete_constants(config.params, config.coupling).d
    conj_vals = np.array([value_at_conjugate(config, point, l) for l in range(1, config.n + 1)])
    worst = 0.0
    for m in range(config.n):
        lhs = dressed_jost(config, point, config.lambdas[m])
        rhs = np.sum(d[:, m] * conj_vals)
        scale = max(abs(lhs), np.max(np.abs(d[:, m] * conj_vals)), 1e-300)
        worst = max(worst, abs(lhs - rhs) / scale)
    return float(worst)


def _extrapolate(eps: np.ndarray, vals: np.ndarray) -> complex:
    """Polynomial extrapolation to ``eps = 0``."""
    if len(eps) == 1:
        return complex(vals[0])
    coef = np.polyfit(eps, vals, len(eps) - 1)
    return complex(coef[-1])


def jump_check(config: DressingConfig, point, k: float,
               eps_ladder: Sequence[float] = (1e-2, 1e-3, 1e-4)) -> float:
    """``|Phi^+ / a^+ - Phi^-|`` at real ``k`` from one-sided limits; vanishes for
    reflectionless data."""
    if not config.background.is_zero:
        raise DomainError("jump check is only available for the zero background")
    k = float(k)
    lam = config.lambdas
    if np.any(np.abs(k - lam.real) < 1e-3):
        raise DomainError("k too close to the real part of a spectral parameter")
    eps = np.asarray(eps_ladder, dtype=float)
    if np.any(np.diff(eps) >= 0):
        raise ValueError("eps ladder must be strictly decreasing")
    if config.n == 0:
        return 0.0
    plus = np.array([dressed_jost(config, point, k + 1j * e) / transmission(config.params, k + 1j * e)
                     for e in eps])
    minus = np.array([dressed_jost(config, point, k - 1j * e) for e in eps])
    return abs(_extrapolate(eps, plus) - _extrapolate(eps, minus))
