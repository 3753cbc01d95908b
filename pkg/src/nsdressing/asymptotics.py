"""Closed-form asymptotics: normalisers ``A_N(+-, k)``, the transmission
coefficient, ray profiles of the dressed potential and large-``|x1|`` limits."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .background import DomainError
from .core import (
    ConfigError,
    DressingConfig,
    SpectralParameters,
    det_or_one,
    ray_indices,
    lambda_minor_det,
)

__all__ = [
    "NoRayLimitError",
    "RayProfile",
    "a_limits",
    "a_limits_recursive",
    "transmission",
    "chi_limits",
    "alpha_limit",
    "ray_profile",
    "ray_shift",
    "fit_ray",
]


class NoRayLimitError(DomainError):
    """Coincident real parts: the potential has no ray limit in that direction."""


def _params(p) -> SpectralParameters:
    return p.params if isinstance(p, DressingConfig) else p


def _check_k(params: SpectralParameters, k: complex) -> complex:
    k = complex(k)
    if k.imag == 0:
        raise DomainError("Im k must be nonzero")
    if np.any(k == params.lambdas.conj()):
        raise DomainError("k coincides with a pole of the normaliser")
    return k


def a_limits(params, k: complex) -> tuple[complex, complex]:
    """``(A_N(+,k), A_N(-,k))`` from the product formula."""
    params = _params(params)
    k = _check_k(params, k)
    lam = params.lambdas
    fac = (k - lam) / (k - lam.conj())
    s = k.imag * lam.imag
    return complex(np.prod(fac[s > 0])), complex(np.prod(fac[s < 0]))


def a_limits_recursive(params, k: complex) -> tuple[complex, complex]:
    """Same as :func:`a_limits`, built factor by factor with the one-step recursion."""
    params = _params(params)
    k = _check_k(params, k)
    ap = am = 1.0 + 0j
    for lam in params.lambdas:
        step = 2j * lam.imag / (lam.conjugate() - k)
        if k.imag * lam.imag > 0:
            ap *= 1 + step
        else:
            am *= 1 + step
    return ap, am


def transmission(params, k: complex) -> complex:
    """``a_N(k) = A_N(+,k) / A_N(-,k)``."""
    ap, am = a_limits(params, k)
    return ap / am


def chi_limits(params, k: complex) -> tuple[complex, complex]:
    """Limits of the reduced Jost solution at ``x1 -> -Im(k) inf`` and ``x1 -> +Im(k) inf``
    (zero background)."""
    return 1.0 + 0j, transmission(params, k)


def alpha_limit(config: DressingConfig, sign: int) -> np.ndarray:
    """Limit of the scaled dressing matrix as ``x1 -> sign * inf``.

    Entries whose spectral parameters grow in that direction tend to the Cauchy
    kernel, decaying ones keep the coupling value, mixed ones vanish.
    """
    lam = config.lambdas
    grow = sign * lam.imag > 0
    out = np.zeros((config.n, config.n), dtype=complex)
    g = np.flatnonzero(grow)
    d = np.flatnonzero(~grow)
    out[np.ix_(d, d)] = config.C[np.ix_(d, d)]
    if g.size:
        out[np.ix_(g, g)] = 1.0 / (1j * (lam[g].conj()[:, None] - lam[g][None, :]))
    return out


@dataclass(frozen=True)
class RayProfile:
    j: int
    direction: float
    depth: float
    eps_plus: float
    eps_minus: float
    time_sign: int = 1
    lam_im: float = 1.0

    @property
    def shift(self) -> float:
        return float(np.exp(2 * (self.eps_plus - self.eps_minus)))

    @property
    def eps(self) -> float:
        return self.eps_plus if self.time_sign > 0 else self.eps_minus

    @property
    def rate(self) -> float:
        return float(np.sqrt(-self.depth / 2))

    def profile(self, x1, time_sign: int | None = None):
        """Limit profile ``depth / cosh^2(Im(lambda_j) x1 + eps)`` on the shifted axis."""
        s = self.time_sign if time_sign is None else time_sign
        e = self.eps_plus if s > 0 else self.eps_minus
        return self.depth / np.cosh(self.lam_im * np.asarray(x1) + e) ** 2


def _require_generic(params: SpectralParameters, j: int) -> None:
    re = params.re
    others = np.delete(re, j)
    if np.any(others == re[j]):
        raise NoRayLimitError(f"Re(lambda_{j + 1}) coincides with another real part; no ray limit")


def _coupling_ratio(config: DressingConfig, j: int, sign: int) -> float:
    """``det C(j,sign) / det C^(j,sign)``."""
    C = config.C
    idx = ray_indices(config.params, j, sign)
    hat = ray_indices(config.params, j, sign, include_self=True)
    num = det_or_one(C[np.ix_(idx, idx)]).real
    den = det_or_one(C[np.ix_(hat, hat)]).real
    if den == 0 or num == 0:
        raise ConfigError(f"vanishing ray minor for soliton {j + 1}")
    return num / den


def _log_two_eps(config: DressingConfig, j: int, sign: int) -> float:
    params = config.params
    c_ratio = _coupling_ratio(config, j, -sign)
    lam_hat = lambda_minor_det(params, sign, exclude=j, hat=True)
    lam_plain = lambda_minor_det(params, sign, exclude=j, hat=False)
    val = c_ratio * lam_hat / lam_plain
    if not val > 0:
        raise ConfigError(f"ray shift for soliton {j + 1} is not positive ({val:.3e}); invalid coupling")
    return float(np.log(val))


def ray_profile(config: DressingConfig, j: int, time_sign: int = 1) -> RayProfile:
    """Ray limit of the dressed potential along ``x1 + 2 Re(lambda_j) x2 = const``.

    ``j`` is 1-based.  Both centres are computed; ``time_sign`` picks which one
    :attr:`RayProfile.eps` reports.
    """
    params = config.params
    if not 1 <= j <= params.n:
        raise ValueError(f"j must be in 1..{params.n}")
    i = j - 1
    _require_generic(params, i)
    lam = params.lambdas[i]
    return RayProfile(
        j=j,
        direction=float(lam.real),
        depth=float(-2 * lam.imag**2),
        eps_plus=0.5 * _log_two_eps(config, i, +1),
        eps_minus=0.5 * _log_two_eps(config, i, -1),
        time_sign=1 if time_sign > 0 else -1,
        lam_im=float(lam.imag),
    )


def ray_shift(config: DressingConfig, j: int) -> float:
    """Mutual shift ``exp(2(eps_+ - eps_-))`` of the two rays of soliton ``j``, as
    the closed product over the other spectral parameters times the coupling-minor ratio."""
    params = config.params
    if not 1 <= j <= params.n:
        raise ValueError(f"j must be in 1..{params.n}")
    i = j - 1
    _require_generic(params, i)
    lam = params.lambdas
    lj = lam[i]
    C = config.C

    def d(idx):
        return det_or_one(C[np.ix_(idx, idx)]).real

    hat_p = d(ray_indices(params, i, +1, include_self=True))
    hat_m = d(ray_indices(params, i, -1, include_self=True))
    c_p = d(ray_indices(params, i, +1))
    c_m = d(ray_indices(params, i, -1))
    prod = 1.0
    for l in range(params.n):
        if l == i:
            continue
        dre = abs(lj.real - lam[l].real)
        sg = np.sign(lam[l].real - lj.real)
        num = dre - 1j * (lj.imag * sg - abs(lam[l].imag))
        den = dre - 1j * (lj.imag * sg + abs(lam[l].imag))
        prod *= abs(num / den) ** 2
    return float(hat_p * c_m / (hat_m * c_p) * prod)


def fit_ray(config: DressingConfig, j: int, x2: float, half_width: float | None = None,
            num: int = 241) -> tuple[float, float, float]:
    """Least-squares ``depth / cosh^2(rate x1 + eps)`` fit of the dressed potential
    along the ``j``-th ray at fixed ``x2``.

    Returns ``(depth, rate, eps)`` with ``rate`` carrying the sign of ``Im(lambda_j)``.
    """
    from .dressing import potential

    lam = config.lambdas[j - 1]
    prof = ray_profile(config, j, 1 if x2 > 0 else -1)
    rate0 = lam.imag
    center = -prof.eps / rate0
    w = half_width if half_width is not None else 12.0 / abs(rate0)
    s = np.linspace(center - w, center + w, num)
    u = potential(config, (s - 2 * lam.real * x2, np.full_like(s, x2)))

    def resid(p):
        depth, rate, eps = p
        return depth / np.cosh(rate * s + eps) ** 2 - u

    sol = least_squares(resid, x0=[prof.depth, rate0, prof.eps], xtol=1e-14, ftol=1e-14, gtol=1e-14)
    depth, rate, eps = sol.x
    return float(depth), float(rate), float(eps)
