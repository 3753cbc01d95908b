"""Closed-form dressing engine.

Every dressed quantity is read off the Hermitian matrix ``A_N(x) = C + B(x)``
through linear solves.  Raw entries of ``A`` grow like ``exp(2|Im lambda| x1)``,
so all work is done on the diagonally rescaled matrix
``S = D^{-1} A D^{-1}`` with ``D_j = sqrt(1 + |Phi0(x, lambda_j)|^2)``; the
scale factors are translated back analytically.

Functions accept either a :class:`~nsdressing.core.Point` (scalar result) or a
pair of broadcastable coordinate arrays (array result).
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .background import CutLineError, DomainError, phase
from .core import ConfigError, DressingConfig, Point

logger = logging.getLogger(__name__)

__all__ = [
    "RegularityError",
    "NumericalHealthWarning",
    "DressedState",
    "GammaFunctions",
    "assemble",
    "log_det_A",
    "delta_n",
    "potential",
    "dressed_F",
    "dressed_chi_F",
    "dressed_jost",
    "dressed_chi",
    "dressed_g",
    "dressed_f",
    "dressed_phi_full",
    "bordered_F",
    "check_k",
    "phi_column",
]

IMAG_HEALTH_TOL = 1e-8
_COND_LIMIT = 1e14


class RegularityError(ArithmeticError):
    """The dressing matrix is numerically singular."""


class NumericalHealthWarning(RuntimeWarning):
    pass


def _as_coords(point):
    if isinstance(point, Point):
        return np.array([point.x1], float), np.array([point.x2], float), True, ()
    x1, x2 = point
    x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
    return x1.ravel(), x2.ravel(), False, x1.shape


def _shape_out(v, scalar, shape):
    if scalar:
        return v[0]
    return v.reshape(shape + v.shape[1:])


def _scales(E):
    """Scaled factors ``t = 1/D`` and ``s = exp(E)/D`` with ``D = sqrt(1+|exp E|^2)``."""
    r = E.real
    pos = r > 0
    rr = np.where(pos, -r, r)
    denom = np.sqrt(1.0 + np.exp(2 * rr))
    t = np.where(pos, np.exp(rr) / denom, 1.0 / denom)
    s = np.where(pos, np.exp(1j * E.imag) / denom, np.exp(np.where(pos, 0, E)) / denom)
    offset = np.logaddexp(0.0, 2 * r)  # log D^2
    return s, t, offset


def check_k(config: DressingConfig, k: complex) -> complex:
    """Reject spectral parameters on the excluded lines."""
    k = complex(k)
    if k.imag == 0:
        raise DomainError("dressed solutions require Im k != 0 (use boundary values instead)")
    for j, lam in enumerate(config.lambdas):
        if k.imag + lam.imag == 0:
            raise CutLineError(f"Im k + Im lambda_{j + 1} = 0 is an excluded line")
    return k


class _Batch:
    """Scaled dressing data at a batch of points."""

    def __init__(self, config: DressingConfig, x1: np.ndarray, x2: np.ndarray):
        self.config = config
        self.x1, self.x2 = x1, x2
        lam = config.lambdas
        n = config.n
        bg = config.background
        self.E = phase(x1[:, None], x2[:, None], lam[None, :])  # (P, N)
        self.s, self.t, off = _scales(self.E)
        self.offset = off.sum(axis=1) if n else np.zeros(x1.shape)
        if bg.is_zero:
            self.chi = np.ones_like(self.E)
            self.dchi = np.zeros_like(self.E)
        else:
            self.chi = np.stack([bg.chi(x1, x2, l) for l in lam], axis=-1).reshape(self.E.shape)
            self.dchi = np.stack([bg.dchi_dx1(x1, x2, l) for l in lam], axis=-1).reshape(self.E.shape)
        self.psi = self.s * self.chi
        self.dpsi = self.s * (-1j * lam[None, :] * self.chi + self.dchi)
        cauchy = 1.0 / (1j * (lam.conj()[:, None] - lam[None, :])) if n else np.zeros((0, 0))
        kern = np.broadcast_to(cauchy, (x1.size, n, n)).astype(complex)
        if not bg.is_zero and n:
            corr = np.empty((x1.size, n, n), dtype=complex)
            for l in range(n):
                for m in range(l, n):
                    v = np.asarray(bg.beta_correction(x1, x2, lam[l], lam[m])).reshape(x1.shape)
                    corr[:, l, m] = v
                    corr[:, m, l] = np.conj(v)
            kern = kern + corr
        self.S = (self.t[:, :, None] * config.C[None] * self.t[:, None, :]
                  + self.s.conj()[:, :, None] * self.s[:, None, :] * kern)
        if n:
            sign, logabs = np.linalg.slogdet(self.S)
            self.sign = sign.real
            self.logabsdet = logabs
            bad = ~np.isfinite(logabs)
            if np.any(bad):
                raise RegularityError("dressing matrix is singular: invalid coupling or inaccurate background")
        else:
            self.sign = np.ones(x1.shape)
            self.logabsdet = np.zeros(x1.shape)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """``S^{-1} rhs`` for per-point right-hand sides of shape (P, N)."""
        if self.config.n == 0:
            return rhs
        return np.linalg.solve(self.S, rhs[..., None])[..., 0]

    def row_solve(self, row: np.ndarray) -> np.ndarray:
        """``row^T S^{-1}`` for per-point rows (P, N)."""
        if self.config.n == 0:
            return row
        # row^T S^{-1} = (S^{-T} row)^T
        return np.linalg.solve(np.swapaxes(self.S, 1, 2), row[..., None])[..., 0]

    def scaled_beta(self, k: complex) -> np.ndarray:
        """``conj(D_l)^{-1} beta_l(x,k) / Phi0(x,k)`` for all ``l``."""
        lam = self.config.lambdas
        b = 1.0 / (1j * (lam.conj()[None, :] - k))
        bg = self.config.background
        if not bg.is_zero:
            corr = np.stack([bg.beta_correction(self.x1, self.x2, l, k) for l in lam], axis=-1)
            b = b + corr.reshape(self.E.shape)
        return self.s.conj() * b

    def chi_k(self, k: complex) -> np.ndarray:
        return np.asarray(self.config.background.chi(self.x1, self.x2, k), dtype=complex).reshape(self.x1.shape)


@dataclass(frozen=True)
class DressedState:
    """Per-point dressing data.

    ``scaledA`` uses the real positive scaling ``D_j = sqrt(1 + |Phi0_j|^2)``;
    :meth:`limit_scaled` gives the scaling by ``1 + Phi0_j`` used for the
    large-``|x1|`` limit matrices.
    """

    point: Point
    scaledA: np.ndarray
    factorization: tuple
    logdet_offset: float
    sign: float
    logabsdet_scaled: float
    scale_diag: np.ndarray
    free_phases: np.ndarray

    @property
    def A(self) -> np.ndarray:
        d = self.scale_diag
        return d[:, None] * self.scaledA * d[None, :]

    @property
    def det(self) -> float:
        return self.sign * np.exp(self.logabsdet_scaled + self.logdet_offset)

    @property
    def log_abs_det(self) -> float:
        return self.logabsdet_scaled + self.logdet_offset

    def limit_scaled(self) -> np.ndarray:
        """``conj(P)^{-1} A P^{-1}`` with ``P = diag(1 + exp(-i lambda_j x1 - i lambda_j^2 x2))``."""
        E = self.free_phases
        pos = E.real > 0
        Em = np.where(pos, -E, E)  # real part <= 0
        # D_j / P_j without overflow
        ratio = np.sqrt(1 + np.exp(2 * Em.real)) / (1 + np.exp(Em))
        ratio = np.where(pos, ratio * np.exp(-1j * E.imag), ratio)
        return ratio.conj()[:, None] * self.scaledA * ratio[None, :]


def assemble(config: DressingConfig, point: Point) -> DressedState:
    """Build the scaled dressing matrix at one point and factorize it."""
    b = _Batch(config, np.array([point.x1], float), np.array([point.x2], float))
    S = b.S[0]
    if config.n:
        herm = np.max(np.abs(S - S.conj().T))
        if herm > 1e-12 * max(1.0, np.max(np.abs(S))):
            raise RegularityError(f"dressing matrix is not Hermitian (defect {herm:.2e})")
        lu = scipy.linalg.lu_factor(S)
        if np.linalg.cond(S) > _COND_LIMIT:
            raise RegularityError("dressing matrix is numerically singular")
    else:
        lu = (np.zeros((0, 0)), np.zeros(0, int))
    d = np.sqrt(np.exp(np.logaddexp(0.0, 2 * b.E[0].real))) if config.n else np.zeros(0)
    return DressedState(
        point=point,
        scaledA=S,
        factorization=lu,
        logdet_offset=float(b.offset[0]),
        sign=float(b.sign[0]),
        logabsdet_scaled=float(b.logabsdet[0]),
        scale_diag=d,
        free_phases=b.E[0],
    )


def log_det_A(config: DressingConfig, point):
    """``(sign, log|det A_N|)`` at the given point(s)."""
    x1, x2, scalar, shape = _as_coords(point)
    b = _Batch(config, x1, x2)
    return _shape_out(b.sign, scalar, shape), _shape_out(b.logabsdet + b.offset, scalar, shape)


def delta_n(config: DressingConfig, point, n: int):
    """``Delta_n = det A_n / det A_{n-1}`` (``n`` is 1-based)."""
    if not 1 <= n <= config.n:
        raise ValueError(f"n must be in 1..{config.n}")
    s1, l1 = log_det_A(config.truncated(n), point)
    s0, l0 = log_det_A(config.truncated(n - 1), point)
    return s1 * s0 * np.exp(l1 - l0)


def _second_log_derivative(b: _Batch) -> np.ndarray:
    if b.config.n == 0:
        return np.zeros(b.x1.shape)
    v = b.solve(b.psi.conj())
    w = b.solve(b.dpsi.conj())
    q = np.sum(b.psi * v, axis=1)
    return np.sum(b.psi * w, axis=1) + np.sum(b.dpsi * v, axis=1) - q * q


def potential(config: DressingConfig, point, method: str = "jacobi"):
    """Dressed potential ``u_N = u - 2 d^2/dx1^2 log det A_N``.

    ``method="jacobi"`` uses the analytic trace formula; ``method="fd"``
    differentiates ``log det A`` numerically and is kept as a cross-check.
    """
    x1, x2, scalar, shape = _as_coords(point)
    u0 = np.asarray(config.background.potential(x1, x2), float) * np.ones(x1.shape)
    if method == "jacobi":
        b = _Batch(config, x1, x2)
        d2 = _second_log_derivative(b)
    elif method == "fd":
        h = 1e-3 * (1 + np.abs(x1))
        vals = []
        for sh in (-2, -1, 0, 1, 2):
            vals.append(_Batch(config, x1 + sh * h, x2))
        ld = [v.logabsdet + v.offset for v in vals]
        # fourth-order central second difference
        d2 = (-ld[0] + 16 * ld[1] - 30 * ld[2] + 16 * ld[3] - ld[4]) / (12 * h * h)
    else:
        raise ValueError(f"unknown method {method!r}")
    if np.iscomplexobj(d2):
        imag = np.max(np.abs(d2.imag)) if d2.size else 0.0
        if imag > IMAG_HEALTH_TOL:
            warnings.warn(f"dressed potential has imaginary residue {imag:.2e}", NumericalHealthWarning,
                          stacklevel=2)
        d2 = d2.real
    return _shape_out(u0 - 2 * d2, scalar, shape)


def dressed_chi_F(config: DressingConfig, point, k: complex):
    """Reduced ``exp(i k x1 + i k^2 x2) F_N(x, k)``; bounded in ``x1``."""
    k = check_k(config, k)
    x1, x2, scalar, shape = _as_coords(point)
    if np.any(k == config.lambdas.conj()):
        raise DomainError("F_N has a pole at k = conj(lambda_j)")
    b = _Batch(config, x1, x2)
    hit = np.flatnonzero(config.lambdas == k)
    if hit.size:
        # beta(x, lambda_m) = (A - C) e_m, so F_N(x, lambda_m) = Phi_row A^{-1} C e_m;
        # this avoids the cancellation of the general formula when |Phi(x, k)| is large
        phi = b.row_solve(b.psi) * b.t
        chi = np.exp(-b.E[:, hit[0]]) * (phi @ config.C[:, hit[0]])
        return _shape_out(chi, scalar, shape)
    chi = b.chi_k(k)
    if config.n:
        chi = chi - np.sum(b.psi * b.solve(b.scaled_beta(k)), axis=1)
    return _shape_out(chi, scalar, shape)


def dressed_F(config: DressingConfig, point, k: complex):
    """``F_N(x, k) = Phi(x, k) - Phi_row(x) A^{-1} beta(x, k)``."""
    x1, x2, scalar, shape = _as_coords(point)
    red = np.atleast_1d(dressed_chi_F(config, (x1, x2), k))
    return _shape_out(np.exp(phase(x1, x2, complex(k))) * red, scalar, shape)


def bordered_F(config: DressingConfig, point: Point, k: complex) -> complex:
    """``F_N`` as the ratio of the bordered ``(N+1)x(N+1)`` determinant to ``det A``.

    Uses unscaled entries; only meant for moderate ``|x1|`` and small ``N``.
    """
    from .background import beta, jost_phi

    k = check_k(config, k)
    st = assemble(config, point)
    A = st.A
    bg = config.background
    n = config.n
    beta_col = np.array([beta(bg, point, l, k, config.params) for l in range(n)])
    row = np.array([jost_phi(bg, point, lam) for lam in config.lambdas])
    M = np.zeros((n + 1, n + 1), dtype=complex)
    M[:n, :n] = A
    M[:n, n] = beta_col
    M[n, :n] = row
    M[n, n] = jost_phi(bg, point, k)
    return complex(np.linalg.det(M) / np.linalg.det(A)) if n else complex(M[0, 0])


def dressed_jost(config: DressingConfig, point, k: complex):
    """Jost solution ``Phi_N = F_N / A_N(-, k)``."""
    from .asymptotics import a_limits

    k = check_k(config, k)
    _, a_minus = a_limits(config.params, k)
    if a_minus == 0 or not np.isfinite(a_minus):
        raise DomainError("normaliser A_N(-, k) has a zero or pole at this k")
    return dressed_F(config, point, k) / a_minus


def dressed_chi(config: DressingConfig, point, k: complex):
    """Reduced Jost solution ``chi_N = exp(i k x1 + i k^2 x2) Phi_N``."""
    from .asymptotics import a_limits

    k = check_k(config, k)
    _, a_minus = a_limits(config.params, k)
    if a_minus == 0 or not np.isfinite(a_minus):
        raise DomainError("normaliser A_N(-, k) has a zero or pole at this k")
    return dressed_chi_F(config, point, k) / a_minus


def dressed_g(config: DressingConfig, point, l: int | None = None):
    """Discrete-spectrum solution ``phi_l = Phi_row A^{-1} e_l`` (``l`` 1-based,
    default ``N`` which gives ``g_N``)."""
    n = config.n
    if n == 0:
        raise ValueError("no discrete spectrum for N = 0")
    l = n if l is None else l
    if not 1 <= l <= n:
        raise ValueError(f"l must be in 1..{n}")
    x1, x2, scalar, shape = _as_coords(point)
    b = _Batch(config, x1, x2)
    r = b.row_solve(b.psi)
    return _shape_out(r[:, l - 1] * b.t[:, l - 1], scalar, shape)


class GammaFunctions:
    """Functions ``gamma_l(k)`` with the constraint ``gamma_l(lambda_m) = c_{l,m}``."""

    def __init__(self, funcs: Sequence[Callable[[complex], complex]]):
        self.funcs = list(funcs)

    def __len__(self):
        return len(self.funcs)

    def __call__(self, k: complex) -> np.ndarray:
        return np.array([complex(f(k)) for f in self.funcs])

    @classmethod
    def zero(cls, n: int) -> "GammaFunctions":
        return cls([lambda k: 0.0] * n)

    @classmethod
    def interpolating(cls, config: DressingConfig, extra: Callable | None = None) -> "GammaFunctions":
        """Lagrange interpolation of the rows of ``C`` through the lambda points,
        plus ``extra(k) * prod_m (k - lambda_m)`` for each row when given."""
        lam = config.lambdas
        C = config.C
        n = config.n

        def basis(k, m):
            return np.prod([(k - lam[j]) / (lam[m] - lam[j]) for j in range(n) if j != m])

        def make(l):
            def g(k):
                v = sum(C[l, m] * basis(k, m) for m in range(n))
                if extra is not None:
                    v += extra(k) * np.prod(k - lam) * (l + 1)
                return v

            return g

        return cls([make(l) for l in range(n)])

    def check(self, config: DressingConfig, rtol: float = 1e-10) -> None:
        if len(self) != config.n:
            raise ConfigError("number of gamma functions does not match N")
        C = config.C
        scale = max(1.0, float(np.max(np.abs(C)))) if config.n else 1.0
        for m, lam in enumerate(config.lambdas):
            col = self(lam)
            if np.max(np.abs(col - C[:, m])) > rtol * scale:
                raise ConfigError(f"gamma(lambda_{m + 1}) does not reproduce column {m + 1} of C")


def dressed_f(config: DressingConfig, point, k: complex, gamma: GammaFunctions):
    """``f_N = -Phi_row A^{-1} gamma(k)``."""
    gamma.check(config)
    x1, x2, scalar, shape = _as_coords(point)
    if config.n == 0:
        return _shape_out(np.zeros(x1.shape, complex), scalar, shape)
    b = _Batch(config, x1, x2)
    g = gamma(complex(k))
    val = -np.sum(b.psi * b.solve(b.t * g[None, :]), axis=1)
    return _shape_out(val, scalar, shape)


def dressed_phi_full(config: DressingConfig, point, k: complex, gamma: GammaFunctions):
    """``phi_N = F_N + f_N``."""
    return dressed_F(config, point, k) + dressed_f(config, point, k, gamma)


def phi_column(config: DressingConfig, point, m: int, level: int | None = None):
    """Full solution ``phi_n(x, lambda_m)`` of the dressing by the first ``n = level``
    parameters (default ``m - 1``), with ``gamma_l(lambda_m) = c_{l,m}``.

    At the default level its modulus squared is ``d/dx1`` of ``Delta_m``.
    """
    if not 1 <= m <= config.n:
        raise ValueError(f"m must be in 1..{config.n}")
    n = m - 1 if level is None else level
    if not 0 <= n < m:
        raise ValueError("level must be below m")
    sub = config.truncated(n)
    lam = complex(config.lambdas[m - 1])
    x1, x2, scalar, shape = _as_coords(point)
    b = _Batch(sub, x1, x2)
    chi = b.chi_k(lam)
    E = phase(x1, x2, lam)
    if n == 0:
        return _shape_out(np.exp(E) * chi, scalar, shape)
    rhs_b = b.scaled_beta(lam)
    rhs_c = b.t * config.C[:n, m - 1][None, :]
    red = chi - np.sum(b.psi * b.solve(rhs_b), axis=1)
    val = np.exp(E) * red - np.sum(b.psi * b.solve(rhs_c), axis=1)
    return _shape_out(val, scalar, shape)
