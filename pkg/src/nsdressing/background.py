"""Seed data of the dressing: background potential, its Jost solution and the
beta integrals, plus the free Green's function of the nonstationary
Schrodinger operator.

Two backgrounds are provided.  :class:`ZeroBackground` is exact.
:class:`GaussianBackground` (and the generic :class:`NumericBackground`)
computes the reduced Jost solution from a truncated Born series.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate, special

from .core import Point

logger = logging.getLogger(__name__)

__all__ = [
    "DomainError",
    "CutLineError",
    "NumericalFailure",
    "UnsupportedOperation",
    "QuadratureSettings",
    "GreensEval",
    "green_g0",
    "green_g0_quadrature",
    "BackgroundModel",
    "ZeroBackground",
    "NumericBackground",
    "GaussianBackground",
    "jost_chi",
    "jost_phi",
    "jost_phi_dx1",
    "beta",
    "spectral_kernel",
    "phase",
]


class DomainError(ValueError):
    """Argument outside the region where the quantity is a regular function."""


class CutLineError(DomainError):
    """Spectral parameter on an excluded line ``Im k + Im lambda_l = 0``."""


class NumericalFailure(RuntimeError):
    """Quadrature or iteration did not reach the requested accuracy."""


class UnsupportedOperation(NotImplementedError):
    pass


@dataclass(frozen=True)
class QuadratureSettings:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    truncation_radius: float = 8.0
    max_subdivisions: int = 200

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("quadrature tolerances must be positive")
        if self.truncation_radius <= 0:
            raise ValueError("truncation radius must be positive")


@dataclass(frozen=True)
class GreensEval:
    value: complex
    method: str


def phase(x1, x2, k):
    """Exponent ``-i k x1 - i k^2 x2`` of the free Jost solution."""
    return -1j * k * x1 - 1j * k * k * x2


def _half_line_gauss(a, b):
    """``int_0^inf exp(-a t^2 + b t) dt`` for ``Re a >= 0`` via the Faddeeva function."""
    sa = np.sqrt(a)
    return 0.5 * np.sqrt(np.pi) / sa * special.wofz(-1j * b / (2 * sa))


def green_g0(point: Point | tuple, k: complex):
    """Free Green's function ``G0(x, k)`` in closed form.

    The defining alpha-integral runs over a half line (alpha > 0 when
    ``Im k * x2 > 0``) of a Gaussian with purely imaginary quadratic
    coefficient, which reduces to the scaled complementary error function.
    Accepts array-valued coordinates.
    """
    x1, x2 = (point.x1, point.x2) if isinstance(point, Point) else point
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    k = complex(k)
    if k.imag == 0:
        raise DomainError("G0 requires Im k != 0")
    if np.any(x2 == 0):
        raise DomainError("G0 is discontinuous at x2 = 0")
    a = 1j * x2
    b = 1j * (x1 + 2 * k * x2)
    s = np.where(k.imag * x2 > 0, 1.0, -1.0)
    val = _half_line_gauss(a.astype(complex), s * b)
    out = np.sign(x2) / (2j * np.pi) * val
    return out[()] if out.ndim == 0 else out


def green_g0_quadrature(point: Point | tuple, k: complex, tol: float = 1e-13) -> complex:
    """Direct adaptive quadrature of the alpha-integral defining ``G0``."""
    x1, x2 = (point.x1, point.x2) if isinstance(point, Point) else point
    k = complex(k)
    if k.imag == 0 or x2 == 0:
        raise DomainError("G0 requires Im k != 0 and x2 != 0")
    s = 1.0 if k.imag * x2 > 0 else -1.0
    rate = 2 * abs(k.imag * x2)
    upper = 45.0 / rate

    def f(t):
        al = s * t
        return np.exp(1j * al * x1 - 1j * al * (al - 2 * k) * x2)

    re = integrate.quad(lambda t: f(t).real, 0, upper, limit=5000, epsabs=tol, epsrel=tol)[0]
    im = integrate.quad(lambda t: f(t).imag, 0, upper, limit=5000, epsabs=tol, epsrel=tol)[0]
    return np.sign(x2) / (2j * np.pi) * (re + 1j * im)


class BackgroundModel:
    """Interface of a seed potential together with its reduced Jost solution.

    Subclasses implement :meth:`potential`, :meth:`chi`, :meth:`dchi_dx1` and
    :meth:`beta_correction`.  The beta correction is returned in scaled form,
    i.e. divided by ``conj(Phi0(x, lambda_l)) * Phi0(x, k)`` where ``Phi0`` is
    the free Jost solution, so it stays bounded for all ``x1``.
    """

    is_zero = False

    def potential(self, x1, x2):
        raise NotImplementedError

    def chi(self, x1: float, x2: float, k: complex) -> complex:
        raise NotImplementedError

    def dchi_dx1(self, x1: float, x2: float, k: complex) -> complex:
        raise NotImplementedError

    def beta_correction(self, x1: float, x2: float, lam: complex, k: complex) -> complex:
        raise NotImplementedError


class ZeroBackground(BackgroundModel):
    is_zero = True

    def potential(self, x1, x2):
        return np.zeros(np.broadcast(np.asarray(x1), np.asarray(x2)).shape)

    def chi(self, x1, x2, k):
        return np.ones(np.broadcast(np.asarray(x1), np.asarray(x2)).shape, dtype=complex)

    def dchi_dx1(self, x1, x2, k):
        return np.zeros(np.broadcast(np.asarray(x1), np.asarray(x2)).shape, dtype=complex)

    def beta_correction(self, x1, x2, lam, k):
        return np.zeros(np.broadcast(np.asarray(x1), np.asarray(x2)).shape, dtype=complex)

    def __repr__(self):
        return "ZeroBackground()"

    def __eq__(self, other):
        return isinstance(other, ZeroBackground)

    def __hash__(self):
        return hash("ZeroBackground")


@dataclass(frozen=True)
class _Line:
    """Born-term spectral coefficients on one horizontal line ``x2 = const``.

    ``T_j(x1, x2) = sum_q weights[q] * coeffs[j-1][q] * exp(i alpha[q] x1)``.
    """

    alpha: np.ndarray
    weights: np.ndarray
    coeffs: tuple

    @property
    def total(self) -> np.ndarray:
        return np.sum(self.coeffs, axis=0) if self.coeffs else np.zeros_like(self.alpha, dtype=complex)


def _gl_panel(a: float, b: float, n: int):
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * t + 0.5 * (a + b), 0.5 * (b - a) * w


MAX_BORN_ORDER = 2


@dataclass(frozen=True, eq=False)
class NumericBackground(BackgroundModel):
    """Decaying background given by a vectorised callable ``u(x1, x2)``.

    ``chi`` is the Born series of the Jost integral equation truncated at
    ``born_order`` (at most 2).  On each line ``x2 = const`` every Born term is
    stored through its Fourier coefficients in ``x1``,

        T_j(x1, x2) = int c_j(alpha; x2, k) exp(i alpha x1) d alpha,

    where ``c_1(alpha) = 1/(2 pi i) int d tau sgn(tau) theta(alpha Im k tau)
    exp(-i alpha (alpha - 2k) tau) u_hat(alpha, x2 - tau)`` and higher terms
    use the transform of ``u T_{j-1}`` instead of ``u_hat``.  The alpha integral
    is done by Gauss-Legendre on the two half lines (``c_j`` jumps at 0), which
    makes ``d chi / d x1`` and the beta correction exact in alpha.

    The potential must be negligible outside the square of half-width
    ``quadrature.truncation_radius`` around ``center`` and its transform in
    ``x1`` negligible beyond ``alpha_max``.
    """

    u: Callable = None
    born_order: int = 1
    quadrature: QuadratureSettings = field(default_factory=QuadratureSettings)
    center: tuple = (0.0, 0.0)
    alpha_max: float = 16.0

    def __post_init__(self):
        if self.u is None:
            raise ValueError("NumericBackground needs a potential callable")
        if not 0 <= self.born_order <= MAX_BORN_ORDER:
            raise ValueError(f"born_order must be between 0 and {MAX_BORN_ORDER}")
        if self.alpha_max <= 0:
            raise ValueError("alpha_max must be positive")
        object.__setattr__(self, "_lines", lru_cache(maxsize=4096)(self._line_uncached))

    def potential(self, x1, x2):
        return np.asarray(self.u(x1, x2), dtype=float) * np.ones(np.broadcast(np.asarray(x1), np.asarray(x2)).shape)

    # -- transforms -----------------------------------------------------

    def _x1_grid(self):
        R = self.quadrature.truncation_radius
        dx = min(0.05, np.pi / (4 * self.alpha_max))
        n = int(np.ceil(2 * R / dx)) + 1
        xs = np.linspace(self.center[0] - R, self.center[0] + R, n)
        w = np.full(n, xs[1] - xs[0])
        w[[0, -1]] *= 0.5
        return xs, w

    def u_hat(self, alpha, x2):
        """``int exp(-i alpha x1) u(x1, x2) dx1`` on the broadcast of ``alpha`` (rows) and ``x2`` (columns)."""
        alpha = np.atleast_1d(np.asarray(alpha, float))
        x2 = np.atleast_1d(np.asarray(x2, float))
        xs, w = self._x1_grid()
        U = self.potential(xs[:, None], x2[None, :])
        return (np.exp(-1j * np.outer(alpha, xs)) * w[None, :]) @ U

    def _x2_nodes(self, x2: float, side: int, alpha_reach: float):
        """Gauss-Legendre nodes in ``x2'`` on the part of the support with
        ``sgn(x2 - x2') = side``."""
        R = self.quadrature.truncation_radius
        lo, hi = self.center[1] - R, self.center[1] + R
        a, b = (lo, min(x2, hi)) if side > 0 else (max(x2, lo), hi)
        if b <= a:
            return np.zeros(0), np.zeros(0)
        n = 48 + int(np.ceil(0.8 * alpha_reach ** 2 * (b - a)))
        return _gl_panel(a, b, min(n, 6000))

    def _propagate(self, alpha, x2, k, source_hat):
        """Coefficients of ``int G0(x - x') s(x') dx'`` given ``source_hat(alpha, x2')``."""
        out = np.zeros(alpha.shape, dtype=complex)
        for side in (1, -1):
            sel = alpha * k.imag * side > 0
            if not np.any(sel):
                continue
            a = alpha[sel]
            xp, wp = self._x2_nodes(x2, side, float(np.max(np.abs(a))))
            if xp.size == 0:
                continue
            tau = x2 - xp
            kern = np.exp(-1j * np.outer(a * (a - 2 * k), tau)) * wp[None, :]
            out[sel] = side * np.sum(kern * source_hat(a, xp), axis=1) / (2j * np.pi)
        return out

    def first_coefficients(self, alpha, x2, k):
        """``c_1(alpha; x2, k)`` of the first Born term."""
        return self._propagate(np.asarray(alpha, float), float(x2), complex(k), self.u_hat)

    # -- alpha nodes ----------------------------------------------------

    def _alpha_nodes(self, x2: float, k: complex, reach: float):
        am = self.alpha_max
        R = self.quadrature.truncation_radius
        tau_max = abs(x2 - self.center[1]) + R
        phase_bound = min(am * am * tau_max, 40.0 * am / abs(k.imag))
        n = 48 + int(np.ceil(0.8 * (am * reach + phase_bound)))
        n = min(n, 4000)
        a1, w1 = _gl_panel(-am, 0.0, n)
        a2, w2 = _gl_panel(0.0, am, n)
        return np.concatenate([a1, a2]), np.concatenate([w1, w2])

    def _line_uncached(self, x2: float, k: complex, reach: float) -> _Line:
        alpha, w = self._alpha_nodes(x2, k, reach)
        coeffs = []
        if self.born_order >= 1:
            coeffs.append(self.first_coefficients(alpha, x2, k))
        if self.born_order >= 2:
            coeffs.append(self._propagate(alpha, x2, k, lambda a, xp: self._source_hat(a, xp, k)))
        return _Line(alpha, w, tuple(coeffs))

    def _source_hat(self, alpha, x2p, k):
        """Transform in ``x1`` of ``u * T_1`` at the nodes ``x2p``."""
        xs, w = self._x1_grid()
        beta, wb = self._alpha_nodes(0.0, k, self.quadrature.truncation_radius + abs(self.center[0]))
        c1 = np.stack([self.first_coefficients(beta, y, k) for y in x2p], axis=1)  # (beta, x2p)
        T1 = (np.exp(1j * np.outer(xs, beta)) * wb[None, :]) @ c1  # (x1, x2p)
        src = self.potential(xs[:, None], x2p[None, :]) * T1
        return (np.exp(-1j * np.outer(alpha, xs)) * w[None, :]) @ src

    def line(self, x2: float, k: complex, reach: float = 0.0) -> _Line:
        """Cached coefficients valid for ``|x1 - center_1| <= reach``."""
        k = complex(k)
        if k.imag == 0:
            raise DomainError("Jost solution requires Im k != 0")
        bucket = 16.0 * 2.0 ** max(0, int(np.ceil(np.log2(max(reach, 1.0) / 16.0))))
        return self._lines(float(x2), k, bucket)

    def _by_line(self, x1, x2, k, fn):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        out = np.empty(x1.shape, dtype=complex)
        f1, f2, fo = x1.ravel(), x2.ravel(), out.reshape(-1)
        for y in np.unique(f2):
            idx = np.nonzero(f2 == y)[0]
            xs = f1[idx]
            ln = self.line(y, k, float(np.max(np.abs(xs - self.center[0]))))
            fo[idx] = fn(ln, xs)
        return out[()] if out.ndim == 0 else out

    # -- public evaluations ----------------------------------------------

    def born_terms(self, x1: float, x2: float, k: complex) -> list[complex]:
        """Individual Born terms ``T_0 = 1, T_1, ...`` at one point."""
        ln = self.line(float(x2), k, abs(float(x1) - self.center[0]))
        e = np.exp(1j * ln.alpha * float(x1)) * ln.weights
        return [1.0 + 0.0j] + [complex(e @ c) for c in ln.coeffs]

    def convergence_proxy(self, x1: float, x2: float, k: complex) -> float:
        """Magnitude of the last Born term kept; a warning is logged when it is
        not small against the previous one."""
        terms = self.born_terms(x1, x2, k)
        last = abs(terms[-1]) if len(terms) > 1 else 0.0
        if len(terms) > 2 and last > 0.1 * abs(terms[-2]):
            logger.warning("Born series converging slowly at (%g, %g): last term %.2e", x1, x2, last)
        return last

    def chi(self, x1, x2, k):
        def f(ln, xs):
            return 1.0 + (np.exp(1j * np.outer(xs, ln.alpha)) * ln.weights) @ ln.total

        return self._by_line(x1, x2, k, f)

    def dchi_dx1(self, x1, x2, k):
        def f(ln, xs):
            return (np.exp(1j * np.outer(xs, ln.alpha)) * ln.weights) @ (1j * ln.alpha * ln.total)

        return self._by_line(x1, x2, k, f)

    def beta_correction(self, x1, x2, lam, k):
        """Scaled correction ``int (conj(chi_lam) chi_k - 1) e^{a (x' - x1)} dx'``
        with ``a = i (conj(lam) - k)``, from the base point at
        ``-(Im k + Im lam) * inf`` to ``x1``.

        With both reduced Jost functions written as alpha integrals the ``x'``
        integral is elementary: ``e^{i alpha x'}`` contributes
        ``e^{i alpha x1} / (a + i alpha)`` for either sign of ``Re a``.
        """
        lam, k = complex(lam), complex(k)
        a = 1j * (lam.conjugate() - k)
        if a.real == 0:
            raise CutLineError("Im k + Im lambda = 0")
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        out = np.empty(x1.shape, dtype=complex)
        f1, f2, fo = x1.ravel(), x2.ravel(), out.reshape(-1)
        for y in np.unique(f2):
            idx = np.nonzero(f2 == y)[0]
            xs = f1[idx]
            reach = float(np.max(np.abs(xs - self.center[0])))
            L, K = self.line(y, lam, reach), self.line(y, k, reach)
            cl = np.conj(L.total) * L.weights
            ck = K.total * K.weights
            el = np.exp(-1j * np.outer(xs, L.alpha))
            ek = np.exp(1j * np.outer(xs, K.alpha))
            lin = el @ (cl / (a - 1j * L.alpha)) + ek @ (ck / (a + 1j * K.alpha))
            kern = 1.0 / (a + 1j * (K.alpha[None, :] - L.alpha[:, None]))  # (alpha_l, alpha_k)
            quad = np.einsum("pi,i,ij,j,pj->p", el, cl, kern, ck, ek, optimize=True)
            fo[idx] = lin + quad
        return out[()] if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class GaussianBackground(NumericBackground):
    """Gaussian well/bump ``amplitude * exp(-((x1-c1)/w1)^2 - ((x2-c2)/w2)^2)``.

    The first Born coefficient has a closed form: the ``x2'`` integral is a
    half-line Gaussian integral.
    """

    amplitude: float = 0.1
    widths: tuple = (1.0, 1.0)

    def __init__(self, amplitude=0.1, widths=(1.0, 1.0), center=(0.0, 0.0), born_order=1,
                 quadrature: QuadratureSettings | None = None):
        w1, w2 = (float(w) for w in widths)
        c1, c2 = (float(c) for c in center)
        amplitude = float(amplitude)
        if w1 <= 0 or w2 <= 0:
            raise ValueError("Gaussian widths must be positive")
        object.__setattr__(self, "amplitude", amplitude)
        object.__setattr__(self, "widths", (w1, w2))
        quadrature = quadrature or QuadratureSettings(truncation_radius=8.0 * max(w1, w2))
        # transform negligible (relative 1e-16) beyond alpha_max
        alpha_max = 2.0 * np.sqrt(np.log(1e16)) / w1

        def u(x1, x2):
            return amplitude * np.exp(-(((np.asarray(x1) - c1) / w1) ** 2) - ((np.asarray(x2) - c2) / w2) ** 2)

        super().__init__(u=u, born_order=born_order, quadrature=quadrature, center=(c1, c2),
                         alpha_max=alpha_max)

    def u_hat(self, alpha, x2):
        alpha = np.atleast_1d(np.asarray(alpha, float))
        x2 = np.atleast_1d(np.asarray(x2, float))
        w1, w2 = self.widths
        c1, c2 = self.center
        return (self.amplitude * w1 * np.sqrt(np.pi)
                * np.exp(-(alpha[:, None] * w1) ** 2 / 4 - 1j * alpha[:, None] * c1)
                * np.exp(-(((x2[None, :] - c2) / w2) ** 2)))

    def first_coefficients(self, alpha, x2, k):
        alpha = np.asarray(alpha, float)
        k = complex(k)
        w1, w2 = self.widths
        c1, c2 = self.center
        p = 1.0 / w2**2
        Y = float(x2) - c2
        sigma = np.where(alpha * k.imag > 0, 1.0, -1.0)
        # int_0^inf exp(-p t^2 + q t) dt times exp(-p Y^2), with tau = sigma t
        q = sigma * (2 * Y * p - 1j * alpha * (alpha - 2 * k))
        z = -1j * q / (2 * np.sqrt(p))
        pre = -(alpha * w1) ** 2 / 4 - 1j * alpha * c1
        # w(z) = 2 exp(-z^2) - w(-z) in the lower half plane; only the selected
        # branch is evaluated since the other one may overflow
        up = z.imag >= 0
        base = pre - p * Y * Y
        half = np.empty(z.shape, dtype=complex)
        half[up] = np.exp(base[up]) * special.wofz(z[up])
        lo = ~up
        half[lo] = 2 * np.exp(base[lo] - z[lo] ** 2) - np.exp(base[lo]) * special.wofz(-z[lo])
        half = half * 0.5 * np.sqrt(np.pi / p)
        return sigma * self.amplitude * w1 * np.sqrt(np.pi) * half / (2j * np.pi)

    def __repr__(self):
        return (f"GaussianBackground(amplitude={self.amplitude}, widths={self.widths}, "
                f"center={self.center}, born_order={self.born_order})")


def jost_chi(bg: BackgroundModel, point: Point, k: complex) -> complex:
    """Reduced Jost solution ``chi = exp(i k x1 + i k^2 x2) Phi``."""
    if complex(k).imag == 0:
        raise DomainError("Jost solution requires Im k != 0")
    return complex(bg.chi(point.x1, point.x2, k))


def jost_phi(bg: BackgroundModel, point: Point, k: complex) -> complex:
    return complex(np.exp(phase(point.x1, point.x2, k)) * jost_chi(bg, point, k))


def jost_phi_dx1(bg: BackgroundModel, point: Point, k: complex) -> complex:
    k = complex(k)
    e = np.exp(phase(point.x1, point.x2, k))
    chi = jost_chi(bg, point, k)
    return complex(e * (-1j * k * chi + bg.dchi_dx1(point.x1, point.x2, k)))


def beta(bg: BackgroundModel, point: Point, l: int, k: complex, params) -> complex:
    """``beta_l(x, k) = int conj(Phi(x', lambda_l)) Phi(x', k) dx1'`` from the
    base point ``-(Im k + Im lambda_l) * inf`` to ``x1``.  ``l`` is 0-based."""
    lam = complex(params.lambdas[l])
    k = complex(k)
    if k.imag + lam.imag == 0:
        raise CutLineError(f"Im k + Im lambda_{l + 1} = 0: beta is undefined on this line")
    x1, x2 = point.x1, point.x2
    expo = np.conj(phase(x1, x2, lam)) + phase(x1, x2, k)
    scaled = 1.0 / (1j * (lam.conjugate() - k)) + complex(bg.beta_correction(x1, x2, lam, k))
    return complex(np.exp(expo) * scaled)


def spectral_kernel(bg: BackgroundModel, k: float, p: float) -> complex:
    """Continuous spectral data of the background; zero for ``u == 0``."""
    if bg.is_zero:
        return 0.0 + 0.0j
    raise UnsupportedOperation("spectral data are only available for the zero background")
