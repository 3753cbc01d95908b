"""Step-by-step quadrature implementation of the binary Backlund recursion.

This is a brute-force oracle for :mod:`nsdressing.dressing`: every level is
built from the previous one by cumulative integrals along ``x1`` at fixed
``x2``, with exponential tail completion outside a finite window.  Values at
requested sample points are obtained by merging them into the quadrature grid.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .background import BackgroundModel, phase
from .core import ConfigError, DressingConfig, c_chain

logger = logging.getLogger(__name__)

__all__ = [
    "OracleFailure",
    "RecursionStage",
    "initial_stage",
    "recurse_step",
    "b_n",
    "run_recursion",
    "schur_B",
    "oracle_values",
    "default_half_width",
]


class OracleFailure(RuntimeError):
    """The quadrature oracle could not complete (integrand not decaying at the window edge)."""


def default_half_width(lambdas: Sequence[complex]) -> float:
    return 40.0 / float(np.min(np.abs(np.imag(lambdas))))


def make_grid(half_width: float, h: float, samples: Iterable[float] = ()) -> np.ndarray:
    """Uniform grid on ``[-L, L]`` with the sample abscissae merged in."""
    base = np.arange(-half_width, half_width + 0.5 * h, h)
    s = np.unique(np.asarray(list(samples), dtype=float))
    if s.size:
        if s.min() <= -half_width or s.max() >= half_width:
            raise ValueError("sample points must lie inside the quadrature window")
        dist = np.min(np.abs(base[:, None] - s[None, :]), axis=1)
        base = base[dist > 0.25 * h]
    return np.union1d(base, s)


def _tail_rate(x: np.ndarray, y: np.ndarray) -> complex:
    """Exponential rate ``a`` with ``y ~ exp(a x)`` estimated from the first three samples."""
    with np.errstate(divide="ignore", invalid="ignore"):
        a1 = np.log(y[1] / y[0]) / (x[1] - x[0])
        a2 = np.log(y[2] / y[1]) / (x[2] - x[1])
    if not (np.isfinite(a1) and np.isfinite(a2)):
        raise OracleFailure("cannot estimate tail rate")
    if abs(a1 - a2) > 1e-3 * max(1.0, abs(a1)):
        raise OracleFailure("integrand is not a pure exponential at the window edge")
    return complex(a1)


def cumulative_integral(x: np.ndarray, y: np.ndarray, direction: int) -> np.ndarray:
    """``int_{-direction*inf}^{x} y`` on the grid, with analytic tail completion."""
    if direction > 0:
        xs, ys = x, y
    else:
        xs, ys = -x[::-1], y[::-1]
    prim = CubicSpline(xs, ys).antiderivative()(xs)
    prim = prim - prim[0]
    if ys[0] == 0:
        tail = 0.0
    else:
        a = _tail_rate(xs, ys)
        if a.real <= 0:
            raise OracleFailure(f"integrand does not decay towards the window edge (rate {a:.3g})")
        tail = ys[0] / a
        # negligible tails need no accuracy
    out = prim + tail
    if direction > 0:
        return out
    return -out[::-1]


def full_integral(x: np.ndarray, y: np.ndarray) -> complex:
    """Whole-line integral with tails completed at both ends."""
    prim = CubicSpline(x, y).antiderivative()(x)
    total = prim[-1] - prim[0]
    for xs, ys in ((x, y), (-x[::-1], y[::-1])):
        if ys[0] != 0:
            a = _tail_rate(xs, ys)
            if a.real <= 0:
                raise OracleFailure("integrand does not decay at the window edge")
            total += ys[0] / a
    return complex(total)


@dataclass
class RecursionStage:
    """Level ``n`` of the recursion at a fixed ``x2``, tabulated on ``grid``.

    ``F``/``f`` (and their ``x1`` derivatives) are keyed by spectral parameter.
    ``phi_prev``/``f_prev`` keep the level ``n-1`` data needed for ``b_n``.
    """

    n: int
    x2: float
    grid: np.ndarray
    u: np.ndarray
    F: dict
    dF: dict
    f: dict
    df: dict
    lambdas: tuple = ()
    c: float | None = None
    Delta: np.ndarray | None = None
    g: np.ndarray | None = None
    B: Callable[[complex], complex] | None = None
    phi_prev: np.ndarray | None = None
    f_prev: dict = field(default_factory=dict)

    def phi(self, k: complex) -> np.ndarray:
        return self.F[k] + self.f[k]

    def dphi(self, k: complex) -> np.ndarray:
        return self.dF[k] + self.df[k]

    def value(self, name: str, x1: float, k: complex | None = None):
        i = int(np.argmin(np.abs(self.grid - x1)))
        if abs(self.grid[i] - x1) > 1e-12 * max(1.0, abs(x1)):
            raise KeyError(f"x1 = {x1} is not a grid node")
        arr = getattr(self, name)
        if k is not None:
            arr = arr[k]
        return arr[i]


def initial_stage(background: BackgroundModel, x2: float, grid: np.ndarray,
                  ks: Iterable[complex]) -> RecursionStage:
    """Level 0: ``F_0 = Phi``, ``f_0 = 0``, ``u_0 = u``."""
    ks = [complex(k) for k in ks]
    x2 = float(x2)
    u = np.asarray(background.potential(grid, x2), float) * np.ones(grid.shape)
    F, dF, f, df = {}, {}, {}, {}
    for k in ks:
        if background.is_zero:
            chi = np.ones(grid.shape, complex)
            dchi = np.zeros(grid.shape, complex)
        else:
            chi = np.asarray(background.chi(grid, x2, k), complex)
            dchi = np.asarray(background.dchi_dx1(grid, x2, k), complex)
        e = np.exp(phase(grid, x2, k))
        F[k] = e * chi
        dF[k] = e * (-1j * k * chi + dchi)
        f[k] = np.zeros(grid.shape, complex)
        df[k] = np.zeros(grid.shape, complex)
    return RecursionStage(0, x2, grid, u, F, dF, f, df)


def recurse_step(stage: RecursionStage, lam: complex, c: float,
                 B: Callable[[complex], complex] | Mapping | None = None) -> RecursionStage:
    """Advance one level with spectral parameter ``lam`` and constant ``c``.

    ``B`` gives the integration constant of the ``f`` recursion per ``k``
    (a callable or a mapping; missing keys mean 0).  All ``k`` tracked by
    ``stage`` except ``lam`` itself are carried over.
    """
    lam = complex(lam)
    if lam not in stage.F:
        raise KeyError("the next spectral parameter must be tracked by the stage")
    if stage.lambdas and not abs(lam.imag) < abs(stage.lambdas[-1].imag):
        raise ConfigError("|Im lambda| must decrease strictly along the recursion")
    if not lam.imag * c > 0:
        raise ConfigError("Im(lambda) * c must be positive")
    if B is None:
        Bf = lambda k: 0.0  # noqa: E731
    elif isinstance(B, Mapping):
        Bf = lambda k: B.get(k, 0.0)  # noqa: E731
    else:
        Bf = B
    x = stage.grid
    sig = 1 if lam.imag > 0 else -1
    phi = stage.phi(lam)
    dphi = stage.dphi(lam)
    rho = np.abs(phi) ** 2
    Delta = c + cumulative_integral(x, rho.astype(complex), sig).real
    if np.any(Delta * sig <= 0):
        raise OracleFailure("Delta changed sign on the grid")
    g = phi / Delta
    dg = dphi / Delta - phi * rho / Delta**2
    drho = 2 * np.real(np.conj(phi) * dphi)
    u = stage.u - 2 * (drho / Delta - (rho / Delta) ** 2)
    F, dF, f, df = {}, {}, {}, {}
    cphi = np.conj(phi)
    for k in stage.F:
        if k == lam:
            continue
        s = k.imag + lam.imag
        if s == 0:
            raise OracleFailure("k on an excluded line")
        IF = cumulative_integral(x, cphi * stage.F[k], 1 if s > 0 else -1)
        F[k] = stage.F[k] - g * IF
        dF[k] = stage.dF[k] - dg * IF - g * cphi * stage.F[k]
        fk = stage.f[k]
        if np.any(fk != 0):
            If = cumulative_integral(x, cphi * fk, sig)
        else:
            If = np.zeros(x.shape, complex)
        bk = complex(Bf(k))
        f[k] = fk - g * (bk + If)
        df[k] = stage.df[k] - dg * (bk + If) - g * cphi * fk
    return RecursionStage(
        n=stage.n + 1,
        x2=stage.x2,
        grid=x,
        u=u,
        F=F,
        dF=dF,
        f=f,
        df=df,
        lambdas=stage.lambdas + (lam,),
        c=float(c),
        Delta=Delta,
        g=g,
        B=Bf,
        phi_prev=phi,
        f_prev={k: stage.f[k] for k in stage.f if k != lam},
    )


def b_n(stage: RecursionStage, k: complex) -> complex:
    """``sgn(Im lambda_n) * int conj(phi_{n-1}(lambda_n)) f_{n-1}(k) dx1`` over the whole line."""
    if stage.n < 1:
        raise ValueError("b_n needs n >= 1")
    fk = stage.f_prev[complex(k)]
    if not np.any(fk != 0):
        return 0j
    sig = 1 if stage.lambdas[-1].imag > 0 else -1
    return sig * full_integral(stage.grid, np.conj(stage.phi_prev) * fk)


def schur_B(config: DressingConfig, n: int, m: int) -> complex:
    """Integration constant ``B_{n+1}(lambda_m)`` that reproduces the coupling column ``m``.

    ``n`` is the current level (0-based count of applied steps) and ``m`` a
    0-based index with ``m > n``.  It is the Schur complement of the signed
    block of already-applied parameters sharing the sign of ``Im lambda_{n+1}``.
    """
    lam = config.lambdas
    C = config.C
    sig = np.sign(lam[n].imag)
    blk = [l for l in range(n) if np.sign(lam[l].imag) == sig]
    val = C[n, m]
    if blk:
        sub = C[np.ix_(blk, blk)]
        val = val - C[n, blk] @ np.linalg.solve(sub, C[blk, m])
    return complex(val)


def run_recursion(config: DressingConfig, x2: float, x1_samples: Sequence[float] = (),
                  ks: Sequence[complex] = (), h: float = 0.005, half_width: float | None = None,
                  B_extra: Sequence[Callable[[complex], complex]] | None = None) -> list[RecursionStage]:
    """Run the full recursion at one ``x2`` and return every level ``0..N``.

    Tracks ``F`` for each ``k`` in ``ks`` (with ``B = B_extra[n]``, default 0) and
    the full solutions at the remaining spectral parameters, whose integration
    constants are chosen by :func:`schur_B`.
    """
    lam = config.lambdas
    n = config.n
    if not config.params.strictly_ordered:
        raise ConfigError("the recursion needs strictly decreasing |Im lambda|")
    cs = c_chain(config)
    L = half_width if half_width is not None else default_half_width(lam) if n else 10.0
    grid = make_grid(L, h, x1_samples)
    ks = [complex(k) for k in ks]
    for k in ks:
        if k in set(lam.tolist()):
            raise ValueError("user k values must differ from the spectral parameters")
    stage = initial_stage(config.background, x2, grid, list(lam) + ks)
    stages = [stage]
    for j in range(n):
        Bmap = {complex(lam[m]): schur_B(config, j, m) for m in range(j + 1, n)}
        extra = B_extra[j] if B_extra is not None else None

        def B(k, _map=Bmap, _extra=extra):
            if k in _map:
                return _map[k]
            return _extra(k) if _extra is not None else 0.0

        stage = recurse_step(stage, lam[j], cs[j], B)
        stages.append(stage)
    return stages


def oracle_values(config: DressingConfig, points: Sequence[tuple[float, float]],
                  ks: Sequence[complex] = (), h: float = 0.005,
                  half_width: float | None = None) -> dict:
    """Oracle ``u_N``, ``Delta_N``, ``g_N`` at ``points`` and ``F_N(k)`` for each ``k``.

    Points are grouped by ``x2``; one recursion is run per distinct ``x2``.
    """
    pts = [(float(a), float(b)) for a, b in points]
    by_x2: dict[float, list[float]] = {}
    for a, b in pts:
        by_x2.setdefault(b, []).append(a)
    res = {p: {} for p in pts}
    for x2, x1s in by_x2.items():
        stages = run_recursion(config, x2, x1s, ks, h=h, half_width=half_width)
        last = stages[-1]
        for a in x1s:
            out = res[(a, x2)]
            out["u"] = float(last.value("u", a))
            if config.n:
                out["Delta"] = float(last.value("Delta", a))
                out["g"] = complex(last.value("g", a))
            out["F"] = {k: complex(last.value("F", a, complex(k))) for k in ks}
    return res
