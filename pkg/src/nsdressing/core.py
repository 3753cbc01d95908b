"""Domain types, configuration validation and determinant helpers.

The dressing construction is parametrised by complex spectral parameters
``lambda_1..lambda_N`` and a Hermitian coupling matrix ``C``.  Reality and
regularity of the resulting potential hinge on the sign-split blocks of ``C``
being definite, which is what :func:`validate_config` checks.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

__all__ = [
    "ConfigError",
    "DegenerateCouplingError",
    "SpectralParameters",
    "CouplingMatrix",
    "DressingConfig",
    "Point",
    "Violation",
    "ValidationReport",
    "validate_config",
    "signed_indices",
    "signed_submatrix",
    "ray_indices",
    "lambda_matrix",
    "lambda_minor_det",
    "lambda_minor_det_product",
    "c_chain",
    "det_or_one",
]

DEFINITENESS_RTOL = 1e-10


class ConfigError(ValueError):
    """Raised for structurally invalid configurations (shape mismatch etc.)."""


class DegenerateCouplingError(ConfigError):
    """A leading signed minor of the coupling matrix vanishes."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SpectralParameters:
    lambdas: np.ndarray

    def __init__(self, lambdas: Sequence[complex] | np.ndarray):
        lam = np.atleast_1d(np.asarray(lambdas, dtype=complex))
        if lam.ndim != 1:
            raise ConfigError("lambdas must be a 1-d sequence")
        object.__setattr__(self, "lambdas", _readonly(lam))

    def __len__(self) -> int:
        return self.lambdas.shape[0]

    @property
    def n(self) -> int:
        return len(self)

    @property
    def im(self) -> np.ndarray:
        return self.lambdas.imag

    @property
    def re(self) -> np.ndarray:
        return self.lambdas.real

    @property
    def strictly_ordered(self) -> bool:
        a = np.abs(self.im)
        return bool(np.all(a[:-1] > a[1:]))

    @property
    def generic_rays(self) -> bool:
        r = self.re
        return len(np.unique(r)) == len(r)

    def truncated(self, n: int) -> "SpectralParameters":
        return SpectralParameters(self.lambdas[:n])

    def permuted(self, perm: Sequence[int]) -> "SpectralParameters":
        return SpectralParameters(self.lambdas[list(perm)])


@dataclass(frozen=True)
class CouplingMatrix:
    C: np.ndarray

    def __init__(self, C: Any):
        c = np.asarray(C, dtype=complex)
        if c.size == 0:
            c = np.zeros((0, 0), dtype=complex)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ConfigError(f"coupling matrix must be square, got shape {c.shape}")
        object.__setattr__(self, "C", _readonly(c))

    @property
    def n(self) -> int:
        return self.C.shape[0]

    def truncated(self, n: int) -> "CouplingMatrix":
        return CouplingMatrix(self.C[:n, :n])

    def permuted(self, perm: Sequence[int]) -> "CouplingMatrix":
        p = list(perm)
        return CouplingMatrix(self.C[np.ix_(p, p)])


@dataclass(frozen=True)
class Point:
    x1: float
    x2: float

    def __post_init__(self):
        if not (np.isfinite(self.x1) and np.isfinite(self.x2)):
            raise ValueError(f"non-finite point ({self.x1}, {self.x2})")


@dataclass(frozen=True)
class DressingConfig:
    params: SpectralParameters
    coupling: CouplingMatrix
    background: Any = None

    def __post_init__(self):
        if self.coupling.n != self.params.n:
            raise ConfigError(
                f"coupling is {self.coupling.n}x{self.coupling.n} but there are "
                f"{self.params.n} spectral parameters"
            )
        if self.background is None:
            from .background import ZeroBackground

            object.__setattr__(self, "background", ZeroBackground())

    @classmethod
    def from_arrays(cls, lambdas, C, background=None) -> "DressingConfig":
        return cls(SpectralParameters(lambdas), CouplingMatrix(C), background)

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def lambdas(self) -> np.ndarray:
        return self.params.lambdas

    @property
    def C(self) -> np.ndarray:
        return self.coupling.C

    def truncated(self, n: int) -> "DressingConfig":
        return DressingConfig(self.params.truncated(n), self.coupling.truncated(n), self.background)

    def permuted(self, perm: Sequence[int]) -> "DressingConfig":
        return DressingConfig(self.params.permuted(perm), self.coupling.permuted(perm), self.background)


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    severity: str = "error"
    indices: tuple = ()

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "severity": self.severity,
            "message": self.message,
            "indices": list(self.indices),
        }


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not any(v.severity == "error" for v in self.violations)

    @property
    def errors(self) -> list[Violation]:
        return [v for v in self.violations if v.severity == "error"]

    @property
    def warnings(self) -> list[Violation]:
        return [v for v in self.violations if v.severity == "warning"]

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def as_dict(self) -> dict:
        return {"ok": self.ok, "violations": [v.as_dict() for v in self.violations]}


def signed_indices(params: SpectralParameters, sign: int) -> np.ndarray:
    """Indices ``l`` with ``sign * Im(lambda_l) > 0``."""
    return np.flatnonzero(sign * params.im > 0)


def signed_submatrix(C: CouplingMatrix, params: SpectralParameters, sign: int) -> np.ndarray:
    """Restrict ``C`` to rows/columns whose spectral parameter has ``sign`` imaginary part."""
    idx = signed_indices(params, sign)
    return np.array(C.C[np.ix_(idx, idx)])


def det_or_one(M: np.ndarray) -> complex:
    # empty matrices have determinant one by convention
    if M.size == 0:
        return 1.0
    return np.linalg.det(M)


def validate_config(params: SpectralParameters, coupling: CouplingMatrix) -> ValidationReport:
    """Check every structural invariant of a dressing configuration.

    Raises :class:`ConfigError` on a dimension mismatch; every other problem
    is recorded in the returned report.
    """
    C = coupling.C
    n = params.n
    if C.shape != (n, n):
        raise ConfigError(f"coupling shape {C.shape} does not match {n} spectral parameters")
    out: list[Violation] = []
    lam = params.lambdas

    if not np.all(np.isfinite(lam)) or not np.all(np.isfinite(C)):
        out.append(Violation("non_finite", "non-finite entries in lambdas or coupling"))
        return ValidationReport(tuple(out))

    for j in np.flatnonzero(lam.imag == 0):
        out.append(Violation("zero_imaginary_part", f"Im(lambda_{j + 1}) = 0", indices=(int(j),)))

    for l in range(n):
        for m in range(l + 1, n):
            if lam[l] == lam[m]:
                out.append(Violation("coincident_lambdas", f"lambda_{l + 1} == lambda_{m + 1}", indices=(l, m)))

    scale = float(np.max(np.abs(C))) if n else 0.0
    herm_err = np.abs(C - C.conj().T)
    bad = np.argwhere(herm_err > 1e-12 * max(scale, 1.0))
    for l, m in bad:
        if l <= m:
            out.append(
                Violation(
                    "hermiticity",
                    f"c[{l + 1},{m + 1}] != conj(c[{m + 1},{l + 1}])",
                    indices=(int(l), int(m)),
                )
            )

    if not any(v.kind == "hermiticity" for v in out):
        norm = np.linalg.norm(C, 2) if n else 0.0
        tol = DEFINITENESS_RTOL * max(norm, 1e-300)
        for sign, label in ((1, "C(+)"), (-1, "-C(-)")):
            idx = signed_indices(params, sign)
            if idx.size == 0:
                continue
            sub = sign * C[np.ix_(idx, idx)]
            sub = 0.5 * (sub + sub.conj().T)
            emin = float(np.linalg.eigvalsh(sub)[0])
            ids = tuple(int(i) for i in idx)
            if emin <= tol:
                out.append(
                    Violation(
                        "definiteness",
                        f"{label} not positive definite (min eigenvalue {emin:.3e}) "
                        f"on indices {[i + 1 for i in ids]}",
                        indices=ids,
                    )
                )
            elif emin <= 10 * tol:
                out.append(
                    Violation(
                        "near_definiteness",
                        f"{label} is nearly singular (min eigenvalue {emin:.3e})",
                        severity="warning",
                        indices=ids,
                    )
                )

    re = lam.real
    for l in range(n):
        for m in range(l + 1, n):
            if re[l] == re[m] and lam[l] != lam[m]:
                out.append(
                    Violation(
                        "coincident_real_parts",
                        f"Re(lambda_{l + 1}) == Re(lambda_{m + 1}); ray limits do not exist",
                        severity="warning",
                        indices=(l, m),
                    )
                )
            if abs(lam[l].imag) == abs(lam[m].imag) and lam[l].imag != 0:
                out.append(
                    Violation(
                        "tied_imaginary_parts",
                        f"|Im(lambda_{l + 1})| == |Im(lambda_{m + 1})|; recursion oracle unavailable",
                        severity="warning",
                        indices=(l, m),
                    )
                )
    return ValidationReport(tuple(out))


def ray_indices(params: SpectralParameters, j: int, sign: int, include_self: bool = False) -> np.ndarray:
    """Indices ``l != j`` with ``sign * Im(lambda_l) * (Re(lambda_l) - Re(lambda_j)) > 0``.

    With ``include_self`` the index ``j`` itself is added (the "hatted" sets).
    """
    lam = params.lambdas
    sel = sign * lam.imag * (lam.real - lam[j].real) > 0
    sel[j] = include_self
    return np.flatnonzero(sel)


def lambda_matrix(lambdas: np.ndarray, idx: Sequence[int] | None = None) -> np.ndarray:
    """Cauchy-type matrix with entries ``-i / (conj(lambda_l) - lambda_m)``."""
    lam = np.asarray(lambdas, dtype=complex)
    if idx is not None:
        lam = lam[np.asarray(idx, dtype=int)]
    diff = lam.conj()[:, None] - lam[None, :]
    if np.any(diff == 0):
        raise ConfigError("singular Cauchy entry: conj(lambda_l) == lambda_m")
    return -1j / diff


def lambda_minor_det_product(lambdas: np.ndarray, idx: Sequence[int]) -> float:
    """Closed product form of ``det lambda_matrix(lambdas, idx)``."""
    lam = np.asarray(lambdas, dtype=complex)[np.asarray(idx, dtype=int)]
    if lam.size == 0:
        return 1.0
    if np.any(lam.imag == 0):
        raise ConfigError("spectral parameter on the real axis")
    # accumulate in log space; the sign only comes from the diagonal factors
    sign = float(np.prod(np.sign(lam.imag)))
    logv = -np.sum(np.log(2 * np.abs(lam.imag)))
    n = lam.size
    for l in range(n):
        for m in range(n):
            if l == m:
                continue
            num = abs(lam[l] - lam[m])
            if num == 0:
                raise ConfigError("coincident spectral parameters")
            logv += np.log(num) - np.log(abs(lam[l].conjugate() - lam[m]))
    return sign * float(np.exp(logv))


def lambda_minor_det(
    params: SpectralParameters,
    sign: int,
    exclude: int | None = None,
    hat: bool = False,
) -> float:
    """Determinant of the signed Cauchy minor.

    Without ``exclude`` the index set is ``{l : sign*Im(lambda_l) > 0}``.  With
    ``exclude=j`` the ray-direction selector relative to ``lambda_j`` is used,
    and ``hat=True`` adds ``j`` back to the set.
    """
    if exclude is None:
        idx = signed_indices(params, sign)
    else:
        idx = ray_indices(params, exclude, sign, include_self=hat)
    return lambda_minor_det_product(params.lambdas, idx)


def c_chain(config: DressingConfig) -> np.ndarray:
    """Recursion constants ``c_n`` as ratios of consecutive signed leading minors."""
    lam = config.lambdas
    C = config.C
    out = np.empty(config.n)
    for n in range(config.n):
        s = 1 if lam[n].imag > 0 else -1
        idx_next = [l for l in range(n + 1) if s * lam[l].imag > 0]
        idx_prev = idx_next[:-1]
        den = det_or_one(C[np.ix_(idx_prev, idx_prev)])
        num = det_or_one(C[np.ix_(idx_next, idx_next)])
        if abs(den) == 0:
            raise DegenerateCouplingError(f"vanishing signed leading minor before index {n + 1}")
        c = complex(num / den)
        if abs(c.imag) > 1e-10 * max(1.0, abs(c.real)):
            raise DegenerateCouplingError("complex recursion constant: coupling is not Hermitian")
        if not lam[n].imag * c.real > 0:
            raise DegenerateCouplingError(
                f"Im(lambda_{n + 1}) * c_{n + 1} = {lam[n].imag * c.real:.3e} is not positive"
            )
        out[n] = c.real
    return out
