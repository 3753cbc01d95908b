"""Multisoliton potentials of the nonstationary Schrodinger operator built by
binary Darboux dressing of a decaying background."""
from .asymptotics import (
    NoRayLimitError,
    RayProfile,
    a_limits,
    fit_ray,
    ray_profile,
    ray_shift,
    transmission,
)
from .background import (
    CutLineError,
    DomainError,
    GaussianBackground,
    NumericalFailure,
    NumericBackground,
    QuadratureSettings,
    UnsupportedOperation,
    ZeroBackground,
    beta,
    green_g0,
    green_g0_quadrature,
    jost_chi,
    jost_phi,
)
from .core import (
    ConfigError,
    CouplingMatrix,
    DegenerateCouplingError,
    DressingConfig,
    Point,
    SpectralParameters,
    ValidationReport,
    validate_config,
)
from .dressing import (
    RegularityError,
    assemble,
    delta_n,
    dressed_chi,
    dressed_F,
    dressed_g,
    dressed_jost,
    potential,
)

__version__ = "0.1.0"

__all__ = [
    "NoRayLimitError", "RayProfile", "a_limits", "fit_ray", "ray_profile", "ray_shift", "transmission",
    "CutLineError", "DomainError", "GaussianBackground", "NumericalFailure", "NumericBackground",
    "QuadratureSettings", "UnsupportedOperation", "ZeroBackground", "beta", "green_g0",
    "green_g0_quadrature", "jost_chi", "jost_phi",
    "ConfigError", "CouplingMatrix", "DegenerateCouplingError", "DressingConfig", "Point",
    "SpectralParameters", "ValidationReport", "validate_config",
    "RegularityError", "assemble", "delta_n", "dressed_chi", "dressed_F", "dressed_g", "dressed_jost",
    "potential", "SolitonDressing", "__version__",
]


def __getattr__(name):
    # keep scikit-learn an import-time cost only for estimator users
    if name == "SolitonDressing":
        from .estimator import SolitonDressing

        return SolitonDressing
    raise AttributeError(name)
