"""Aggregate indemnity-loss modeling for insured portfolios.

Poisson-Gamma (CreditRisk+ style) engine: exposure banding, Panjer and FFT
evaluation of the aggregate loss distribution, tail quantiles, additive VaR
allocation, and a seeded Monte Carlo cross-check.
"""

from .analytics import (
    ContributionRow,
    ContributionTable,
    Moments,
    QuantileRow,
    RiskReport,
    build_report,
    exceedance_quantile,
    moments,
    risk_contributions,
)
from .engine import (
    Band,
    BandedPortfolio,
    BandedSector,
    LossDistribution,
    SectorParams,
    analytic_moments,
    auto_grid_size,
    band_exposures,
    convolve,
    loss_dist_fft,
    loss_dist_poisson,
    loss_dist_sector,
    poisson_rate,
    severity_polynomial,
    units_ceiling,
)
from .errors import InputError, ModelError
from .portfolio import (
    DiscountSpec,
    ObligorRecord,
    Portfolio,
    Sector,
    SectorAssignment,
    SectoredPortfolio,
    SubExposure,
    ValidationFinding,
    assign_sectors,
    bundled_dataset_path,
    discount_exposures,
    load_portfolio,
    parse_portfolio,
    serialize_portfolio,
    validate_portfolio,
)
from .simulate import (
    ComparisonReport,
    CompareRow,
    EmpiricalDistribution,
    SimConfig,
    compare,
    empirical_exceedance_quantile,
    sample_distribution,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "Band",
    "BandedPortfolio",
    "BandedSector",
    "CompareRow",
    "ComparisonReport",
    "ContributionRow",
    "ContributionTable",
    "DiscountSpec",
    "EmpiricalDistribution",
    "InputError",
    "LossDistribution",
    "ModelError",
    "Moments",
    "ObligorRecord",
    "Portfolio",
    "QuantileRow",
    "RiskReport",
    "Sector",
    "SectorAssignment",
    "SectorParams",
    "SectoredPortfolio",
    "SimConfig",
    "SubExposure",
    "ValidationFinding",
    "analytic_moments",
    "assign_sectors",
    "auto_grid_size",
    "band_exposures",
    "build_report",
    "bundled_dataset_path",
    "compare",
    "convolve",
    "discount_exposures",
    "empirical_exceedance_quantile",
    "exceedance_quantile",
    "load_portfolio",
    "loss_dist_fft",
    "loss_dist_poisson",
    "loss_dist_sector",
    "moments",
    "parse_portfolio",
    "poisson_rate",
    "risk_contributions",
    "sample_distribution",
    "serialize_portfolio",
    "severity_polynomial",
    "simulate",
    "units_ceiling",
    "validate_portfolio",
]
