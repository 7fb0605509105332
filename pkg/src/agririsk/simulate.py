"""Seeded Monte Carlo simulation of the same portfolio model.

An independent cross-check of the analytic engine: draws gamma scalings per
sector and then either Poisson counts on the banded portfolio or exact
Bernoulli defaults on the raw sub-exposures. The Bernoulli mode also
quantifies the Poisson approximation itself, since its losses can never
exceed total exposure while the Poisson model's can.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytics import exceedance_quantile
from .engine import BandedPortfolio, LossDistribution
from .errors import InputError
from .portfolio import MC_MODES, SectoredPortfolio

# Draws are generated in fixed-size chunks with child seeds spawned from the
# master seed, so results stay identical under any future worker partitioning.
CHUNK_DRAWS = 65536


@dataclass(frozen=True)
class SimConfig:
    n_draws: int
    seed: int
    mode: str = "poisson-banded"

    def __post_init__(self):
        if self.n_draws < 1:
            raise InputError(f"n_draws must be >= 1, got {self.n_draws}")
        if self.mode not in MC_MODES:
            raise InputError(f"unknown MC mode {self.mode!r}; expected one of {MC_MODES}")


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    """Sorted sample of aggregate losses plus clamping metadata."""

    samples: np.ndarray
    n_draws: int
    clamp_count: int = 0
    mode: str = "poisson-banded"
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))
        if self.samples.size != self.n_draws:
            raise InputError(f"sample size {self.samples.size} != n_draws {self.n_draws}")
        if self.samples.size > 1 and np.any(np.diff(self.samples) < 0):
            raise InputError("samples must be sorted nondecreasing")

    @property
    def mean(self) -> float:
        return float(self.samples.mean())

    @property
    def stddev(self) -> float:
        return float(self.samples.std(ddof=1)) if self.n_draws > 1 else 0.0

    def prob_exceeds(self, amount: float) -> float:
        return float(np.mean(self.samples > amount))

    def summary(self, levels: tuple[float, ...] = (0.1, 0.05, 0.01)) -> dict:
        return {
            "n_draws": self.n_draws,
            "seed": self.seed,
            "mode": self.mode,
            "mean": self.mean,
            "stddev": self.stddev,
            "clamp_count": self.clamp_count,
            "quantiles": {
                repr(lvl): empirical_exceedance_quantile(self, lvl) for lvl in levels
            },
        }


def _gamma_scalings(rng: np.random.Generator, alpha: float, size: int) -> np.ndarray:
    # mean-1 scaling: shape alpha, scale 1/alpha
    return rng.gamma(alpha, 1.0 / alpha, size=size)


def simulate(
    banded: BandedPortfolio,
    cfg: SimConfig,
    sectored: SectoredPortfolio | None = None,
) -> EmpiricalDistribution:
    """Draw aggregate losses under the gamma-mixed portfolio model.

    poisson-banded draws Poisson counts per band at gamma-scaled intensity
    and pays v*unit per default; bernoulli-exact needs the pre-banding
    sectored view and pays the raw sub-exposure on each Bernoulli default,
    clamping (and counting) scaled probabilities above 1.
    """
    if cfg.mode == "bernoulli-exact" and sectored is None:
        raise InputError("bernoulli-exact mode needs the sectored (pre-banding) portfolio")

    plans = []
    if cfg.mode == "poisson-banded":
        for s in banded.sectors:
            active = [b for b in s.bands if b.epsilon > 0.0]
            if not active:
                continue
            payouts = np.array([b.v for b in active], dtype=float) * banded.unit
            mus = np.array([b.mu for b in active])
            alpha = None if s.params.is_poisson else s.params.alpha
            plans.append((alpha, mus, payouts))
    else:
        by_name = {s.name: s for s in banded.sectors}
        for s in sectored.sectors:
            rates = np.array([sub.loss_rate for sub in s.subs])
            amounts = np.array([sub.amount for sub in s.subs])
            params = by_name[s.name].params
            alpha = None if params.is_poisson else params.alpha
            plans.append((alpha, rates, amounts))

    losses = np.empty(cfg.n_draws)
    clamped = 0
    n_chunks = math.ceil(cfg.n_draws / CHUNK_DRAWS)
    children = np.random.SeedSequence(cfg.seed).spawn(n_chunks)
    for chunk_index, child in enumerate(children):
        rng = np.random.default_rng(child)
        lo = chunk_index * CHUNK_DRAWS
        m = min(CHUNK_DRAWS, cfg.n_draws - lo)
        acc = np.zeros(m)
        for alpha, per_unit, payouts in plans:
            scale = _gamma_scalings(rng, alpha, m) if alpha is not None else None
            if cfg.mode == "poisson-banded":
                lam = np.tile(per_unit, (m, 1)) if scale is None else np.outer(scale, per_unit)
                counts = rng.poisson(lam)
                acc += counts @ payouts
            else:
                probs = np.tile(per_unit, (m, 1)) if scale is None else np.outer(scale, per_unit)
                over = probs > 1.0
                if over.any():
                    clamped += int(over.sum())
                    np.minimum(probs, 1.0, out=probs)
                uniforms = rng.random((m, per_unit.size))
                acc += (uniforms < probs) @ payouts
        losses[lo : lo + m] = acc
    losses.sort()
    return EmpiricalDistribution(
        samples=losses, n_draws=cfg.n_draws, clamp_count=clamped, mode=cfg.mode, seed=cfg.seed
    )


def sample_distribution(dist: LossDistribution, n_draws: int, seed: int) -> EmpiricalDistribution:
    """Inverse-CDF sampling of an analytic distribution (self-consistency checks)."""
    if n_draws < 1:
        raise InputError(f"n_draws must be >= 1, got {n_draws}")
    rng = np.random.default_rng(seed)
    uniforms = rng.random(n_draws)
    idx = np.searchsorted(dist.cdf, uniforms, side="right")
    idx = np.minimum(idx, dist.pmf.size - 1)
    losses = np.sort(idx.astype(float) * dist.unit)
    return EmpiricalDistribution(samples=losses, n_draws=n_draws, mode="inverse-cdf", seed=seed)


def empirical_exceedance_quantile(emp: EmpiricalDistribution, eps: float) -> float:
    """Smallest sample value x with (count of samples > x) / n <= eps."""
    if not 0.0 < eps < 1.0:
        raise InputError(f"exceedance probability must be in (0, 1), got {eps}")
    # first index whose right-rank reaches n*(1-eps); the 1e-9 guards float fuzz
    k = math.ceil(emp.n_draws * (1.0 - eps) - 1e-9) - 1
    return float(emp.samples[max(k, 0)])


@dataclass(frozen=True)
class CompareRow:
    level: float
    analytic_quantile: float
    empirical_quantile: float
    stderr_loss: float
    flagged: bool


@dataclass(frozen=True)
class ComparisonReport:
    """Analytic vs Monte Carlo quantiles with binomial standard-error bands."""

    rows: tuple[CompareRow, ...]
    total_exposure: float | None = None
    analytic_p_exceeds_total: float | None = None
    empirical_p_exceeds_total: float | None = None

    @property
    def flag_count(self) -> int:
        return sum(1 for r in self.rows if r.flagged)

    def to_json_dict(self) -> dict:
        return {
            "rows": [dict(vars(r)) for r in self.rows],
            "flag_count": self.flag_count,
            "total_exposure": self.total_exposure,
            "analytic_p_exceeds_total": self.analytic_p_exceeds_total,
            "empirical_p_exceeds_total": self.empirical_p_exceeds_total,
        }


def _quantile_band(dist: LossDistribution, eps: float, se_prob: float) -> tuple[float, float]:
    # invert the analytic tail at eps +/- 3 standard errors; on a jagged
    # lattice pmf this is the honest fluctuation range of the MC quantile
    lo = exceedance_quantile(dist, min(eps + 3.0 * se_prob, 1.0 - 1e-12))
    hi_eps = eps - 3.0 * se_prob
    if hi_eps <= max(dist.truncation_mass, 0.0):
        hi = float((dist.pmf.size - 1) * dist.unit)  # tail not resolvable at this n
    else:
        hi = exceedance_quantile(dist, hi_eps)
    return lo, hi


def compare(
    analytic: LossDistribution,
    empirical: EmpiricalDistribution,
    levels: list[float] | tuple[float, ...],
    total_exposure: float | None = None,
) -> ComparisonReport:
    """Per level: analytic and empirical quantiles plus a 3-sigma MC band.

    The binomial standard error sqrt(eps*(1-eps)/n) is translated to loss
    units through the average pmf density across the tail band it spans;
    a level is flagged when the empirical quantile falls outside that
    three-standard-error band around the analytic value.
    """
    rows = []
    for eps in levels:
        eps = float(eps)
        q_analytic = exceedance_quantile(analytic, eps)
        q_empirical = empirical_exceedance_quantile(empirical, eps)
        se_prob = math.sqrt(eps * (1.0 - eps) / empirical.n_draws)
        band_lo, band_hi = _quantile_band(analytic, eps, se_prob)
        rows.append(
            CompareRow(
                level=eps,
                analytic_quantile=q_analytic,
                empirical_quantile=q_empirical,
                stderr_loss=(band_hi - band_lo) / 6.0,
                flagged=not band_lo <= q_empirical <= band_hi,
            )
        )
    report = ComparisonReport(rows=tuple(rows))
    if total_exposure is not None:
        report = ComparisonReport(
            rows=tuple(rows),
            total_exposure=total_exposure,
            analytic_p_exceeds_total=analytic.prob_exceeds(total_exposure),
            empirical_p_exceeds_total=empirical.prob_exceeds(total_exposure),
        )
    return report
