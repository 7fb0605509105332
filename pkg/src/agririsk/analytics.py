"""Tail quantiles, moments, and additive risk contributions from a loss distribution."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .engine import BandedPortfolio, LossDistribution
from .errors import ModelError
from .portfolio import Portfolio, ValidationFinding

TRUNCATION_CAVEAT = 1e-9


@dataclass(frozen=True)
class Moments:
    mean: float
    variance: float
    truncation_caveat: bool  # set when truncated tail mass may bias the figures


@dataclass(frozen=True)
class QuantileRow:
    exceedance_prob: float
    loss: float


@dataclass(frozen=True)
class ContributionRow:
    obligor_id: str
    name: str
    expected_loss: float
    contributions: tuple[float, ...]  # one entry per level, aligned with table levels


@dataclass(frozen=True)
class ContributionTable:
    """Per-obligor allocation of the portfolio quantile at each exceedance level.

    Column sums reproduce the portfolio VaR exactly; the TOTAL row carries
    those sums alongside the total expected loss.
    """

    levels: tuple[float, ...]
    rows: tuple[ContributionRow, ...]
    total_expected_loss: float
    totals: tuple[float, ...]

    def contribution(self, obligor_id: str, level: float) -> float:
        col = self.levels.index(level)
        for row in self.rows:
            if row.obligor_id == obligor_id:
                return row.contributions[col]
        raise KeyError(obligor_id)


@dataclass(frozen=True)
class RiskReport:
    """Bundle of everything one pipeline run produces, JSON-serializable."""

    config: dict
    findings: tuple[ValidationFinding, ...]
    moments: Moments
    quantiles: tuple[QuantileRow, ...]
    contributions: ContributionTable

    def to_json(self) -> str:
        payload = {
            "config": self.config,
            "findings": [dict(vars(f)) for f in self.findings],
            "moments": {
                "mean": self.moments.mean,
                "variance": self.moments.variance,
                "truncation_caveat": self.moments.truncation_caveat,
            },
            "quantiles": [
                {"exceedance_prob": q.exceedance_prob, "loss": q.loss} for q in self.quantiles
            ],
            "contributions": {
                "levels": list(self.contributions.levels),
                "total_expected_loss": self.contributions.total_expected_loss,
                "totals": list(self.contributions.totals),
                "rows": [
                    {
                        "id": r.obligor_id,
                        "name": r.name,
                        "expected_loss": r.expected_loss,
                        "contributions": list(r.contributions),
                    }
                    for r in self.contributions.rows
                ],
            },
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RiskReport":
        payload = json.loads(text)
        contrib = payload["contributions"]
        return cls(
            config=payload["config"],
            findings=tuple(ValidationFinding(**f) for f in payload["findings"]),
            moments=Moments(**payload["moments"]),
            quantiles=tuple(QuantileRow(**q) for q in payload["quantiles"]),
            contributions=ContributionTable(
                levels=tuple(contrib["levels"]),
                rows=tuple(
                    ContributionRow(
                        obligor_id=r["id"],
                        name=r["name"],
                        expected_loss=r["expected_loss"],
                        contributions=tuple(r["contributions"]),
                    )
                    for r in contrib["rows"]
                ),
                total_expected_loss=contrib["total_expected_loss"],
                totals=tuple(contrib["totals"]),
            ),
        )

    def quantiles_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["exceedance_prob", "loss"])
        for q in self.quantiles:
            writer.writerow([repr(q.exceedance_prob), f"{q.loss:.6f}"])
        return out.getvalue()

    def contributions_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(
            ["id", "name", "expected_loss"] + [repr(lvl) for lvl in self.contributions.levels]
        )
        for r in self.contributions.rows:
            writer.writerow(
                [r.obligor_id, r.name, f"{r.expected_loss:.6f}"]
                + [f"{c:.6f}" for c in r.contributions]
            )
        writer.writerow(
            ["TOTAL", "", f"{self.contributions.total_expected_loss:.6f}"]
            + [f"{t:.6f}" for t in self.contributions.totals]
        )
        return out.getvalue()


def exceedance_quantile(dist: LossDistribution, eps: float) -> float:
    """Smallest grid point x with P(loss > x) <= eps."""
    if not 0.0 < eps < 1.0:
        raise ModelError(f"exceedance probability must be in (0, 1), got {eps}")
    if dist.truncation_mass >= eps:
        raise ModelError(
            f"grid too small for requested tail: truncation mass {dist.truncation_mass:.3e} >= {eps}"
        )
    tail = 1.0 - dist.cdf
    return int(np.argmax(tail <= eps)) * dist.unit


def moments(dist: LossDistribution) -> Moments:
    """Mean and variance of the grid pmf, flagged when truncated mass could bias them."""
    n = np.arange(dist.pmf.size, dtype=float)
    mean_units = float(np.dot(n, dist.pmf))
    second = float(np.dot(n * n, dist.pmf))
    return Moments(
        mean=mean_units * dist.unit,
        variance=(second - mean_units**2) * dist.unit**2,
        truncation_caveat=dist.truncation_mass > TRUNCATION_CAVEAT,
    )


def _variance_contributions(banded: BandedPortfolio) -> dict[str, float]:
    # VC_i = sum over i's bands of eps*v*unit^2  +  cv_k^2 * (eps_i * unit) * (sector eps * unit)
    sector_eps = {s.name: s.expected_loss_units for s in banded.sectors}
    sector_cv = {s.name: s.params.cv for s in banded.sectors}
    unit = banded.unit
    out: dict[str, float] = {}
    for oid, refs in banded.obligor_bands.items():
        vc = 0.0
        for ref in refs:
            vc += ref.epsilon * ref.v * unit**2
            vc += sector_cv[ref.sector] ** 2 * (ref.epsilon * unit) * (sector_eps[ref.sector] * unit)
        out[oid] = vc
    return out


def risk_contributions(
    banded: BandedPortfolio,
    dist: LossDistribution,
    levels: list[float] | tuple[float, ...],
    names: dict[str, str] | None = None,
) -> ContributionTable:
    """Allocate each level's VaR to obligors: expected loss plus a variance share.

    contribution_i = EL_i + (VaR - EL_total) * VC_i / sum(VC), where VC_i is
    the obligor's analytic variance contribution. Columns therefore sum to
    the portfolio VaR at every level.
    """
    levels = tuple(float(lvl) for lvl in levels)
    for lvl in levels:
        if not 0.0 < lvl < 1.0:
            raise ModelError(f"levels must be in (0, 1), got {lvl}")
    names = names or {}
    unit = banded.unit
    expected = {
        oid: sum(ref.epsilon for ref in refs) * unit
        for oid, refs in banded.obligor_bands.items()
    }
    el_total = sum(expected.values())
    vc = _variance_contributions(banded)
    vc_total = sum(vc.values())
    if vc_total <= 0.0:
        raise ModelError("degenerate portfolio: total variance contribution is zero")

    vars_at = [exceedance_quantile(dist, lvl) for lvl in levels]
    rows = []
    for oid in banded.obligor_bands:
        share = vc[oid] / vc_total
        rows.append(
            ContributionRow(
                obligor_id=oid,
                name=names.get(oid, oid),
                expected_loss=expected[oid],
                contributions=tuple(expected[oid] + (v - el_total) * share for v in vars_at),
            )
        )
    return ContributionTable(
        levels=levels,
        rows=tuple(rows),
        total_expected_loss=el_total,
        totals=tuple(vars_at),
    )


def build_report(
    portfolio: Portfolio,
    banded: BandedPortfolio,
    dist: LossDistribution,
    levels: list[float] | tuple[float, ...],
    config: dict | None = None,
    findings: list[ValidationFinding] | tuple[ValidationFinding, ...] = (),
) -> RiskReport:
    """Assemble quantiles, moments, and contributions into one serializable report."""
    names = {o.id: o.name for o in portfolio}
    merged_config = dict(config or {})
    merged_config.setdefault("unit", banded.unit)
    merged_config.setdefault("grid_size", int(dist.pmf.size))
    merged_config.setdefault("truncation_mass", float(dist.truncation_mass))
    return RiskReport(
        config=merged_config,
        findings=tuple(findings),
        moments=moments(dist),
        quantiles=tuple(QuantileRow(float(lvl), exceedance_quantile(dist, float(lvl))) for lvl in levels),
        contributions=risk_contributions(banded, dist, levels, names),
    )
