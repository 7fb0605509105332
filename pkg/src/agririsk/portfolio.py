"""Obligor-level portfolio data: CSV parsing, validation, discounting, sector assignment."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from .errors import InputError

SECTOR_MODES = ("single", "crop-livestock", "per-obligor")
MC_MODES = ("poisson-banded", "bernoulli-exact")

# required CSV columns, in order; expected_loss is optional, a trailing
# rating column is accepted and ignored
CSV_COLUMNS = (
    "id",
    "name",
    "exposure",
    "mean_loss_rate",
    "loss_rate_stddev",
    "crop_ratio",
    "livestock_ratio",
    "expected_loss",
)
_OPTIONAL_COLUMNS = ("expected_loss", "rating")

# crop/livestock ratios are renormalized when their sum misses 1 by more than this
RATIO_RENORM_TOL = 1e-9


@dataclass(frozen=True)
class ObligorRecord:
    """One insured entity.

    Exposure is in millions of currency units; rates are dimensionless
    fractions (0.0312, never 3.12). The declared expected loss, when
    present, is used only for consistency checks.
    """

    id: str
    name: str
    exposure: float
    mean_loss_rate: float
    loss_rate_stddev: float
    crop_ratio: float
    livestock_ratio: float
    expected_loss_declared: float | None = None

    def __post_init__(self):
        if not self.id:
            raise InputError("obligor id must be non-empty")
        if not self.exposure > 0:
            raise InputError(f"obligor {self.id}: exposure must be > 0, got {self.exposure}")
        if not 0.0 <= self.mean_loss_rate <= 1.0:
            raise InputError(
                f"obligor {self.id}: mean_loss_rate must be in [0, 1], got {self.mean_loss_rate}"
            )
        if self.loss_rate_stddev < 0.0:
            raise InputError(
                f"obligor {self.id}: loss_rate_stddev must be >= 0, got {self.loss_rate_stddev}"
            )
        for name in ("crop_ratio", "livestock_ratio"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InputError(f"obligor {self.id}: {name} must be in [0, 1], got {value}")

    @property
    def expected_loss(self) -> float:
        return self.exposure * self.mean_loss_rate


@dataclass(frozen=True)
class Portfolio:
    """Ordered, immutable collection of obligors with unique ids."""

    obligors: tuple[ObligorRecord, ...]
    currency_unit: str = "EUR million"
    as_of: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "obligors", tuple(self.obligors))
        if not self.obligors:
            raise InputError("empty portfolio")
        seen = set()
        for obligor in self.obligors:
            if obligor.id in seen:
                raise InputError(f"duplicate obligor id {obligor.id!r}")
            seen.add(obligor.id)

    def __len__(self) -> int:
        return len(self.obligors)

    def __iter__(self):
        return iter(self.obligors)

    @property
    def total_exposure(self) -> float:
        return sum(o.exposure for o in self.obligors)

    @property
    def total_expected_loss(self) -> float:
        return sum(o.expected_loss for o in self.obligors)


@dataclass(frozen=True)
class DiscountSpec:
    """Continuously compounded present-value discounting over a horizon in years."""

    rate: float = 0.0
    horizon: float = 0.0

    def __post_init__(self):
        if self.horizon < 0:
            raise InputError(f"discount horizon must be >= 0, got {self.horizon}")

    @property
    def factor(self) -> float:
        return math.exp(-self.rate * self.horizon)


@dataclass(frozen=True)
class SectorAssignment:
    """How obligors map to gamma-mixed sectors.

    sector_rates optionally overrides the (mean, stddev) loss rate of a
    named sector; when omitted, sector rates default to sub-exposure
    weighted averages of the member obligors' rates. per-obligor mode
    always uses each obligor's own rates.
    """

    mode: str = "crop-livestock"
    sector_rates: dict[str, tuple[float, float]] | None = None

    def __post_init__(self):
        if self.mode not in SECTOR_MODES:
            raise InputError(f"unknown sector mode {self.mode!r}; expected one of {SECTOR_MODES}")
        if self.mode == "per-obligor" and self.sector_rates:
            raise InputError("per-obligor mode derives rates from the obligors; overrides not allowed")


@dataclass(frozen=True)
class SubExposure:
    """An obligor's stake in one sector, carrying the obligor's own loss rate."""

    obligor_id: str
    amount: float
    loss_rate: float


@dataclass(frozen=True)
class Sector:
    name: str
    mean_rate: float
    stddev_rate: float
    subs: tuple[SubExposure, ...]

    @property
    def total_amount(self) -> float:
        return sum(s.amount for s in self.subs)


@dataclass(frozen=True)
class SectoredPortfolio:
    """Portfolio view after sector assignment; input to exposure banding."""

    sectors: tuple[Sector, ...]
    obligor_ids: tuple[str, ...]


@dataclass(frozen=True)
class ValidationFinding:
    """A data-consistency observation; findings are data, not failures."""

    kind: str  # "expected_loss_mismatch" | "ratio_sum"
    severity: str  # "warning" | "error"
    obligor_id: str
    message: str


def parse_portfolio(csv_text: str, currency_unit: str = "EUR million") -> Portfolio:
    """Parse portfolio CSV text into a Portfolio.

    Header row is mandatory; columns are id,name,exposure,mean_loss_rate,
    loss_rate_stddev,crop_ratio,livestock_ratio[,expected_loss[,rating]].
    Rates must already be fractions; percent signs are not interpreted.
    """
    rows = [r for r in csv.reader(io.StringIO(csv_text)) if any(cell.strip() for cell in r)]
    if not rows:
        raise InputError("empty portfolio: no header row")
    header = [h.strip() for h in rows[0]]
    required = list(CSV_COLUMNS[:-1])
    if header[: len(required)] != required:
        raise InputError(
            "bad header: expected columns "
            f"{','.join(required)}[,expected_loss] but got {','.join(header)}"
        )
    extras = header[len(required) :]
    for col in extras:
        if col not in _OPTIONAL_COLUMNS:
            raise InputError(f"bad header: unknown column {col!r}")
    el_index = header.index("expected_loss") if "expected_loss" in extras else None

    obligors = []
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise InputError(
                f"row {line_no}: expected {len(header)} fields, got {len(row)}"
            )
        cells = [c.strip() for c in row]

        def num(index: int, column: str) -> float:
            try:
                return float(cells[index])
            except ValueError:
                raise InputError(
                    f"row {line_no}: malformed {column}: {cells[index]!r}"
                ) from None

        expected_loss = None
        if el_index is not None and cells[el_index]:
            expected_loss = num(el_index, "expected_loss")
        try:
            obligors.append(
                ObligorRecord(
                    id=cells[0],
                    name=cells[1],
                    exposure=num(2, "exposure"),
                    mean_loss_rate=num(3, "mean_loss_rate"),
                    loss_rate_stddev=num(4, "loss_rate_stddev"),
                    crop_ratio=num(5, "crop_ratio"),
                    livestock_ratio=num(6, "livestock_ratio"),
                    expected_loss_declared=expected_loss,
                )
            )
        except InputError as exc:
            raise InputError(f"row {line_no}: {exc}") from None
    if not obligors:
        raise InputError("empty portfolio: header only")
    return Portfolio(obligors=tuple(obligors), currency_unit=currency_unit)


def serialize_portfolio(portfolio: Portfolio) -> str:
    """Inverse of parse_portfolio; floats are written with full round-trip precision."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for o in portfolio:
        writer.writerow(
            [
                o.id,
                o.name,
                repr(o.exposure),
                repr(o.mean_loss_rate),
                repr(o.loss_rate_stddev),
                repr(o.crop_ratio),
                repr(o.livestock_ratio),
                "" if o.expected_loss_declared is None else repr(o.expected_loss_declared),
            ]
        )
    return out.getvalue()


def load_portfolio(path: str | Path, currency_unit: str = "EUR million") -> Portfolio:
    return parse_portfolio(Path(path).read_text(encoding="utf-8"), currency_unit)


def bundled_dataset_path() -> Path:
    """Path of the packaged 22-state example dataset."""
    return Path(str(resources.files("agririsk").joinpath("data/table1_eu22.csv")))


def validate_portfolio(portfolio: Portfolio, tol: float = 0.02) -> list[ValidationFinding]:
    """Cross-check declared expected losses and crop/livestock ratio sums.

    An obligor whose exposure * mean_loss_rate differs from its declared
    expected loss by more than tol (relative to max(declared, 1)) yields an
    error-severity finding; ratio sums outside [1 - tol, 1 + tol] yield
    warnings.
    """
    findings: list[ValidationFinding] = []
    for o in portfolio:
        if o.expected_loss_declared is not None:
            gap = abs(o.expected_loss - o.expected_loss_declared)
            if gap / max(o.expected_loss_declared, 1.0) > tol:
                findings.append(
                    ValidationFinding(
                        kind="expected_loss_mismatch",
                        severity="error",
                        obligor_id=o.id,
                        message=(
                            f"exposure * mean_loss_rate = {o.expected_loss:.6g} but "
                            f"declared expected loss is {o.expected_loss_declared:.6g}"
                        ),
                    )
                )
        ratio_sum = o.crop_ratio + o.livestock_ratio
        if not (1.0 - tol) <= ratio_sum <= (1.0 + tol):
            findings.append(
                ValidationFinding(
                    kind="ratio_sum",
                    severity="warning",
                    obligor_id=o.id,
                    message=(
                        f"crop_ratio + livestock_ratio = {ratio_sum:.6g}; "
                        "ratios are renormalized in crop-livestock mode"
                    ),
                )
            )
    return findings


def discount_exposures(portfolio: Portfolio, spec: DiscountSpec) -> Portfolio:
    """Scale every exposure to present value by exp(-rate * horizon)."""
    factor = spec.factor
    return replace(
        portfolio,
        obligors=tuple(replace(o, exposure=o.exposure * factor) for o in portfolio),
    )


def _weighted_rates(members: list[tuple[float, float, float]]) -> tuple[float, float]:
    # members: (amount, mean rate, rate stddev); amount-weighted averages
    weight = sum(m[0] for m in members)
    mean = sum(m[0] * m[1] for m in members) / weight
    stddev = sum(m[0] * m[2] for m in members) / weight
    return mean, stddev


def _split_ratios(o: ObligorRecord) -> tuple[float, float]:
    total = o.crop_ratio + o.livestock_ratio
    if total <= 0.0:
        raise InputError(f"obligor {o.id}: crop and livestock ratios are both zero; cannot split")
    if abs(total - 1.0) <= RATIO_RENORM_TOL:
        return o.crop_ratio, o.livestock_ratio
    return o.crop_ratio / total, o.livestock_ratio / total


def assign_sectors(portfolio: Portfolio, assignment: SectorAssignment) -> SectoredPortfolio:
    """Split each obligor's exposure across sectors per the assignment mode.

    single: one sector holding every full exposure; crop-livestock: two
    sectors fed by the (renormalized) ratio split; per-obligor: one sector
    per obligor. Each sub-exposure keeps its obligor's own mean loss rate.
    """
    overrides = assignment.sector_rates or {}
    sectors: list[Sector] = []

    if assignment.mode == "single":
        subs = tuple(SubExposure(o.id, o.exposure, o.mean_loss_rate) for o in portfolio)
        members = [(o.exposure, o.mean_loss_rate, o.loss_rate_stddev) for o in portfolio]
        mean, stddev = overrides.get("portfolio") or _weighted_rates(members)
        sectors.append(Sector("portfolio", mean, stddev, subs))
    elif assignment.mode == "crop-livestock":
        buckets: dict[str, list[tuple[ObligorRecord, float]]] = {"crop": [], "livestock": []}
        for o in portfolio:
            crop_w, livestock_w = _split_ratios(o)
            if crop_w > 0.0:
                buckets["crop"].append((o, o.exposure * crop_w))
            if livestock_w > 0.0:
                buckets["livestock"].append((o, o.exposure * livestock_w))
        for name in ("crop", "livestock"):
            entries = buckets[name]
            if not entries:
                continue
            subs = tuple(SubExposure(o.id, amount, o.mean_loss_rate) for o, amount in entries)
            members = [(amount, o.mean_loss_rate, o.loss_rate_stddev) for o, amount in entries]
            mean, stddev = overrides.get(name) or _weighted_rates(members)
            sectors.append(Sector(name, mean, stddev, subs))
    else:  # per-obligor
        for o in portfolio:
            subs = (SubExposure(o.id, o.exposure, o.mean_loss_rate),)
            sectors.append(Sector(o.id, o.mean_loss_rate, o.loss_rate_stddev, subs))

    unknown = set(overrides) - {s.name for s in sectors}
    if unknown:
        raise InputError(f"sector rate overrides for unknown sectors: {sorted(unknown)}")
    for sector in sectors:
        if sector.mean_rate == 0.0 and sector.stddev_rate > 0.0:
            raise InputError(
                f"sector {sector.name!r}: zero mean rate with positive volatility has no "
                "gamma parameterization"
            )
        if sector.mean_rate < 0.0 or sector.stddev_rate < 0.0:
            raise InputError(f"sector {sector.name!r}: rates must be nonnegative")

    return SectoredPortfolio(
        sectors=tuple(sectors), obligor_ids=tuple(o.id for o in portfolio)
    )
