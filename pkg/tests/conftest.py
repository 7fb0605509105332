from pathlib import Path

import pytest

import agririsk as ar

REPO_ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture(scope="session")
def repo_root() -> Path:
    return REPO_ROOT


@pytest.fixture(scope="session")
def bundled_portfolio() -> ar.Portfolio:
    return ar.load_portfolio(ar.bundled_dataset_path())


@pytest.fixture(scope="session")
def bundled_banded(bundled_portfolio) -> ar.BandedPortfolio:
    sectored = ar.assign_sectors(bundled_portfolio, ar.SectorAssignment("crop-livestock"))
    return ar.band_exposures(sectored, 1.0)


@pytest.fixture(scope="session")
def bundled_dist(bundled_banded) -> ar.LossDistribution:
    return ar.loss_dist_fft(bundled_banded, ar.auto_grid_size(bundled_banded))


def make_banded(sectors, unit: float = 1.0) -> ar.BandedPortfolio:
    """Hand-built banded portfolio: sectors = [(name, SectorParams, [(v, eps), ...])].

    Each band is attributed to its own synthetic obligor so contribution
    reporting stays well-defined.
    """
    banded_sectors = []
    obligor_bands = {}
    for name, params, bands in sectors:
        band_objs = tuple(ar.Band(v, eps) for v, eps in sorted(bands))
        banded_sectors.append(ar.BandedSector(name, params, band_objs))
        for i, (v, eps) in enumerate(sorted(bands)):
            oid = f"{name}-{i}"
            obligor_bands[oid] = (ar.engine.ObligorBandRef(name, v, eps),)
    return ar.BandedPortfolio(unit=unit, sectors=tuple(banded_sectors), obligor_bands=obligor_bands)
