import pytest

from pollheap.synth import BetaProb, GeneratorConfig, LogNormalSize, generate


@pytest.fixture(scope="session")
def null_2k():
    """2000 clean synthetic stations with heterogeneous probabilities."""
    return generate(GeneratorConfig(n_stations=2000), seed=101).dataset


@pytest.fixture(scope="session")
def null_multiregion():
    """3000 clean synthetic stations spread over 10 regions."""
    cfg = GeneratorConfig(n_stations=3000, n_regions=10)
    return generate(cfg, seed=202).dataset


@pytest.fixture(scope="session")
def null_large_stations():
    """Stations big enough that percentage granularity is fine-grained."""
    cfg = GeneratorConfig(
        n_stations=1500,
        size=LogNormalSize(median=2400, sigma=0.07, low=2000, high=3000),
        turnout=BetaProb(14, 8),
        result=BetaProb(10, 6),
    )
    return generate(cfg, seed=303).dataset
