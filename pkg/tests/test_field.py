import numpy as np
import pytest

from maipp.core.config import FieldConfig
from maipp.core.errors import DomainError
from maipp.core.field import GroundTruth, generate_ground_truth, grid_points


def test_component_count_in_range():
    for seed in range(20):
        world = generate_ground_truth(np.random.default_rng(seed))
        assert 8 <= len(world.components) <= 12


def test_same_seed_same_components():
    a = generate_ground_truth(np.random.default_rng(42))
    b = generate_ground_truth(np.random.default_rng(42))
    assert a.components == b.components
    assert a.normalizer == b.normalizer


def test_single_component_peak_is_one():
    cfg = FieldConfig(min_components=1, max_components=1, fixed_means=[(0.5, 0.5)])
    world = generate_ground_truth(np.random.default_rng(1), cfg)
    assert world.query((0.5, 0.5)) == pytest.approx(1.0, abs=1e-12)


def test_grid_maximum_is_one(rng):
    world = generate_ground_truth(rng)
    values = world.grid_values()
    assert values.max() == pytest.approx(1.0, abs=1e-12)
    assert values.min() >= 0.0


def test_radial_symmetry(single_bump):
    assert single_bump.query((0.6, 0.5)) == pytest.approx(single_bump.query((0.5, 0.4)), abs=1e-14)


def test_query_matches_independent_mixture(rng):
    world = generate_ground_truth(rng)
    loc = rng.uniform(0, 1, size=2)

    def density(p):
        total = 0.0
        for c in world.components:
            sq = (p[0] - c.mean[0]) ** 2 + (p[1] - c.mean[1]) ** 2
            total += c.weight / (2 * np.pi * c.std**2) * np.exp(-sq / (2 * c.std**2))
        return total

    peak = max(density(p) for p in grid_points(30))
    assert world.query(loc) == pytest.approx(min(density(loc) / peak, 1.0), rel=1e-12)


def test_query_outside_domain_raises(single_bump):
    with pytest.raises(DomainError):
        single_bump.query((1.2, 0.5))
    with pytest.raises(DomainError):
        single_bump.query((0.5, -0.01))


def test_noiseless_measure_equals_query(single_bump, rng):
    assert single_bump.measure((0.3, 0.7), 0.0, rng) == single_bump.query((0.3, 0.7))


def test_measurement_noise_moments(single_bump):
    rng = np.random.default_rng(11)
    samples = np.array([single_bump.measure((0.4, 0.45), 0.1, rng) for _ in range(10_000)])
    truth = single_bump.query((0.4, 0.45))
    assert abs(samples.mean() - truth) < 4 * 0.1 / 100
    assert abs(samples.std() - 0.1) < 0.05 * 0.1


def test_negative_noise_raises(single_bump, rng):
    with pytest.raises(DomainError):
        single_bump.measure((0.5, 0.5), -0.1, rng)


def test_records_round_trip(rng):
    world = generate_ground_truth(rng)
    rebuilt = GroundTruth.from_records(world.to_records())
    np.testing.assert_array_equal(rebuilt.grid_values(), world.grid_values())


def test_invalid_field_config_rejected():
    with pytest.raises(ValueError):
        FieldConfig(min_components=5, max_components=3)
    with pytest.raises(ValueError):
        FieldConfig(std_min=0.0)
