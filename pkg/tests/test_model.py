import math

import numpy as np
import pytest
from pydantic import ValidationError

from sketchridge.errors import DimensionMismatch, DomainError
from sketchridge.measures import make_discrete, point_mass
from sketchridge.model import (
    DeterministicBeta,
    EigenvalueSpec,
    ModelConfig,
    RandomBeta,
    covariance_eigenvalues,
    make_covariance,
    sample_beta,
    sample_dataset,
    vesd,
)


def config(**fields):
    base = {"n": 40, "p": 10, "beta": {"mode": "random", "alpha": 2.0}, "sigma_noise": 1.0, "seed": 3}
    base.update(fields)
    return ModelConfig.parse_obj(base)


def test_isotropic_covariance():
    assert np.array_equal(make_covariance(point_mass(1.0), 5), np.eye(5))


def test_two_level_covariance(two_level):
    assert np.array_equal(covariance_eigenvalues(two_level, 4), [2.0, 2.0, 1.0, 1.0])


def test_two_level_remainder_goes_to_the_larger_eigenvalue(two_level):
    assert np.array_equal(covariance_eigenvalues(two_level, 5), [2.0, 2.0, 2.0, 1.0, 1.0])


def test_largest_remainder_rounding():
    measure = make_discrete([(3.0, 0.2), (2.0, 0.5), (1.0, 0.3)])
    eigs = covariance_eigenvalues(measure, 7)
    # quotas 1.4, 3.5 and 2.1
    assert np.array_equal(eigs, [3.0, 2.0, 2.0, 2.0, 2.0, 1.0, 1.0])


def test_explicit_eigenvalues():
    spec = EigenvalueSpec(values=(1.0, 3.0, 2.0))
    assert np.array_equal(covariance_eigenvalues(spec, 3), [3.0, 2.0, 1.0])
    with pytest.raises(DimensionMismatch):
        covariance_eigenvalues(spec, 4)


def test_zero_signal_beta():
    assert np.array_equal(sample_beta(RandomBeta(alpha=0.0), 7, seed=1), np.zeros(7))


def test_random_beta_norm():
    norms = [float(np.sum(sample_beta(RandomBeta(alpha=5.0), 200, seed=s) ** 2)) for s in range(500)]
    # ‖β‖² ~ (25/200) χ²_200 has mean 25 and standard deviation 2.5
    assert abs(np.mean(norms) - 25.0) < 4 * 2.5 / math.sqrt(500)


def test_deterministic_beta_is_returned_unchanged():
    spec = DeterministicBeta(vector=(3.0, 4.0))
    assert np.array_equal(sample_beta(spec, 2, seed=0), [3.0, 4.0])
    assert spec.alpha == 5.0
    with pytest.raises(DimensionMismatch):
        sample_beta(spec, 3, seed=0)


def test_noiseless_null_model():
    data = sample_dataset(config(beta={"mode": "random", "alpha": 0.0}, sigma_noise=0.0))
    assert np.array_equal(data.Y, np.zeros(40))


def test_response_is_signal_plus_noise():
    data = sample_dataset(config())
    assert np.allclose(data.Y - data.X @ data.beta, data.noise, atol=1e-12)
    assert data.phi_n == 0.25


def test_sample_covariance():
    data = sample_dataset(config(n=2000))
    assert np.max(np.abs(data.X.T @ data.X / 2000 - np.eye(10))) < 0.15


def test_sampling_is_a_function_of_the_seed():
    a, b = sample_dataset(config()), sample_dataset(config())
    assert np.array_equal(a.X, b.X) and np.array_equal(a.Y, b.Y)
    c = sample_dataset(config(seed=4))
    assert not np.array_equal(a.X, c.X)


def test_config_rejects_mp_covariance():
    with pytest.raises(ValidationError):
        config(sigma={"kind": "mp", "psi": 0.5})


def test_config_checks_beta_length():
    with pytest.raises(ValidationError):
        config(beta={"mode": "deterministic", "vector": [1.0, 2.0]})


def test_config_overrides():
    c = config(sigma={"kind": "discrete", "atoms": [[2.0, 0.5], [1.0, 0.5]]})
    d = c.with_overrides(seed=11)
    assert d.seed == 11 and d.sigma == c.sigma and d.phi == 0.25 and d.alpha == 2.0


def test_vesd_isotropic():
    measure = vesd(np.array([1.0, -2.0, 0.5]), np.eye(3))
    assert len(measure.atoms) == 1
    assert measure.atoms[0] == pytest.approx((1.0, 1.0))


def test_vesd_drops_orthogonal_directions():
    measure = vesd(np.array([1.0, 0.0]), np.diag([2.0, 1.0]))
    assert measure.atoms == ((2.0, 1.0),)


def test_vesd_splits_weight():
    beta = np.array([1.0, 1.0]) / math.sqrt(2)
    measure = vesd(beta, np.diag([2.0, 1.0]))
    assert measure.locations == pytest.approx([1.0, 2.0])
    assert measure.weights == pytest.approx([0.5, 0.5])


def test_vesd_non_diagonal():
    c, s = math.cos(0.3), math.sin(0.3)
    Q = np.array([[c, -s], [s, c]])
    Sigma = Q @ np.diag([3.0, 1.0]) @ Q.T
    measure = vesd(Q[:, 0], Sigma)
    assert measure.locations[-1] == pytest.approx(3.0)
    assert measure.weights[-1] == pytest.approx(1.0, abs=1e-12)


def test_vesd_of_zero_beta():
    with pytest.raises(DomainError):
        vesd(np.zeros(3), np.eye(3))
