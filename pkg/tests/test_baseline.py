#
# Copyright (c) 2022 Amigos Development, Inc.
#
# MIT License - See LICENSE file accompanying this package.
#

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from blurgp.baseline import (
    bernoulli_kl,
    error_rate,
    error_rate_from_probs,
    exact_gp_regression,
    fit_full,
    fit_sparse,
    full_gp_classification_ep,
    gaussian_kl,
    kl_predictive,
    mean_rmse,
    predictive_y,
    rmse,
  )
from blurgp.dataset import Dataset, Task
from blurgp.ep import EpConfig
from blurgp.exceptions import DataError, GramFactorizationError, UsageError
from blurgp.kernels import Basis, BlurMode, KernelParams
from blurgp.likelihoods import ClassificationLik, RegressionLik

UNIT = KernelParams(1.0)

class TestExactRegression:
  def test_single_point(self):
    model = exact_gp_regression(Dataset([ [ 0.0 ] ], [ 1.0 ], Task.REGRESSION), UNIT, 0.1)
    mean, var = model.predict_latent([ [ 0.0 ] ])
    assert mean[0] == pytest.approx(1.0 / 1.1, rel=1e-12)
    assert var[0] == pytest.approx(1.0 - 1.0 / 1.1, rel=1e-10)
    assert var[0] < 1.0

  def test_noise_free_interpolates(self, grid_regression_data):
    model = exact_gp_regression(grid_regression_data, UNIT, 0.0)
    assert model.likelihood is None
    mean, var = predictive_y(model, grid_regression_data.inputs)
    assert_allclose(mean, grid_regression_data.outputs, atol=1e-6)
    assert np.all(var < 1e-6)

  def test_duplicate_inputs_without_noise(self):
    data = Dataset([ [ 0.0 ], [ 0.0 ] ], [ 1.0, 2.0 ], Task.REGRESSION)
    with pytest.raises(GramFactorizationError):
      exact_gp_regression(data, UNIT, 0.0)

  def test_rejects_negative_noise(self, grid_regression_data):
    with pytest.raises(DataError):
      exact_gp_regression(grid_regression_data, UNIT, -0.1)

  def test_delta_basis_at_inputs_matches(self, grid_regression_data, rng):
    data = grid_regression_data
    lik = RegressionLik(0.1)
    exact = fit_full(data, UNIT, lik)
    sparse = fit_sparse(data, Basis.from_arrays(data.inputs, None, UNIT), lik, EpConfig(jitter=0.0))
    eval_inputs = rng.uniform(-2.5, 2.5, size=(200, 2))
    m1, v1 = exact.predict_latent(eval_inputs)
    m2, v2 = sparse.predict_latent(eval_inputs)
    assert_allclose(m2, m1, atol=1e-6)
    assert_allclose(v2, v1, atol=1e-6)
    assert kl_predictive(exact, sparse, eval_inputs) < 1e-6
    assert mean_rmse(exact, sparse, eval_inputs) < 1e-6

class TestFullClassification:
  def test_separates_the_classes(self, small_classification_data):
    data = small_classification_data
    model = full_gp_classification_ep(data, UNIT, 0.01)
    assert model.task == Task.CLASSIFICATION
    assert model.report is not None and model.report.converged
    probs = predictive_y(model, np.array([ [ -2.5 ], [ 2.5 ] ]))
    assert probs[0] < 0.5 < probs[1]
    train_probs = predictive_y(model, data.inputs)
    correct = np.where(data.outputs > 0.0, train_probs, 1.0 - train_probs)
    assert float(np.mean(correct)) > 0.8

  def test_error_rate_on_gaussian_classes(self, gaussian_split):
    train, test = gaussian_split
    model = fit_full(train, UNIT, ClassificationLik(0.01))
    assert error_rate(model, test) < 0.3

class TestKl:
  def test_bernoulli_spot_value(self):
    assert float(bernoulli_kl(1.0, 0.75)) == pytest.approx(0.287682, abs=1e-6)

  def test_bernoulli_asymmetric(self):
    assert float(bernoulli_kl(0.9, 0.6)) != pytest.approx(float(bernoulli_kl(0.6, 0.9)))

  def test_bernoulli_clamped(self):
    assert np.all(np.isfinite(bernoulli_kl([ 0.0, 1.0 ], [ 1.0, 0.0 ])))

  def test_gaussian(self):
    assert float(gaussian_kl(0.3, 0.7, 0.3, 0.7)) == 0.0
    assert float(gaussian_kl(0.0, 1.0, 1.0, 2.0)) == pytest.approx(0.5 * math.log(2.0), rel=1e-12)

  def test_gaussian_zero_variance_is_finite(self):
    assert np.isfinite(gaussian_kl(0.0, 0.0, 0.1, 0.5))
    assert np.isfinite(gaussian_kl(0.0, 0.5, 0.1, 0.0))

  def test_noise_free_reference_at_training_inputs(self, grid_regression_data):
    exact = exact_gp_regression(grid_regression_data, UNIT, 0.0)
    noisy = exact_gp_regression(grid_regression_data, UNIT, 0.1)
    kl = kl_predictive(exact, noisy, grid_regression_data.inputs)
    assert math.isfinite(kl)
    assert kl > 0.0

  def test_self_kl_is_zero(self, gaussian_split):
    train, test = gaussian_split
    basis = Basis.from_arrays(train.inputs[:10], None, UNIT)
    model = fit_sparse(train, basis, ClassificationLik(0.01))
    assert kl_predictive(model, model, test.inputs) == 0.0

  def test_permutation_invariant(self, gaussian_split, rng):
    train, test = gaussian_split
    lik = ClassificationLik(0.01)
    full = fit_full(train, UNIT, lik)
    sparse = fit_sparse(train, Basis.from_arrays(train.inputs[:10], None, UNIT, blur_mode=BlurMode.DELTA), lik)
    xs = test.inputs[:100]
    shuffled = xs[rng.permutation(100)]
    assert kl_predictive(full, sparse, shuffled) == pytest.approx(kl_predictive(full, sparse, xs), rel=1e-12)
    assert kl_predictive(full, sparse, xs) > 0.0

  def test_task_mismatch(self, gaussian_split, grid_regression_data):
    train, test = gaussian_split
    classifier = fit_sparse(train, Basis.from_arrays(train.inputs[:5], None, UNIT), ClassificationLik(0.01))
    regressor = exact_gp_regression(grid_regression_data, KernelParams(1.0), 0.1)
    with pytest.raises(UsageError):
      kl_predictive(regressor, classifier, test.inputs)

class TestErrorRate:
  def test_tie_counts_as_error(self):
    assert error_rate_from_probs([ 0.5, 0.7, 0.2 ], [ 1.0, 1.0, -1.0 ]) == pytest.approx(1.0 / 3.0)

  def test_empty(self):
    with pytest.raises(UsageError):
      error_rate_from_probs([], [])

  def test_random_guessing(self, rng):
    labels = rng.choice([ -1.0, 1.0 ], size=4000)
    assert error_rate_from_probs(rng.uniform(size=4000), labels) == pytest.approx(0.5, abs=0.05)

  def test_needs_classification(self, grid_regression_data):
    model = exact_gp_regression(grid_regression_data, UNIT, 0.1)
    with pytest.raises(UsageError):
      error_rate(model, grid_regression_data)
    assert rmse(model, grid_regression_data) < 0.5
