#
# Copyright (c) 2022 Amigos Development, Inc.
#
# MIT License - See LICENSE file accompanying this package.
#

from dataclasses import dataclass

import numpy as np
import pytest
from numpy.testing import assert_allclose

from blurgp.basis_selection import select_basis
from blurgp.dataset import Dataset, Task, gen_gaussian_classes
from blurgp.ep import (
    EpConfig,
    SiteMessages,
    cavity,
    cavity_direction,
    cavity_marginal,
    damp_message,
    ep_fit,
    fixed_point_residual,
    message_log_normalizer,
    project,
    propose_message,
    update_message,
  )
from blurgp.exceptions import DataError, DegenerateSiteError, EpDivergenceError, UsageError
from blurgp.kernels import Basis, BlurMode, BlurredBasisPoint, KernelParams, blurred_cross_kernel
from blurgp.likelihoods import ClassificationLik, RegressionLik, SiteDerivatives, site_derivs_regression
from blurgp.posterior import SparsePosterior, predict_mean, predict_mean_var, projected_weights

UNIT = KernelParams(1.0)

def sphere_basis(centers, s: float=0.2) -> Basis:
  return Basis([ BlurredBasisPoint.sphere(c, s) for c in centers ], UNIT)

def site_state(post: SparsePosterior, sites: SiteMessages, data: Dataset, i: int):
  """Cavity, marginal, direction and c for site i of a fitted state."""
  x_i = data.inputs[i]
  k_i = blurred_cross_kernel(x_i, post.basis)
  p_i = sites.p[:, i]
  alpha_cav, beta_cav = cavity(post, sites, i, x_i)
  m, v = cavity_marginal(post.basis, alpha_cav, beta_cav, x_i)
  h = cavity_direction(beta_cav, k_i, p_i)
  return alpha_cav, beta_cav, m, v, h, k_i, p_i

@dataclass(frozen=True)
class PickyLik:
  """Regression sites that refuse positive outputs."""
  kind = 'picky'
  refuse_all: bool = False

  def site_derivs(self, m: float, v: float, y: float) -> SiteDerivatives:
    if self.refuse_all or y > 0.0:
      raise DegenerateSiteError("refused")
    return site_derivs_regression(m, v, y, RegressionLik(0.1))

  def check_targets(self, y) -> None:
    pass

class TestConfig:
  def test_defaults(self):
    cfg = EpConfig()
    assert cfg.damping == 1.0
    assert cfg.site_order == 'natural'

  @pytest.mark.parametrize('kwargs', [
      dict(max_sweeps=0),
      dict(convergence_tol=0.0),
      dict(damping=0.0),
      dict(damping=1.5),
      dict(jitter=-1.0),
      dict(site_order='random'),
    ])
  def test_rejects(self, kwargs):
    with pytest.raises(UsageError):
      EpConfig(**kwargs)

class TestSingleSite:
  def test_empty_messages(self):
    sites = SiteMessages.empty(np.ones((3, 4)))
    assert sites.size == 4
    assert all(sites.is_empty(i) for i in range(4))

  def test_empty_site_cavity_is_identity(self, grid_regression_data, rng):
    basis = sphere_basis(grid_regression_data.inputs[::5])
    post = SparsePosterior.prior(basis)
    post.alpha = rng.standard_normal(basis.size)
    sites = SiteMessages.empty(projected_weights(post, grid_regression_data.inputs))
    alpha_cav, beta_cav = cavity(post, sites, 3, grid_regression_data.inputs[3])
    assert np.array_equal(alpha_cav, post.alpha)
    assert np.array_equal(beta_cav, post.beta)
    assert alpha_cav is not post.alpha

  def test_prior_cavity_marginal(self):
    basis = sphere_basis([ [ 0.0, 0.0 ], [ 1.0, 1.0 ] ])
    m, v = cavity_marginal(basis, np.zeros(2), np.zeros((2, 2)), [ 0.3, -0.4 ])
    assert m == 0.0
    assert v == 1.0

  def test_include_then_delete_returns_prior(self):
    data = Dataset([ [ 0.2 ] ], [ 1.0 ], Task.CLASSIFICATION)
    basis = Basis([ BlurredBasisPoint([ 0.0 ], [ [ 0.3 ] ]), BlurredBasisPoint.delta([ 1.0 ]) ], UNIT)
    post, sites, _ = ep_fit(data, basis, ClassificationLik(0.01), EpConfig(max_sweeps=3))
    alpha_cav, beta_cav = cavity(post, sites, 0, data.inputs[0])
    assert_allclose(alpha_cav, np.zeros(2), atol=1e-10)
    assert_allclose(beta_cav, np.zeros((2, 2)), atol=1e-10)

  def test_direction_two_ways(self, rng):
    basis = sphere_basis(rng.uniform(-1.0, 1.0, size=(4, 2)))
    post = SparsePosterior.prior(basis)
    a = 0.05 * rng.standard_normal((4, 4))
    beta = 0.5 * (a + a.T)
    x = rng.standard_normal(2)
    k = blurred_cross_kernel(x, basis)
    h = cavity_direction(beta, k, post.khat_factor.solve(k))
    assert_allclose(post.khat @ h, k - post.khat @ beta @ k, atol=1e-8)

  def test_projection_is_psd_rank_one(self, rng):
    basis = sphere_basis(rng.uniform(-1.0, 1.0, size=(4, 2)))
    post = SparsePosterior.prior(basis)
    x = rng.standard_normal(2)
    p = post.khat_factor.solve(blurred_cross_kernel(x, basis))
    derivs = ClassificationLik(0.01).site_derivs(0.3, 1.0, 1.0)
    alpha, beta = project(basis, post.alpha, post.beta, x, derivs, p)
    delta = beta - post.beta
    assert np.all(np.linalg.eigvalsh(delta) >= -1e-12)
    assert np.linalg.matrix_rank(delta, tol=1e-10) == 1
    assert np.linalg.norm(alpha) > 0.0

  def test_zero_derivatives_leave_state(self, rng):
    basis = sphere_basis(rng.uniform(-1.0, 1.0, size=(3, 2)))
    post = SparsePosterior.prior(basis)
    post.alpha = rng.standard_normal(3)
    x = rng.standard_normal(2)
    p = post.khat_factor.solve(blurred_cross_kernel(x, basis))
    alpha, beta = project(basis, post.alpha, post.beta, x, SiteDerivatives(0.0, 0.0, 0.0), p)
    assert np.array_equal(alpha, post.alpha)
    assert np.array_equal(beta, post.beta)

class TestMessages:
  def test_damping_one_is_identity(self):
    assert damp_message(0.3, 2.0, -1.0, 5.0, 1.0) == (-1.0, 5.0)

  def test_damping_in_natural_parameters(self):
    g, tau = damp_message(1.0, 2.0, 3.0, 4.0, 0.5)
    assert tau == pytest.approx(3.0)
    assert g == pytest.approx((0.5 * 12.0 + 0.5 * 2.0) / 3.0)

  def test_propose_rejects_zero_curvature(self):
    with pytest.raises(DegenerateSiteError):
      propose_message(SiteDerivatives(0.0, 0.1, 0.0), 0.0, 0.5)

  def test_positive_curvature_gives_negative_precision(self):
    g, tau = propose_message(SiteDerivatives(0.0, 0.15, 0.28), -2.0, 0.5)
    assert tau == pytest.approx(1.0 / (-1.0 / 0.28 - 0.5))
    assert tau < 0.0
    assert g == pytest.approx(-2.0 - 0.15 / 0.28)

  def test_delta_basis_regression_message(self, grid_regression_data):
    data = grid_regression_data
    basis = Basis.from_arrays(data.inputs, None, UNIT)
    post = SparsePosterior.prior(basis, jitter=0.0)
    sites = SiteMessages.empty(projected_weights(post, data.inputs))
    lik = RegressionLik(0.1)
    for i in (0, 7, 24):
      _, _, m, v, h, k_i, _ = site_state(post, sites, data, i)
      g, tau = update_message(sites, i, lik.site_derivs(m, v, data.outputs[i]), m, v, h, k_i)
      assert tau == pytest.approx(10.0, rel=1e-6)
      assert g == pytest.approx(data.outputs[i], rel=1e-9, abs=1e-9)
      assert sites.tau[i] == tau

  def test_surrogate_normalizer_matches_site_derivatives(self, gaussian_split):
    train, _ = gaussian_split
    lik = ClassificationLik(0.01)
    basis = select_basis(train.inputs, 10, BlurMode.FULL, UNIT, seed=0)
    post, sites, _ = ep_fit(train, basis, lik)
    step = 1e-4
    for i in range(20):
      _, _, m, v, h, k_i, _ = site_state(post, sites, train, i)
      c = float(k_i @ h)
      derivs = lik.site_derivs(m, v, train.outputs[i])
      g, tau = propose_message(derivs, m, c)
      lo = message_log_normalizer(m - step, g, tau, c)
      mid = message_log_normalizer(m, g, tau, c)
      hi = message_log_normalizer(m + step, g, tau, c)
      assert (hi - lo) / (2.0 * step) == pytest.approx(derivs.dlogz_dm, rel=1e-5, abs=1e-7)
      assert (hi - 2.0 * mid + lo) / (step * step) == pytest.approx(derivs.d2logz_dm2, rel=1e-3, abs=1e-5)

class TestRegressionFit:
  def test_converges_in_one_pass(self, grid_regression_data):
    basis = sphere_basis(grid_regression_data.inputs[::4])
    _, _, report = ep_fit(grid_regression_data, basis, RegressionLik(0.1))
    assert report.converged
    assert report.sweeps == 2
    assert report.max_changes[1] <= 1e-8

  def test_delete_then_project_is_identity(self, grid_regression_data):
    data = grid_regression_data
    lik = RegressionLik(0.1)
    post, sites, _ = ep_fit(data, sphere_basis(data.inputs[::5]), lik)
    for i in range(data.size):
      alpha_cav, beta_cav, m, v, _, _, p_i = site_state(post, sites, data, i)
      derivs = lik.site_derivs(m, v, data.outputs[i])
      alpha, beta = project(post.basis, alpha_cav, beta_cav, data.inputs[i], derivs, p_i)
      assert_allclose(alpha, post.alpha, rtol=1e-8, atol=1e-8)
      assert_allclose(beta, post.beta, rtol=1e-8, atol=1e-8)

  @pytest.mark.parametrize('cfg', [ EpConfig(), EpConfig(site_order='shuffled', shuffle_seed=3) ])
  def test_site_permutation_invariant(self, grid_regression_data, rng, cfg):
    data = grid_regression_data
    basis = sphere_basis(data.inputs[::5])
    perm = rng.permutation(data.size)
    permuted = Dataset(data.inputs[perm], data.outputs[perm], Task.REGRESSION)
    post, _, _ = ep_fit(data, basis, RegressionLik(0.1))
    post_perm, _, _ = ep_fit(permuted, basis, RegressionLik(0.1), cfg)
    assert_allclose(post_perm.alpha, post.alpha, rtol=0.0, atol=1e-8)
    assert_allclose(post_perm.beta, post.beta, rtol=0.0, atol=1e-8)

  def test_delta_basis_messages(self, grid_regression_data):
    data = grid_regression_data
    basis = Basis.from_arrays(data.inputs, None, UNIT)
    _, sites, report = ep_fit(data, basis, RegressionLik(0.1), EpConfig(jitter=0.0))
    assert report.jitter == 0.0
    assert_allclose(sites.tau, 10.0, rtol=1e-6)
    assert_allclose(sites.g, data.outputs, atol=1e-8)

  def test_empty_data(self):
    with pytest.raises(DataError):
      ep_fit(Dataset(np.zeros((0, 2)), np.zeros(0), Task.REGRESSION), sphere_basis([ [ 0.0, 0.0 ] ]), RegressionLik(0.1))

  def test_dimension_mismatch(self, grid_regression_data):
    with pytest.raises(DataError):
      ep_fit(grid_regression_data, sphere_basis([ [ 0.0, 0.0, 0.0 ] ]), RegressionLik(0.1))

class TestClassificationFit:
  def test_single_point_sign(self):
    data = Dataset([ [ 0.0 ] ], [ 1.0 ], Task.CLASSIFICATION)
    basis = Basis.from_arrays([ [ 0.0 ] ], None, UNIT)
    post, _, report = ep_fit(data, basis, ClassificationLik(0.01))
    assert report.converged
    assert predict_mean(post, [ 0.0 ]) > 0.0

  def test_converges_to_fixed_point(self, gaussian_split):
    train, _ = gaussian_split
    lik = ClassificationLik(0.01)
    basis = select_basis(train.inputs, 10, BlurMode.FULL, UNIT, seed=0)
    post, sites, report = ep_fit(train, basis, lik, EpConfig(max_sweeps=20))
    assert report.converged
    assert report.sweeps <= 20
    assert fixed_point_residual(post, sites, train, lik) < 1e-3
    jsonable = report.to_jsonable()
    assert jsonable['sweeps'] == report.sweeps
    assert len(jsonable['max_changes']) == report.sweeps

  @pytest.mark.parametrize('seed', [ 0, 1, 2, 11 ])
  def test_label_flip_sites_are_all_updated(self, seed):
    train, _ = gen_gaussian_classes(200, 10, seed=seed)
    lik = ClassificationLik(0.01)
    basis = select_basis(train.inputs, 10, BlurMode.FULL, UNIT, seed=seed)
    post, sites, report = ep_fit(train, basis, lik)
    assert report.converged
    assert report.skipped_per_sweep[-1] == 0
    assert np.all(sites.tau != 0.0)
    assert fixed_point_residual(post, sites, train, lik) < 1e-3

  def test_damped_matches_undamped(self, small_classification_data):
    data = small_classification_data
    lik = ClassificationLik(0.05)
    basis = select_basis(data.inputs, 4, BlurMode.FULL, UNIT, seed=0)
    plain, _, r1 = ep_fit(data, basis, lik, EpConfig(convergence_tol=1e-10, max_sweeps=500))
    damped, _, r2 = ep_fit(data, basis, lik, EpConfig(convergence_tol=1e-10, max_sweeps=500, damping=0.5))
    assert r1.converged and r2.converged
    eval_inputs = np.linspace(-3.0, 3.0, 13).reshape(-1, 1)
    for a, b in zip(predict_mean_var(plain, eval_inputs), predict_mean_var(damped, eval_inputs)):
      assert_allclose(a, b, atol=1e-6)

  def test_site_order_does_not_matter(self, small_classification_data):
    data = small_classification_data
    lik = ClassificationLik(0.05)
    basis = select_basis(data.inputs, 4, BlurMode.SPHERE, UNIT, seed=0)
    natural, _, _ = ep_fit(data, basis, lik, EpConfig(convergence_tol=1e-11, max_sweeps=500))
    shuffled, _, _ = ep_fit(
        data, basis, lik, EpConfig(convergence_tol=1e-11, max_sweeps=500, site_order='shuffled', shuffle_seed=4))
    assert_allclose(natural.alpha, shuffled.alpha, atol=1e-7)
    assert_allclose(natural.beta, shuffled.beta, atol=1e-7)

  def test_nonconvergence_can_raise(self, gaussian_split):
    train, _ = gaussian_split
    basis = select_basis(train.inputs, 5, BlurMode.DELTA, UNIT, seed=0)
    _, _, report = ep_fit(train, basis, ClassificationLik(0.01), EpConfig(max_sweeps=1))
    assert not report.converged
    with pytest.raises(EpDivergenceError):
      ep_fit(train, basis, ClassificationLik(0.01), EpConfig(max_sweeps=1, raise_on_nonconvergence=True))

class TestSkippedSites:
  def test_skips_are_counted(self, grid_regression_data):
    data = grid_regression_data
    refused = int(np.sum(data.outputs > 0.0))
    assert 0 < refused < data.size
    _, sites, report = ep_fit(data, sphere_basis(data.inputs[::5]), PickyLik())
    assert report.skipped_per_sweep[0] == refused
    assert report.skipped['degenerate_site'] == refused * report.sweeps
    assert np.all(sites.tau[data.outputs > 0.0] == 0.0)
    assert not report.converged
    assert report.sweeps == EpConfig().max_sweeps

  def test_all_skipped_diverges(self, grid_regression_data):
    with pytest.raises(EpDivergenceError):
      ep_fit(grid_regression_data, sphere_basis([ [ 0.0, 0.0 ] ]), PickyLik(refuse_all=True))

def loglog_slope(sizes, seconds) -> float:
  return float(np.polyfit(np.log(sizes), np.log(seconds), 1)[0])

def median_sweep_seconds(data: Dataset, basis: Basis, repeats: int=5) -> float:
  seconds = []
  for _ in range(repeats):
    _, _, report = ep_fit(data, basis, ClassificationLik(0.01), EpConfig(max_sweeps=1))
    seconds.append(report.sweep_seconds[0])
  return float(np.median(seconds))

@pytest.mark.slow
class TestScaling:
  def test_linear_in_points(self):
    rng = np.random.default_rng(0)
    basis = sphere_basis(rng.uniform(-2.0, 2.0, size=(20, 2)))
    sizes = [ 500, 1000, 2000, 4000 ]
    seconds = []
    for n in sizes:
      xs = rng.standard_normal((n, 2))
      data = Dataset(xs, np.where(xs[:, 0] > 0.0, 1.0, -1.0), Task.CLASSIFICATION)
      seconds.append(median_sweep_seconds(data, basis))
    assert 0.7 <= loglog_slope(sizes, seconds) <= 1.3

  def test_quadratic_in_basis_size(self):
    # the per-site cost is a + b M^2; a, measured at M = 2, is subtracted before fitting the slope
    rng = np.random.default_rng(1)
    xs = rng.standard_normal((2000, 2))
    data = Dataset(xs, np.where(xs[:, 1] > 0.0, 1.0, -1.0), Task.CLASSIFICATION)

    def sweep_seconds(m: int) -> float:
      return median_sweep_seconds(data, sphere_basis(rng.uniform(-30.0, 30.0, size=(m, 2)), 0.5))

    overhead = sweep_seconds(2)
    sizes = [ 100, 200, 400 ]
    seconds = [ sweep_seconds(m) - overhead for m in sizes ]
    assert min(seconds) > 0.0
    assert 1.6 <= loglog_slope(sizes, seconds) <= 2.4
