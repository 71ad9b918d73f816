# Copyright (c) 2022 Amigos Development Inc.
#
# MIT License - See LICENSE file accompanying this package.
#

"""Full (non-sparse) GP references and the metrics used to compare models against them"""

from .logging import logger

from typing import Optional, Tuple, Union
from .internal_types import FloatArray, ArrayLike

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .constants import KL_VARIANCE_FLOOR, PROBABILITY_CLAMP
from .dataset import Dataset, Task
from .ep import EpConfig, FitReport, ep_fit
from .exceptions import DataError, GramFactorizationError, UsageError
from .kernels import Basis, BlurMode, KernelParams, kernel_matrix
from .likelihoods import ClassificationLik, Likelihood, RegressionLik, predictive_class_prob
from .posterior import SparsePosterior, clamp_variance, predict_mean_var
from .util import as_matrix, sequential_sum

@dataclass(eq=False)
class FullGpModel:
  """Predictive process over all N training inputs: m(x) = k(x)^T w, v(x) = 1 - k(x)^T R k(x)."""
  train_inputs: FloatArray
  kernel: KernelParams
  weights: FloatArray
  reduction: FloatArray
  likelihood: Optional[Likelihood]
  """None for noise-free regression"""
  report: Optional[FitReport] = None

  @property
  def task(self) -> Task:
    return Task.CLASSIFICATION if isinstance(self.likelihood, ClassificationLik) else Task.REGRESSION

  def predict_latent(self, xs: ArrayLike) -> Tuple[FloatArray, FloatArray]:
    xs = as_matrix(xs, dim=self.train_inputs.shape[1], what='inputs')
    k = kernel_matrix(xs, self.train_inputs, self.kernel)
    mean = k @ self.weights
    var = 1.0 - np.einsum('nm,mk,nk->n', k, self.reduction, k)
    return mean, clamp_variance(var)

@dataclass(eq=False)
class SparseModel:
  """A fitted sparse posterior together with the likelihood it was fitted with."""
  posterior: SparsePosterior
  likelihood: Likelihood
  report: Optional[FitReport] = None

  @property
  def task(self) -> Task:
    return Task.CLASSIFICATION if isinstance(self.likelihood, ClassificationLik) else Task.REGRESSION

  def predict_latent(self, xs: ArrayLike) -> Tuple[FloatArray, FloatArray]:
    return predict_mean_var(self.posterior, xs)

Model = Union[FullGpModel, SparseModel]

def exact_gp_regression(data: Dataset, kernel: KernelParams, v_y: float) -> FullGpModel:
  """Gaussian conditioning on all training points.

  Raises:
      GramFactorizationError: K + v_y I is not positive definite (duplicate inputs with v_y = 0)
  """
  if data.size < 1:
    raise DataError("Exact GP regression needs at least one training point")
  if v_y < 0.0:
    raise DataError(f"Observation noise variance must be nonnegative, got {v_y}")
  k = kernel_matrix(data.inputs, data.inputs, kernel)
  try:
    cho = scipy.linalg.cho_factor(k + v_y * np.eye(data.size), lower=True)
  except np.linalg.LinAlgError as ex:
    raise GramFactorizationError(f"K + v_y I is not positive definite (v_y={v_y}): {ex}") from ex
  weights = scipy.linalg.cho_solve(cho, data.outputs)
  reduction = scipy.linalg.cho_solve(cho, np.eye(data.size))
  lik = RegressionLik(v_y) if v_y > 0.0 else None
  return FullGpModel(data.inputs.copy(), kernel, weights, 0.5 * (reduction + reduction.T), lik)

def full_gp_classification_ep(
      data: Dataset,
      kernel: KernelParams,
      epsilon: float,
      cfg: Optional[EpConfig]=None,
    ) -> FullGpModel:
  """EP with every training input as an unblurred basis point (M = N)."""
  lik = ClassificationLik(epsilon)
  basis = Basis.from_arrays(data.inputs, None, kernel, blur_mode=BlurMode.DELTA)
  post, _, report = ep_fit(data, basis, lik, cfg)
  # with a delta basis at the training inputs, K~(x, B) = k(x)
  return FullGpModel(data.inputs.copy(), kernel, post.alpha.copy(), post.beta.copy(), lik, report=report)

def predictive_y(model: Model, xs: ArrayLike) -> Union[FloatArray, Tuple[FloatArray, FloatArray]]:
  """Class probabilities of y = +1 (classification) or (mean, variance) of y (regression)."""
  mean, var = model.predict_latent(xs)
  lik = model.likelihood
  if isinstance(lik, ClassificationLik):
    return predictive_class_prob(mean, var, lik)
  if lik is None:
    return mean, var
  return lik.predictive_y(mean, var)

def bernoulli_kl(p: ArrayLike, q: ArrayLike) -> FloatArray:
  """Pointwise KL(Bernoulli(p) || Bernoulli(q)) after clamping to [1e-12, 1 - 1e-12]."""
  p = np.clip(np.asarray(p, dtype=np.float64), PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP)
  q = np.clip(np.asarray(q, dtype=np.float64), PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP)
  return p * np.log(p / q) + (1.0 - p) * np.log((1.0 - p) / (1.0 - q))

def gaussian_kl(m1: ArrayLike, v1: ArrayLike, m2: ArrayLike, v2: ArrayLike) -> FloatArray:
  """Pointwise KL(N(m1, v1) || N(m2, v2)) with both variances floored at 1e-12.

  A noise-free reference has zero variance at its training inputs; the floor keeps the
  divergence finite there.
  """
  m1, m2 = np.asarray(m1, dtype=np.float64), np.asarray(m2, dtype=np.float64)
  v1 = np.maximum(np.asarray(v1, dtype=np.float64), KL_VARIANCE_FLOOR)
  v2 = np.maximum(np.asarray(v2, dtype=np.float64), KL_VARIANCE_FLOOR)
  return 0.5 * (np.log(v2 / v1) + (v1 + (m1 - m2) ** 2) / v2 - 1.0)

def kl_predictive(reference: Model, approx: Model, xs: ArrayLike, approx_xs: Optional[ArrayLike]=None) -> float:
  """Sum over test inputs of KL(p(y | x) || q(y | x)), p from the reference and q from the approximation.

  approx_xs, when given, holds the same test inputs in the units the approximation was fitted in.
  """
  if reference.task != approx.task:
    raise UsageError(f"Cannot compare a {reference.task.value} model with a {approx.task.value} model")
  if approx_xs is None:
    approx_xs = xs
  if reference.task == Task.CLASSIFICATION:
    terms = bernoulli_kl(predictive_y(reference, xs), predictive_y(approx, approx_xs))
  else:
    m1, v1 = predictive_y(reference, xs)
    m2, v2 = predictive_y(approx, approx_xs)
    terms = gaussian_kl(m1, v1, m2, v2)
  return max(0.0, sequential_sum(terms))

def error_rate_from_probs(probs: ArrayLike, labels: ArrayLike) -> float:
  """Fraction of points where sign(prob - 0.5) disagrees with the label; prob = 0.5 is an error."""
  probs = np.asarray(probs, dtype=np.float64)
  labels = np.asarray(labels, dtype=np.float64)
  if labels.shape[0] == 0:
    raise UsageError("Cannot compute an error rate on an empty test set")
  return float(np.mean(np.sign(probs - 0.5) != labels))

def error_rate(model: Model, test: Dataset) -> float:
  if model.task != Task.CLASSIFICATION or test.task != Task.CLASSIFICATION:
    raise UsageError("Error rate needs a classification model and classification test data")
  if test.size == 0:
    raise UsageError("Cannot compute an error rate on an empty test set")
  return error_rate_from_probs(predictive_y(model, test.inputs), test.outputs)

def rmse(model: Model, test: Dataset) -> float:
  if test.size == 0:
    raise UsageError("Cannot compute RMSE on an empty test set")
  mean, _ = model.predict_latent(test.inputs)
  return float(np.sqrt(np.mean((mean - test.outputs) ** 2)))

def mean_rmse(reference: Model, approx: Model, xs: ArrayLike) -> float:
  """RMSE between the two models' latent predictive means."""
  m1, _ = reference.predict_latent(xs)
  m2, _ = approx.predict_latent(xs)
  return float(np.sqrt(np.mean((m1 - m2) ** 2)))

def fit_sparse(
      data: Dataset,
      basis: Basis,
      lik: Likelihood,
      cfg: Optional[EpConfig]=None,
    ) -> SparseModel:
  post, _, report = ep_fit(data, basis, lik, cfg)
  return SparseModel(post, lik, report)

def fit_full(data: Dataset, kernel: KernelParams, lik: Likelihood, cfg: Optional[EpConfig]=None) -> FullGpModel:
  """The reference model matching the likelihood: exact regression or full EP classification."""
  if isinstance(lik, RegressionLik):
    return exact_gp_regression(data, kernel, lik.v_y)
  return full_gp_classification_ep(data, kernel, lik.epsilon, cfg)
