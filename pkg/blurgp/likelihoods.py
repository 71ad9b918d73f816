# Copyright (c) 2022 Amigos Development Inc.
#
# MIT License - See LICENSE file accompanying this package.
#

"""Site models: the normalizer Z = integral of N(f | m, v) p(y | f) df and its derivatives in m.

Two likelihoods are supported:

* regression, p(y | f) = N(y | f, v_y)
* classification with labeling error, p(y | f) = eps + (1 - 2 eps) step(y f)

Regression and noise-free classification (eps = 0) are log-concave, so d2logz_dm2 < 0. With eps > 0
the flip floor makes log Z convex far on the wrong side of the boundary, and d2logz_dm2 turns
positive there.
"""

from .logging import logger

from typing import Union, Tuple
from .internal_types import FloatArray, ArrayLike

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx, log_ndtr, ndtr

from .constants import PREDICTIVE_VARIANCE_GUARD
from .exceptions import DataError, DegenerateSiteError

_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
_LOG_2PI = math.log(2.0 * math.pi)

@dataclass(frozen=True)
class SiteDerivatives:
  log_z: float
  dlogz_dm: float
  d2logz_dm2: float

  def tilted_moments(self, m: float, v: float) -> Tuple[float, float]:
    """Mean and variance of the tilted marginal N(f | m, v) p(y | f) / Z."""
    return m + v * self.dlogz_dm, v + v * v * self.d2logz_dm2

@dataclass(frozen=True)
class RegressionLik:
  v_y: float
  """Observation noise variance"""

  kind = 'regression'

  def __post_init__(self):
    if not (math.isfinite(self.v_y) and self.v_y > 0.0):
      raise DataError(f"Observation noise variance v_y must be positive, got {self.v_y}")

  def site_derivs(self, m: float, v: float, y: float) -> SiteDerivatives:
    return site_derivs_regression(m, v, y, self)

  def check_targets(self, y: ArrayLike) -> None:
    if not np.all(np.isfinite(np.asarray(y, dtype=np.float64))):
      raise DataError("Regression outputs must be finite")

  def predictive_y(self, m: FloatArray, v: FloatArray) -> Tuple[FloatArray, FloatArray]:
    """Mean and variance of the predictive distribution of y."""
    return m, v + self.v_y

@dataclass(frozen=True)
class ClassificationLik:
  epsilon: float
  """Probability that a label is flipped"""

  kind = 'classification'

  def __post_init__(self):
    if not (0.0 <= self.epsilon < 0.5):
      raise DataError(f"Labeling error epsilon must lie in [0, 0.5), got {self.epsilon}")

  def site_derivs(self, m: float, v: float, y: float) -> SiteDerivatives:
    return site_derivs_classification(m, v, y, self)

  def check_targets(self, y: ArrayLike) -> None:
    y = np.asarray(y, dtype=np.float64)
    if not np.all((y == 1.0) | (y == -1.0)):
      raise DataError("Classification labels must be -1 or +1")

  def predictive_y(self, m: FloatArray, v: FloatArray) -> FloatArray:
    """Probability of y = +1."""
    return predictive_class_prob(m, v, self)

Likelihood = Union[RegressionLik, ClassificationLik]

def site_derivs_regression(m: float, v: float, y: float, lik: RegressionLik) -> SiteDerivatives:
  s = lik.v_y + v
  if not s > 0.0:
    raise DegenerateSiteError(f"Regression site has nonpositive predictive variance v_y + v = {s:.3g}")
  r = y - m
  return SiteDerivatives(
      log_z=-0.5 * (_LOG_2PI + math.log(s)) - 0.5 * r * r / s,
      dlogz_dm=r / s,
      d2logz_dm2=-1.0 / s,
    )

def inverse_mills_ratio(z: ArrayLike) -> FloatArray:
  """N(z | 0, 1) / Psi(z), computed through the scaled complementary error function.

  Stays accurate for strongly negative z, where the ratio approaches -z.
  """
  z = np.asarray(z, dtype=np.float64)
  return _SQRT_2_OVER_PI / erfcx(-z / math.sqrt(2.0))

def classification_log_z(z: ArrayLike, epsilon: float) -> FloatArray:
  """log(eps + (1 - 2 eps) Psi(z))."""
  log_psi = log_ndtr(np.asarray(z, dtype=np.float64))
  if epsilon == 0.0:
    return log_psi
  return np.logaddexp(math.log(epsilon), math.log1p(-2.0 * epsilon) + log_psi)

def site_derivs_classification(m: float, v: float, y: float, lik: ClassificationLik) -> SiteDerivatives:
  if y not in (1.0, -1.0):
    raise DataError(f"Classification label must be -1 or +1, got {y}")
  if not v > 0.0:
    raise DegenerateSiteError(f"Classification site needs a positive cavity variance, got {v:.3g}")
  eps = lik.epsilon
  sqrt_v = math.sqrt(v)
  z = m * y / sqrt_v
  log_z = float(classification_log_z(z, eps))
  if not math.isfinite(log_z):
    raise DegenerateSiteError(f"Classification site normalizer vanishes (z = {z:.3g})")
  # Psi(z) / Z, in [0, 1 / (1 - 2 eps)]
  psi_over_z = math.exp(float(log_ndtr(z)) - log_z)
  gamma = (1.0 - 2.0 * eps) * float(inverse_mills_ratio(z)) * psi_over_z / sqrt_v
  return SiteDerivatives(
      log_z=log_z,
      dlogz_dm=gamma * y,
      d2logz_dm2=-gamma * (m * y + v * gamma) / v,
    )

def predictive_class_prob(m: ArrayLike, v: ArrayLike, lik: ClassificationLik) -> FloatArray:
  """Probability of y = +1 when f ~ N(m, v): eps + (1 - 2 eps) Psi(m / sqrt(v))."""
  m = np.asarray(m, dtype=np.float64)
  v = np.asarray(v, dtype=np.float64)
  eps = lik.epsilon
  return eps + (1.0 - 2.0 * eps) * ndtr(m / np.sqrt(v + PREDICTIVE_VARIANCE_GUARD))
