# Copyright (c) 2022 Amigos Development Inc.
#
# MIT License - See LICENSE file accompanying this package.
#

"""The sparse posterior process q(f), parameterized by (alpha, beta) over a blurred basis.

    m(x)     = K~(x, B) alpha
    V(x, x') = K(x, x') - K~(x, B) beta K~(B, x')

alpha = 0, beta = 0 is the GP prior. The pseudo-outputs and their noise are never
materialized; (alpha, beta) is the complete parameterization.
"""

from .logging import logger

from typing import Optional, Tuple
from .internal_types import FloatArray, ArrayLike

from dataclasses import dataclass

import numpy as np

from .constants import VARIANCE_CLAMP
from .exceptions import PosteriorInstabilityError
from .kernels import (
    Basis,
    GramFactor,
    blurred_gram,
    blurred_cross_kernel,
    blurred_cross_kernel_matrix,
    factorize_gram,
    kernel_eval,
  )
from .util import as_vector, as_matrix, symmetrize

@dataclass(eq=False)
class SparsePosterior:
  basis: Basis
  alpha: FloatArray
  beta: FloatArray
  khat: FloatArray
  """Cached blurred Gram matrix of the basis; shared, never modified"""
  khat_factor: GramFactor

  @classmethod
  def prior(cls, basis: Basis, jitter: Optional[float]=None) -> 'SparsePosterior':
    """The GP prior over a basis, with K^ computed and factorized once."""
    khat = blurred_gram(basis)
    factor = factorize_gram(khat, jitter)
    m = basis.size
    return cls(basis, np.zeros(m), np.zeros((m, m)), khat, factor)

  @property
  def size(self) -> int:
    return self.basis.size

  @property
  def dim(self) -> int:
    return self.basis.dim

  def copy(self) -> 'SparsePosterior':
    return SparsePosterior(self.basis, self.alpha.copy(), self.beta.copy(), self.khat, self.khat_factor)

@dataclass(frozen=True)
class BasisMoments:
  mean: FloatArray
  cov: FloatArray

def clamp_variance(v: FloatArray) -> FloatArray:
  """Clamps round-off sized negative variances to zero.

  Raises:
      PosteriorInstabilityError: a variance is below -1e-10
  """
  v = np.asarray(v, dtype=np.float64)
  worst = float(np.min(v)) if v.size > 0 else 0.0
  if worst < -VARIANCE_CLAMP:
    raise PosteriorInstabilityError(f"Predicted variance {worst:.3g} is negative; EP is unstable")
  if worst < 0.0:
    logger.debug(f"Clamped negative predicted variance {worst:.3g} to zero")
  return np.maximum(v, 0.0)

def predict_mean(post: SparsePosterior, x: ArrayLike) -> float:
  return float(blurred_cross_kernel(x, post.basis) @ post.alpha)

def predict_cov(post: SparsePosterior, x: ArrayLike, x2: ArrayLike) -> float:
  x = as_vector(x, dim=post.dim, what='x')
  x2 = as_vector(x2, dim=post.dim, what='x2')
  k1 = blurred_cross_kernel(x, post.basis)
  k2 = blurred_cross_kernel(x2, post.basis)
  result = kernel_eval(x, x2, post.basis.kernel) - float(k1 @ post.beta @ k2)
  if np.array_equal(x, x2):
    result = float(clamp_variance(np.array([result]))[0])
  return result

def predict_mean_var(post: SparsePosterior, xs: ArrayLike) -> Tuple[FloatArray, FloatArray]:
  """Predictive mean and variance of f at many inputs.

  Args:
      post (SparsePosterior): the posterior
      xs (ArrayLike): N x d inputs

  Returns:
      Tuple[FloatArray, FloatArray]: (means, variances), each of length N
  """
  xs = as_matrix(xs, dim=post.dim, what='inputs')
  kt = blurred_cross_kernel_matrix(xs, post.basis)
  mean = kt @ post.alpha
  # K(x, x) = 1 for the Gaussian kernel
  var = 1.0 - np.einsum('nm,mk,nk->n', kt, post.beta, kt)
  return mean, clamp_variance(var)

def basis_moments(post: SparsePosterior) -> BasisMoments:
  khat = post.khat
  return BasisMoments(khat @ post.alpha, symmetrize(khat - khat @ post.beta @ khat))

def projected_weight(post: SparsePosterior, x: ArrayLike) -> FloatArray:
  """p = K^^-1 K~(B, x), through the cached factorization."""
  return post.khat_factor.solve(blurred_cross_kernel(x, post.basis))

def projected_weights(post: SparsePosterior, xs: ArrayLike) -> FloatArray:
  """M x N matrix whose column n is the projected weight of xs[n]."""
  kt = blurred_cross_kernel_matrix(xs, post.basis)
  return post.khat_factor.solve(kt.T)
