# Copyright (c) 2022 Amigos Development Inc.
#
# MIT License - See LICENSE file accompanying this package.
#

"""Gaussian kernel, its blurred (convolved) variants, and a quadrature oracle for the closed forms.

A blurred basis point b = (a, c) stands for the Gaussian density N(x | a, c). Convolving the
Gaussian kernel K(x, x') = exp(-|x - x'|^2 / (2 eta^2)) with it once gives the cross kernel

    K~(x, b) = (2 pi eta^2)^(d/2) N(x | a, c + eta^2 I)

and convolving twice gives the blurred Gram entries

    K^_ij = (2 pi eta^2)^(d/2) N(a_i | a_j, c_i + c_j + eta^2 I).

A zero local covariance ("delta" blur) reduces both to plain kernel evaluations.
"""

from .logging import logger

from typing import Optional, List, Sequence, Tuple, Union, Iterator
from .internal_types import FloatArray, ArrayLike

import enum
import math
import functools
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg
from scipy.spatial.distance import cdist

from .constants import (
    JITTER_START_REL,
    JITTER_MAX_REL,
    JITTER_GROWTH,
    QUADRATURE_HALF_WIDTH,
    QUADRATURE_TOL,
  )
from .exceptions import (
    DataError,
    DimensionMismatchError,
    GramFactorizationError,
    GridTooCoarseError,
  )
from .util import as_vector, as_matrix, symmetrize

class BlurMode(str, enum.Enum):
  """How cluster covariances become local covariances of the basis."""
  DELTA = 'delta'
  """Zero local covariance; point evaluations of f"""
  SPHERE = 'sphere'
  """Isotropic local covariance (trace/d) * I"""
  FULL = 'full'
  """The full local covariance"""

@dataclass(frozen=True)
class KernelParams:
  eta: float = 1.0
  """Length scale of the Gaussian kernel"""

  def __post_init__(self):
    if not (math.isfinite(self.eta) and self.eta > 0.0):
      raise DataError(f"Kernel length scale eta must be positive and finite, got {self.eta}")

@dataclass(frozen=True, eq=False)
class BlurredBasisPoint:
  center: FloatArray
  local_cov: FloatArray

  def __post_init__(self):
    center = as_vector(self.center, what='basis center')
    d = center.shape[0]
    local_cov = np.asarray(self.local_cov, dtype=np.float64)
    if local_cov.shape != (d, d):
      raise DimensionMismatchError(d, local_cov.shape[0] if local_cov.ndim > 0 else 0, 'local covariance')
    object.__setattr__(self, 'center', center)
    object.__setattr__(self, 'local_cov', local_cov)

  @classmethod
  def delta(cls, center: ArrayLike) -> 'BlurredBasisPoint':
    center = as_vector(center, what='basis center')
    d = center.shape[0]
    return cls(center, np.zeros((d, d)))

  @classmethod
  def sphere(cls, center: ArrayLike, s: float) -> 'BlurredBasisPoint':
    center = as_vector(center, what='basis center')
    d = center.shape[0]
    return cls(center, float(s) * np.eye(d))

  @property
  def dim(self) -> int:
    return self.center.shape[0]

  @property
  def is_delta(self) -> bool:
    return not np.any(self.local_cov)

  def ellipse(self) -> Tuple[FloatArray, FloatArray]:
    """Eigen-decomposition of the local covariance.

    Returns:
        Tuple[FloatArray, FloatArray]: (eigenvalues ascending, eigenvectors as columns);
            eigenvalues are clipped at zero so their square roots are the standard-deviation axes.
    """
    evals, evecs = np.linalg.eigh(self.local_cov)
    return np.clip(evals, 0.0, None), evecs

def _check_psd(cov: FloatArray, index: int) -> None:
  if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.max(np.abs(cov))))):
    raise DataError(f"Local covariance of basis point {index} is not symmetric")
  evals = np.linalg.eigvalsh(symmetrize(cov))
  scale = max(1.0, float(np.max(np.abs(evals))))
  if evals[0] < -1e-12 * scale:
    raise DataError(f"Local covariance of basis point {index} is not positive semi-definite (min eigenvalue {evals[0]:.3g})")

class Basis:
  """M blurred basis points sharing a Gaussian kernel.

  The points are immutable; stacked arrays and per-point factorizations are computed lazily
  and cached.
  """
  points: List[BlurredBasisPoint]
  kernel: KernelParams
  blur_mode: Optional[BlurMode]

  def __init__(self, points: Sequence[BlurredBasisPoint], kernel: KernelParams, blur_mode: Optional[BlurMode]=None):
    points = list(points)
    if len(points) < 1:
      raise DataError("A basis needs at least one point")
    d = points[0].dim
    for i, p in enumerate(points):
      if p.dim != d:
        raise DimensionMismatchError(d, p.dim, f'center of basis point {i}')
      _check_psd(p.local_cov, i)
    self.points = points
    self.kernel = kernel
    self.blur_mode = None if blur_mode is None else BlurMode(blur_mode)

  @classmethod
  def from_arrays(
        cls,
        centers: ArrayLike,
        local_covs: Optional[ArrayLike],
        kernel: KernelParams,
        blur_mode: Optional[BlurMode]=None
      ) -> 'Basis':
    centers = as_matrix(centers, what='basis centers')
    m, d = centers.shape
    if local_covs is None:
      covs = np.zeros((m, d, d))
    else:
      covs = np.asarray(local_covs, dtype=np.float64).reshape(m, d, d)
    return cls([ BlurredBasisPoint(centers[i], covs[i]) for i in range(m) ], kernel, blur_mode=blur_mode)

  def __len__(self) -> int:
    return len(self.points)

  def __iter__(self) -> Iterator[BlurredBasisPoint]:
    return iter(self.points)

  @property
  def size(self) -> int:
    return len(self.points)

  @property
  def dim(self) -> int:
    return self.points[0].dim

  @cached_property
  def centers(self) -> FloatArray:
    return np.stack([ p.center for p in self.points ])

  @cached_property
  def local_covs(self) -> FloatArray:
    return np.stack([ p.local_cov for p in self.points ])

  @cached_property
  def _cross_whiteners(self) -> Tuple[FloatArray, FloatArray]:
    """Per-point inverse Cholesky factors of (c_j + eta^2 I) and the log normalizers of K~."""
    d = self.dim
    eta2 = self.kernel.eta ** 2
    s = self.local_covs + eta2 * np.eye(d)
    chol = np.linalg.cholesky(s)
    whiteners = np.stack([ scipy.linalg.solve_triangular(l, np.eye(d), lower=True) for l in chol ])
    log_det = 2.0 * np.sum(np.log(np.diagonal(chol, axis1=1, axis2=2)), axis=1)
    log_norm = 0.5 * d * math.log(eta2) - 0.5 * log_det
    return whiteners, log_norm

def kernel_eval(x: ArrayLike, x2: ArrayLike, params: KernelParams) -> float:
  x = as_vector(x, what='x')
  x2 = as_vector(x2, dim=x.shape[0], what='x2')
  diff = x - x2
  return math.exp(-float(diff @ diff) / (2.0 * params.eta ** 2))

def kernel_matrix(xs: ArrayLike, xs2: ArrayLike, params: KernelParams) -> FloatArray:
  xs = as_matrix(xs, what='inputs')
  xs2 = as_matrix(xs2, dim=xs.shape[1], what='inputs')
  sq = cdist(xs, xs2, metric='sqeuclidean')
  return np.exp(-sq / (2.0 * params.eta ** 2))

def blurred_cross_kernel_matrix(xs: ArrayLike, basis: Basis) -> FloatArray:
  """K~(X, B) for many inputs at once.

  Args:
      xs (ArrayLike): N x d inputs (a single d-vector is accepted as one row)
      basis (Basis): the blurred basis

  Returns:
      FloatArray: N x M matrix with entry (n, j) = K~(x_n, b_j)
  """
  xs = as_matrix(xs, dim=basis.dim, what='inputs')
  whiteners, log_norm = basis._cross_whiteners  # pylint: disable=protected-access
  diff = xs[:, None, :] - basis.centers[None, :, :]
  z = np.einsum('mde,nme->nmd', whiteners, diff)
  maha = np.sum(z * z, axis=-1)
  return np.exp(log_norm[None, :] - 0.5 * maha)

def blurred_cross_kernel(x: ArrayLike, basis: Basis) -> FloatArray:
  """K~(x, B) for a single input; entry j is (2 pi eta^2)^(d/2) N(x | a_j, c_j + eta^2 I)."""
  x = as_vector(x, dim=basis.dim, what='x')
  return blurred_cross_kernel_matrix(x, basis)[0]

def blurred_gram(basis: Basis) -> FloatArray:
  """The M x M blurred Gram matrix K^; exactly symmetric."""
  m = basis.size
  d = basis.dim
  eta2 = basis.kernel.eta ** 2
  centers = basis.centers
  covs = basis.local_covs
  khat = np.empty((m, m))
  for i in range(m):
    s = covs[i][None, :, :] + covs[i:] + eta2 * np.eye(d)
    diff = centers[i][None, :] - centers[i:]
    sol = np.linalg.solve(s, diff[:, :, None])[:, :, 0]
    maha = np.sum(diff * sol, axis=1)
    _, log_det = np.linalg.slogdet(s)
    row = np.exp(0.5 * d * math.log(eta2) - 0.5 * log_det - 0.5 * maha)
    khat[i, i:] = row
    khat[i:, i] = row
  return khat

@dataclass(frozen=True)
class GramFactor:
  """Cholesky factor of K^ + jitter * I."""
  cho: Tuple[FloatArray, bool]
  jitter: float

  @property
  def lower(self) -> FloatArray:
    c, lower = self.cho
    return np.tril(c) if lower else np.triu(c).T

  def solve(self, b: ArrayLike) -> FloatArray:
    return scipy.linalg.cho_solve(self.cho, np.asarray(b, dtype=np.float64))

def _try_cholesky(a: FloatArray) -> Optional[Tuple[FloatArray, bool]]:
  try:
    cho = scipy.linalg.cho_factor(a, lower=True, check_finite=True)
  except np.linalg.LinAlgError:
    return None
  pivots = np.diagonal(cho[0]) ** 2
  # exactly singular matrices can slip through with a round-off sized pivot
  if pivots.min() <= np.finfo(np.float64).eps * pivots.max() * a.shape[0]:
    return None
  return cho

def factorize_gram(khat: ArrayLike, jitter: Optional[float]=None) -> GramFactor:
  """Cholesky-factorizes khat + jitter * I, escalating the jitter on failure.

  Args:
      khat (ArrayLike): symmetric M x M matrix
      jitter (Optional[float], optional): Initial absolute jitter. None uses the default of
          1e-8 * trace(khat) / M. A jitter of exactly 0 is tried once with no escalation.
          Otherwise the jitter grows by 10x per failed attempt up to 1e-2 * trace(khat) / M.

  Raises:
      GramFactorizationError: no attempt succeeded

  Returns:
      GramFactor: the factor and the jitter that was actually used
  """
  khat = symmetrize(as_matrix(khat, what='Gram matrix'))
  m = khat.shape[0]
  if khat.shape[1] != m:
    raise DataError(f"Gram matrix must be square, got shape {khat.shape}")
  scale = float(np.trace(khat)) / m
  if jitter is None:
    jitter = JITTER_START_REL * scale
  if jitter < 0.0:
    raise DataError(f"Jitter must be nonnegative, got {jitter}")
  max_jitter = max(jitter, JITTER_MAX_REL * scale)
  eye = np.eye(m)
  current = jitter
  while True:
    cho = _try_cholesky(khat + current * eye)
    if cho is not None:
      if current > jitter:
        logger.debug(f"Gram factorization needed jitter {current:.3g} (requested {jitter:.3g})")
      return GramFactor(cho, current)
    if current == 0.0 or current >= max_jitter:
      break
    current = min(current * JITTER_GROWTH, max_jitter)
  raise GramFactorizationError(
      f"Blurred Gram matrix ({m}x{m}) is not positive definite with jitter up to {current:.3g}; "
      "the basis is ill-conditioned (duplicate centers?)"
    )

# ---------------------------------------------------------------------------- quadrature oracle

@dataclass(frozen=True)
class QuadratureGrid:
  """Truncated trapezoid grid in whitened coordinates t, x = a + U sqrt(L) t."""
  half_width: float = QUADRATURE_HALF_WIDTH
  num_points: Optional[int] = None
  """Points per axis (odd). None picks a size from the total integration dimension."""
  tol: float = QUADRATURE_TOL
  """Largest tolerated disagreement between the step-h and step-2h results"""

  def points_for(self, total_dim: int) -> int:
    n = self.num_points
    if n is None:
      n = { 1: 4001, 2: 401 }.get(total_dim, 61)
    if n % 2 == 0:
      n += 1
    return n

def _whitened_nodes(point: BlurredBasisPoint, t: FloatArray) -> FloatArray:
  """Maps standard-normal coordinates t (K x d) to input space for the density N(x | a, c)."""
  evals, evecs = point.ellipse()
  return point.center[None, :] + (t * np.sqrt(evals)[None, :]) @ evecs.T

def _axis_weights(n: int, half_width: float, step: int) -> Tuple[FloatArray, FloatArray]:
  t = np.linspace(-half_width, half_width, n)[::step]
  h = t[1] - t[0]
  w = np.full(t.shape, h)
  w[0] *= 0.5
  w[-1] *= 0.5
  w *= np.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi)
  return t, w

def _expectation(
      points: Sequence[BlurredBasisPoint],
      fixed: Optional[FloatArray],
      kernel: KernelParams,
      grid: QuadratureGrid,
      step: int,
    ) -> float:
  """E[K(x, x')] where x and x' are drawn from the given blurred points (or fixed)."""
  blurred = [ p for p in points if not p.is_delta ]
  total_dim = sum(p.dim for p in blurred)
  n = grid.points_for(total_dim)
  t, w = _axis_weights(n, grid.half_width, step)

  def node_set(p: BlurredBasisPoint) -> Tuple[FloatArray, FloatArray]:
    if p.is_delta:
      return p.center[None, :], np.ones(1)
    mesh = np.stack([ g.ravel() for g in np.meshgrid(*([ t ] * p.dim), indexing='ij') ], axis=1)
    weights = functools.reduce(np.multiply.outer, [ w ] * p.dim).ravel()
    return _whitened_nodes(p, mesh), weights

  if fixed is not None:
    nodes, weights = node_set(points[0])
    return float(weights @ kernel_matrix(nodes, fixed, kernel)[:, 0])

  nodes_i, weights_i = node_set(points[0])
  nodes_j, weights_j = node_set(points[1])
  total = 0.0
  chunk = max(1, 2_000_000 // max(1, nodes_j.shape[0]))
  for start in range(0, nodes_i.shape[0], chunk):
    k = kernel_matrix(nodes_i[start:start + chunk], nodes_j, kernel)
    total += float(weights_i[start:start + chunk] @ k @ weights_j)
  return total

def quadrature_oracle(
      first: Union[ArrayLike, BlurredBasisPoint],
      second: BlurredBasisPoint,
      kernel: KernelParams,
      grid: Optional[QuadratureGrid]=None,
    ) -> float:
  """Numerically integrates the defining integral of K~ (first is an input x) or K^ (first is a basis point).

  Only intended for d <= 2. The result on the full grid is compared with the result on every
  other node (step 2h); a disagreement larger than grid.tol means the grid is too coarse.

  Raises:
      GridTooCoarseError: the two grids disagree
      DataError: dimension above 2 or mismatched

  Returns:
      float: the integral evaluated on the full grid
  """
  if grid is None:
    grid = QuadratureGrid()
  d = second.dim
  if d > 2:
    raise DataError(f"The quadrature oracle supports d <= 2, got d={d}")
  if isinstance(first, BlurredBasisPoint):
    if first.dim != d:
      raise DimensionMismatchError(d, first.dim, 'basis point')
    points: List[BlurredBasisPoint] = [ first, second ]
    fixed = None
  else:
    fixed = as_vector(first, dim=d, what='x')
    points = [ second ]
  fine = _expectation(points, fixed, kernel, grid, step=1)
  coarse = _expectation(points, fixed, kernel, grid, step=2)
  if abs(fine - coarse) > grid.tol:
    raise GridTooCoarseError(f"Quadrature refinement disagreement {abs(fine - coarse):.3g} exceeds {grid.tol:.3g}")
  return fine
