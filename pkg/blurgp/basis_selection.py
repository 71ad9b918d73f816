# Copyright (c) 2022 Amigos Development Inc.
#
# MIT License - See LICENSE file accompanying this package.
#

"""Choosing a blurred basis by K-means on the training inputs.

Cluster means become basis centers and cluster covariances become local covariances,
reduced according to the blur mode.
"""

from .logging import logger

from typing import List, Optional, Sequence, Tuple
from .internal_types import FloatArray, IntArray, ArrayLike

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .constants import KMEANS_RESTARTS, KMEANS_MAX_ITERS, COV_FLOOR_REL
from .exceptions import DataError, UsageError
from .kernels import Basis, BlurMode, BlurredBasisPoint, KernelParams
from .util import as_matrix

@dataclass(frozen=True, eq=False)
class ClusterSummary:
  mean: FloatArray
  cov: FloatArray
  """Unbiased sample covariance; zero for a singleton"""
  count: int

@dataclass
class LloydRun:
  seed: int
  means: FloatArray
  labels: IntArray
  objective: float
  history: List[float] = field(default_factory=list)
  """Objective after every Lloyd iteration; non-increasing"""
  iterations: int = 0

def _objective(xs: FloatArray, means: FloatArray, labels: IntArray) -> float:
  diff = xs - means[labels]
  return float(np.sum(diff * diff))

def kmeans_plus_plus(xs: FloatArray, m: int, rng: np.random.Generator) -> FloatArray:
  """k-means++ seeding: each new center is drawn with probability proportional to D^2."""
  n = xs.shape[0]
  chosen = [ int(rng.integers(n)) ]
  d2 = cdist(xs, xs[chosen], metric='sqeuclidean')[:, 0]
  for _ in range(1, m):
    total = float(np.sum(d2))
    if total > 0.0:
      idx = int(rng.choice(n, p=d2 / total))
    else:
      idx = int(rng.integers(n))
    chosen.append(idx)
    d2 = np.minimum(d2, cdist(xs, xs[idx:idx + 1], metric='sqeuclidean')[:, 0])
  return xs[chosen].copy()

def _update_means(xs: FloatArray, labels: IntArray, m: int, old_means: FloatArray) -> FloatArray:
  means = old_means.copy()
  counts = np.bincount(labels, minlength=m)
  for k in range(m):
    if counts[k] > 0:
      means[k] = xs[labels == k].mean(axis=0)
  empty = np.flatnonzero(counts == 0)
  for k in empty:
    # reseed at the point farthest from its assigned mean, never emptying another cluster
    dist = np.sum((xs - means[labels]) ** 2, axis=1)
    dist[counts[labels] <= 1] = -1.0
    far = int(np.argmax(dist))
    if dist[far] < 0.0:
      break
    counts[labels[far]] -= 1
    labels[far] = k
    counts[k] = 1
    means[k] = xs[far]
    logger.debug(f"k-means: reseeded empty cluster {k} at point {far}")
  return means

def run_lloyd(xs: FloatArray, m: int, seed: int, max_iters: int=KMEANS_MAX_ITERS) -> LloydRun:
  """One k-means++ seeded run of Lloyd's algorithm."""
  rng = np.random.default_rng(seed)
  means = kmeans_plus_plus(xs, m, rng)
  labels = np.argmin(cdist(xs, means, metric='sqeuclidean'), axis=1)
  run = LloydRun(seed=seed, means=means, labels=labels, objective=_objective(xs, means, labels))
  for it in range(max_iters):
    means = _update_means(xs, labels, m, means)
    run.history.append(_objective(xs, means, labels))
    run.iterations = it + 1
    new_labels = np.argmin(cdist(xs, means, metric='sqeuclidean'), axis=1)
    if np.array_equal(new_labels, labels):
      break
    labels = new_labels
  run.means = means
  run.labels = labels
  run.objective = _objective(xs, means, labels)
  return run

def summarize_clusters(xs: FloatArray, labels: IntArray, m: int) -> List[ClusterSummary]:
  d = xs.shape[1]
  result: List[ClusterSummary] = []
  for k in range(m):
    members = xs[labels == k]
    count = members.shape[0]
    if count == 0:
      raise DataError(f"k-means produced an empty cluster {k}")
    if count == 1:
      cov = np.zeros((d, d))
    else:
      cov = np.atleast_2d(np.cov(members, rowvar=False, ddof=1)).reshape(d, d)
    result.append(ClusterSummary(members.mean(axis=0), cov, count))
  return result

def kmeans(
      inputs: ArrayLike,
      m: int,
      seed: int=0,
      max_iters: int=KMEANS_MAX_ITERS,
      restarts: int=KMEANS_RESTARTS,
    ) -> List[ClusterSummary]:
  """K-means clustering of the training inputs.

  Runs Lloyd's algorithm from k-means++ seeds seed, seed+1, ..., seed+restarts-1 and keeps the
  run with the lowest objective (ties go to the lowest seed).

  Args:
      inputs (ArrayLike): N x d inputs
      m (int): number of clusters, 1 <= m <= N
      seed (int, optional): first seed. Defaults to 0.
      max_iters (int, optional): Lloyd iterations per run. Defaults to 100.
      restarts (int, optional): number of seeded runs. Defaults to 5.

  Raises:
      DataError: no inputs
      UsageError: m outside [1, N]

  Returns:
      List[ClusterSummary]: m clusters with means, unbiased covariances and counts
  """
  xs = as_matrix(inputs, what='inputs')
  n = xs.shape[0]
  if n == 0:
    raise DataError("Cannot cluster an empty input set")
  if m < 1 or m > n:
    raise UsageError(f"Number of basis points must lie in [1, N={n}], got {m}")
  best: Optional[LloydRun] = None
  for s in range(seed, seed + max(1, restarts)):
    run = run_lloyd(xs, m, s, max_iters)
    logger.debug(f"k-means seed {s}: objective {run.objective:.6g} after {run.iterations} iterations")
    if best is None or run.objective < best.objective:
      best = run
  assert best is not None
  return summarize_clusters(xs, best.labels, m)

def default_cov_floor(inputs: ArrayLike) -> float:
  """1e-6 * (median pairwise squared distance) / d."""
  xs = as_matrix(inputs, what='inputs')
  if xs.shape[0] < 2:
    return 0.0
  return COV_FLOOR_REL * float(np.median(pdist(xs, metric='sqeuclidean'))) / xs.shape[1]

def build_basis(
      clusters: Sequence[ClusterSummary],
      mode: BlurMode,
      kernel: KernelParams,
      cov_floor: float=0.0,
    ) -> Basis:
  """Turns clusters into a basis: centers are cluster means; local covariances follow the mode.

  delta: zero; sphere: (trace(cov) / d) I; full: cov + cov_floor I.
  """
  mode = BlurMode(mode)
  points: List[BlurredBasisPoint] = []
  for c in clusters:
    d = c.mean.shape[0]
    if mode == BlurMode.DELTA:
      local_cov = np.zeros((d, d))
    elif mode == BlurMode.SPHERE:
      local_cov = (np.trace(c.cov) / d) * np.eye(d)
    else:
      local_cov = c.cov + cov_floor * np.eye(d)
    points.append(BlurredBasisPoint(c.mean, local_cov))
  return Basis(points, kernel, blur_mode=mode)

def select_basis(
      inputs: ArrayLike,
      m: int,
      mode: BlurMode,
      kernel: KernelParams,
      seed: int=0,
      cov_floor: Optional[float]=None,
    ) -> Basis:
  """kmeans followed by build_basis; cov_floor defaults to default_cov_floor(inputs)."""
  clusters = kmeans(inputs, m, seed=seed)
  if cov_floor is None:
    cov_floor = default_cov_floor(inputs)
  return build_basis(clusters, mode, kernel, cov_floor)

def bases_for_modes(
      clusters: Sequence[ClusterSummary],
      modes: Sequence[BlurMode],
      kernel: KernelParams,
      cov_floor: float,
    ) -> List[Tuple[BlurMode, Basis]]:
  """Bases sharing the same clusters, one per blur mode."""
  return [ (BlurMode(mode), build_basis(clusters, mode, kernel, cov_floor)) for mode in modes ]
