# Copyright (c) 2022 Amigos Development Inc.
#
# MIT License - See LICENSE file accompanying this package.
#

"""Expectation propagation onto a blurred-basis sparse posterior.

Every training point i owns a Gaussian message on u_i = p_i^T g_B(f), with mean g_i and
precision tau_i, where p_i = K^^-1 K~(B, x_i). One site update is

  1. deletion: remove the message from q to get the cavity (alpha\\i, beta\\i)
  2. projection: match the moments of cavity * p(y_i | f) on the basis, a rank-1 update
  3. inclusion: store the message that reproduces the projection

With the posterior held as (alpha, beta), each step costs O(M^2) and a sweep O(M^2 N).
"""

from .logging import logger

from typing import Optional, Tuple, Dict, List, TYPE_CHECKING
from .internal_types import FloatArray, ArrayLike, JsonableDict

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .constants import (
    DEFAULT_CONVERGENCE_TOL,
    DEFAULT_MAX_SWEEPS,
    DEFAULT_DAMPING,
    DEGENERATE_CAVITY_TOL,
  )
from .exceptions import (
    DataError,
    UsageError,
    DegenerateCavityError,
    NegativeCavityVarianceError,
    NegativePosteriorVarianceError,
    DegenerateSiteError,
    EpDivergenceError,
    SiteSkipped,
  )
from .kernels import Basis, blurred_cross_kernel, blurred_cross_kernel_matrix
from .likelihoods import Likelihood, SiteDerivatives
from .posterior import SparsePosterior, basis_moments, projected_weights
from .util import as_vector, as_matrix

if TYPE_CHECKING:
  from .dataset import Dataset

@dataclass
class SiteMessages:
  g: FloatArray
  """Message means"""
  tau: FloatArray
  """Message precisions; may be negative for classification sites"""
  p: FloatArray
  """M x N projected weights; column i is p_i"""

  @classmethod
  def empty(cls, p: FloatArray) -> 'SiteMessages':
    n = p.shape[1]
    return cls(np.zeros(n), np.zeros(n), p)

  @property
  def size(self) -> int:
    return self.g.shape[0]

  def is_empty(self, i: int) -> bool:
    return self.tau[i] == 0.0

@dataclass
class EpConfig:
  max_sweeps: int = DEFAULT_MAX_SWEEPS
  convergence_tol: float = DEFAULT_CONVERGENCE_TOL
  """Threshold on the largest change of any g_i or tau_i over one sweep"""
  damping: float = DEFAULT_DAMPING
  jitter: Optional[float] = None
  """Absolute initial jitter for the Gram factorization; None means 1e-8 * trace(K^) / M"""
  site_order: str = 'natural'
  """'natural' or 'shuffled'"""
  shuffle_seed: Optional[int] = None
  raise_on_nonconvergence: bool = False

  def __post_init__(self):
    if self.max_sweeps < 1:
      raise UsageError(f"max_sweeps must be at least 1, got {self.max_sweeps}")
    if not self.convergence_tol > 0.0:
      raise UsageError(f"convergence_tol must be positive, got {self.convergence_tol}")
    if not 0.0 < self.damping <= 1.0:
      raise UsageError(f"damping must lie in (0, 1], got {self.damping}")
    if self.jitter is not None and self.jitter < 0.0:
      raise UsageError(f"jitter must be nonnegative, got {self.jitter}")
    if self.site_order not in ('natural', 'shuffled'):
      raise UsageError(f"site_order must be 'natural' or 'shuffled', got {self.site_order!r}")

@dataclass
class FitReport:
  num_points: int
  num_basis: int
  likelihood: str
  sweeps: int = 0
  converged: bool = False
  max_changes: List[float] = field(default_factory=list)
  sweep_seconds: List[float] = field(default_factory=list)
  skipped_per_sweep: List[int] = field(default_factory=list)
  skipped: Dict[str, int] = field(default_factory=dict)
  jitter: float = 0.0

  @property
  def final_max_change(self) -> float:
    return self.max_changes[-1] if len(self.max_changes) > 0 else math.inf

  @property
  def total_skipped(self) -> int:
    return sum(self.skipped.values())

  def to_jsonable(self) -> JsonableDict:
    return dict(
        num_points=self.num_points,
        num_basis=self.num_basis,
        likelihood=self.likelihood,
        sweeps=self.sweeps,
        converged=self.converged,
        final_max_change=self.final_max_change,
        max_changes=list(self.max_changes),
        sweep_seconds=list(self.sweep_seconds),
        skipped_per_sweep=list(self.skipped_per_sweep),
        skipped=dict(sorted(self.skipped.items())),
        jitter=self.jitter,
      )

# ---------------------------------------------------------------------------- single-site steps

def _rank_one(
      alpha: FloatArray,
      beta: FloatArray,
      h: FloatArray,
      da: float,
      db: float,
    ) -> Tuple[FloatArray, FloatArray]:
  # outer(h, h) is exactly symmetric, so a symmetric beta stays symmetric
  return alpha + h * da, beta + np.outer(h, h) * db

def _cavity(
      alpha: FloatArray,
      beta: FloatArray,
      k_i: FloatArray,
      p_i: FloatArray,
      g_i: float,
      tau_i: float,
    ) -> Tuple[FloatArray, FloatArray]:
  if tau_i == 0.0:
    return alpha, beta
  h = p_i - beta @ k_i
  c = float(k_i @ h)
  # -1/tau_i + K~(x_i, B) h, in a form that stays finite for tiny tau_i
  scaled = tau_i * c - 1.0
  if abs(scaled) <= DEGENERATE_CAVITY_TOL * abs(tau_i):
    raise DegenerateCavityError(f"Cavity denominator {scaled / tau_i:.3g} is zero")
  inv_denom = tau_i / scaled
  m = float(k_i @ alpha)
  return _rank_one(alpha, beta, h, (g_i - m) * inv_denom, inv_denom)

def cavity(post: SparsePosterior, sites: SiteMessages, i: int, x_i: ArrayLike) -> Tuple[FloatArray, FloatArray]:
  """Removes site i's message from q.

  A never-updated site (tau_i = 0) is the identity. Otherwise the message is divided out
  with the rank-1 deletion update through h\\i = p_i - beta K~(B, x_i).

  Raises:
      DegenerateCavityError: -1/tau_i + K~(x_i, B) h\\i is within 1e-12 of zero

  Returns:
      Tuple[FloatArray, FloatArray]: (alpha\\i, beta\\i)
  """
  k_i = blurred_cross_kernel(x_i, post.basis)
  alpha_cav, beta_cav = _cavity(post.alpha, post.beta, k_i, sites.p[:, i], float(sites.g[i]), float(sites.tau[i]))
  return alpha_cav.copy(), beta_cav.copy()

def _cavity_marginal(alpha_cav: FloatArray, beta_k: FloatArray, k_i: FloatArray) -> Tuple[float, float]:
  m = float(k_i @ alpha_cav)
  # K(x_i, x_i) = 1 for the Gaussian kernel
  v = 1.0 - float(k_i @ beta_k)
  if not v > 0.0:
    raise NegativeCavityVarianceError(f"Cavity variance {v:.3g} is not positive")
  return m, v

def cavity_marginal(basis: Basis, alpha_cav: FloatArray, beta_cav: FloatArray, x_i: ArrayLike) -> Tuple[float, float]:
  """Mean and variance of f(x_i) under the cavity.

  Raises:
      NegativeCavityVarianceError: the variance is not positive
  """
  k_i = blurred_cross_kernel(x_i, basis)
  return _cavity_marginal(alpha_cav, beta_cav @ k_i, k_i)

def cavity_direction(beta_cav: FloatArray, k_i: FloatArray, p_i: FloatArray) -> FloatArray:
  """h = p_i - beta\\i K~(B, x_i), which equals K^^-1 times the blurred cavity cross-covariance."""
  return p_i - beta_cav @ k_i

def project(
      basis: Basis,
      alpha_cav: FloatArray,
      beta_cav: FloatArray,
      x_i: ArrayLike,
      derivs: SiteDerivatives,
      p_i: FloatArray,
    ) -> Tuple[FloatArray, FloatArray]:
  """Moment-matches cavity * likelihood onto the basis.

  alpha = alpha\\i + h dlogZ/dm and beta = beta\\i - h d2logZ/dm2 h^T, with
  h = p_i - beta\\i K~(B, x_i). Derivatives must be taken against the cavity marginal at x_i.
  """
  h = cavity_direction(beta_cav, blurred_cross_kernel(x_i, basis), p_i)
  return _rank_one(alpha_cav, beta_cav, h, derivs.dlogz_dm, -derivs.d2logz_dm2)

def _inclusion_gain(m: float, c: float, g_i: float, tau_i: float) -> Tuple[float, float]:
  """Coefficients (da, db) of the rank-1 update that multiplies the cavity by N(u_i | g_i, 1/tau_i)."""
  if tau_i == 0.0:
    return 0.0, 0.0
  scaled = 1.0 + tau_i * c
  if abs(scaled) <= DEGENERATE_CAVITY_TOL * abs(tau_i):
    raise DegenerateSiteError("Message inclusion denominator is zero")
  gain = tau_i / scaled
  return (g_i - m) * gain, gain

def propose_message(derivs: SiteDerivatives, m: float, c: float) -> Tuple[float, float]:
  """The message (g_i, tau_i) whose inclusion into the cavity reproduces the projection.

  Args:
      derivs (SiteDerivatives): likelihood derivatives at the cavity marginal
      m (float): cavity mean at x_i
      c (float): K~(x_i, B) h, the cavity variance of u_i

  A positive d2logz_dm2 (non-log-concave sites, e.g. probit with eps > 0) gives a negative tau_i.

  Raises:
      DegenerateSiteError: d2logz_dm2 is zero or the result is not finite

  Returns:
      Tuple[float, float]: (g_i, tau_i)
  """
  d2 = derivs.d2logz_dm2
  if d2 == 0.0:
    raise DegenerateSiteError("Site second derivative is zero")
  neg_inv_d2 = -1.0 / d2
  site_var = neg_inv_d2 - c
  if site_var == 0.0:
    raise DegenerateSiteError("Proposed message has infinite precision")
  tau = 1.0 / site_var
  g = m + neg_inv_d2 * derivs.dlogz_dm
  if not (math.isfinite(tau) and math.isfinite(g)):
    raise DegenerateSiteError(f"Nonfinite message proposal (g={g}, tau={tau})")
  return g, tau

def damp_message(g_old: float, tau_old: float, g_new: float, tau_new: float, damping: float) -> Tuple[float, float]:
  """Interpolates messages in natural parameters (tau, tau * g)."""
  if damping == 1.0:
    return g_new, tau_new
  tau = damping * tau_new + (1.0 - damping) * tau_old
  nu = damping * tau_new * g_new + (1.0 - damping) * tau_old * g_old
  g = nu / tau if tau != 0.0 else g_new
  return g, tau

def update_message(
      sites: SiteMessages,
      i: int,
      derivs: SiteDerivatives,
      m: float,
      v: float,
      h: FloatArray,
      k_i: FloatArray,
      damping: float=1.0,
    ) -> Tuple[float, float]:
  """Stores the new message of site i and returns it.

  tau_i^-1 = (-d2logZ)^-1 - K~(x_i, B) h and g_i = m\\i + (-d2logZ)^-1 dlogZ, damped in
  natural parameters. v is unused; the likelihood enters only through derivs.

  Raises:
      DegenerateSiteError: the old message is kept
  """
  g_new, tau_new = propose_message(derivs, m, float(k_i @ h))
  g, tau = damp_message(float(sites.g[i]), float(sites.tau[i]), g_new, tau_new, damping)
  if not (math.isfinite(g) and math.isfinite(tau)):
    raise DegenerateSiteError(f"Nonfinite damped message (g={g}, tau={tau})")
  sites.g[i] = g
  sites.tau[i] = tau
  return g, tau

def message_log_normalizer(m: float, g_i: float, tau_i: float, c: float) -> float:
  """log of the surrogate normalizer: log N(g_i | m, 1/tau_i + c).

  Its first two derivatives in m equal those of the true site normalizer at the projection.
  """
  s = 1.0 / tau_i + c
  r = g_i - m
  return -0.5 * math.log(2.0 * math.pi * abs(s)) - 0.5 * r * r / s

# ---------------------------------------------------------------------------- the EP loop

def _site_update(
      post: SparsePosterior,
      sites: SiteMessages,
      i: int,
      k_i: FloatArray,
      y_i: float,
      lik: Likelihood,
      damping: float,
    ) -> float:
  """Runs delete, project and include for one site and commits the result.

  Every step is O(M^2): beta_cav K~(B, x_i) is formed once and the new posterior variance at x_i
  follows from the rank-1 coefficient.

  Returns:
      float: the largest absolute change of g_i or tau_i
  """
  p_i = sites.p[:, i]
  g_old = float(sites.g[i])
  tau_old = float(sites.tau[i])
  alpha_cav, beta_cav = _cavity(post.alpha, post.beta, k_i, p_i, g_old, tau_old)
  beta_k = beta_cav @ k_i
  m, v = _cavity_marginal(alpha_cav, beta_k, k_i)
  derivs = lik.site_derivs(m, v, y_i)
  if not (math.isfinite(derivs.dlogz_dm) and math.isfinite(derivs.d2logz_dm2)):
    raise DegenerateSiteError(f"Nonfinite site derivatives at site {i}")
  h = p_i - beta_k
  c = float(k_i @ h)
  g_new, tau_new = propose_message(derivs, m, c)
  g, tau = damp_message(g_old, tau_old, g_new, tau_new, damping)
  if damping == 1.0:
    da, db = derivs.dlogz_dm, -derivs.d2logz_dm2
  else:
    da, db = _inclusion_gain(m, c, g, tau)
  v_post = v - db * c * c
  if not (math.isfinite(da) and math.isfinite(v_post) and np.all(np.isfinite(h))):
    raise DegenerateSiteError(f"Nonfinite posterior after updating site {i}")
  if not v_post > 0.0:
    raise NegativePosteriorVarianceError(f"Posterior variance {v_post:.3g} at site {i} is not positive")
  post.alpha, post.beta = _rank_one(alpha_cav, beta_cav, h, da, db)
  sites.g[i] = g
  sites.tau[i] = tau
  return max(abs(g - g_old), abs(tau - tau_old))

def ep_fit(
      data: 'Dataset',
      basis: Basis,
      lik: Likelihood,
      cfg: Optional[EpConfig]=None,
    ) -> Tuple[SparsePosterior, SiteMessages, FitReport]:
  """Fits the sparse posterior by EP sweeps over all training points.

  The fit converges once a sweep updates every site and changes no g_i or tau_i by more than
  cfg.convergence_tol.

  Args:
      data (Dataset): training inputs (N x d) and outputs
      basis (Basis): the blurred basis; fixed during the fit
      lik (Likelihood): site model
      cfg (Optional[EpConfig], optional): loop settings. Defaults to EpConfig().

  Raises:
      DataError: empty data or dimension mismatch
      EpDivergenceError: every site was skipped in a sweep
      GramFactorizationError: the blurred Gram matrix could not be factorized

  Returns:
      Tuple[SparsePosterior, SiteMessages, FitReport]: the posterior, the site messages and a report
  """
  if cfg is None:
    cfg = EpConfig()
  xs = as_matrix(data.inputs, dim=basis.dim, what='training inputs')
  ys = as_vector(data.outputs, what='training outputs')
  n = xs.shape[0]
  if n == 0:
    raise DataError("Cannot fit an empty dataset")
  if ys.shape[0] != n:
    raise DataError(f"Got {n} inputs but {ys.shape[0]} outputs")
  lik.check_targets(ys)

  post = SparsePosterior.prior(basis, cfg.jitter)
  kt = blurred_cross_kernel_matrix(xs, basis)
  sites = SiteMessages.empty(projected_weights(post, xs))
  report = FitReport(num_points=n, num_basis=basis.size, likelihood=lik.kind, jitter=post.khat_factor.jitter)
  rng = np.random.default_rng(cfg.shuffle_seed) if cfg.site_order == 'shuffled' else None
  logger.info(f"EP fit: N={n}, M={basis.size}, d={basis.dim}, likelihood={lik.kind}")

  for sweep in range(cfg.max_sweeps):
    start = time.perf_counter()
    order = rng.permutation(n) if rng is not None else range(n)
    max_change = 0.0
    skipped = 0
    for i in order:
      try:
        change = _site_update(post, sites, int(i), kt[i], float(ys[i]), lik, cfg.damping)
      except SiteSkipped as ex:
        skipped += 1
        report.skipped[ex.reason] = report.skipped.get(ex.reason, 0) + 1
        logger.debug(f"EP sweep {sweep + 1}: skipped site {i}: {ex}")
        continue
      max_change = max(max_change, change)
    elapsed = time.perf_counter() - start
    report.sweeps = sweep + 1
    report.max_changes.append(max_change)
    report.sweep_seconds.append(elapsed)
    report.skipped_per_sweep.append(skipped)
    logger.debug(f"EP sweep {sweep + 1}: max change {max_change:.3g}, skipped {skipped}, {elapsed:.3f}s")
    if skipped == n:
      raise EpDivergenceError(f"Every site was skipped in EP sweep {sweep + 1}")
    if skipped > 0:
      logger.warning(f"EP sweep {sweep + 1}: skipped {skipped} of {n} sites")
    if skipped == 0 and max_change < cfg.convergence_tol:
      report.converged = True
      break

  if report.converged:
    logger.info(f"EP converged after {report.sweeps} sweeps (max change {report.final_max_change:.3g}), {report.total_skipped} site skips")
  else:
    msg = f"EP did not converge in {report.sweeps} sweeps (max change {report.final_max_change:.3g}), {report.total_skipped} site skips"
    if cfg.raise_on_nonconvergence:
      raise EpDivergenceError(msg)
    logger.warning(msg)
  return post, sites, report

def fixed_point_residual(
      post: SparsePosterior,
      sites: SiteMessages,
      data: 'Dataset',
      lik: Likelihood,
    ) -> float:
  """Largest change in the basis moments (K^ alpha, K^ - K^ beta K^) when any single site is
  deleted and re-projected from the current state. Zero at an EP fixed point.
  """
  xs = as_matrix(data.inputs, dim=post.dim, what='training inputs')
  ys = as_vector(data.outputs, dim=xs.shape[0], what='training outputs')
  kt = blurred_cross_kernel_matrix(xs, post.basis)
  current = basis_moments(post)
  worst = 0.0
  for i in range(xs.shape[0]):
    p_i = sites.p[:, i]
    try:
      alpha_cav, beta_cav = _cavity(post.alpha, post.beta, kt[i], p_i, float(sites.g[i]), float(sites.tau[i]))
      beta_k = beta_cav @ kt[i]
      m, v = _cavity_marginal(alpha_cav, beta_k, kt[i])
      derivs = lik.site_derivs(m, v, float(ys[i]))
    except SiteSkipped:
      continue
    alpha, beta = _rank_one(alpha_cav, beta_cav, p_i - beta_k, derivs.dlogz_dm, -derivs.d2logz_dm2)
    trial = basis_moments(SparsePosterior(post.basis, alpha, beta, post.khat, post.khat_factor))
    worst = max(
        worst,
        float(np.max(np.abs(trial.mean - current.mean))),
        float(np.max(np.abs(trial.cov - current.cov))),
      )
  return worst
