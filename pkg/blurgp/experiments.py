# Copyright (c) 2022 Amigos Development Inc.
#
# MIT License - See LICENSE file accompanying this package.
#

"""Repeated blur-mode comparisons.

For every seed, one K-means basis is shared by all blur modes, each mode is fitted with EP and
compared with the full-GP reference. Per-seed results are aggregated into mean metrics and
one-sided paired sign tests for every ordering of two modes.
"""

from .logging import logger

from typing import Optional, List, Dict, Tuple, Sequence
from .internal_types import JsonableDict

import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

from .baseline import (
    error_rate,
    fit_full,
    fit_sparse,
    kl_predictive,
    mean_rmse,
  )
from .basis_selection import bases_for_modes, default_cov_floor, kmeans
from .constants import (
    CIRCLE_EXPERIMENT_ETA,
    CIRCLE_EXPERIMENT_N,
    CIRCLE_EXPERIMENT_NUM_BASIS,
    CIRCLE_GRID_HALF_WIDTH,
    CSV_EXPERIMENT_NUM_BASIS,
    CSV_SPLIT_PRESETS,
    DEFAULT_EPSILON,
    DEFAULT_ETA,
    DEFAULT_EXPERIMENT_SEEDS,
    DEFAULT_GRID_RESOLUTION,
    DEFAULT_NOISE_VARIANCE,
    GAUSSIAN_EXPERIMENT_ETA,
    GAUSSIAN_EXPERIMENT_NUM_BASIS,
    GAUSSIAN_EXPERIMENT_SPLIT,
    SIGN_TEST_ALPHA,
  )
from .dataset import (
    Dataset,
    Task,
    gen_circle_regression,
    gen_gaussian_classes,
    grid_inputs,
    majority_class_error,
    split_dataset,
  )
from .ep import EpConfig
from .exceptions import UsageError
from .kernels import BlurMode, KernelParams
from .likelihoods import ClassificationLik, Likelihood, RegressionLik

EXPERIMENT_KINDS = ('gaussian', 'circle', 'csv')

@dataclass
class ExperimentConfig:
  kind: str = 'gaussian'
  seeds: List[int] = field(default_factory=lambda: list(range(DEFAULT_EXPERIMENT_SEEDS)))
  num_basis: Optional[int] = None
  """None picks the default for the kind: 10 (gaussian), 4 (circle), 50 (csv)"""
  modes: List[BlurMode] = field(default_factory=lambda: [ BlurMode.DELTA, BlurMode.SPHERE, BlurMode.FULL ])
  eta: Optional[float] = None
  """None picks the default for the kind: 0.5 (gaussian), 0.3 (circle), 1.0 (csv)"""
  epsilon: float = DEFAULT_EPSILON
  noise: float = DEFAULT_NOISE_VARIANCE
  n_train: Optional[int] = None
  n_test: Optional[int] = None
  grid_resolution: int = DEFAULT_GRID_RESOLUTION
  data: Optional[Dataset] = None
  """Full dataset for the csv kind, split anew for every seed"""
  split_preset: Optional[str] = None
  """Named (train, test) sizes for the csv kind: spambase or ionosphere"""
  standardize: bool = False
  ep: EpConfig = field(default_factory=EpConfig)
  jobs: int = 1

  def __post_init__(self):
    if self.kind not in EXPERIMENT_KINDS:
      raise UsageError(f"Unknown experiment kind {self.kind!r}; expected one of {', '.join(EXPERIMENT_KINDS)}")
    if len(self.seeds) == 0:
      raise UsageError("An experiment needs at least one seed")
    if len(set(self.seeds)) != len(self.seeds):
      raise UsageError("Experiment seeds must be distinct")
    self.modes = [ BlurMode(m) for m in self.modes ]
    if len(self.modes) == 0:
      raise UsageError("An experiment needs at least one blur mode")
    if self.jobs < 1:
      raise UsageError(f"--jobs must be at least 1, got {self.jobs}")
    if self.kind == 'csv':
      if self.data is None:
        raise UsageError("The csv experiment needs a dataset")
      if self.data.task != Task.CLASSIFICATION:
        raise UsageError("The csv experiment needs classification data")
      self._resolve_csv_split()
    elif self.split_preset is not None:
      raise UsageError("Split presets apply to the csv experiment only")
    if self.num_basis is None:
      self.num_basis = {
          'gaussian': GAUSSIAN_EXPERIMENT_NUM_BASIS,
          'circle': CIRCLE_EXPERIMENT_NUM_BASIS,
          'csv': CSV_EXPERIMENT_NUM_BASIS,
        }[self.kind]
    if self.eta is None:
      self.eta = {
          'gaussian': GAUSSIAN_EXPERIMENT_ETA,
          'circle': CIRCLE_EXPERIMENT_ETA,
          'csv': DEFAULT_ETA,
        }[self.kind]
    if self.eta <= 0.0:
      raise UsageError(f"eta must be positive, got {self.eta}")

  def _resolve_csv_split(self) -> None:
    """Fills n_train and n_test from the named preset, or from a preset whose sizes add up to the
    dataset size, or else splits the dataset in half."""
    assert self.data is not None
    preset: Optional[Tuple[int, int]] = None
    if self.split_preset is not None:
      if self.split_preset not in CSV_SPLIT_PRESETS:
        raise UsageError(
            f"Unknown split preset {self.split_preset!r}; expected one of {', '.join(sorted(CSV_SPLIT_PRESETS))}"
          )
      preset = CSV_SPLIT_PRESETS[self.split_preset]
    elif self.n_train is None and self.n_test is None:
      for name, sizes in sorted(CSV_SPLIT_PRESETS.items()):
        if sum(sizes) == self.data.size:
          logger.info(f"Using the {name} split {sizes[0]}/{sizes[1]} for {self.data.size} rows")
          preset = sizes
    if preset is not None:
      self.n_train = preset[0] if self.n_train is None else self.n_train
      self.n_test = preset[1] if self.n_test is None else self.n_test
    elif self.n_train is None:
      self.n_train = self.data.size // 2

  @property
  def task(self) -> Task:
    return Task.REGRESSION if self.kind == 'circle' else Task.CLASSIFICATION

  def likelihood(self) -> Likelihood:
    if self.task == Task.REGRESSION:
      return RegressionLik(self.noise)
    return ClassificationLik(self.epsilon)

@dataclass
class ModeResult:
  error: float
  """Test error rate (classification) or grid RMSE to the exact posterior mean (regression)"""
  kl: float
  sweeps: int
  converged: bool
  fit_seconds: float

  def to_jsonable(self) -> JsonableDict:
    return dict(error=self.error, kl=self.kl, sweeps=self.sweeps, converged=self.converged, fit_seconds=self.fit_seconds)

@dataclass
class SeedResult:
  seed: int
  modes: Dict[str, ModeResult]
  reference_error: Optional[float] = None
  """Full-GP test error rate (classification only)"""
  majority_error: Optional[float] = None

  def to_jsonable(self) -> JsonableDict:
    return dict(
        seed=self.seed,
        modes={ k: v.to_jsonable() for k, v in sorted(self.modes.items()) },
        reference_error=self.reference_error,
        majority_error=self.majority_error,
      )

def _split_for_seed(cfg: ExperimentConfig, seed: int) -> Tuple[Dataset, Optional[Dataset]]:
  if cfg.kind == 'gaussian':
    n_train = GAUSSIAN_EXPERIMENT_SPLIT[0] if cfg.n_train is None else cfg.n_train
    n_test = GAUSSIAN_EXPERIMENT_SPLIT[1] if cfg.n_test is None else cfg.n_test
    return gen_gaussian_classes(n_train, n_test, seed)
  if cfg.kind == 'circle':
    return gen_circle_regression(CIRCLE_EXPERIMENT_N if cfg.n_train is None else cfg.n_train, seed), None
  assert cfg.data is not None and cfg.n_train is not None
  return split_dataset(cfg.data, cfg.n_train, cfg.n_test, seed=seed, standardize=cfg.standardize)

def run_seed(cfg: ExperimentConfig, seed: int) -> SeedResult:
  """Fits every blur mode on one shared basis and compares each with the full-GP reference."""
  train, test = _split_for_seed(cfg, seed)
  assert cfg.num_basis is not None and cfg.eta is not None
  kernel = KernelParams(cfg.eta)
  lik = cfg.likelihood()
  clusters = kmeans(train.inputs, cfg.num_basis, seed=seed)
  bases = bases_for_modes(clusters, cfg.modes, kernel, default_cov_floor(train.inputs))
  reference = fit_full(train, kernel, lik, cfg.ep)

  if test is None:
    h = CIRCLE_GRID_HALF_WIDTH
    eval_inputs = grid_inputs((-h, h), (-h, h), cfg.grid_resolution)
  else:
    eval_inputs = test.inputs

  result = SeedResult(seed=seed, modes={})
  if test is not None:
    result.reference_error = error_rate(reference, test)
    result.majority_error = majority_class_error(test)
  for mode, basis in bases:
    start = time.perf_counter()
    model = fit_sparse(train, basis, lik, cfg.ep)
    elapsed = time.perf_counter() - start
    assert model.report is not None
    error = mean_rmse(reference, model, eval_inputs) if test is None else error_rate(model, test)
    result.modes[mode.value] = ModeResult(
        error=error,
        kl=kl_predictive(reference, model, eval_inputs),
        sweeps=model.report.sweeps,
        converged=model.report.converged,
        fit_seconds=elapsed,
      )
  logger.info(
      f"Experiment {cfg.kind}, seed {seed}: "
      + ", ".join(f"{k} error={v.error:.4g} kl={v.kl:.4g}" for k, v in result.modes.items())
    )
  return result

def run_seeds(cfg: ExperimentConfig) -> List[SeedResult]:
  """Runs every seed, in a thread pool when jobs > 1; results are sorted by seed."""
  if cfg.jobs == 1:
    results = [ run_seed(cfg, s) for s in cfg.seeds ]
  else:
    with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
      results = list(pool.map(lambda s: run_seed(cfg, s), cfg.seeds))
  return sorted(results, key=lambda r: r.seed)

def sign_test(better: Sequence[float], worse: Sequence[float]) -> Tuple[int, int, float]:
  """One-sided paired sign test that the first sequence is smaller.

  Returns:
      Tuple[int, int, float]: (wins, non-tied pairs, p-value); p is 1.0 when every pair ties.
  """
  diffs = np.asarray(better, dtype=np.float64) - np.asarray(worse, dtype=np.float64)
  wins = int(np.sum(diffs < 0.0))
  trials = int(np.sum(diffs != 0.0))
  if trials == 0:
    return wins, trials, 1.0
  return wins, trials, float(binomtest(wins, trials, 0.5, alternative='greater').pvalue)

def summarize(cfg: ExperimentConfig, results: Sequence[SeedResult]) -> JsonableDict:
  modes = [ m.value for m in cfg.modes ]
  means: JsonableDict = {}
  for mode in modes:
    rows = [ r.modes[mode] for r in results ]
    means[mode] = dict(
        error=float(np.mean([ row.error for row in rows ])),
        kl=float(np.mean([ row.kl for row in rows ])),
        sweeps=float(np.mean([ row.sweeps for row in rows ])),
        converged_fraction=float(np.mean([ row.converged for row in rows ])),
        fit_seconds=float(np.mean([ row.fit_seconds for row in rows ])),
      )
  orderings: List[JsonableDict] = []
  for a, b in itertools.permutations(modes, 2):
    for metric in ('error', 'kl'):
      wins, trials, p = sign_test(
          [ getattr(r.modes[a], metric) for r in results ],
          [ getattr(r.modes[b], metric) for r in results ],
        )
      orderings.append(dict(
          better=a, worse=b, metric=metric, wins=wins, trials=trials, p_value=p, significant=p < SIGN_TEST_ALPHA))
  summary: JsonableDict = dict(
      kind=cfg.kind,
      task=cfg.task.value,
      num_basis=cfg.num_basis,
      eta=cfg.eta,
      seeds=[ r.seed for r in results ],
      means=means,
      orderings=orderings,
      per_seed=[ r.to_jsonable() for r in results ],
    )
  if cfg.task == Task.CLASSIFICATION:
    summary['reference_error'] = float(np.mean([ r.reference_error for r in results ]))
    summary['majority_error'] = float(np.mean([ r.majority_error for r in results ]))
  if cfg.kind == 'csv':
    assert cfg.data is not None and cfg.n_train is not None
    summary['split'] = [ cfg.n_train, cfg.data.size - cfg.n_train if cfg.n_test is None else cfg.n_test ]
  return summary

def run_experiment(cfg: ExperimentConfig) -> JsonableDict:
  logger.info(f"Running {cfg.kind} experiment over {len(cfg.seeds)} seeds with M={cfg.num_basis}")
  return summarize(cfg, run_seeds(cfg))
