# Copyright (c) 2022 Amigos Development Inc.
#
# MIT License - See LICENSE file accompanying this package.
#

"""Saving and loading fitted sparse models as versioned YAML documents.

Floats are written with Python's shortest round-trip representation, so a save/load cycle
reproduces alpha, beta and the basis bit for bit. Wall-clock timings are left out of the
stored fit summary so that identical fits give byte-identical files.
"""

from .logging import logger

from typing import Optional, List, Any, Dict
from .internal_types import FloatArray, ArrayLike, JsonableDict

import os
from dataclasses import dataclass, field

import numpy as np
import yaml

from .baseline import SparseModel
from .constants import MODEL_SCHEMA_VERSION
from .dataset import Dataset, Standardizer, Task
from .ep import FitReport
from .exceptions import DataError
from .kernels import Basis, BlurMode, KernelParams
from .likelihoods import ClassificationLik, Likelihood, RegressionLik
from .posterior import SparsePosterior
from .util import as_matrix

def _floats(a: ArrayLike) -> Any:
  return np.asarray(a, dtype=np.float64).tolist()

def _fit_summary(report: FitReport) -> JsonableDict:
  return dict(
      num_points=report.num_points,
      num_basis=report.num_basis,
      sweeps=report.sweeps,
      converged=report.converged,
      final_max_change=float(report.final_max_change),
      skipped=dict(sorted(report.skipped.items())),
    )

def _likelihood_to_doc(lik: Likelihood) -> JsonableDict:
  if isinstance(lik, RegressionLik):
    return dict(type=lik.kind, v_y=float(lik.v_y))
  return dict(type=lik.kind, epsilon=float(lik.epsilon))

def _likelihood_from_doc(doc: Dict[str, Any]) -> Likelihood:
  kind = doc.get('type')
  if kind == 'regression':
    return RegressionLik(float(doc['v_y']))
  if kind == 'classification':
    return ClassificationLik(float(doc['epsilon']))
  raise DataError(f"Unknown likelihood type in model file: {kind!r}")

@dataclass(eq=False)
class ModelFile:
  kernel: KernelParams
  basis: Basis
  alpha: FloatArray
  beta: FloatArray
  jitter: float
  """Jitter the Gram factorization actually used during the fit"""
  likelihood: Likelihood
  fit_summary: JsonableDict = field(default_factory=dict)
  feature_names: List[str] = field(default_factory=list)
  positive_label: Optional[str] = None
  standardizer: Optional[Standardizer] = None
  schema_version: int = MODEL_SCHEMA_VERSION

  @property
  def task(self) -> Task:
    return Task.CLASSIFICATION if isinstance(self.likelihood, ClassificationLik) else Task.REGRESSION

  @property
  def dim(self) -> int:
    return self.basis.dim

  @classmethod
  def from_fit(cls, model: SparseModel, data: Dataset) -> 'ModelFile':
    post = model.posterior
    return cls(
        kernel=post.basis.kernel,
        basis=post.basis,
        alpha=post.alpha.copy(),
        beta=post.beta.copy(),
        jitter=post.khat_factor.jitter,
        likelihood=model.likelihood,
        fit_summary={} if model.report is None else _fit_summary(model.report),
        feature_names=list(data.feature_names),
        positive_label=data.positive_label,
        standardizer=data.standardizer,
      )

  def to_model(self) -> SparseModel:
    """Rebuilds the sparse posterior. K^ is recomputed and factorized with the stored jitter."""
    post = SparsePosterior.prior(self.basis, jitter=self.jitter)
    post.alpha = self.alpha.copy()
    post.beta = self.beta.copy()
    return SparseModel(post, self.likelihood)

  def prepare_inputs(self, raw_inputs: ArrayLike) -> FloatArray:
    """Maps inputs in original units to the units the model was fitted in."""
    xs = as_matrix(raw_inputs, dim=self.dim, what='inputs')
    if self.standardizer is None:
      return xs
    return self.standardizer.transform(xs)

  def to_jsonable(self) -> JsonableDict:
    result: JsonableDict = dict(
        schema_version=self.schema_version,
        task=self.task.value,
        kernel=dict(type='gaussian', eta=float(self.kernel.eta)),
        basis=dict(
            blur_mode=None if self.basis.blur_mode is None else self.basis.blur_mode.value,
            centers=_floats(self.basis.centers),
            local_covs=_floats(self.basis.local_covs),
          ),
        alpha=_floats(self.alpha),
        beta=_floats(self.beta),
        jitter=float(self.jitter),
        likelihood=_likelihood_to_doc(self.likelihood),
        fit=dict(self.fit_summary),
        features=list(self.feature_names),
        positive_label=self.positive_label,
      )
    if self.standardizer is not None:
      result['standardizer'] = dict(mean=_floats(self.standardizer.mean), scale=_floats(self.standardizer.scale))
    return result

  @classmethod
  def from_jsonable(cls, doc: Any) -> 'ModelFile':
    if not isinstance(doc, dict):
      raise DataError("Model file does not contain a mapping")
    version = doc.get('schema_version')
    if version != MODEL_SCHEMA_VERSION:
      raise DataError(f"Unsupported model file schema version {version!r} (expected {MODEL_SCHEMA_VERSION})")
    try:
      kernel = KernelParams(float(doc['kernel']['eta']))
      basis_doc = doc['basis']
      blur_mode = basis_doc.get('blur_mode')
      basis = Basis.from_arrays(
          basis_doc['centers'],
          basis_doc['local_covs'],
          kernel,
          blur_mode=None if blur_mode is None else BlurMode(blur_mode),
        )
      m = basis.size
      alpha = np.asarray(doc['alpha'], dtype=np.float64).reshape(m)
      beta = np.asarray(doc['beta'], dtype=np.float64).reshape(m, m)
      standardizer: Optional[Standardizer] = None
      if doc.get('standardizer') is not None:
        standardizer = Standardizer(
            np.asarray(doc['standardizer']['mean'], dtype=np.float64),
            np.asarray(doc['standardizer']['scale'], dtype=np.float64),
          )
      positive_label = doc.get('positive_label')
      result = cls(
          kernel=kernel,
          basis=basis,
          alpha=alpha,
          beta=beta,
          jitter=float(doc['jitter']),
          likelihood=_likelihood_from_doc(doc['likelihood']),
          fit_summary=dict(doc.get('fit') or {}),
          feature_names=[ str(n) for n in doc.get('features') or [] ],
          positive_label=None if positive_label is None else str(positive_label),
          standardizer=standardizer,
          schema_version=version,
        )
    except (KeyError, TypeError) as ex:
      raise DataError(f"Model file is missing or has a malformed field: {ex}") from ex
    except ValueError as ex:
      raise DataError(f"Model file has an invalid value: {ex}") from ex
    if result.task.value != doc.get('task'):
      raise DataError(f"Model file task {doc.get('task')!r} does not match its likelihood {result.likelihood.kind!r}")
    return result

  def dumps(self) -> str:
    return yaml.safe_dump(self.to_jsonable(), sort_keys=True, default_flow_style=None, width=120)

  @classmethod
  def loads(cls, text: str) -> 'ModelFile':
    try:
      doc = yaml.safe_load(text)
    except yaml.YAMLError as ex:
      raise DataError(f"Model file is not valid YAML: {ex}") from ex
    return cls.from_jsonable(doc)

  def save(self, path: str) -> None:
    with open(path, 'w', encoding='utf-8') as f:
      f.write(self.dumps())
    logger.info(f"Saved model ({self.task.value}, M={self.basis.size}) to {path}")

  @classmethod
  def load(cls, path: str) -> 'ModelFile':
    if not os.path.exists(path):
      raise DataError(f"Model file {path} does not exist")
    with open(path, 'r', encoding='utf-8') as f:
      text = f.read()
    return cls.loads(text)
