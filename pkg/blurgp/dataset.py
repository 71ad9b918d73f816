# Copyright (c) 2022 Amigos Development Inc.
#
# MIT License - See LICENSE file accompanying this package.
#

"""Datasets: CSV ingestion, train/test splits, standardization and synthetic generators"""

from .logging import logger

from typing import Optional, List, Tuple, Sequence
from .internal_types import FloatArray, ArrayLike

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd
from scipy.stats import multivariate_normal

from .constants import (
    CIRCLE_RADIUS_NOISE,
    CIRCLE_OUTPUT_NOISE,
    CIRCLE_QUADRANT_VALUES,
    GAUSSIAN_CLASS_MEANS,
    GAUSSIAN_CLASS_COVS,
  )
from .exceptions import DataError, UsageError
from .util import as_matrix, as_vector

class Task(str, enum.Enum):
  REGRESSION = 'regression'
  CLASSIFICATION = 'classification'

@dataclass(frozen=True, eq=False)
class Standardizer:
  """Per-feature affine map to zero mean and unit variance, fitted on a training split."""
  mean: FloatArray
  scale: FloatArray

  @classmethod
  def fit(cls, inputs: ArrayLike) -> 'Standardizer':
    xs = as_matrix(inputs, what='inputs')
    scale = xs.std(axis=0)
    scale[scale == 0.0] = 1.0
    return cls(xs.mean(axis=0), scale)

  def transform(self, inputs: ArrayLike) -> FloatArray:
    return (as_matrix(inputs, dim=self.mean.shape[0], what='inputs') - self.mean) / self.scale

  def inverse_transform(self, inputs: ArrayLike) -> FloatArray:
    return as_matrix(inputs, dim=self.mean.shape[0], what='inputs') * self.scale + self.mean

@dataclass(eq=False)
class Dataset:
  inputs: FloatArray
  outputs: FloatArray
  task: Task
  feature_names: List[str] = field(default_factory=list)
  label_name: Optional[str] = None
  positive_label: Optional[str] = None
  standardizer: Optional[Standardizer] = None
  """Set when inputs have been standardized"""

  def __post_init__(self):
    self.task = Task(self.task)
    self.inputs = as_matrix(self.inputs, what='inputs')
    self.outputs = as_vector(self.outputs, what='outputs')
    n, d = self.inputs.shape
    if self.outputs.shape[0] != n:
      raise DataError(f"Dataset has {n} input rows but {self.outputs.shape[0]} outputs")
    if not (np.all(np.isfinite(self.inputs)) and np.all(np.isfinite(self.outputs))):
      raise DataError("Dataset contains NaN or infinite values")
    if self.task == Task.CLASSIFICATION and not np.all(np.abs(self.outputs) == 1.0):
      raise DataError("Classification outputs must be -1 or +1")
    if len(self.feature_names) == 0:
      self.feature_names = [ f'x{j + 1}' for j in range(d) ]

  @property
  def size(self) -> int:
    return self.inputs.shape[0]

  @property
  def dim(self) -> int:
    return self.inputs.shape[1]

  def subset(self, index: ArrayLike) -> 'Dataset':
    index = np.asarray(index)
    return replace(self, inputs=self.inputs[index], outputs=self.outputs[index])

  def raw_inputs(self) -> FloatArray:
    """Inputs in their original units."""
    if self.standardizer is None:
      return self.inputs.copy()
    return self.standardizer.inverse_transform(self.inputs)

  def standardized(self, standardizer: Optional[Standardizer]=None) -> 'Dataset':
    """Standardizes raw inputs, fitting on this dataset unless a standardizer is given."""
    if self.standardizer is not None:
      raise DataError("Dataset is already standardized")
    if standardizer is None:
      standardizer = Standardizer.fit(self.inputs)
    return replace(self, inputs=standardizer.transform(self.inputs), standardizer=standardizer)

def _is_number(cell: str) -> bool:
  try:
    float(cell)
  except (TypeError, ValueError):
    return False
  return True

def _cell_text(cell: object) -> str:
  if cell is None or (isinstance(cell, float) and math.isnan(cell)):
    return ''
  return str(cell).strip()

def _same_label(v: str, label: str) -> bool:
  if _is_number(v) and _is_number(label):
    return float(v) == float(label)
  return v == label

def _labels_to_pm1(labels: Sequence[str], positive_label: Optional[str]) -> Tuple[FloatArray, str]:
  distinct = sorted(set(labels))
  if len(distinct) > 2:
    raise DataError(f"Classification labels must be binary, found {len(distinct)} distinct values: {distinct[:5]}")
  if positive_label is None:
    values = set(float(v) for v in distinct) if all(_is_number(v) for v in distinct) else None
    if values is None or not (values <= { -1.0, 1.0 } or values <= { 0.0, 1.0 }):
      raise DataError(f"Cannot infer the positive label from {distinct}; declare it with --positive-label")
    positive_label = '1'
  result = np.array([ 1.0 if _same_label(v, positive_label) else -1.0 for v in labels ])
  return result, positive_label

def load_csv(
      path: str,
      task: Task,
      delimiter: str=',',
      label_column: int=-1,
      positive_label: Optional[str]=None,
      standardize: bool=False,
    ) -> Dataset:
  """Reads a delimited file of numeric features plus one label column.

  A first row with any non-numeric feature cell is treated as a header.

  Args:
      path (str): file to read
      task (Task): regression or classification
      delimiter (str, optional): field delimiter. Defaults to ','.
      label_column (int, optional): index of the label column; negative counts from the end.
          Defaults to -1.
      positive_label (Optional[str], optional): label value mapped to +1 for classification;
          inferred for {0, 1} and {-1, +1} labels. Defaults to None.
      standardize (bool, optional): standardize features with this file's statistics. Defaults to False.

  Raises:
      DataError: malformed rows, non-numeric features, non-binary labels

  Returns:
      Dataset: the parsed data
  """
  task = Task(task)
  try:
    frame = pd.read_csv(path, sep=delimiter, header=None, dtype=str, skip_blank_lines=False, keep_default_na=False)
  except pd.errors.ParserError as ex:
    raise DataError(f"{path}: malformed row: {ex}") from ex
  except pd.errors.EmptyDataError as ex:
    raise DataError(f"{path}: file is empty") from ex
  except OSError as ex:
    raise DataError(f"{path}: {ex}") from ex
  cells = frame.to_numpy(dtype=object)
  n_cols = cells.shape[1]
  if n_cols < 2:
    raise DataError(f"{path}: need at least one feature column and a label column")
  label_col = label_column if label_column >= 0 else n_cols + label_column
  if not 0 <= label_col < n_cols:
    raise UsageError(f"Label column {label_column} is out of range for {n_cols} columns")
  feature_cols = [ j for j in range(n_cols) if j != label_col ]

  # physical line numbers survive dropping blank lines
  lines = np.arange(1, cells.shape[0] + 1)
  filled = np.array([ any(_cell_text(c) != '' for c in row) for row in cells ], dtype=bool)
  cells, lines = cells[filled], lines[filled]

  names = [ f'x{k + 1}' for k in range(len(feature_cols)) ]
  label_name: Optional[str] = None
  if cells.shape[0] > 0 and not all(_is_number(_cell_text(cells[0, j])) for j in feature_cols):
    names = [ _cell_text(cells[0, j]) for j in feature_cols ]
    label_name = _cell_text(cells[0, label_col])
    cells, lines = cells[1:], lines[1:]
  if cells.shape[0] == 0:
    raise DataError(f"{path}: no data rows")

  inputs = np.empty((cells.shape[0], len(feature_cols)))
  for r in range(cells.shape[0]):
    for k, j in enumerate(feature_cols):
      text = _cell_text(cells[r, j])
      try:
        inputs[r, k] = float(text)
      except ValueError as ex:
        raise DataError(f"{path}: line {lines[r]}, column {j + 1}: non-numeric value {text!r}") from ex
  labels = [ _cell_text(cells[r, label_col]) for r in range(cells.shape[0]) ]
  for r, v in enumerate(labels):
    if v == '':
      raise DataError(f"{path}: line {lines[r]}, column {label_col + 1}: missing label")

  if task == Task.CLASSIFICATION:
    outputs, positive_label = _labels_to_pm1(labels, positive_label)
  else:
    try:
      outputs = np.array([ float(v) for v in labels ])
    except ValueError as ex:
      raise DataError(f"{path}: non-numeric regression output: {ex}") from ex
    positive_label = None

  data = Dataset(inputs, outputs, task, feature_names=names, label_name=label_name, positive_label=positive_label)
  logger.info(f"Loaded {path}: N={data.size}, d={data.dim}, task={task.value}")
  if standardize:
    data = data.standardized()
  return data

def split_dataset(
      data: Dataset,
      n_train: int,
      n_test: Optional[int]=None,
      seed: int=0,
      standardize: bool=False,
    ) -> Tuple[Dataset, Dataset]:
  """Seeded uniform shuffle, then the first n_train rows train and the next n_test rows test.

  With standardize, statistics come from the training rows only.
  """
  n = data.size
  if n_test is None:
    n_test = n - n_train
  if n_train < 1 or n_test < 1 or n_train + n_test > n:
    raise UsageError(f"Cannot split {n} rows into {n_train} train and {n_test} test rows")
  perm = np.random.default_rng(seed).permutation(n)
  train = data.subset(perm[:n_train])
  test = data.subset(perm[n_train:n_train + n_test])
  if standardize:
    scaler = Standardizer.fit(train.inputs)
    train = train.standardized(scaler)
    test = test.standardized(scaler)
  return train, test

def gen_circle_regression(
      n: int,
      seed: int=0,
      radius_noise: float=CIRCLE_RADIUS_NOISE,
      output_noise: float=CIRCLE_OUTPUT_NOISE,
      quadrant_values: Sequence[float]=CIRCLE_QUADRANT_VALUES,
    ) -> Dataset:
  """Noisy points around the unit circle; the output depends on the quadrant of the angle."""
  if n < 4:
    raise UsageError(f"The circle generator needs n >= 4, got {n}")
  rng = np.random.default_rng(seed)
  theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
  inputs = np.stack([ np.cos(theta), np.sin(theta) ], axis=1) + radius_noise * rng.standard_normal((n, 2))
  quadrant = np.minimum((theta // (0.5 * math.pi)).astype(int), 3)
  outputs = np.asarray(quadrant_values, dtype=np.float64)[quadrant] + output_noise * rng.standard_normal(n)
  return Dataset(inputs, outputs, Task.REGRESSION)

def _sample_gaussian_classes(n: int, rng: np.random.Generator) -> Dataset:
  labels = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
  inputs = np.empty((n, 2))
  for cls_index, label in enumerate((-1.0, 1.0)):
    rows = labels == label
    inputs[rows] = rng.multivariate_normal(
        GAUSSIAN_CLASS_MEANS[cls_index], GAUSSIAN_CLASS_COVS[cls_index], size=int(np.sum(rows)))
  return Dataset(inputs, labels, Task.CLASSIFICATION)

def gen_gaussian_classes(n_train: int, n_test: int, seed: int=0) -> Tuple[Dataset, Dataset]:
  """Two balanced 2-D Gaussian classes with a curved optimal boundary; train then test."""
  if n_train < 2 or n_test < 2:
    raise UsageError(f"Need at least 2 train and 2 test points, got {n_train} and {n_test}")
  rng = np.random.default_rng(seed)
  return _sample_gaussian_classes(n_train, rng), _sample_gaussian_classes(n_test, rng)

def gaussian_classes_bayes_error(n_samples: int=1_000_000, seed: int=0) -> float:
  """Monte-Carlo estimate of the Bayes error of gen_gaussian_classes."""
  data = _sample_gaussian_classes(n_samples, np.random.default_rng(seed))
  log_neg = multivariate_normal(GAUSSIAN_CLASS_MEANS[0], GAUSSIAN_CLASS_COVS[0]).logpdf(data.inputs)
  log_pos = multivariate_normal(GAUSSIAN_CLASS_MEANS[1], GAUSSIAN_CLASS_COVS[1]).logpdf(data.inputs)
  predicted = np.where(log_pos > log_neg, 1.0, -1.0)
  return float(np.mean(predicted != data.outputs))

def majority_class_error(data: Dataset) -> float:
  """Error rate of always predicting the more frequent class."""
  if data.task != Task.CLASSIFICATION:
    raise UsageError("Majority-class error is only defined for classification")
  positive = float(np.mean(data.outputs > 0.0))
  return min(positive, 1.0 - positive)

def grid_inputs(
      x1_range: Tuple[float, float],
      x2_range: Tuple[float, float],
      resolution: int,
    ) -> FloatArray:
  """resolution^2 points of a regular rectangle grid, x1 varying slowest."""
  if resolution < 2:
    raise UsageError(f"Grid resolution must be at least 2, got {resolution}")
  for name, (lo, hi) in (('x1', x1_range), ('x2', x2_range)):
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
      raise UsageError(f"Degenerate grid bounds for {name}: [{lo}, {hi}]")
  g1, g2 = np.meshgrid(
      np.linspace(x1_range[0], x1_range[1], resolution),
      np.linspace(x2_range[0], x2_range[1], resolution),
      indexing='ij',
    )
  return np.stack([ g1.ravel(), g2.ravel() ], axis=1)
