#
# Copyright (c) 2022 Amigos Development, Inc.
#
# MIT License - See LICENSE file accompanying this package.
#

"""Shared fixtures for the blurgp test suite"""

import numpy as np
import pytest

from blurgp.dataset import Dataset, Task, gen_circle_regression, gen_gaussian_classes
from blurgp.kernels import BlurredBasisPoint

def random_cov(rng: np.random.Generator, d: int, lo: float=0.05, hi: float=0.6) -> np.ndarray:
  """A random rotation of a diagonal covariance with eigenvalues in [lo, hi]."""
  q, _ = np.linalg.qr(rng.standard_normal((d, d)))
  evals = rng.uniform(lo, hi, size=d)
  cov = (q * evals) @ q.T
  return 0.5 * (cov + cov.T)

def random_point(rng: np.random.Generator, d: int, blurred: bool=True) -> BlurredBasisPoint:
  center = rng.uniform(-1.0, 1.0, size=d)
  if not blurred:
    return BlurredBasisPoint.delta(center)
  return BlurredBasisPoint(center, random_cov(rng, d))

@pytest.fixture
def rng() -> np.random.Generator:
  return np.random.default_rng(12345)

@pytest.fixture
def grid_regression_data() -> Dataset:
  """25 well-separated 2-D inputs on a perturbed grid with a smooth target."""
  rng = np.random.default_rng(7)
  g1, g2 = np.meshgrid(np.linspace(-2.0, 2.0, 5), np.linspace(-2.0, 2.0, 5), indexing='ij')
  inputs = np.stack([ g1.ravel(), g2.ravel() ], axis=1) + rng.uniform(-0.1, 0.1, size=(25, 2))
  outputs = np.sin(inputs[:, 0]) + 0.5 * np.cos(inputs[:, 1]) + 0.1 * rng.standard_normal(25)
  return Dataset(inputs, outputs, Task.REGRESSION)

@pytest.fixture
def circle_data() -> Dataset:
  return gen_circle_regression(100, seed=3)

@pytest.fixture
def gaussian_split():
  return gen_gaussian_classes(200, 500, seed=11)

@pytest.fixture
def small_classification_data() -> Dataset:
  rng = np.random.default_rng(5)
  inputs = rng.uniform(-3.0, 3.0, size=(30, 1))
  labels = np.where(inputs[:, 0] + 0.3 * rng.standard_normal(30) > 0.0, 1.0, -1.0)
  return Dataset(inputs, labels, Task.CLASSIFICATION)
