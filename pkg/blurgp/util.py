# Copyright (c) 2022 Amigos Development Inc.
#
# MIT License - See LICENSE file accompanying this package.
#

"""General utility functions for this package"""

from .logging import logger

from typing import Optional, Any
from .internal_types import Jsonable, FloatArray, ArrayLike
from collections.abc import Mapping, Iterable

import math
import numpy as np

from .exceptions import DataError, DimensionMismatchError

def normalize_jsonable(value: Any) -> Jsonable:
  """Presents an object as a simple JSON-serializable value, recursively.

  Simple Jsonable scalar values (including None) are preserved.
  numpy scalars become python scalars and numpy arrays become nested lists.
  Non-finite floats become the strings "nan", "inf" and "-inf".
  Mappable objects are converted to simple dicts, with string keys and normalized child values.
  Iterable objects are converted to simple lists with normalized elements.
  All other values are converted to simple strings.

  Args:
      value (Any): Any value, interpreted as described above

  Returns:
      Jsonable: A value that can be round-trip converted to JSON and back.
  """
  result: Jsonable
  if isinstance(value, np.generic):
    value = value.item()
  if isinstance(value, np.ndarray):
    value = value.tolist()
  if value is None or isinstance(value, (str, int, bool)):
    result = value
  elif isinstance(value, float):
    result = value if math.isfinite(value) else str(value)
  elif isinstance(value, Mapping):
    result = dict((str(k), normalize_jsonable(v)) for k, v in value.items())
  elif isinstance(value, Iterable):
    result = [ normalize_jsonable(x) for x in value ]
  else:
    result = str(value)

  return result

def as_vector(x: ArrayLike, dim: Optional[int]=None, what: str='vector') -> FloatArray:
  """Converts x to a 1-D float64 array, optionally checking its length."""
  result = np.asarray(x, dtype=np.float64)
  if result.ndim == 0:
    result = result.reshape(1)
  if result.ndim != 1:
    raise DataError(f"Expected a 1-D {what}, got shape {result.shape}")
  if dim is not None and result.shape[0] != dim:
    raise DimensionMismatchError(dim, result.shape[0], what)
  return result

def as_matrix(x: ArrayLike, dim: Optional[int]=None, what: str='matrix') -> FloatArray:
  """Converts x to a 2-D float64 array of row vectors, optionally checking the column count.

  A 1-D input is treated as a single row.
  """
  result = np.asarray(x, dtype=np.float64)
  if result.ndim == 1:
    result = result.reshape(1, -1)
  if result.ndim != 2:
    raise DataError(f"Expected a 2-D {what}, got shape {result.shape}")
  if dim is not None and result.shape[1] != dim:
    raise DimensionMismatchError(dim, result.shape[1], what)
  return result

def symmetrize(a: FloatArray) -> FloatArray:
  return 0.5 * (a + a.T)

def sequential_sum(values: Iterable[float]) -> float:
  """Sums in a fixed left-to-right order, independent of how the values were produced."""
  total = 0.0
  for v in values:
    total += float(v)
  return total
