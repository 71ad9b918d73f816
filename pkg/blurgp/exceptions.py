#
# Copyright (c) 2022 Amigos development, Inc.
#
# MIT License - See LICENSE file accompanying this package.
#

"""Exceptions defined by this package"""

from typing import Optional

class BlurGpError(Exception):
  """Base class for all error exceptions defined by this package."""
  exit_code: int = 1

class UsageError(BlurGpError):
  """Invalid combination of arguments or options."""
  exit_code = 1

class DataError(BlurGpError):
  """Input data or parameters are malformed."""
  exit_code = 2

class DimensionMismatchError(DataError, ValueError):
  def __init__(self, expected: int, actual: int, what: Optional[str]=None):
    msg = f"Dimension mismatch: expected {expected}, got {actual}"
    if what is not None:
      msg = f"{msg} ({what})"
    super().__init__(msg)
    self.expected = expected
    self.actual = actual

class NumericalError(BlurGpError):
  """A numerical procedure failed."""
  exit_code = 3

class GramFactorizationError(NumericalError):
  """The blurred Gram matrix could not be factorized even with the largest allowed jitter.

  Usually indicates an ill-conditioned basis, e.g. duplicate centers.
  """

class GridTooCoarseError(NumericalError):
  """Quadrature results on the fine and coarse grids disagree."""

class PosteriorInstabilityError(NumericalError):
  """A predicted variance is negative beyond round-off."""

class EpDivergenceError(NumericalError):
  """Every site was skipped during an EP sweep."""

class SiteSkipped(NumericalError):
  """A single EP site update could not be performed. Caught by the EP sweep."""
  reason: str = 'skipped'

class DegenerateCavityError(SiteSkipped):
  reason = 'degenerate_cavity'

class NegativeCavityVarianceError(SiteSkipped):
  reason = 'negative_cavity_variance'

class DegenerateSiteError(SiteSkipped):
  reason = 'degenerate_site'

class NegativePosteriorVarianceError(SiteSkipped):
  reason = 'negative_posterior_variance'
