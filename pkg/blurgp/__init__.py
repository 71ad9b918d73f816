# Copyright (c) 2022 Amigos Development Inc.
#
# MIT License - See LICENSE file accompanying this package.
#

"""Sparse Gaussian process regression and classification with blurred basis points"""

from .version import __version__
from .constants import *
from .exceptions import *
from .kernels import (
    BlurMode,
    KernelParams,
    BlurredBasisPoint,
    Basis,
    QuadratureGrid,
    kernel_eval,
    kernel_matrix,
    blurred_cross_kernel,
    blurred_cross_kernel_matrix,
    blurred_gram,
    factorize_gram,
    quadrature_oracle,
  )
from .posterior import (
    SparsePosterior,
    predict_mean,
    predict_cov,
    predict_mean_var,
    basis_moments,
    projected_weight,
  )
from .likelihoods import (
    RegressionLik,
    ClassificationLik,
    SiteDerivatives,
    predictive_class_prob,
  )
from .ep import (
    EpConfig,
    FitReport,
    SiteMessages,
    cavity,
    project,
    update_message,
    ep_fit,
    fixed_point_residual,
  )
from .basis_selection import (
    ClusterSummary,
    kmeans,
    build_basis,
    select_basis,
  )
from .baseline import (
    FullGpModel,
    SparseModel,
    exact_gp_regression,
    full_gp_classification_ep,
    kl_predictive,
    error_rate,
    rmse,
  )
from .dataset import (
    Task,
    Dataset,
    Standardizer,
    load_csv,
    split_dataset,
    gen_circle_regression,
    gen_gaussian_classes,
  )
from .model_file import ModelFile
