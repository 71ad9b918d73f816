# Copyright (c) 2022 Amigos Development, Inc.
#
# MIT License - See LICENSE file accompanying this package.
#

"""Constants used by this package"""

# ---- kernel / Gram factorization
DEFAULT_ETA = 1.0
JITTER_START_REL = 1e-8
"""Initial Gram jitter, relative to trace(K̂)/M"""
JITTER_MAX_REL = 1e-2
"""Largest Gram jitter tried before giving up, relative to trace(K̂)/M"""
JITTER_GROWTH = 10.0

# ---- quadrature oracle
QUADRATURE_HALF_WIDTH = 8.0
QUADRATURE_TOL = 1e-7

# ---- posterior
VARIANCE_CLAMP = 1e-10
"""Negative predicted variances smaller than this in magnitude are clamped to zero"""

# ---- EP
DEFAULT_CONVERGENCE_TOL = 1e-4
DEFAULT_MAX_SWEEPS = 50
DEFAULT_DAMPING = 1.0
DEGENERATE_CAVITY_TOL = 1e-12

# ---- likelihoods
DEFAULT_NOISE_VARIANCE = 0.01
DEFAULT_EPSILON = 0.01
PREDICTIVE_VARIANCE_GUARD = 1e-12

# ---- basis selection
KMEANS_RESTARTS = 5
KMEANS_MAX_ITERS = 100
COV_FLOOR_REL = 1e-6
"""Full-blur covariance floor, relative to (median pairwise squared distance)/d"""

# ---- metrics
PROBABILITY_CLAMP = 1e-12

# ---- data generators
CIRCLE_RADIUS_NOISE = 0.1
CIRCLE_OUTPUT_NOISE = 0.1
CIRCLE_QUADRANT_VALUES = (-3.0, -1.0, 1.0, 3.0)
GAUSSIAN_CLASS_MEANS = ((-1.0, 0.0), (1.0, 0.0))
GAUSSIAN_CLASS_COVS = (((1.0, 0.0), (0.0, 2.0)), ((1.0, 0.5), (0.5, 1.0)))

# ---- UCI splits (train, test)
SPAMBASE_SPLIT = (2761, 1840)
IONOSPHERE_SPLIT = (200, 151)
CSV_SPLIT_PRESETS = { 'spambase': SPAMBASE_SPLIT, 'ionosphere': IONOSPHERE_SPLIT }

# ---- persistence
MODEL_SCHEMA_VERSION = 1

# ---- heatmaps and repeated experiments
DEFAULT_GRID_RESOLUTION = 50
CIRCLE_GRID_HALF_WIDTH = 1.5
DEFAULT_EXPERIMENT_SEEDS = 20
GAUSSIAN_EXPERIMENT_SPLIT = (200, 2000)
GAUSSIAN_EXPERIMENT_NUM_BASIS = 10
GAUSSIAN_EXPERIMENT_ETA = 0.5
"""Comparable to the spread of a K-means cluster of the two-class data, so blur shape shows"""
CIRCLE_EXPERIMENT_N = 100
CIRCLE_EXPERIMENT_NUM_BASIS = 4
CIRCLE_EXPERIMENT_ETA = 0.3
"""Shorter than a quarter arc of the circle, so one basis point cannot cover its cluster unblurred"""
CSV_EXPERIMENT_SPLITS = 10
CSV_EXPERIMENT_NUM_BASIS = 50
SIGN_TEST_ALPHA = 0.05

KL_VARIANCE_FLOOR = 1e-12
"""Predictive variances are floored at this value inside a Gaussian KL divergence"""
