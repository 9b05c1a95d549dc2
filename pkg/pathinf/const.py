"""Constants for the PathInf pathway inference package."""

from __future__ import annotations

import logging

DOMAIN = "pathinf"
LOGGER = logging.getLogger(__package__)

VERSION = "0.1.0"

# Observation cell codes
POSITIVE = 1
NEGATIVE = 0
MISSING = -1

# Missing token written to CSV; "?" is also accepted on input
MISSING_TOKEN = "NA"
MISSING_TOKENS = ("NA", "?")

CONF_TOL = "tol"
CONF_MAX_ITERS = "max_iters"
CONF_INIT = "init"
CONF_SEED = "seed"
CONF_EPS_PRUNE = "eps_prune"
CONF_CANDIDATE_CAP = "candidate_cap"
CONF_P_MISS_POS = "p_miss_pos"
CONF_P_MISS_NEG = "p_miss_neg"
CONF_N_NODES = "n_nodes"
CONF_N_EDGES = "n_edges"
CONF_N_SAMPLES = "n_samples"
CONF_POISSON_LAMBDA = "poisson_lambda"
CONF_FRACTION = "fraction"
CONF_REPEATS = "repeats"
CONF_EDGES_GRID = "edges_grid"
CONF_P_GRID = "p_grid"
CONF_COLUMNS = "columns"
CONF_THREADS = "threads"

# Solver defaults
DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITERS = 20000
DEFAULT_INIT = "uniform"
DEFAULT_SEED = 0
DEFAULT_EPS_PRUNE = 1e-6
DEFAULT_CANDIDATE_CAP = 2**20
DEFAULT_THREADS = 1

INIT_OPTIONS = ["uniform", "random"]

# Floor applied to P(O_i) before taking logs
LIKELIHOOD_FLOOR = 1e-300

# Backtracking line search
LINE_SEARCH_INITIAL_STEP = 1.0
LINE_SEARCH_SHRINK = 0.5
LINE_SEARCH_SUFFICIENT_DECREASE = 1e-4
LINE_SEARCH_MIN_STEP = 1e-20

# Missingness prior defaults
DEFAULT_P_MISS_POS = 0.2
DEFAULT_P_MISS_NEG = 0.5

# Simulation defaults
DEFAULT_N_NODES = 10
DEFAULT_N_EDGES = 15
DEFAULT_N_SAMPLES = 1000
DEFAULT_POISSON_LAMBDA = 4.0
EDGE_COUNT_OPTIONS = [10, 15, 20, 25]
P_MISS_POS_OPTIONS = [0.1, 0.2, 0.3, 0.4]
DAG_SAMPLING_LAW = "uniform-topological-order+uniform-forward-pairs"

# Evaluation defaults
DEFAULT_FRACTION = 0.85
DEFAULT_REPEATS = 100
DEFAULT_SWEEP_REPEATS = 10

# CLI exit codes
EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_PARSE = 3
EXIT_CAPACITY = 4
EXIT_INTERNAL = 5
