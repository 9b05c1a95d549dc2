"""Maximum-likelihood summarization of incomplete binary observations.

Observation rows are explained by a distribution over complete binary states.
A truly positive value is observed with probability ``q = 1 - p_miss_pos``;
a truly negative value is observed with probability ``1 - p_miss_neg``. The
state distribution maximizing the likelihood of all rows is found by projected
gradient descent on the probability simplex and then pruned to the sparse
state matrix.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
import math

import numpy as np
from scipy import sparse

from .const import (
    DEFAULT_CANDIDATE_CAP,
    DEFAULT_EPS_PRUNE,
    DEFAULT_INIT,
    DEFAULT_MAX_ITERS,
    DEFAULT_P_MISS_NEG,
    DEFAULT_P_MISS_POS,
    DEFAULT_SEED,
    DEFAULT_TOL,
    LIKELIHOOD_FLOOR,
    LINE_SEARCH_INITIAL_STEP,
    LINE_SEARCH_MIN_STEP,
    LINE_SEARCH_SHRINK,
    LINE_SEARCH_SUFFICIENT_DECREASE,
    LOGGER,
    MISSING,
    POSITIVE,
)
from .exceptions import (
    CapacityError,
    ConfigurationError,
    DegenerateResultError,
    DimensionError,
)
from .observations import ObservationMatrix, State, bit_weights

# Solver progress is logged every this many iterations
LOG_EVERY = 1000


@dataclass(frozen=True)
class MissingnessPrior:
    """Probabilities that a true value goes unobserved."""

    p_miss_pos: float = DEFAULT_P_MISS_POS
    p_miss_neg: float = DEFAULT_P_MISS_NEG

    def __post_init__(self) -> None:
        """Validate the probabilities."""
        if not 0 < self.p_miss_pos < 0.5:
            raise ConfigurationError(
                f"p_miss_pos must lie in (0, 0.5), got {self.p_miss_pos}"
            )
        if not 0 < self.p_miss_neg < 1:
            raise ConfigurationError(
                f"p_miss_neg must lie in (0, 1), got {self.p_miss_neg}"
            )

    @property
    def q(self) -> float:
        """Return the probability that a positive value is observed."""
        return 1.0 - self.p_miss_pos


@dataclass(frozen=True)
class SolverOptions:
    """Options of the projected gradient solver."""

    tol: float = DEFAULT_TOL
    max_iters: int = DEFAULT_MAX_ITERS
    init: str = DEFAULT_INIT
    seed: int = DEFAULT_SEED
    eps_prune: float = DEFAULT_EPS_PRUNE
    candidate_cap: int = DEFAULT_CANDIDATE_CAP


@dataclass(frozen=True, eq=False)
class CandidateStateSet:
    """States conforming to at least one observation row.

    Duplicate rows are collapsed into ``patterns`` with ``counts``;
    ``row_index`` maps every original row to its pattern.
    """

    labels: tuple[str, ...]
    values: np.ndarray
    patterns: np.ndarray
    counts: np.ndarray
    row_index: np.ndarray
    conformity: tuple[np.ndarray, ...]

    @property
    def width(self) -> int:
        """Return the number of variables."""
        return len(self.labels)

    @property
    def states(self) -> tuple[State, ...]:
        """Return the candidate states in ascending bit order."""
        return tuple(State(int(v), self.width) for v in self.values)

    def __len__(self) -> int:
        """Return the number of candidate states."""
        return int(self.values.size)

    def per_row_conformity(self, row: int) -> np.ndarray:
        """Return the candidate indices conforming to original row ``row``."""
        return self.conformity[int(self.row_index[row])]


@dataclass(frozen=True, eq=False)
class SummaryDistribution:
    """Fitted probability vector over a candidate state set."""

    candidate_set: CandidateStateSet
    probs: np.ndarray
    objective: float
    iterations: int = 0
    converged: bool = True
    # objective after initialization and after every accepted iteration
    history: tuple[float, ...] = field(default_factory=tuple)


@dataclass(frozen=True, eq=False)
class StateMatrix:
    """Sparse set of states with positive estimated probability."""

    labels: tuple[str, ...]
    states: tuple[State, ...]
    probs: np.ndarray

    def __post_init__(self) -> None:
        """Validate widths and probabilities."""
        labels = tuple(self.labels)
        states = tuple(self.states)
        probs = np.array(self.probs, dtype=np.float64, copy=True)
        if not states:
            raise DegenerateResultError("State matrix is empty")
        if probs.shape != (len(states),):
            raise DimensionError(
                f"{len(states)} states but {probs.size} probabilities"
            )
        if any(state.width != len(labels) for state in states):
            raise DimensionError("State width does not match the number of labels")
        if len({state.bits for state in states}) != len(states):
            raise DimensionError("State matrix contains duplicate states")
        if not np.all(probs > 0):
            raise DimensionError("State probabilities must be strictly positive")
        if abs(probs.sum() - 1.0) > 1e-6:
            raise DimensionError(
                f"State probabilities sum to {probs.sum()}, expected 1"
            )
        probs.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_mapping(
        cls, labels: Sequence[str], states: Mapping[str, float]
    ) -> StateMatrix:
        """Build a state matrix from ``{bitstring: probability}``."""
        parsed = [State.from_string(key) for key in states]
        return cls(tuple(labels), tuple(parsed), np.array(list(states.values())))

    @property
    def n_vars(self) -> int:
        """Return the number of variables."""
        return len(self.labels)

    def __len__(self) -> int:
        """Return the number of states."""
        return len(self.states)

    def as_dict(self) -> dict[str, float]:
        """Return ``{bitstring: probability}`` in stored order."""
        return {
            state.to_string(): float(p)
            for state, p in zip(self.states, self.probs, strict=True)
        }


def _check_width(row: Sequence[int] | np.ndarray, state: State) -> np.ndarray:
    values = np.asarray(row, dtype=np.int8)
    if values.ndim != 1 or values.size != state.width:
        raise DimensionError(
            f"Row has {values.size} entries but state has width {state.width}"
        )
    return values


def conforms(row: Sequence[int] | np.ndarray, state: State) -> bool:
    """Check whether ``state`` agrees with every observed entry of ``row``.

    Raises:
        DimensionError: If the row and state widths differ.

    """
    values = _check_width(row, state)
    observed = values != MISSING
    return bool(np.array_equal(values[observed], state.to_vector()[observed]))


def _log_factors(prior: MissingnessPrior) -> tuple[float, float, float, float]:
    """Return log-probabilities of (observed pos, missed pos, observed neg, missed neg)."""
    return (
        math.log(prior.q),
        math.log(prior.p_miss_pos),
        math.log1p(-prior.p_miss_neg),
        math.log(prior.p_miss_neg),
    )


def row_likelihood(
    row: Sequence[int] | np.ndarray, state: State, prior: MissingnessPrior
) -> float:
    """Return the probability of observing ``row`` when the truth is ``state``.

    Raises:
        DimensionError: If the row and state widths differ.

    """
    values = _check_width(row, state)
    if not conforms(values, state):
        return 0.0
    log_obs_pos, log_miss_pos, log_obs_neg, log_miss_neg = _log_factors(prior)
    observed_pos = int(np.count_nonzero(values == POSITIVE))
    observed_neg = int(np.count_nonzero(values == 0))
    positives = state.positive_count()
    return math.exp(
        observed_pos * log_obs_pos
        + (positives - observed_pos) * log_miss_pos
        + observed_neg * log_obs_neg
        + (state.width - positives - observed_neg) * log_miss_neg
    )


def _pattern_masks(patterns: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (observed mask, positive mask) of each pattern as integers."""
    weights = bit_weights(patterns.shape[1])
    observed = ((patterns != MISSING) * weights).sum(axis=1, dtype=np.int64)
    positive = ((patterns == POSITIVE) * weights).sum(axis=1, dtype=np.int64)
    return observed, positive


def _subset_sums(weights: np.ndarray) -> np.ndarray:
    """Return the sums of all 2^k subsets of ``weights``."""
    sums = np.zeros(1, dtype=np.int64)
    for weight in weights:
        sums = np.concatenate((sums, sums + weight))
    return sums


def enumerate_candidates(
    obs: ObservationMatrix, cap: int = DEFAULT_CANDIDATE_CAP
) -> CandidateStateSet:
    """Enumerate every completion of every row's missing entries.

    Args:
        obs: Observation matrix.
        cap: Maximum number of distinct candidate states.

    Returns:
        Candidate set in ascending bit order with per-row conformity.

    Raises:
        CapacityError: If the candidates would exceed ``cap``.

    """
    if cap < 1:
        raise ConfigurationError(f"candidate_cap must be positive, got {cap}")
    aggregate = obs.aggregate()
    patterns = aggregate.patterns
    weights = bit_weights(obs.n_vars)
    _, positive = _pattern_masks(patterns)

    completions: list[np.ndarray] = []
    seen: set[int] = set()
    for index, pattern in enumerate(patterns):
        missing_weights = weights[pattern == MISSING]
        if missing_weights.size >= 63 or 1 << missing_weights.size > cap:
            raise CapacityError(
                f"A row with {missing_weights.size} missing entries has "
                f"2^{missing_weights.size} completions, above the candidate cap "
                f"of {cap}; raise candidate_cap or select fewer variables"
            )
        states = positive[index] + _subset_sums(missing_weights)
        completions.append(states)
        seen.update(states.tolist())
        if len(seen) > cap:
            raise CapacityError(
                f"Candidate states exceed the cap of {cap} after {index + 1} of "
                f"{len(patterns)} distinct rows ({obs.n_rows} rows in total); "
                "raise candidate_cap or select fewer variables"
            )

    values = np.array(sorted(seen), dtype=np.int64)
    conformity = tuple(
        np.sort(np.searchsorted(values, states)) for states in completions
    )
    LOGGER.debug(
        "Enumerated %d candidate states from %d distinct rows",
        values.size,
        len(patterns),
    )
    return CandidateStateSet(
        labels=obs.labels,
        values=values,
        patterns=patterns,
        counts=aggregate.counts,
        row_index=aggregate.inverse,
        conformity=conformity,
    )


class LikelihoodModel:
    """Sparse (pattern x candidate) likelihood table with row multiplicities."""

    def __init__(
        self,
        values: np.ndarray,
        width: int,
        patterns: np.ndarray,
        counts: np.ndarray,
        conformity: Sequence[np.ndarray],
        prior: MissingnessPrior,
    ) -> None:
        """Build the table from per-pattern conformity index sets."""
        log_obs_pos, log_miss_pos, log_obs_neg, log_miss_neg = _log_factors(prior)
        observed, positive = _pattern_masks(patterns)
        observed_pos = np.bitwise_count(positive).astype(np.float64)
        observed_neg = np.bitwise_count(observed).astype(np.float64) - observed_pos
        state_pos = np.bitwise_count(values).astype(np.float64)

        row_ids = np.concatenate(
            [np.full(c.size, r, dtype=np.int64) for r, c in enumerate(conformity)]
        )
        col_ids = np.concatenate(conformity).astype(np.int64)
        y = state_pos[col_ids]
        x = observed_pos[row_ids]
        neg = observed_neg[row_ids]
        log_l = (
            x * log_obs_pos
            + (y - x) * log_miss_pos
            + neg * log_obs_neg
            + (width - y - neg) * log_miss_neg
        )
        self.table = sparse.csr_matrix(
            (np.exp(log_l), (row_ids, col_ids)),
            shape=(len(conformity), values.size),
        )
        self.counts = np.asarray(counts, dtype=np.float64)

    @classmethod
    def from_candidates(
        cls, candidates: CandidateStateSet, prior: MissingnessPrior
    ) -> LikelihoodModel:
        """Build the model for the rows the candidate set was enumerated from."""
        return cls(
            candidates.values,
            candidates.width,
            candidates.patterns,
            candidates.counts,
            candidates.conformity,
            prior,
        )

    @classmethod
    def from_observations(
        cls, values: np.ndarray, obs: ObservationMatrix, prior: MissingnessPrior
    ) -> LikelihoodModel:
        """Build the model for arbitrary rows against a fixed set of states."""
        aggregate = obs.aggregate()
        observed, positive = _pattern_masks(aggregate.patterns)
        conformity = [
            np.flatnonzero((values & obs_mask) == pos_mask)
            for obs_mask, pos_mask in zip(observed, positive, strict=True)
        ]
        return cls(
            values, obs.n_vars, aggregate.patterns, aggregate.counts, conformity, prior
        )

    @property
    def total_weight(self) -> float:
        """Return the number of original rows."""
        return float(self.counts.sum())

    def row_probabilities(self, probs: np.ndarray) -> np.ndarray:
        """Return P(O_i) for every distinct row, floored."""
        return np.maximum(self.table @ probs, LIKELIHOOD_FLOOR)

    def objective(self, probs: np.ndarray) -> float:
        """Return the negative log-likelihood of all rows."""
        return float(-(self.counts @ np.log(self.row_probabilities(probs))))

    def gradient(self, probs: np.ndarray) -> np.ndarray:
        """Return the gradient of :meth:`objective`."""
        return -(self.table.T @ (self.counts / self.row_probabilities(probs)))


def _check_distribution(dist: SummaryDistribution, obs: ObservationMatrix) -> None:
    if dist.candidate_set.width != obs.n_vars:
        raise DimensionError(
            f"Distribution has width {dist.candidate_set.width}, "
            f"observations have {obs.n_vars} variables"
        )


def objective(
    dist: SummaryDistribution, obs: ObservationMatrix, prior: MissingnessPrior
) -> float:
    """Return ``-sum_i ln P(O_i)`` over the candidate set of ``dist``."""
    _check_distribution(dist, obs)
    model = LikelihoodModel.from_observations(dist.candidate_set.values, obs, prior)
    return model.objective(np.asarray(dist.probs, dtype=np.float64))


def gradient(
    dist: SummaryDistribution, obs: ObservationMatrix, prior: MissingnessPrior
) -> np.ndarray:
    """Return the gradient of :func:`objective` with respect to ``dist.probs``."""
    _check_distribution(dist, obs)
    model = LikelihoodModel.from_observations(dist.candidate_set.values, obs, prior)
    return model.gradient(np.asarray(dist.probs, dtype=np.float64))


def project_simplex(v: Sequence[float] | np.ndarray) -> np.ndarray:
    """Return the Euclidean projection of ``v`` onto the probability simplex.

    Uses the sort-and-threshold construction: sort decreasingly, find the
    largest support size whose threshold keeps every retained entry positive,
    then shift and clip. The input is first shifted so its largest entry is
    zero, which leaves the projection unchanged and keeps the threshold
    search exact when entries differ by many orders of magnitude.

    Raises:
        DimensionError: If ``v`` is empty, not 1-D or not finite.

    """
    values = np.asarray(v, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise DimensionError("Projection needs a non-empty 1-D vector")
    if not np.all(np.isfinite(values)):
        raise DimensionError("Projection needs finite values")
    if values.min() >= 0 and values.sum() == 1.0:
        return values.copy()

    shifted = values - values.max()
    ordered = np.sort(shifted)[::-1]
    excess = np.cumsum(ordered) - 1.0
    support = np.arange(1, values.size + 1)
    retained = np.flatnonzero(ordered - excess / support > 0)
    # the largest entry always qualifies after the shift
    rho = int(retained[-1]) if retained.size else 0
    theta = excess[rho] / (rho + 1)
    return np.maximum(shifted - theta, 0.0)


def _initial_probs(size: int, options: SolverOptions) -> np.ndarray:
    if options.init == "uniform":
        return np.full(size, 1.0 / size)
    if options.init == "random":
        rng = np.random.default_rng(options.seed)
        return rng.dirichlet(np.ones(size))
    raise ConfigurationError(f"Unknown initialization {options.init!r}")


def fit(
    obs: ObservationMatrix,
    prior: MissingnessPrior,
    options: SolverOptions | None = None,
) -> SummaryDistribution:
    """Fit the maximum-likelihood state distribution.

    Projected gradient descent with Armijo backtracking. The solver works on
    the per-row mean of the objective, which has the same minimizer and keeps
    the unit trial step meaningful regardless of the row count.

    Args:
        obs: Observation matrix.
        prior: Missingness prior.
        options: Solver options; defaults when omitted.

    Returns:
        The fitted distribution. ``converged`` is False when ``max_iters`` was
        reached first; the last accepted iterate is returned either way.

    """
    options = options or SolverOptions()
    candidates = enumerate_candidates(obs, options.candidate_cap)
    model = LikelihoodModel.from_candidates(candidates, prior)
    scale = 1.0 / model.total_weight

    probs = project_simplex(_initial_probs(len(candidates), options))
    value = model.objective(probs)
    history = [value]
    converged = False
    iteration = 0

    while iteration < options.max_iters:
        iteration += 1
        grad = model.gradient(probs) * scale
        step = LINE_SEARCH_INITIAL_STEP
        while True:
            trial = project_simplex(probs - step * grad)
            trial_value = model.objective(trial)
            decrease = LINE_SEARCH_SUFFICIENT_DECREASE * float(grad @ (trial - probs))
            if trial_value * scale <= value * scale + decrease:
                break
            step *= LINE_SEARCH_SHRINK
            if step < LINE_SEARCH_MIN_STEP:
                trial, trial_value = probs, value
                break

        change = abs(value - trial_value) / max(abs(value), np.finfo(float).tiny)
        probs, value = trial, trial_value
        history.append(value)
        if iteration % LOG_EVERY == 0:
            LOGGER.debug("Iteration %d: objective %.12g", iteration, value)
        if change < options.tol:
            converged = True
            break

    if converged:
        LOGGER.info(
            "Solver converged after %d iterations, objective %.10g",
            iteration,
            value,
        )
    else:
        LOGGER.warning(
            "Solver stopped at max_iters=%d without converging, objective %.10g",
            options.max_iters,
            value,
        )

    return SummaryDistribution(
        candidate_set=candidates,
        probs=probs,
        objective=value,
        iterations=iteration,
        converged=converged,
        history=tuple(history),
    )


def prune(dist: SummaryDistribution, eps: float = DEFAULT_EPS_PRUNE) -> StateMatrix:
    """Keep states with probability above ``eps`` and renormalize.

    Raises:
        DegenerateResultError: If every state falls at or below ``eps``.

    """
    if not 0 <= eps < 1:
        raise ConfigurationError(f"eps must lie in [0, 1), got {eps}")
    keep = np.flatnonzero(dist.probs > eps)
    if keep.size == 0:
        raise DegenerateResultError(f"All states pruned at eps={eps}")
    kept = dist.probs[keep]
    states = tuple(
        State(int(v), dist.candidate_set.width) for v in dist.candidate_set.values[keep]
    )
    LOGGER.info("Pruned %d of %d states", len(dist.probs) - keep.size, len(dist.probs))
    return StateMatrix(dist.candidate_set.labels, states, kept / kept.sum())
