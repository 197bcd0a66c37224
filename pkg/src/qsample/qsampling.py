"""Accept-set subspaces, optimal-projection distances, and the tightness
construction.

For a sampling strategy and a joint state of the sampled population with an
environment, each (t, s) pair defines the subspace spanned by the accepted
basis strings tensored with the environment.  The minimal distance between
the real state and any ideal state supported on those subspaces is

    sum_{t,s} P(t,s) * sqrt(1 - inside_weight(t,s)),

which never exceeds the square root of the classical error probability.  For
strategies symmetric under a permutation group G of the index universe, the
uniform superposition over the orbit of a worst-case string attains the
square root exactly.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .quantum import PureState
from .sampling import (
    BudgetExceededError,
    SamplingStrategy,
    SymbolString,
    _check_delta,
    _rel_weight_frac,
    complement,
    deviation,
    eps_class_exact,
    resolve_budget,
    strategy_to_json,
)

__all__ = [
    "SubspaceWeight",
    "PermutationGroup",
    "accept_set",
    "project_onto_accept",
    "ideal_distance",
    "check_sqrt_bound",
    "sqrt_bound_report",
    "symmetric_worst_state",
    "is_g_symmetric",
    "apply_permutation",
    "symmetric_group",
    "pair_symmetry_group",
]


# ---------------------------------------------------------------------------
# accept sets and projections
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SubspaceWeight:
    """Overlap of a state with one accept subspace.

    ``inside_weight`` is the squared overlap with span(accepted strings)
    tensored with the environment; ``projected_state`` is the re-normalized
    projection, absent when the overlap is below 1e-12.
    """

    t: tuple
    s: object
    inside_weight: float
    projected_state: PureState | None

    @property
    def outside_weight(self) -> float:
        return 1.0 - self.inside_weight


def _freeze_seed(s):
    if s is None:
        return None
    if isinstance(s, tuple) and s and isinstance(s[0], (tuple, list)):
        return tuple(tuple(x) for x in s)
    if isinstance(s, (tuple, list, set, frozenset)):
        return tuple(sorted(s)) if not isinstance(s, tuple) else tuple(s)
    return s


def _all_strings(strategy: SamplingStrategy):
    return itertools.product(range(strategy.d), repeat=strategy.length)


def _accept_vector(strategy: SamplingStrategy, t, s, delta: float) -> np.ndarray:
    """Boolean accept mask over all d^L basis strings, in row-major order."""
    key = ("ts", strategy.flatten_subset(t), _freeze_seed(s), float(delta))
    mask = strategy._mask_cache.get(key)
    if mask is None:
        bound = Fraction(delta)
        mask = np.fromiter(
            (deviation(strategy, q, t, s) < bound for q in _all_strings(strategy)),
            dtype=bool,
            count=strategy.d ** strategy.length,
        )
        strategy._mask_cache[key] = mask
    return mask


def _accept_matrix(strategy: SamplingStrategy, delta: float) -> np.ndarray:
    """Accept masks for every (t, s) in the support, shape (d^L, |support|)."""
    key = ("matrix", float(delta))
    mat = strategy._mask_cache.get(key)
    if mat is None:
        support = strategy.ts_support()
        bound = Fraction(delta)
        mat = np.empty((strategy.d ** strategy.length, len(support)), dtype=bool)
        for i, q in enumerate(_all_strings(strategy)):
            mat[i, :] = [deviation(strategy, q, t, s) >= bound for (t, s, _) in support]
        np.logical_not(mat, out=mat)
        strategy._mask_cache[key] = mat
    return mat


def accept_set(strategy: SamplingStrategy, t, s, delta: float, n: int | None = None):
    """The strings whose estimate is delta-close to their remaining weight:
    exactly those spanning the accept subspace, as a set of SymbolString."""
    _check_delta(delta)
    if n is not None and int(n) != strategy.length:
        raise ValueError(f"n={n} does not match the strategy's string length {strategy.length}")
    limit = resolve_budget(None)
    if strategy.d ** strategy.length > limit:
        raise BudgetExceededError(
            f"{strategy.d ** strategy.length} strings exceed the budget {limit}"
        )
    mask = _accept_vector(strategy, t, s, delta)
    return {
        SymbolString(q, strategy.d)
        for q, ok in zip(_all_strings(strategy), mask)
        if ok
    }


def _population_weights(state: PureState, strategy: SamplingStrategy) -> np.ndarray:
    """Probability of each population basis string under computational
    measurement (environment traced out)."""
    if state.population_count != strategy.length:
        raise ValueError(
            f"state has {state.population_count} population subsystems, "
            f"strategy needs {strategy.length}"
        )
    if state.population_count and state.population_dim != strategy.d:
        raise ValueError(
            f"state qudit dimension {state.population_dim} != strategy alphabet {strategy.d}"
        )
    block = state.amps.reshape(strategy.d ** strategy.length, state.dim_E)
    return (np.abs(block) ** 2).sum(axis=1)


def project_onto_accept(
    state: PureState, strategy: SamplingStrategy, t, s, delta: float
) -> SubspaceWeight:
    """Project the state onto span(accepted strings) tensor the environment."""
    _check_delta(delta)
    weights = _population_weights(state, strategy)
    mask = _accept_vector(strategy, t, s, delta)
    inside = float(weights[mask].sum())
    projected = None
    if inside >= 1e-12:
        block = state.amps.reshape(-1, state.dim_E).copy()
        block[~mask, :] = 0.0
        projected = PureState(block.reshape(-1) / math.sqrt(inside), state.dims)
    return SubspaceWeight(
        t=strategy.flatten_subset(t),
        s=_freeze_seed(s),
        inside_weight=inside,
        projected_state=projected,
    )


def ideal_distance(
    state: PureState, strategy: SamplingStrategy, delta: float, budget: int | None = None
) -> float:
    """Exact minimum distance between the (t, s)-indexed real state and any
    ideal state confined to the accept subspaces:
    sum_{t,s} P(t,s) sqrt(1 - inside_weight(t,s))."""
    _check_delta(delta)
    weights = _population_weights(state, strategy)
    limit = resolve_budget(budget)
    cost = strategy.d ** strategy.length * (strategy.support_size() + 1)
    if cost > limit:
        raise BudgetExceededError(
            f"accept-matrix construction needs {cost} evaluations, budget is {limit}"
        )
    mat = _accept_matrix(strategy, delta)
    inside = weights @ mat
    outside = np.clip(1.0 - inside, 0.0, None)
    probs = np.fromiter(
        (float(p) for (_, _, p) in strategy.ts_support()),
        dtype=float,
        count=mat.shape[1],
    )
    return float(probs @ np.sqrt(outside))


def check_sqrt_bound(
    state: PureState, strategy: SamplingStrategy, delta: float, budget: int | None = None
) -> dict:
    """Compare the optimal-projection distance against sqrt(eps_class)."""
    ideal = ideal_distance(state, strategy, delta, budget=budget)
    eps = eps_class_exact(strategy, delta, budget=budget).value
    sqrt_eps = math.sqrt(eps)
    return {
        "ideal_distance": ideal,
        "sqrt_eps_class": sqrt_eps,
        "holds": ideal <= sqrt_eps + 1e-9,
    }


def sqrt_bound_report(
    state: PureState, strategy: SamplingStrategy, delta: float, budget: int | None = None
) -> str:
    """JSON report {strategy, delta, ideal_distance, sqrt_eps_class, gap}."""
    result = check_sqrt_bound(state, strategy, delta, budget=budget)
    return json.dumps(
        {
            "strategy": json.loads(strategy_to_json(strategy)),
            "delta": float(delta),
            "ideal_distance": result["ideal_distance"],
            "sqrt_eps_class": result["sqrt_eps_class"],
            "gap": result["sqrt_eps_class"] - result["ideal_distance"],
        },
        sort_keys=True,
    )


# ---------------------------------------------------------------------------
# permutation groups
# ---------------------------------------------------------------------------


def _compose(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    # (a . b)(i) = a(b(i))
    return tuple(a[b[i] - 1] for i in range(len(b)))


def _invert(p: tuple[int, ...]) -> tuple[int, ...]:
    inv = [0] * len(p)
    for i, image in enumerate(p):
        inv[image - 1] = i + 1
    return tuple(inv)


def apply_permutation(perm: tuple[int, ...], q) -> tuple[int, ...]:
    """Move the symbol at position i to position perm[i-1]."""
    out = [0] * len(perm)
    for i, sym in enumerate(q):
        out[perm[i] - 1] = sym
    return tuple(out)


@dataclass(frozen=True)
class PermutationGroup:
    """An explicit group of permutations of positions 1..n.

    The element list is verified to be closed under composition and inverse.
    """

    elements: tuple[tuple[int, ...], ...]
    n: int

    def __post_init__(self):
        n = int(self.n)
        elements = tuple(tuple(int(x) for x in p) for p in self.elements)
        if not elements:
            raise ValueError("a permutation group needs at least one element")
        seen = set()
        for p in elements:
            if len(p) != n or sorted(p) != list(range(1, n + 1)):
                raise ValueError(f"{p} is not a permutation of 1..{n}")
            if p in seen:
                raise ValueError(f"duplicate element {p}")
            seen.add(p)
        for p in elements:
            if _invert(p) not in seen:
                raise ValueError(f"inverse of {p} missing: not a group")
        for a in elements:
            for b in elements:
                if _compose(a, b) not in seen:
                    raise ValueError(f"composition of {a} and {b} missing: not a group")
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "n", n)

    @property
    def order(self) -> int:
        return len(self.elements)

    @staticmethod
    def from_generators(generators, n: int) -> "PermutationGroup":
        """Close a generator list under composition."""
        gens = [tuple(int(x) for x in p) for p in generators]
        identity = tuple(range(1, n + 1))
        closure = {identity}
        frontier = [identity]
        while frontier:
            base = frontier.pop()
            for g in gens:
                new = _compose(g, base)
                if new not in closure:
                    closure.add(new)
                    frontier.append(new)
        return PermutationGroup(tuple(sorted(closure)), n)


def symmetric_group(n: int) -> PermutationGroup:
    """All n! permutations of 1..n."""
    elements = tuple(itertools.permutations(range(1, n + 1)))
    return PermutationGroup(elements, n)


def pair_symmetry_group(n: int) -> PermutationGroup:
    """Permutations of the flattened pair universe [n] x {0, 1} that permute
    the pairs and may swap the two elements inside each pair (order 2^n n!)."""
    elements = []
    for perm in itertools.permutations(range(1, n + 1)):
        for flips in itertools.product((0, 1), repeat=n):
            image = [0] * (2 * n)
            for i in range(1, n + 1):
                target = perm[i - 1]
                for j in (0, 1):
                    image[(i - 1) + j * n] = target + (j ^ flips[target - 1]) * n
            elements.append(tuple(image))
    return PermutationGroup(tuple(elements), 2 * n)


# ---------------------------------------------------------------------------
# symmetry test and the tightness construction
# ---------------------------------------------------------------------------


def _ts_statistics(strategy: SamplingStrategy, q, t, s) -> tuple[Fraction, Fraction]:
    sym = tuple(q)
    f = strategy.estimate_frac(sym, t, s)
    tbar = complement(strategy.flatten_subset(t), strategy.length)
    true = _rel_weight_frac(tuple(sym[i - 1] for i in tbar))
    return (true, f)


def is_g_symmetric(
    strategy: SamplingStrategy, G: PermutationGroup, budget: int | None = None
) -> bool:
    """Whether some fixed (t0, s0) makes the orbit statistics match.

    True iff there is a positive-probability (t0, s0) such that for every
    string q, the distribution of (remaining weight, estimate) under the
    strategy's (T, S) draw equals the distribution of the same pair at
    (t0, s0) for a uniformly random group element applied to q.  Comparison
    is exact rational arithmetic.
    """
    if G.n != strategy.length:
        raise ValueError(
            f"group acts on {G.n} positions, strategy strings have length {strategy.length}"
        )
    support = strategy.ts_support()
    strings = list(_all_strings(strategy))
    limit = resolve_budget(budget)
    cost = len(strings) * (len(support) + G.order)
    if cost > limit:
        raise BudgetExceededError(
            f"symmetry check needs about {cost} evaluations, budget is {limit}"
        )

    # orbit multiset of every string, computed once
    orbit_counts = {}
    for q in strings:
        counts = {}
        for perm in G.elements:
            image = apply_permutation(perm, q)
            counts[image] = counts.get(image, 0) + 1
        orbit_counts[q] = counts

    # (T, S)-induced statistics of every string, computed once
    ts_dists = {}
    for q in strings:
        dist = {}
        for t, s, prob in support:
            key = _ts_statistics(strategy, q, t, s)
            dist[key] = dist.get(key, Fraction(0)) + prob
        ts_dists[q] = dist

    order = G.order
    for t0, s0, _ in support:
        stat_cache = {}
        ok = True
        for q in strings:
            orbit_dist = {}
            for image, count in orbit_counts[q].items():
                key = stat_cache.get(image)
                if key is None:
                    key = _ts_statistics(strategy, image, t0, s0)
                    stat_cache[image] = key
                orbit_dist[key] = orbit_dist.get(key, Fraction(0)) + Fraction(count, order)
            if orbit_dist != ts_dists[q]:
                ok = False
                break
        if ok:
            return True
    return False


def symmetric_worst_state(
    strategy: SamplingStrategy,
    G: PermutationGroup,
    delta: float,
    budget: int | None = None,
) -> PureState:
    """Uniform superposition over the orbit of a worst-case string.

    Group elements fixing a string accumulate amplitude on it; the vector is
    then normalized, which leaves the uniform superposition over the distinct
    orbit strings.  The environment is trivial (dimension 1).
    """
    _check_delta(delta)
    if not is_g_symmetric(strategy, G, budget=budget):
        raise ValueError("strategy is not symmetric under the given group")
    witness = eps_class_exact(strategy, delta, budget=budget).worst_case_string
    d, L = strategy.d, strategy.length
    amps = np.zeros(d ** L, dtype=complex)
    for perm in G.elements:
        image = apply_permutation(perm, witness.symbols)
        index = 0
        for sym in image:
            index = index * d + sym
        amps[index] += 1.0
    amps /= np.linalg.norm(amps)
    return PureState(amps, (d,) * L + (1,))
