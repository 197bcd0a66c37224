"""Classical sampling strategies and their error probabilities.

A sampling strategy draws a subset ``t`` of positions in a length-L symbol
string ``q`` together with an auxiliary seed ``s``, and turns the observed
symbols ``q|t`` into an estimate ``f(t, q|t, s)`` for the relative Hamming
weight of the unobserved rest ``q|tbar``.  The accept set collects the strings
whose estimate is delta-close to the true value,

    B(t, s, delta) = { b : |relwt(b|tbar) - f(t, b|t, s)| < delta },

with a strict inequality, so a deviation of exactly delta is a rejection.  The
(classical) error probability is the worst case over strings of the
probability of falling outside the accept set,

    eps_class(delta) = max_q Pr[ q not in B(T, S, delta) ].

Six built-in strategy kinds are provided ("example1" .. "example6") plus a
constructor for custom strategies.  Exact error probabilities use rational
arithmetic throughout, so boundary ties are resolved bit-for-bit; Monte-Carlo
estimation is available for strategies or sizes outside the exact budget.

Positions are 1-based.  Pair-indexed strategies ("example5", "example6") view
a string of length 2n as n pairs; the pair element (i, j) with i in [1..n] and
j in {0, 1} sits at flat position i + j*n.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "SymbolString",
    "SubsetIndex",
    "SamplingStrategy",
    "ErrorEstimate",
    "BudgetExceededError",
    "rel_weight",
    "restrict",
    "complement",
    "pair_position",
    "position_pair",
    "make_strategy",
    "custom_strategy",
    "estimate",
    "in_accept_set",
    "deviation",
    "failure_probability",
    "eps_class_exact",
    "eps_class_mc",
    "analytic_bound",
    "BOUND_KINDS",
    "STRATEGY_KINDS",
    "strategy_to_json",
    "strategy_from_json",
    "error_estimate_to_json",
    "mc_halfwidth",
    "resolve_budget",
]

STRATEGY_KINDS = (
    "example1",  # random sampling without replacement
    "example2",  # random sampling with replacement
    "example3",  # uniformly random subset
    "example4",  # without replacement, using only part of the sample
    "example5",  # pairwise one-out-of-two, using only part of the sample
    "example6",  # pairwise biased one-out-of-two
)

_DEFAULT_BUDGET = 2 ** 28


class BudgetExceededError(RuntimeError):
    """Raised when an exact enumeration would exceed the evaluation budget."""


def resolve_budget(budget: int | None = None) -> int:
    """Return the exact-enumeration budget.

    Priority: explicit argument, then the ``QSAMPLE_BUDGET`` environment
    variable, then the default of 2**28 evaluations.
    """
    if budget is not None:
        if budget <= 0:
            raise ValueError("budget must be positive")
        return budget
    raw = os.environ.get("QSAMPLE_BUDGET")
    if raw is None:
        return _DEFAULT_BUDGET
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"QSAMPLE_BUDGET must be an integer, got {raw!r}") from exc
    if value <= 0:
        raise ValueError("QSAMPLE_BUDGET must be positive")
    return value


# ---------------------------------------------------------------------------
# strings and index sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SymbolString:
    """A string over the alphabet {0, .., d-1} with the symbol 0 distinguished.

    Parameters
    ----------
    symbols : tuple of int
        The symbols, one per position.
    d : int
        Alphabet size, at least 2.
    """

    symbols: tuple[int, ...]
    d: int = 2

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(int(x) for x in self.symbols))
        if self.d < 2:
            raise ValueError(f"alphabet size d must be >= 2, got {self.d}")
        for x in self.symbols:
            if not 0 <= x < self.d:
                raise ValueError(f"symbol {x} outside alphabet [0, {self.d})")

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)


@dataclass(frozen=True)
class SubsetIndex:
    """A strictly increasing tuple of 1-based positions inside [1..n].

    For pair-indexed strategies the universe [n] x {0, 1} is flattened, the
    element (i, j) mapping to position i + j*n.
    """

    positions: tuple[int, ...]
    n: int

    def __post_init__(self):
        object.__setattr__(self, "positions", tuple(int(x) for x in self.positions))
        if self.n < 0:
            raise ValueError("universe size must be non-negative")
        prev = 0
        for x in self.positions:
            if x <= prev:
                raise ValueError(f"positions must be strictly increasing, got {self.positions}")
            prev = x
        if self.positions and self.positions[-1] > self.n:
            raise ValueError(f"position {self.positions[-1]} outside universe [1..{self.n}]")

    def complement(self) -> "SubsetIndex":
        inside = set(self.positions)
        return SubsetIndex(tuple(i for i in range(1, self.n + 1) if i not in inside), self.n)

    def __len__(self) -> int:
        return len(self.positions)

    def __iter__(self):
        return iter(self.positions)


def pair_position(i: int, j: int, n: int) -> int:
    """Flat 1-based position of pair element (i, j) in a 2n universe."""
    if not 1 <= i <= n:
        raise ValueError(f"pair index {i} outside [1..{n}]")
    if j not in (0, 1):
        raise ValueError(f"pair slot must be 0 or 1, got {j}")
    return i + j * n


def position_pair(pos: int, n: int) -> tuple[int, int]:
    """Inverse of :func:`pair_position`."""
    if not 1 <= pos <= 2 * n:
        raise ValueError(f"position {pos} outside [1..{2 * n}]")
    return (pos, 0) if pos <= n else (pos - n, 1)


def _symbols(q) -> tuple[int, ...]:
    if isinstance(q, SymbolString):
        return q.symbols
    return tuple(int(x) for x in q)


def _positions(J, n: int | None = None) -> tuple[int, ...]:
    """Normalize an index collection to a sorted tuple of flat 1-based positions."""
    if J is None:
        return ()
    if isinstance(J, SubsetIndex):
        return J.positions
    items = list(J)
    flat = []
    for x in items:
        if isinstance(x, tuple):
            if n is None:
                raise ValueError("pair labels need the pair count n")
            flat.append(pair_position(x[0], x[1], n))
        else:
            flat.append(int(x))
    flat.sort()
    for a, b in zip(flat, flat[1:]):
        if a == b:
            raise ValueError(f"duplicate position {a}")
    return tuple(flat)


def rel_weight(q) -> float:
    """Relative Hamming weight: fraction of non-zero symbols; 0.0 for the empty string."""
    sym = _symbols(q)
    if not sym:
        return 0.0
    return sum(1 for x in sym if x != 0) / len(sym)


def _rel_weight_frac(sym: Sequence[int]) -> Fraction:
    if not sym:
        return Fraction(0)
    return Fraction(sum(1 for x in sym if x != 0), len(sym))


def restrict(q, J, n: int | None = None) -> tuple[int, ...]:
    """Restrict a string to the 1-based positions in J, in increasing position order."""
    sym = _symbols(q)
    pos = _positions(J, n)
    if pos and pos[-1] > len(sym):
        raise ValueError(f"position {pos[-1]} outside string of length {len(sym)}")
    return tuple(sym[i - 1] for i in pos)


def complement(J, n: int) -> tuple[int, ...]:
    """Positions of [1..n] not in J."""
    inside = set(_positions(J))
    return tuple(i for i in range(1, n + 1) if i not in inside)


# ---------------------------------------------------------------------------
# strategies
# ---------------------------------------------------------------------------


@dataclass
class SamplingStrategy:
    """A sampling strategy: subset law, seed law, and estimator.

    Instances are produced by :func:`make_strategy` or :func:`custom_strategy`.
    ``n`` is the pair count for pair-indexed kinds (strings then have length
    2n) and the string length otherwise.  Seeds may condition on the drawn
    subset internally; they are exposed as one joint (t, s) draw.

    Attributes
    ----------
    kind : str
        One of the built-in kinds or "custom".
    n, k, p, d : parameters as supplied to the constructor.
    pair_indexed : bool
        Whether strings are indexed by [n] x {0, 1}.
    permutation_invariant : bool
        Whether the per-string failure probability depends on the string only
        through its Hamming weight (enables weight-class enumeration).
    pattern_invariant : bool
        Whether the estimator sees symbols only through their zero pattern.
    """

    kind: str
    n: int
    k: int | None = None
    p: float | None = None
    d: int = 2
    pair_indexed: bool = False
    permutation_invariant: bool = False
    pattern_invariant: bool = True
    estimator: Callable | None = field(default=None, repr=False)
    _support: list | None = field(default=None, repr=False)
    _dev_cache: dict = field(default_factory=dict, repr=False)
    _mask_cache: dict = field(default_factory=dict, repr=False)

    @property
    def length(self) -> int:
        """Length of the strings the strategy samples from."""
        return 2 * self.n if self.pair_indexed else self.n

    # -- enumeration --------------------------------------------------------

    def support_size(self) -> int:
        """Number of (t, s) pairs with positive probability."""
        n, k = self.n, self.k
        if self.kind == "example1":
            return math.comb(n, k)
        if self.kind == "example3":
            return 2 ** n
        if self.kind == "example4":
            return math.comb(n, k) * 2 ** k
        if self.kind == "example5":
            return 2 ** n * math.comb(n, k)
        if self.kind == "example6":
            total = 0
            for a in range(n + 1):  # a = |t~|
                s0 = math.comb(a, min(k // 2, a))
                s1 = math.comb(n - a, min(k // 2, n - a))
                total += math.comb(n, a) * s0 * s1
            return total
        if self.kind == "custom":
            return len(self._support)
        raise NotImplementedError(
            f"{self.kind} has no enumerable (t, s) support in this implementation"
        )

    def ts_support(self) -> list[tuple[tuple, object, Fraction]]:
        """All (t, s, probability) triples; probabilities are exact Fractions summing to 1."""
        if self._support is None:
            self._support = list(self._iter_support())
        return self._support

    def _iter_support(self):
        n, k = self.n, self.k
        if self.kind == "example1":
            p = Fraction(1, math.comb(n, k))
            for t in itertools.combinations(range(1, n + 1), k):
                yield (t, None, p)
        elif self.kind == "example3":
            p = Fraction(1, 2 ** n)
            for r in range(2 ** n):
                t = tuple(i + 1 for i in range(n) if (r >> i) & 1)
                yield (t, None, p)
        elif self.kind == "example4":
            pt = Fraction(1, math.comb(n, k))
            ps = Fraction(1, 2 ** k)
            for t in itertools.combinations(range(1, n + 1), k):
                for r in range(2 ** k):
                    s = tuple(t[i] for i in range(k) if (r >> i) & 1)
                    yield (t, s, pt * ps)
        elif self.kind == "example5":
            pt = Fraction(1, 2 ** n)
            ps = Fraction(1, math.comb(n, k))
            for r in range(2 ** n):
                # bit i set: pair i+1 contributes its slot-1 element
                t = tuple(sorted((i + 1) + n * ((r >> i) & 1) for i in range(n)))
                for s in itertools.combinations(range(1, n + 1), k):
                    yield (t, s, pt * ps)
        elif self.kind == "example6":
            fp = Fraction(self.p)
            half = k // 2
            for r in range(2 ** n):
                sel = [i + 1 for i in range(n) if (r >> i) & 1]  # t~
                rest = [i + 1 for i in range(n) if not (r >> i) & 1]
                t0 = tuple(sel)  # slot-0 elements of t~
                t1 = tuple(i + n for i in rest)  # slot-1 elements of the complement
                t = tuple(sorted(t0 + t1))
                pt = fp ** len(sel) * (1 - fp) ** len(rest)
                sz0, sz1 = min(half, len(t0)), min(half, len(t1))
                ps = Fraction(1, math.comb(len(t0), sz0) * math.comb(len(t1), sz1))
                for s0 in itertools.combinations(t0, sz0):
                    for s1 in itertools.combinations(t1, sz1):
                        yield (t, (s0, s1), pt * ps)
        elif self.kind == "custom":
            yield from self._support
        else:
            raise NotImplementedError(
                f"{self.kind} has no enumerable (t, s) support in this implementation"
            )

    # -- sampling -----------------------------------------------------------

    def sample_ts(self, rng: np.random.Generator) -> tuple[tuple, object]:
        """Draw one (t, s) pair."""
        n, k = self.n, self.k
        if self.kind == "example1":
            t = tuple(sorted(rng.choice(n, size=k, replace=False) + 1))
            return t, None
        if self.kind == "example2":
            draws = tuple(int(x) for x in rng.integers(1, n + 1, size=k))
            return tuple(sorted(set(draws))), draws
        if self.kind == "example3":
            bits = rng.integers(0, 2, size=n)
            return tuple(i + 1 for i in range(n) if bits[i]), None
        if self.kind == "example4":
            t = tuple(sorted(rng.choice(n, size=k, replace=False) + 1))
            keep = rng.integers(0, 2, size=k)
            return t, tuple(t[i] for i in range(k) if keep[i])
        if self.kind == "example5":
            slots = rng.integers(0, 2, size=n)
            t = tuple(sorted((i + 1) + n * int(slots[i]) for i in range(n)))
            s = tuple(sorted(rng.choice(n, size=k, replace=False) + 1))
            return t, s
        if self.kind == "example6":
            half = k // 2
            bits = rng.random(n) < self.p
            t0 = tuple(i + 1 for i in range(n) if bits[i])
            t1 = tuple(i + 1 + n for i in range(n) if not bits[i])
            s0 = tuple(sorted(rng.choice(t0, size=min(half, len(t0)), replace=False))) if t0 else ()
            s1 = tuple(sorted(rng.choice(t1, size=min(half, len(t1)), replace=False))) if t1 else ()
            return tuple(sorted(t0 + t1)), (s0, s1)
        if self.kind == "custom":
            support = self.ts_support()
            weights = np.array([float(p) for (_, _, p) in support])
            idx = rng.choice(len(support), p=weights / weights.sum())
            t, s, _ = support[idx]
            return t, s
        raise NotImplementedError(f"sampling not implemented for kind {self.kind}")

    # -- estimation ---------------------------------------------------------

    def estimate_frac(self, q, t, s) -> Fraction:
        """The estimate f(t, q|t, s) as an exact Fraction."""
        sym = _symbols(q)
        if len(sym) != self.length:
            raise ValueError(f"string length {len(sym)} != strategy length {self.length}")
        n = self.n
        if self.kind in ("example1", "example3"):
            return _rel_weight_frac(restrict(sym, t))
        if self.kind == "example2":
            if not s:
                raise ValueError("example2 needs the ordered draw sequence as seed")
            return _rel_weight_frac(tuple(sym[j - 1] for j in s))
        if self.kind == "example4":
            return _rel_weight_frac(restrict(sym, s))
        if self.kind == "example5":
            tset = set(_positions(t, n))
            chosen = {}
            for i in range(1, n + 1):
                chosen[i] = i if i in tset else i + n
                if (i in tset) == (i + n in tset):
                    raise ValueError("example5 subset must pick exactly one element per pair")
            pairs = sorted(int(i) for i in s)
            return _rel_weight_frac(tuple(sym[chosen[i] - 1] for i in pairs))
        if self.kind == "example6":
            s0, s1 = self._split_seed(s)
            tpos = set(_positions(t, n))
            size_tilde = sum(1 for x in tpos if x <= n)
            w0 = _rel_weight_frac(tuple(sym[i - 1] for i in s0))
            w1 = _rel_weight_frac(tuple(sym[i - 1] for i in s1))
            # |tbar_0| = n - |t~|, |tbar_1| = |t~|
            return ((n - size_tilde) * w0 + size_tilde * w1) / n
        if self.kind == "custom":
            value = self.estimator(tuple(_positions(t, n)), restrict(sym, t), s)
            return value if isinstance(value, Fraction) else Fraction(value)
        raise NotImplementedError(f"estimator not implemented for kind {self.kind}")

    def _split_seed(self, s) -> tuple[tuple[int, ...], tuple[int, ...]]:
        n = self.n
        if isinstance(s, tuple) and len(s) == 2 and all(isinstance(x, (tuple, list)) for x in s):
            s0 = _positions(s[0], n)
            s1 = _positions(s[1], n)
        else:
            flat = _positions(s, n)
            s0 = tuple(x for x in flat if x <= n)
            s1 = tuple(x for x in flat if x > n)
        return s0, s1

    def flatten_subset(self, t) -> tuple[int, ...]:
        """Normalize a subset given as positions or (i, j) pair labels."""
        return _positions(t, self.n)


# -- constructors -----------------------------------------------------------


def make_strategy(kind: str, params: Mapping | None = None, **kwargs) -> SamplingStrategy:
    """Build one of the six built-in strategies.

    Parameters
    ----------
    kind : str
        One of "example1" .. "example6".
    params : mapping, optional
        Parameter dict with keys among {"n", "k", "p", "d"}; keyword arguments
        are merged on top.

    Raises
    ------
    ValueError
        On an unknown kind or a parameter violating its constraint; the
        message names the violated constraint.
    """
    merged = dict(params or {})
    merged.update(kwargs)
    if kind not in STRATEGY_KINDS:
        raise ValueError(f"unknown strategy kind {kind!r}; expected one of {STRATEGY_KINDS}")
    allowed = {"n", "k", "p", "d"}
    extra = set(merged) - allowed
    if extra:
        raise ValueError(f"unexpected parameters {sorted(extra)} for {kind}")

    n = merged.get("n")
    if n is None:
        raise ValueError(f"{kind} requires parameter n")
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    d = int(merged.get("d", 2))
    if d < 2:
        raise ValueError(f"alphabet size d must be >= 2, got {d}")

    k = merged.get("k")
    p = merged.get("p")

    if kind == "example3":
        if k is not None:
            raise ValueError("example3 takes no sample size k")
        return SamplingStrategy(kind, n, d=d, permutation_invariant=True)

    if k is None:
        raise ValueError(f"{kind} requires parameter k")
    k = int(k)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")

    if kind in ("example1", "example4"):
        if k > n:
            raise ValueError(f"{kind} requires k <= n, got k={k}, n={n}")
        return SamplingStrategy(kind, n, k=k, d=d, permutation_invariant=True)
    if kind == "example2":
        return SamplingStrategy(kind, n, k=k, d=d)
    if kind == "example5":
        if k > n:
            raise ValueError(f"example5 requires k <= n pairs, got k={k}, n={n}")
        return SamplingStrategy(kind, n, k=k, d=d, pair_indexed=True)
    # example6
    if p is None:
        raise ValueError("example6 requires the selection bias p")
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"example6 requires 0 < p < 1, got p={p}")
    if k % 2 != 0:
        raise ValueError(f"example6 requires an even k, got k={k}")
    if k // 2 > n:
        raise ValueError(f"example6 requires k/2 <= n, got k={k}, n={n}")
    return SamplingStrategy(kind, n, k=k, p=p, d=d, pair_indexed=True)


def custom_strategy(
    n: int,
    support: Iterable[tuple[Iterable[int], object, Fraction]],
    estimator: Callable,
    d: int = 2,
    pattern_invariant: bool = False,
) -> SamplingStrategy:
    """Build a strategy from an explicit (t, s, probability) table.

    ``estimator(t, q_t, s)`` receives the flat 1-based subset, the restricted
    symbols, and the seed, and returns the estimate as a number.  Exact
    enumeration iterates over all d^n strings unless ``pattern_invariant``
    declares the estimator blind to the distinction between non-zero symbols.
    """
    table = []
    total = Fraction(0)
    for t, s, prob in support:
        prob = prob if isinstance(prob, Fraction) else Fraction(prob)
        if prob < 0:
            raise ValueError("probabilities must be non-negative")
        table.append((tuple(_positions(t)), s, prob))
        total += prob
    if total != 1:
        raise ValueError(f"support probabilities must sum to 1, got {total}")
    return SamplingStrategy(
        "custom",
        int(n),
        d=int(d),
        pattern_invariant=bool(pattern_invariant),
        estimator=estimator,
        _support=table,
    )


# ---------------------------------------------------------------------------
# pointwise operations
# ---------------------------------------------------------------------------


def estimate(strategy: SamplingStrategy, q, t, s=None) -> float:
    """Evaluate the estimator f(t, q|t, s)."""
    return float(strategy.estimate_frac(q, t, s))


def deviation(strategy: SamplingStrategy, q, t, s=None) -> Fraction:
    """|relwt(q|tbar) - f(t, q|t, s)| as an exact Fraction."""
    sym = _symbols(q)
    f = strategy.estimate_frac(sym, t, s)
    tbar = complement(strategy.flatten_subset(t), strategy.length)
    true = _rel_weight_frac(tuple(sym[i - 1] for i in tbar))
    return abs(true - f)


def in_accept_set(strategy: SamplingStrategy, q, t, s, delta: float) -> bool:
    """Strict accept test: deviation < delta; a tie at exactly delta rejects."""
    _check_delta(delta)
    return deviation(strategy, q, t, s) < Fraction(delta)


def _check_delta(delta: float) -> None:
    if not 0.0 < float(delta) < 1.0:
        raise ValueError(f"delta must satisfy 0 < delta < 1, got {delta}")


def _deviation_table(strategy: SamplingStrategy, sym: tuple[int, ...]):
    """Cached list of (deviation, probability) over the (t, s) support."""
    cached = strategy._dev_cache.get(sym)
    if cached is None:
        cached = [
            (deviation(strategy, sym, t, s), prob)
            for (t, s, prob) in strategy.ts_support()
        ]
        strategy._dev_cache[sym] = cached
    return cached


def failure_probability(strategy: SamplingStrategy, q, delta: float) -> Fraction:
    """Exact Pr[q not in B(T, S, delta)] for one fixed string q."""
    _check_delta(delta)
    bound = Fraction(delta)
    sym = _symbols(q)
    return sum(
        (prob for dev, prob in _deviation_table(strategy, sym) if dev >= bound),
        Fraction(0),
    )


# ---------------------------------------------------------------------------
# error probabilities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ErrorEstimate:
    """Result of an error-probability computation.

    Attributes
    ----------
    value : float
        The error probability (exact mode: a ratio of integer counts).
    mode : str
        "exact" or "monte-carlo".
    trials : int or None
        Sample count in Monte-Carlo mode.
    confidence_halfwidth : float or None
        99% two-sided Hoeffding halfwidth sqrt(ln(2/0.01) / (2 * trials)).
    worst_case_string : SymbolString or None
        A maximizing string (exact mode only).
    """

    value: float
    mode: str
    trials: int | None = None
    confidence_halfwidth: float | None = None
    worst_case_string: SymbolString | None = None

    def __post_init__(self):
        if self.mode not in ("exact", "monte-carlo"):
            raise ValueError(f"mode must be 'exact' or 'monte-carlo', got {self.mode!r}")
        if not -1e-12 <= self.value <= 1 + 1e-12:
            raise ValueError(f"value must lie in [0, 1], got {self.value}")


def mc_halfwidth(trials: int) -> float:
    """99% two-sided Hoeffding confidence halfwidth for a given trial count."""
    return math.sqrt(math.log(2 / 0.01) / (2 * trials))


def _exact_candidates(strategy: SamplingStrategy):
    """Candidate strings whose maximum equals the maximum over all strings."""
    L = strategy.length
    if strategy.permutation_invariant:
        # weight classes: n+1 representatives instead of d^n strings
        return [tuple([0] * (L - w) + [1] * w) for w in range(L + 1)]
    if strategy.pattern_invariant:
        return [tuple(int(b) for b in format(r, f"0{L}b")) for r in range(2 ** L)]
    return [tuple(reversed(q)) for q in itertools.product(range(strategy.d), repeat=L)]


def _candidate_count(strategy: SamplingStrategy) -> int:
    L = strategy.length
    if strategy.permutation_invariant:
        return L + 1
    if strategy.pattern_invariant:
        return 2 ** L
    return strategy.d ** L


def eps_class_exact(
    strategy: SamplingStrategy, delta: float, budget: int | None = None
) -> ErrorEstimate:
    """Exact worst-case error probability, maximized over all strings.

    Enumerates Hamming-weight classes when the strategy declares permutation
    invariance, zero patterns when the estimator is pattern-invariant, and all
    d^n strings otherwise.  Refuses strategies without an enumerable (t, s)
    support and enumerations beyond the evaluation budget.
    """
    _check_delta(delta)
    if strategy.kind == "example2":
        raise NotImplementedError(
            "example2 (sampling with replacement) has no enumerable (t, s) support; "
            "no exact error probability is computed for it — use eps_class_mc per string"
        )
    limit = resolve_budget(budget)
    cost = _candidate_count(strategy) * strategy.support_size()
    if cost > limit:
        raise BudgetExceededError(
            f"exact enumeration needs {cost} evaluations, budget is {limit}; "
            "use eps_class_mc or raise QSAMPLE_BUDGET"
        )
    bound = Fraction(delta)
    best: Fraction = Fraction(-1)
    best_q: tuple[int, ...] | None = None
    for q in _exact_candidates(strategy):
        prob = sum(
            (p for dev, p in _deviation_table(strategy, q) if dev >= bound),
            Fraction(0),
        )
        if prob > best:
            best, best_q = prob, q
    return ErrorEstimate(
        value=float(best),
        mode="exact",
        worst_case_string=SymbolString(best_q, strategy.d),
    )


def eps_class_mc(
    strategy: SamplingStrategy, q, delta: float, trials: int, rng_seed: int = 0
) -> ErrorEstimate:
    """Monte-Carlo estimate of Pr[q not in B(T, S, delta)] for one fixed string.

    Each trial draws its own generator from (rng_seed, trial index), so the
    result does not depend on execution order.
    """
    _check_delta(delta)
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    sym = _symbols(q)
    bound = Fraction(delta)
    failures = 0
    for i in range(trials):
        rng = np.random.default_rng((int(rng_seed), i))
        t, s = strategy.sample_ts(rng)
        if deviation(strategy, sym, t, s) >= bound:
            failures += 1
    return ErrorEstimate(
        value=failures / trials,
        mode="monte-carlo",
        trials=trials,
        confidence_halfwidth=mc_halfwidth(trials),
    )


# ---------------------------------------------------------------------------
# analytic bounds
# ---------------------------------------------------------------------------

BOUND_KINDS = (
    # the first two bound the sample mean against the WHOLE-string mean;
    # the strategy-specific kinds below bound the accept-set error, where the
    # reference is the mean over the unobserved rest
    "hoeffding",  # with replacement: 2 exp(-2 delta^2 k)
    "serfling",  # without replacement: 2 exp(-2 delta^2 k n / (n - k + 1))
    "example1-general",  # 2 exp(-2 (1 - k/n)^2 delta^2 k)
    "example1-simple",  # 2 exp(-delta^2 k / 2), needs k <= n/2
    "example1-serfling",  # 2 exp(-delta^2 k n / (n + 2)), needs k <= n/2
    "example3",  # 4 exp(-n delta^2 / 32)
    "example4",  # 6 exp(-k delta^2 / 50), needs k <= n/2
    "example5",  # 2 exp(-delta^2 k / 6)
    "example6",  # four-term bound, free parameters (eps, beta)
)


def _need(params: Mapping, kind: str, *names: str) -> list:
    out = []
    for name in names:
        if name not in params or params[name] is None:
            raise ValueError(f"bound {kind} requires parameter {name}")
        out.append(params[name])
    return out


def analytic_bound(kind: str, params: Mapping, delta: float) -> float:
    """Evaluate a closed-form error-probability bound.

    Values above 1 are returned as-is.  Side-condition violations raise a
    ValueError naming the condition.  For "example6" the free parameters may
    be supplied as ``eps`` and ``beta``; when omitted, the bound is minimized
    over a 10 x 10 grid of admissible (eps, beta) values.
    """
    delta = float(delta)
    if delta < 0:
        raise ValueError(f"delta must be >= 0, got {delta}")
    if kind == "hoeffding":
        (k,) = _need(params, kind, "k")
        return 2 * math.exp(-2 * delta ** 2 * k)
    if kind == "serfling":
        n, k = _need(params, kind, "n", "k")
        if not 1 <= k <= n:
            raise ValueError(f"serfling requires 1 <= k <= n, got k={k}, n={n}")
        return 2 * math.exp(-2 * delta ** 2 * k * n / (n - k + 1))
    if kind == "example1-general":
        n, k = _need(params, kind, "n", "k")
        if not 1 <= k <= n:
            raise ValueError(f"example1-general requires 1 <= k <= n, got k={k}, n={n}")
        return 2 * math.exp(-2 * (1 - k / n) ** 2 * delta ** 2 * k)
    if kind == "example1-simple":
        n, k = _need(params, kind, "n", "k")
        if 2 * k > n:
            raise ValueError(f"example1-simple requires k <= n/2, got k={k}, n={n}")
        return 2 * math.exp(-delta ** 2 * k / 2)
    if kind == "example1-serfling":
        n, k = _need(params, kind, "n", "k")
        if 2 * k > n:
            raise ValueError(f"example1-serfling requires k <= n/2, got k={k}, n={n}")
        return 2 * math.exp(-delta ** 2 * k * n / (n + 2))
    if kind == "example3":
        (n,) = _need(params, kind, "n")
        return 4 * math.exp(-n * delta ** 2 / 32)
    if kind == "example4":
        n, k = _need(params, kind, "n", "k")
        if 2 * k > n:
            raise ValueError(f"example4 requires k <= n/2, got k={k}, n={n}")
        return 6 * math.exp(-k * delta ** 2 / 50)
    if kind == "example5":
        (k,) = _need(params, kind, "k")
        return 2 * math.exp(-delta ** 2 * k / 6)
    if kind == "example6":
        return _example6_bound(params, delta)
    raise ValueError(f"unknown bound kind {kind!r}; expected one of {BOUND_KINDS}")


def _example6_terms(n: int, k: int, p: float, delta: float, eps: float, beta: float) -> float:
    if not 0 < beta < min(p, 1 - p):
        raise ValueError(
            f"example6 requires 0 < beta < min(p, 1-p), got beta={beta}, p={p}"
        )
    if not 0 < eps < delta:
        raise ValueError(f"example6 requires 0 < eps < delta, got eps={eps}, delta={delta}")
    return (
        2 * math.exp(-2 * n * eps ** 2 * (1 - p - beta) ** 2 * (p - beta))
        + 2 * math.exp(-2 * n * eps ** 2 * (p - beta) ** 2 * (1 - p - beta))
        + 4 * math.exp(-k * (delta - eps) ** 2)
        + 2 * math.exp(-2 * beta ** 2 * n)
    )


def _example6_bound(params: Mapping, delta: float) -> float:
    n, k, p = _need(params, "example6", "n", "k", "p")
    if not 0 < p < 1:
        raise ValueError(f"example6 requires 0 < p < 1, got p={p}")
    eps = params.get("eps")
    beta = params.get("beta")
    if (eps is None) != (beta is None):
        raise ValueError("example6 takes eps and beta together, or neither")
    if eps is not None:
        return _example6_terms(n, k, p, delta, float(eps), float(beta))
    if delta <= 0:
        raise ValueError("example6 grid minimization requires delta > 0")
    beta_cap = min(p, 1 - p)
    best = math.inf
    for i in range(1, 11):  # 10 x 10 interior grid over (0, delta) x (0, beta_cap)
        for j in range(1, 11):
            value = _example6_terms(
                n, k, p, delta, delta * i / 11, beta_cap * j / 11
            )
            best = min(best, value)
    return best


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def strategy_to_json(strategy: SamplingStrategy) -> str:
    """Serialize a built-in strategy as a JSON object {kind, n, k?, p?}."""
    if strategy.kind == "custom":
        raise ValueError("custom strategies have no JSON form")
    obj: dict = {"kind": strategy.kind, "n": strategy.n}
    if strategy.k is not None:
        obj["k"] = strategy.k
    if strategy.p is not None:
        obj["p"] = strategy.p
    if strategy.d != 2:
        obj["d"] = strategy.d
    return json.dumps(obj, sort_keys=True)


def strategy_from_json(text: str) -> SamplingStrategy:
    """Inverse of :func:`strategy_to_json`."""
    obj = json.loads(text)
    kind = obj.pop("kind", None)
    if kind is None:
        raise ValueError("strategy JSON needs a 'kind' field")
    return make_strategy(kind, obj)


def error_estimate_to_json(est: ErrorEstimate) -> str:
    """Serialize an ErrorEstimate with all fields."""
    wcs = None
    if est.worst_case_string is not None:
        wcs = {"symbols": list(est.worst_case_string.symbols), "d": est.worst_case_string.d}
    return json.dumps(
        {
            "value": est.value,
            "mode": est.mode,
            "trials": est.trials,
            "confidence_halfwidth": est.confidence_halfwidth,
            "worst_case_string": wcs,
        },
        sort_keys=True,
    )
