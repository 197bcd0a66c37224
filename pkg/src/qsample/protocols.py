"""Desk-scale simulations of commit-and-open OT and entanglement-based key
distribution, with their security-bound evaluators.

Both protocols run end to end from a seeded RNG: transcripts replay
byte-identically for a fixed (params, adversary, rng_seed).  The key
distribution simulator additionally supports an exact-distance mode at small n
where the final (key, adversary-view) state is assembled branch by branch and
compared against an ideal uniform key.

Bit commitment is modeled as an ideal registry: committed values are recorded,
openings are checked against the record, and any mismatch aborts the protocol.
Error correction uses a random binary linear code with syndrome decoding.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .entropy import HashFamily, binary_entropy, hash_eval, pad_input
from .quantum import (
    HADAMARD,
    BasisSpec,
    PureState,
    apply_cnot_pairs,
    apply_unitary,
    make_epr_pairs,
    measure,
    partial_trace,
    sample_measurement,
    to_density,
    trace_distance,
)
from .sampling import BudgetExceededError, complement, rel_weight, resolve_budget, restrict

__all__ = [
    "EccModel",
    "QkdParams",
    "QotParams",
    "AdversaryModel",
    "SecurityReport",
    "LinearCode",
    "make_linear_code",
    "qkd_bound",
    "qkd_key_length",
    "qkd_max_len",
    "qot_bound",
    "qot_bound_optimize",
    "asymptotic_qkd_rate",
    "qkd_rate_threshold",
    "simulate_qkd",
    "simulate_qot",
    "qot_catch_probability",
    "qkd_sampling_view",
    "security_report_to_json",
    "transcript_to_json",
    "rate_curve_csv",
]


# ---------------------------------------------------------------------------
# parameter types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EccModel:
    """Error-correction model: syndrome bit-length m and correction radius."""

    m: int = 0
    radius: float = 0.0

    def __post_init__(self):
        m = int(self.m)
        if m < 0:
            raise ValueError(f"syndrome length m must be >= 0, got {m}")
        if not 0.0 <= self.radius < 0.5:
            raise ValueError(f"correction radius must lie in [0, 1/2), got {self.radius}")
        object.__setattr__(self, "m", m)


@dataclass(frozen=True)
class QkdParams:
    """Key-distribution parameters: n EPR pairs, k test positions, ECC model."""

    n: int
    k: int
    ecc: EccModel = field(default_factory=EccModel)
    target_eps: float = 1e-9

    def __post_init__(self):
        n, k = int(self.n), int(self.k)
        if n < 2:
            raise ValueError(f"n must be >= 2, got {n}")
        if not 1 <= k or 2 * k > n:
            raise ValueError(f"test size must satisfy 1 <= k <= n/2, got k={k}, n={n}")
        if self.target_eps <= 0:
            raise ValueError("target_eps must be positive")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "k", k)


@dataclass(frozen=True)
class QotParams:
    """Oblivious-transfer parameters: n qubits, k test positions, l key bits."""

    n: int
    k: int
    l: int

    def __post_init__(self):
        n, k, l = int(self.n), int(self.k), int(self.l)
        if n < 2:
            raise ValueError(f"n must be >= 2, got {n}")
        if not 1 <= k or 2 * k > n:
            raise ValueError(f"test size must satisfy 1 <= k <= n/2, got k={k}, n={n}")
        if not 1 <= l <= n:
            raise ValueError(f"key length must satisfy 1 <= l <= n, got {l}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "l", l)


_QKD_KINDS = ("none", "intercept-resend", "entangling-probe", "custom-unitary")
_QOT_KINDS = ("none", "commit-flip", "open-flip", "no-measure", "delay-measure")
_POLICIES = ("random", "computational", "hadamard")


@dataclass(frozen=True, eq=False)
class AdversaryModel:
    """Concrete adversary instance for either simulator.

    Key-distribution kinds: none (optionally with channel noise),
    intercept-resend (per-qubit basis policy), entangling-probe (a fixed
    unitary couples each transit qubit to one probe register), custom-unitary
    (explicit probe unitary).  Oblivious-transfer kinds: none (honest Bob with
    ``choice_bit``), commit-flip (commits to values flipped at ``flips``),
    open-flip (commits honestly, answers openings from a flipped string),
    no-measure (commits to blind guesses), delay-measure (commits to blind
    guesses, stores the qubits, measures after learning the basis).
    """

    kind: str = "none"
    basis_policy: str = "random"
    probe_dim: int = 2
    unitary: np.ndarray | None = None
    flips: tuple[int, ...] = ()
    choice_bit: int = 0
    noise: float = 0.0

    def __post_init__(self):
        if self.kind not in set(_QKD_KINDS) | set(_QOT_KINDS):
            raise ValueError(f"unknown adversary kind {self.kind!r}")
        if self.basis_policy not in _POLICIES:
            raise ValueError(f"unknown basis policy {self.basis_policy!r}")
        if int(self.probe_dim) < 2:
            raise ValueError("probe_dim must be >= 2")
        object.__setattr__(self, "probe_dim", int(self.probe_dim))
        if self.choice_bit not in (0, 1):
            raise ValueError("choice_bit must be 0 or 1")
        if not 0.0 <= self.noise < 0.5:
            raise ValueError(f"noise must lie in [0, 1/2), got {self.noise}")
        flips = tuple(sorted(int(i) for i in self.flips))
        if len(set(flips)) != len(flips):
            raise ValueError("flip positions must be distinct")
        object.__setattr__(self, "flips", flips)
        if self.unitary is not None:
            U = np.asarray(self.unitary, dtype=complex)
            want = 2 * self.probe_dim
            if U.shape != (want, want):
                raise ValueError(
                    f"probe unitary must act on qubit x probe, shape ({want}, {want})"
                )
            if np.abs(U.conj().T @ U - np.eye(want)).max() > 1e-10:
                raise ValueError("probe unitary is not unitary within 1e-10")
            object.__setattr__(self, "unitary", U)
        if self.kind == "custom-unitary" and self.unitary is None:
            raise ValueError("custom-unitary requires an explicit unitary")

    def probe_unitary(self) -> np.ndarray:
        if self.unitary is not None:
            return self.unitary
        # default probe coupling: |b>|e> -> |b>|e + b mod p|
        p = self.probe_dim
        U = np.zeros((2 * p, 2 * p))
        for b in (0, 1):
            for e in range(p):
                U[b * p + ((e + b) % p), b * p + e] = 1.0
        return U


@dataclass(frozen=True)
class SecurityReport:
    """Itemized security bound, with the exact distance when computed."""

    bound_terms: tuple
    delta_used: float
    exact_distance: float | None = None
    transcript_digest: str = ""
    total_bound: float = None  # filled from the terms

    def __post_init__(self):
        terms = tuple((str(label), float(value)) for label, value in self.bound_terms)
        object.__setattr__(self, "bound_terms", terms)
        total = sum(value for _, value in terms)
        if self.total_bound is not None and not (
            math.isinf(total) or abs(total - self.total_bound) <= 1e-12 * max(1.0, abs(total))
        ):
            raise ValueError("total_bound does not equal the sum of bound_terms")
        object.__setattr__(self, "total_bound", total)
        if self.exact_distance is not None:
            d = float(self.exact_distance)
            if not -1e-9 <= d <= 1 + 1e-9:
                raise ValueError(f"exact_distance {d} outside [0, 1]")
            object.__setattr__(self, "exact_distance", d)


def security_report_to_json(report: SecurityReport) -> str:
    return json.dumps(
        {
            "bound_terms": [[label, value] for label, value in report.bound_terms],
            "total_bound": report.total_bound,
            "delta_used": report.delta_used,
            "exact_distance": report.exact_distance,
            "transcript_digest": report.transcript_digest,
        },
        sort_keys=True,
    )


# ---------------------------------------------------------------------------
# bound evaluators
# ---------------------------------------------------------------------------


def _pow2(x: float) -> float:
    try:
        return 2.0 ** x
    except OverflowError:
        return math.inf


def qkd_bound(n, k, m, l, beta: float, delta: float) -> SecurityReport:
    """Key-distribution security bound at observed error rate beta.

    Terms: the privacy-amplification term
    1/2 * 2^(-((1-h(beta+delta))n - k - m - l)/2) and the sampling-error term
    2 exp(-delta^2 k / 6).  Values above 1 are reported as-is.
    """
    if beta < 0 or delta < 0:
        raise ValueError("beta and delta must be non-negative")
    if beta + delta > 0.5 + 1e-12:
        raise ValueError(f"beta + delta must be <= 1/2, got {beta + delta}")
    radius = min(beta + delta, 0.5)
    pa = 0.5 * _pow2(-0.5 * ((1 - binary_entropy(radius)) * n - k - m - l))
    samp = 2.0 * math.exp(-delta * delta * k / 6.0)
    return SecurityReport(
        bound_terms=(("privacy-amplification", pa), ("sampling", samp)),
        delta_used=float(delta),
    )


def qot_bound(n, k, l, eps: float, delta: float) -> SecurityReport:
    """Oblivious-transfer security bound with free parameters (eps, delta).

    Terms: 1/2 * 2^(-((1/4 - eps/2 - h(delta))(n-k) - l)/2),
    sqrt(6) exp(-delta^2 k / 100), and 2 exp(-2 eps^2 (n-k)).
    """
    if not 0 < delta < 0.5:
        raise ValueError(f"delta must lie in (0, 1/2), got {delta}")
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    pa = 0.5 * _pow2(-0.5 * ((0.25 - eps / 2 - binary_entropy(delta)) * (n - k) - l))
    samp = math.sqrt(6.0) * math.exp(-delta * delta * k / 100.0)
    hoef = 2.0 * math.exp(-2.0 * eps * eps * (n - k))
    return SecurityReport(
        bound_terms=(("privacy-amplification", pa), ("sampling", samp), ("hoeffding", hoef)),
        delta_used=float(delta),
    )


def qot_bound_optimize(n, k, l, grid: int = 40) -> dict:
    """Minimize the three-term bound over an (eps, delta) grid.

    Returns {"eps", "delta", "report"} for the best grid point.
    """
    best = None
    for i in range(1, grid + 1):
        eps = 0.25 * i / (grid + 1)
        for j in range(1, grid + 1):
            delta = 0.5 * j / (grid + 1)
            report = qot_bound(n, k, l, eps, delta)
            if best is None or report.total_bound < best[2].total_bound:
                best = (eps, delta, report)
    return {"eps": best[0], "delta": best[1], "report": best[2]}


def qkd_key_length(n, k, m, beta: float) -> int:
    """The protocol's key length: the largest integer l < (1-h(beta))n-k-m,
    or 0 when that right-hand side is not positive."""
    rhs = (1 - binary_entropy(beta)) * n - k - m
    if rhs <= 0:
        return 0
    return max(0, math.ceil(rhs - 1 - 1e-12))


def qkd_max_len(n, k, m, beta: float, eps_target: float) -> tuple[int, float]:
    """Largest key length meeting the security target, with its delta.

    Scans delta over a 1000-point grid on (0, 1/2 - beta]; for each delta the
    largest l with bound <= eps_target is found in closed form and confirmed
    against the bound evaluator.  The protocol's own cap l < (1-h(beta))n-k-m
    always applies.  Returns (0, first grid delta) when no length works.
    """
    if not 0 <= beta < 0.5:
        raise ValueError(f"beta must lie in [0, 1/2), got {beta}")
    if eps_target <= 0:
        raise ValueError("eps_target must be positive")
    l_cap = qkd_key_length(n, k, m, beta)
    span = 0.5 - beta
    grid = [span * i / 1000 for i in range(1, 1001)]
    best_l, best_delta = -1, grid[0]
    for delta in grid:
        samp = 2.0 * math.exp(-delta * delta * k / 6.0)
        if samp >= eps_target:
            continue
        c = (1 - binary_entropy(beta + delta)) * n - k - m
        guess = math.floor(c + 2 * math.log2(2 * (eps_target - samp)) + 1e-12)
        l = min(max(guess, -1), l_cap)
        while l >= 0 and qkd_bound(n, k, m, l, beta, delta).total_bound > eps_target:
            l -= 1
        while l + 1 <= l_cap and qkd_bound(n, k, m, l + 1, beta, delta).total_bound <= eps_target:
            l += 1
        if l > best_l:
            best_l, best_delta = l, delta
    if best_l < 0:
        return 0, grid[0]
    return best_l, best_delta


def asymptotic_qkd_rate(phi: float) -> float:
    """Asymptotic key bits per remaining pair: 1 - 2 h(phi)."""
    if not 0 <= phi < 0.5:
        raise ValueError(f"phi must lie in [0, 1/2), got {phi}")
    return 1 - 2 * binary_entropy(phi)


def qkd_rate_threshold() -> float:
    """The error rate where the asymptotic rate hits zero, by bisection."""
    lo, hi = 0.0, 0.5 - 1e-12
    for _ in range(100):
        mid = (lo + hi) / 2
        if asymptotic_qkd_rate(mid) > 0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def rate_curve_csv(phis) -> str:
    """CSV of the asymptotic rate curve: phi,rate per row."""
    lines = ["phi,rate"]
    for phi in phis:
        lines.append(f"{float(phi):.10g},{asymptotic_qkd_rate(float(phi)):.10g}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# linear code
# ---------------------------------------------------------------------------


def _gf2_kernel_basis(H: np.ndarray) -> list[np.ndarray]:
    m, n = H.shape
    A = H.copy() % 2
    pivots = []
    row = 0
    for col in range(n):
        hit = None
        for r in range(row, m):
            if A[r, col]:
                hit = r
                break
        if hit is None:
            continue
        A[[row, hit]] = A[[hit, row]]
        for r in range(m):
            if r != row and A[r, col]:
                A[r] ^= A[row]
        pivots.append(col)
        row += 1
        if row == m:
            break
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        v = np.zeros(n, dtype=np.int64)
        v[f] = 1
        for r, c in enumerate(pivots):
            if A[r, f]:
                v[c] = 1
        basis.append(v)
    return basis


@dataclass(frozen=True, eq=False)
class LinearCode:
    """Binary linear code given by its parity-check matrix, with a promised
    correction radius: every error pattern of relative weight <= radius is
    decoded exactly."""

    parity: np.ndarray
    radius: float

    @property
    def length(self) -> int:
        return self.parity.shape[1]

    @property
    def m(self) -> int:
        return self.parity.shape[0]

    def syndrome(self, bits) -> tuple[int, ...]:
        x = np.array([int(b) for b in bits], dtype=np.int64)
        if x.size != self.length:
            raise ValueError(f"string length {x.size} != code length {self.length}")
        if self.m == 0:
            return ()
        return tuple(int(v) for v in (self.parity @ x) % 2)

    def correct(self, received, syn) -> tuple[int, ...] | None:
        """Recover the sent string from the received one and its syndrome.

        Finds the lowest-weight error pattern within the correction radius
        matching the syndrome difference; returns None when there is none.
        """
        y = tuple(int(b) for b in received)
        target = tuple(a ^ b for a, b in zip(self.syndrome(y), tuple(int(v) for v in syn)))
        max_w = math.floor(self.radius * self.length + 1e-9)
        for w in range(max_w + 1):
            for err_pos in itertools.combinations(range(self.length), w):
                e = np.zeros(self.length, dtype=np.int64)
                e[list(err_pos)] = 1
                e_syn = () if self.m == 0 else tuple(int(v) for v in (self.parity @ e) % 2)
                if e_syn == target:
                    return tuple(y[i] ^ int(e[i]) for i in range(self.length))
        return None


def make_linear_code(length, m, radius, rng: np.random.Generator, max_tries: int = 2000) -> LinearCode:
    """Draw a random parity-check matrix whose code corrects radius-fraction
    errors (minimum distance > 2 * floor(radius * length))."""
    length, m = int(length), int(m)
    if length < 1:
        raise ValueError(f"code length must be >= 1, got {length}")
    if not 0 <= m <= length:
        raise ValueError(f"syndrome length must lie in [0, {length}], got {m}")
    if not 0 <= radius < 0.5:
        raise ValueError(f"radius must lie in [0, 1/2), got {radius}")
    need = 2 * math.floor(radius * length + 1e-9)
    if need == 0:
        return LinearCode(rng.integers(0, 2, size=(m, length)).astype(np.int64), float(radius))
    if length > 20:
        raise ValueError(f"distance checking supports length <= 20, got {length}")
    if 2 ** (length - m) > 1 << 16:
        raise ValueError("kernel enumeration over budget (length - m too large)")
    for _ in range(max_tries):
        H = rng.integers(0, 2, size=(m, length)).astype(np.int64)
        basis = _gf2_kernel_basis(H)
        ok = True
        for coeffs in itertools.product((0, 1), repeat=len(basis)):
            if not any(coeffs):
                continue
            v = np.zeros(length, dtype=np.int64)
            for c, b in zip(coeffs, basis):
                if c:
                    v ^= b
            if int(v.sum()) <= need:
                ok = False
                break
        if ok:
            return LinearCode(H, float(radius))
    raise ValueError(
        f"no random code of length {length} with m={m} corrects a {radius} error fraction"
    )


# ---------------------------------------------------------------------------
# transcripts
# ---------------------------------------------------------------------------


def _jsonable(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (tuple, list)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    return value

def _digest(obj) -> str:
    text = json.dumps(_jsonable(obj), sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _scalar_count(payload) -> int | None:
    if payload is None or isinstance(payload, (int, float, str, bool)):
        return 1
    if isinstance(payload, list):
        total = 0
        for v in payload:
            sub = _scalar_count(v)
            if sub is None:
                return None
            total += sub
        return total
    return None


def _entry(phase: str, sender: str, type_: str, payload) -> dict:
    payload = _jsonable(payload)
    count = _scalar_count(payload)
    small = count is not None and count <= 32
    return {
        "phase": phase,
        "sender": sender,
        "type": type_,
        "payload": payload if small else {"digest": _digest(payload)},
    }


def transcript_to_json(transcript) -> str:
    return json.dumps([_jsonable(e) for e in transcript], sort_keys=True)


def _bits(rng: np.random.Generator, count: int) -> tuple[int, ...]:
    return tuple(int(b) for b in rng.integers(0, 2, size=count))


def _subset(rng: np.random.Generator, n: int, k: int) -> tuple[int, ...]:
    return tuple(sorted(int(i) + 1 for i in rng.choice(n, size=k, replace=False)))


def _row_bits(row: int, count: int) -> tuple[int, ...]:
    return tuple((row >> (count - 1 - j)) & 1 for j in range(count))


def _seed_tuple(value: int, width: int) -> tuple[int, ...]:
    return tuple((value >> i) & 1 for i in range(width))


# ---------------------------------------------------------------------------
# key distribution
# ---------------------------------------------------------------------------


def _eve_touch(state: PureState, n: int, adversary: AdversaryModel) -> PureState:
    """Couple each transit qubit (positions n+1..2n) to the probe register."""
    if adversary.kind not in ("entangling-probe", "custom-unitary"):
        return state
    U = adversary.probe_unitary()
    env_pos = 2 * n + 1
    for i in range(1, n + 1):
        state = apply_unitary(state, U, (n + i, env_pos))
    return state


def _rotated_rows(state: PureState, theta: tuple[int, ...]) -> np.ndarray:
    """Amplitudes as a (2^pop, dim_E) matrix after the basis rotation."""
    st = state
    for pos, bit in enumerate(theta, start=1):
        if bit:
            st = apply_unitary(st, HADAMARD, (pos,))
    return st.amps.reshape(2 ** len(theta), state.dim_E)


def _qkd_exact_distance(state: PureState, n: int, k: int, code: LinearCode) -> float:
    """Exact trace distance between the assembled (key, view) state and the
    ideal state with a uniform key of the same per-branch length.

    The view contains the probe register and every announced classical value
    (basis string, test subset, exchanged test bits, syndrome, hash seed).
    """
    dim_e = state.dim_E
    subsets = list(itertools.combinations(range(1, n + 1), k))
    p_theta = 1.0 / 2 ** n
    p_s = 1.0 / len(subsets)
    sbar_cache = {s: complement(s, n) for s in subsets}
    by_view: dict = {}
    for tidx in range(2 ** n):
        theta = _row_bits(tidx, n)
        rows = _rotated_rows(state, theta + theta)
        norms = np.einsum("ij,ij->i", rows, rows.conj()).real
        for row in np.nonzero(norms >= 1e-15)[0]:
            v = rows[row]
            cond = np.outer(v, v.conj())
            outcome = _row_bits(int(row), 2 * n)
            x, y = outcome[:n], outcome[n:]
            for s in subsets:
                xs = restrict(x, s)
                ys = restrict(y, s)
                xsbar = restrict(x, sbar_cache[s])
                syn = code.syndrome(xsbar)
                beta = rel_weight(tuple(a ^ b for a, b in zip(xs, ys)))
                l = qkd_key_length(n, k, code.m, beta)
                fam = HashFamily(n - k, l)
                seeds = 2 ** fam.seed_bits
                weight = p_theta * p_s / seeds
                for ridx in range(seeds):
                    r = _seed_tuple(ridx, fam.seed_bits)
                    key = hash_eval(fam, r, xsbar)
                    view = (tidx, s, xs, ys, syn, r, l)
                    bucket = by_view.setdefault(view, {})
                    if key in bucket:
                        bucket[key] = bucket[key] + weight * cond
                    else:
                        bucket[key] = weight * cond
    distance = 0.0
    zero = np.zeros((dim_e, dim_e), dtype=complex)
    for view, bucket in by_view.items():
        l = view[-1]
        marginal = sum(bucket.values())
        uniform = marginal / 2 ** l
        for kidx in range(2 ** l):
            key = _seed_tuple(kidx, l)
            block = bucket.get(key, zero) - uniform
            distance += 0.5 * float(np.abs(np.linalg.eigvalsh(block)).sum())
    return distance


def _sample_xy(
    rng: np.random.Generator, n: int, theta, adversary: AdversaryModel
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Per-pair sampled measurement outcomes for the transcript-only mode."""
    x = _bits(rng, n)
    y = []
    for i in range(n):
        if adversary.kind == "intercept-resend":
            if adversary.basis_policy == "random":
                eve_basis = int(rng.integers(0, 2))
            else:
                eve_basis = 1 if adversary.basis_policy == "hadamard" else 0
            if eve_basis == theta[i]:
                y.append(x[i])  # undisturbed: Eve measured in the right basis
            else:
                y.append(int(rng.integers(0, 2)))
        else:
            flip = rng.random() < adversary.noise
            y.append(x[i] ^ int(flip))
    return x, tuple(y)


def simulate_qkd(
    params: QkdParams,
    adversary: AdversaryModel,
    rng_seed: int,
    exact: bool | None = None,
):
    """Run the four-phase key-distribution protocol once.

    Returns (transcript, alice_key, bob_key, report).  In exact-distance mode
    (possible for coherent adversaries at n <= 7 and on by default there) the
    report carries the exact trace distance between the real (key, view)
    state and an ideal uniform key.
    """
    n, k, ecc = params.n, params.k, params.ecc
    exact_ok = adversary.kind in ("none", "entangling-probe", "custom-unitary") and (
        adversary.noise == 0.0
    )
    if exact is None:
        exact = exact_ok and n <= 7
    if exact:
        if not exact_ok:
            raise ValueError(
                f"exact-distance mode does not support adversary kind {adversary.kind!r} "
                "or channel noise"
            )
        if n > 7:
            raise ValueError(f"exact-distance mode supports n <= 7, got {n}")
    rng = np.random.default_rng(rng_seed)
    transcript = []
    code = make_linear_code(n - k, ecc.m, ecc.radius, rng)
    transcript.append(_entry("setup", "both", "parity-check", code.parity))

    theta = _bits(rng, n)
    if exact:
        dim_probe = adversary.probe_dim if adversary.kind != "none" else 1
        base = make_epr_pairs(n)
        if dim_probe > 1:
            env = np.zeros(dim_probe, dtype=complex)
            env[0] = 1.0
            base = PureState(np.kron(base.amps, env), (2,) * (2 * n) + (dim_probe,))
        state = _eve_touch(base, n, adversary)
        branch = sample_measurement(
            state, range(1, 2 * n + 1), BasisSpec(theta + theta), rng
        )
        x, y = branch.outcome[:n], branch.outcome[n:]
    else:
        state = None
        x, y = _sample_xy(rng, n, theta, adversary)
    transcript.append(_entry("qubit-distribution", "alice", "epr-send", n))
    transcript.append(_entry("qubit-distribution", "alice", "basis", theta))

    s = _subset(rng, n, k)
    xs, ys = restrict(x, s), restrict(y, s)
    beta = rel_weight(tuple(a ^ b for a, b in zip(xs, ys)))
    transcript.append(_entry("error-estimation", "alice", "test-subset", s))
    transcript.append(_entry("error-estimation", "alice", "test-bits", xs))
    transcript.append(_entry("error-estimation", "bob", "test-bits", ys))
    transcript.append(_entry("error-estimation", "both", "beta", beta))

    sbar = complement(s, n)
    x_raw = restrict(x, sbar)
    y_raw = restrict(y, sbar)
    syn = code.syndrome(x_raw)
    corrected = code.correct(y_raw, syn)
    transcript.append(_entry("error-correction", "alice", "syndrome", syn))
    if corrected is None:
        corrected = y_raw
        transcript.append(_entry("error-correction", "bob", "decode-failure", None))

    l = qkd_key_length(n, k, ecc.m, beta)
    fam = HashFamily(n - k, l)
    r = _bits(rng, fam.seed_bits)
    alice_key = hash_eval(fam, r, x_raw)
    bob_key = hash_eval(fam, r, corrected)
    transcript.append(_entry("key-distillation", "alice", "key-length", l))
    transcript.append(_entry("key-distillation", "alice", "hash-seed", r))

    exact_distance = None
    if exact:
        exact_distance = _qkd_exact_distance(state, n, k, code)

    delta, terms = _best_qkd_terms(n, k, ecc.m, l, beta)
    report = SecurityReport(
        bound_terms=terms,
        delta_used=delta,
        exact_distance=exact_distance,
        transcript_digest=_digest(transcript),
    )
    return transcript, alice_key, bob_key, report


def _best_qkd_terms(n, k, m, l, beta):
    if beta >= 0.5:
        return 0.0, (("privacy-amplification", math.inf), ("sampling", 2.0))
    best = None
    for i in range(1, 201):
        delta = (0.5 - beta) * i / 200
        rep = qkd_bound(n, k, m, l, beta, delta)
        if best is None or rep.total_bound < best[1].total_bound:
            best = (delta, rep)
    return best[0], best[1].bound_terms


# ---------------------------------------------------------------------------
# the two equivalent error-estimation experiments
# ---------------------------------------------------------------------------


def _xy_to_wz(theta, x, y):
    w = tuple(x[i] if theta[i] == 0 else y[i] for i in range(len(theta)))
    z = tuple(a ^ b for a, b in zip(x, y))
    return w, z


def _branch_env(branch, total_positions: int):
    return partial_trace(to_density(branch.post_state), (total_positions + 1,)).matrix


def qkd_sampling_view(state: PureState, params: QkdParams, rng_seed: int, budget=None) -> dict:
    """Check that measuring pairwise-CNOT-transformed pairs, difference bits
    first, reproduces the original experiment exactly.

    The original experiment measures both halves of each pair in the announced
    basis, yielding (x, y) and derived values w (the reference-side bit) and
    z = x XOR y.  The modified experiment applies a CNOT to each pair and
    measures the z-carrying qubits first and the w-carrying qubits second.
    Asserts the (basis, w, z) distributions and the conditional environment
    operators agree within 1e-9, and returns the comparison report together
    with one sampled execution of the modified experiment.
    """
    n = params.n
    if state.population_count != 2 * n:
        raise ValueError(
            f"state has {state.population_count} population qubits, expected {2 * n}"
        )
    cost = (2 ** n) * (16 ** n) * state.dim_E
    limit = resolve_budget(budget)
    if cost > limit:
        raise BudgetExceededError(f"experiment comparison needs {cost} > budget {limit}")
    pairs = [(i, n + i) for i in range(1, n + 1)]
    transformed = apply_cnot_pairs(state, pairs)
    max_tv = 0.0
    max_cond = 0.0
    for tidx in range(2 ** n):
        theta = _row_bits(tidx, n)
        basis = BasisSpec(theta + theta)
        original: dict = {}
        for br in measure(state, range(1, 2 * n + 1), basis):
            x, y = br.outcome[:n], br.outcome[n:]
            wz = _xy_to_wz(theta, x, y)
            prob, env = original.get(wz, (0.0, 0.0))
            original[wz] = (prob + br.probability, env + br.probability * _branch_env(br, 2 * n))
        # z sits on A_i when theta_i = 1, on B_i when theta_i = 0
        z_pos = [i if theta[i - 1] else n + i for i in range(1, n + 1)]
        w_pos = [n + i if theta[i - 1] else i for i in range(1, n + 1)]
        modified: dict = {}
        for zbr in measure(transformed, z_pos, basis):
            for wbr in measure(zbr.post_state, w_pos, basis):
                prob = zbr.probability * wbr.probability
                wz = (wbr.outcome, zbr.outcome)
                old_p, old_env = modified.get(wz, (0.0, 0.0))
                modified[wz] = (old_p + prob, old_env + prob * _branch_env(wbr, 2 * n))
        tv = 0.0
        for wz in set(original) | set(modified):
            p = original.get(wz, (0.0, None))[0]
            q = modified.get(wz, (0.0, None))[0]
            tv += abs(p - q)
            if wz in original and wz in modified and min(p, q) > 1e-12:
                dist = trace_distance(
                    original[wz][1] / p, modified[wz][1] / q
                )
                max_cond = max(max_cond, dist)
        max_tv = max(max_tv, tv / 2)
    if max_tv > 1e-9 or max_cond > 1e-9:
        raise ValueError(
            f"experiments disagree: total variation {max_tv}, conditional {max_cond}"
        )
    # structural basis layout: z reads Hadamard on A, computational on B,
    # and w reads the pairwise opposite
    rng = np.random.default_rng(rng_seed)
    theta = _bits(rng, n)
    z_pos = [i if theta[i - 1] else n + i for i in range(1, n + 1)]
    w_pos = [n + i if theta[i - 1] else i for i in range(1, n + 1)]
    zbr = sample_measurement(transformed, z_pos, BasisSpec(theta + theta), rng)
    s = _subset(rng, n, params.k)
    beta = rel_weight(restrict(zbr.outcome, s))
    wbr = sample_measurement(zbr.post_state, w_pos, BasisSpec(theta + theta), rng)
    return {
        "agrees": True,
        "max_total_variation": max_tv,
        "max_conditional_distance": max_cond,
        "z_basis": {"A": "hadamard", "B": "computational"},
        "w_basis": {"A": "computational", "B": "hadamard"},
        "sample": {
            "theta": theta,
            "z": zbr.outcome,
            "test_subset": s,
            "beta": beta,
            "w": wbr.outcome,
        },
    }


# ---------------------------------------------------------------------------
# oblivious transfer
# ---------------------------------------------------------------------------


def _qot_bob_commit(rng, n, theta, x, bob: AdversaryModel):
    """Bob's measurement and commitment step.

    Returns (registry, openings, stored_state) where registry holds the
    committed (theta_hat, x_hat), openings what Bob will answer with, and
    stored_state a kept statevector for the delay-measure Bob.
    """
    kind = bob.kind
    theta_hat = _bits(rng, n)
    stored = None
    if kind in ("none", "commit-flip", "open-flip"):
        x_hat = tuple(
            x[i] if theta_hat[i] == theta[i] else int(rng.integers(0, 2)) for i in range(n)
        )
    elif kind == "no-measure":
        x_hat = _bits(rng, n)
    elif kind == "delay-measure":
        if n > 10:
            raise ValueError(f"delay-measure exact mode supports n <= 10, got {n}")
        x_hat = _bits(rng, n)
        amps = np.ones(1, dtype=complex)
        for i in range(n):
            qubit = np.zeros(2, dtype=complex)
            qubit[x[i]] = 1.0
            if theta[i]:
                qubit = HADAMARD @ qubit
            amps = np.kron(amps, qubit)
        stored = PureState.from_population(amps, d=2)
    else:
        raise ValueError(f"adversary kind {kind!r} is not an oblivious-transfer model")
    flips = set(bob.flips)
    for i in flips:
        if not 1 <= i <= n:
            raise ValueError(f"flip position {i} outside [1, {n}]")
    if kind == "commit-flip":
        registry = (theta_hat, tuple(x_hat[i] ^ (1 if i + 1 in flips else 0) for i in range(n)))
        openings = registry
    elif kind == "open-flip":
        registry = (theta_hat, x_hat)
        openings = (theta_hat, tuple(x_hat[i] ^ (1 if i + 1 in flips else 0) for i in range(n)))
    else:
        registry = (theta_hat, x_hat)
        openings = registry
    return registry, openings, stored


def simulate_qot(params: QotParams, bob: AdversaryModel, rng_seed: int):
    """Run the four-phase commit-and-open OT protocol once.

    Returns (transcript, k0, k1, bob_output, report); on abort the keys and
    bob_output are None and the abort is recorded in the transcript along
    with the exact detection probability for the adversary model.
    """
    n, k, l = params.n, params.k, params.l
    rng = np.random.default_rng(rng_seed)
    transcript = []
    fam = HashFamily(n, l)

    x = _bits(rng, n)
    theta = _bits(rng, n)
    transcript.append(_entry("preparation", "alice", "qubits", n))
    registry, openings, stored = _qot_bob_commit(rng, n, theta, x, bob)
    transcript.append(_entry("commitment", "bob", "commit", _digest(registry)))

    t = _subset(rng, n, k)
    transcript.append(_entry("commitment", "alice", "test-subset", t))
    opened_theta = tuple(openings[0][i - 1] for i in t)
    opened_x = tuple(openings[1][i - 1] for i in t)
    transcript.append(_entry("commitment", "bob", "openings", (opened_theta, opened_x)))

    abort = None
    for j, i in enumerate(t):
        if openings[0][i - 1] != registry[0][i - 1] or openings[1][i - 1] != registry[1][i - 1]:
            abort = f"binding violation at position {i}"
            break
        if registry[0][i - 1] == theta[i - 1] and opened_x[j] != x[i - 1]:
            abort = f"opened bit at position {i} disagrees with the sent qubit"
            break
    if abort is not None:
        transcript.append(_entry("commitment", "alice", "abort", abort))
        if bob.kind != "none":
            transcript.append(
                _entry("commitment", "alice", "abort-probability", qot_catch_probability(params, bob))
            )
        report = _qot_report(params, transcript)
        return transcript, None, None, None, report

    transcript.append(_entry("set-partitioning", "alice", "basis", theta))
    theta_hat = registry[0]
    if stored is not None:
        branch = sample_measurement(stored, range(1, n + 1), BasisSpec(theta), rng)
        learned = branch.outcome  # the true basis reveals x exactly
        transcript.append(_entry("set-partitioning", "bob", "late-measurement", learned))
    else:
        learned = None
    tbar = complement(t, n)
    c = bob.choice_bit
    agree = tuple(i for i in tbar if theta[i - 1] == theta_hat[i - 1])
    differ = tuple(i for i in tbar if theta[i - 1] != theta_hat[i - 1])
    sets = {c: agree, 1 - c: differ}
    transcript.append(_entry("set-partitioning", "bob", "index-sets", (sets[0], sets[1])))
    dis = [sum(1 for i in sets[b] if theta[i - 1] != theta_hat[i - 1]) for b in (0, 1)]
    realized_c = 0 if dis[1] >= dis[0] else 1
    transcript.append(_entry("set-partitioning", "both", "realized-choice", realized_c))

    r = _bits(rng, fam.seed_bits)
    transcript.append(_entry("key-extraction", "alice", "hash-seed", r))
    k0 = hash_eval(fam, r, pad_input(restrict(x, sets[0]), n))
    k1 = hash_eval(fam, r, pad_input(restrict(x, sets[1]), n))
    keys = {0: k0, 1: k1}
    if bob.kind == "delay-measure":
        bob_keys = {
            b: hash_eval(fam, r, pad_input(restrict(learned, sets[b]), n)) for b in (0, 1)
        }
        bob_output = {"c": c, "key": bob_keys[c], "other_key": bob_keys[1 - c]}
        transcript.append(_entry("key-extraction", "bob", "both-keys-recovered", None))
    else:
        source = registry[1]
        bob_output = {"c": c, "key": hash_eval(fam, r, pad_input(restrict(source, sets[c]), n))}
    transcript.append(
        _entry("key-extraction", "both", "keys-match", bob_output["key"] == keys[c])
    )
    report = _qot_report(params, transcript)
    return transcript, k0, k1, bob_output, report


def _qot_report(params: QotParams, transcript) -> SecurityReport:
    best = qot_bound_optimize(params.n, params.k, params.l, grid=30)
    return SecurityReport(
        bound_terms=best["report"].bound_terms,
        delta_used=best["delta"],
        transcript_digest=_digest(transcript),
    )


def qot_catch_probability(params: QotParams, bob: AdversaryModel) -> float:
    """Exact probability that Alice aborts, over her test-subset and basis
    randomness, for the given adversary model.

    Closed forms: a blind guess fails each tested position with probability
    1/4; an opened flip is caught whenever tested; a committed flip is caught
    when tested and the bases agree, so the flip count follows the
    hypergeometric law of the test-subset draw.
    """
    n, k = params.n, params.k
    kind = bob.kind
    if kind == "none":
        return 0.0
    if kind in ("no-measure", "delay-measure"):
        return 1.0 - 0.75 ** k
    flips = set(bob.flips)
    for i in flips:
        if not 1 <= i <= n:
            raise ValueError(f"flip position {i} outside [1, {n}]")
    f = len(flips)
    if kind == "open-flip":
        # caught unless the test subset misses every flipped position
        return 1.0 - math.comb(n - f, k) / math.comb(n, k)
    if kind == "commit-flip":
        total = sum(
            math.comb(f, j) * math.comb(n - f, k - j) * (1.0 - 0.5 ** j)
            for j in range(0, min(f, k) + 1)
        )
        return total / math.comb(n, k)
    raise ValueError(f"adversary kind {kind!r} is not an oblivious-transfer model")
