"""Desk-scale complex linear algebra for multi-qudit systems.

States live on an ordered list of subsystems: population qudits of one common
dimension first (positions 1..n), then a single environment subsystem of
dimension >= 1 as the last entry.  A plain qudit register is modeled with a
trivial environment of dimension 1.  Positions are 1-based throughout; the
environment sits at position n+1.

Bases are specified per population position by a bit string theta: 0 means
computational, 1 means Hadamard.  For qudits of dimension > 2 only the
computational basis is available.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PureState",
    "DensityMatrix",
    "BasisSpec",
    "CqState",
    "MeasurementBranch",
    "HADAMARD",
    "trace_distance",
    "hybrid_trace_distance",
    "cq_distance",
    "partial_trace",
    "to_density",
    "measure",
    "sample_measurement",
    "dephased_density",
    "apply_cnot_pairs",
    "apply_unitary",
    "make_epr_pairs",
    "random_pure_state",
    "random_density_matrix",
    "state_to_json",
    "state_from_json",
]

_NORM_TOL = 1e-10
_PSD_TOL = 1e-9

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


def _as_dims(dims) -> tuple[int, ...]:
    out = tuple(int(d) for d in dims)
    if not out:
        raise ValueError("dims must be non-empty")
    for d in out:
        if d < 1:
            raise ValueError(f"subsystem dimensions must be >= 1, got {d}")
    pop = out[:-1]
    if pop and len(set(pop)) != 1:
        raise ValueError(f"population qudits must share one dimension, got {pop}")
    return out


@dataclass(frozen=True)
class PureState:
    """A norm-1 amplitude vector over population qudits plus an environment.

    Parameters
    ----------
    amps : complex vector of length prod(dims)
    dims : subsystem dimensions; the last entry is the environment
    """

    amps: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = _as_dims(self.dims)
        amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        if amps.size != math.prod(dims):
            raise ValueError(
                f"amplitude vector length {amps.size} != product of dims {math.prod(dims)}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > _NORM_TOL:
            raise ValueError(f"state norm {norm} deviates from 1 by more than {_NORM_TOL}")
        object.__setattr__(self, "amps", amps)
        object.__setattr__(self, "dims", dims)

    @property
    def population_count(self) -> int:
        return len(self.dims) - 1

    @property
    def population_dim(self) -> int:
        """Common dimension d of the population qudits (2 when there are none)."""
        return self.dims[0] if len(self.dims) > 1 else 2

    @property
    def dim_E(self) -> int:
        return self.dims[-1]

    def tensor(self) -> np.ndarray:
        return self.amps.reshape(self.dims)

    @staticmethod
    def from_population(amps, d: int = 2, dim_E: int = 1, env_amps=None) -> "PureState":
        """Build a state from a population vector, adding an environment.

        ``env_amps`` defaults to the first environment basis vector.
        """
        amps = np.asarray(amps, dtype=complex).reshape(-1)
        count = round(math.log(amps.size, d))
        if d ** count != amps.size:
            raise ValueError(f"vector length {amps.size} is not a power of d={d}")
        if env_amps is None:
            env = np.zeros(dim_E, dtype=complex)
            env[0] = 1.0
        else:
            env = np.asarray(env_amps, dtype=complex).reshape(-1)
            if env.size != dim_E:
                raise ValueError("environment amplitudes do not match dim_E")
        return PureState(np.kron(amps, env), (d,) * count + (dim_E,))


@dataclass(frozen=True)
class DensityMatrix:
    """A trace-1 positive-semi-definite operator over the same subsystem layout."""

    matrix: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = _as_dims(self.dims)
        mat = np.asarray(self.matrix, dtype=complex)
        dim = math.prod(dims)
        if mat.shape != (dim, dim):
            raise ValueError(f"matrix shape {mat.shape} != ({dim}, {dim}) from dims {dims}")
        if np.abs(mat - mat.conj().T).max() > _NORM_TOL:
            raise ValueError("matrix is not Hermitian within 1e-10")
        tr = np.trace(mat).real
        if abs(tr - 1.0) > _NORM_TOL:
            raise ValueError(f"trace {tr} deviates from 1 by more than {_NORM_TOL}")
        low = np.linalg.eigvalsh(mat)[0]
        if low < -_PSD_TOL:
            raise ValueError(f"minimum eigenvalue {low} below -1e-9")
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class BasisSpec:
    """Measurement basis per population position: 0 computational, 1 Hadamard."""

    theta: tuple[int, ...]

    def __post_init__(self):
        theta = tuple(int(b) for b in self.theta)
        for b in theta:
            if b not in (0, 1):
                raise ValueError(f"theta entries must be bits, got {b}")
        object.__setattr__(self, "theta", theta)

    def __len__(self) -> int:
        return len(self.theta)


@dataclass(frozen=True)
class CqState:
    """Hybrid state: a classical value with a conditional environment operator.

    ``entries`` is a list of (x, P(x), rho_E^x); probabilities must sum to 1
    within 1e-12 and every conditional must be a valid density matrix on an
    environment of dimension ``env_dim``.
    """

    entries: tuple
    env_dim: int

    def __post_init__(self):
        env_dim = int(self.env_dim)
        rows = []
        seen = set()
        total = 0.0
        for x, prob, rho in self.entries:
            if isinstance(x, list):
                x = tuple(x)
            if x in seen:
                raise ValueError(f"duplicate classical value {x!r}")
            seen.add(x)
            prob = float(prob)
            if prob < -1e-15:
                raise ValueError(f"negative probability {prob}")
            if not isinstance(rho, DensityMatrix):
                rho = DensityMatrix(np.asarray(rho, dtype=complex), (env_dim,))
            if rho.dim != env_dim:
                raise ValueError(f"conditional operator dimension {rho.dim} != {env_dim}")
            total += prob
            rows.append((x, prob, rho))
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {total}, not 1")
        object.__setattr__(self, "entries", tuple(rows))
        object.__setattr__(self, "env_dim", env_dim)

    def as_density(self) -> DensityMatrix:
        """The block-diagonal matrix sum_x P(x) |x><x| (x) rho_E^x."""
        m = len(self.entries)
        out = np.zeros((m * self.env_dim, m * self.env_dim), dtype=complex)
        for i, (_, prob, rho) in enumerate(self.entries):
            sl = slice(i * self.env_dim, (i + 1) * self.env_dim)
            out[sl, sl] = prob * rho.matrix
        return DensityMatrix(out, (m, self.env_dim))


# ---------------------------------------------------------------------------
# distances
# ---------------------------------------------------------------------------


def _as_matrix(state) -> tuple[np.ndarray, tuple[int, ...] | None]:
    if isinstance(state, PureState):
        return np.outer(state.amps, state.amps.conj()), state.dims
    if isinstance(state, DensityMatrix):
        return state.matrix, state.dims
    mat = np.asarray(state, dtype=complex)
    return mat, None


def trace_distance(rho, sigma) -> float:
    """Half the trace norm of rho - sigma; the difference is Hermitian, so the
    absolute eigenvalue sum computes it."""
    a, da = _as_matrix(rho)
    b, db = _as_matrix(sigma)
    if da is not None and db is not None and da != db:
        raise ValueError(f"dimension mismatch: {da} vs {db}")
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return 0.5 * float(np.abs(np.linalg.eigvalsh(a - b)).sum())


def hybrid_trace_distance(a: CqState, b: CqState) -> float:
    """Distance between two hybrids sharing one classical distribution:
    sum_x P(x) * trace_distance(rho_E^x, rho_E'^x)."""
    if a.env_dim != b.env_dim:
        raise ValueError(f"environment dimensions differ: {a.env_dim} vs {b.env_dim}")
    pa = {x: p for (x, p, _) in a.entries}
    pb = {x: p for (x, p, _) in b.entries}
    if set(pa) != set(pb) or any(abs(pa[x] - pb[x]) > 1e-12 for x in pa):
        raise ValueError("hybrids do not share the same classical distribution")
    rb = {x: rho for (x, _, rho) in b.entries}
    return sum(p * trace_distance(rho, rb[x]) for (x, p, rho) in a.entries)


def cq_distance(a: CqState, b: CqState) -> float:
    """Trace distance between two hybrids with possibly different classical
    laws: half the sum over x of the trace norm of P(x) rho_x - Q(x) sigma_x."""
    if a.env_dim != b.env_dim:
        raise ValueError(f"environment dimensions differ: {a.env_dim} vs {b.env_dim}")
    ra = {x: (p, rho.matrix) for (x, p, rho) in a.entries}
    rb = {x: (p, rho.matrix) for (x, p, rho) in b.entries}
    zero = np.zeros((a.env_dim, a.env_dim), dtype=complex)
    total = 0.0
    for x in set(ra) | set(rb):
        pa, ma = ra.get(x, (0.0, zero))
        pb, mb = rb.get(x, (0.0, zero))
        total += np.abs(np.linalg.eigvalsh(pa * ma - pb * mb)).sum()
    return 0.5 * float(total)


# ---------------------------------------------------------------------------
# reductions and transformations
# ---------------------------------------------------------------------------


def _keep_positions(keep, count: int) -> tuple[int, ...]:
    from .sampling import SubsetIndex  # local to avoid import cycles at startup

    if isinstance(keep, SubsetIndex):
        pos = keep.positions
    else:
        pos = tuple(sorted(int(x) for x in keep))
    if not pos:
        raise ValueError("keep must name at least one subsystem")
    prev = 0
    for x in pos:
        if x <= prev:
            raise ValueError(f"keep positions must be strictly increasing, got {pos}")
        prev = x
    if pos[-1] > count:
        raise ValueError(f"position {pos[-1]} outside the {count} subsystems")
    return pos


def partial_trace(rho, keep) -> DensityMatrix:
    """Reduce to the subsystems named by ``keep`` (1-based positions)."""
    if isinstance(rho, PureState):
        rho = to_density(rho)
    dims = rho.dims
    ndim = len(dims)
    pos = _keep_positions(keep, ndim)
    tensor = rho.matrix.reshape(dims + dims)
    for axis in range(ndim - 1, -1, -1):
        if axis + 1 in pos:
            continue
        current = tensor.ndim // 2
        tensor = np.trace(tensor, axis1=axis, axis2=axis + current)
    kept = tuple(dims[i - 1] for i in pos)
    dim = math.prod(kept)
    return DensityMatrix(tensor.reshape(dim, dim), kept)


def to_density(state: PureState) -> DensityMatrix:
    return DensityMatrix(np.outer(state.amps, state.amps.conj()), state.dims)


def _positions_tuple(positions, count: int) -> tuple[int, ...]:
    pos = tuple(int(x) for x in positions)
    if len(set(pos)) != len(pos):
        raise ValueError(f"duplicate positions in {pos}")
    for x in pos:
        if not 1 <= x <= count:
            raise ValueError(f"position {x} outside [1..{count}]")
    return pos


def _rotate(tensor: np.ndarray, positions, theta, undo: bool = False) -> np.ndarray:
    # H is self-inverse, so undo uses the same matrix; kept for readability
    del undo
    for pos, bit in zip(positions, theta):
        if bit:
            tensor = np.moveaxis(
                np.tensordot(HADAMARD, tensor, axes=([1], [pos - 1])), 0, pos - 1
            )
    return tensor


@dataclass(frozen=True)
class MeasurementBranch:
    """One outcome of a projective measurement."""

    outcome: tuple[int, ...]
    probability: float
    post_state: PureState


def _measurement_setup(state: PureState, positions, basis):
    pop = state.population_count
    pos = _positions_tuple(positions, pop)
    if basis is None:
        basis = BasisSpec((0,) * pop)
    if len(basis) != pop:
        raise ValueError(
            f"basis length {len(basis)} != population subsystem count {pop}"
        )
    theta = tuple(basis.theta[i - 1] for i in pos)
    if any(theta) and state.population_dim != 2:
        raise ValueError("Hadamard basis requires qubit subsystems (d = 2)")
    rotated = _rotate(state.tensor(), pos, theta)
    axes = tuple(i for i in range(len(state.dims)) if i + 1 not in pos)
    probs = np.abs(rotated) ** 2
    if axes:
        probs = probs.sum(axis=axes)
    # the sum leaves kept axes in ascending position order; outcomes follow
    # the caller's position order
    ordered = sorted(pos)
    if ordered != list(pos):
        probs = probs.transpose(tuple(ordered.index(p) for p in pos))
    return pos, theta, rotated, probs


def _branch(state, pos, theta, rotated, probs, outcome) -> MeasurementBranch:
    p = float(probs[outcome])
    index = tuple(
        outcome[pos.index(i + 1)] if i + 1 in pos else slice(None)
        for i in range(len(state.dims))
    )
    collapsed = np.zeros_like(rotated)
    collapsed[index] = rotated[index] / math.sqrt(p)
    post = _rotate(collapsed, pos, theta)
    return MeasurementBranch(tuple(outcome), p, PureState(post.reshape(-1), state.dims))


def measure(
    state: PureState, positions, basis: BasisSpec | None = None, outcome=None
):
    """Projective measurement of the given population positions.

    Measuring in basis theta applies a Hadamard per position with theta bit 1
    before projecting in the computational basis; the population stays in
    place, collapsed onto the observed basis state.

    Returns the full list of positive-probability branches, or the single
    requested branch when ``outcome`` is given.

    Raises
    ------
    ValueError
        If a position is outside the population, the basis is incompatible,
        or the requested outcome has zero probability.
    """
    pos, theta, rotated, probs = _measurement_setup(state, positions, basis)
    if outcome is not None:
        outcome = tuple(int(b) for b in outcome)
        if len(outcome) != len(pos):
            raise ValueError(f"outcome length {len(outcome)} != positions {len(pos)}")
        if probs[outcome] < 1e-12:
            raise ValueError(f"requested branch {outcome} has zero probability")
        return _branch(state, pos, theta, rotated, probs, outcome)
    return [
        _branch(state, pos, theta, rotated, probs, out)
        for out in np.ndindex(probs.shape)
        if probs[out] >= 1e-12
    ]


def sample_measurement(
    state: PureState, positions, basis: BasisSpec | None, rng: np.random.Generator
) -> MeasurementBranch:
    """Draw one measurement branch according to its probability."""
    pos, theta, rotated, probs = _measurement_setup(state, positions, basis)
    flat = probs.reshape(-1)
    idx = rng.choice(flat.size, p=flat / flat.sum())
    outcome = tuple(int(x) for x in np.unravel_index(idx, probs.shape))
    return _branch(state, pos, theta, rotated, probs, outcome)


def dephased_density(state: PureState, positions, basis: BasisSpec | None = None) -> DensityMatrix:
    """Mixture of the measurement branches: sum_b p_b |post_b><post_b|."""
    out = None
    for branch in measure(state, positions, basis):
        block = branch.probability * np.outer(
            branch.post_state.amps, branch.post_state.amps.conj()
        )
        out = block if out is None else out + block
    return DensityMatrix(out, state.dims)


def apply_cnot_pairs(state: PureState, pairs) -> PureState:
    """Apply one CNOT per (control, target) pair of qubit positions.

    Pairs must be pairwise disjoint and both members must be binary
    subsystems.
    """
    count = len(state.dims)
    used = set()
    norm_pairs = []
    for c, t in pairs:
        c, t = int(c), int(t)
        if c == t:
            raise ValueError("control and target must differ")
        for x in (c, t):
            if not 1 <= x <= count:
                raise ValueError(f"position {x} outside [1..{count}]")
            if state.dims[x - 1] != 2:
                raise ValueError(f"position {x} is not a qubit")
            if x in used:
                raise ValueError(f"overlapping pairs: position {x} reused")
            used.add(x)
        norm_pairs.append((c, t))
    tensor = state.tensor().copy()
    for c, t in norm_pairs:
        moved = np.moveaxis(tensor, (c - 1, t - 1), (0, 1))
        flipped = moved.copy()
        flipped[1, 0] = moved[1, 1]
        flipped[1, 1] = moved[1, 0]
        tensor = np.moveaxis(flipped, (0, 1), (c - 1, t - 1))
    return PureState(tensor.reshape(-1), state.dims)


def apply_unitary(state: PureState, U, positions) -> PureState:
    """Apply a unitary acting on the listed subsystems, in the given order.

    The environment position (last subsystem) is allowed; this is how probe
    interactions touch it.
    """
    count = len(state.dims)
    pos = _positions_tuple(positions, count)
    sub = tuple(state.dims[i - 1] for i in pos)
    dim = math.prod(sub)
    U = np.asarray(U, dtype=complex)
    if U.shape != (dim, dim):
        raise ValueError(f"unitary shape {U.shape} != ({dim}, {dim}) for positions {pos}")
    tensor = np.tensordot(
        U.reshape(sub + sub), state.tensor(), axes=(tuple(range(len(sub), 2 * len(sub))), tuple(p - 1 for p in pos))
    )
    tensor = np.moveaxis(tensor, tuple(range(len(sub))), tuple(p - 1 for p in pos))
    return PureState(tensor.reshape(-1), state.dims)


def make_epr_pairs(n: int) -> PureState:
    """n EPR pairs (|00> + |11>)/sqrt(2), ordered A_1..A_n, B_1..B_n, with a
    trivial environment."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    amps = np.zeros(4 ** n, dtype=complex)
    scale = 2 ** (-n / 2)
    for x in range(2 ** n):
        amps[(x << n) | x] = scale
    return PureState(amps, (2,) * (2 * n) + (1,))


# ---------------------------------------------------------------------------
# random fixtures
# ---------------------------------------------------------------------------


def random_pure_state(dims, rng: np.random.Generator) -> PureState:
    """Haar-random state vector over the given subsystem layout."""
    dims = _as_dims(dims)
    dim = math.prod(dims)
    amps = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return PureState(amps / np.linalg.norm(amps), dims)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Random mixed state from a Wishart draw."""
    rank = dim if rank is None else rank
    a = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = a @ a.conj().T
    return DensityMatrix(m / np.trace(m).real, (dim,))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _interleave(values: np.ndarray) -> list[float]:
    out = []
    for z in values.reshape(-1):
        out.append(float(z.real))
        out.append(float(z.imag))
    return out


def _deinterleave(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.size % 2:
        raise ValueError("interleaved amplitude list must have even length")
    return arr[0::2] + 1j * arr[1::2]


def state_to_json(state) -> str:
    """Serialize a pure state or density matrix as dims plus interleaved
    (re, im) pairs."""
    if isinstance(state, PureState):
        obj = {"type": "pure", "dims": list(state.dims), "amplitudes": _interleave(state.amps)}
    elif isinstance(state, DensityMatrix):
        obj = {"type": "density", "dims": list(state.dims), "matrix": _interleave(state.matrix)}
    else:
        raise TypeError(f"cannot serialize {type(state).__name__}")
    return json.dumps(obj, sort_keys=True)


def state_from_json(text: str):
    obj = json.loads(text)
    kind = obj.get("type")
    dims = tuple(int(d) for d in obj["dims"])
    if kind == "pure":
        return PureState(_deinterleave(obj["amplitudes"]), dims)
    if kind == "density":
        dim = math.prod(dims)
        return DensityMatrix(_deinterleave(obj["matrix"]).reshape(dim, dim), dims)
    raise ValueError(f"unknown state type {kind!r}")
