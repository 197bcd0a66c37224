"""Min-entropy accounting and privacy amplification.

Provides the binary entropy function and the Hamming-ball counting bound, the
classical-side min-entropy formula, PSD certificates for min-entropy lower
bounds against quantum side information, the measurement/mixture operator
inequality behind the entropy lemma, and an exact small-instance check of the
two-universal-hashing key-extraction bound.

The hash family is linear over GF(2): the output is the first l input bits
XORed with a Toeplitz combination of the remaining n-l bits, so the seed has
n-1 bits.  Every seed gives a surjective map (the matrix [I | T] has full row
rank), which makes the extractor output exactly uniform on uniform input, and
the family is two-universal with collision probability exactly 2^-l for
distinct inputs that differ outside the identity block.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .quantum import BasisSpec, CqState, DensityMatrix, PureState

__all__ = [
    "HashFamily",
    "EntropyCertificate",
    "binary_entropy",
    "hamming_ball_log_bound",
    "hamming_ball_log_exact",
    "min_entropy_classical_side",
    "check_certificate",
    "lemma2_operator_check",
    "corollary1_bound",
    "hash_eval",
    "pad_input",
    "pa_exact_check",
    "pa_report_json",
    "classical_env_min_entropy",
    "CqState",
]

_PSD_TOL = 1e-9


# ---------------------------------------------------------------------------
# entropies and counting
# ---------------------------------------------------------------------------


def binary_entropy(p: float) -> float:
    """h(p) = -(p log2 p + (1-p) log2 (1-p)), with h(0) = h(1) = 0."""
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -(p * math.log2(p) + (1 - p) * math.log2(1 - p))


def _check_radius(beta: float, delta: float) -> float:
    beta, delta = float(beta), float(delta)
    if beta < 0 or delta < 0:
        raise ValueError("beta and delta must be non-negative")
    radius = beta + delta
    if radius > 0.5:
        raise ValueError(f"beta + delta must be <= 1/2, got {radius}")
    return radius


def hamming_ball_log_bound(beta: float, delta: float, n: int) -> float:
    """log2 of the entropy bound on the ball {b : relwt(b) <= beta+delta}:
    h(beta+delta) * n, valid for beta+delta <= 1/2."""
    radius = _check_radius(beta, delta)
    return binary_entropy(radius) * n


def hamming_ball_log_exact(beta: float, delta: float, n: int) -> float:
    """log2 of the exact ball size sum_{w <= (beta+delta) n} C(n, w), n <= 30."""
    radius = _check_radius(beta, delta)
    n = int(n)
    if not 0 <= n <= 30:
        raise ValueError(f"exact counting supports 0 <= n <= 30, got {n}")
    cut = math.floor(radius * n + 1e-9)  # guard against float droop at integers
    total = sum(math.comb(n, w) for w in range(cut + 1))
    return math.log2(total)


def min_entropy_classical_side(joint) -> float:
    """H_min(X|Y) = -log2 sum_y max_x P(x, y) for a finite joint distribution.

    ``joint`` maps (x, y) pairs to probabilities.  With a constant y this
    reduces to -log2 max_x P(x).
    """
    items = dict(joint)
    if not items:
        raise ValueError("joint distribution is empty")
    total = 0.0
    best: dict = {}
    for (x, y), p in items.items():
        p = float(p)
        if p < -1e-15:
            raise ValueError(f"negative probability {p}")
        total += p
        if p > best.get(y, 0.0):
            best[y] = p
    if abs(total - 1.0) > 1e-12:
        raise ValueError(f"probabilities sum to {total}, not 1")
    return -math.log2(sum(best.values()))


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EntropyCertificate:
    """A claimed min-entropy lower bound h with its witness operator sigma_E.

    Validity is exactly the PSD condition tested by check_certificate; nothing
    is verified at construction beyond basic shape.
    """

    h: float
    sigma_E: object

    def witness(self, env_dim: int) -> DensityMatrix:
        sigma = self.sigma_E
        if not isinstance(sigma, DensityMatrix):
            mat = np.asarray(sigma, dtype=complex)
            if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
                raise ValueError(f"witness must be a square matrix, got shape {mat.shape}")
            sigma = DensityMatrix(mat, (mat.shape[0],))
        if sigma.dim != env_dim:
            raise ValueError(
                f"witness dimension {sigma.dim} != environment dimension {env_dim}"
            )
        return sigma


def check_certificate(rho_XE: CqState, cert: EntropyCertificate) -> bool:
    """Whether 2^-h I_X (x) sigma_E - rho_XE is PSD within -1e-9.

    A passing certificate proves the conditional min-entropy is at least h.
    """
    sigma = cert.witness(rho_XE.env_dim)
    scale = 2.0 ** (-float(cert.h))
    low = 0.0
    for _, prob, rho in rho_XE.entries:
        block = scale * sigma.matrix - prob * rho.matrix
        low = min(low, float(np.linalg.eigvalsh(block)[0]))
    return low >= -_PSD_TOL


def classical_env_min_entropy(rho_XE: CqState) -> float:
    """Exact H_min(X|E) when every conditional operator is diagonal.

    Raises if some conditional has off-diagonal weight: genuinely quantum
    side information is handled through certificates only.
    """
    joint = {}
    for x, prob, rho in rho_XE.entries:
        mat = rho.matrix
        if np.abs(mat - np.diag(np.diag(mat))).max() > 1e-12:
            raise ValueError(
                "conditional operators are not diagonal; supply an EntropyCertificate"
            )
        for e in range(rho_XE.env_dim):
            joint[(x, e)] = joint.get((x, e), 0.0) + prob * mat[e, e].real
    return min_entropy_classical_side(joint)


# ---------------------------------------------------------------------------
# the measurement/mixture operator inequality
# ---------------------------------------------------------------------------


def _basis_matrix(theta: tuple[int, ...]) -> np.ndarray:
    from .quantum import HADAMARD

    out = np.ones((1, 1), dtype=complex)
    eye = np.eye(2, dtype=complex)
    for bit in theta:
        out = np.kron(out, HADAMARD if bit else eye)
    return out


def lemma2_operator_check(phi: PureState, J, W_basis: BasisSpec) -> dict:
    """Check |J| * rho_mix_WE - rho_WE >= 0 for a state supported on J.

    rho_WE arises from measuring the population of phi in W_basis; rho_mix_WE
    from first dephasing the population in the computational basis and then
    measuring.  Both are block diagonal over outcomes w, so the check runs
    per block.  Returns {"min_eig": smallest eigenvalue seen, "holds": bool}.
    """
    n = phi.population_count
    if len(W_basis) != n:
        raise ValueError(f"basis length {len(W_basis)} != population count {n}")
    if n and phi.population_dim != 2 and any(W_basis.theta):
        raise ValueError("Hadamard basis requires qubit subsystems (d = 2)")
    dim_pop = phi.population_dim ** n if n else 1
    J = {int(i) for i in J}
    for i in J:
        if not 0 <= i < dim_pop:
            raise ValueError(f"basis index {i} outside [0, {dim_pop})")
    block = phi.amps.reshape(dim_pop, phi.dim_E)
    support = {i for i in range(dim_pop) if np.abs(block[i]).max() > 1e-12}
    outside = support - J
    if outside:
        raise ValueError(f"state has support outside J at indices {sorted(outside)}")

    if any(W_basis.theta):
        C = _basis_matrix(W_basis.theta)  # c[w, i] = <w| H^theta |i>
    else:
        C = np.eye(dim_pop, dtype=complex)
    min_eig = math.inf
    size = len(J)
    for w in range(dim_pop):
        v_w = C[w, :] @ block  # environment vector of the coherent branch
        coherent = np.outer(v_w, v_w.conj())
        dephased = np.zeros_like(coherent)
        for i in J:
            amp2 = abs(C[w, i]) ** 2
            if amp2 > 0:
                dephased += amp2 * np.outer(block[i], block[i].conj())
        eigs = np.linalg.eigvalsh(size * dephased - coherent)
        min_eig = min(min_eig, float(eigs[0]))
    return {"min_eig": min_eig, "holds": min_eig >= -_PSD_TOL}


def corollary1_bound(theta: BasisSpec, beta: float, delta: float, n: int) -> float:
    """weight(theta) - h(beta+delta) n; may be negative and is returned as-is."""
    n = int(n)
    if len(theta) != n:
        raise ValueError(f"theta length {len(theta)} != n = {n}")
    radius = _check_radius(beta, delta)
    return sum(theta.theta) - binary_entropy(radius) * n


# ---------------------------------------------------------------------------
# two-universal hashing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HashFamily:
    """Seeded linear hash {0,1}^n -> {0,1}^l over GF(2).

    g(r, x) = x[:l] XOR T_r x[l:], with T_r the l x (n-l) Toeplitz matrix
    T[i][j] = r[i - j + (n-l) - 1] built from the (n-1)-bit seed r.  The
    identity block makes every seed's map surjective; the Toeplitz block makes
    the family two-universal (collision probability exactly 2^-l whenever the
    inputs differ outside the first l bits, zero otherwise).
    """

    input_bits: int
    output_bits: int

    def __post_init__(self):
        n, l = int(self.input_bits), int(self.output_bits)
        if n < 1:
            raise ValueError(f"input_bits must be >= 1, got {n}")
        if not 0 <= l <= n:
            raise ValueError(f"output_bits must lie in [0, input_bits], got {l}")
        object.__setattr__(self, "input_bits", n)
        object.__setattr__(self, "output_bits", l)

    @property
    def seed_bits(self) -> int:
        # no Toeplitz block when the output is empty or covers the whole input
        if self.output_bits == 0 or self.output_bits == self.input_bits:
            return 0
        return self.input_bits - 1


def _check_bits(bits, length: int, what: str) -> tuple[int, ...]:
    vals = tuple(int(b) for b in bits)
    if len(vals) != length:
        raise ValueError(f"{what} length {len(vals)} != expected {length}")
    for b in vals:
        if b not in (0, 1):
            raise ValueError(f"{what} must be bits, got {b}")
    return vals


def pad_input(x, n: int) -> tuple[int, ...]:
    """Right-pad a bit string with zeros up to length n."""
    vals = tuple(int(b) for b in x)
    if len(vals) > n:
        raise ValueError(f"input length {len(vals)} exceeds {n}")
    return vals + (0,) * (n - len(vals))


def hash_eval(family: HashFamily, r, x) -> tuple[int, ...]:
    """Evaluate the hash; lengths must match the family exactly."""
    n, l = family.input_bits, family.output_bits
    x = _check_bits(x, n, "input")
    r = _check_bits(r, family.seed_bits, "seed")
    if l == 0:
        return ()
    out = list(x[:l])
    m = n - l
    if m:
        conv = np.convolve(np.array(r, dtype=np.int64), np.array(x[l:], dtype=np.int64))
        for i in range(l):
            out[i] ^= int(conv[m - 1 + i]) & 1
    return tuple(out)


# ---------------------------------------------------------------------------
# exact privacy-amplification check
# ---------------------------------------------------------------------------


def _resolve_hmin(rho_XE: CqState, certificate: EntropyCertificate | None) -> float:
    if certificate is not None:
        if not check_certificate(rho_XE, certificate):
            raise ValueError("certificate does not hold for this state")
        return float(certificate.h)
    return classical_env_min_entropy(rho_XE)


def pa_exact_check(
    rho_XE: CqState,
    family: HashFamily,
    l: int,
    certificate: EntropyCertificate | None = None,
) -> dict:
    """Exact extraction distance versus the min-entropy bound.

    Assembles the joint state of (hash output, seed, environment) for a
    uniform independent seed, computes its exact trace distance to the ideal
    uniform-key product, and compares with 0.5 * 2^(-(hmin - l)/2).  The
    min-entropy is computed exactly for diagonal (classical) side information
    or taken from a verified certificate.

    Limits: at most 6 input bits and environment dimension at most 8.
    """
    l = int(l)
    n = family.input_bits
    if l != family.output_bits:
        raise ValueError(f"l = {l} != family output_bits {family.output_bits}")
    if n > 6:
        raise ValueError(f"exact check supports at most 6 input bits, got {n}")
    if rho_XE.env_dim > 8:
        raise ValueError(f"exact check supports env_dim <= 8, got {rho_XE.env_dim}")
    for x, _, _ in rho_XE.entries:
        _check_bits(x, n, "classical value")
    hmin = _resolve_hmin(rho_XE, certificate)

    env = rho_XE.env_dim
    rho_E = np.zeros((env, env), dtype=complex)
    for _, prob, rho in rho_XE.entries:
        rho_E += prob * rho.matrix

    seeds = 2 ** family.seed_bits
    seed_w = 1.0 / seeds
    key_w = 2.0 ** (-l)
    distance = 0.0
    for ridx in range(seeds):
        r = tuple((ridx >> i) & 1 for i in range(family.seed_bits))
        buckets = {}
        for x, prob, rho in rho_XE.entries:
            key = hash_eval(family, r, x)
            if key in buckets:
                buckets[key] = buckets[key] + prob * rho.matrix
            else:
                buckets[key] = prob * rho.matrix
        for kidx in range(2 ** l):
            key = tuple((kidx >> i) & 1 for i in range(l))
            block = buckets.get(key, np.zeros_like(rho_E)) - key_w * rho_E
            distance += seed_w * 0.5 * float(np.abs(np.linalg.eigvalsh(block)).sum())
    bound = 0.5 * 2.0 ** (-0.5 * (hmin - l))
    return {"distance": distance, "bound": bound, "holds": distance <= bound + 1e-9, "hmin": hmin}


def pa_report_json(rho_XE: CqState, family: HashFamily, l: int, certificate=None) -> str:
    """JSON report {n, l, hmin, distance, bound}."""
    result = pa_exact_check(rho_XE, family, l, certificate=certificate)
    return json.dumps(
        {
            "n": family.input_bits,
            "l": int(l),
            "hmin": result["hmin"],
            "distance": result["distance"],
            "bound": result["bound"],
        },
        sort_keys=True,
    )
