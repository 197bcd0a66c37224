"""Protocol simulators, security bounds, and their supporting machinery."""

import json
import math
import time
import itertools

import numpy as np
import pytest

from qsample import (
    AdversaryModel,
    BasisSpec,
    CqState,
    EccModel,
    HashFamily,
    PureState,
    QkdParams,
    QotParams,
    SecurityReport,
    asymptotic_qkd_rate,
    cq_distance,
    hash_eval,
    make_epr_pairs,
    make_linear_code,
    measure,
    partial_trace,
    qkd_bound,
    qkd_key_length,
    qkd_max_len,
    qkd_rate_threshold,
    qkd_sampling_view,
    qot_bound,
    qot_bound_optimize,
    qot_catch_probability,
    rate_curve_csv,
    rel_weight,
    restrict,
    complement,
    security_report_to_json,
    simulate_qkd,
    simulate_qot,
    to_density,
    transcript_to_json,
)
from qsample.protocols import apply_unitary
from qsample.sampling import BudgetExceededError


# ---------------------------------------------------------------------------
# independent bound arithmetic
# ---------------------------------------------------------------------------


def _h(p):
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def _qkd_total(n, k, m, l, beta, delta):
    pa = 0.5 * 2.0 ** (-0.5 * ((1 - _h(beta + delta)) * n - k - m - l))
    return pa + 2.0 * math.exp(-delta * delta * k / 6.0)


def _qot_terms(n, k, l, eps, delta):
    pa = 0.5 * 2.0 ** (-0.5 * ((0.25 - eps / 2 - _h(delta)) * (n - k) - l))
    samp = math.sqrt(6.0) * math.exp(-delta * delta * k / 100.0)
    hoef = 2.0 * math.exp(-2.0 * eps * eps * (n - k))
    return pa, samp, hoef


def test_qkd_bound_matches_arithmetic():
    rng = np.random.default_rng(42)
    for _ in range(50):
        n = int(rng.integers(8, 600))
        k = int(rng.integers(1, n))
        m = int(rng.integers(0, 20))
        l = int(rng.integers(0, n // 2 + 1))
        beta = float(rng.uniform(0, 0.3))
        delta = float(rng.uniform(0.001, 0.5 - beta))
        report = qkd_bound(n, k, m, l, beta, delta)
        want = _qkd_total(n, k, m, l, beta, delta)
        assert report.total_bound == pytest.approx(want, rel=1e-12)
        assert [lab for lab, _ in report.bound_terms] == ["privacy-amplification", "sampling"]
        assert report.delta_used == delta


def test_qot_bound_matches_arithmetic():
    rng = np.random.default_rng(43)
    for _ in range(50):
        n = int(rng.integers(20, 1200))
        k = int(rng.integers(1, n // 2 + 1))
        l = int(rng.integers(1, n // 2 + 1))
        eps = float(rng.uniform(0.001, 0.5))
        delta = float(rng.uniform(0.001, 0.499))
        report = qot_bound(n, k, l, eps, delta)
        pa, samp, hoef = _qot_terms(n, k, l, eps, delta)
        assert report.total_bound == pytest.approx(pa + samp + hoef, rel=1e-12)
        labels = [lab for lab, _ in report.bound_terms]
        assert labels == ["privacy-amplification", "sampling", "hoeffding"]


def test_qkd_bound_degenerate_point():
    # delta = beta = l = m = k = 0 collapses to 1/2 * 2^(-n/2) + 2
    report = qkd_bound(10, 0, 0, 0, 0.0, 0.0)
    assert report.total_bound == pytest.approx(0.5 * 2 ** -5 + 2.0, rel=1e-12)


def test_qkd_bound_rejects_bad_radius():
    with pytest.raises(ValueError, match="beta \\+ delta"):
        qkd_bound(100, 10, 0, 5, 0.3, 0.3)
    with pytest.raises(ValueError, match="non-negative"):
        qkd_bound(100, 10, 0, 5, -0.1, 0.2)


def test_qot_bound_rejects_bad_parameters():
    with pytest.raises(ValueError, match="delta"):
        qot_bound(100, 10, 5, 0.1, 0.5)
    with pytest.raises(ValueError, match="delta"):
        qot_bound(100, 10, 5, 0.1, 0.0)
    with pytest.raises(ValueError, match="eps"):
        qot_bound(100, 10, 5, 0.0, 0.25)


def test_qot_bound_optimize_no_worse_than_grid_corners():
    best = qot_bound_optimize(4000, 1500, 10)
    for eps in (0.01, 0.05, 0.1, 0.2):
        for delta in (0.05, 0.1, 0.2, 0.4):
            assert best["report"].total_bound <= qot_bound(4000, 1500, 10, eps, delta).total_bound + 1e-12
    assert 0 < best["eps"] < 0.25
    assert 0 < best["delta"] < 0.5


# ---------------------------------------------------------------------------
# key-length planning
# ---------------------------------------------------------------------------


def _max_len_oracle(n, k, m, beta, eps_target):
    """Brute-force scan over the same (l, delta) grid."""
    cap = qkd_key_length(n, k, m, beta)
    span = 0.5 - beta
    grid = [span * i / 1000 for i in range(1, 1001)]
    best_l, best_delta = -1, grid[0]
    for delta in grid:
        lmax = -1
        for l in range(cap + 1):
            if _qkd_total(n, k, m, l, beta, delta) <= eps_target:
                lmax = l
            else:
                break  # total is increasing in l
        if lmax > best_l:
            best_l, best_delta = lmax, delta
    if best_l < 0:
        return 0, grid[0]
    return best_l, best_delta


def test_qkd_max_len_matches_brute_force_scan():
    rng = np.random.default_rng(44)
    cases = []
    for _ in range(6):
        n = int(rng.integers(20, 61))
        k = int(rng.integers(5, n - 2))
        m = int(rng.integers(0, 4))
        beta = float(rng.uniform(0.0, 0.15))
        eps = float(rng.choice([1.85, 1.9, 1.95, 1.98]))
        cases.append((n, k, m, beta, eps))
    for _ in range(4):
        n = int(rng.integers(20, 61))
        k = int(rng.integers(5, n - 2))
        m = int(rng.integers(0, 4))
        beta = float(rng.uniform(0.0, 0.15))
        eps = float(rng.choice([0.05, 0.2, 0.5]))
        cases.append((n, k, m, beta, eps))
    # a small test fraction keeps the sampling term low enough for a positive
    # key length; the last case saturates the protocol cap
    cases.append((60, 15, 0, 0.0, 1.95))
    cases.append((40, 8, 2, 0.05, 2.5))
    exercised = 0
    for n, k, m, beta, eps in cases:
        got = qkd_max_len(n, k, m, beta, eps)
        want = _max_len_oracle(n, k, m, beta, eps)
        assert got == want, (n, k, m, beta, eps)
        exercised += want[0] > 0
    assert exercised >= 2
    assert qkd_max_len(40, 8, 2, 0.05, 2.5)[0] == qkd_key_length(40, 8, 2, 0.05)


def test_qkd_max_len_validation():
    with pytest.raises(ValueError, match="beta"):
        qkd_max_len(100, 20, 0, 0.5, 0.1)
    with pytest.raises(ValueError, match="eps_target"):
        qkd_max_len(100, 20, 0, 0.1, 0.0)


def test_qkd_key_length_rule():
    # largest integer strictly below (1 - h(beta)) n - k - m, floored at 0
    assert qkd_key_length(5, 2, 0, 0.0) == 2
    assert qkd_key_length(5, 2, 0, 1.0) == 2
    assert qkd_key_length(10, 5, 5, 0.0) == 0
    assert qkd_key_length(100, 10, 5, 0.1) == math.ceil((1 - _h(0.1)) * 100 - 15 - 1 - 1e-12)


def test_asymptotic_rate_and_threshold():
    start = time.monotonic()
    assert asymptotic_qkd_rate(0.0) == 1.0
    assert asymptotic_qkd_rate(0.25) < 0
    root = qkd_rate_threshold()
    assert abs(root - 0.110) <= 1e-3
    assert abs(asymptotic_qkd_rate(root)) < 1e-9
    assert time.monotonic() - start < 1.0
    with pytest.raises(ValueError, match="phi"):
        asymptotic_qkd_rate(0.5)
    with pytest.raises(ValueError, match="phi"):
        asymptotic_qkd_rate(-0.01)


def test_rate_curve_csv_shape():
    text = rate_curve_csv([0.0, 0.05, 0.11])
    lines = text.strip().split("\n")
    assert lines[0] == "phi,rate"
    assert len(lines) == 4
    assert float(lines[1].split(",")[1]) == 1.0


# ---------------------------------------------------------------------------
# report and parameter types
# ---------------------------------------------------------------------------


def test_security_report_totals_terms():
    rep = SecurityReport(bound_terms=(("a", 0.25), ("b", 0.5)), delta_used=0.1)
    assert rep.total_bound == 0.75
    with pytest.raises(ValueError, match="total_bound"):
        SecurityReport(bound_terms=(("a", 0.25),), delta_used=0.1, total_bound=0.5)
    with pytest.raises(ValueError, match="exact_distance"):
        SecurityReport(bound_terms=(("a", 0.25),), delta_used=0.1, exact_distance=1.5)


def test_security_report_json_is_sorted():
    rep = SecurityReport(bound_terms=(("a", 0.25),), delta_used=0.1, transcript_digest="ff")
    data = json.loads(security_report_to_json(rep))
    assert list(data) == sorted(data)
    assert data["bound_terms"] == [["a", 0.25]]
    assert data["exact_distance"] is None


def test_params_validation():
    with pytest.raises(ValueError, match="test size"):
        QkdParams(10, 6)
    with pytest.raises(ValueError, match="test size"):
        QotParams(10, 0, 3)
    with pytest.raises(ValueError, match="key length"):
        QotParams(10, 3, 11)
    with pytest.raises(ValueError, match="radius"):
        EccModel(2, 0.5)
    with pytest.raises(ValueError, match="m must"):
        EccModel(-1, 0.1)


def test_adversary_validation():
    with pytest.raises(ValueError, match="kind"):
        AdversaryModel(kind="teleport")
    with pytest.raises(ValueError, match="noise"):
        AdversaryModel(noise=0.5)
    with pytest.raises(ValueError, match="choice_bit"):
        AdversaryModel(choice_bit=2)
    with pytest.raises(ValueError, match="unitary"):
        AdversaryModel(kind="custom-unitary")
    with pytest.raises(ValueError, match="not unitary"):
        AdversaryModel(kind="custom-unitary", unitary=np.ones((4, 4)))
    with pytest.raises(ValueError, match="shape"):
        AdversaryModel(kind="custom-unitary", unitary=np.eye(3))
    # a valid probe unitary round-trips
    adv = AdversaryModel(kind="entangling-probe", probe_dim=3)
    U = adv.probe_unitary()
    assert np.allclose(U.conj().T @ U, np.eye(6))


# ---------------------------------------------------------------------------
# linear code
# ---------------------------------------------------------------------------


def test_code_corrects_every_pattern_in_radius():
    rng = np.random.default_rng(45)
    for length, m, radius in ((8, 4, 0.125), (10, 5, 0.1), (12, 8, 0.17)):
        code = make_linear_code(length, m, radius, rng)
        max_w = math.floor(radius * length + 1e-9)
        assert max_w >= 1
        for _ in range(3):
            x = tuple(int(b) for b in rng.integers(0, 2, size=length))
            syn = code.syndrome(x)
            for w in range(max_w + 1):
                for pos in itertools.combinations(range(length), w):
                    y = list(x)
                    for p in pos:
                        y[p] ^= 1
                    assert code.correct(tuple(y), syn) == x


def test_code_minimum_distance_exceeds_twice_radius():
    rng = np.random.default_rng(46)
    code = make_linear_code(10, 5, 0.1, rng)
    need = 2 * math.floor(0.1 * 10 + 1e-9)
    best = None
    for value in range(1, 2 ** 10):
        bits = np.array([(value >> i) & 1 for i in range(10)], dtype=np.int64)
        if not any((code.parity @ bits) % 2):
            weight = int(bits.sum())
            best = weight if best is None else min(best, weight)
    assert best is not None and best > need


def test_code_trivial_and_validation():
    rng = np.random.default_rng(47)
    code = make_linear_code(6, 0, 0.0, rng)
    assert code.syndrome((1, 0, 1, 1, 0, 0)) == ()
    assert code.correct((1, 0, 1, 1, 0, 0), ()) == (1, 0, 1, 1, 0, 0)
    with pytest.raises(ValueError, match="radius"):
        make_linear_code(6, 2, 0.6, rng)
    with pytest.raises(ValueError, match="length"):
        make_linear_code(0, 0, 0.0, rng)
    with pytest.raises(ValueError, match="syndrome length"):
        make_linear_code(6, 7, 0.0, rng)


def test_code_impossible_distance_raises():
    # a [4, 3] code has minimum distance at most 2, so radius 0.3 (distance > 2)
    # can never be met
    rng = np.random.default_rng(48)
    with pytest.raises(ValueError, match="no random code"):
        make_linear_code(4, 1, 0.3, rng, max_tries=25)


def test_decode_failure_returns_none():
    rng = np.random.default_rng(49)
    code = make_linear_code(8, 4, 0.125, rng)
    x = (0,) * 8
    syn = code.syndrome(x)
    # an error of weight 3 is outside the radius, so decoding cannot recover x
    y = (1, 1, 1, 0, 0, 0, 0, 0)
    assert code.correct(y, syn) != x
    # a syndrome unreachable within the radius gives None
    unreachable = None
    for syn_bits in itertools.product((0, 1), repeat=4):
        leaders = set()
        for w in range(2):
            for pos in itertools.combinations(range(8), w):
                e = np.zeros(8, dtype=np.int64)
                e[list(pos)] = 1
                leaders.add(tuple((code.parity @ e) % 2))
        if tuple(syn_bits) not in leaders:
            unreachable = syn_bits
            break
    if unreachable is not None:
        assert code.correct(x, unreachable) is None


# ---------------------------------------------------------------------------
# key distribution, honest and adversarial
# ---------------------------------------------------------------------------


def test_qkd_honest_completeness_100_seeds():
    params = QkdParams(16, 4)
    adv = AdversaryModel()
    for seed in range(100):
        transcript, alice, bob, _ = simulate_qkd(params, adv, rng_seed=seed, exact=False)
        beta = next(e["payload"] for e in transcript if e["type"] == "beta")
        assert beta == 0.0
        assert alice == bob
        assert len(alice) == qkd_key_length(16, 4, 0, 0.0)


def test_qkd_honest_exact_small():
    transcript, alice, bob, report = simulate_qkd(QkdParams(4, 2), AdversaryModel(), rng_seed=3)
    assert alice == bob
    assert report.exact_distance is not None
    assert report.exact_distance <= 1e-9


def test_qkd_exact_distance_zero_at_n5():
    _, alice, bob, report = simulate_qkd(QkdParams(5, 2), AdversaryModel(), rng_seed=12)
    assert alice == bob
    assert abs(report.exact_distance) <= 1e-9


def test_qkd_probe_distance_within_bound():
    for n, k, seed in ((3, 1, 5), (4, 1, 6), (4, 2, 7)):
        adv = AdversaryModel(kind="entangling-probe")
        _, _, _, report = simulate_qkd(QkdParams(n, k), adv, rng_seed=seed)
        assert report.exact_distance is not None
        assert 0 <= report.exact_distance <= min(1.0, report.total_bound) + 1e-9


def test_qkd_custom_unitary_distance_within_bound():
    # a partial probe rotation, weaker than the full copy
    c, s = math.cos(0.4), math.sin(0.4)
    U = np.eye(4, dtype=complex)
    U[2:, 2:] = np.array([[c, -s], [s, c]])
    adv = AdversaryModel(kind="custom-unitary", unitary=U)
    _, _, _, report = simulate_qkd(QkdParams(3, 1), adv, rng_seed=9)
    assert 0 <= report.exact_distance <= min(1.0, report.total_bound) + 1e-9


def _probe_state(n, adv):
    base = make_epr_pairs(n)
    env = np.zeros(adv.probe_dim, dtype=complex)
    env[0] = 1.0
    state = PureState(np.kron(base.amps, env), (2,) * (2 * n) + (adv.probe_dim,))
    U = adv.probe_unitary()
    for i in range(1, n + 1):
        state = apply_unitary(state, U, (n + i, 2 * n + 1))
    return state


def test_qkd_exact_distance_against_hybrid_assembly():
    """Cross-check the branch assembly against the hybrid-state machinery."""
    n, k, seed = 3, 1, 11
    adv = AdversaryModel(kind="entangling-probe")
    _, _, _, report = simulate_qkd(QkdParams(n, k), adv, rng_seed=seed)

    state = _probe_state(n, adv)
    subsets = list(itertools.combinations(range(1, n + 1), k))
    real = {}
    ideal = {}
    for tidx in range(2 ** n):
        theta = tuple((tidx >> (n - 1 - j)) & 1 for j in range(n))
        for br in measure(state, range(1, 2 * n + 1), BasisSpec(theta + theta)):
            x, y = br.outcome[:n], br.outcome[n:]
            env = partial_trace(to_density(br.post_state), (2 * n + 1,)).matrix
            for s in subsets:
                xs, ys = restrict(x, s), restrict(y, s)
                xbar = restrict(x, complement(s, n))
                beta = rel_weight(tuple(a ^ b for a, b in zip(xs, ys)))
                l = qkd_key_length(n, k, 0, beta)
                fam = HashFamily(n - k, l)
                for ridx in range(2 ** fam.seed_bits):
                    r = tuple((ridx >> i) & 1 for i in range(fam.seed_bits))
                    key = hash_eval(fam, r, xbar)
                    view = (tidx, s, xs, ys, r, l)
                    w = br.probability / (2 ** n * len(subsets) * 2 ** fam.seed_bits)
                    real[(key, view)] = real.get((key, view), 0) + w * env
                    for kidx in range(2 ** l):
                        alt = tuple((kidx >> i) & 1 for i in range(l))
                        ideal[(alt, view)] = ideal.get((alt, view), 0) + w * env / 2 ** l
    def hybrid(table):
        entries = []
        for label, mat in table.items():
            p = float(np.trace(mat).real)
            if p > 1e-14:
                entries.append((label, p, mat / p))
        return CqState(tuple(entries), env_dim=adv.probe_dim)
    expected = cq_distance(hybrid(real), hybrid(ideal))
    assert report.exact_distance == pytest.approx(expected, abs=1e-12)


def test_qkd_exact_mode_refusals():
    with pytest.raises(ValueError, match="exact"):
        simulate_qkd(QkdParams(4, 1), AdversaryModel(kind="intercept-resend"), 0, exact=True)
    with pytest.raises(ValueError, match="n <= 7"):
        simulate_qkd(QkdParams(8, 2), AdversaryModel(), 0, exact=True)
    with pytest.raises(ValueError, match="exact"):
        simulate_qkd(QkdParams(4, 1), AdversaryModel(noise=0.1), 0, exact=True)


def test_qkd_replay_is_byte_identical():
    params = QkdParams(12, 3, ecc=EccModel(m=3, radius=0.1))
    adv = AdversaryModel(kind="intercept-resend")
    runs = [simulate_qkd(params, adv, rng_seed=77, exact=False) for _ in range(2)]
    assert transcript_to_json(runs[0][0]) == transcript_to_json(runs[1][0])
    assert runs[0][3].transcript_digest == runs[1][3].transcript_digest
    assert runs[0][1] == runs[1][1] and runs[0][2] == runs[1][2]
    other = simulate_qkd(params, adv, rng_seed=78, exact=False)
    assert transcript_to_json(other[0]) != transcript_to_json(runs[0][0])


def _mean_beta(params, adv, seeds):
    total = 0.0
    for seed in seeds:
        transcript, _, _, _ = simulate_qkd(params, adv, rng_seed=seed, exact=False)
        total += next(e["payload"] for e in transcript if e["type"] == "beta")
    return total / len(seeds)


def test_intercept_resend_error_rate():
    params = QkdParams(24, 8)
    mean = _mean_beta(params, AdversaryModel(kind="intercept-resend"), range(100))
    sigma = math.sqrt(0.25 * 0.75 / (100 * params.k))
    assert abs(mean - 0.25) <= 3 * sigma


def test_intercept_resend_fixed_basis_policies():
    params = QkdParams(24, 8)
    for policy in ("computational", "hadamard"):
        mean = _mean_beta(params, AdversaryModel(kind="intercept-resend", basis_policy=policy), range(60))
        sigma = math.sqrt(0.25 * 0.75 / (60 * params.k))
        assert abs(mean - 0.25) <= 3.5 * sigma


def test_channel_noise_error_rate():
    params = QkdParams(24, 8)
    phi = 0.1
    mean = _mean_beta(params, AdversaryModel(noise=phi), range(100))
    sigma = math.sqrt(phi * (1 - phi) / (100 * params.k))
    assert abs(mean - phi) <= 3 * sigma


def test_qkd_ecc_recovers_noisy_key_when_in_radius():
    # radius 1/4 on 8 remaining bits corrects up to 2 flips; noise well below
    # that mostly lands inside the radius
    params = QkdParams(12, 4, ecc=EccModel(m=6, radius=0.25))
    agree = 0
    for seed in range(40):
        _, alice, bob, _ = simulate_qkd(params, AdversaryModel(noise=0.05), rng_seed=seed, exact=False)
        agree += alice == bob
    assert agree >= 30


# ---------------------------------------------------------------------------
# the two error-estimation experiments
# ---------------------------------------------------------------------------


def test_experiment_equivalence_on_epr_pairs():
    for n in (2, 3):
        view = qkd_sampling_view(make_epr_pairs(n), QkdParams(n, 1), rng_seed=4)
        assert view["agrees"] is True
        assert view["max_total_variation"] <= 1e-9
        assert view["max_conditional_distance"] <= 1e-9
        assert view["z_basis"] == {"A": "hadamard", "B": "computational"}
        assert view["w_basis"] == {"A": "computational", "B": "hadamard"}
        assert len(view["sample"]["z"]) == n


def test_experiment_equivalence_with_probe():
    adv = AdversaryModel(kind="entangling-probe")
    state = _probe_state(3, adv)
    view = qkd_sampling_view(state, QkdParams(3, 1), rng_seed=8)
    assert view["agrees"] is True
    assert view["max_total_variation"] <= 1e-9
    assert view["max_conditional_distance"] <= 1e-9


def test_experiment_equivalence_on_random_states():
    from qsample import random_pure_state

    rng = np.random.default_rng(50)
    for _ in range(3):
        state = random_pure_state((2, 2, 2, 2, 3), rng)
        view = qkd_sampling_view(state, QkdParams(2, 1), rng_seed=int(rng.integers(1000)))
        assert view["agrees"] is True


def test_experiment_view_replay_and_validation():
    state = make_epr_pairs(2)
    a = qkd_sampling_view(state, QkdParams(2, 1), rng_seed=5)
    b = qkd_sampling_view(state, QkdParams(2, 1), rng_seed=5)
    assert a == b
    with pytest.raises(ValueError, match="population"):
        qkd_sampling_view(make_epr_pairs(3), QkdParams(2, 1), rng_seed=5)
    with pytest.raises(BudgetExceededError):
        qkd_sampling_view(make_epr_pairs(3), QkdParams(3, 1), rng_seed=5, budget=10)


# ---------------------------------------------------------------------------
# oblivious transfer
# ---------------------------------------------------------------------------


def test_qot_honest_completeness_100_seeds():
    params = QotParams(8, 2, 3)
    for seed in range(100):
        choice = seed % 2
        transcript, k0, k1, bob, _ = simulate_qot(params, AdversaryModel(choice_bit=choice), rng_seed=seed)
        assert k0 is not None and k1 is not None
        assert len(k0) == len(k1) == 3
        assert bob["c"] == choice
        assert bob["key"] == (k0, k1)[choice]


def test_qot_honest_realized_choice_labels():
    # the realized choice points at the set with fewer basis disagreements,
    # which for an honest Bob is the set he populated with agreements
    params = QotParams(10, 3, 2)
    seen = set()
    for seed in range(40):
        for choice in (0, 1):
            transcript, k0, _, bob, _ = simulate_qot(params, AdversaryModel(choice_bit=choice), rng_seed=seed)
            if k0 is None:
                continue
            realized = next(e["payload"] for e in transcript if e["type"] == "realized-choice")
            sets = next(e["payload"] for e in transcript if e["type"] == "index-sets")
            if len(sets[0]) and len(sets[1]):
                seen.add((choice, realized))
    # an honest Bob with choice 0 is always realized as 0; with choice 1 as 1
    # whenever the other set is nonempty
    assert (0, 0) in seen and (1, 1) in seen
    assert (0, 1) not in seen


def test_qot_open_flip_always_caught_when_tested():
    params = QotParams(6, 2, 2)
    adv = AdversaryModel(kind="open-flip", flips=(1, 2, 3, 4, 5, 6))
    for seed in range(10):
        transcript, k0, k1, bob, _ = simulate_qot(params, adv, rng_seed=seed)
        assert k0 is None and k1 is None and bob is None
        kinds = [e["type"] for e in transcript]
        assert "abort" in kinds
        prob = next(e["payload"] for e in transcript if e["type"] == "abort-probability")
        assert prob == 1.0


def _enumeration_catch_oracle(n, k, kind, flips):
    """Exhaustive catch probability over test subsets, basis agreements, and
    guess errors."""
    flips = set(flips)
    total = 0.0
    count = 0
    for t in itertools.combinations(range(1, n + 1), k):
        if kind == "open-flip":
            count += 1
            total += 1.0 if flips & set(t) else 0.0
        elif kind == "commit-flip":
            # enumerate which positions have agreeing bases
            for agree_mask in range(2 ** n):
                count += 1
                caught = any(
                    i in flips and (agree_mask >> (i - 1)) & 1 for i in t
                )
                total += 1.0 if caught else 0.0
        else:  # blind guesses: agreement and wrong-guess masks
            for agree_mask in range(2 ** n):
                for wrong_mask in range(2 ** n):
                    count += 1
                    caught = any(
                        (agree_mask >> (i - 1)) & 1 and (wrong_mask >> (i - 1)) & 1
                        for i in t
                    )
                    total += 1.0 if caught else 0.0
    return total / count


def test_qot_catch_probability_matches_enumeration():
    for n, k, kind, flips in (
        (6, 2, "open-flip", (2, 5)),
        (6, 3, "open-flip", (1,)),
        (5, 2, "commit-flip", (1, 3)),
        (6, 2, "commit-flip", (2, 4, 6)),
        (5, 2, "no-measure", ()),
        (6, 3, "delay-measure", ()),
    ):
        params = QotParams(n, k, 1)
        adv = AdversaryModel(kind=kind, flips=flips)
        got = qot_catch_probability(params, adv)
        want = _enumeration_catch_oracle(n, k, kind, flips)
        assert got == pytest.approx(want, abs=1e-9), (n, k, kind, flips)
    assert qot_catch_probability(QotParams(6, 2, 1), AdversaryModel()) == 0.0


def test_qot_catch_rate_matches_simulation():
    params = QotParams(8, 3, 2)
    for kind, flips in (("open-flip", (2, 6)), ("commit-flip", (1, 4, 7)), ("no-measure", ())):
        adv = AdversaryModel(kind=kind, flips=flips)
        p = qot_catch_probability(params, adv)
        caught = sum(simulate_qot(params, adv, rng_seed=s)[1] is None for s in range(400))
        sigma = math.sqrt(p * (1 - p) / 400)
        assert abs(caught / 400 - p) <= 4 * sigma, kind


def test_qot_delay_measure_learns_both_keys():
    params = QotParams(6, 2, 2)
    adv = AdversaryModel(kind="delay-measure")
    accepted = 0
    for seed in range(60):
        transcript, k0, k1, bob, _ = simulate_qot(params, adv, rng_seed=seed)
        if k0 is None:
            continue
        accepted += 1
        assert bob["key"] == (k0, k1)[bob["c"]]
        assert bob["other_key"] == (k0, k1)[1 - bob["c"]]
    assert accepted >= 10
    with pytest.raises(ValueError, match="n <= 10"):
        simulate_qot(QotParams(12, 2, 2), adv, rng_seed=0)


def test_qot_replay_and_report():
    params = QotParams(8, 2, 3)
    adv = AdversaryModel(kind="commit-flip", flips=(3,))
    a = simulate_qot(params, adv, rng_seed=13)
    b = simulate_qot(params, adv, rng_seed=13)
    assert transcript_to_json(a[0]) == transcript_to_json(b[0])
    assert a[4].transcript_digest == b[4].transcript_digest
    labels = [lab for lab, _ in a[4].bound_terms]
    assert labels == ["privacy-amplification", "sampling", "hoeffding"]
    assert len(a[4].transcript_digest) == 16


def test_qot_commitment_is_digested():
    transcript, _, _, _, _ = simulate_qot(QotParams(8, 2, 3), AdversaryModel(), rng_seed=1)
    commit = next(e for e in transcript if e["type"] == "commit")
    assert isinstance(commit["payload"], str) and len(commit["payload"]) == 16
