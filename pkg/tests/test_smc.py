import numpy as np
import pytest
from scipy import stats

from disagg.polytope import aggregate
from disagg.smc import (
    OPERATOR,
    FixedPointCodec,
    MessageLedger,
    audit_privacy,
    smca,
    split_shares,
)


def test_two_party_split():
    x = np.array([1.5, -2.0, 0.0])
    parts = split_shares(x, 2, 4.0, 7)
    assert parts.shape == (3, 2)
    assert np.all((parts[:, 0] >= 0) & (parts[:, 0] <= 4.0))
    np.testing.assert_array_equal(parts[:, 1], x - parts[:, 0])


def test_zero_profile_split():
    parts = split_shares(np.zeros(5), 4, 2.0, 1)
    np.testing.assert_allclose(parts.sum(axis=1), 0, atol=1e-15)
    assert np.all((parts[:, :3] >= 0) & (parts[:, :3] <= 2.0))


def test_split_validation():
    with pytest.raises(ValueError):
        split_shares(np.ones(2), 1, 1.0, 0)
    with pytest.raises(ValueError):
        split_shares(np.ones(2), 3, 0.0, 0)
    with pytest.raises(ValueError):
        smca(np.ones((1, 2)), 1.0, 0)


def test_split_is_deterministic():
    a = split_shares(np.arange(4.0), 3, 1.0, 42)
    b = split_shares(np.arange(4.0), 3, 1.0, 42)
    np.testing.assert_array_equal(a, b)


def test_non_residual_parts_have_uniform_mean():
    A = 3.0
    draws = split_shares(np.zeros(100_000), 3, A, 5)[:, :2]
    sigma = A / np.sqrt(12) / np.sqrt(draws.shape[0])
    assert np.all(np.abs(draws.mean(axis=0) - A / 2) < 3 * sigma)


def test_shares_independent_of_profile():
    rng = np.random.default_rng(0)
    A, N = 2.0, 3
    first = []
    for run in range(10_000):
        x = rng.normal(0, 5, 2)  # profile varies from run to run
        first.append(split_shares(x, N, A, [9, run])[:, :N - 1].ravel())
    first = np.array(first)
    for j in range(first.shape[1]):
        assert stats.kstest(first[:, j], stats.uniform(0, A).cdf).pvalue > 0.01


def test_smca_exact_on_random_profiles():
    rng = np.random.default_rng(1)
    for i in range(1000):
        N, T = int(rng.integers(2, 8)), int(rng.integers(1, 6))
        A = float(rng.uniform(0.1, 10))
        x = rng.normal(0, 3, (N, T))
        S = smca(x, A, i)
        assert np.all(np.abs(S - aggregate(x)) <= 1e-6 * max(1.0, N * A))


def test_zero_profiles_hide_behind_nonzero_shares():
    ledger = MessageLedger()
    S = smca(np.zeros((4, 3)), 1.0, 3, ledger)
    assert np.all(np.abs(S) <= 1e-12)
    shares = [m.payload for m in ledger.messages if m.kind == "share"]
    assert len(shares) == 12
    assert all(np.all(s != 0) for s in shares)


def test_equal_column_sums_give_equal_aggregates():
    x = np.array([[1.0, 2.0], [3.0, 4.0], [0.0, 1.0]])
    x2 = np.array([[2.0, 2.0], [1.0, 1.0], [1.0, 4.0]])
    A = 5.0
    assert np.all(np.abs(smca(x, A, 1) - smca(x2, A, 2)) <= 2e-6 * 3 * A)


def test_operator_and_agent_views():
    N, T = 4, 3
    x = np.random.default_rng(2).normal(size=(N, T))
    ledger = MessageLedger()
    smca(x, 1.0, 0, ledger)
    op = audit_privacy(ledger, OPERATOR, secrets=x)
    assert op.passed and bool(op)
    assert sum(op.received.values()) == N
    assert set(op.received) == {("sigma", "profile")}
    agent = audit_privacy(ledger, 2)
    assert agent.passed
    assert agent.received[("share", "profile")] == N - 1


def test_audit_flags_leaks():
    ledger = MessageLedger()
    x = np.ones((2, 2))
    ledger.record(0, 0, 1, OPERATOR, "share", x[1])
    rep = audit_privacy(ledger, OPERATOR, secrets=x)
    assert not rep.passed
    assert any("share" in v for v in rep.violations)
    assert any("raw profile" in v for v in rep.violations)


def test_partial_interception_leaves_one_uniform_mask():
    # an eavesdropper holding all but the first outgoing part of agent 0
    rng_x = 0.7
    A, N = 2.0, 4
    residuals = []
    for seed in range(5000):
        parts = split_shares(np.array([rng_x]), N, A, seed)[0]
        residuals.append(rng_x - parts[1:].sum())  # what is left to guess
    residuals = np.array(residuals)
    # the missing part is exactly the unseen U([0, A]) draw
    assert residuals.min() >= -1e-12 and residuals.max() <= A + 1e-12
    assert residuals.min() < 0.05 * A and residuals.max() > 0.95 * A


def test_compact_ledger_counts_match_full():
    x = np.random.default_rng(3).normal(size=(5, 2))
    full, compact = MessageLedger(), MessageLedger(keep_payloads=False)
    for k in range(3):
        smca(x, 1.0, k, full, round=k)
        smca(x, 1.0, k, compact, round=k)
    assert full.counts == compact.counts
    assert len(full) == len(compact) == 3 * (5 * 4 + 5)
    with pytest.raises(ValueError):
        compact.received_by(OPERATOR)


def test_fixed_point_is_exact():
    codec = FixedPointCodec()
    rng = np.random.default_rng(4)
    for i in range(50):
        x = rng.normal(0, 10, (int(rng.integers(2, 6)), 3))
        S = smca(x, 1.0, i, codec=codec)
        want = np.array([codec.decode(int(sum(codec.encode(v) for v in col))) for col in x.T])
        np.testing.assert_array_equal(S, want)
        np.testing.assert_allclose(S, aggregate(x), atol=1e-12)


def test_codec_round_trip_and_signs():
    codec = FixedPointCodec()
    for v in (0.0, 1.5, -2.25, 1e-9, -123456.789):
        assert codec.decode(codec.encode(v)) == pytest.approx(v, abs=2**-60)
    with pytest.raises(ValueError):
        FixedPointCodec(frac_bits=64, ring_bits=64)
