"""Secure aggregation by additive secret sharing, with an auditable message ledger.

Each agent n splits its profile x_n period by period into N parts: the first
N-1 are drawn uniformly from [0, A] and the last is the residual, so that the
parts sum to x_n. Part m goes to agent m. Every agent then sums the parts it
holds into sigma_n and sends that to the operator, who adds the sigmas.

The operator therefore only ever sees N sigma vectors. Nothing is encrypted;
privacy is checked by inspecting who received what in a :class:`MessageLedger`.
"""
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

OPERATOR = "operator"

# payload kinds each kind of observer may legitimately receive
OPERATOR_KINDS = frozenset({"sigma"})
AGENT_KINDS = frozenset({"share", "nu"})


@dataclass(frozen=True)
class Message:
    round: int
    phase: int
    sender: Any
    receiver: Any
    kind: str
    tag: str = ""
    payload: Optional[np.ndarray] = field(default=None, compare=False, repr=False)


class MessageLedger:
    """Ordered record of protocol messages.

    With ``keep_payloads=False`` only (sender, receiver, kind, tag) counts are
    kept, which is enough for :func:`audit_privacy` on long runs.
    """

    def __init__(self, keep_payloads=True):
        self.keep_payloads = keep_payloads
        self.messages = []
        self._counts = Counter()
        self._batches = Counter()  # whole secret-sharing rounds not yet expanded

    @property
    def counts(self):
        if self._batches:
            for batch, reps in self._batches.items():
                for key in _batch_keys(*batch):
                    self._counts[key] += reps
            self._batches.clear()
        return self._counts

    def record_round(self, n_agents, tag):
        """Count one full secret-sharing round without storing payloads."""
        self._batches[(n_agents, tag)] += 1

    def record_broadcast(self, n_agents, kind, tag=""):
        """Count one operator-to-every-agent message without storing payloads."""
        self._batches[(n_agents, kind, tag)] += 1

    def record(self, round, phase, sender, receiver, kind, payload=None, tag=""):
        self._counts[(sender, receiver, kind, tag)] += 1
        if self.keep_payloads:
            self.messages.append(Message(round, phase, sender, receiver, kind, tag, payload))

    def record_many(self, round, phase, senders, receivers, kind, payloads=None, tag=""):
        for i, (s, r) in enumerate(zip(senders, receivers)):
            self.record(round, phase, s, r, kind, None if payloads is None else payloads[i], tag)

    def received_by(self, observer):
        if self.keep_payloads:
            return [m for m in self.messages if m.receiver == observer]
        raise ValueError("payloads were not kept; use count_received")

    def count_received(self, observer):
        out = Counter()
        for (s, r, kind, tag), c in self.counts.items():
            if r == observer:
                out[(kind, tag)] += c
        return out

    def __len__(self):
        return sum(self.counts.values())


def _rng(seed):
    """Mask generator: SFC64 seeded through SeedSequence (fast for the N*N*T draws per round)."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.SFC64(np.random.SeedSequence(seed)))


def split_shares(x_n, n_agents, share_bound, rng_seed):
    """Split a length-T profile into ``n_agents`` additive parts, shape (T, N).

    Parts 0..N-2 are iid U([0, share_bound]); part N-1 is the residual.
    """
    if n_agents < 2:
        raise ValueError("secret sharing needs at least two agents")
    if not share_bound > 0:
        raise ValueError("share_bound must be positive")
    x_n = np.asarray(x_n, dtype=float)
    rng = _rng(rng_seed)
    parts = np.empty((x_n.shape[0], n_agents))
    parts[:, :-1] = rng.random(size=(x_n.shape[0], n_agents - 1)) * share_bound
    parts[:, -1] = x_n - parts[:, :-1].sum(axis=1)
    return parts


class FixedPointCodec:
    """Exact modular encoding: value v -> round(v * 2**frac_bits) mod 2**ring_bits.

    Shares are uniform over the whole ring, so a single share carries no
    information, and sums are exact. Decoding of a sum is correctly rounded.
    """

    def __init__(self, frac_bits=64, ring_bits=128):
        if ring_bits <= frac_bits + 2:
            raise ValueError("ring too small for the fractional precision")
        self.frac_bits = frac_bits
        self.modulus = 1 << ring_bits
        self.half = 1 << (ring_bits - 1)

    def encode(self, v):
        return int(round(float(np.ldexp(float(v), self.frac_bits)))) % self.modulus

    def decode(self, z):
        z %= self.modulus
        if z >= self.half:
            z -= self.modulus
        return z / (1 << self.frac_bits)

    def random(self, rng, size):
        words = -(-(self.modulus.bit_length() - 1) // 64)
        raw = rng.integers(0, 1 << 64, size=(size, words), dtype=np.uint64)
        out = []
        for row in raw.tolist():
            z = 0
            for w in row:
                z = (z << 64) | w
            out.append(z % self.modulus)
        return out


def _smca_float(x, share_bound, rng):
    N, T = x.shape
    if not share_bound > 0:
        raise ValueError("share_bound must be positive")
    # same draw order as calling split_shares agent by agent
    shares = np.empty((N, T, N))
    masks = rng.random(size=(N, T, N - 1))
    masks *= share_bound
    shares[:, :, :-1] = masks
    shares[:, :, -1] = x - shares[:, :, :-1].sum(axis=2)
    # fixed summation order, so runs are reproducible
    sigma = np.add.reduce(shares, axis=0).T
    S = np.add.reduce(sigma, axis=0)
    return S, shares, sigma


def _smca_fixed(x, codec, rng):
    N, T = x.shape
    mod = codec.modulus
    shares = [[[0] * N for _ in range(T)] for _ in range(N)]
    for n in range(N):
        draws = codec.random(rng, T * (N - 1))
        for t in range(T):
            row = draws[t * (N - 1):(t + 1) * (N - 1)]
            shares[n][t][:N - 1] = row
            shares[n][t][N - 1] = (codec.encode(x[n, t]) - sum(row)) % mod
    sigma = [[sum(shares[m][t][n] for m in range(N)) % mod for t in range(T)] for n in range(N)]
    S = np.array([codec.decode(sum(sigma[n][t] for n in range(N))) for t in range(T)])
    return S, shares, sigma


_KEY_CACHE = {}


def _batch_keys(N, *rest):
    if len(rest) == 1:
        return _round_keys(N, rest[0])
    kind, tag = rest
    return [(OPERATOR, n, kind, tag) for n in range(N)]


def _round_keys(N, tag):
    keys = _KEY_CACHE.get((N, tag))
    if keys is None:
        keys = [(n, m, "share", tag) for n in range(N) for m in range(N) if m != n]
        keys += [(n, OPERATOR, "sigma", tag) for n in range(N)]
        _KEY_CACHE[(N, tag)] = keys
    return keys


def smca(x, share_bound, rng_seed, ledger=None, *, round=0, tag="profile", codec=None):
    """Operator-side aggregate sum_n x_n obtained through secret sharing.

    ``codec=None`` uses floating-point shares U([0, share_bound]); a
    :class:`FixedPointCodec` switches to exact modular arithmetic.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    N, T = x.shape
    if N < 2:
        raise ValueError("secret sharing needs at least two agents")
    rng = _rng(rng_seed)
    if codec is None:
        S, shares, sigma = _smca_float(x, share_bound, rng)
    else:
        S, shares, sigma = _smca_fixed(x, codec, rng)

    if ledger is not None and not ledger.keep_payloads:
        ledger.record_round(N, tag)
    elif ledger is not None:
        for n in range(N):
            for m in range(N):
                if m == n:
                    continue
                payload = (
                    shares[n][:, m].copy() if codec is None
                    else np.array([shares[n][t][m] for t in range(T)], dtype=object)
                )
                ledger.record(round, 0, n, m, "share", payload, tag)
        for n in range(N):
            payload = np.array(sigma[n], dtype=float if codec is None else object)
            ledger.record(round, 1, n, OPERATOR, "sigma", payload, tag)
    return S


@dataclass
class PrivacyReport:
    observer: Any
    received: Counter
    violations: list

    @property
    def passed(self):
        return not self.violations

    def __bool__(self):
        return self.passed


def audit_privacy(ledger, observer, secrets=None):
    """List what ``observer`` received and flag anything outside its allowed view.

    The operator may only receive sigma vectors. An agent may receive shares
    from other agents and correction (nu) broadcasts from the operator.
    ``secrets`` (an (N, T) array of true profiles) additionally checks that
    no payload reaching the operator equals any agent's profile row.
    """
    received = ledger.count_received(observer)
    allowed = OPERATOR_KINDS if observer == OPERATOR else AGENT_KINDS
    violations = [f"{observer} received {c} {kind!r} message(s) [{tag}]"
                  for (kind, tag), c in sorted(received.items()) if kind not in allowed]
    for (sender, receiver, kind, tag), c in ledger.counts.items():
        if receiver == observer and sender == observer:
            violations.append(f"{observer} sent {c} message(s) to itself")
        if observer != OPERATOR and receiver == observer and kind == "share" and sender == OPERATOR:
            violations.append("operator sent a share")
    if secrets is not None and observer == OPERATOR and ledger.keep_payloads:
        secrets = np.asarray(secrets, dtype=float)
        for msg in ledger.received_by(OPERATOR):
            if msg.payload is None or msg.payload.dtype == object:
                continue
            if msg.payload.shape == secrets.shape[1:] and any(
                np.array_equal(msg.payload, row) for row in secrets
            ):
                violations.append(f"raw profile of some agent reached the operator (round {msg.round})")
    return PrivacyReport(observer, received, violations)
