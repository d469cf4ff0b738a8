"""Write-channel model with a data-dependent state process.

The recorded bit at position i is ``y_i = x_{i - z_i}``: when the channel
state z_i is nonzero, the write head re-records an earlier input bit instead
of the current one.  For a binary state this is the same as
``y_i = x_i XOR (x_i XOR x_{i-1}) * z_i``, so a state hit only causes an
error when the current bit differs from the previous one.

Three state processes are supported:

* ``BernoulliState(p)`` -- i.i.d. failures, substitution-like errors.
* ``MarkovState(p_i, p_d)`` -- two-state Markov failures, paired
  insertion/deletion errors (p_i = insertion, p_d = deletion probability).
* ``MarkovState(p_i, p_d, k)`` with k > 2 -- birth-death chain on
  {0, ..., k-1}, allowing up to k-1 consecutive insertions or deletions.

Everything here is a pure function of its inputs and a seed; sampled values
are bit-reproducible for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

__all__ = [
    "BitSequence",
    "BernoulliState",
    "MarkovState",
    "StateProcess",
    "IidInput",
    "Markov1Input",
    "InputModel",
    "ChannelRealization",
    "apply_write_channel",
    "stationary_distribution",
    "transition_matrix",
    "sample_states",
    "sample_inputs",
    "sample_realization",
    "state_count",
    "substream",
]


def substream(seed: int, *key: int) -> np.random.Generator:
    """Derive an independent, deterministic RNG stream from (seed, key).

    Streams with distinct keys are statistically independent, so parallel
    sweeps can hand out (grid index, block index) keys in any order and
    still reproduce the same results.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, key)]))


def _as_rng(seed) -> np.random.Generator:
    # accepts an int seed or a ready-made Generator
    return np.random.default_rng(seed)


def _check_prob(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {value}")
    return value


def _as_bits(values, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0/1 symbols")
    arr = arr.astype(np.uint8)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class BitSequence:
    """A finite bit string plus the pre-existing bits before position 1.

    ``symbols[i]`` is the bit at position i+1 (positions are 1-based in the
    channel law).  ``prehistory[j]`` is the bit at position -j, so
    ``prehistory[0]`` is the bit at position 0.  The channel reaches back
    ``z_i`` positions, so the prehistory must be at least as deep as the
    largest state value it is used with.
    """

    symbols: np.ndarray
    prehistory: np.ndarray = field(default_factory=lambda: np.zeros(0, np.uint8))

    def __post_init__(self):
        object.__setattr__(self, "symbols", _as_bits(self.symbols, "symbols"))
        object.__setattr__(self, "prehistory", _as_bits(self.prehistory, "prehistory"))

    def __len__(self) -> int:
        return len(self.symbols)

    def at(self, i: int) -> int:
        """Bit at 1-based position i; i <= 0 resolves into the prehistory."""
        if i >= 1:
            return int(self.symbols[i - 1])
        return int(self.prehistory[-i])

    def extended(self, depth: int) -> np.ndarray:
        """Array (x_{1-depth}, ..., x_0, x_1, ..., x_n) for vectorized lookback.

        Entry j holds the bit at position j + 1 - depth.
        """
        if depth > len(self.prehistory):
            raise ValueError(
                f"prehistory depth {len(self.prehistory)} < required {depth}"
            )
        if depth == 0:
            return self.symbols
        return np.concatenate([self.prehistory[:depth][::-1], self.symbols])


@dataclass(frozen=True)
class BernoulliState:
    """I.i.d. state process: each position fails independently with probability p."""

    p: float

    def __post_init__(self):
        _check_prob("p", self.p)


@dataclass(frozen=True)
class MarkovState:
    """Birth-death Markov state process on {0, ..., k-1}.

    From an interior state the process moves up with probability p_i, down
    with probability p_d, and stays otherwise; state 0 can only move up and
    state k-1 only down.  k = 2 is the paired insertion-deletion channel;
    there the stay probabilities are 1-p_i and 1-p_d, so p_i + p_d may
    exceed 1 (p_i = p_d = 1 is the deterministic alternating chain).
    """

    p_i: float
    p_d: float
    k: int = 2

    def __post_init__(self):
        _check_prob("p_i", self.p_i)
        _check_prob("p_d", self.p_d)
        if self.k < 2:
            raise ValueError(f"k must be >= 2, got {self.k}")
        if self.k > 2 and self.p_i + self.p_d > 1.0 + 1e-12:
            # interior stay probability 1 - p_i - p_d would be negative
            raise ValueError(
                f"k={self.k} requires p_i + p_d <= 1, got {self.p_i + self.p_d}"
            )


StateProcess = Union[BernoulliState, MarkovState]


@dataclass(frozen=True)
class IidInput:
    """I.i.d. binary input with P{x_i = 1} = alpha."""

    alpha: float = 0.5

    def __post_init__(self):
        _check_prob("alpha", self.alpha)


@dataclass(frozen=True)
class Markov1Input:
    """Symmetric first-order Markov input: P{x_i != x_{i-1}} = beta."""

    beta: float

    def __post_init__(self):
        _check_prob("beta", self.beta)


InputModel = Union[IidInput, Markov1Input]


def state_count(spec: StateProcess) -> int:
    """Size of the state alphabet (2 for Bernoulli, k for Markov)."""
    if isinstance(spec, BernoulliState):
        return 2
    if isinstance(spec, MarkovState):
        return spec.k
    raise TypeError(f"not a state process spec: {spec!r}")


def transition_matrix(spec: StateProcess) -> np.ndarray:
    """Row-stochastic kernel of the state process.

    For the Bernoulli process all rows equal (1-p, p), which makes the
    i.i.d. draw expressible as a (degenerate) Markov step.
    """
    if isinstance(spec, BernoulliState):
        return np.array([[1.0 - spec.p, spec.p]] * 2)
    k = spec.k
    t = np.zeros((k, k))
    for z in range(k):
        up = spec.p_i if z < k - 1 else 0.0
        down = spec.p_d if z > 0 else 0.0
        t[z, z] = 1.0 - up - down
        if z < k - 1:
            t[z, z + 1] = up
        if z > 0:
            t[z, z - 1] = down
    return t


def stationary_distribution(spec: MarkovState) -> np.ndarray:
    """Steady-state distribution of the Markov state chain.

    Detailed balance gives pi_z proportional to (p_i/p_d)^z; the ratio is
    taken in whichever direction keeps the base <= 1 so the weights never
    overflow.  Degenerate chains follow a fixed convention: p_i = 0 puts
    all mass on state 0 (identity channel), p_d = 0 on state k-1 (pure
    delay), and p_i = p_d = 0 on state 0.
    """
    if not isinstance(spec, MarkovState):
        raise TypeError("stationary_distribution needs a Markov state process")
    k = spec.k
    out = np.zeros(k)
    if spec.p_i == 0.0:
        out[0] = 1.0
        return out
    if spec.p_d == 0.0:
        out[-1] = 1.0
        return out
    z = np.arange(k)
    if spec.p_d <= spec.p_i:
        w = (spec.p_d / spec.p_i) ** (k - 1 - z)
    else:
        w = (spec.p_i / spec.p_d) ** z
    return w / w.sum()


def initial_state_distribution(spec: StateProcess) -> np.ndarray:
    """Distribution of the first state: stationary for Markov, (1-p, p) for Bernoulli."""
    if isinstance(spec, BernoulliState):
        return np.array([1.0 - spec.p, spec.p])
    return stationary_distribution(spec)


def sample_states(spec: StateProcess, n: int, seed) -> np.ndarray:
    """Sample a length-n state sequence; deterministic given the seed.

    Markov chains start from the stationary distribution.  ``seed`` may be
    an integer or a ``numpy.random.Generator``.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = _as_rng(seed)
    if isinstance(spec, BernoulliState):
        return (rng.random(n) < spec.p).astype(np.uint8)
    if not isinstance(spec, MarkovState):
        raise TypeError(f"not a state process spec: {spec!r}")
    if spec.k == 2:
        return _sample_binary_markov(spec, n, rng)
    return _sample_kary_markov(spec, n, rng)


def _sample_binary_markov(spec: MarkovState, n: int, rng: np.random.Generator) -> np.ndarray:
    # The two-state chain alternates runs whose lengths are geometric with
    # the state's exit probability, which vectorizes the whole draw.
    pi = stationary_distribution(spec)
    exit_prob = (spec.p_i, spec.p_d)
    out = np.empty(n, np.uint8)
    state = int(rng.random() < pi[1])
    pos = 0
    while pos < n:
        if exit_prob[state] == 0.0:
            out[pos:] = state
            break
        if exit_prob[1 - state] == 0.0:
            run = min(int(rng.geometric(exit_prob[state])), n - pos)
            out[pos : pos + run] = state
            out[pos + run :] = 1 - state
            break
        need = n - pos
        mean_pair = 1.0 / exit_prob[state] + 1.0 / exit_prob[1 - state]
        pairs = max(8, int(1.2 * need / mean_pair) + 8)
        lengths = np.empty(2 * pairs, np.int64)
        lengths[0::2] = rng.geometric(exit_prob[state], size=pairs)
        lengths[1::2] = rng.geometric(exit_prob[1 - state], size=pairs)
        values = np.empty(2 * pairs, np.uint8)
        values[0::2] = state
        values[1::2] = 1 - state
        chunk = np.repeat(values, lengths)
        take = min(len(chunk), need)
        out[pos : pos + take] = chunk[:take]
        pos += take
        # an even number of whole runs was consumed, so the next run (if the
        # chunk fell short) starts again from `state`
    return out


def _sample_kary_markov(spec: MarkovState, n: int, rng: np.random.Generator) -> np.ndarray:
    pi = stationary_distribution(spec)
    u = rng.random(n)
    z = np.empty(n, np.uint8)
    cur = min(int(np.searchsorted(np.cumsum(pi), u[0], side="right")), spec.k - 1)
    z[0] = cur
    up, down, top = spec.p_i, spec.p_d, spec.k - 1
    both = up + down
    for t in range(1, n):
        ut = u[t]
        if cur == 0:
            if ut < up:
                cur = 1
        elif cur == top:
            if ut < down:
                cur -= 1
        elif ut < up:
            cur += 1
        elif ut < both:
            cur -= 1
        z[t] = cur
    return z


def sample_inputs(model: InputModel, n: int, prehistory_depth: int, seed) -> BitSequence:
    """Sample an input sequence with i.i.d. uniform prehistory bits.

    The prehistory models the unknown pre-existing magnetization, so it is
    uniform regardless of the input model; a Markov input chains off the
    most recent prehistory bit.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if prehistory_depth < 1:
        raise ValueError(f"prehistory_depth must be >= 1, got {prehistory_depth}")
    rng = _as_rng(seed)
    pre = (rng.random(prehistory_depth) < 0.5).astype(np.uint8)
    if isinstance(model, IidInput):
        sym = (rng.random(n) < model.alpha).astype(np.uint8)
    elif isinstance(model, Markov1Input):
        flips = rng.random(n) < model.beta
        sym = ((int(pre[0]) + np.cumsum(flips)) % 2).astype(np.uint8)
    else:
        raise TypeError(f"not an input model: {model!r}")
    return BitSequence(sym, pre)


def apply_write_channel(x: BitSequence, z) -> BitSequence:
    """Record x under the state sequence z: returns y with y_i = x_{i - z_i}."""
    z = np.asarray(z)
    n = len(x.symbols)
    if z.shape != (n,):
        raise ValueError(f"state sequence length {z.shape} != input length {n}")
    if n == 0:
        return BitSequence(np.zeros(0, np.uint8))
    if z.min() < 0:
        raise ValueError("state values must be >= 0")
    depth = len(x.prehistory)
    zmax = int(z.max())
    if zmax > depth:
        raise ValueError(
            f"state value {zmax} reaches before the prehistory (depth {depth})"
        )
    ext = x.extended(depth)
    idx = np.arange(1, n + 1) - z.astype(np.int64) + depth - 1
    return BitSequence(ext[idx])


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """One sampled (input, state, output) triple with its seed."""

    x: BitSequence
    z: np.ndarray
    y: BitSequence
    seed: int


def sample_realization(
    spec: StateProcess, model: InputModel, n: int, seed: int
) -> ChannelRealization:
    """Sample inputs and states on independent substreams and run the channel."""
    rng_x = substream(seed, 0)
    rng_z = substream(seed, 1)
    x = sample_inputs(model, n, state_count(spec) - 1, rng_x)
    z = sample_states(spec, n, rng_z)
    return ChannelRealization(x, z, apply_write_channel(x, z), seed)
