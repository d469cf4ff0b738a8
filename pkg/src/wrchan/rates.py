"""Information-rate estimation by forward recursion on a joint trellis.

The output process of the write channel is a hidden-Markov process once the
hidden state is taken to be (recent input window, channel state): the window
keeps the last k-1 input bits, which is exactly what the emission
``y_i = x_{i - z_i}`` can reach back to.  That gives 2^(k-1) * k states
(4 for a binary state process, 12 for k = 3).

Per-sequence log-likelihoods are computed with a scaled forward pass.  The
per-step transition matrices are collapsed in ordered pairs (matrix products
are associative), rescaling every intermediate product by its largest entry
and accumulating the log of the scales.  This keeps everything vectorized,
never underflows, and handles sequence lengths of 1e7 and beyond in chunks
of bounded memory.

``exact_information_rate`` is an independent brute-force oracle for short
blocks: it enumerates inputs, computes the conditional output distribution
by exact forward sums over the state chain, and evaluates the mutual
information from the joint table.  It shares no code path with the trellis
estimator beyond the state-process kernels.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from wrchan.channel import (
    BernoulliState,
    BitSequence,
    IidInput,
    InputModel,
    Markov1Input,
    MarkovState,
    StateProcess,
    apply_write_channel,
    initial_state_distribution,
    sample_inputs,
    sample_states,
    state_count,
    transition_matrix,
)

__all__ = [
    "JointTrellis",
    "RateEstimate",
    "build_joint_trellis",
    "log_likelihood_forward",
    "conditional_log_likelihood",
    "estimate_information_rate",
    "exact_information_rate",
]

_CHUNK = 4096
_MAX_K = 8  # 2^(k-1) * k states; k=8 is already 1024


@dataclass(frozen=True, eq=False)
class JointTrellis:
    """Hidden-Markov model of the channel output process.

    ``emit[b]`` is the matrix of transition probabilities that emit output
    bit b, so ``emit.sum(axis=0)`` is the plain state transition kernel and
    every row of it sums to 1.  ``states[s]`` labels state s as
    (input window as a tuple, channel state); the window stores the most
    recent bit last.
    """

    states: tuple
    emit: np.ndarray
    initial: np.ndarray

    @property
    def n_states(self) -> int:
        return len(self.initial)

    def step_matrix(self) -> np.ndarray:
        """Transition kernel with emissions marginalized out."""
        return self.emit.sum(axis=0)


def _input_transition(model: InputModel, last: int, b: int) -> float:
    if isinstance(model, IidInput):
        return model.alpha if b else 1.0 - model.alpha
    if isinstance(model, Markov1Input):
        return model.beta if b != last else 1.0 - model.beta
    raise TypeError(f"not an input model: {model!r}")


def build_joint_trellis(
    spec: StateProcess, model: InputModel, max_k: int = _MAX_K
) -> JointTrellis:
    """Build the joint (input window, channel state) trellis for an input model.

    For the Bernoulli state process the state needs no channel component --
    the failure draw is fresh each step -- so the trellis has just the two
    window states and the emission mixes over the draw.

    States unreachable from the initial distribution (possible only for
    degenerate chains, e.g. p_i = 0) are pruned; this keeps fully
    deterministic channels numerically exact.
    """
    if isinstance(spec, BernoulliState):
        p = spec.p
        emit = np.zeros((2, 2, 2))
        for w in (0, 1):
            for b in (0, 1):
                pin = _input_transition(model, w, b)
                emit[b, w, b] += pin * (1.0 - p)  # wrote the new bit
                emit[w, w, b] += pin * p  # re-wrote the previous bit
        return JointTrellis(((0,), (1,)), emit, np.array([0.5, 0.5]))

    if not isinstance(spec, MarkovState):
        raise TypeError(f"not a state process spec: {spec!r}")
    k = spec.k
    if k > max_k:
        raise ValueError(f"k={k} exceeds the trellis state guard (max_k={max_k})")
    wlen = k - 1
    mask = (1 << wlen) - 1
    kernel = transition_matrix(spec)
    pi = initial_state_distribution(spec)
    n_states = (1 << wlen) * k
    emit = np.zeros((2, n_states, n_states))
    initial = np.zeros(n_states)
    labels = []
    for w in range(1 << wlen):
        window = tuple((w >> (wlen - 1 - j)) & 1 for j in range(wlen))
        for z in range(k):
            s = w * k + z
            labels.append((window, z))
            initial[s] = pi[z] / (1 << wlen)
            for b in (0, 1):
                pin = _input_transition(model, w & 1, b)
                w2 = ((w << 1) | b) & mask
                for z2 in range(k):
                    pz = kernel[z, z2]
                    if pin * pz == 0.0:
                        continue
                    # z2 = 0 writes the fresh bit, z2 = j re-writes the
                    # j-th most recent window bit
                    ybit = b if z2 == 0 else (w >> (z2 - 1)) & 1
                    emit[ybit, s, w2 * k + z2] += pin * pz
    return JointTrellis(tuple(labels), emit, initial)


def _reduce_ordered(stack: np.ndarray):
    """Collapse an ordered stack of matrices into (product, log2 scale).

    Multiplies adjacent pairs repeatedly, rescaling each intermediate
    product by its largest entry so entries stay in [0, 1].  Returns
    (None, -inf) if the product is identically zero.
    """
    log_scale = 0.0
    while stack.shape[0] > 1:
        m = stack.shape[0]
        even = m - (m % 2)
        prod = np.matmul(stack[0:even:2], stack[1:even:2])
        scale = prod.max(axis=(1, 2))
        if not np.all(scale > 0.0):
            return None, -np.inf
        prod /= scale[:, None, None]
        log_scale += float(np.log2(scale).sum())
        stack = np.concatenate([prod, stack[-1:]]) if m % 2 else prod
    return stack[0], log_scale


def _scan_log2(initial: np.ndarray, chunks) -> float:
    alpha = np.asarray(initial, dtype=float).copy()
    total = 0.0
    for stack in chunks:
        mat, lg = _reduce_ordered(stack)
        if mat is None:
            return -math.inf
        alpha = alpha @ mat
        mass = alpha.sum()
        if not mass > 0.0:
            return -math.inf
        alpha /= mass
        total += lg + math.log2(mass)
    return total


def _output_symbols(y) -> np.ndarray:
    sym = y.symbols if isinstance(y, BitSequence) else np.asarray(y, dtype=np.uint8)
    if sym.ndim != 1 or sym.size == 0:
        raise ValueError("output sequence must be a non-empty 1-d bit array")
    return sym


def log_likelihood_forward(trellis: JointTrellis, y) -> float:
    """log2 P(y) under the trellis, by the scaled forward recursion.

    Returns -inf for sequences the trellis cannot emit (possible only for
    degenerate state processes).
    """
    sym = _output_symbols(y)

    def chunks():
        for s in range(0, len(sym), _CHUNK):
            yield trellis.emit[sym[s : s + _CHUNK]]

    return _scan_log2(trellis.initial, chunks())


def conditional_log_likelihood(spec: StateProcess, x: BitSequence, y) -> float:
    """log2 P(y | x): forward sum over the state chain with x clamped.

    Needed for the conditional entropy term when the state process has
    memory; for the Bernoulli process it coincides with the per-position
    closed form.
    """
    ns = state_count(spec)
    d = ns - 1
    sym = _output_symbols(y)
    n = len(x.symbols)
    if len(sym) != n:
        raise ValueError(f"x and y lengths differ: {n} vs {len(sym)}")
    kernel = transition_matrix(spec)
    init = initial_state_distribution(spec)
    ext = x.extended(d).astype(np.uint8)

    def chunks():
        for s in range(0, n, _CHUNK):
            m = min(_CHUNK, n - s)
            e = np.empty((m, ns))
            for z in range(ns):
                e[:, z] = sym[s : s + m] == ext[s + d - z : s + d - z + m]
            yield kernel[None, :, :] * e[:, None, :]

    return _scan_log2(init, chunks())


def _bernoulli_conditional_closed_form(p: float, x: BitSequence, y) -> float:
    # P(y|x) factorizes over positions for an i.i.d. state process:
    # positions with x_i = x_{i-1} are error-free, transitions keep the new
    # bit w.p. 1-p and re-write the old one w.p. p.
    sym = _output_symbols(y)
    ext = x.extended(1)
    prev, cur = ext[:-1], ext[1:]
    trans = prev != cur
    if np.any(sym[~trans] != cur[~trans]):
        return -math.inf
    kept = int(np.count_nonzero(trans & (sym == cur)))
    delayed = int(np.count_nonzero(trans & (sym == prev)))
    if (kept and p == 1.0) or (delayed and p == 0.0):
        return -math.inf
    ll = 0.0
    if kept:
        ll += kept * math.log2(1.0 - p)
    if delayed:
        ll += delayed * math.log2(p)
    return ll


@dataclass(frozen=True)
class RateEstimate:
    """Monte-Carlo information-rate estimate in bits per channel use.

    ``value`` is the mean over ``blocks`` independent realizations of
    length n/blocks each; ``std_error`` is the standard error of that mean
    (0.0 when there is a single block).  ``n`` records the total number of
    channel uses actually consumed.
    """

    value: float
    std_error: float
    n: int
    blocks: int
    seed: int


def estimate_information_rate(
    spec: StateProcess,
    model: InputModel,
    n: int = 1_000_000,
    blocks: int = 10,
    seed: int = 1,
) -> RateEstimate:
    """Estimate the per-symbol information rate I(X;Y)/n by simulation.

    Each block samples a realization, then evaluates
    (log2 P(y|x) - log2 P(y)) / len by the forward recursions above; the
    expectation of a block value equals the exact finite-length rate at the
    block length, so the estimate carries an O(blocks/n) edge bias relative
    to the asymptotic rate.  Blocks use substreams spawned from the seed,
    so results do not depend on evaluation order.
    """
    if blocks < 1:
        raise ValueError(f"blocks must be >= 1, got {blocks}")
    if n < blocks:
        raise ValueError(f"n={n} smaller than blocks={blocks}")
    m = n // blocks
    if m < 1000:
        warnings.warn(
            f"block length {m} is short; the O(1/length) edge bias may be visible",
            stacklevel=2,
        )
    trellis = build_joint_trellis(spec, model)
    depth = state_count(spec) - 1
    children = np.random.SeedSequence(int(seed)).spawn(blocks)
    values = np.empty(blocks)
    for i, child in enumerate(children):
        rng = np.random.default_rng(child)
        x = sample_inputs(model, m, depth, rng)
        z = sample_states(spec, m, rng)
        y = apply_write_channel(x, z)
        ll_joint = log_likelihood_forward(trellis, y)
        ll_cond = conditional_log_likelihood(spec, x, y)
        if isinstance(spec, BernoulliState):
            closed = _bernoulli_conditional_closed_form(spec.p, x, y)
            if abs(closed - ll_cond) > 1e-9 * max(1.0, m):
                raise RuntimeError(
                    f"conditional likelihood disagrees with the closed form: "
                    f"{ll_cond} vs {closed}"
                )
        values[i] = (ll_cond - ll_joint) / m
    value = float(values.mean())
    std_error = float(values.std(ddof=1) / math.sqrt(blocks)) if blocks > 1 else 0.0
    return RateEstimate(value, std_error, n=m * blocks, blocks=blocks, seed=int(seed))


def _input_sequence_prob(model: InputModel, x0: int, xbits: np.ndarray) -> float:
    if isinstance(model, IidInput):
        ones = int(xbits.sum())
        a = model.alpha
        if (ones and a == 0.0) or (ones < len(xbits) and a == 1.0):
            return 0.0
        return a**ones * (1.0 - a) ** (len(xbits) - ones)
    prev = np.concatenate([[x0], xbits[:-1]])
    flips = int(np.count_nonzero(xbits != prev))
    b = model.beta
    if (flips and b == 0.0) or (flips < len(xbits) and b == 1.0):
        return 0.0
    return b**flips * (1.0 - b) ** (len(xbits) - flips)


def _conditional_output_distribution(
    kernel: np.ndarray, init: np.ndarray, ext: np.ndarray, n: int, d: int
) -> np.ndarray:
    """Exact P(y | x, prehistory) for every y, indexed with y_1 as MSB."""
    k = kernel.shape[0]
    a = init.reshape(1, k).astype(float)
    for i in range(1, n + 1):
        b = a @ kernel
        nxt = np.zeros((a.shape[0] * 2, k))
        for z in range(k):
            bit = int(ext[i - z + d - 1])
            nxt[bit::2, z] = b[:, z]
        a = nxt
    return a.sum(axis=1)


def exact_information_rate(spec: StateProcess, model: InputModel, n: int) -> float:
    """Exact I(X;Y)/n for short blocks, by full enumeration.

    Enumerates every input block weighted by the input model, marginalizes
    the uniform prehistory, and forms the joint input-output table from
    exact forward sums over the state chain.  Cost grows as 4^n, so n is
    capped at 12.
    """
    if not 1 <= n <= 12:
        raise ValueError(f"n must be in 1..12 for exact enumeration, got {n}")
    k = state_count(spec)
    d = k - 1
    kernel = transition_matrix(spec)
    init = initial_state_distribution(spec)
    size = 1 << n
    joint = np.zeros((size, size))
    pre_weight = 2.0**-d
    for h in range(1 << d):
        # bit j of h is the input at position -j
        pre_rev = np.array([(h >> j) & 1 for j in range(d)][::-1], np.uint8)
        for xi in range(size):
            xbits = np.array([(xi >> (n - 1 - t)) & 1 for t in range(n)], np.uint8)
            px = _input_sequence_prob(model, h & 1, xbits)
            if px == 0.0:
                continue
            ext = np.concatenate([pre_rev, xbits])
            joint[xi] += pre_weight * px * _conditional_output_distribution(
                kernel, init, ext, n, d
            )
    px_m = joint.sum(axis=1)
    py_m = joint.sum(axis=0)
    mask = joint > 0.0
    denom = np.outer(px_m, py_m)
    mi = float(np.sum(joint[mask] * np.log2(joint[mask] / denom[mask])))
    return mi / n
