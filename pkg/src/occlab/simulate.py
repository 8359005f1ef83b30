"""Seeded Monte Carlo oracle for occupancy measures and hitting-time tails.

Episodes follow the canonical construction: draw the initial state, then
alternate a policy draw and a kernel draw until the absorbing set is hit
(or a step cap intervenes, which is flagged, never hidden). Mixtures
randomize once per episode before the first action; chattering kernels
simulate through their induced stationary policy, which has the same law.

Reproducibility contract: the generator is numpy's Philox (4x64,
counter-based). A run with master seed s processes episodes in fixed
blocks of 1024; block b draws from Philox keyed (s mod 2^64, b), one
53-bit double per decision. Block contents and the merge order are
independent of the worker count, per-episode visit counts accumulate in
integers, and float totals add in fixed block order, so a (model, policy,
seed, episodes) tuple yields bit-identical estimates for any ``jobs``
value and for both rollout kernels (the compiled one is selected at
import when available, with a pure-Python fallback).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import StructuralError
from .mixtures import ChatteringKernel, MixturePolicy
from .model import DeterministicPolicy, FiniteMdp, Numerics, resolve_numerics
from .occupancy import StationaryPolicy, check_policy, flatten_chattering
from . import _rollout_py

try:
    from . import _rollout as _rollout_ext
except ImportError:
    _rollout_ext = None

BLOCK_EPISODES = 1024
_MASK64 = (1 << 64) - 1

KIND_DETERMINISTIC = _rollout_py.KIND_DETERMINISTIC
KIND_STATIONARY = _rollout_py.KIND_STATIONARY
KIND_MIXTURE = _rollout_py.KIND_MIXTURE


def kernel_name() -> str:
    return "compiled" if _rollout_ext is not None else "pure"


def available_kernels() -> dict:
    kernels = {"pure": _rollout_py}
    if _rollout_ext is not None:
        kernels["compiled"] = _rollout_ext
    return kernels


@dataclass
class _Tables:
    """Flattened float64/int64 views of the model and one policy."""

    n_states: int
    pairs: tuple
    init_cum: np.ndarray
    absorbing: np.ndarray
    pair_offset: np.ndarray
    n_actions: np.ndarray
    trans_cum: np.ndarray
    rewards: np.ndarray
    kind: int
    det_actions: np.ndarray
    pol_cum: np.ndarray
    mix_cum: np.ndarray
    mix_actions: np.ndarray


def _selector_indices(model: FiniteMdp, policy: DeterministicPolicy) -> np.ndarray:
    out = np.zeros(len(model.states), dtype=np.int64)
    for i, x in enumerate(model.states):
        if x in model.absorbing:
            continue
        acts = model.actions[x]
        a = policy.action(x)
        if a not in acts:
            raise StructuralError(f"selector action {a!r} not admissible at {x!r}")
        out[i] = acts.index(a)
    return out


def _build_tables(model: FiniteMdp, policy, numerics: Numerics = None) -> _Tables:
    num = resolve_numerics(model, numerics)
    if not model.states:
        raise StructuralError("cannot simulate an empty model")
    states = model.states
    n = len(states)
    pairs = model.pair_index().nonabsorbing_pairs
    npairs = len(pairs)
    state_pos = {x: i for i, x in enumerate(states)}

    init_cum = np.cumsum([float(model.initial_prob(x)) for x in states])
    absorbing = np.asarray([1 if x in model.absorbing else 0 for x in states],
                           dtype=np.uint8)
    pair_offset = np.zeros(n, dtype=np.int64)
    n_actions = np.zeros(n, dtype=np.int64)
    offset = 0
    for i, x in enumerate(states):
        if x in model.absorbing:
            continue
        pair_offset[i] = offset
        n_actions[i] = len(model.actions[x])
        offset += len(model.actions[x])
    trans_cum = np.zeros((max(npairs, 1), n))
    rewards = np.zeros((npairs, model.reward_dim))
    for k, (x, a) in enumerate(pairs):
        row = np.zeros(n)
        for y, p in model.row(x, a).items():
            row[state_pos[y]] = float(p)
        trans_cum[k] = np.cumsum(row)
        rewards[k] = [float(v) for v in model.reward(x, a)]

    if isinstance(policy, ChatteringKernel):
        policy = flatten_chattering(model, policy)
    det_actions = np.zeros(1, dtype=np.int64)
    pol_cum = np.zeros((1, 1))
    mix_cum = np.ones(1)
    mix_actions = np.zeros((1, 1), dtype=np.int64)
    if isinstance(policy, DeterministicPolicy):
        kind = KIND_DETERMINISTIC
        det_actions = _selector_indices(model, policy)
    elif isinstance(policy, StationaryPolicy):
        kind = KIND_STATIONARY
        check_policy(model, policy, num)
        width = max((len(model.actions[x]) for x in model.nonabsorbing), default=1)
        pol_cum = np.zeros((n, width))
        for i, x in enumerate(states):
            if x in model.absorbing:
                continue
            probs = [float(policy.prob(x, a)) for a in model.actions[x]]
            pol_cum[i, :len(probs)] = np.cumsum(probs)
    elif isinstance(policy, MixturePolicy):
        kind = KIND_MIXTURE
        weights = [float(w) for w in policy.weights]
        if any(w < 0 for w in weights) or abs(sum(weights) - 1) > float(num.tau_stoch) + 1e-12:
            raise StructuralError("mixture weights must lie in the simplex")
        mix_cum = np.cumsum(weights)
        mix_actions = np.stack([_selector_indices(model, g) for g in policy.selectors])
    else:
        raise StructuralError(f"unsupported policy object: {policy!r}")

    return _Tables(
        n_states=n, pairs=pairs, init_cum=init_cum, absorbing=absorbing,
        pair_offset=pair_offset, n_actions=n_actions, trans_cum=trans_cum,
        rewards=rewards, kind=kind, det_actions=det_actions, pol_cum=pol_cum,
        mix_cum=mix_cum, mix_actions=mix_actions,
    )


def _block_bitgen(seed: int, block: int) -> np.random.Philox:
    key = np.array([seed & _MASK64, block & _MASK64], dtype=np.uint64)
    return np.random.Philox(key=key)


def _select_kernel(tables: _Tables, backend):
    if backend is None:
        backend = kernel_name()
        if backend == "compiled" and tables.rewards.shape[1] > 64:
            backend = "pure"
    kernels = available_kernels()
    if backend not in kernels:
        raise StructuralError(f"rollout kernel {backend!r} is not available")
    return backend, kernels[backend]


def _run_blocks(model: FiniteMdp, policy, episodes: int, seed: int,
                step_cap: int, jobs: int, backend=None, numerics: Numerics = None):
    """Run all episode blocks; merge block results in block order.

    Returns (tables, counts_sum, counts_sq, reward_sum, reward_sq,
    lengths, truncated).
    """
    if episodes < 1:
        raise StructuralError("episodes must be at least 1")
    if jobs < 1:
        raise StructuralError("jobs must be at least 1")
    tables = _build_tables(model, policy, numerics)
    backend, kernel = _select_kernel(tables, backend)
    npairs = len(tables.pairs)
    d = tables.rewards.shape[1]

    blocks = []
    start = 0
    index = 0
    while start < episodes:
        size = min(BLOCK_EPISODES, episodes - start)
        blocks.append((index, size))
        start += size
        index += 1

    def run_one(block_index, size):
        counts_sum = np.zeros(npairs, dtype=np.int64)
        counts_sq = np.zeros(npairs, dtype=np.int64)
        reward_sum = np.zeros(d)
        reward_sq = np.zeros(d)
        lengths = np.zeros(size, dtype=np.int64)
        scratch = np.zeros(max(npairs, 1), dtype=np.int64)
        truncated = kernel.run_block(
            _block_bitgen(seed, block_index), size, step_cap, tables.kind,
            tables.init_cum, tables.absorbing, tables.pair_offset,
            tables.n_actions, tables.trans_cum, tables.rewards,
            tables.det_actions, tables.pol_cum, tables.mix_cum,
            tables.mix_actions, counts_sum, counts_sq, reward_sum, reward_sq,
            lengths, scratch,
        )
        return counts_sum, counts_sq, reward_sum, reward_sq, lengths, truncated

    if jobs == 1 or len(blocks) == 1:
        results = [run_one(b, size) for b, size in blocks]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(run_one, b, size) for b, size in blocks]
            results = [f.result() for f in futures]

    counts_sum = np.zeros(npairs, dtype=np.int64)
    counts_sq = np.zeros(npairs, dtype=np.int64)
    reward_sum = np.zeros(d)
    reward_sq = np.zeros(d)
    lengths_parts = []
    truncated = 0
    for cs, cq, rs, rq, ln, tr in results:  # fixed block order
        counts_sum += cs
        counts_sq += cq
        reward_sum += rs
        reward_sq += rq
        lengths_parts.append(ln)
        truncated += tr
    lengths = np.concatenate(lengths_parts)
    return tables, backend, counts_sum, counts_sq, reward_sum, reward_sq, lengths, truncated


def _mean_se(total, total_sq, count):
    mean = total / count
    if count < 2:
        return mean, 0.0
    var = (total_sq - total * total / count) / (count - 1)
    if var < 0.0:
        var = 0.0
    return mean, float(np.sqrt(var / count))


@dataclass(frozen=True)
class SimEstimate:
    """Monte Carlo estimate with per-coordinate standard errors."""

    occupancy_mean: dict
    occupancy_se: dict
    absorption_time_mean: float
    absorption_time_se: float
    performance_mean: list
    performance_se: list
    episodes: int
    truncated: int
    seed: int
    step_cap: int
    kernel: str

    @property
    def truncation_warning(self) -> bool:
        return self.truncated > 0.01 * self.episodes

    def as_dict(self) -> dict:
        occ = {}
        for (x, a), mean in self.occupancy_mean.items():
            occ.setdefault(x, {})[a] = {
                "mean": mean, "se": self.occupancy_se[(x, a)],
            }
        return {
            "episodes": self.episodes,
            "seed": self.seed,
            "step_cap": self.step_cap,
            "kernel": self.kernel,
            "truncated": self.truncated,
            "truncation_warning": self.truncation_warning,
            "absorption_time": {
                "mean": self.absorption_time_mean,
                "se": self.absorption_time_se,
            },
            "occupancy": occ,
            "performance": [
                {"mean": m, "se": s}
                for m, s in zip(self.performance_mean, self.performance_se)
            ],
        }


def estimate(model: FiniteMdp, policy, episodes: int, seed: int,
             step_cap: int = 10 ** 6, jobs: int = 1, backend=None,
             numerics: Numerics = None) -> SimEstimate:
    """Empirical occupancy, absorption time and performance over episodes.

    Deterministic given (model, policy, seed, episodes): worker count and
    kernel choice never change the result. Truncated episodes contribute
    their partial sums and raise the warning flag when they exceed 1%.
    """
    (tables, backend, counts_sum, counts_sq, reward_sum, reward_sq,
     lengths, truncated) = _run_blocks(model, policy, episodes, seed,
                                       step_cap, jobs, backend, numerics)
    m = episodes
    occupancy_mean = {}
    occupancy_se = {}
    for k, pair in enumerate(tables.pairs):
        mean, se = _mean_se(float(counts_sum[k]), float(counts_sq[k]), m)
        occupancy_mean[pair] = mean
        occupancy_se[pair] = se
    length_sum = int(np.sum(lengths))
    length_sq = int(np.dot(lengths, lengths))
    t_mean, t_se = _mean_se(float(length_sum), float(length_sq), m)
    perf_mean = []
    perf_se = []
    for j in range(tables.rewards.shape[1]):
        mean, se = _mean_se(float(reward_sum[j]), float(reward_sq[j]), m)
        perf_mean.append(mean)
        perf_se.append(se)
    return SimEstimate(
        occupancy_mean=occupancy_mean, occupancy_se=occupancy_se,
        absorption_time_mean=t_mean, absorption_time_se=t_se,
        performance_mean=perf_mean, performance_se=perf_se,
        episodes=m, truncated=truncated, seed=seed, step_cap=step_cap,
        kernel=backend,
    )


@dataclass(frozen=True)
class EpisodeRecord:
    states: list
    actions: list
    truncated: bool

    @property
    def length(self) -> int:
        return len(self.actions)


def rollout(model: FiniteMdp, policy, seed: int, step_cap: int = 10 ** 6,
            numerics: Numerics = None) -> EpisodeRecord:
    """One full trajectory, drawn exactly like episode 0 of ``estimate``."""
    tables = _build_tables(model, policy, numerics)
    draw = np.random.Generator(_block_bitgen(seed, 0)).random
    states = list(model.states)
    actions_of = {x: model.actions[x] for x in model.states}

    det = tables.det_actions
    if tables.kind == KIND_MIXTURE:
        u = draw()
        comp = _rollout_py._pick(tables.mix_cum.tolist(), len(tables.mix_cum), u)
        det = tables.mix_actions[comp]
    u = draw()
    state = _rollout_py._pick(tables.init_cum.tolist(), tables.n_states, u)
    visited = [states[state]]
    chosen = []
    steps = 0
    trans = tables.trans_cum.tolist()
    pol = tables.pol_cum.tolist()
    while not tables.absorbing[state] and steps < step_cap:
        if tables.kind == KIND_STATIONARY:
            u = draw()
            ai = _rollout_py._pick(pol[state], int(tables.n_actions[state]), u)
        else:
            ai = int(det[state])
        pair = int(tables.pair_offset[state]) + ai
        chosen.append(actions_of[states[state]][ai])
        u = draw()
        state = _rollout_py._pick(trans[pair], tables.n_states, u)
        visited.append(states[state])
        steps += 1
    return EpisodeRecord(states=visited, actions=chosen,
                         truncated=not bool(tables.absorbing[state]))


@dataclass(frozen=True)
class TailCurve:
    """Empirical n -> sum_{t >= n} P(T > t), with standard errors."""

    values: list
    std_errs: list
    episodes: int
    seed: int
    horizon: int

    def as_dict(self) -> dict:
        return {
            "episodes": self.episodes,
            "seed": self.seed,
            "horizon": self.horizon,
            "values": self.values,
            "std_errs": self.std_errs,
        }


def tail_curve(model: FiniteMdp, policy, episodes: int, seed: int,
               horizon: int, step_cap: int = 10 ** 6, jobs: int = 1,
               backend=None, numerics: Numerics = None) -> TailCurve:
    """Tail series from episode lengths: the mean of max(T - n, 0) over
    episodes equals sum_{t >= n} of the empirical survival function."""
    (_tables, _backend, _cs, _cq, _rs, _rq,
     lengths, _truncated) = _run_blocks(model, policy, episodes, seed,
                                        step_cap, jobs, backend, numerics)
    values = []
    errs = []
    m = episodes
    for n in range(horizon + 1):
        excess = np.maximum(lengths - n, 0).astype(np.float64)
        total = float(np.sum(excess))
        total_sq = float(np.dot(excess, excess))
        mean, se = _mean_se(total, total_sq, m)
        values.append(mean)
        errs.append(se)
    return TailCurve(values=values, std_errs=errs, episodes=m, seed=seed,
                     horizon=horizon)
