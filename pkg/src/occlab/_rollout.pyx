# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled rollout kernel.

Bit-compatible with ``_rollout_py``: identical draw order, identical
cumulative-row scans, identical accumulation order. Draws come straight
from the block's bit generator through the C interface, the same stream
``numpy.random.Generator.random`` consumes.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.stdint cimport int64_t, uint8_t
from numpy.random cimport bitgen_t

KIND_DETERMINISTIC = 0
KIND_STATIONARY = 1
KIND_MIXTURE = 2


cdef inline Py_ssize_t _pick(const double* cum, Py_ssize_t limit, double u) nogil:
    cdef Py_ssize_t i = 0
    while i < limit - 1 and u >= cum[i]:
        i += 1
    return i


def run_block(bitgen, Py_ssize_t n_episodes, long long step_cap, int kind,
              double[::1] init_cum, uint8_t[::1] absorbing,
              int64_t[::1] pair_offset, int64_t[::1] n_actions,
              double[:, ::1] trans_cum, double[:, ::1] rewards,
              int64_t[::1] det_actions, double[:, ::1] pol_cum,
              double[::1] mix_cum, int64_t[:, ::1] mix_actions,
              int64_t[::1] counts_sum, int64_t[::1] counts_sq,
              double[::1] reward_sum, double[::1] reward_sq,
              int64_t[::1] lengths, int64_t[::1] scratch):
    """Simulate ``n_episodes`` episodes, accumulating into the output arrays.

    Returns the number of truncated episodes. All output arrays are
    block-local and zero-initialized by the caller.
    """
    capsule = bitgen.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("invalid BitGenerator capsule")
    cdef bitgen_t* rng = <bitgen_t*> PyCapsule_GetPointer(capsule, "BitGenerator")

    cdef Py_ssize_t n_states = init_cum.shape[0]
    cdef Py_ssize_t npairs = rewards.shape[0]
    cdef Py_ssize_t d = rewards.shape[1]
    cdef Py_ssize_t n_mix = mix_cum.shape[0]
    cdef Py_ssize_t ep, k, j, state, ai, pair, comp
    cdef long long steps
    cdef int64_t c
    cdef double u, acc
    cdef long long truncated = 0
    cdef const int64_t* actions
    cdef double ep_reward[64]

    if d > 64:
        raise ValueError("reward dimension above the kernel's static limit (64)")

    with bitgen.lock, nogil:
        for ep in range(n_episodes):
            if kind == 2:
                u = rng.next_double(rng.state)
                comp = _pick(&mix_cum[0], n_mix, u)
                actions = &mix_actions[comp, 0]
            elif kind == 0:
                actions = &det_actions[0]
            else:
                actions = NULL
            u = rng.next_double(rng.state)
            state = _pick(&init_cum[0], n_states, u)
            steps = 0
            while absorbing[state] == 0 and steps < step_cap:
                if kind == 1:
                    u = rng.next_double(rng.state)
                    ai = _pick(&pol_cum[state, 0], n_actions[state], u)
                else:
                    ai = actions[state]
                pair = pair_offset[state] + ai
                scratch[pair] += 1
                u = rng.next_double(rng.state)
                state = _pick(&trans_cum[pair, 0], n_states, u)
                steps += 1
            if absorbing[state] == 0:
                truncated += 1
            lengths[ep] = steps
            for k in range(npairs):
                c = scratch[k]
                if c != 0:
                    counts_sum[k] += c
                    counts_sq[k] += c * c
            for j in range(d):
                ep_reward[j] = 0.0
            for k in range(npairs):
                c = scratch[k]
                if c != 0:
                    for j in range(d):
                        ep_reward[j] += c * rewards[k, j]
            for j in range(d):
                reward_sum[j] += ep_reward[j]
                reward_sq[j] += ep_reward[j] * ep_reward[j]
            for k in range(npairs):
                scratch[k] = 0

    return int(truncated)
