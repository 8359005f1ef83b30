"""Pure-Python rollout kernel: the import-time fallback for the compiled one.

Must stay bit-compatible with ``_rollout.pyx``: identical draw order
(one uniform per mixture pick, initial state, stationary action, and
transition), identical cumulative-row scans, and identical accumulation
order, so estimates do not depend on which kernel is installed. Draws are
single doubles from the block's bit generator, the same stream
``numpy.random.Generator.random`` consumes.
"""

import numpy as np

KIND_DETERMINISTIC = 0
KIND_STATIONARY = 1
KIND_MIXTURE = 2


def _pick(cum, limit, u):
    i = 0
    while i < limit - 1 and u >= cum[i]:
        i += 1
    return i


def run_block(bitgen, n_episodes, step_cap, kind,
              init_cum, absorbing, pair_offset, n_actions, trans_cum, rewards,
              det_actions, pol_cum, mix_cum, mix_actions,
              counts_sum, counts_sq, reward_sum, reward_sq, lengths, scratch):
    """Simulate ``n_episodes`` episodes, accumulating into the output arrays.

    Returns the number of truncated episodes. All output arrays are
    block-local and zero-initialized by the caller.
    """
    draw = np.random.Generator(bitgen).random
    n_states = len(init_cum)
    npairs, d = rewards.shape

    init_cum_l = init_cum.tolist()
    absorbing_l = absorbing.tolist()
    pair_offset_l = pair_offset.tolist()
    n_actions_l = n_actions.tolist()
    trans_cum_l = trans_cum.tolist()
    rewards_l = rewards.tolist()
    det_actions_l = det_actions.tolist()
    pol_cum_l = pol_cum.tolist()
    mix_cum_l = mix_cum.tolist()
    mix_actions_l = mix_actions.tolist()

    counts_sum_l = counts_sum.tolist()
    counts_sq_l = counts_sq.tolist()
    reward_sum_l = reward_sum.tolist()
    reward_sq_l = reward_sq.tolist()
    lengths_l = [0] * n_episodes
    counts = [0] * npairs

    truncated = 0
    n_mix = len(mix_cum_l)
    for ep in range(n_episodes):
        actions = det_actions_l
        if kind == KIND_MIXTURE:
            u = draw()
            actions = mix_actions_l[_pick(mix_cum_l, n_mix, u)]
        u = draw()
        state = _pick(init_cum_l, n_states, u)
        steps = 0
        while not absorbing_l[state] and steps < step_cap:
            if kind == KIND_STATIONARY:
                u = draw()
                ai = _pick(pol_cum_l[state], n_actions_l[state], u)
            else:
                ai = actions[state]
            pair = pair_offset_l[state] + ai
            counts[pair] += 1
            u = draw()
            state = _pick(trans_cum_l[pair], n_states, u)
            steps += 1
        if not absorbing_l[state]:
            truncated += 1
        lengths_l[ep] = steps
        for k in range(npairs):
            c = counts[k]
            if c:
                counts_sum_l[k] += c
                counts_sq_l[k] += c * c
        ep_reward = [0.0] * d
        for k in range(npairs):
            c = counts[k]
            if c:
                row = rewards_l[k]
                for j in range(d):
                    ep_reward[j] += c * row[j]
        for j in range(d):
            reward_sum_l[j] += ep_reward[j]
            reward_sq_l[j] += ep_reward[j] * ep_reward[j]
        for k in range(npairs):
            counts[k] = 0

    counts_sum[:] = counts_sum_l
    counts_sq[:] = counts_sq_l
    reward_sum[:] = reward_sum_l
    reward_sq[:] = reward_sq_l
    lengths[:] = lengths_l
    return truncated
