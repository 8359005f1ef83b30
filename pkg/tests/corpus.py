"""Shared test models: the M1 reference model, handcrafted small models,
and a seeded generator of random absorbing models and policies.

The random generator is absorbing by construction: states are ordered and
every transition row places at least 4/32 of its mass on strictly later
states or on the absorbing state, so from any state, under any policy,
each step advances the order with probability at least 1/8. A bounded
order can only advance finitely often, hence absorption from every state
with geometric tails.
"""

import random
from fractions import Fraction

from occlab.model import FiniteMdp, convert_mode
from occlab.occupancy import StationaryPolicy, occupancy_of_stationary


def m1(mode="exact"):
    model = FiniteMdp(
        states=("s", "t"),
        absorbing={"t"},
        actions={"s": ("a1", "a2"), "t": ("z",)},
        transition={
            "s": {"a1": {"t": Fraction(1)}, "a2": {"s": Fraction(1, 2), "t": Fraction(1, 2)}},
            "t": {"z": {"t": Fraction(1)}},
        },
        initial={"s": Fraction(1)},
        reward_dim=1,
        rewards={"s": {"a1": (Fraction(1),), "a2": (Fraction(0),)},
                 "t": {"z": (Fraction(0),)}},
        mode="exact",
    )
    return convert_mode(model, mode)


def m1_d2(mode="exact"):
    """Reward-dim-2 variant of m1: r(s,a1)=(1,0), r(s,a2)=(0,1)."""
    model = m1("exact")
    model = FiniteMdp(
        states=model.states,
        absorbing=model.absorbing,
        actions=model.actions,
        transition=model.transition,
        initial=model.initial,
        reward_dim=2,
        rewards={
            "s": {"a1": (Fraction(1), Fraction(0)), "a2": (Fraction(0), Fraction(1))},
            "t": {"z": (Fraction(0), Fraction(0))},
        },
        mode="exact",
    )
    return convert_mode(model, mode)


def two_state_two_action(mode="exact"):
    """Two nonabsorbing states, two actions each, all four selectors distinct."""
    F = Fraction
    model = FiniteMdp(
        states=("u", "w", "t"),
        absorbing={"t"},
        actions={"u": ("a", "b"), "w": ("a", "b"), "t": ("z",)},
        transition={
            "u": {"a": {"w": F(1, 2), "t": F(1, 2)}, "b": {"t": F(1)}},
            "w": {"a": {"t": F(1)}, "b": {"u": F(1, 4), "t": F(3, 4)}},
            "t": {"z": {"t": F(1)}},
        },
        initial={"u": F(1, 2), "w": F(1, 2)},
        reward_dim=1,
        rewards={
            "u": {"a": (F(1),), "b": (F(0),)},
            "w": {"a": (F(2),), "b": (F(-1),)},
            "t": {"z": (F(0),)},
        },
        mode="exact",
    )
    return convert_mode(model, mode)


def cycle_model(mode="exact"):
    """Two nonabsorbing states forced to cycle: not absorbing."""
    F = Fraction
    model = FiniteMdp(
        states=("u", "w", "t"),
        absorbing={"t"},
        actions={"u": ("go",), "w": ("go",), "t": ("z",)},
        transition={
            "u": {"go": {"w": F(1)}},
            "w": {"go": {"u": F(1)}},
            "t": {"z": {"t": F(1)}},
        },
        initial={"u": F(1)},
        reward_dim=1,
        rewards={"u": {"go": (F(0),)}, "w": {"go": (F(0),)}, "t": {"z": (F(0),)}},
        mode="exact",
    )
    return convert_mode(model, mode)


def self_loop_m1(prob=Fraction(1, 1), mode="exact"):
    """M1 with Q(s | s, a2) = prob (prob = 1 makes it non-absorbing)."""
    F = Fraction
    prob = Fraction(prob)
    model = m1("exact")
    row = {"s": prob} if prob == 1 else {"s": prob, "t": 1 - prob}
    model = FiniteMdp(
        states=model.states,
        absorbing=model.absorbing,
        actions=model.actions,
        transition={
            "s": {"a1": {"t": F(1)}, "a2": row},
            "t": {"z": {"t": F(1)}},
        },
        initial=model.initial,
        reward_dim=1,
        rewards=model.rewards,
        mode="exact",
    )
    return convert_mode(model, mode)


ATOMS = 32


def random_model(seed, max_live=5, max_actions=3, reward_dim=None, mode="exact"):
    """Seeded random absorbing model (at most max_live + 1 states)."""
    rng = random.Random(seed)
    n_live = rng.randint(1, max_live)
    live = [f"x{i}" for i in range(n_live)]
    states = tuple(live + ["omega"])
    actions = {}
    for x in live:
        k = rng.randint(1, max_actions)
        actions[x] = tuple(f"a{j}" for j in range(k))
    actions["omega"] = ("stay",)
    d = reward_dim if reward_dim is not None else rng.randint(1, 3)

    transition = {"omega": {"stay": {"omega": Fraction(1)}}}
    for i, x in enumerate(live):
        transition[x] = {}
        later = live[i + 1:] + ["omega"]
        for a in actions[x]:
            progress = rng.randint(4, ATOMS)
            counts = {}
            for _ in range(progress):
                y = rng.choice(later)
                counts[y] = counts.get(y, 0) + 1
            for _ in range(ATOMS - progress):
                y = rng.choice(states)
                counts[y] = counts.get(y, 0) + 1
            transition[x][a] = {y: Fraction(c, ATOMS) for y, c in counts.items()}

    rewards = {"omega": {"stay": tuple(Fraction(0) for _ in range(d))}}
    for x in live:
        rewards[x] = {
            a: tuple(Fraction(rng.randint(-8, 8), 8) for _ in range(d))
            for a in actions[x]
        }

    support = rng.sample(live, rng.randint(1, n_live))
    weights = [rng.randint(1, 8) for _ in support]
    total = sum(weights)
    initial = {x: Fraction(w, total) for x, w in zip(support, weights)}

    model = FiniteMdp(
        states=states,
        absorbing={"omega"},
        actions=actions,
        transition=transition,
        initial=initial,
        reward_dim=d,
        rewards=rewards,
        mode="exact",
    )
    return convert_mode(model, mode)


def random_stationary(model, seed, denom=16):
    """Seeded random fully supported stationary policy."""
    rng = random.Random(seed)
    rows = {}
    for x in model.states:
        acts = model.actions[x]
        weights = [rng.randint(1, denom) for _ in acts]
        total = sum(weights)
        if model.mode == "exact":
            rows[x] = {a: Fraction(w, total) for a, w in zip(acts, weights)}
        else:
            rows[x] = {a: w / total for a, w in zip(acts, weights)}
    return StationaryPolicy(rows)


def random_measure(model, seed):
    return occupancy_of_stationary(model, random_stationary(model, seed))
