"""Probability that an item is ranked first among a presented menu.

For Mallows models this runs an O(m^3) dynamic program over the repeated
insertion of center items, producing the whole pick distribution over the
menu in a single pass; Plackett-Luce reduces to a softmax over the menu;
explicit models are summed directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError
from .models import ExplicitModel, MallowsModel, PlackettLuceModel


@dataclass(frozen=True)
class PickDistribution:
    """A probability distribution over picked items."""

    probs: dict[int, float]

    def __post_init__(self):
        if not self.probs:
            raise DomainError("pick distribution needs a nonempty support")
        if any(p < -1e-12 for p in self.probs.values()):
            raise DomainError("pick probabilities must be nonnegative")
        total = math.fsum(self.probs.values())
        if abs(total - 1.0) > 1e-9:
            raise DomainError(f"pick probabilities sum to {total!r}, expected 1")
        object.__setattr__(self, "probs", dict(self.probs))

    def __getitem__(self, item: int) -> float:
        return self.probs.get(item, 0.0)

    def support(self) -> frozenset[int]:
        return frozenset(x for x, p in self.probs.items() if p > 0)

    def items(self):
        return self.probs.items()

    def as_tuple(self, order) -> tuple[float, ...]:
        """Probabilities read out in a caller-chosen item order."""
        return tuple(self[x] for x in order)


def _validated_menu(m: int, items) -> frozenset[int]:
    menu = frozenset(int(x) for x in items)
    if not menu:
        raise DomainError("menu must be nonempty")
    if any(not 0 <= x < m for x in menu):
        raise DimensionError(f"menu {sorted(menu)} contains items outside 0..{m - 1}")
    return menu


def mallows_choice_dist(model: MallowsModel, items) -> PickDistribution:
    """Exact pick distribution over ``items`` under a Mallows ranking model.

    State W[a, s] tracks the probability that center item ``a`` is currently
    the menu's front-runner and sits at position ``s`` of the partial
    permutation. Inserting the t-th center item either shifts, preserves, or
    replaces the front-runner; a running flag ``q`` carries the no-menu-item-
    inserted-yet case, so no side enumeration over guesses is needed.
    """
    menu = _validated_menu(model.m, items)
    m = model.m
    if len(menu) == 1:
        return PickDistribution({next(iter(menu)): 1.0})
    center = model.center.order
    table = model.insertion_table()
    W = np.zeros((m, m + 1))
    q = 1.0
    for t in range(1, m + 1):
        p_row = table.prob(t)
        gamma = table.gamma(t)
        if center[t - 1] in menu:
            if t > 1:
                col = W[:, 1:t].sum(axis=0)
                tail = np.concatenate((np.cumsum(col[::-1])[::-1], [0.0]))
            else:
                tail = np.zeros(1)
            W[:, 1 : t + 1] *= 1.0 - gamma
            W[t - 1, 1 : t + 1] = p_row * (tail + q)
            q = 0.0
        else:
            gamma_prev = np.concatenate(([0.0], gamma[:-1]))
            W[:, 1 : t + 1] = (1.0 - gamma) * W[:, 1 : t + 1] + gamma_prev * W[:, 0:t]
    probs = {
        center[idx]: float(W[idx, 1:].sum())
        for idx in range(m)
        if center[idx] in menu
    }
    return PickDistribution(probs)


def choice_prob_mallows(model: MallowsModel, items, target: int) -> float:
    """P[``target`` precedes every other menu item in a sampled ranking]."""
    menu = _validated_menu(model.m, items)
    if target not in menu:
        raise DomainError(f"target {target} is not in the menu {sorted(menu)}")
    return mallows_choice_dist(model, menu)[target]


def pl_choice_dist(model: PlackettLuceModel, items) -> PickDistribution:
    """Pick distribution over ``items``: a softmax of values at temperature beta."""
    menu = sorted(_validated_menu(model.m, items))
    u = np.asarray([model.item_values[x] for x in menu]) / model.beta
    w = np.exp(u - np.max(u))
    w /= w.sum()
    return PickDistribution({x: float(p) for x, p in zip(menu, w)})


def choice_prob_pl(model: PlackettLuceModel, items, target: int) -> float:
    menu = _validated_menu(model.m, items)
    if target not in menu:
        raise DomainError(f"target {target} is not in the menu {sorted(menu)}")
    return pl_choice_dist(model, menu)[target]


def _explicit_choice_dist(model: ExplicitModel, items) -> PickDistribution:
    menu = _validated_menu(model.m, items)
    probs = {x: 0.0 for x in menu}
    for ranking, p in model.entries:
        first = min(menu, key=ranking.position)
        probs[first] += p
    return PickDistribution(probs)


def choice_dist(model, items) -> PickDistribution:
    """Pick distribution over a menu, dispatched on the model family."""
    if isinstance(model, MallowsModel):
        return mallows_choice_dist(model, items)
    if isinstance(model, PlackettLuceModel):
        return pl_choice_dist(model, items)
    if isinstance(model, ExplicitModel):
        return _explicit_choice_dist(model, items)
    raise DomainError(f"unsupported noise model {type(model).__name__}")


def choice_prob(model, items, target: int) -> float:
    menu = _validated_menu(model.m, items)
    if target not in menu:
        raise DomainError(f"target {target} is not in the menu {sorted(menu)}")
    return choice_dist(model, menu)[target]


def oracle_choice_dist(model, items, cap: int = 7) -> PickDistribution:
    """Enumeration-based pick distribution, for validating the closed routes."""
    menu = _validated_menu(model.m, items)
    probs = {x: 0.0 for x in menu}
    for ranking, p in model.support(cap=cap):
        first = min(menu, key=ranking.position)
        probs[first] += p
    return PickDistribution(probs)
