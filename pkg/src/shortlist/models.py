"""Exact probabilities and sampling for noisy ranking distributions.

Three model families share a small duck-typed surface (``m``, ``perm_prob``,
``support``): a Mallows model with closed forms for the events the rest of
the library needs, a Plackett-Luce model driven by per-item values with
Gumbel noise, and an explicit finite distribution over rankings. A
brute-force enumeration oracle sits alongside them so every closed form can
be cross-checked at desk scale.

Two different normalizers both get called "Z" in the Mallows literature; here
``row_z(j)`` is the single-row sum ``1 + e^{-phi} + ... + e^{-phi (j-1)}`` and
``perm_z`` is the full product ``row_z(1) * ... * row_z(m)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import CapacityError, DimensionError, DomainError
from .rankings import AlgorithmPolicy, Ranking, kendall_tau

ENUMERATION_CAP = 7
MENU_ENUMERATION_CAP = 10**6


def row_z(j: int, phi: float) -> float:
    """Single-row Mallows normalizer ``sum_{t=0}^{j-1} exp(-phi t)``."""
    if phi == 0.0:
        return float(j)
    return math.expm1(-phi * j) / math.expm1(-phi)


@lru_cache(maxsize=256)
def _row_z_values(m: int, phi: float) -> tuple[float, ...]:
    return tuple(row_z(j, phi) for j in range(1, m + 1))


@lru_cache(maxsize=256)
def _insertion_rows(m: int, phi: float) -> tuple[tuple[np.ndarray, ...], tuple[np.ndarray, ...]]:
    probs = []
    gammas = []
    for t in range(1, m + 1):
        row = np.exp(-phi * (t - np.arange(1, t + 1, dtype=float)))
        row /= row_z(t, phi)
        row.setflags(write=False)
        gamma = np.cumsum(row)
        gamma.setflags(write=False)
        probs.append(row)
        gammas.append(gamma)
    return tuple(probs), tuple(gammas)


@dataclass(frozen=True, eq=False)
class InsertionTable:
    """Per-step insertion probabilities of the repeated-insertion sampler.

    ``prob(t)[s-1]`` is the chance of placing the t-th center item at
    position ``s`` among the ``t`` slots (``p_{t,s} = e^{-phi (t-s)} / row_z(t)``);
    ``gamma(t)[s-1]`` is the cumulative ``sum_{l<=s} p_{t,l}``.
    """

    m: int
    phi: float
    probs: tuple[np.ndarray, ...] = field(init=False, repr=False)
    gammas: tuple[np.ndarray, ...] = field(init=False, repr=False)

    def __post_init__(self):
        probs, gammas = _insertion_rows(self.m, self.phi)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "gammas", gammas)

    def prob(self, t: int) -> np.ndarray:
        return self.probs[t - 1]

    def gamma(self, t: int) -> np.ndarray:
        return self.gammas[t - 1]


@dataclass(frozen=True)
class MallowsModel:
    """Distribution over rankings with P[r] proportional to exp(-phi * d(center, r)).

    ``phi = 0`` is accepted and means the uniform distribution (the limits of
    all closed forms are used where the textbook expressions are singular).
    """

    center: Ranking
    phi: float

    def __post_init__(self):
        if self.phi < 0:
            raise DomainError("accuracy parameter phi must be nonnegative")
        object.__setattr__(self, "phi", float(self.phi))

    @property
    def m(self) -> int:
        return self.center.m

    def log_perm_prob(self, r: Ranking) -> float:
        if r.m != self.m:
            raise DimensionError(f"ranking over {r.m} items, model over {self.m}")
        log_perm_z = sum(math.log(z) for z in _row_z_values(self.m, self.phi))
        return -self.phi * kendall_tau(self.center, r) - log_perm_z

    def perm_prob(self, r: Ranking) -> float:
        """Probability of sampling exactly the ranking ``r``."""
        return math.exp(self.log_perm_prob(r))

    def first_item_prob(self, item: int) -> float:
        """Probability that ``item`` comes first in a sampled ranking."""
        pos = self.center.position(item)
        return math.exp(-self.phi * pos) / row_z(self.m, self.phi)

    def pairwise_prob(self, i: int, j: int) -> float:
        """P[i before j] for ``i`` strictly ahead of ``j`` in the center.

        Uses the two-term closed form in the position gap; evaluated via
        ``expm1`` so sweeps with small ``phi`` stay accurate.
        """
        if i == j:
            raise DomainError("pairwise comparison needs two distinct items")
        pi, pj = self.center.position(i), self.center.position(j)
        if pi > pj:
            raise DomainError(
                "pairwise_prob expects the center-better item first; "
                f"item {i} is behind item {j} in the center"
            )
        if self.phi == 0.0:
            return 0.5
        g = pj - pi + 1
        u1, u2 = self.phi * (g - 1), self.phi * g
        if u2 < 1e-3:
            # difference of the two closed-form terms cancels catastrophically
            # here; use the expansion of u/(1-e^-u) instead
            return 0.5 + (u1 + u2) / 12.0 - (u1 + u2) * (u1 * u1 + u2 * u2) / 720.0

        def term(u: float) -> float:
            return u / -math.expm1(-u)

        return (term(u2) - term(u1)) / self.phi

    def log_topk_set_prob(self, items) -> float:
        items = frozenset(items)
        if not items:
            raise DomainError("top-k set must be nonempty")
        k = len(items)
        positions = [self.center.position(x) + 1 for x in items]
        zs = _row_z_values(self.m, self.phi)
        log_p = -self.phi * (sum(positions) - k * (k + 1) // 2)
        for i in range(1, k + 1):
            log_p += math.log(zs[i - 1]) - math.log(zs[self.m - i])
        return log_p

    def topk_set_prob(self, items) -> float:
        """Probability that ``items`` is exactly the unordered top-|items| set."""
        return math.exp(self.log_topk_set_prob(items))

    def insertion_table(self) -> InsertionTable:
        return InsertionTable(self.m, self.phi)

    def sample(self, rng: np.random.Generator) -> Ranking:
        """Draw one ranking by repeated insertion of the center items."""
        table = self.insertion_table()
        order: list[int] = []
        for t in range(1, self.m + 1):
            s = rng.choice(t, p=table.prob(t)) + 1
            order.insert(s - 1, self.center.order[t - 1])
        return Ranking(tuple(order))

    def support(self, cap: int = ENUMERATION_CAP):
        if self.m > cap:
            raise CapacityError(f"enumeration over {self.m}! rankings exceeds cap {cap}")
        for perm in itertools.permutations(range(self.m)):
            r = Ranking(perm)
            yield r, self.perm_prob(r)


def _sorted_by_value(values: tuple[float, ...]) -> Ranking:
    order = sorted(range(len(values)), key=lambda x: (-values[x], x))
    return Ranking(tuple(order))


@dataclass(frozen=True)
class PlackettLuceModel:
    """Ranking distribution from sorting item values perturbed by Gumbel(0, beta).

    ``item_values[x]`` is the deterministic score of item ``x`` (any reals);
    the induced center sorts values descending, ties broken by item index.
    """

    item_values: tuple[float, ...]
    beta: float
    center: Ranking = field(init=False, compare=False)

    def __post_init__(self):
        values = tuple(float(v) for v in self.item_values)
        if len(values) < 1:
            raise DomainError("need at least one item value")
        if self.beta <= 0:
            raise DomainError("noise scale beta must be positive")
        object.__setattr__(self, "item_values", values)
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "center", _sorted_by_value(values))

    @property
    def m(self) -> int:
        return len(self.item_values)

    def _scaled(self) -> np.ndarray:
        return np.asarray(self.item_values, dtype=float) / self.beta

    def log_perm_prob(self, r: Ranking) -> float:
        if r.m != self.m:
            raise DimensionError(f"ranking over {r.m} items, model over {self.m}")
        u = self._scaled()[list(r.order)]
        total = 0.0
        for j in range(self.m):
            tail = u[j:]
            total += u[j] - _logsumexp(tail)
        return total

    def perm_prob(self, r: Ranking) -> float:
        """Sequential-choice probability of the exact ranking ``r``."""
        return math.exp(self.log_perm_prob(r))

    def first_item_prob(self, item: int) -> float:
        u = self._scaled()
        return float(np.exp(u[item] - _logsumexp(u)))

    def pairwise_prob(self, i: int, j: int) -> float:
        """P[i before j]; the Gumbel race makes this a logistic in the value gap."""
        if i == j:
            raise DomainError("pairwise comparison needs two distinct items")
        gap = (self.item_values[i] - self.item_values[j]) / self.beta
        return 1.0 / (1.0 + math.exp(-gap))

    def topk_set_prob(self, items) -> float:
        """P[``items`` is the top-|items| set], summed over its orderings."""
        items = tuple(frozenset(items))
        u = self._scaled()
        prob = 0.0
        for perm in itertools.permutations(items):
            remaining = set(range(self.m))
            log_p = 0.0
            for x in perm:
                log_p += u[x] - _logsumexp(u[sorted(remaining)])
                remaining.remove(x)
            prob += math.exp(log_p)
        return prob

    def sample(self, rng: np.random.Generator) -> Ranking:
        noisy = np.asarray(self.item_values) + rng.gumbel(0.0, self.beta, size=self.m)
        order = np.argsort(-noisy, kind="stable")
        return Ranking(tuple(int(x) for x in order))

    def support(self, cap: int = ENUMERATION_CAP):
        if self.m > cap:
            raise CapacityError(f"enumeration over {self.m}! rankings exceeds cap {cap}")
        for perm in itertools.permutations(range(self.m)):
            r = Ranking(perm)
            yield r, self.perm_prob(r)


def _logsumexp(u: np.ndarray) -> float:
    hi = float(np.max(u))
    return hi + math.log(float(np.sum(np.exp(u - hi))))


@dataclass(frozen=True)
class ExplicitModel:
    """A finite distribution over rankings given by an explicit support list."""

    entries: tuple[tuple[Ranking, float], ...]

    def __post_init__(self):
        entries = tuple((r, float(p)) for r, p in self.entries)
        if not entries:
            raise DomainError("explicit model needs a nonempty support")
        m = entries[0][0].m
        if any(r.m != m for r, _ in entries):
            raise DimensionError("support rankings must share the same item count")
        if any(p <= 0 for _, p in entries):
            raise DomainError("support probabilities must be positive")
        total = sum(p for _, p in entries)
        if abs(total - 1.0) > 1e-12:
            raise DomainError(f"support probabilities sum to {total!r}, expected 1")
        if len({r.order for r, _ in entries}) != len(entries):
            raise DomainError("support rankings must be distinct")
        object.__setattr__(self, "entries", entries)

    @property
    def m(self) -> int:
        return self.entries[0][0].m

    def perm_prob(self, r: Ranking) -> float:
        if r.m != self.m:
            raise DimensionError(f"ranking over {r.m} items, model over {self.m}")
        for ranking, p in self.entries:
            if ranking == r:
                return p
        return 0.0

    def topk_set_prob(self, items) -> float:
        items = frozenset(items)
        k = len(items)
        return math.fsum(p for r, p in self.entries if r.top(k) == items)

    def sample(self, rng: np.random.Generator) -> Ranking:
        idx = rng.choice(len(self.entries), p=[p for _, p in self.entries])
        return self.entries[idx][0]

    def support(self, cap: int = ENUMERATION_CAP):
        yield from self.entries


NoiseModel = MallowsModel | PlackettLuceModel | ExplicitModel


def enumerate_event_prob(model, predicate, cap: int = ENUMERATION_CAP) -> float:
    """Exact probability of ``predicate(ranking)`` by summing over the support.

    The universal brute-force oracle: valid for any model kind, but full
    permutation enumeration is refused above ``cap`` items.
    """
    return math.fsum(p for r, p in model.support(cap=cap) if predicate(r))


def oriented_pairwise_prob(model, i: int, j: int) -> float:
    """P[i before j] for any model and either orientation of the pair."""
    if isinstance(model, MallowsModel):
        if model.center.position(i) < model.center.position(j):
            return model.pairwise_prob(i, j)
        return 1.0 - model.pairwise_prob(j, i)
    if isinstance(model, PlackettLuceModel):
        return model.pairwise_prob(i, j)
    if isinstance(model, ExplicitModel):
        return math.fsum(
            p for r, p in model.entries if r.position(i) < r.position(j)
        )
    raise DomainError(f"unsupported noise model {type(model).__name__}")


def pairwise_matrix(model) -> np.ndarray:
    """Matrix P with P[i, j] = P[i before j] (diagonal zero)."""
    m = model.m
    out = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            p = oriented_pairwise_prob(model, i, j)
            out[i, j] = p
            out[j, i] = 1.0 - p
    return out


def policy_ranking_model(policy: AlgorithmPolicy) -> MallowsModel | None:
    """The noisy ranking model behind a policy, or None when noiseless."""
    if policy.is_noiseless:
        return None
    return MallowsModel(policy.center, policy.accuracy)


def sample_policy_menu(policy: AlgorithmPolicy, rng: np.random.Generator) -> frozenset[int]:
    if policy.is_noiseless:
        return policy.fixed_menu()
    model = MallowsModel(policy.center, policy.accuracy)
    return model.sample(rng).top(policy.menu_size)


def model_menu_distribution(model, k: int, cap: int = MENU_ENUMERATION_CAP) -> dict[frozenset[int], float]:
    """Distribution of the top-``k`` set of a sampled ranking, over all k-subsets."""
    m = model.m
    if not 1 <= k <= m:
        raise DomainError(f"menu size {k} out of range for m={m}")
    if math.comb(m, k) > cap:
        raise CapacityError(
            f"C({m},{k}) = {math.comb(m, k)} menus exceeds the exact-enumeration cap"
        )
    if isinstance(model, ExplicitModel):
        dist: dict[frozenset[int], float] = {}
        for r, p in model.entries:
            menu = r.top(k)
            dist[menu] = dist.get(menu, 0.0) + p
        return dist
    return {
        frozenset(s): model.topk_set_prob(s)
        for s in itertools.combinations(range(m), k)
    }


def menu_distribution(policy: AlgorithmPolicy, cap: int = MENU_ENUMERATION_CAP) -> dict[frozenset[int], float]:
    """Exact distribution over the menus a policy presents."""
    if policy.is_noiseless:
        return {policy.fixed_menu(): 1.0}
    model = MallowsModel(policy.center, policy.accuracy)
    return model_menu_distribution(model, policy.menu_size, cap=cap)
