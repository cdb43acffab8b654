"""Welfare-maximizing menu selection.

By the noiselessness of the optimum, the search space is k-item menus rather
than full center rankings. Exactness comes from plain enumeration or a
branch-and-bound with an admissible per-type relaxation; the mixed-integer
program is built (and exportable in LP format) as the bridge to external
solvers for larger instances.
"""
from __future__ import annotations

import io
import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from .choice import choice_dist
from .collab import solo_utility
from .errors import CapacityError, DomainError
from .models import (
    MENU_ENUMERATION_CAP,
    MallowsModel,
    pairwise_matrix,
)
from .rankings import NOISELESS, AlgorithmPolicy, HumanType, Population, Ranking
from .welfare import UPLIFT_TOLERANCE, verify_uplift

BOUND_SLACK = 1e-12


def menu_policy(m: int, menu, k: int | None = None) -> AlgorithmPolicy:
    """The noiseless policy that always presents ``menu``."""
    menu = sorted(menu)
    rest = [x for x in range(m) if x not in menu]
    return AlgorithmPolicy(
        center=Ranking(tuple(menu + rest)),
        accuracy=NOISELESS,
        menu_size=k if k is not None else len(menu),
    )


def menu_utility(h: HumanType, menu) -> float:
    """Expected utility for one type when ``menu`` is always presented."""
    dist = choice_dist(h.noise, menu)
    return math.fsum(p * h.value_of(item) for item, p in dist.items())


def menu_utility_table(pop: Population, k: int, cap: int = MENU_ENUMERATION_CAP):
    """All k-menus (lexicographic) with per-type utilities, shape (menus, types)."""
    m = pop.m
    if math.comb(m, k) > cap:
        raise CapacityError(
            f"C({m},{k}) = {math.comb(m, k)} menus exceeds the exact-enumeration cap"
        )
    menus = list(itertools.combinations(range(m), k))
    table = np.empty((len(menus), pop.n))
    for row, menu in enumerate(menus):
        for col, h in enumerate(pop):
            table[row, col] = menu_utility(h, menu)
    return menus, table


@dataclass(frozen=True)
class OptimizeResult:
    menu: tuple[int, ...]
    welfare: float
    per_type: tuple[float, ...]
    method: str
    evaluations: int
    nodes: int | None = None

    def policy(self, m: int) -> AlgorithmPolicy:
        return menu_policy(m, self.menu)


def enumerate_best_menu(pop: Population, k: int, cap: int = MENU_ENUMERATION_CAP) -> OptimizeResult:
    """Exact argmax over all k-menus; ties go to the lexicographically smallest."""
    if not 1 <= k <= pop.m:
        raise DomainError(f"menu size {k} out of range for m={pop.m}")
    menus, table = menu_utility_table(pop, k, cap=cap)
    weights = np.asarray(pop.weights())
    welfare = table @ weights
    best = int(np.argmax(welfare))  # argmax returns the first (lex-smallest) maximizer
    return OptimizeResult(
        menu=menus[best],
        welfare=float(welfare[best]),
        per_type=tuple(float(u) for u in table[best]),
        method="enumeration",
        evaluations=len(menus),
    )


def branch_and_bound_menu(pop: Population, k: int) -> OptimizeResult:
    """Exact menu optimization by depth-first branch and bound.

    The node bound relaxes the problem per type: every type may complete the
    fixed partial menu with its own best remaining items, and each candidate's
    pick probability is over-estimated by its weakest pairwise comparison
    against the forced-in items only. Both relaxations over-promise, so the
    bound is admissible and the search exact.
    """
    m = pop.m
    if not 1 <= k <= m:
        raise DomainError(f"menu size {k} out of range for m={m}")
    weights = np.asarray(pop.weights())
    values = [np.asarray([h.value_of(x) for x in range(m)]) for h in pop]
    pairwise = [pairwise_matrix(h.noise) for h in pop]

    best_menu: tuple[int, ...] | None = None
    best_value = -math.inf
    best_per_type: tuple[float, ...] = ()
    nodes = 0
    evaluations = 0

    def evaluate(menu: tuple[int, ...]):
        nonlocal best_menu, best_value, best_per_type, evaluations
        evaluations += 1
        per_type = np.asarray([menu_utility(h, menu) for h in pop])
        value = float(per_type @ weights)
        if value > best_value:
            best_value = value
            best_menu = menu
            best_per_type = tuple(float(u) for u in per_type)

    def bound(fixed: tuple[int, ...], next_idx: int) -> float:
        slots = k - len(fixed)
        total = 0.0
        for w, v, pw in zip(weights, values, pairwise):
            fixed_part = 0.0
            for x in fixed:
                others = [f for f in fixed if f != x]
                cap = min((pw[x, f] for f in others), default=1.0)
                fixed_part += v[x] * cap
            caps = []
            for x in range(next_idx, m):
                cap = min((pw[x, f] for f in fixed), default=1.0)
                caps.append(v[x] * cap)
            caps.sort(reverse=True)
            total += w * (fixed_part + sum(caps[:slots]))
        return total

    def descend(fixed: tuple[int, ...], next_idx: int):
        nonlocal nodes
        nodes += 1
        if len(fixed) == k:
            evaluate(fixed)
            return
        remaining = m - next_idx
        if len(fixed) + remaining < k:
            return
        if len(fixed) + remaining == k:
            evaluate(fixed + tuple(range(next_idx, m)))
            return
        if bound(fixed, next_idx) <= best_value - BOUND_SLACK:
            return
        descend(fixed + (next_idx,), next_idx + 1)
        descend(fixed, next_idx + 1)

    descend((), 0)
    assert best_menu is not None
    return OptimizeResult(
        menu=best_menu,
        welfare=best_value,
        per_type=best_per_type,
        method="branch-and-bound",
        evaluations=evaluations,
        nodes=nodes,
    )


def optimize_with_uplift(pop: Population, k: int, cap: int = MENU_ENUMERATION_CAP) -> OptimizeResult | None:
    """Best menu among those whose noiseless policy uplifts every type.

    Returns None when no k-menu achieves uplift.
    """
    menus, table = menu_utility_table(pop, k, cap=cap)
    weights = np.asarray(pop.weights())
    solo = np.asarray([solo_utility(h) for h in pop])
    feasible = np.all(table > solo + UPLIFT_TOLERANCE, axis=1)
    if not feasible.any():
        return None
    welfare = np.where(feasible, table @ weights, -np.inf)
    best = int(np.argmax(welfare))
    return OptimizeResult(
        menu=menus[best],
        welfare=float(welfare[best]),
        per_type=tuple(float(u) for u in table[best]),
        method="enumeration+uplift",
        evaluations=len(menus),
    )


def noisy_uplift_search(pop: Population, center: Ranking, phi_grid, k: int, cap: int = MENU_ENUMERATION_CAP):
    """Evaluate uplift for every accuracy on a grid, keeping the best by min gain.

    ``phi_grid`` may mix floats and the NOISELESS sentinel. Returns
    ``(best_accuracy, best_report, all_reports)`` where ``all_reports`` is a
    list of ``(accuracy, WelfareReport)`` in grid order and "best" maximizes
    the minimum per-type utility gain.
    """
    phi_grid = list(phi_grid)
    if not phi_grid:
        raise DomainError("accuracy grid must be nonempty")
    if center.m != pop.m:
        raise DomainError("center and population must share the item universe")
    reports = []
    best_phi = None
    best_report = None
    for phi in phi_grid:
        policy = AlgorithmPolicy(center=center, accuracy=phi, menu_size=k)
        report = verify_uplift(pop, policy, cap=cap)
        reports.append((phi, report))
        if best_report is None or report.min_gain > best_report.min_gain:
            best_phi, best_report = phi, report
    return best_phi, best_report, reports


# ---------------------------------------------------------------------------
# Mixed-integer program


@dataclass(frozen=True, eq=False)
class MipInstance:
    """A welfare-maximization MIP over menu indicator variables.

    Binary ``x_<item>`` marks menu membership; per type ``h``, continuous
    variables ``type<h>_W_<item>_<s>_<t>`` carry the insertion dynamic
    program, with ``y``/``z``/``q`` as its linearization helpers. Constraints
    are (coefficients, sense, rhs) rows; the objective is maximized.
    """

    var_names: tuple[str, ...]
    bounds: dict[str, tuple[float, float]]
    binaries: tuple[str, ...]
    constraints: tuple[tuple[dict[str, float], str, float], ...]
    objective: dict[str, float]
    m: int
    k: int
    n_types: int

    @property
    def num_variables(self) -> int:
        return len(self.var_names)


def build_mip(pop: Population, k: int) -> MipInstance:
    """Assemble the welfare-maximization MIP for a Mallows population.

    One choice-probability constraint block per type, coupled through the
    shared menu indicators; the objective collects value-weighted terminal
    pick probabilities. Only builds the instance; solving is the caller's
    choice (see ``solve_mip`` / ``export_lp``).
    """
    m = pop.m
    if not 1 <= k <= m:
        raise DomainError(f"menu size {k} out of range for m={m}")
    for h in pop:
        if not isinstance(h.noise, MallowsModel):
            raise DomainError("the MIP requires every type's noise model to be Mallows")

    var_names: list[str] = [f"x_{i}" for i in range(m)]
    bounds: dict[str, tuple[float, float]] = {f"x_{i}": (0.0, 1.0) for i in range(m)}
    constraints: list[tuple[dict[str, float], str, float]] = []
    objective: dict[str, float] = {}

    def add_var(name: str):
        var_names.append(name)
        bounds[name] = (0.0, 1.0)

    for h_idx, h in enumerate(pop):
        model: MallowsModel = h.noise
        center = model.center.order
        table = model.insertion_table()
        prefix = f"type{h_idx}"

        def W(a: int, s: int, t: int) -> str:
            return f"{prefix}_W_{a}_{s}_{t}"

        def Y(a: int, s: int, t: int) -> str:
            return f"{prefix}_y_{a}_{s}_{t}"

        def Z(s: int, t: int) -> str:
            return f"{prefix}_z_{s}_{t}"

        def Q(t: int) -> str:
            return f"{prefix}_q_{t}"

        for t in range(1, m + 1):
            for s in range(1, t + 1):
                add_var(Z(s, t))
            for a in center[:t]:
                for s in range(1, t + 1):
                    add_var(W(a, s, t))
            for a in center[: t - 1]:
                for s in range(1, t + 1):
                    add_var(Y(a, s, t))
        for t in range(1, m):
            add_var(Q(t))

        for t in range(1, m + 1):
            item_t = center[t - 1]
            p_row = table.prob(t)
            gamma = table.gamma(t)

            for s in range(1, t + 1):
                # diagonal states are exactly the fresh-insertion mass
                constraints.append(
                    ({W(item_t, s, t): 1.0, Z(s, t): -1.0}, "=", 0.0)
                )
                # z <= p * (mass of earlier front-runners at positions >= s, + q)
                coeffs: dict[str, float] = {Z(s, t): 1.0}
                p_ts = float(p_row[s - 1])
                for a in center[: t - 1]:
                    for pos in range(s, t):
                        coeffs[W(a, pos, t - 1)] = -p_ts
                rhs = 0.0
                if t == 1:
                    rhs = p_ts  # q_0 is the constant 1
                else:
                    coeffs[Q(t - 1)] = -p_ts
                constraints.append((coeffs, "<=", rhs))
                # z <= p * x: no fresh mass unless the item is in the menu
                constraints.append(
                    ({Z(s, t): 1.0, f"x_{item_t}": -p_ts}, "<=", 0.0)
                )

            for a in center[: t - 1]:
                for s in range(1, t + 1):
                    coeffs = {W(a, s, t): 1.0, Y(a, s, t): -1.0}
                    if s <= t - 1:
                        coeffs[W(a, s, t - 1)] = -(1.0 - float(gamma[s - 1]))
                    constraints.append((coeffs, "=", 0.0))
                    if s == 1:
                        constraints.append(({Y(a, s, t): 1.0}, "<=", 0.0))
                    else:
                        constraints.append(
                            (
                                {
                                    Y(a, s, t): 1.0,
                                    W(a, s - 1, t - 1): -float(gamma[s - 2]),
                                },
                                "<=",
                                0.0,
                            )
                        )
                    # the shift branch only exists when the inserted item is
                    # outside the menu
                    constraints.append(
                        ({Y(a, s, t): 1.0, f"x_{item_t}": 1.0}, "<=", 1.0)
                    )

        for t in range(1, m):
            for i in range(1, t + 1):
                constraints.append(
                    ({Q(t): 1.0, f"x_{center[i - 1]}": 1.0}, "<=", 1.0)
                )
            coeffs = {Q(t): 1.0}
            for i in range(1, t + 1):
                coeffs[f"x_{center[i - 1]}"] = 1.0
            constraints.append((coeffs, ">=", 1.0))

        for a in range(m):
            value = h.value_of(a)
            if value == 0.0:
                continue
            for s in range(1, m + 1):
                objective[W(a, s, m)] = h.weight * value

    constraints.append(({f"x_{i}": 1.0 for i in range(m)}, "<=", float(k)))

    return MipInstance(
        var_names=tuple(var_names),
        bounds=bounds,
        binaries=tuple(f"x_{i}" for i in range(m)),
        constraints=tuple(constraints),
        objective=dict(objective),
        m=m,
        k=k,
        n_types=pop.n,
    )


def _format_coeff(value: float) -> str:
    return f"{value:.17g}"


def _format_terms(coeffs: dict[str, float], indent: str = "", wrap: int = 8) -> str:
    parts: list[str] = []
    for name, coef in coeffs.items():
        sign = "-" if coef < 0 else "+"
        parts.append(f"{sign} {_format_coeff(abs(coef))} {name}")
    if parts and parts[0].startswith("+ "):
        parts[0] = parts[0][2:]
    # keep lines short enough for strict LP readers
    lines = [
        " ".join(parts[i : i + wrap]) for i in range(0, len(parts), wrap)
    ]
    return ("\n" + indent).join(lines)


def export_lp(mip: MipInstance, destination) -> None:
    """Write the instance in LP format (objective, constraints, bounds, binaries)."""
    if hasattr(destination, "write"):
        _write_lp(mip, destination)
        return
    with open(destination, "w", encoding="utf-8") as handle:
        _write_lp(mip, handle)


def _write_lp(mip: MipInstance, out: io.TextIOBase) -> None:
    out.write(f"\\ welfare-maximizing menu: m={mip.m} k={mip.k} types={mip.n_types}\n")
    out.write("Maximize\n")
    terms = _format_terms(mip.objective, indent="      ")
    out.write(f" obj: {terms}\n")
    out.write("Subject To\n")
    for idx, (coeffs, sense, rhs) in enumerate(mip.constraints):
        body = _format_terms(coeffs, indent="      ")
        out.write(f" c{idx}: {body} {sense} {_format_coeff(rhs)}\n")
    out.write("Bounds\n")
    for name in mip.var_names:
        lb, ub = mip.bounds[name]
        out.write(f" {_format_coeff(lb)} <= {name} <= {_format_coeff(ub)}\n")
    out.write("Binary\n")
    for name in mip.binaries:
        out.write(f" {name}\n")
    out.write("End\n")


def solve_mip(mip: MipInstance, fix_menu=None, time_limit: float | None = None):
    """Solve the instance with SciPy's HiGHS backend.

    With ``fix_menu`` the binaries are pinned to that menu and the continuous
    relaxation is solved (an LP); otherwise the full MIP is solved. Returns
    ``(objective_value, menu)``.

    The dynamic-program states decay geometrically with position, so the
    coefficient range widens quickly in ``m``; the bundled backend handles
    the fixed-menu LP to m around 20 but its integer path degrades above
    m around 10. Past that, optimize internally (``branch_and_bound_menu``)
    or export the LP to a stronger solver.
    """
    from scipy import sparse
    from scipy.optimize import Bounds, LinearConstraint, milp

    index = {name: i for i, name in enumerate(mip.var_names)}
    n = len(mip.var_names)
    c = np.zeros(n)
    for name, coef in mip.objective.items():
        c[index[name]] = -coef

    rows, cols, vals = [], [], []
    lo, hi = [], []
    for r, (coeffs, sense, rhs) in enumerate(mip.constraints):
        for name, coef in coeffs.items():
            rows.append(r)
            cols.append(index[name])
            vals.append(coef)
        if sense == "<=":
            lo.append(-np.inf)
            hi.append(rhs)
        elif sense == ">=":
            lo.append(rhs)
            hi.append(np.inf)
        else:
            lo.append(rhs)
            hi.append(rhs)
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(len(mip.constraints), n))

    lb = np.array([mip.bounds[name][0] for name in mip.var_names])
    ub = np.array([mip.bounds[name][1] for name in mip.var_names])
    integrality = np.zeros(n)
    if fix_menu is None:
        for name in mip.binaries:
            integrality[index[name]] = 1
    else:
        menu = set(fix_menu)
        for i in range(mip.m):
            idx = index[f"x_{i}"]
            lb[idx] = ub[idx] = 1.0 if i in menu else 0.0

    options = {}
    if time_limit is not None:
        options["time_limit"] = time_limit
    result = milp(
        c,
        constraints=LinearConstraint(A, lo, hi),
        bounds=Bounds(lb, ub),
        integrality=integrality,
        options=options,
    )
    if result.status == 2:
        # presolve can misjudge the long equality chains as infeasible once
        # their coefficient range gets wide (large m); retry without it
        result = milp(
            c,
            constraints=LinearConstraint(A, lo, hi),
            bounds=Bounds(lb, ub),
            integrality=integrality,
            options={**options, "presolve": False},
        )
    if not result.success:
        raise RuntimeError(f"solver failed: {result.message}")
    x = result.x
    menu = tuple(
        i for i in range(mip.m) if x[index[f"x_{i}"]] > 0.5
    )
    return -result.fun, menu


def timed_solve(pop: Population, k: int, method: str = "bnb"):
    """Solve one instance and report (result value, menu, seconds, counters)."""
    start = time.perf_counter()
    if method == "bnb":
        res = branch_and_bound_menu(pop, k)
        elapsed = time.perf_counter() - start
        return res.welfare, res.menu, elapsed, {"nodes": res.nodes, "evaluations": res.evaluations}
    if method == "enum":
        res = enumerate_best_menu(pop, k)
        elapsed = time.perf_counter() - start
        return res.welfare, res.menu, elapsed, {"evaluations": res.evaluations}
    if method == "mip":
        mip = build_mip(pop, k)
        value, menu = solve_mip(mip)
        elapsed = time.perf_counter() - start
        return value, menu, elapsed, {"variables": mip.num_variables}
    raise DomainError(f"unknown method {method!r}")
