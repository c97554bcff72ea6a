"""Backlund transformations as birational maps with affine parameter actions.

Word convention: in a product such as ``s1 s2 s1 s0`` the leftmost generator
acts first on states (and its parameter action is applied first).  This is
the convention that reproduces the translation actions (-2, 1, 0), (0, -1, 1)
and (-2, 2) on the parameter lattice exactly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Optional, Sequence

from . import exprtext
from .catalog import HamiltonianSystem, build_system
from .flows import hamiltonian_vector_field
from .symkernel import (DYNAMICAL, PARAMETER, Polynomial, RationalExpr,
                        Scalar, SymbolError, TIME, VarTable,
                        ZeroDenominatorError, is_identically_equal,
                        random_rational, reduce_parameters, substitute)


class ExceedsMax:
    """Sentinel: no relation order found up to the requested bound."""

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return "ExceedsMax"


EXCEEDS_MAX = ExceedsMax()


@dataclass(frozen=True)
class ParameterAction:
    """Affine action alpha -> matrix @ alpha + offset on the parameter vector."""

    params: tuple[str, ...]
    matrix: tuple[tuple[int, ...], ...]
    offset: tuple[Fraction, ...]

    @staticmethod
    def identity(params: Sequence[str]) -> "ParameterAction":
        n = len(params)
        return ParameterAction(tuple(params),
                               tuple(tuple(1 if i == j else 0 for j in range(n))
                                     for i in range(n)),
                               (Fraction(0),) * n)

    @staticmethod
    def from_rows(params: Sequence[str],
                  rows: Mapping[str, Mapping[str, int]]) -> "ParameterAction":
        params = tuple(params)
        matrix = tuple(tuple(rows.get(p, {}).get(q, 1 if p == q else 0)
                             for q in params) for p in params)
        return ParameterAction(params, matrix, (Fraction(0),) * len(params))

    def rules(self, table: VarTable) -> dict[str, Polynomial]:
        """The action as substitution rules alpha_i -> affine polynomial."""
        out: dict[str, Polynomial] = {}
        for i, p in enumerate(self.params):
            expr = Polynomial.const(table, self.offset[i])
            for j, q in enumerate(self.params):
                if self.matrix[i][j]:
                    expr = expr + self.matrix[i][j] * Polynomial.variable(table, q)
            out[p] = expr
        return out

    def apply_values(self, values: Mapping[str, Scalar]) -> dict[str, Fraction]:
        vec = [Fraction(values[p]) for p in self.params]
        out = {}
        for i, p in enumerate(self.params):
            out[p] = sum((self.matrix[i][j] * vec[j] for j in range(len(vec))),
                         self.offset[i])
        return out

    def after(self, first: "ParameterAction") -> "ParameterAction":
        """Composite action: ``first`` applied, then self."""
        if self.params != first.params:
            raise SymbolError("parameter actions over different parameter lists")
        n = len(self.params)
        matrix = tuple(tuple(sum(self.matrix[i][k] * first.matrix[k][j]
                                 for k in range(n)) for j in range(n))
                       for i in range(n))
        offset = tuple(sum((self.matrix[i][k] * first.offset[k] for k in range(n)),
                           self.offset[i]) for i in range(n))
        return ParameterAction(self.params, matrix, offset)

    def is_identity(self) -> bool:
        return self == ParameterAction.identity(self.params)

    def power(self, n: int) -> "ParameterAction":
        acc = ParameterAction.identity(self.params)
        for _ in range(n):
            acc = self.after(acc)
        return acc


@dataclass(frozen=True)
class BirationalMap:
    """Per-variable rational substitution plus an affine parameter action.

    ``rules`` lists only the dynamical symbols the map moves; absent
    dynamical symbols and all time symbols map to themselves.  Composite
    maps keep their factor maps in ``steps`` (application order) and
    materialize variable rules lazily: the exact point action and the
    parameter action never need the expanded rules, which can be large.
    """

    system_id: str
    name: str
    table: VarTable
    rules: tuple[tuple[str, RationalExpr], ...]
    action: ParameterAction
    steps: tuple["BirationalMap", ...] = ()
    inverse_name: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "_rule_cache", {})

    @property
    def is_composite(self) -> bool:
        return bool(self.steps)

    def rule(self, name: str) -> RationalExpr:
        self.table.index(name)
        if not self.steps:
            for n, r in self.rules:
                if n == name:
                    return r
            return RationalExpr.variable(self.table, name)
        cache = self._rule_cache  # type: ignore[attr-defined]
        if name not in cache:
            expr = RationalExpr.variable(self.table, name)
            for step in reversed(self.steps):
                expr = apply_map(step, expr)
            cache[name] = expr
        return cache[name]

    def full_rules(self) -> dict[str, RationalExpr]:
        """Substitution rules for every dynamical and parameter symbol."""
        out = {name: self.rule(name) for name in self.table.symbols(DYNAMICAL)}
        for name, poly in self.action.rules(self.table).items():
            out[name] = RationalExpr.from_polynomial(poly)
        return out

    def atomic_steps(self) -> tuple["BirationalMap", ...]:
        return self.steps if self.steps else (self,)


def apply_map(m: BirationalMap, f: RationalExpr | Polynomial) -> RationalExpr:
    """Transform an expression: variable rules plus the parameter action."""
    if m.is_composite:
        out = f if isinstance(f, RationalExpr) else RationalExpr.from_polynomial(f)
        for step in reversed(m.atomic_steps()):
            out = apply_map(step, out)
        return out
    return substitute(f, m.full_rules())


def apply_to_state(m: BirationalMap, state: Mapping[str, Scalar],
                   params: Mapping[str, Scalar]) -> tuple[dict[str, Fraction],
                                                          dict[str, Fraction]]:
    """Exact action on a rational point; raises ZeroDenominatorError on poles."""
    point = {k: Fraction(v) for k, v in state.items()}
    values = {k: Fraction(v) for k, v in params.items()}
    for step in m.atomic_steps():
        point.update(values)
        new_point = {}
        for name in step.table.symbols(DYNAMICAL):
            new_point[name] = step.rule(name).evaluate(point)
        for name in step.table.symbols(TIME):
            if name in point:
                new_point[name] = point[name]
        point = new_point
        values = step.action.apply_values(values)
    return point, values


def compose(m1: BirationalMap, m2: BirationalMap) -> BirationalMap:
    """The map acting as m2 first, then m1 (rules of m2 substituted into m1's).

    Parameter actions compose eagerly; the composite variable rules are the
    substitution of m2's rules into m1's, materialized on first access.
    """
    if m1.system_id != m2.system_id:
        raise SymbolError("cannot compose maps of different systems")
    return BirationalMap(
        system_id=m1.system_id,
        name=f"{m1.name}*{m2.name}",
        table=m1.table,
        rules=(),
        action=m1.action.after(m2.action),
        steps=m2.atomic_steps() + m1.atomic_steps(),
    )


def word_map(system_id: str, word: Sequence[str]) -> BirationalMap:
    """Map for a word over registered map names; leftmost applied first."""
    maps = named_maps(system_id)
    try:
        steps = [maps[w] for w in word]
    except KeyError as exc:
        raise SymbolError(f"unknown generator {exc.args[0]!r} for {system_id}")
    if not steps:
        sys = build_system(system_id)
        return BirationalMap(system_id, "id", sys.table, (),
                             ParameterAction.identity(sys.table.symbols(PARAMETER)))
    acc = steps[0]
    for step in steps[1:]:
        acc = compose(step, acc)
    return acc


def _generator(system_id: str, name: str, table: VarTable,
               rules: Mapping[str, str],
               action_rows: Mapping[str, Mapping[str, int]]) -> BirationalMap:
    parsed = tuple((v, exprtext.parse(text, table)) for v, text in rules.items())
    action = ParameterAction.from_rows(table.symbols(PARAMETER), action_rows)
    return BirationalMap(system_id, name, table, parsed, action, inverse_name=name)


@lru_cache(maxsize=None)
def generators(system_id: str) -> dict[str, BirationalMap]:
    sys = build_system(system_id)
    t = sys.table
    if system_id == "A4_2":
        return {
            "s0": _generator(system_id, "s0", t,
                             {"z": "z + a0/w"},
                             {"a0": {"a0": -1}, "a1": {"a1": 1, "a0": 1}}),
            "s1": _generator(system_id, "s1", t,
                             {"y": "y - a1/(x + z^2)",
                              "w": "w - 2*a1*z/(x + z^2)"},
                             {"a0": {"a0": 1, "a1": 2}, "a1": {"a1": -1},
                              "a2": {"a2": 1, "a1": 1}}),
            "s2": _generator(system_id, "s2", t,
                             {"x": "x + 2*a2*y/(x + y^2 + w + t)"
                                   " - a2^2/(x + y^2 + w + t)^2",
                              "y": "y - a2/(x + y^2 + w + t)",
                              "z": "z + a2/(x + y^2 + w + t)"},
                             {"a1": {"a1": 1, "a2": 2}, "a2": {"a2": -1}}),
        }
    if system_id == "A1_1":
        return {
            "s0": _generator(system_id, "s0", t,
                             {"y": "y - a0/(x + z^2)",
                              "w": "w - 2*a0*z/(x + z^2)"},
                             {"a0": {"a0": -1}, "a1": {"a1": 1, "a0": 2}}),
            "s1": _generator(system_id, "s1", t,
                             {"x": "x + 2*a1*y/(x + y^2 + w^2 + t)"
                                   " - a1^2/(x + y^2 + w^2 + t)^2",
                              "y": "y - a1/(x + y^2 + w^2 + t)",
                              "z": "z + 2*a1*w/(x + y^2 + w^2 + t)"},
                             {"a0": {"a0": 1, "a1": 2}, "a1": {"a1": -1}}),
        }
    if system_id == "PDE_A1_1":
        return {
            "s0": _generator(system_id, "s0", t,
                             {"p1": "p1 - a0/(q1 + q2^2)",
                              "p2": "p2 - 2*a0*q2/(q1 + q2^2)"},
                             {"a0": {"a0": -1}, "a1": {"a1": 1, "a0": 2}}),
            "s1": _generator(system_id, "s1", t,
                             {"q1": "q1 + 2*a1*p1/(q1 + p1^2 + p2^2)"
                                    " - a1^2/(q1 + p1^2 + p2^2)^2",
                              "p1": "p1 - a1/(q1 + p1^2 + p2^2)",
                              "q2": "q2 + 2*a1*p2/(q1 + p1^2 + p2^2)"},
                             {"a0": {"a0": 1, "a1": 2}, "a1": {"a1": -1}}),
        }
    raise SymbolError(f"unknown system id {system_id!r}")


_TRANSLATION_WORDS = {
    "A4_2": {"T1": ("s1", "s2", "s1", "s0"), "T2": ("s1", "T1", "s1")},
    "A1_1": {"T": ("s1", "s0")},
    "PDE_A1_1": {},
}


@lru_cache(maxsize=None)
def named_maps(system_id: str) -> dict[str, BirationalMap]:
    """Generators plus the named translation operators."""
    maps = dict(generators(system_id))
    for name, word in _TRANSLATION_WORDS[system_id].items():
        steps = [maps[w] for w in word]
        acc = steps[0]
        for step in steps[1:]:
            acc = compose(step, acc)
        maps[name] = BirationalMap(acc.system_id, name, acc.table, (),
                                   acc.action, steps=acc.atomic_steps())
    return maps


def serialize_map(m: BirationalMap) -> dict:
    """JSON-ready map description with rules in canonical text syntax."""
    return {
        "system": m.system_id,
        "name": m.name,
        "rules": {name: exprtext.expr_text(m.rule(name))
                  for name in m.table.symbols(DYNAMICAL)},
        "parameter_action": {
            "parameters": list(m.action.params),
            "matrix": [list(row) for row in m.action.matrix],
            "offset": [str(v) for v in m.action.offset],
        },
    }


def translation_offset(m: BirationalMap,
                       sys: Optional[HamiltonianSystem] = None
                       ) -> Optional[tuple[Fraction, ...]]:
    """The constant alpha-shift of m on the relation hyperplane, if any."""
    sys = sys or build_system(m.system_id)
    table = sys.table
    rules = m.action.rules(table)
    offsets = []
    for p in m.action.params:
        delta = rules[p] - Polynomial.variable(table, p)
        red = reduce_parameters(delta, sys.relation)
        if not red.is_polynomial():
            return None
        poly = red.as_polynomial()
        if not poly.is_constant():
            return None
        offsets.append(poly.constant_value())
    return tuple(offsets)


def preserves_relation(m: BirationalMap,
                       sys: Optional[HamiltonianSystem] = None) -> bool:
    """Does the parameter action map the relation hyperplane to itself?"""
    sys = sys or build_system(m.system_id)
    table = sys.table
    residual = sys.relation.residual(table)
    image = substitute(residual, m.action.rules(table))
    red = reduce_parameters(image, sys.relation)
    return red.is_zero()


# ---------------------------------------------------------------------------
# symmetry verification


@dataclass(frozen=True)
class SymmetryCheck:
    time_symbol: str
    variable: str
    passed: bool


@dataclass(frozen=True)
class SymmetryReport:
    system_id: str
    map_name: str
    checks: tuple[SymmetryCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "system": self.system_id,
            "map": self.map_name,
            "passed": self.passed,
            "checks": [{"time": c.time_symbol, "variable": c.variable,
                        "passed": c.passed} for c in self.checks],
        }


def verify_symmetry(sys: HamiltonianSystem, m: BirationalMap) -> SymmetryReport:
    """Check that m sends solutions to solutions with shifted parameters.

    For each time symbol and each dynamical symbol v the chain-rule identity

        sum_u  d(m(v))/du * udot  +  d(m(v))/dt   =   X_v(m(state), action(alpha))

    must hold as a rational-function identity modulo the parameter relation,
    where X is the Hamiltonian vector field for that time.
    """
    checks = []
    dyn = sys.table.symbols(DYNAMICAL)
    for time_symbol in sys.times:
        field = hamiltonian_vector_field(sys, time_symbol)
        for v in dyn:
            rule_v = m.rule(v)
            lhs = rule_v.derivative(time_symbol)
            for u in dyn:
                lhs = lhs + rule_v.derivative(u) * field.component(u)
            rhs = apply_map(m, field.component(v))
            ok = is_identically_equal(reduce_parameters(lhs, sys.relation),
                                      reduce_parameters(rhs, sys.relation))
            checks.append(SymmetryCheck(time_symbol, v, ok))
    return SymmetryReport(sys.id, m.name, tuple(checks))


def is_involution(m: BirationalMap, *, symbolic: bool = True) -> bool:
    """m composed with itself is the identity on variables and parameters."""
    square = compose(m, m)
    if not square.action.is_identity():
        return False
    mode = "symbolic" if symbolic else "sampled"
    for name in square.table.symbols(DYNAMICAL):
        if not is_identically_equal(square.rule(name),
                                    RationalExpr.variable(square.table, name),
                                    mode):
            return False
    return True


def relation_order(system_id: str, i: int, j: int, max_n: int, *,
                   seed: int = 0, samples: int = 4):
    """Smallest n <= max_n with (s_i s_j)^n = id, else EXCEEDS_MAX.

    Parameters are checked exactly through the affine action (restricted to
    the relation hyperplane); variables are checked at ``samples``
    deterministic rational points, re-drawn when an iteration hits a pole.
    """
    sys = build_system(system_id)
    gens = generators(system_id)
    si = gens[f"s{i}"]
    sj = gens[f"s{j}"]
    pair_action = sj.action.after(si.action)

    def action_power_is_identity(n: int) -> bool:
        acc = pair_action.power(n)
        probe = BirationalMap(system_id, "probe", sys.table, (), acc)
        off = translation_offset(probe, sys)
        return off is not None and all(v == 0 for v in off)

    rng = random.Random(seed)
    dyn = sys.table.symbols(DYNAMICAL)
    times = sys.table.symbols(TIME)
    params = sys.table.symbols(PARAMETER)

    def random_start():
        state = {name: random_rational(rng, 50) for name in dyn}
        for name in times:
            state[name] = random_rational(rng, 50)
        vals = {name: random_rational(rng, 50) for name in params[:-1]}
        name, expr = sys.relation.solve_for(sys.table, params[-1])
        vals[name] = expr.evaluate(vals)
        return state, vals

    orbits = []
    attempts = 0
    while len(orbits) < samples:
        attempts += 1
        if attempts > 64 * samples:
            raise ZeroDenominatorError(
                "could not find pole-free sample orbits for relation_order")
        state, vals = random_start()
        try:
            traj = [(dict(state), dict(vals))]
            for _ in range(max_n):
                s, v = traj[-1]
                s, v = apply_to_state(si, s, v)
                s, v = apply_to_state(sj, s, v)
                traj.append((s, v))
            orbits.append(traj)
        except ZeroDenominatorError:
            continue

    for n in range(1, max_n + 1):
        if not action_power_is_identity(n):
            continue
        if all(traj[n][0] == traj[0][0] for traj in orbits):
            return n
    return EXCEEDS_MAX


# ---------------------------------------------------------------------------
# exponential bracket formula


@dataclass(frozen=True)
class ExponentialFormulaReport:
    system_id: str
    generator: str
    terminated: bool
    order: int
    matches: Optional[bool]

    def as_dict(self) -> dict:
        return {"system": self.system_id, "generator": self.generator,
                "terminated": self.terminated, "order": self.order,
                "matches": self.matches}


def exponential_formula_check(sys: HamiltonianSystem, i: int, g: Polynomial,
                              max_order: int = 6) -> ExponentialFormulaReport:
    """Check s_i(g) = sum_k (1/k!) (alpha_i/f_i)^k ad_{f_i}^k(g).

    The series is summed until the iterated bracket vanishes; a series still
    alive past ``max_order`` is reported as non-terminating rather than
    raised.
    """
    from .symkernel import poisson_bracket

    f_i, alpha = sys.divisors[i]
    gen = generators(sys.id)[f"s{i}"]
    table = sys.table
    ratio = RationalExpr(Polynomial.variable(table, alpha), f_i)
    series = RationalExpr.from_polynomial(g)
    bracket = g
    factorial = 1
    order = 0
    terminated = False
    for k in range(1, max_order + 1):
        bracket = poisson_bracket(f_i, bracket, sys.pairing).as_polynomial()
        if bracket.is_zero():
            terminated = True
            break
        factorial *= k
        series = series + (ratio ** k) * bracket * Fraction(1, factorial)
        order = k
    matches = None
    if terminated:
        matches = is_identically_equal(series, apply_map(gen, g))
    return ExponentialFormulaReport(sys.id, f"s{i}", terminated, order, matches)
