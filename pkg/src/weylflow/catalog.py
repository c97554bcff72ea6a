"""Authoritative constructors for the coupled Painleve-type systems.

Three systems are registered:

  A4_2      four-dimensional coupled system, one time ``t``, parameters
            a0, a1, a2 with a0 + 2*a1 + 2*a2 = 1
  A1_1      its degeneration, one time ``t``, parameters a0, a1 with
            a0 + a1 = 1
  PDE_A1_1  the autonomous multi-time system in (q1, p1, q2, p2) with
            commuting Hamiltonians K1, K2, K3 along t1, t2, t3 and
            parameters a0, a1 with a0 + a1 = 0

Each system carries its variable table, canonical pairing, Hamiltonians,
affine parameter relation, invariant divisors, and generator names.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Mapping

from . import exprtext
from .symkernel import (AffineRelation, CanonicalStructure, DYNAMICAL,
                        PARAMETER, Polynomial, RelationError, Scalar,
                        SymbolError, VarTable)

SYSTEM_IDS = ("A4_2", "A1_1", "PDE_A1_1")


@dataclass(frozen=True)
class ParameterValues:
    """Exact parameter bindings satisfying a system's affine relation."""

    system_id: str
    values: tuple[tuple[str, Fraction], ...]

    @staticmethod
    def make(system_id: str, values: Mapping[str, Scalar]) -> "ParameterValues":
        sys = build_system(system_id)
        bound = {}
        for name in sys.table.symbols(PARAMETER):
            if name not in values:
                raise RelationError(f"parameter {name!r} unbound")
            bound[name] = Fraction(values[name])
        if not sys.relation.holds(bound):
            raise RelationError(
                f"values {dict(values)} violate the {system_id} parameter relation")
        return ParameterValues(system_id, tuple(sorted(bound.items())))

    def as_dict(self) -> dict[str, Fraction]:
        return dict(self.values)

    def __getitem__(self, name: str) -> Fraction:
        for n, v in self.values:
            if n == name:
                return v
        raise SymbolError(f"parameter {name!r} not bound")


@dataclass(frozen=True)
class HamiltonianSystem:
    id: str
    table: VarTable
    pairing: CanonicalStructure
    hamiltonians: tuple[tuple[str, Polynomial], ...]  # (time symbol, H)
    relation: AffineRelation
    divisors: tuple[tuple[Polynomial, str], ...]      # (f_i, paired parameter)
    generator_names: tuple[str, ...]

    def hamiltonian(self, time_symbol: str) -> Polynomial:
        for t, h in self.hamiltonians:
            if t == time_symbol:
                return h
        raise SymbolError(f"{self.id} has no Hamiltonian for time {time_symbol!r}")

    @property
    def times(self) -> tuple[str, ...]:
        return tuple(t for t, _ in self.hamiltonians)

    def hamiltonian_name(self, time_symbol: str) -> str:
        if len(self.hamiltonians) == 1:
            return "H"
        return f"K{self.times.index(time_symbol) + 1}"


def h_second_painleve(table: VarTable, x: str, y: str, t: str, a: str) -> Polynomial:
    """Painleve-II block: x*y^2 + x^2 + t*x - a*y."""
    return exprtext.parse_polynomial(f"{x}*{y}^2 + {x}^2 + {t}*{x} - {a}*{y}", table)


def h_second_painleve_auto(table: VarTable, z: str, w: str, a: str) -> Polynomial:
    """Autonomous Painleve-II block: z^2*w - w^2/2 + a*z."""
    return exprtext.parse_polynomial(f"{z}^2*{w} - 1/2*{w}^2 + {a}*{z}", table)


def h_quadratic(table: VarTable, z: str, w: str) -> Polynomial:
    """Hyperbolic quadratic block: z^2/4 - w^2/4."""
    return exprtext.parse_polynomial(f"1/4*{z}^2 - 1/4*{w}^2", table)


_K1_TEXT = "q1*p1^2 + q1^2 - a0*p1 + 1/4*q2^2 - 1/4*p2^2 + p1*q2*p2"

_K2_TEXT = ("q2^2*p2^2 - 1/4*q2^2 + 1/4*p2^2 - 2*a0*q2*p2 + q1*q2^2 + q1*p2^2"
            " - p1*q2*p2 + p1^2*q2^2")

# The two q1^2-terms are forced: without them the three flows do not
# commute and the t3 flow cannot reproduce the scalar u_t3 equation.
# With a1 = -a0 this K3 equals K1^2/2 identically.
_K3_TEXT = (
    "1/2*q1^2*p1^4 + q1^3*p1^2 + 1/2*q1^4 - a0*q1*p1^3 + a1*q1^2*p1"
    " + 1/2*a0^2*p1^2 + 1/32*q2^4 + 1/32*p2^4 - 1/16*q2^2*p2^2"
    " + q1*p1^3*q2*p2 + 1/2*p1^2*q2^2*p2^2 - 1/4*q1*p1^2*p2^2"
    " - 1/4*p1*q2*p2^3 + q1^2*p1*q2*p2 + 1/4*q1*p1^2*q2^2 + 1/4*p1*q2^3*p2"
    " - a0*p1^2*q2*p2 + 1/4*a0*p1*p2^2 + 1/4*a1*p1*q2^2"
    " + 1/4*q1^2*q2^2 - 1/4*q1^2*p2^2")


@lru_cache(maxsize=None)
def build_system(system_id: str) -> HamiltonianSystem:
    if system_id == "A4_2":
        table = VarTable.make(dynamical=("x", "y", "z", "w"), times=("t",),
                              parameters=("a0", "a1", "a2"))
        coupling = exprtext.parse_polynomial("x*w + 2*y*z*w", table)
        ham = (2 * h_second_painleve(table, "x", "y", "t", "a1")
               + h_second_painleve_auto(table, "z", "w", "a0") + coupling)
        return HamiltonianSystem(
            id=system_id,
            table=table,
            pairing=CanonicalStructure((("x", "y"), ("z", "w"))),
            hamiltonians=(("t", ham),),
            relation=AffineRelation.make({"a0": 1, "a1": 2, "a2": 2}, 1, "a2"),
            divisors=(
                (exprtext.parse_polynomial("w", table), "a0"),
                (exprtext.parse_polynomial("x + z^2", table), "a1"),
                (exprtext.parse_polynomial("x + y^2 + w + t", table), "a2"),
            ),
            generator_names=("s0", "s1", "s2"),
        )
    if system_id == "A1_1":
        table = VarTable.make(dynamical=("x", "y", "z", "w"), times=("t",),
                              parameters=("a0", "a1"))
        ham = (h_second_painleve(table, "x", "y", "t", "a0")
               + h_quadratic(table, "z", "w")
               + exprtext.parse_polynomial("y*z*w", table))
        return HamiltonianSystem(
            id=system_id,
            table=table,
            pairing=CanonicalStructure((("x", "y"), ("z", "w"))),
            hamiltonians=(("t", ham),),
            relation=AffineRelation.make({"a0": 1, "a1": 1}, 1, "a1"),
            divisors=(
                (exprtext.parse_polynomial("x + z^2", table), "a0"),
                (exprtext.parse_polynomial("x + y^2 + w^2 + t", table), "a1"),
            ),
            generator_names=("s0", "s1"),
        )
    if system_id == "PDE_A1_1":
        table = VarTable.make(dynamical=("q1", "p1", "q2", "p2"),
                              times=("t1", "t2", "t3"), parameters=("a0", "a1"))
        return HamiltonianSystem(
            id=system_id,
            table=table,
            pairing=CanonicalStructure((("q1", "p1"), ("q2", "p2"))),
            hamiltonians=(
                ("t1", exprtext.parse_polynomial(_K1_TEXT, table)),
                ("t2", exprtext.parse_polynomial(_K2_TEXT, table)),
                ("t3", exprtext.parse_polynomial(_K3_TEXT, table)),
            ),
            relation=AffineRelation.make({"a0": 1, "a1": 1}, 0, "a1"),
            divisors=(
                (exprtext.parse_polynomial("q1 + q2^2", table), "a0"),
                (exprtext.parse_polynomial("q1 + p1^2 + p2^2", table), "a1"),
            ),
            generator_names=("s0", "s1"),
        )
    raise SymbolError(f"unknown system id {system_id!r}; expected one of {SYSTEM_IDS}")


def divisor_table(sys: HamiltonianSystem) -> tuple[tuple[Polynomial, str], ...]:
    return sys.divisors


def evaluate_hamiltonian(sys: HamiltonianSystem, time_symbol: str,
                         state: Mapping[str, Scalar]) -> Fraction:
    """Exact value of the Hamiltonian attached to ``time_symbol``.

    Every dynamical symbol, every parameter, and any time symbol the
    Hamiltonian actually contains must be bound; the parameter binding must
    satisfy the system relation.
    """
    ham = sys.hamiltonian(time_symbol)
    point: dict[str, Fraction] = {}
    params: dict[str, Fraction] = {}
    for name, value in state.items():
        sys.table.index(name)
        point[name] = Fraction(value)
    for name in sys.table.symbols(DYNAMICAL):
        if name not in point:
            raise SymbolError(f"dynamical symbol {name!r} unbound")
    for name in sys.table.symbols(PARAMETER):
        if name not in point:
            raise SymbolError(f"parameter {name!r} unbound")
        params[name] = point[name]
    for name in ham.symbols():
        if name not in point:
            raise SymbolError(f"symbol {name!r} unbound")
    if not sys.relation.holds(params):
        raise RelationError(f"parameters {params} violate the {sys.id} relation")
    return ham.evaluate(point)


def params_with_divisor_zero(sys: HamiltonianSystem, index: int
                             ) -> dict[str, Polynomial]:
    """Substitution rules imposing alpha_i = 0 together with the relation.

    The divisor's parameter goes to zero and one further parameter is
    eliminated through the relation restricted to alpha_i = 0.
    """
    from .symkernel import substitute

    _, alpha = sys.divisors[index]
    table = sys.table
    solve_name = sys.relation.eliminated
    if solve_name == alpha:
        others = [n for n in sys.relation.names()
                  if n != alpha and sys.relation.coeff(n) != 0]
        solve_name = others[-1]
    name, expr = sys.relation.solve_for(table, solve_name)
    expr = substitute(expr, {alpha: Polynomial.zero(table)}).as_polynomial()
    return {alpha: Polynomial.zero(table), name: expr}


def serialize_system(sys: HamiltonianSystem) -> dict:
    """JSON-ready description: variables, term lists, pairing, relation."""
    def poly_doc(p: Polynomial) -> dict:
        terms = []
        for e in sorted(p.terms):
            c = p.terms[e]
            terms.append({"exponents": list(e), "coefficient": str(c)})
        return {"text": exprtext.poly_text(p), "terms": terms}

    return {
        "id": sys.id,
        "variables": [{"name": n, "class": c}
                      for n, c in zip(sys.table.names, sys.table.classes)],
        "pairs": [list(p) for p in sys.pairing.pairs],
        "relation": {
            "coefficients": {n: str(c) for n, c in sys.relation.terms},
            "constant": str(sys.relation.constant),
            "eliminated": sys.relation.eliminated,
        },
        "hamiltonians": {sys.hamiltonian_name(t): poly_doc(h)
                         for t, h in sys.hamiltonians},
        "times": list(sys.times),
        "divisors": [{"name": f"f{i}", "polynomial": exprtext.poly_text(f),
                      "parameter": a}
                     for i, (f, a) in enumerate(sys.divisors)],
        "generators": list(sys.generator_names),
    }
