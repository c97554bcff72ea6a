"""Holomorphy charts, polynomiality checks, and the degree-6 ansatz solver.

Each system carries a set of birational coordinate charts; expressing the
Hamiltonian (plus a chart-specific additive correction) in the new
coordinates must land back in a polynomial ring.  Imposing that on a
generic degree-6 ansatz produces a linear system on the ansatz
coefficients whose solution space characterizes the Hamiltonian.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Optional, Sequence

from . import exprtext
from .catalog import HamiltonianSystem, ParameterValues, build_system
from .linalg import EchelonSystem
from .solve import triangular_inverse
from .symkernel import (DYNAMICAL, PARAMETER, TIME, Polynomial, RationalExpr,
                        VarTable, cast, divide_with_remainder,
                        is_identically_equal, reduce_parameters, substitute)


@dataclass(frozen=True)
class Chart:
    """A holomorphy coordinate change with an additive correction term.

    ``forward`` expresses the new symbols in the old ones; ``inverse`` (old
    in new) is derived, not transcribed.  The polynomiality requirement
    applies to H + correction expressed through the inverse rules.
    """

    system_id: str
    name: str
    old_table: VarTable
    new_table: VarTable
    forward: tuple[tuple[str, RationalExpr], ...]
    correction: Polynomial
    inverse: tuple[tuple[str, RationalExpr], ...] = ()

    def forward_rule(self, name: str) -> RationalExpr:
        for n, e in self.forward:
            if n == name:
                return e
        raise KeyError(name)

    def inverse_rules(self) -> dict[str, RationalExpr]:
        if not self.inverse:
            raise ValueError(f"chart {self.name} has no inverse populated")
        out = dict(self.inverse)
        for name in self.old_table.symbols(TIME) + self.old_table.symbols(PARAMETER):
            out[name] = RationalExpr.variable(self.new_table, name)
        return out


def chart_inverse(chart: Chart) -> Chart:
    """Populate the closed-form inverse by triangular solving."""
    union = chart.old_table.union(chart.new_table)
    solved = triangular_inverse(dict(chart.forward),
                                chart.old_table.symbols(DYNAMICAL), union)
    inverse = tuple(sorted((name, cast(expr, chart.new_table))
                           for name, expr in solved.items()))
    return Chart(chart.system_id, chart.name, chart.old_table, chart.new_table,
                 chart.forward, chart.correction, inverse)


def _make_chart(system_id: str, name: str, suffix: str,
                rules: Mapping[str, str], correction: str = "0") -> Chart:
    sys = build_system(system_id)
    old = sys.table
    new_dyn = tuple(f"{base}{suffix}" for base in ("x", "y", "z", "w"))
    new = VarTable.make(dynamical=new_dyn, times=old.symbols(TIME),
                        parameters=old.symbols(PARAMETER))
    forward = tuple((f"{base}{suffix}", exprtext.parse(rules[base], old))
                    for base in ("x", "y", "z", "w"))
    return chart_inverse(Chart(system_id, name, old, new, forward,
                               exprtext.parse_polynomial(correction, old)))


@lru_cache(maxsize=None)
def charts(system_id: str) -> dict[str, Chart]:
    if system_id == "A4_2":
        return {
            "r0": _make_chart(system_id, "r0", "0",
                              {"x": "x", "y": "y", "z": "1/z",
                               "w": "-(w*z + a0)*z"}),
            "r1": _make_chart(system_id, "r1", "1",
                              {"x": "-((x + z^2)*y - a1)*y", "y": "1/y",
                               "z": "z", "w": "w - 2*y*z"}),
            "r2": _make_chart(system_id, "r2", "2",
                              {"x": "-((x + y^2 + w + t)*y - a2)*y",
                               "y": "1/y", "z": "z + y", "w": "w"},
                              correction="y"),
        }
    if system_id == "A1_1":
        return {
            "r0": _make_chart(system_id, "r0", "0",
                              {"x": "-((x + z^2)*y - a0)*y", "y": "1/y",
                               "z": "z", "w": "w - 2*y*z"}),
            "r1": _make_chart(system_id, "r1", "1",
                              {"x": "-((x + y^2 + w^2 + t)*y - a1)*y",
                               "y": "1/y", "z": "z + 2*y*w", "w": "w"},
                              correction="y"),
        }
    if system_id == "PDE_A1_1":
        return {
            "R0": _make_chart(system_id, "R0", "0",
                              {"x": "-((q1 + q2^2)*p1 - a0)*p1", "y": "1/p1",
                               "z": "q2", "w": "p2 - 2*p1*q2"}),
            "R1": _make_chart(system_id, "R1", "1",
                              {"x": "-((q1 + p1^2 + p2^2)*p1 - a1)*p1",
                               "y": "1/p1", "z": "q2 + 2*p1*p2", "w": "p2"}),
        }
    raise KeyError(system_id)


def transform_hamiltonian(chart: Chart, ham: Polynomial) -> RationalExpr:
    """H + correction expressed in the chart's new coordinates."""
    return substitute(ham + chart.correction, chart.inverse_rules(),
                      chart.new_table)


@dataclass(frozen=True)
class PolynomialityResult:
    chart_name: str
    polynomial: Optional[Polynomial]
    witness: Optional[Polynomial]

    @property
    def passed(self) -> bool:
        return self.polynomial is not None

    def as_dict(self) -> dict:
        return {
            "chart": self.chart_name,
            "polynomial": self.passed,
            "witness": exprtext.poly_text(self.witness)
            if self.witness is not None else None,
        }


def check_polynomiality(chart: Chart, ham: Polynomial) -> PolynomialityResult:
    """Exact division of the transformed Hamiltonian; residuals witness failure.

    The system's parameter relation is imposed first: the holomorphy
    statements hold on the relation hyperplane (and recover the relation,
    which otherwise shows up as a constant-in-alpha witness).
    """
    relation = build_system(chart.system_id).relation
    image = reduce_parameters(transform_hamiltonian(chart, ham), relation)
    if image.is_polynomial():
        return PolynomialityResult(chart.name, image.as_polynomial(), None)
    quotient, remainder = divide_with_remainder(image.num, image.den)
    if remainder.is_zero():
        return PolynomialityResult(chart.name, quotient, None)
    return PolynomialityResult(chart.name, None, remainder)


def verify_chart_roundtrip(chart: Chart, mode: str = "sampled", *,
                           seed: int = 0) -> bool:
    """forward(inverse) = id and inverse(forward) = id on all symbols."""
    inv = chart.inverse_rules()
    fwd: dict[str, RationalExpr] = dict(chart.forward)
    for name in chart.old_table.symbols(TIME) + chart.old_table.symbols(PARAMETER):
        fwd[name] = RationalExpr.variable(chart.old_table, name)
    for name, rule in chart.forward:
        back = substitute(rule, inv, chart.new_table)
        if not is_identically_equal(back, RationalExpr.variable(chart.new_table, name),
                                    mode, seed=seed):
            return False
    for name, rule in chart.inverse:
        back = substitute(rule, fwd, chart.old_table)
        if not is_identically_equal(back, RationalExpr.variable(chart.old_table, name),
                                    mode, seed=seed):
            return False
    return True


# ---------------------------------------------------------------------------
# degree-6 ansatz solver


@dataclass(frozen=True)
class AnsatzReport:
    system_id: str
    t_degree_bound: int
    alpha: tuple[tuple[str, Fraction], ...]
    chart_names: tuple[str, ...]
    n_unknowns: int
    n_rows: int
    rank: int
    nullspace_dimension: int
    consistent: bool
    membership: tuple[tuple[str, bool], ...]
    nullspace_basis: tuple[str, ...]

    def as_dict(self) -> dict:
        return {
            "system": self.system_id,
            "t_degree_bound": self.t_degree_bound,
            "alpha": {n: str(v) for n, v in self.alpha},
            "charts": list(self.chart_names),
            "matrix_shape": [self.n_rows, self.n_unknowns],
            "rank": self.rank,
            "nullspace_dimension": self.nullspace_dimension,
            "consistent": self.consistent,
            "membership": {n: ok for n, ok in self.membership},
            "nullspace_basis": list(self.nullspace_basis),
        }


def _ansatz_basis(sys: HamiltonianSystem, t_degree_bound: int
                  ) -> list[tuple[int, ...]]:
    """Exponent vectors: dynamical total degree <= 6, time degree <= bound."""
    table = sys.table
    dyn_idx = [table.index(n) for n in table.symbols(DYNAMICAL)]
    time_idx = [table.index(n) for n in table.symbols(TIME)]
    width = len(table)

    monos: list[tuple[int, ...]] = []

    def extend(vec: list[int], remaining: list[int], budget: int,
               per_var: Optional[int]) -> list[list[int]]:
        if not remaining:
            return [list(vec)]
        out = []
        i = remaining[0]
        cap = budget if per_var is None else min(budget, per_var)
        for p in range(cap + 1):
            vec[i] = p
            out.extend(extend(vec, remaining[1:], budget - p, per_var))
        vec[i] = 0
        return out

    dyn_parts = extend([0] * width, dyn_idx, 6, None)
    if t_degree_bound == 0 or not time_idx:
        time_parts = [[0] * width]
    else:
        # the single time symbol of the non-autonomous systems
        time_parts = []
        for p in range(t_degree_bound + 1):
            v = [0] * width
            v[time_idx[0]] = p
            time_parts.append(v)
    for d in dyn_parts:
        for t in time_parts:
            monos.append(tuple(di + ti for di, ti in zip(d, t)))
    monos.sort()
    return monos


def _coefficient_vector(sys: HamiltonianSystem, ham: Polynomial,
                        basis_index: Mapping[tuple[int, ...], int],
                        alpha: Mapping[str, Fraction]) -> Optional[list[Fraction]]:
    """Write a Hamiltonian in the ansatz basis with parameters bound."""
    bound = substitute(ham, {n: Polynomial.const(sys.table, v)
                             for n, v in alpha.items()}).as_polynomial()
    vec = [Fraction(0)] * len(basis_index)
    for e, c in bound.terms.items():
        if e not in basis_index:
            return None
        vec[basis_index[e]] = c
    return vec


def ansatz_solve(system_id: str, t_degree_bound: Optional[int] = None,
                 alpha: Optional[Mapping[str, Fraction] | ParameterValues] = None,
                 chart_names: Optional[Sequence[str]] = None) -> AnsatzReport:
    """Impose polynomiality under every chart on a generic degree-6 ansatz.

    The ansatz is sum c_m(t) * m over dynamical monomials of total degree
    <= 6 with coefficient polynomials in t of degree <= t_degree_bound
    (0 for the autonomous multi-time system).  Negative-degree parts of
    the transformed ansatz yield exact linear constraints; corrections
    make the system affine.  Reports rank, nullspace, basis, and whether
    the catalog Hamiltonians satisfy the full constraint set.
    """
    sys = build_system(system_id)
    if t_degree_bound is None:
        t_degree_bound = 0 if system_id == "PDE_A1_1" else 2
    if system_id == "PDE_A1_1" and t_degree_bound != 0:
        raise ValueError("the autonomous system takes a time-free ansatz")
    if alpha is None:
        alpha = default_alpha_samples(system_id)[0]
    if isinstance(alpha, ParameterValues):
        alpha_values = alpha.as_dict()
    else:
        alpha_values = ParameterValues.make(system_id, alpha).as_dict()

    chart_map = charts(system_id)
    names = tuple(chart_names) if chart_names is not None else tuple(chart_map)
    basis = _ansatz_basis(sys, t_degree_bound)
    basis_index = {e: i for i, e in enumerate(basis)}

    rows: dict[tuple, dict[int, Fraction]] = {}
    rhs: dict[tuple, Fraction] = {}

    for cname in names:
        chart = chart_map[cname]
        # bind the parameter sample inside the inverse rules
        bind: dict[str, RationalExpr] = {
            n: RationalExpr.const(chart.new_table, v)
            for n, v in alpha_values.items()}
        for n in chart.new_table.symbols(DYNAMICAL) + chart.new_table.symbols(TIME):
            bind[n] = RationalExpr.variable(chart.new_table, n)
        inverse = {old: substitute(rule, bind, chart.new_table)
                   for old, rule in chart.inverse_rules().items()}

        def negative_parts(image: RationalExpr) -> dict[tuple[int, ...], Fraction]:
            den = image.den
            if len(den.terms) != 1:
                raise ValueError(
                    f"chart {cname} denominator is not a monomial")
            (de, dc), = den.terms.items()
            out = {}
            for e, c in image.num.terms.items():
                lau = tuple(map(int.__sub__, e, de))
                if min(lau) < 0:
                    out[lau] = c / dc
            return out

        for col, mono in enumerate(basis):
            image = substitute(Polynomial(sys.table, {mono: Fraction(1)}),
                               inverse, chart.new_table)
            for lau, c in negative_parts(image).items():
                key = (cname, lau)
                rows.setdefault(key, {})[col] = c
        if not chart.correction.is_zero():
            corr = substitute(chart.correction, inverse, chart.new_table)
            for lau, c in negative_parts(corr).items():
                key = (cname, lau)
                rows.setdefault(key, {})
                rhs[key] = rhs.get(key, Fraction(0)) - c

    system = EchelonSystem(len(basis))
    ordered = sorted(rows)
    for key in ordered:
        system.add_row(rows[key], rhs.get(key, Fraction(0)))

    membership = []
    for time_symbol, ham in sys.hamiltonians:
        vec = _coefficient_vector(sys, ham, basis_index, alpha_values)
        ok = vec is not None
        if ok:
            for key in ordered:
                if system.residual(rows[key], rhs.get(key, Fraction(0)), vec) != 0:
                    ok = False
                    break
        membership.append((sys.hamiltonian_name(time_symbol), ok))

    basis_texts = []
    for vec in system.nullspace():
        terms = {basis[i]: c for i, c in enumerate(vec) if c}
        basis_texts.append(exprtext.poly_text(Polynomial(sys.table, terms)))

    return AnsatzReport(
        system_id=system_id,
        t_degree_bound=t_degree_bound,
        alpha=tuple(sorted(alpha_values.items())),
        chart_names=names,
        n_unknowns=len(basis),
        n_rows=system.rows_seen,
        rank=system.rank,
        nullspace_dimension=system.nullity,
        consistent=not system.inconsistent,
        membership=tuple(membership),
        nullspace_basis=tuple(basis_texts),
    )


def default_alpha_samples(system_id: str) -> tuple[dict[str, Fraction], ...]:
    """Two independent generic parameter samples satisfying each relation."""
    if system_id == "A4_2":
        return ({"a0": Fraction(1, 3), "a1": Fraction(1, 5), "a2": Fraction(2, 15)},
                {"a0": Fraction(3, 7), "a1": Fraction(1, 11), "a2": Fraction(15, 77)})
    if system_id == "A1_1":
        return ({"a0": Fraction(1, 3), "a1": Fraction(2, 3)},
                {"a0": Fraction(4, 7), "a1": Fraction(3, 7)})
    if system_id == "PDE_A1_1":
        return ({"a0": Fraction(1, 2), "a1": Fraction(-1, 2)},
                {"a0": Fraction(5, 9), "a1": Fraction(-5, 9)})
    raise KeyError(system_id)
