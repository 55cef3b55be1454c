"""Coordinate model of the configuration bundle and its observables.

A chart fixes the flat variable namespace: base coordinates ``x1..xm``,
fiber coordinates ``u1..un`` and momenta ``pI_A`` for the pair (base
index I, fiber index A).  The distinguished extended-momentum coordinate
is the reserved name ``pext``.

Currents are stored in decomposed form: a vertical-field coefficient
vector Y^a(x, u) together with form coefficients b^i(x, u); the induced
coefficient of the i-th component is  Y^a p^i_a + b^i.  For a
one-dimensional base every function of (x, u, p) is an observable and
the decomposition is not used; such observables are plain density
coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .expr import Add, Const, Expression, Mul, Var, add_all, parse, simplify

EXTENDED_MOMENTUM = "pext"


@dataclass(frozen=True)
class Chart:
    """Local coordinates with base dimension ``m`` and fiber dimension ``n``."""

    m: int
    n: int

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("chart dimensions must be at least 1")

    def x_name(self, i: int) -> str:
        if not 1 <= i <= self.m:
            raise IndexError(f"base index {i} out of range 1..{self.m}")
        return f"x{i}"

    def u_name(self, a: int) -> str:
        if not 1 <= a <= self.n:
            raise IndexError(f"fiber index {a} out of range 1..{self.n}")
        return f"u{a}"

    def p_name(self, i: int, a: int) -> str:
        return f"p{self.x_name(i)[1:]}_{self.u_name(a)[1:]}"

    @property
    def x_names(self) -> tuple[str, ...]:
        return tuple(f"x{i}" for i in range(1, self.m + 1))

    @property
    def u_names(self) -> tuple[str, ...]:
        return tuple(f"u{a}" for a in range(1, self.n + 1))

    @property
    def p_names(self) -> tuple[str, ...]:
        return tuple(self.p_name(i, a)
                     for i in range(1, self.m + 1) for a in range(1, self.n + 1))

    @property
    def names(self) -> frozenset[str]:
        return frozenset(self.x_names) | frozenset(self.u_names) | frozenset(self.p_names)

    def x(self, i: int) -> Var:
        return Var(self.x_name(i))

    def u(self, a: int) -> Var:
        return Var(self.u_name(a))

    def p(self, i: int, a: int) -> Var:
        return Var(self.p_name(i, a))

    def check_scope(self, e: Expression, where: str) -> None:
        extra = e.variables() - self.names
        if extra:
            raise ValueError(f"{where} references unknown variables {sorted(extra)}")


def _as_expr(e) -> Expression:
    return parse(e) if isinstance(e, str) else e


@dataclass(frozen=True)
class HamiltonianSection:
    """A Hamiltonian section in local coordinates: (x, u, -H, p)."""

    chart: Chart
    H: Expression

    def __post_init__(self):
        object.__setattr__(self, "H", _as_expr(self.H))
        self.chart.check_scope(self.H, "Hamiltonian")

    def replace(self, H: Expression) -> "HamiltonianSection":
        return HamiltonianSection(self.chart, H)


@dataclass(frozen=True)
class DensityCoefficient:
    """Coefficient F(x, u, p) of the volume form in a density."""

    chart: Chart
    F: Expression

    def __post_init__(self):
        object.__setattr__(self, "F", _as_expr(self.F))
        self.chart.check_scope(self.F, "density coefficient")


@dataclass(frozen=True)
class Current:
    """Observable stored as the pair (Y, beta); requires m >= 2.

    ``Y`` holds n vertical-field coefficients and ``beta`` holds m form
    coefficients, all functions of (x, u) only.
    """

    chart: Chart
    Y: tuple[Expression, ...]
    beta: tuple[Expression, ...]
    name: str = ""

    def __post_init__(self):
        if self.chart.m < 2:
            raise ValueError("currents in decomposed form require base dimension >= 2; "
                             "use a DensityCoefficient for m = 1")
        object.__setattr__(self, "Y", tuple(_as_expr(e) for e in self.Y))
        object.__setattr__(self, "beta", tuple(_as_expr(e) for e in self.beta))
        if len(self.Y) != self.chart.n:
            raise ValueError(f"expected {self.chart.n} Y coefficients, got {len(self.Y)}")
        if len(self.beta) != self.chart.m:
            raise ValueError(f"expected {self.chart.m} beta coefficients, got {len(self.beta)}")


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    offending: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.valid


def validate_current(c: Current, chart: Chart | None = None) -> ValidationReport:
    """Check that no coefficient of ``c`` depends on a momentum variable."""
    chart = chart or c.chart
    forbidden = frozenset(chart.p_names) | {EXTENDED_MOMENTUM}
    offending: dict[str, tuple[str, ...]] = {}
    for label, exprs in (("Y", c.Y), ("beta", c.beta)):
        for k, e in enumerate(exprs, start=1):
            bad = e.variables() & forbidden
            if bad:
                offending[f"{label}[{k}]"] = tuple(sorted(bad))
    return ValidationReport(valid=not offending, offending=offending)


def require_valid(c: Current) -> None:
    report = validate_current(c)
    if not report:
        raise ValueError(f"invalid current: momentum dependence in {report.offending}")


def current_coefficients(c: Current) -> tuple[Expression, ...]:
    """The m component coefficients  Y^a p^i_a + b^i  of the observable."""
    require_valid(c)
    chart = c.chart
    coeffs = []
    for i in range(1, chart.m + 1):
        terms: list[Expression] = [Mul(c.Y[a - 1], chart.p(i, a)) for a in range(1, chart.n + 1)]
        terms.append(c.beta[i - 1])
        coeffs.append(add_all(terms))
    return tuple(coeffs)


@dataclass(frozen=True)
class CurrentDifferential:
    """Coefficients of the exterior derivative of an observable.

    ``c0`` multiplies the volume form, ``cu[b][i]`` multiplies
    du^b ^ d^{m-1}x_i and ``cp[a]`` multiplies sum_i dp^i_a ^ d^{m-1}x_i.
    """

    c0: Expression
    cu: tuple[tuple[Expression, ...], ...]
    cp: tuple[Expression, ...]


def d_current(c: Current) -> CurrentDifferential:
    require_valid(c)
    chart = c.chart
    m, n = chart.m, chart.n

    def alpha_terms(dvar: str, i: int) -> Expression:
        terms: list[Expression] = [c.beta[i - 1].diff(dvar)]
        terms += [Mul(c.Y[a - 1].diff(dvar), chart.p(i, a)) for a in range(1, n + 1)]
        return add_all(terms)

    c0 = add_all(alpha_terms(chart.x_name(i), i) for i in range(1, m + 1))
    cu = tuple(
        tuple(alpha_terms(chart.u_name(b), i) for i in range(1, m + 1))
        for b in range(1, n + 1)
    )
    cp = tuple(simplify(y) for y in c.Y)
    return CurrentDifferential(c0=c0, cu=cu, cp=cp)


def extended_density(h: HamiltonianSection) -> Expression:
    """Coefficient of the extended density attached to a Hamiltonian section."""
    return simplify(Add(Var(EXTENDED_MOMENTUM), h.H))


def extract_decomposition(chart: Chart, coeffs: Sequence[Expression]) -> tuple[tuple[Expression, ...], tuple[Expression, ...]]:
    """Recover (Y, beta) from component coefficients of a valid observable.

    Y^a is read off as the p^1_a derivative of the first component and
    beta^i as the i-th component at p = 0.
    """
    if len(coeffs) != chart.m:
        raise ValueError(f"expected {chart.m} coefficients")
    zeros = {name: 0.0 for name in chart.p_names}
    Y = tuple(coeffs[0].diff(chart.p_name(1, a)) for a in range(1, chart.n + 1))
    beta = tuple(simplify(e.substitute(zeros)) for e in coeffs)
    return Y, beta
