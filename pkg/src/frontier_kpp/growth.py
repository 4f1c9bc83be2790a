"""Growth laws: reaction terms f(t, x, u) and their derived constants.

The solver only needs three things from a growth law: vectorized evaluation,
a Lipschitz bound on [0, L] for the step-size guard, and the ceiling K0
above which the reaction is strictly negative.  The autonomous KPP subclass
additionally exposes f'(0) and the unique positive zero v0, which drive the
spectral thresholds and the spreading classifier.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError


class GrowthSpec:
    """Base class; immutable and shareable."""

    satisfies_f3_f4: bool = False
    k0: float = math.nan

    def rate(self, t, x, u):
        """f(t, x, u); accepts scalars or numpy arrays in u (and x)."""
        raise NotImplementedError

    def lipschitz(self, cap: float) -> float:
        """A Lipschitz constant of u -> f(t, x, u) valid on [0, cap]."""
        raise NotImplementedError

    @property
    def depends_on_tx(self) -> bool:
        return False


@dataclass(frozen=True)
class Logistic(GrowthSpec):
    """f(u) = a u - b u^2 with a, b > 0."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise DomainError(f"logistic growth needs a > 0 and b > 0, got a={self.a}, b={self.b}")

    satisfies_f3_f4 = True

    @property
    def k0(self):
        return self.a / self.b

    def rate(self, t, x, u):
        return self.a * u - self.b * u * u

    def lipschitz(self, cap):
        return max(self.a, 2.0 * self.b * cap - self.a)


@dataclass(frozen=True)
class Autonomous(GrowthSpec):
    """General f(u) with declared ceiling and Lipschitz bound.

    fn must accept numpy arrays.  lip is the Lipschitz constant on [0, k0];
    for larger caps it is scaled linearly, which is safe for the bookkeeping
    here (it only tightens the time step).
    """

    fn: Callable = field(repr=False)
    k0: float = 1.0
    lip: float = 1.0
    kpp: bool = True
    label: str = "autonomous"

    def __post_init__(self):
        if not self.k0 > 0:
            raise DomainError(f"declared K0 must be positive, got {self.k0}")
        if not self.lip > 0:
            raise DomainError(f"declared Lipschitz bound must be positive, got {self.lip}")

    @property
    def satisfies_f3_f4(self):
        return self.kpp

    def rate(self, t, x, u):
        return self.fn(u)

    def lipschitz(self, cap):
        return self.lip * max(1.0, cap / self.k0)


@dataclass(frozen=True)
class SpaceTime(GrowthSpec):
    """Heterogeneous f(t, x, u) with declared bounds; not KPP-classifiable."""

    fn: Callable = field(repr=False)
    k0: float = 1.0
    lip: float = 1.0
    label: str = "spacetime"

    satisfies_f3_f4 = False

    @property
    def depends_on_tx(self):
        return True

    def rate(self, t, x, u):
        return self.fn(t, x, u)

    def lipschitz(self, cap):
        return self.lip * max(1.0, cap / self.k0)


@dataclass(frozen=True)
class ZeroGrowth(GrowthSpec):
    """f identically zero (pure dispersal; used by mass-balance checks).

    The strict-negativity ceiling does not exist for f = 0; k0 = 0 keeps the
    a-priori bound max(sup u0, k0) equal to sup u0, which is exact here.
    """

    satisfies_f3_f4 = False
    k0 = 0.0

    def rate(self, t, x, u):
        return np.zeros_like(np.asarray(u, dtype=float)) if np.ndim(u) else 0.0

    def lipschitz(self, cap):
        return 0.0


@dataclass(frozen=True)
class DerivedConstants:
    fprime0: float
    k0: float
    v0: float


def growth_eval(spec: GrowthSpec, t, x, u):
    """f(t, x, u); densities are nonnegative, so u < 0 is rejected."""
    if np.any(np.asarray(u) < 0):
        raise DomainError(f"growth_eval requires u >= 0, got {u!r}")
    return spec.rate(t, x, u)


def _fd_fprime0(fn) -> float:
    """f'(0) by Richardson-extrapolated differences with step 1e-6.

    Falls back to one-sided stencils when the callable rejects negative u.
    """
    h = 1e-6

    def central(step):
        return (fn(step) - fn(-step)) / (2.0 * step)

    def one_sided(step):
        # f(0) = 0, so the second-order forward stencil reduces to this
        return (4.0 * fn(step) - fn(2.0 * step)) / (2.0 * step)

    try:
        d1, d2 = central(h), central(h / 2.0)
    except Exception:
        d1, d2 = one_sided(h), one_sided(h / 2.0)
    return float((4.0 * d2 - d1) / 3.0)


def derived_constants(spec: GrowthSpec) -> DerivedConstants:
    """(f'(0), K0, v0) for an autonomous KPP growth law."""
    if not spec.satisfies_f3_f4:
        raise DomainError("derived constants need an autonomous KPP growth law")
    if isinstance(spec, Logistic):
        return DerivedConstants(fprime0=spec.a, k0=spec.a / spec.b, v0=spec.a / spec.b)

    fn = lambda u: float(spec.rate(0.0, 0.0, u))  # noqa: E731
    fprime0 = _fd_fprime0(fn)
    if not fprime0 > 0:
        raise DomainError(f"f'(0) = {fprime0!r} is not positive; growth is not KPP")
    k0 = float(spec.k0)
    hi = k0
    f_hi = fn(hi)
    if f_hi > 0:
        raise DomainError(f"f({k0!r}) = {f_hi!r} > 0 contradicts the declared ceiling")
    lo = k0
    f_lo = f_hi
    for _ in range(80):
        lo *= 0.5
        f_lo = fn(lo)
        if f_lo > 0:
            break
    else:
        raise DomainError("no sign change of f found in (0, K0]; growth is not KPP")
    while hi - lo > 1e-12 * max(1.0, k0):
        mid = 0.5 * (lo + hi)
        if fn(mid) > 0:
            lo = mid
        else:
            hi = mid
    v0 = 0.5 * (lo + hi)
    return DerivedConstants(fprime0=fprime0, k0=k0, v0=v0)


def check_hypotheses(spec: GrowthSpec, *, samples: int = 64) -> list[str]:
    """Spot-check the standing growth hypotheses; returns violation messages.

    Checks f(t,x,0) = 0 and f < 0 just above K0 on a (t, x) sample, and for
    declared KPP laws that f(u)/u is strictly decreasing on a sample of
    (0, K0] with f'(0) > 0.  A finite sample cannot certify the hypotheses,
    only refute them.
    """
    problems = []
    if isinstance(spec, ZeroGrowth):
        return problems
    ts = np.array([0.0, 0.7, 13.0])
    xs = np.array([-3.0, 0.0, 0.4, 11.0])
    for t in ts:
        for x in xs:
            z = float(spec.rate(t, x, 0.0))
            if abs(z) > 1e-12:
                problems.append(f"f({t}, {x}, 0) = {z!r} != 0")
            above = spec.k0 * (1.0 + 1e-6)
            if not float(spec.rate(t, x, above)) < 0:
                problems.append(f"f({t}, {x}, {above!r}) is not negative above K0")
    if spec.satisfies_f3_f4 and not spec.depends_on_tx:
        us = np.linspace(spec.k0 / samples, spec.k0, samples)
        ratios = np.asarray(spec.rate(0.0, 0.0, us)) / us
        if not np.all(np.diff(ratios) < 0):
            problems.append("f(u)/u is not strictly decreasing on the sampled grid")
        if not _fd_fprime0(lambda u: float(spec.rate(0.0, 0.0, u))) > 0:
            problems.append("f'(0) is not positive")
    return problems


_ALLOWED_CALLS = {"exp": np.exp, "sin": np.sin}
_ALLOWED_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
_ALLOWED_UNARY = (ast.UAdd, ast.USub)


def _validate_expr(node, names):
    if isinstance(node, ast.Expression):
        _validate_expr(node.body, names)
    elif isinstance(node, ast.BinOp) and isinstance(node.op, _ALLOWED_BINOPS):
        _validate_expr(node.left, names)
        _validate_expr(node.right, names)
    elif isinstance(node, ast.UnaryOp) and isinstance(node.op, _ALLOWED_UNARY):
        _validate_expr(node.operand, names)
    elif isinstance(node, ast.Call):
        if not (isinstance(node.func, ast.Name) and node.func.id in _ALLOWED_CALLS):
            raise DomainError(f"expression call {ast.dump(node.func)} not allowed")
        if len(node.args) != 1 or node.keywords:
            raise DomainError("expression calls take exactly one positional argument")
        _validate_expr(node.args[0], names)
    elif isinstance(node, ast.Name):
        if node.id not in ("t", "x", "u"):
            raise DomainError(f"unknown name {node.id!r} in growth expression")
        names.add(node.id)
    elif isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        pass
    else:
        raise DomainError(f"unsupported syntax in growth expression: {ast.dump(node)}")


def compile_expression(text: str):
    """Compile the small arithmetic DSL over t, x, u.

    Operators: + - * / ^, functions exp and sin, numeric literals.  Returns
    (callable(t, x, u), depends_on_tx).
    """
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise DomainError(f"cannot parse growth expression {text!r}: {exc}") from exc
    names: set[str] = set()
    _validate_expr(tree, names)
    code = compile(tree, "<growth-expression>", "eval")

    def fn(t, x, u):
        return eval(code, {"__builtins__": {}}, {**_ALLOWED_CALLS, "t": t, "x": x, "u": u})

    return fn, bool(names & {"t", "x"})


def growth_from_config(cfg: dict) -> GrowthSpec:
    if not isinstance(cfg, dict):
        raise DomainError("growth section must be a mapping")
    family = cfg.get("family")
    if family == "logistic":
        return Logistic(a=float(cfg["a"]), b=float(cfg["b"]))
    if family == "zero":
        return ZeroGrowth()
    if family == "expression":
        fn, uses_tx = compile_expression(str(cfg["expression"]))
        k0 = float(cfg["k0"])
        lip = float(cfg["lipschitz"])
        if uses_tx:
            return SpaceTime(fn=fn, k0=k0, lip=lip, label=cfg["expression"])
        kpp = bool(cfg.get("kpp", True))
        return Autonomous(
            fn=lambda u, _f=fn: _f(0.0, 0.0, u), k0=k0, lip=lip, kpp=kpp,
            label=cfg["expression"],
        )
    raise DomainError(f"unknown growth family {family!r}")
