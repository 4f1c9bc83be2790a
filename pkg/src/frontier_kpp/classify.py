"""Spreading-vanishing verdicts, the small-coefficient bound, and thresholds.

The dichotomy is asymptotic, so verdicts come from explicit finite-time
proxies (all configurable and reported with the evidence):

* spreading: the range width exceeds the critical length ell* by a safety
  margin (impossible for a vanishing run, whose limit range is at most
  ell*); or, when no critical length exists, the range has grown far beyond
  both the initial radius and the kernel reach while the core density sits
  at the carrying value v0.
* vanishing: the density sup has fallen below a small fraction of v0 and
  both front velocities have stalled.

mu_lower implements the constructive small-coefficient bound
-lambda_1 (h1 - h0) / (8 h1 C1); mu_star brackets the sharp threshold by
verdict bisection, which monotonicity of the dynamics in mu justifies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .errors import (BracketFailure, DomainError, FrontierKppError, InvalidBracket,
                     NoThreshold, WindowExit)
from .grids import build_grid, initial_state
from .growth import GrowthSpec, derived_constants
from .kernels import KernelSpec
from .profiles import InitialProfile
from .solver import SnapshotRow, SolverConfig, Trajectory, integrate
from .spectral import find_ell_star, lambda_p

__all__ = ["Verdict", "ClassifyRules", "Evidence", "Classification", "MuLowerResult",
           "Thresholds", "RunSetup", "classify_run", "compute_mu_lower", "find_mu_star",
           "run_and_classify", "sweep", "SweepResult"]


class Verdict(str, Enum):
    SPREADING = "spreading"
    VANISHING = "vanishing"
    UNDETERMINED = "undetermined"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ClassifyRules:
    """Finite-time proxy thresholds for the asymptotic dichotomy.

    eps_vanish_factor and core_tol are relative to v0; v_eps is an absolute
    front speed.  When a critical length exists the big-domain cutoff is
    max(big_ellstar_factor * ell*, big_h0_factor * h0); it never fires
    because the ell* rule triggers earlier.  When none was computed but one
    exists (f'(0) < d), the analytic bound ell* <= 2 d Q(inf) / f'(0) from
    the constant test function stands in, so the cutoff stays safe.  In the
    always-spreading regime (f'(0) >= d) vanishing is impossible and fronts
    move at most mu M0 Q(inf) per unit time, which keeps widths like 40 h0
    out of reach at small mu within any fixed horizon; the cutoff there
    falls back to a couple of kernel radii, with the core test carrying the
    evidence.
    """

    eps_vanish_factor: float = 1e-4
    v_eps: float = 1e-6
    spread_margin: float = 0.05
    core_tol: float = 0.05
    big_ellstar_factor: float = 4.0
    big_h0_factor: float = 40.0
    fallback_h0_factor: float = 6.0
    fallback_radius_factor: float = 2.0
    t_end_factor: float = 4.0

    def big_domain_cutoff(self, h0: float, ell_star: Optional[float],
                          kernel_radius: float,
                          ell_upper: Optional[float] = None) -> float:
        if ell_star is not None:
            return max(self.big_ellstar_factor * ell_star, self.big_h0_factor * h0)
        if ell_upper is not None:
            return max(self.big_ellstar_factor * ell_upper, self.big_h0_factor * h0)
        return max(self.fallback_h0_factor * h0, self.fallback_radius_factor * kernel_radius)


@dataclass(frozen=True)
class Evidence:
    final_width: float
    final_sup_u: float
    core_density: float
    velocity_left: float
    velocity_right: float
    decided_t: float = math.nan
    rule: str = ""


@dataclass(frozen=True)
class Classification:
    verdict: Verdict
    evidence: Evidence


def _spread_rule(rules: ClassifyRules, ell_star, cutoff, v0, core_band):
    def fires(width: float, core: float) -> Optional[str]:
        if ell_star is not None and width > ell_star * (1.0 + rules.spread_margin):
            return "width beyond critical length"
        if width > cutoff and abs(core - v0) <= core_band:
            return "wide range with core at carrying value"
        return None

    return fires


def make_stop_rule(rules: ClassifyRules, mu: float, v0: float, h0: float,
                   ell_star: Optional[float], kernel_radius: float,
                   ell_upper: Optional[float] = None
                   ) -> Callable[[SnapshotRow], bool]:
    """Early-termination predicate equivalent to the classifier rules."""
    eps = rules.eps_vanish_factor * v0
    cutoff = rules.big_domain_cutoff(h0, ell_star, kernel_radius, ell_upper)
    spread = _spread_rule(rules, ell_star, cutoff, v0, rules.core_tol * v0)

    def stop(row: SnapshotRow) -> bool:
        if row.t <= 0.0:
            return False
        if spread(row.h - row.g, row.core_u) is not None:
            return True
        return (row.sup_u < eps and mu * row.flux_left < rules.v_eps
                and mu * row.flux_right < rules.v_eps)

    return stop


def classify_run(traj: Trajectory, growth: GrowthSpec, ell_star: Optional[float] = None,
                 rules: ClassifyRules = ClassifyRules()) -> Classification:
    """Scan the snapshot series for the first verdict-deciding instant.

    Undetermined is a value, not an error: neither proxy fired by the end
    of the trajectory.  A window-exit trajectory is classified from the
    rows it did record.
    """
    consts = derived_constants(growth)
    v0 = consts.v0
    eps = rules.eps_vanish_factor * v0
    ell_upper = None
    if ell_star is None and consts.fprime0 < traj.d and math.isfinite(traj.kernel_q_inf):
        ell_upper = 2.0 * traj.d * traj.kernel_q_inf / consts.fprime0
    cutoff = rules.big_domain_cutoff(traj.h0, ell_star, traj.kernel_support, ell_upper)
    spread = _spread_rule(rules, ell_star, cutoff, v0, rules.core_tol * v0)

    verdict = Verdict.UNDETERMINED
    decided_t = math.nan
    rule = ""
    for i in range(1, len(traj.times)):
        width = float(traj.h[i] - traj.g[i])
        hit = spread(width, float(traj.core_u[i]))
        if hit is not None:
            verdict, decided_t, rule = Verdict.SPREADING, float(traj.times[i]), hit
            break
        vl = traj.mu * float(traj.flux_left[i])
        vr = traj.mu * float(traj.flux_right[i])
        if float(traj.sup_u[i]) < eps and vl < rules.v_eps and vr < rules.v_eps:
            verdict, decided_t, rule = (Verdict.VANISHING, float(traj.times[i]),
                                        "decayed density with stalled fronts")
            break
    evidence = Evidence(
        final_width=float(traj.h[-1] - traj.g[-1]),
        final_sup_u=float(traj.sup_u[-1]),
        core_density=float(traj.core_u[-1]),
        velocity_left=traj.mu * float(traj.flux_left[-1]),
        velocity_right=traj.mu * float(traj.flux_right[-1]),
        decided_t=decided_t,
        rule=rule,
    )
    return Classification(verdict=verdict, evidence=evidence)


@dataclass(frozen=True)
class MuLowerResult:
    mu_lower: float
    lambda1: float
    c1: float
    h1: float
    eigen_n: int


def compute_mu_lower(h0: float, h1: float, d: float, kernel: KernelSpec,
                     growth: GrowthSpec, u0: InitialProfile, n: int = 512) -> MuLowerResult:
    """Constructive bound below which vanishing is guaranteed.

    Uses the principal eigenpair (lambda_1, phi_1) on (-h1, h1) with
    potential f'(0): lambda_1 must be negative (h1 below half the critical
    length), phi_1 is sup-normalized, and C1 inflates max u0/phi_1 by 1e-6
    so that C1 phi_1 strictly dominates u0.
    """
    if not 0 < h0 < h1:
        raise DomainError(f"need 0 < h0 < h1, got h0={h0}, h1={h1}")
    consts = derived_constants(growth)
    if not consts.fprime0 < d:
        raise InvalidBracket(f"f'(0)={consts.fprime0} >= d={d}: no vanishing regime")
    eig = lambda_p(consts.fprime0, (-h1, h1), kernel, n, tol=1e-11, d=d)
    lam1 = eig.lambda_p
    if lam1 >= 0.0:
        raise InvalidBracket(
            f"lambda_1 = {lam1!r} >= 0 on (-{h1}, {h1}); h1 is not below half the "
            "critical length"
        )
    mask = np.abs(eig.nodes) <= h0
    ratios = np.asarray(u0(eig.nodes[mask])) / eig.eigenfunction[mask]
    c1 = (1.0 + 1e-6) * float(np.max(ratios))
    mu_lower = -lam1 * (h1 - h0) / (8.0 * h1 * c1)
    return MuLowerResult(mu_lower=mu_lower, lambda1=lam1, c1=c1, h1=h1, eigen_n=n)


@dataclass(frozen=True)
class RunSetup:
    """Everything needed to run and classify one free-boundary simulation."""

    kernel: KernelSpec
    growth: GrowthSpec
    profile: InitialProfile
    d: float
    mu: float
    dx: float
    margin: float
    dt: float
    t_end: float
    snapshot_every: int = 1000
    mode: str = "explicit"
    picard_window: float = 0.05
    picard_tol: float = 1e-10
    picard_max_iter: int = 60
    rules: ClassifyRules = ClassifyRules()
    profile_factory: Optional[Callable[[float], InitialProfile]] = None

    @property
    def h0(self) -> float:
        return self.profile.h0

    def with_overrides(self, *, mu: Optional[float] = None, d: Optional[float] = None,
                       h0: Optional[float] = None, t_end: Optional[float] = None,
                       margin: Optional[float] = None) -> "RunSetup":
        out = self
        if mu is not None:
            out = replace(out, mu=mu)
        if d is not None:
            out = replace(out, d=d)
        if t_end is not None:
            out = replace(out, t_end=t_end)
        if margin is not None:
            out = replace(out, margin=margin)
        if h0 is not None and h0 != out.profile.h0:
            if out.profile_factory is None:
                raise DomainError("this setup cannot rebuild its profile at a new h0")
            out = replace(out, profile=out.profile_factory(h0))
        return out

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            d=self.d, mu=self.mu, dt=self.dt, t_end=self.t_end, mode=self.mode,
            snapshot_every=self.snapshot_every, picard_window=self.picard_window,
            picard_tol=self.picard_tol, picard_max_iter=self.picard_max_iter,
        )


def ell_star_or_none(setup: RunSetup, tol: float = 1e-6) -> Optional[float]:
    """Critical length for the setup's (d, f'(0), kernel); None when absent."""
    consts = derived_constants(setup.growth)
    if consts.fprime0 >= setup.d:
        return None
    return find_ell_star(setup.d, consts.fprime0, setup.kernel, tol=tol)


def run_and_classify(setup: RunSetup, ell_star: Optional[float] = None,
                     *, early_stop: bool = True,
                     compute_ell_star: bool = False) -> tuple[Trajectory, Classification]:
    """One simulation plus its verdict; WindowExit yields a partial trajectory."""
    if compute_ell_star and ell_star is None:
        ell_star = ell_star_or_none(setup)
    consts = derived_constants(setup.growth)
    grid = build_grid(setup.h0, setup.margin, setup.dx)
    state0 = initial_state(grid, setup.h0, setup.profile)
    cfg = setup.solver_config()
    until = None
    if early_stop:
        ell_upper = None
        if ell_star is None and consts.fprime0 < setup.d:
            ell_upper = 2.0 * setup.d * float(setup.kernel.tail_integral(math.inf)) \
                / consts.fprime0
        until = make_stop_rule(setup.rules, setup.mu, consts.v0, setup.h0, ell_star,
                               setup.kernel.support, ell_upper)
    try:
        traj = integrate(state0, cfg, setup.kernel, setup.growth, until=until)
    except WindowExit as exc:
        traj = exc.trajectory
        if traj is None:
            raise
    return traj, classify_run(traj, setup.growth, ell_star, setup.rules)


@dataclass(frozen=True)
class Thresholds:
    ell_star: Optional[float]
    mu_lower: Optional[float]
    mu_vanish: float
    mu_spread: float
    rel_width: float
    probes: tuple = ()
    undetermined_at_bracket: bool = False
    note: str = ""
    provenance: dict = field(default_factory=dict)

    @property
    def mu_star_estimate(self) -> float:
        return 0.5 * (self.mu_vanish + self.mu_spread)


def _probe(setup: RunSetup, mu: float, ell_star: float) -> tuple[Verdict, float]:
    """Verdict at one mu, retrying once with a longer horizon if undecided."""
    run = setup.with_overrides(mu=mu)
    _, cls = run_and_classify(run, ell_star)
    if cls.verdict is Verdict.UNDETERMINED:
        run = run.with_overrides(t_end=setup.t_end * setup.rules.t_end_factor)
        _, cls = run_and_classify(run, ell_star)
    return cls.verdict, cls.evidence.decided_t


def find_mu_star(setup: RunSetup, mu_bracket: Optional[tuple[float, float]] = None,
                 tol: float = 0.05, t_end: Optional[float] = None,
                 ell_tol: float = 1e-6) -> Thresholds:
    """Bracket the sharp expansion-coefficient threshold by verdict bisection.

    Requires f'(0) < d and h0 < ell*/2; otherwise spreading happens for
    every mu and NoThreshold is raised.  The initial bracket is seeded by
    the constructive lower bound and by doubling until the verdict flips;
    monotonicity of verdicts in mu keeps bisection sound.  If a probe stays
    undetermined even after one horizon extension the search stops and the
    achieved bracket is returned with undetermined_at_bracket set.
    """
    if t_end is not None:
        setup = replace(setup, t_end=t_end)
    consts = derived_constants(setup.growth)
    if consts.fprime0 >= setup.d:
        raise NoThreshold(
            f"f'(0)={consts.fprime0} >= d={setup.d}: spreading always happens"
        )
    ell_star = find_ell_star(setup.d, consts.fprime0, setup.kernel, tol=ell_tol)
    h0 = setup.h0
    if h0 >= ell_star / 2.0:
        raise NoThreshold(
            f"h0={h0} >= ell*/2={ell_star / 2.0}: spreading always happens"
        )
    h1 = 0.5 * (h0 + ell_star / 2.0)
    lower = compute_mu_lower(h0, h1, setup.d, setup.kernel, setup.growth, setup.profile)

    # probes may push fronts past ell*; budget the window for the overshoot
    margin = max(setup.margin,
                 ell_star * (1.0 + setup.rules.spread_margin) + 2.0 * setup.kernel.support + 1.0)
    setup = replace(setup, margin=margin)

    probes: list[tuple[float, str, float]] = []

    def probe(mu: float) -> Verdict:
        verdict, decided_t = _probe(setup, mu, ell_star)
        probes.append((mu, str(verdict), decided_t))
        return verdict

    def result(lo, hi, *, undetermined=False, note=""):
        return Thresholds(
            ell_star=ell_star, mu_lower=lower.mu_lower, mu_vanish=lo, mu_spread=hi,
            rel_width=(hi - lo) / hi, probes=tuple(probes),
            undetermined_at_bracket=undetermined, note=note,
            provenance={
                "ell_star": f"eigenvalue bisection at tol {ell_tol:g}",
                "mu_lower": "constructive eigenvalue bound",
                "mu_star": "verdict bisection over simulations",
            },
        )

    if mu_bracket is not None:
        lo, hi = mu_bracket
    else:
        lo = lower.mu_lower
        hi = None
    v_lo = probe(lo)
    if v_lo is not Verdict.VANISHING:
        raise BracketFailure(
            f"expected vanishing at mu={lo!r} (verdict {v_lo}); "
            "the discretization disagrees with the constructive bound"
        )
    if hi is None:
        hi = 2.0 * lo
        for _ in range(40):
            v_hi = probe(hi)
            if v_hi is Verdict.SPREADING:
                break
            if v_hi is Verdict.UNDETERMINED:
                return result(lo, hi, undetermined=True,
                              note=f"undetermined at mu={hi!r} while seeding the bracket")
            lo = hi
            hi *= 2.0
        else:
            raise BracketFailure("no spreading verdict found while doubling mu")
    else:
        v_hi = probe(hi)
        if v_hi is not Verdict.SPREADING:
            raise BracketFailure(f"expected spreading at mu={hi!r}, got {v_hi}")

    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        v_mid = probe(mid)
        if v_mid is Verdict.VANISHING:
            lo = mid
        elif v_mid is Verdict.SPREADING:
            hi = mid
        else:
            return result(lo, hi, undetermined=True,
                          note=f"undetermined at mu={mid!r} after horizon extension")
    return result(lo, hi)


@dataclass
class SweepResult:
    row_param: str
    row_values: np.ndarray
    col_param: str
    col_values: np.ndarray
    verdicts: list[list[str]]
    evidence: list[list[Optional[Evidence]]]
    errors: list[list[str]]


_SWEEPABLE = ("mu", "h0", "d")


def sweep(setup: RunSetup, row_param: str, row_values, col_param: str, col_values,
          ell_tol: float = 1e-6) -> SweepResult:
    """Classify every cell of a parameter grid.

    Cells run independently and deterministically in row-major order;
    per-cell failures are recorded in the cell and never abort the sweep.
    The critical length is cached per (d, f'(0)) pair.
    """
    for name in (row_param, col_param):
        if name not in _SWEEPABLE:
            raise DomainError(f"sweep parameter must be one of {_SWEEPABLE}, got {name!r}")
    if row_param == col_param:
        raise DomainError("sweep parameters must differ")
    row_values = np.asarray(list(row_values), dtype=float)
    col_values = np.asarray(list(col_values), dtype=float)
    ell_cache: dict[float, Optional[float]] = {}
    verdicts, evidence, errors = [], [], []
    for rv in row_values:
        vrow, erow, xrow = [], [], []
        for cv in col_values:
            overrides = {row_param: float(rv), col_param: float(cv)}
            try:
                cell = setup.with_overrides(**overrides)
                key = cell.d
                if key not in ell_cache:
                    ell_cache[key] = ell_star_or_none(cell, tol=ell_tol)
                _, cls = run_and_classify(cell, ell_cache[key])
                vrow.append(str(cls.verdict))
                erow.append(cls.evidence)
                xrow.append("")
            except FrontierKppError as exc:
                vrow.append("error")
                erow.append(None)
                xrow.append(f"{type(exc).__name__}: {exc}")
        verdicts.append(vrow)
        evidence.append(erow)
        errors.append(xrow)
    return SweepResult(row_param=row_param, row_values=row_values, col_param=col_param,
                       col_values=col_values, verdicts=verdicts, evidence=evidence,
                       errors=errors)
