#!/usr/bin/env python3
"""
Seeded randomized property suites.

Every suite draws its random inputs from a Philox stream keyed by
(seed, suite name, trial index), so serial and threaded runs produce the same
report. Reports list per-check worst margins, failures, SDP failures and
near-violations together with the trial indices that reproduce them.
"""

import math
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

import linalg
import sdp
from entropy import (
    DEFAULT_SETTINGS,
    EntropyQuery,
    SolveSettings,
    continuity_bound,
    fidelity_sdp,
    hmax,
    hmin,
    hmin_hmax_bounds_check,
    maxepsball_oracle,
    phi,
    smooth_hmax,
    smooth_hmin,
    tightness_pair,
)
from entropy_lib import (
    EntropyConfig,
    EntropyError,
    EntropyLogger,
    NumericalFailure,
    PreconditionError,
)
from metrics import (
    extension_match,
    fidelity,
    gen_fidelity,
    gen_trace_distance,
    in_ball,
    pure_distance,
    purified_distance,
    states_equal,
    uhlmann_match,
)
from quantum import (
    Channel,
    Operator,
    PureState,
    State,
    SystemLayout,
    apply_channel,
    apply_isometry,
    basis_state,
    embed,
    make_rng,
    maximally_entangled,
    product,
    projective_measurement_map,
    purify,
    random_channel,
    random_isometry,
    random_pure,
    random_state,
)

_log = EntropyLogger("smooth_entropy.verify")

TIER_LA = EntropyConfig.TIER_LINEAR_ALGEBRA
TIER_SDP = EntropyConfig.TIER_SINGLE_SDP
TIER_ORACLE = EntropyConfig.TIER_NESTED_ORACLE


# =============================================================================
# TYPES
# =============================================================================

@dataclass(frozen=True)
class Suite:
    """One requested run of a named suite"""

    name: str
    trials: int
    seed: int
    dims: SystemLayout
    epsilons: Tuple[float, ...] = ()
    options: Dict[str, Any] = field(default_factory=dict, compare=False, hash=False)


@dataclass(frozen=True)
class Check:
    """A signed margin; the check fails when margin < -tolerance"""

    name: str
    margin: float
    tolerance: float
    informational: bool = False

    @property
    def failed(self) -> bool:
        return not self.informational and not self.margin >= -self.tolerance

    @property
    def near_violation(self) -> bool:
        if self.informational or self.failed:
            return False
        return self.margin < -self.tolerance / EntropyConfig.NEAR_VIOLATION_FACTOR


def inequality(name: str, lhs: float, rhs: float, tolerance: float) -> Check:
    """lhs <= rhs"""
    return Check(name, rhs - lhs, tolerance)


def equality(name: str, a: float, b: float, tolerance: float) -> Check:
    return Check(name, -abs(a - b), tolerance)


def info(name: str, value: float) -> Check:
    return Check(name, value, 0.0, informational=True)


@dataclass
class TrialOutcome:
    trial: int
    checks: List[Check]
    error_kind: Optional[str] = None
    error: Optional[str] = None


@dataclass
class TrialContext:
    suite: Suite
    trial: int
    rng: np.random.Generator
    settings: SolveSettings

    @property
    def layout(self) -> SystemLayout:
        return self.suite.dims

    def option(self, key: str, default: Any = None) -> Any:
        return self.suite.options.get(key, default)

    def epsilon(self) -> float:
        eps = self.suite.epsilons or (0.1,)
        return float(eps[int(self.rng.integers(len(eps)))])

    def state(self, layout: Optional[SystemLayout] = None, normalized: bool = True,
              full_rank: bool = False) -> State:
        layout = layout or self.layout
        rank = layout.total_dim if full_rank else int(self.rng.integers(1, layout.total_dim + 1))
        return random_state(layout, rank, self.rng, min_scale=None if normalized else 0.3)

    def profiles(self) -> List[Tuple[str, SystemLayout]]:
        """Suite layout plus the extra profiles active for this trial, with check-name suffixes.

        ``extra_profiles`` holds (dims, trial_limit) pairs; a limit of None means every trial.
        """
        found = [("", self.layout)]
        for dims, limit in self.option("extra_profiles", ()):
            if limit is None or self.trial < limit:
                layout = SystemLayout.parse(dims)
                found.append(("" + "x".join(str(d) for d in layout.dims), layout))
        return found


@dataclass(frozen=True)
class SuiteDefinition:
    name: str
    anchor: str
    tolerance: float
    trials: int
    dims: str
    epsilons: Tuple[float, ...]
    run: Callable[[TrialContext], List[Check]]
    sdp_heavy: bool = False
    min_factors: int = 1
    finalize: Optional[Callable[["VerificationReport", List[TrialOutcome]], None]] = None


# =============================================================================
# REPORTS
# =============================================================================

def _fmt(x: float) -> str:
    if x is None:
        return "none"
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return EntropyConfig.REPORT_FLOAT_FORMAT.format(x)


def _round(x: Optional[float]) -> Optional[float]:
    if x is None or not math.isfinite(x):
        return None
    return float(_fmt(x))


@dataclass
class CheckSummary:
    count: int = 0
    failures: int = 0
    worst_margin: float = math.inf
    worst_trial: int = -1
    tolerance: float = 0.0


@dataclass
class VerificationReport:
    suite: str
    anchor: str
    seed: int
    trials: int
    dims: str
    epsilons: List[float]
    tolerance: float
    trials_run: int = 0
    failures: int = 0
    sdp_failures: int = 0
    errors: int = 0
    worst_slack: float = math.inf
    worst_seed: int = -1
    status: str = "pass"
    checks: Dict[str, CheckSummary] = field(default_factory=dict)
    informational: Dict[str, Dict[str, float]] = field(default_factory=dict)
    near_violations: List[Dict[str, Any]] = field(default_factory=list)
    failed_trials: List[Dict[str, Any]] = field(default_factory=list)
    findings: List[str] = field(default_factory=list)
    margins: Optional[List[Dict[str, float]]] = None
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return self.status != "fail"

    def to_dict(self, include_timing: bool = True) -> Dict[str, Any]:
        body: Dict[str, Any] = {
            "suite": self.suite,
            "anchor": self.anchor,
            "seed": self.seed,
            "trials": self.trials,
            "dims": self.dims,
            "epsilons": [_round(e) for e in self.epsilons],
            "tolerance": _round(self.tolerance),
            "trials_run": self.trials_run,
            "failures": self.failures,
            "sdp_failures": self.sdp_failures,
            "errors": self.errors,
            "worst_slack": _round(self.worst_slack),
            "worst_seed": self.worst_seed,
            "status": self.status,
            "checks": {
                name: {
                    "count": s.count,
                    "failures": s.failures,
                    "worst_margin": _round(s.worst_margin),
                    "worst_trial": s.worst_trial,
                    "tolerance": _round(s.tolerance),
                }
                for name, s in sorted(self.checks.items())
            },
            "informational": {
                name: {k: _round(v) if isinstance(v, float) else v for k, v in sorted(stats.items())}
                for name, stats in sorted(self.informational.items())
            },
            "near_violations": self.near_violations,
            "failed_trials": self.failed_trials,
            "findings": list(self.findings),
        }
        if self.margins is not None:
            body["margins"] = [{k: _round(v) for k, v in sorted(m.items())} for m in self.margins]
        if include_timing:
            body["wall_time"] = round(self.wall_time, 3)
        return body

    def to_text(self, include_timing: bool = True) -> str:
        """Key-value text form, one finding per line"""
        lines = [
            f"suite={self.suite}",
            f"anchor={self.anchor}",
            f"status={self.status}",
            f"seed={self.seed}",
            f"trials={self.trials}",
            f"trials_run={self.trials_run}",
            f"dims={self.dims}",
            "epsilons=" + ",".join(_fmt(e) for e in self.epsilons),
            f"tolerance={_fmt(self.tolerance)}",
            f"failures={self.failures}",
            f"sdp_failures={self.sdp_failures}",
            f"errors={self.errors}",
            f"worst_slack={_fmt(self.worst_slack)}",
            f"worst_seed={self.worst_seed}",
        ]
        for name, s in sorted(self.checks.items()):
            lines.append(f"check={name} count={s.count} failures={s.failures} "
                         f"worst_margin={_fmt(s.worst_margin)} worst_trial={s.worst_trial} "
                         f"tolerance={_fmt(s.tolerance)}")
        for name, stats in sorted(self.informational.items()):
            fields_ = " ".join(f"{k}={_fmt(v) if isinstance(v, float) else v}" for k, v in sorted(stats.items()))
            lines.append(f"informational={name} {fields_}")
        for nv in self.near_violations:
            lines.append(f"near_violation check={nv['check']} trial={nv['trial']} margin={_fmt(nv['margin'])}")
        for ft in self.failed_trials:
            detail = " ".join(f"{k}={v}" for k, v in ft.items() if k != "trial")
            lines.append(f"failed_trial trial={ft['trial']} {detail}")
        for finding in self.findings:
            lines.append(f"finding={finding}")
        if include_timing:
            lines.append(f"wall_time={self.wall_time:.3f}")
        return "\n".join(lines) + "\n"


def _aggregate(definition: SuiteDefinition, suite: Suite, outcomes: List[TrialOutcome],
               record_margins: bool) -> VerificationReport:
    report = VerificationReport(
        suite=suite.name,
        anchor=definition.anchor,
        seed=suite.seed,
        trials=suite.trials,
        dims=str(suite.dims),
        epsilons=list(suite.epsilons),
        tolerance=definition.tolerance,
        trials_run=len(outcomes),
    )
    if record_margins:
        report.margins = []

    for outcome in outcomes:
        if outcome.error_kind is not None:
            if outcome.error_kind == "sdp":
                report.sdp_failures += 1
            else:
                report.errors += 1
            report.failed_trials.append({"trial": outcome.trial, "kind": outcome.error_kind,
                                         "message": outcome.error})
            continue

        trial_failed = False
        for check in outcome.checks:
            if check.informational:
                stats = report.informational.setdefault(
                    check.name, {"count": 0, "min": math.inf, "max": -math.inf, "min_trial": -1})
                stats["count"] += 1
                if check.margin < stats["min"]:
                    stats["min"], stats["min_trial"] = check.margin, outcome.trial
                stats["max"] = max(stats["max"], check.margin)
                continue
            summary = report.checks.setdefault(check.name, CheckSummary(tolerance=check.tolerance))
            summary.count += 1
            if check.margin < summary.worst_margin:
                summary.worst_margin, summary.worst_trial = check.margin, outcome.trial
            if check.margin < report.worst_slack:
                report.worst_slack, report.worst_seed = check.margin, outcome.trial
            if check.failed:
                summary.failures += 1
                trial_failed = True
            elif check.near_violation:
                report.near_violations.append({"trial": outcome.trial, "check": check.name,
                                               "margin": _round(check.margin)})
        if trial_failed:
            report.failures += 1
        if record_margins:
            report.margins.append({c.name: c.margin for c in outcome.checks if not c.informational})

    if report.failures or report.sdp_failures or report.errors:
        report.status = "fail"
    if definition.finalize is not None:
        definition.finalize(report, outcomes)
    return report


# =============================================================================
# SHARED SAMPLERS
# =============================================================================

def _ball_member(rho: State, eps: float, rng: np.random.Generator, normalized: bool = False) -> State:
    """Random member of the ε-ball: ρ mixed toward a random state until P reaches u·ε"""
    xi = random_state(rho.layout, None, rng, min_scale=None if normalized else 0.5)
    target = eps * rng.uniform(0.1, 0.95)

    def mix(t: float) -> State:
        return State(rho.layout, (1.0 - t) * rho.matrix + t * xi.matrix)

    if purified_distance(xi, rho) <= target:
        return xi
    lo, hi = 0.0, 1.0
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        if purified_distance(mix(mid), rho) <= target:
            lo = mid
        else:
            hi = mid
    return mix(lo)


def _pure_ball_member(phi_state: PureState, eps: float, rng: np.random.Generator) -> PureState:
    """αφ + βχ with χ ⊥ φ, α >= √(1 − ε²) and α² + β² <= 1 (φ normalized)"""
    v = phi_state.amplitudes
    z = rng.normal(size=v.size) + 1j * rng.normal(size=v.size)
    z = z - np.vdot(v, z) * v
    chi = z / np.linalg.norm(z)
    a_min = math.sqrt(1.0 - eps ** 2)
    alpha = a_min + (1.0 - a_min) * rng.uniform()
    beta = math.sqrt(max(0.0, 1.0 - alpha ** 2)) * rng.uniform()
    return PureState(phi_state.layout, alpha * v + beta * chi)


def _q(state: State, target, conditioning, eps: float = 0.0) -> EntropyQuery:
    return EntropyQuery.of(state, target, conditioning, eps)


def _labels(layout: SystemLayout) -> Tuple[str, ...]:
    return layout.labels


# =============================================================================
# SUITES: METRICS
# =============================================================================

def _metric_axioms(ctx: TrialContext) -> List[Check]:
    """purified distance is a metric on sub-normalized states"""
    checks: List[Check] = []
    for suffix, layout in ctx.profiles():
        rho, tau, omega = (ctx.state(layout, normalized=False) for _ in range(3))
        p_rt = purified_distance(rho, tau)
        p_tr = purified_distance(tau, rho)
        p_to = purified_distance(tau, omega)
        p_ro = purified_distance(rho, omega)
        checks += [
            equality("symmetry" + suffix, p_rt, p_tr, TIER_LA),
            Check("identity" + suffix, -purified_distance(rho, rho), TIER_LA),
            inequality("triangle" + suffix, p_ro, p_rt + p_to, TIER_LA),
            inequality("range-upper" + suffix, p_rt, 1.0, TIER_LA),
        ]
        # P = 0 <=> equal states; random distinct pairs must be strictly separated
        if not states_equal(rho, tau):
            checks.append(Check("indiscernibles" + suffix, p_rt, 0.0))
    return checks


def _sandwich_bounds(ctx: TrialContext) -> List[Check]:
    """D̄ <= P <= √(2 D̄)"""
    rho, tau = ctx.state(normalized=False), ctx.state(normalized=False)
    d = gen_trace_distance(rho, tau)
    p = purified_distance(rho, tau)
    return [
        inequality("lower", d, p, TIER_LA),
        inequality("upper", p, math.sqrt(2.0 * d), TIER_LA),
        equality("trace-distance-formulas", d, max(linalg.positive_part_trace(rho.matrix - tau.matrix),
                                                  linalg.positive_part_trace(tau.matrix - rho.matrix)), TIER_LA),
    ]


def _monotonicity(ctx: TrialContext) -> List[Check]:
    """P non-increasing, F̄ non-decreasing under trace non-increasing CPMs"""
    rho = ctx.state(normalized=False, full_rank=True)
    tau = ctx.state(normalized=False, full_rank=True)
    trace_preserving = bool(ctx.rng.integers(2))
    out = SystemLayout.of(("Y", ctx.layout.total_dim))
    channel = random_channel(ctx.layout, out, 2, ctx.rng, trace_preserving=trace_preserving)
    e_rho = apply_channel(channel, rho)
    e_tau = apply_channel(channel, tau)
    checks = [
        inequality("purified-distance", purified_distance(e_rho, e_tau), purified_distance(rho, tau), TIER_LA),
        inequality("generalized-fidelity", gen_fidelity(rho, tau), gen_fidelity(e_rho, e_tau), TIER_LA),
        inequality("trace-non-increasing", e_rho.trace, rho.trace + 1e-10, TIER_LA),
    ]
    if trace_preserving:
        checks.append(inequality("fidelity-tp", fidelity(rho, tau), fidelity(e_rho, e_tau), TIER_LA))
    return checks


def _uhlmann(ctx: TrialContext) -> List[Check]:
    """matching purifications and extensions reach the purified distance"""
    rho, tau = ctx.state(normalized=False), ctx.state(normalized=False)
    target = purified_distance(rho, tau)
    phi_state = purify(rho, "R", ctx.layout.total_dim)
    theta = uhlmann_match(rho, tau, phi_state)
    marginal = theta.to_state().partial_trace(["R"])
    checks = [
        equality("purification-distance", pure_distance(phi_state, theta), target, TIER_LA),
        Check("purification-marginal", -linalg.trace_norm(marginal.matrix - tau.matrix), 1e-9),
    ]
    extra = SystemLayout.of(("E", 2))
    joint = random_state(ctx.layout.tensor(extra), None, ctx.rng, min_scale=0.3)
    rho_m = joint.partial_trace(["E"])
    tau_ext = extension_match(rho_m, tau, joint)
    checks += [
        equality("extension-distance", purified_distance(joint, tau_ext), purified_distance(rho_m, tau), 1e-7),
        Check("extension-marginal", -linalg.trace_norm(tau_ext.partial_trace(["E"]).matrix - tau.matrix), 1e-9),
    ]
    return checks


def _ball_properties(ctx: TrialContext) -> List[Check]:
    """ε-ball properties: convexity, distinguishability, growth in ε,
    symmetry and triangle, isometry invariance, partial trace, purification"""
    rng = ctx.rng
    eps = ctx.epsilon()
    labels = _labels(ctx.layout)
    rho = ctx.state(normalized=False)
    if not math.sqrt(rho.trace) > eps:
        rho = rho.normalized()
    checks: List[Check] = []

    # i) convexity
    t1, t2 = _ball_member(rho, eps, rng), _ball_member(rho, eps, rng)
    lam = rng.uniform()
    mixed = State(rho.layout, lam * t1.matrix + (1 - lam) * t2.matrix)
    checks.append(Check("i-convexity", in_ball(mixed, rho, eps).slack, TIER_LA))

    # ii) distinguishing advantage for normalized members
    rho_n = rho.normalized()
    member_n = _ball_member(rho_n, eps, rng, normalized=True)
    checks.append(inequality("ii-distinguishing", gen_trace_distance(member_n, rho_n), eps, TIER_LA))

    # iii) growth in ε and B^0 = {ρ}
    bigger = eps + rng.uniform(0.0, 0.5 * (1.0 - eps))
    if math.sqrt(rho.trace) > bigger:
        checks.append(Check("iii-growth", in_ball(t1, rho, bigger).slack, TIER_LA))
    checks.append(Check("iii-zero-ball", -purified_distance(rho, rho), TIER_LA))

    # iv) symmetry and triangle composition
    checks.append(equality("iv-symmetry", purified_distance(t1, rho), purified_distance(rho, t1), TIER_LA))
    eps2 = ctx.epsilon()
    if math.sqrt(t1.trace) > eps2:
        second = _ball_member(t1, eps2, rng)
        checks.append(inequality("iv-triangle", purified_distance(second, rho), eps + eps2, TIER_LA))

    # v) isometries, forward and projected back
    d = ctx.layout.total_dim
    iso = random_isometry(d, d + 1, rng, ctx.layout, SystemLayout.of(("V", d + 1)))
    u_rho = apply_isometry(iso, rho, list(labels))
    u_t1 = apply_isometry(iso, t1, list(labels))
    checks.append(equality("v-isometry-forward", purified_distance(u_t1, u_rho),
                           purified_distance(t1, rho), TIER_LA))
    omega = _ball_member(u_rho, eps, rng)
    back = apply_channel(iso.pull_back_channel(), omega)
    checks.append(Check("v-isometry-back", in_ball(back, rho, eps).slack, TIER_LA))

    # vi) partial trace
    if len(labels) >= 2:
        keep = [labels[0]]
        checks.append(inequality("vi-partial-trace", purified_distance(t1.marginal(keep), rho.marginal(keep)),
                                 purified_distance(t1, rho), TIER_LA))

    # vii) purification of the ball
    phi_state = purify(rho, "R", d)
    theta = uhlmann_match(rho, t1, phi_state)
    checks.append(Check("vii-pure-member", eps - pure_distance(phi_state, theta), TIER_LA))
    return checks


def _epsballineq(ctx: TrialContext) -> List[Check]:
    """marginal ball = marginals of the purified ball when dim H′ >= dim H"""
    rng = ctx.rng
    eps = ctx.epsilon()
    rho = ctx.state(normalized=True)
    d = ctx.layout.total_dim
    phi_state = purify(rho, "R", d)

    member = _ball_member(rho, eps, rng)
    theta = uhlmann_match(rho, member, phi_state)
    lifted_marginal = theta.to_state().partial_trace(["R"])
    pure_member = _pure_ball_member(phi_state, eps, rng)
    return [
        Check("lift-in-pure-ball", eps - pure_distance(phi_state, theta), TIER_LA),
        Check("lift-marginal", -linalg.trace_norm(lifted_marginal.matrix - member.matrix), TIER_LA),
        Check("pure-member-in-pure-ball", eps - pure_distance(phi_state, pure_member), TIER_LA),
        Check("marginal-in-ball", in_ball(pure_member.to_state().partial_trace(["R"]), rho, eps).slack, TIER_LA),
    ]


# =============================================================================
# SUITES: ENTROPIES
# =============================================================================

def _duality(ctx: TrialContext) -> List[Check]:
    """Hmin^ε(A|B) = −Hmax^ε(A|C) for pure ρ_ABC"""
    checks: List[Check] = []
    states: Dict[str, State] = {}
    for suffix, layout in ctx.profiles():
        a, b, c = _labels(layout)[:3]
        state = states[suffix] = random_pure(layout, ctx.rng).to_state()
        for eps in ctx.suite.epsilons:
            h_min = smooth_hmin(_q(state, a, b, eps), ctx.settings).value
            h_max = smooth_hmax(_q(state, a, c, eps), ctx.settings, witness=False).value
            checks.append(equality(f"smooth-duality-eps{eps:g}{suffix}", h_min, -h_max, TIER_SDP))
            if eps == 0.0:
                plain = hmax(_q(state, a, c), ctx.settings).value
                checks.append(equality("non-smooth-duality" + suffix,
                                       hmin(_q(state, a, b), ctx.settings).value, -plain, TIER_SDP))
                checks.append(equality("hmax-paths-agree" + suffix, h_max, plain, 1e-6))

    a, b = _labels(ctx.layout)[:2]
    eps_max = max(ctx.suite.epsilons or (0.0,))
    if ctx.trial < int(ctx.option("oracle_trials", 0)) and eps_max > 0.0:
        query = _q(states[""], a, b, eps_max)
        oracle = maxepsball_oracle(query, budget=int(ctx.option("oracle_budget", 500)),
                                   seed=ctx.trial, settings=ctx.settings)
        checks.append(equality(f"oracle-eps{eps_max:g}", oracle.value, oracle.smooth_value, TIER_ORACLE))
    return checks


def _data_processing(ctx: TrialContext) -> List[Check]:
    """Hmin^ε, Hmax^ε non-decreasing under TP-CPMs on the conditioning system"""
    a, b = _labels(ctx.layout)[:2]
    rho = ctx.state(normalized=True).marginal([a, b])
    identity = bool(ctx.option("identity_channel", False))
    b_layout = rho.layout.select([b])
    if identity:
        channel = Channel(b_layout, SystemLayout.of(("D", b_layout.total_dim)), (np.eye(b_layout.total_dim),))
    else:
        d_out = int(ctx.rng.integers(2, b_layout.total_dim + 2))
        channel = random_channel(b_layout, SystemLayout.of(("D", d_out)), 2, ctx.rng)
    tau = apply_channel(channel, rho, [b])

    checks: List[Check] = []
    for eps in ctx.suite.epsilons:
        before_min = smooth_hmin(_q(rho, a, b, eps), ctx.settings).value
        after_min = smooth_hmin(_q(tau, a, "D", eps), ctx.settings).value
        before_max = smooth_hmax(_q(rho, a, b, eps), ctx.settings, witness=False).value
        after_max = smooth_hmax(_q(tau, a, "D", eps), ctx.settings, witness=False).value
        if identity:
            checks.append(equality(f"hmin-identity-eps{eps:g}", before_min, after_min, 1e-6))
            checks.append(equality(f"hmax-identity-eps{eps:g}", before_max, after_max, 1e-6))
            continue
        checks.append(inequality(f"hmin-eps{eps:g}", before_min, after_min, TIER_SDP))
        checks.append(inequality(f"hmax-eps{eps:g}", before_max, after_max, TIER_SDP))
        traced_min = smooth_hmin(_q(rho, a, (), eps), ctx.settings).value
        traced_max = smooth_hmax(_q(rho, a, (), eps), ctx.settings, witness=False).value
        checks.append(inequality(f"hmin-partial-trace-eps{eps:g}", before_min, traced_min, TIER_SDP))
        checks.append(inequality(f"hmax-partial-trace-eps{eps:g}", before_max, traced_max, TIER_SDP))
    return checks


def _measurement(ctx: TrialContext) -> List[Check]:
    """projective measurement of A: Hmin^ε(AB|C) <= Hmin^ε(XB|C), same for Hmax"""
    a, b, c = _labels(ctx.layout)[:3]
    rho = ctx.state(normalized=True)
    a_layout = rho.layout.select([a])
    d_a = a_layout.total_dim
    basis = random_isometry(d_a, d_a, ctx.rng).matrix
    measure = projective_measurement_map(basis, a_layout, "X")
    tau = apply_channel(measure, rho, [a])

    checks = [Check("identity-to-identity",
                    -float(np.max(np.abs(measure.apply_matrix(np.eye(d_a)) - np.eye(d_a)))), 1e-12)]
    for eps in ctx.suite.epsilons:
        checks.append(inequality(
            f"hmin-eps{eps:g}",
            smooth_hmin(_q(rho, (a, b), c, eps), ctx.settings).value,
            smooth_hmin(_q(tau, ("X", b), c, eps), ctx.settings).value, TIER_SDP))
        checks.append(inequality(
            f"hmax-eps{eps:g}",
            smooth_hmax(_q(rho, (a, b), c, eps), ctx.settings, witness=False).value,
            smooth_hmax(_q(tau, ("X", b), c, eps), ctx.settings, witness=False).value, TIER_SDP))
    return checks


def _phi_value(op: Operator, a: str, b: str, settings: SolveSettings) -> float:
    return phi(op, (a,), (b,), settings).value


def _phi_properties(ctx: TrialContext) -> List[Check]:
    """Φ: homogeneity, monotonicity, sub-additivity, bounds"""
    a, b = _labels(ctx.layout)[:2]
    layout = ctx.layout.select([a, b])
    d_a, d_b = layout.dim_of([a]), layout.dim_of([b])
    rng = ctx.rng
    s = ctx.settings
    rho = ctx.state(layout, normalized=False)
    tau = ctx.state(layout, normalized=False)
    phi_rho = _phi_value(rho, a, b, s)
    phi_tau = _phi_value(tau, a, b, s)
    checks: List[Check] = []

    lam = 0.37
    checks.append(equality("homogeneity", _phi_value(Operator(layout, lam * rho.matrix), a, b, s),
                           lam * phi_rho, 1e-9))

    gap = random_state(layout, None, rng).matrix * rng.uniform(0.05, 0.5)
    checks.append(inequality("monotonicity", phi_rho, _phi_value(Operator(layout, rho.matrix + gap), a, b, s),
                             1e-7))

    h = linalg.random_hermitian(layout.total_dim, rng) * 0.3
    hermitian = Operator(layout, h)
    checks.append(inequality("sub-additivity", _phi_value(Operator(layout, rho.matrix + h), a, b, s),
                             phi_rho + _phi_value(hermitian, a, b, s), 1e-7))

    if d_b >= 2:
        half = d_b // 2
        left = random_state(SystemLayout.of((a, d_a), (b, half)), None, rng).matrix
        right = random_state(SystemLayout.of((a, d_a), (b, d_b - half)), None, rng).matrix
        x = np.zeros((d_a, d_b, d_a, d_b), dtype=np.complex128)
        y = np.zeros_like(x)
        x[:, :half, :, :half] = 0.5 * left.reshape(d_a, half, d_a, half)
        y[:, half:, :, half:] = 0.5 * right.reshape(d_a, d_b - half, d_a, d_b - half)
        x = x.reshape(layout.total_dim, layout.total_dim)
        y = y.reshape(layout.total_dim, layout.total_dim)
        total = _phi_value(Operator(layout, x + y), a, b, s)
        parts = _phi_value(Operator(layout, x), a, b, s) + _phi_value(Operator(layout, y), a, b, s)
        checks.append(equality("additivity-orthogonal-marginals", total, parts, 1e-6))

    d_min = min(d_a, d_b)
    checks.append(inequality("lower-bound", rho.trace / d_a, phi_rho, 1e-7))
    checks.append(inequality("upper-bound", phi_rho, d_min * linalg.positive_part_trace(rho.matrix), 1e-7))
    checks.append(inequality("upper-bound-tau", phi_tau, d_min * linalg.positive_part_trace(tau.matrix), 1e-7))
    return checks


def _bounds(ctx: TrialContext) -> List[Check]:
    """dimension bounds of Hmin and Hmax, ordering for sub-normalized states"""
    a, b = _labels(ctx.layout)[:2]
    rho = ctx.state(normalized=False).marginal([a, b])
    report = hmin_hmax_bounds_check(_q(rho, a, b), ctx.settings)
    return [Check(name, margin, 1e-7) for name, margin in sorted(report.margins.items())]


def _continuity(ctx: TrialContext) -> List[Check]:
    """|ΔHmin| <= d_A d_min δ / (ln 2 min tr), and tightness of the bound"""
    a, b = _labels(ctx.layout)[:2]
    rho = ctx.state(normalized=False, full_rank=True).marginal([a, b])
    delta = float(ctx.option("delta", 0.01))
    xi = random_state(rho.layout, None, ctx.rng, min_scale=0.3)
    tau = State(rho.layout, (1.0 - delta) * rho.matrix + delta * xi.matrix)
    bound = continuity_bound(rho, tau, a, b, ctx.settings)
    checks = [inequality("bound", bound.lhs, bound.rhs, 1e-7)]
    if ctx.trial == 0:
        d_a = rho.layout.dim_of([a])
        t_rho, t_tau = tightness_pair(d_a, 1, 1e-3)
        tight = continuity_bound(t_rho, t_tau, "A", "B", ctx.settings)
        checks.append(inequality("tightness-ratio", 0.9, tight.ratio, 0.0))
        checks.append(inequality("tightness-bound", tight.lhs, tight.rhs, 1e-7))
        checks.append(equality("tightness-delta", tight.delta, 1e-3, TIER_LA))
    return checks


def _smooth_continuity(ctx: TrialContext) -> List[Check]:
    """interpolated state τ̃ = c⁻¹(ε²ρ̃ + δ′²τ) with c = (δ + ε)²"""
    a, b = _labels(ctx.layout)[:2]
    eps = ctx.epsilon()
    deltas = ctx.option("deltas", (0.01, 0.05))
    mix = float(deltas[int(ctx.rng.integers(len(deltas)))])
    rho = ctx.state(normalized=True).marginal([a, b])
    xi = random_state(rho.layout, None, ctx.rng)
    tau = State(rho.layout, (1.0 - mix) * rho.matrix + mix * xi.matrix)
    delta = purified_distance(rho, tau)

    smooth_rho = smooth_hmin(_q(rho, a, b, eps), ctx.settings)
    smooth_tau = smooth_hmin(_q(tau, a, b, eps), ctx.settings)
    rho_tilde = smooth_rho.smoothed_state
    c = (delta + eps) ** 2
    delta_prime = math.sqrt(delta ** 2 + 2.0 * eps * delta)
    tau_tilde = State(rho.layout, (eps ** 2 * rho_tilde.matrix + delta_prime ** 2 * tau.matrix) / c)

    h_rho_tilde = hmin(_q(rho_tilde, a, b), ctx.settings).value
    h_tau_tilde = hmin(_q(tau_tilde, a, b), ctx.settings).value
    bound = continuity_bound(rho_tilde, tau_tilde, a, b, ctx.settings)
    return [
        inequality("tau-tilde-near-tau", purified_distance(tau_tilde, tau), eps, TIER_LA),
        inequality("tau-tilde-near-rho-tilde", purified_distance(tau_tilde, rho_tilde), delta_prime, TIER_LA),
        info("smooth-gap-margin", (h_rho_tilde - h_tau_tilde) - (smooth_rho.value - smooth_tau.value)),
        info("continuity-margin", bound.margin),
        info("delta-prime", delta_prime),
    ]


def _concavity(ctx: TrialContext) -> List[Check]:
    """Hmax(Σ p_i ρ_i) >= Σ p_i Hmax(ρ_i)"""
    a, b = _labels(ctx.layout)[:2]
    layout = ctx.layout.select([a, b])
    weights = ctx.rng.dirichlet(np.ones(3))
    parts = [ctx.state(layout, normalized=True) for _ in range(3)]
    mixture = State(layout, sum(w * p.matrix for w, p in zip(weights, parts)))
    average = sum(w * hmax(_q(p, a, b), ctx.settings).value for w, p in zip(weights, parts))
    return [inequality("concavity", average, hmax(_q(mixture, a, b), ctx.settings).value, 1e-6)]


def _iso_invariance(ctx: TrialContext) -> List[Check]:
    """local isometries and embeddings leave Hmin^ε and Hmax^ε unchanged"""
    a, b = _labels(ctx.layout)[:2]
    rho = ctx.state(normalized=True).marginal([a, b])
    d_a, d_b = rho.layout.dim_of([a]), rho.layout.dim_of([b])
    embedded = embed(rho, rho.layout.with_dims({a: d_a + 1, b: d_b + 1}))
    iso = random_isometry(d_b, d_b + 1, ctx.rng, rho.layout.select([b]), SystemLayout.of(("W", d_b + 1)))
    rotated = apply_isometry(iso, rho, [b])
    checks: List[Check] = []
    for eps in ctx.suite.epsilons:
        base_min = smooth_hmin(_q(rho, a, b, eps), ctx.settings).value
        base_max = smooth_hmax(_q(rho, a, b, eps), ctx.settings, witness=False).value
        checks.append(equality(f"hmin-embed-eps{eps:g}", base_min,
                               smooth_hmin(_q(embedded, a, b, eps), ctx.settings).value, 1e-6))
        checks.append(equality(f"hmax-embed-eps{eps:g}", base_max,
                               smooth_hmax(_q(embedded, a, b, eps), ctx.settings, witness=False).value, 1e-6))
        checks.append(equality(f"hmin-isometry-eps{eps:g}", base_min,
                               smooth_hmin(_q(rotated, a, "W", eps), ctx.settings).value, 1e-6))
        checks.append(equality(f"hmax-isometry-eps{eps:g}", base_max,
                               smooth_hmax(_q(rotated, a, "W", eps), ctx.settings, witness=False).value, 1e-6))

        # any purification gives the same smooth max-entropy
        phi_state = purify(rho, "C")
        d_c = phi_state.layout.dim_of(["C"])
        redirect = random_isometry(d_c, d_c + 1, ctx.rng, phi_state.layout.select(["C"]),
                                   SystemLayout.of(("C2", d_c + 1)))
        other = apply_isometry(redirect, phi_state.to_state(), ["C"])
        checks.append(equality(f"hmax-purifier-choice-eps{eps:g}", base_max,
                               -smooth_hmin(_q(other, a, "C2", eps), ctx.settings).value, TIER_SDP))
    return checks


def _hmin_shape(ctx: TrialContext) -> List[Check]:
    """Hmin is neither convex nor concave: record witnesses of both"""
    a, b = _labels(ctx.layout)[:2]
    layout = ctx.layout.select([a, b])
    rho = ctx.state(layout, normalized=True)
    tau = ctx.state(layout, normalized=True)
    p = ctx.rng.uniform(0.2, 0.8)
    mix = State(layout, p * rho.matrix + (1 - p) * tau.matrix)
    average = p * hmin(_q(rho, a, b), ctx.settings).value + (1 - p) * hmin(_q(tau, a, b), ctx.settings).value
    value = hmin(_q(mix, a, b), ctx.settings).value
    return [
        info("concavity-violation", average - value),
        info("convexity-violation", value - average),
    ]


def _hmin_shape_finalize(report: VerificationReport, outcomes: List[TrialOutcome]) -> None:
    found = {}
    for name in ("concavity-violation", "convexity-violation"):
        witness = None
        for outcome in outcomes:
            for check in outcome.checks:
                if check.name == name and check.margin > 1e-6:
                    witness = outcome.trial
                    break
            if witness is not None:
                break
        found[name] = witness
        if witness is None:
            report.findings.append(f"{name}-witness=absent")
        else:
            report.findings.append(f"{name}-witness=trial:{witness}")
    report.findings.append(f"searched-trials={report.trials_run}")
    if report.status != "fail" and any(w is None for w in found.values()):
        report.status = "inconclusive"


# =============================================================================
# SUITE: SDP FIXTURES
# =============================================================================

def _single_block(name: str, c, constraints: Sequence[Tuple[Any, float]], real: bool = False) -> sdp.SdpProblem:
    c = np.asarray(c, dtype=np.complex128)
    builder = sdp.ProblemBuilder(name)
    builder.add_block("X", c.shape[0], real)
    builder.set_objective("X", c)
    for a, rhs in constraints:
        builder.add_constraint({"X": np.asarray(a, dtype=np.complex128)}, rhs)
    return builder.build()


def _e(n: int, i: int, j: int) -> np.ndarray:
    m = np.zeros((n, n), dtype=np.complex128)
    m[i, j] = m[j, i] = 1.0 if i == j else 0.5
    return m


def _fixture_two_scalars() -> sdp.SdpProblem:
    builder = sdp.ProblemBuilder("two_scalars")
    builder.add_block("x1", 1)
    builder.add_block("x2", 1)
    builder.set_objective("x1", [[1.0]])
    builder.set_objective("x2", [[2.0]])
    builder.add_constraint({"x1": [[1.0]], "x2": [[1.0]]}, 1.0)
    return builder.build()


def _fixture_scalar_inequality() -> sdp.SdpProblem:
    builder = sdp.ProblemBuilder("scalar_inequality")
    builder.add_block("x", 1, real=True)
    builder.set_objective("x", [[-1.0]])
    builder.add_inequality({"x": [[1.0]]}, 2.0, "<=")
    return builder.build()


def _fixture_operator_equality() -> sdp.SdpProblem:
    builder = sdp.ProblemBuilder("operator_equality")
    builder.add_block("X", 2)
    builder.set_objective("X", np.eye(2))
    builder.add_operator_equality([("X", sdp.identity_map())], np.diag([0.3, 0.7]))
    return builder.build()


def _fixture_operator_inequality() -> sdp.SdpProblem:
    builder = sdp.ProblemBuilder("operator_inequality")
    builder.add_block("sigma", 2)
    builder.set_objective("sigma", np.eye(2))
    builder.add_operator_inequality([("sigma", sdp.identity_map())], np.array([[2.0, 1.0], [1.0, 2.0]]), ">=")
    return builder.build()


def _fixture_lovasz_c5() -> sdp.SdpProblem:
    n = 5
    constraints = [(np.eye(n), 1.0)] + [(_e(n, i, (i + 1) % n), 0.0) for i in range(n)]
    return _single_block("lovasz_theta_c5", -np.ones((n, n)), constraints)


def _random_hermitian_fixture() -> Tuple[sdp.SdpProblem, float]:
    c = linalg.random_hermitian(3, make_rng(7, 1))
    return _single_block("min_eigenvalue", c, [(np.eye(3), 1.0)]), float(linalg.eigvalsh(c)[-1])


def _fixture_cases() -> List[Tuple[str, Callable[[SolveSettings], Tuple[float, str, float]], float, str]]:
    """(name, solver, expected value, expected status)"""

    def via(problem_fn: Callable[[], sdp.SdpProblem]):
        def solve(settings: SolveSettings) -> Tuple[float, str, float]:
            problem = problem_fn()
            solution = sdp.solve(problem, sdp.SolverOptions(settings.tolerances))
            if solution.is_optimal:
                ok, errors = sdp.check_solution(problem, solution).is_valid(settings.tolerances)
                if not ok:
                    raise NumericalFailure(f"{problem.name}: " + "; ".join(errors))
            return solution.value, solution.status, solution.gap
        return solve

    pauli_x = np.array([[0, 1], [1, 0]])
    pauli_y = np.array([[0, -1j], [1j, 0]])
    hermitian_problem, hermitian_min = _random_hermitian_fixture()
    bell = maximally_entangled(SystemLayout.of(("A", 2)), SystemLayout.of(("B", 2))).to_state()
    pure_product = product(basis_state(SystemLayout.of(("A", 2))), basis_state(SystemLayout.of(("B", 2)), 1))
    p = np.array([0.2, 0.5, 0.3])
    q = np.array([0.6, 0.1, 0.3])
    one = SystemLayout.of(("A", 3))
    qubit = SystemLayout.of(("A", 2))
    plus = PureState(qubit, np.array([1.0, 1.0]) / math.sqrt(2.0)).to_state()
    zero = basis_state(qubit).to_state()

    def phi_of(state: State) -> Callable[[SolveSettings], Tuple[float, str, float]]:
        def solve(settings: SolveSettings):
            result = phi(state, "A", "B", settings)
            return result.value, result.solution.status, result.solution.gap
        return solve

    def fidelity_of(x: State, y: State) -> Callable[[SolveSettings], Tuple[float, str, float]]:
        def solve(settings: SolveSettings):
            value, solution = fidelity_sdp(x, y, settings)
            return value, solution.status, solution.gap
        return solve

    ok = sdp.OPTIMAL
    return [
        ("trace-fixed", via(lambda: _single_block("trace_fixed", np.eye(2), [(np.eye(2), 1.0)])), 1.0, ok),
        ("eigenvalue-selection", via(lambda: _single_block("eig_select", np.diag([1.0, 2.0]),
                                                           [(np.eye(2), 1.0)])), 1.0, ok),
        ("eigenvalue-selection-3", via(lambda: _single_block("eig_select3", np.diag([3.0, 1.0, 2.0]),
                                                             [(np.eye(3), 1.0)])), 1.0, ok),
        ("pauli-x", via(lambda: _single_block("pauli_x", pauli_x, [(np.eye(2), 1.0)])), -1.0, ok),
        ("pauli-y", via(lambda: _single_block("pauli_y", pauli_y, [(np.eye(2), 1.0)])), -1.0, ok),
        ("complex-min-eigenvalue", via(lambda: hermitian_problem), hermitian_min, ok),
        ("diagonal-constraints", via(lambda: _single_block("diag", np.eye(2), [(_e(2, 0, 0), 1.0),
                                                                                (_e(2, 1, 1), 1.0)])), 2.0, ok),
        ("max-cut-edge", via(lambda: _single_block("maxcut", pauli_x, [(_e(2, 0, 0), 1.0),
                                                                        (_e(2, 1, 1), 1.0)])), -2.0, ok),
        ("two-scalar-blocks", via(_fixture_two_scalars), 1.0, ok),
        ("real-scalar", via(lambda: _single_block("real_scalar", [[1.0]], [([[1.0]], 3.0)], real=True)), 3.0, ok),
        ("scalar-inequality", via(_fixture_scalar_inequality), -2.0, ok),
        ("operator-equality", via(_fixture_operator_equality), 1.0, ok),
        ("operator-inequality", via(_fixture_operator_inequality), 4.0, ok),
        ("phi-maximally-entangled", phi_of(bell), 2.0, ok),
        ("phi-pure-product", phi_of(pure_product), 1.0, ok),
        ("fidelity-commuting", fidelity_of(State(one, np.diag(p)), State(one, np.diag(q))),
         float(np.sum(np.sqrt(p * q))), ok),
        ("fidelity-pure", fidelity_of(zero, plus), 1.0 / math.sqrt(2.0), ok),
        ("redundant-constraint", via(lambda: _single_block("redundant", np.diag([1.0, 2.0]),
                                                           [(np.eye(2), 1.0), (2 * np.eye(2), 2.0)])), 1.0, ok),
        ("inconsistent-constraint", via(lambda: _single_block("inconsistent", np.eye(2),
                                                              [(np.eye(2), 1.0), (np.eye(2), 2.0)])),
         math.nan, sdp.PRIMAL_INFEASIBLE),
        ("lovasz-theta-c5", via(_fixture_lovasz_c5), -math.sqrt(5.0), ok),
    ]


def _sdp_fixtures(ctx: TrialContext) -> List[Check]:
    """hand-built SDPs with known optima"""
    cases = _fixture_cases()
    name, solver, expected, expected_status = cases[ctx.trial % len(cases)]
    value, status, gap = solver(ctx.settings)
    checks = [Check(f"{name}-status", 0.0 if status == expected_status else -1.0, 0.0)]
    if expected_status == sdp.OPTIMAL and status == sdp.OPTIMAL:
        checks.append(equality(f"{name}-value", value, expected, 1e-7 * (1.0 + abs(expected))))
        checks.append(inequality(f"{name}-gap", gap, ctx.settings.tolerances.sdp_gap, 0.0))
    return checks


# =============================================================================
# REGISTRY AND RUNNER
# =============================================================================

SUITES: Dict[str, SuiteDefinition] = {d.name: d for d in [
    SuiteDefinition("metric-axioms", "purified distance is a metric on sub-normalized states",
                    TIER_LA, 500, "3", (), _metric_axioms),
    SuiteDefinition("sandwich-bounds", "lower and upper bounds of the purified distance by the "
                    "generalized trace distance", TIER_LA, 1000, "3", (), _sandwich_bounds),
    SuiteDefinition("monotonicity", "purified distance monotone under trace non-increasing CPMs",
                    TIER_LA, 200, "3", (), _monotonicity),
    SuiteDefinition("uhlmann", "Uhlmann matching of purifications and extensions",
                    TIER_LA, 200, "3", (), _uhlmann),
    SuiteDefinition("ball-properties", "epsilon-ball properties i-vii",
                    TIER_LA, 200, "2,2", (0.05, 0.1, 0.2), _ball_properties),
    SuiteDefinition("epsballineq", "epsilon-ball of a marginal equals marginals of the purified ball",
                    TIER_LA, 200, "2,2", (0.05, 0.1, 0.2), _epsballineq),
    SuiteDefinition("duality", "smooth min- and max-entropy duality for pure states",
                    TIER_SDP, 100, "2,2,2", (0.0, 0.05, 0.1), _duality, sdp_heavy=True, min_factors=3),
    SuiteDefinition("data-proc-1", "smooth entropies non-decreasing under local operations on B",
                    TIER_SDP, 100, "2,2", (0.0, 0.1), _data_processing, sdp_heavy=True, min_factors=2),
    SuiteDefinition("data-proc-2", "smooth entropies non-decreasing under projective measurement of A",
                    TIER_SDP, 100, "2,2,2", (0.0, 0.1), _measurement, sdp_heavy=True, min_factors=3),
    SuiteDefinition("phi-properties", "properties of the functional Phi",
                    1e-7, 100, "2,2", (), _phi_properties, sdp_heavy=True, min_factors=2),
    SuiteDefinition("bounds", "dimension bounds and ordering of min- and max-entropy",
                    1e-7, 100, "2,2", (), _bounds, sdp_heavy=True, min_factors=2),
    SuiteDefinition("continuity", "Lipschitz continuity of the min-entropy and its tightness",
                    1e-7, 200, "2,2", (), _continuity, sdp_heavy=True, min_factors=2),
    SuiteDefinition("smooth-continuity", "continuity of smooth entropies via an interpolated state",
                    TIER_LA, 50, "2,2", (0.05, 0.1), _smooth_continuity, sdp_heavy=True, min_factors=2),
    SuiteDefinition("concavity", "concavity of the max-entropy",
                    1e-6, 100, "2,2", (), _concavity, sdp_heavy=True, min_factors=2),
    SuiteDefinition("iso-invariance", "invariance of smooth entropies under local isometries",
                    1e-6, 50, "2,2", (0.0, 0.1), _iso_invariance, sdp_heavy=True, min_factors=2),
    SuiteDefinition("hmin-shape", "min-entropy is neither convex nor concave",
                    1e-6, 200, "2,2", (), _hmin_shape, sdp_heavy=True, min_factors=2,
                    finalize=_hmin_shape_finalize),
    SuiteDefinition("sdp-fixtures", "SDP engine on hand-built problems with known optima",
                    1e-7, 20, "2", (), _sdp_fixtures, sdp_heavy=True),
]}

DEFAULT_OPTIONS: Dict[str, Dict[str, Any]] = {
    "metric-axioms": {"extra_profiles": (("2", None), ("4", None), ("6", None))},
    "duality": {"oracle_trials": 20, "oracle_budget": 500, "extra_profiles": (("2,3,4", 20),)},
    "continuity": {"delta": 0.01},
    "smooth-continuity": {"deltas": (0.01, 0.05)},
}


def suite_stream_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def make_suite(name: str, trials: Optional[int] = None, seed: int = EntropyConfig.DEFAULT_SEED,
               dims: Optional[str] = None, epsilons: Optional[Sequence[float]] = None,
               options: Optional[Dict[str, Any]] = None) -> Suite:
    """Suite with the registry defaults filled in"""
    if name not in SUITES:
        raise PreconditionError(f"unknown suite {name!r}; known suites: {', '.join(SUITES)}")
    definition = SUITES[name]
    merged = dict(DEFAULT_OPTIONS.get(name, {}))
    merged.update(options or {})
    layout = SystemLayout.parse(dims or definition.dims)
    if len(layout.factors) < definition.min_factors:
        raise PreconditionError(f"suite {name} needs at least {definition.min_factors} factors, got {layout}")
    trials = definition.trials if trials is None else int(trials)
    if trials < 1:
        raise PreconditionError("trials must be positive")
    return Suite(name, trials, int(seed), layout,
                 tuple(float(e) for e in (definition.epsilons if epsilons is None else epsilons)), merged)


def _run_trial(definition: SuiteDefinition, suite: Suite, trial: int, settings: SolveSettings) -> TrialOutcome:
    rng = make_rng(suite.seed, suite_stream_key(suite.name), trial)
    ctx = TrialContext(suite, trial, rng, settings)
    try:
        return TrialOutcome(trial, definition.run(ctx))
    except NumericalFailure as e:
        return TrialOutcome(trial, [], "sdp", " ".join(e.message.split()))
    except EntropyError as e:
        return TrialOutcome(trial, [], e.reason, " ".join(e.message.split()))


def run_suite(suite: Suite, threads: Optional[int] = None, record_margins: bool = False,
              settings: SolveSettings = DEFAULT_SETTINGS) -> VerificationReport:
    """Run every trial (in parallel when threads > 1) and aggregate in trial order"""
    definition = SUITES.get(suite.name)
    if definition is None:
        raise PreconditionError(f"unknown suite {suite.name!r}")
    if definition.sdp_heavy and suite.dims.total_dim > EntropyConfig.MAX_SDP_DIMENSION:
        raise PreconditionError(
            f"suite {suite.name} is limited to total dimension {EntropyConfig.MAX_SDP_DIMENSION}, "
            f"got {suite.dims.total_dim}")
    for eps in suite.epsilons:
        if not 0.0 <= eps < 1.0:
            raise PreconditionError(f"epsilon {eps} outside [0, 1)")
    threads = threads or EntropyConfig.get_thread_count()

    started = time.perf_counter()
    _log.debug(f"suite {suite.name}: {suite.trials} trials on {threads} thread(s), dims {suite.dims}")
    if threads == 1:
        outcomes = [_run_trial(definition, suite, t, settings) for t in range(suite.trials)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(lambda t: _run_trial(definition, suite, t, settings), range(suite.trials)))
    report = _aggregate(definition, suite, outcomes, record_margins)
    report.wall_time = time.perf_counter() - started
    return report


def run_battery(names: Sequence[str], trials: Optional[int] = None, seed: int = EntropyConfig.DEFAULT_SEED,
                dims: Optional[str] = None, epsilons: Optional[Sequence[float]] = None,
                threads: Optional[int] = None, record_margins: bool = False,
                options: Optional[Dict[str, Any]] = None,
                settings: SolveSettings = DEFAULT_SETTINGS) -> List[VerificationReport]:
    """Run several suites in order; ``names`` may contain "all" """
    if "all" in names:
        names = list(SUITES)
    reports = []
    for name in names:
        suite = make_suite(name, trials, seed, dims, epsilons, options)
        report = run_suite(suite, threads, record_margins, settings)
        level = _log.success if report.status == "pass" else _log.warning
        level(f"{name}: status={report.status} failures={report.failures} "
              f"sdp_failures={report.sdp_failures} worst_slack={_fmt(report.worst_slack)}")
        reports.append(report)
    return reports


# =============================================================================
# NAMED SUITE ENTRY POINTS
# =============================================================================

def data_processing_suite(trials: Optional[int] = None, dims: Optional[str] = None,
                          epsilons: Optional[Sequence[float]] = None, seed: int = EntropyConfig.DEFAULT_SEED,
                          identity_channel: bool = False, threads: Optional[int] = None) -> VerificationReport:
    """Local channels on the conditioning system, partial trace included"""
    options = {"identity_channel": True} if identity_channel else None
    return run_suite(make_suite("data-proc-1", trials, seed, dims, epsilons, options), threads)


def measurement_suite(trials: Optional[int] = None, dims: Optional[str] = None,
                      epsilons: Optional[Sequence[float]] = None, seed: int = EntropyConfig.DEFAULT_SEED,
                      threads: Optional[int] = None) -> VerificationReport:
    return run_suite(make_suite("data-proc-2", trials, seed, dims, epsilons), threads)


def smooth_continuity_suite(trials: Optional[int] = None, dims: Optional[str] = None,
                            deltas: Optional[Sequence[float]] = None,
                            epsilons: Optional[Sequence[float]] = None, seed: int = EntropyConfig.DEFAULT_SEED,
                            threads: Optional[int] = None) -> VerificationReport:
    """``deltas`` are the mixing weights that put τ near ρ"""
    options = {"deltas": tuple(float(d) for d in deltas)} if deltas else None
    return run_suite(make_suite("smooth-continuity", trials, seed, dims, epsilons, options), threads)


def epsballineq_suite(trials: Optional[int] = None, dims: Optional[str] = None,
                      seed: int = EntropyConfig.DEFAULT_SEED, threads: Optional[int] = None) -> VerificationReport:
    return run_suite(make_suite("epsballineq", trials, seed, dims), threads)
