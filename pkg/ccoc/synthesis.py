"""
Chance-Constrained Policy Synthesis

Pipeline from a finite MDP and a trajectory specification to the optimal
mixed policy:

    augment -> feasibility check -> LP1 (lambda*) -> LP2 (value tables)
    -> greedy action sets -> cheapest / safest lambda-optimal policies
    -> mixing probability

The mixed policy picks the safest lambda-optimal policy with probability
p_v and the cheapest one otherwise, once at k = 0.
"""

import time
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
from loguru import logger

from .core.augment import AugmentedMdp, augment
from .core.dp import (
    DEFAULT_EPS_OPT,
    cheapest_lambda_optimal,
    dual_dp,
    dual_value,
    eval_cost,
    eval_safety,
    greedy_sets,
    max_safety,
    optimal_cost,
    safest_lambda_optimal,
)
from .core.errors import InfeasibleError, InfeasiblePair, LpFailure, ValidationError
from .core.mdp import (
    DetPolicy,
    FiniteMdp,
    MixedPolicy,
    SafetySpec,
    SpecKind,
    ValueTable,
    validate_mdp,
    validate_spec,
)
from .lp import SolverConfig, build_lp1, build_lp2, extract_value_tables, solve_lp
from .lp.builders import CAP_WARNING_FRACTION


@dataclass(frozen=True)
class SynthesisConfig:
    """Tolerances and switches for `synthesize`."""

    lambda_max: float = 1e7
    eps_opt: float = DEFAULT_EPS_OPT
    feas_tol: float = 1e-9
    nu_weight: float = 1.0
    safety_slack: float = 1e-9
    via_dp: bool = False
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.lambda_max <= 0:
            raise ValidationError(f"lambda_max must be positive, got {self.lambda_max}")
        if self.eps_opt < 0 or self.safety_slack < 0:
            raise ValidationError("tolerances must be non-negative")

    @classmethod
    def from_settings(cls, **overrides) -> "SynthesisConfig":
        """Defaults seeded from environment settings; keyword overrides win."""
        from .config import settings

        values: Dict[str, Any] = {"lambda_max": settings.LAMBDA_MAX}
        values.update({k: v for k, v in overrides.items() if v is not None})
        if "solver" not in values:
            values["solver"] = SolverConfig.from_settings(
                feas_tol=values.get("feas_tol", cls.feas_tol)
            )
        return cls(**values)


@dataclass(frozen=True, eq=False)
class PolicyReport:
    """A deterministic policy with its model cost and safety at x~_0."""

    policy: DetPolicy
    cost: float
    safety: float

    def to_dict(self) -> Dict[str, Any]:
        return {"cost": self.cost, "safety": self.safety, "actions": self.policy.to_list()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PolicyReport":
        return cls(DetPolicy(np.asarray(data["actions"])), float(data["cost"]), float(data["safety"]))


@dataclass(frozen=True, eq=False)
class SynthesisResult:
    kind: SpecKind
    alpha: float
    lambda_star: float
    lp1_objective: float
    lp1_table: ValueTable
    lp2_table: ValueTable
    pi_c: PolicyReport
    pi_v: PolicyReport
    p_v: float
    mixed: MixedPolicy
    max_safety: float
    cheapest: PolicyReport
    safest: PolicyReport
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def v_c(self) -> float:
        return self.pi_c.safety

    @property
    def v_v(self) -> float:
        return self.pi_v.safety

    @property
    def cost_c(self) -> float:
        return self.pi_c.cost

    @property
    def cost_v(self) -> float:
        return self.pi_v.cost

    @property
    def safest_cost(self) -> float:
        return self.safest.cost

    def to_dict(self) -> Dict[str, Any]:
        cost, safety = mixed_cost_safety(self)
        return {
            "kind": self.kind.value,
            "alpha": self.alpha,
            "lambda_star": self.lambda_star,
            "lp1_objective": self.lp1_objective,
            "p_v": self.p_v,
            "v_c": self.v_c,
            "v_v": self.v_v,
            "cost_c": self.cost_c,
            "cost_v": self.cost_v,
            "mixed_cost": cost,
            "mixed_safety": safety,
            "max_safety": self.max_safety,
            "safest_cost": self.safest_cost,
            "policies": {
                "pi_c_lambda": self.pi_c.to_dict(),
                "pi_v_lambda": self.pi_v.to_dict(),
                "pi_c": self.cheapest.to_dict(),
                "pi_v": self.safest.to_dict(),
            },
            "tables": {
                "lp1": self.lp1_table.values.tolist(),
                "lp2": self.lp2_table.values.tolist(),
            },
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SynthesisResult":
        policies = data["policies"]
        pi_c = PolicyReport.from_dict(policies["pi_c_lambda"])
        pi_v = PolicyReport.from_dict(policies["pi_v_lambda"])
        p_v = float(data["p_v"])
        return cls(
            kind=SpecKind.parse(data["kind"]),
            alpha=float(data["alpha"]),
            lambda_star=float(data["lambda_star"]),
            lp1_objective=float(data["lp1_objective"]),
            lp1_table=ValueTable(np.asarray(data["tables"]["lp1"])),
            lp2_table=ValueTable(np.asarray(data["tables"]["lp2"])),
            pi_c=pi_c,
            pi_v=pi_v,
            p_v=p_v,
            mixed=mixed_policy(pi_c.policy, pi_v.policy, p_v),
            max_safety=float(data["max_safety"]),
            cheapest=PolicyReport.from_dict(policies["pi_c"]),
            safest=PolicyReport.from_dict(policies["pi_v"]),
            diagnostics=dict(data.get("diagnostics", {})),
        )


def _report(am: AugmentedMdp, policy: DetPolicy) -> PolicyReport:
    x0 = am.initial_augmented
    return PolicyReport(
        policy=policy,
        cost=eval_cost(am, policy).at(0, x0),
        safety=eval_safety(am, policy).at(0, x0),
    )


def check_feasibility(am: AugmentedMdp, alpha: float) -> Tuple[float, float]:
    """
    Maximal achievable safety at x~_0 and the cost of the safest policy.

    Feasible iff the first value is at least alpha.
    """
    table, safest = max_safety(am)
    best = table.at(0, am.initial_augmented)
    cost = eval_cost(am, safest).at(0, am.initial_augmented)
    logger.info(f"Maximal safety {best:.6f} (cost {cost:.6f}) against alpha={alpha}")
    return best, cost


def mix_probability(alpha: float, v_c: float, v_v: float, slack: float = 1e-9) -> float:
    """
    Probability of selecting the safest lambda-optimal policy.

    Raises:
        InfeasiblePair: v_v < alpha - slack
    """
    if v_v < alpha - slack:
        raise InfeasiblePair(
            f"safest lambda-optimal policy reaches {v_v:.9f} < alpha={alpha:.9f}"
        )
    if v_c >= alpha:
        return 0.0
    if v_v - v_c <= slack:
        return 1.0
    return float(np.clip((alpha - v_c) / (v_v - v_c), 0.0, 1.0))


def mixed_policy(pi_c: DetPolicy, pi_v: DetPolicy, p_v: float) -> MixedPolicy:
    if p_v <= 0.0:
        return MixedPolicy.pure(pi_c)
    if p_v >= 1.0:
        return MixedPolicy.pure(pi_v)
    return MixedPolicy(((pi_c, 1.0 - p_v), (pi_v, p_v)))


def apply_mixed(mp: MixedPolicy, rng_seed: int) -> DetPolicy:
    """Draw the component executed for one run; deterministic per seed."""
    draw = np.random.default_rng(rng_seed).random()
    cumulative = np.cumsum(mp.probabilities)
    index = int(np.searchsorted(cumulative, draw, side="right"))
    return mp.policies[min(index, len(mp.policies) - 1)]


def mixed_cost_safety(result: SynthesisResult) -> Tuple[float, float]:
    """Model cost and safety of the mixed policy at x~_0."""
    p = result.p_v
    cost = p * result.cost_v + (1.0 - p) * result.cost_c
    safety = p * result.v_v + (1.0 - p) * result.v_c
    return cost, safety


def _solve_value_lp(lp, config: SynthesisConfig, label: str):
    solution = solve_lp(lp.program, config.solver)
    if not solution.is_optimal:
        raise LpFailure(f"{label} ended with status {solution.status.value}")
    return solution


def synthesize(
    m: FiniteMdp, spec: SafetySpec, cfg: Optional[SynthesisConfig] = None
) -> SynthesisResult:
    """
    Compute the optimal mixed policy for min cost s.t. P(x_{0:N} in H) >= alpha.

    Raises:
        InfeasibleError: alpha exceeds the maximal achievable safety
        LpFailure: an LP did not solve to optimality
    """
    cfg = cfg or SynthesisConfig()
    timings: Dict[str, float] = {}
    validate_mdp(m)
    spec = validate_spec(m, spec)
    alpha = spec.alpha

    started = time.perf_counter()
    am = augment(m, spec)
    timings["augment"] = time.perf_counter() - started

    started = time.perf_counter()
    top, safest_cost = check_feasibility(am, alpha)
    timings["feasibility"] = time.perf_counter() - started
    if top < alpha - cfg.safety_slack:
        raise InfeasibleError(top, alpha)

    started = time.perf_counter()
    lp1 = build_lp1(am, alpha, cfg.lambda_max)
    solution1 = _solve_value_lp(lp1, cfg, "LP1")
    lambda_star, lp1_table = extract_value_tables(solution1, lp1)
    timings["lp1"] = time.perf_counter() - started
    logger.info(f"lambda* = {lambda_star:.9g}, LP1 objective {solution1.objective:.9g}")

    started = time.perf_counter()
    diagnostics: Dict[str, Any] = {
        "lp1_iterations": solution1.iterations,
        "lp1_backend": solution1.backend,
        "lp1_rows": lp1.program.n_constraints,
        "lp1_vars": lp1.program.n_vars,
    }
    if cfg.via_dp:
        lp2_table, sets = dual_dp(am, lambda_star, alpha, cfg.eps_opt)
        diagnostics["lp2_iterations"] = 0
        diagnostics["lp2_backend"] = "dp"
    else:
        lp2 = build_lp2(am, alpha, lambda_star, cfg.nu_weight)
        solution2 = _solve_value_lp(lp2, cfg, "LP2")
        _, lp2_table = extract_value_tables(solution2, lp2)
        sets = greedy_sets(am, lp2_table, cfg.eps_opt)
        diagnostics["lp2_iterations"] = solution2.iterations
        diagnostics["lp2_backend"] = solution2.backend
    timings["lp2"] = time.perf_counter() - started

    started = time.perf_counter()
    pi_c, _ = cheapest_lambda_optimal(am, sets)
    pi_v, _ = safest_lambda_optimal(am, sets)
    report_c = _report(am, pi_c)
    report_v = _report(am, pi_v)
    p_v = mix_probability(alpha, report_c.safety, report_v.safety, cfg.safety_slack)

    _, cheapest_policy = optimal_cost(am)
    _, safest_policy = max_safety(am)
    cheapest = _report(am, cheapest_policy)
    safest = PolicyReport(safest_policy, safest_cost, top)
    timings["policies"] = time.perf_counter() - started

    dual_at_star = dual_value(am, lambda_star, alpha)
    diagnostics.update(
        {
            "dual_value": dual_at_star,
            "dual_gap": abs(dual_at_star - solution1.objective),
            "lambda_at_cap": lambda_star >= cfg.lambda_max * (1.0 - CAP_WARNING_FRACTION),
            "timings": timings,
        }
    )
    result = SynthesisResult(
        kind=spec.kind,
        alpha=alpha,
        lambda_star=lambda_star,
        lp1_objective=solution1.objective,
        lp1_table=lp1_table,
        lp2_table=lp2_table,
        pi_c=report_c,
        pi_v=report_v,
        p_v=p_v,
        mixed=mixed_policy(pi_c, pi_v, p_v),
        max_safety=top,
        cheapest=cheapest,
        safest=safest,
        diagnostics=diagnostics,
    )
    cost, safety = mixed_cost_safety(result)
    logger.info(
        f"p_v = {p_v:.6f}: cheapest ({report_c.cost:.4f}, {report_c.safety:.6f}), "
        f"safest ({report_v.cost:.4f}, {report_v.safety:.6f}), mixed ({cost:.4f}, {safety:.6f})"
    )
    return result
