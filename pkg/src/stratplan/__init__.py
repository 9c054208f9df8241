"""Strategic planning for network drill-down investigations: a PDDL-subset
planner inside a plan, sense, replan loop, with tag-based flow composition
and simulated or trace-driven sensing."""
from .engine import (EngineConfig, InvestigationLog, PlanDiff, RoundEngine, diff_plans,
                     initial_world, run_investigation, sim_roots)
from .grounding import GroundAction, GroundTask, ground
from .netadmin import DomainConfig, causal_graph, generate_domain, generate_problem, sensing_manifest
from .pddl import Atom, ActionSchema, Domain, Problem, emit_domain, emit_problem, parse_domain, parse_problem
from .planner import Plan, ScheduledPlan, plan_metric, plan_optimal, plan_oracle, schedule_temporal
from .report import build_report
from .world import WorldState, restore, snapshot

__version__ = "0.1.0"

__all__ = [
    "ActionSchema",
    "Atom",
    "Domain",
    "DomainConfig",
    "EngineConfig",
    "GroundAction",
    "GroundTask",
    "InvestigationLog",
    "Plan",
    "PlanDiff",
    "Problem",
    "RoundEngine",
    "ScheduledPlan",
    "WorldState",
    "build_report",
    "causal_graph",
    "diff_plans",
    "emit_domain",
    "emit_problem",
    "generate_domain",
    "generate_problem",
    "ground",
    "initial_world",
    "parse_domain",
    "parse_problem",
    "plan_metric",
    "plan_optimal",
    "plan_oracle",
    "restore",
    "run_investigation",
    "schedule_temporal",
    "sensing_manifest",
    "sim_roots",
    "snapshot",
]
