"""Scenario ingestion: one structured document describing a full run.

A scenario fixes the market parameters, the sequence of up-move
probabilities, the filtration schedule, optionally a claim, the arithmetic
mode with its tolerances, and the free-value policy for unconstrained kernel
entries. Files are YAML; the HTTP service accepts the same structure as JSON.
Every library-level invariant is re-validated here so errors name the field
that caused them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .binword import DEFAULT_SCENARIO_LEVEL_LIMIT, MAX_LEVEL
from .errors import BinfiltError, ScenarioError
from .filtration import (
    FiltrationSchedule,
    classical_schedule,
    custom_schedule,
    drop_k_schedule,
    elderly_schedule,
)
from .market import MarketParams, bond_process, stock_process
from .measure import ProbSequence
from .numerics import Tolerances
from .riskneutral import FreeValuePolicy
from .valuation import Claim, call_claim, custom_claim, digital_claim, put_claim


@dataclass(frozen=True)
class Scenario:
    params: MarketParams
    prob_seq: ProbSequence
    schedule: FiltrationSchedule
    claim_spec: dict | None
    exact: bool
    tolerances: Tolerances
    free_policy: FreeValuePolicy
    max_level: int
    raw: dict = field(default_factory=dict, compare=False)

    def claim(self, stock) -> Claim:
        if self.claim_spec is None:
            raise ScenarioError("scenario has no 'claim' block")
        kind = self.claim_spec["kind"]
        if kind == "call":
            return call_claim(stock, self.claim_spec["strike"], self.exact)
        if kind == "put":
            return put_claim(stock, self.claim_spec["strike"], self.exact)
        if kind == "digital":
            return digital_claim(stock, self.claim_spec["strike"], self.exact)
        if kind == "custom":
            return custom_claim(self.schedule.horizon, self.claim_spec["payoff"], self.exact)
        raise ScenarioError(f"claim.kind: unknown kind {kind!r}")

    def stock_and_bond(self):
        return stock_process(self.params, self.schedule), bond_process(self.params, self.schedule)


def _require(block: dict, key: str, where: str):
    if key not in block:
        raise ScenarioError(f"{where}: missing required field {key!r}")
    return block[key]


def parse_scenario(doc: dict, overrides: dict | None = None) -> Scenario:
    """Build a validated Scenario from a plain mapping (YAML/JSON payload).

    ``overrides`` may carry CLI-level settings: exact, check_tol, free_value.
    """
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a mapping")
    overrides = overrides or {}

    arith = doc.get("arithmetic", {}) or {}
    exact = bool(overrides.get("exact", arith.get("exact", False)))
    check_tol = overrides.get("check_tol", arith.get("check_tol"))
    tolerances = Tolerances.for_mode(exact, check_tol)

    market = _require(doc, "market", "scenario")
    try:
        params = MarketParams.create(
            _require(market, "mu", "market"),
            _require(market, "sigma", "market"),
            _require(market, "r", "market"),
            _require(market, "s0", "market"),
            exact,
        )
    except BinfiltError as exc:
        raise ScenarioError(f"market: {exc}") from exc

    sched_block = _require(doc, "schedule", "scenario")
    horizon = int(_require(sched_block, "T", "schedule"))
    limits = doc.get("limits", {}) or {}
    max_level = int(limits.get("max_t", DEFAULT_SCENARIO_LEVEL_LIMIT))
    if max_level > MAX_LEVEL:
        raise ScenarioError(f"limits.max_t: cannot exceed the hard bound {MAX_LEVEL}")
    if horizon > max_level:
        raise ScenarioError(
            f"schedule.T: horizon {horizon} exceeds the scenario limit {max_level} "
            f"(raise limits.max_t up to {MAX_LEVEL} to allow it)"
        )

    p_block = _require(doc, "p", "scenario")
    try:
        if "values" in p_block:
            values = list(p_block["values"])
            if len(values) < horizon:
                raise ScenarioError(
                    f"p.values: {len(values)} entries but schedule.T = {horizon}"
                )
            prob_seq = ProbSequence.from_values(values, exact)
        elif "constant" in p_block:
            prob_seq = ProbSequence.constant(p_block["constant"], horizon, exact)
        else:
            raise ScenarioError("p: need either 'values' or 'constant'")
    except BinfiltError as exc:
        raise ScenarioError(f"p: {exc}") from exc

    kind = _require(sched_block, "kind", "schedule")
    try:
        if kind == "classical":
            schedule = classical_schedule(horizon)
        elif kind == "drop_k":
            schedule = drop_k_schedule(horizon, int(_require(sched_block, "k", "schedule")))
        elif kind == "elderly":
            schedule = elderly_schedule(
                horizon,
                int(_require(sched_block, "k0", "schedule")),
                int(_require(sched_block, "k1", "schedule")),
            )
        elif kind == "custom":
            schedule = custom_schedule(
                horizon, _require(sched_block, "custom_maps", "schedule")
            )
        else:
            raise ScenarioError(f"schedule.kind: unknown kind {kind!r}")
    except BinfiltError as exc:
        raise ScenarioError(f"schedule: {exc}") from exc

    claim_spec = doc.get("claim")
    if claim_spec is not None:
        ck = _require(claim_spec, "kind", "claim")
        if ck in ("call", "put", "digital"):
            _require(claim_spec, "strike", "claim")
        elif ck == "custom":
            _require(claim_spec, "payoff", "claim")
        else:
            raise ScenarioError(f"claim.kind: unknown kind {ck!r}")

    fv = overrides.get("free_value")
    if fv is None:
        fv_block = doc.get("free_value", {}) or {}
        name = fv_block.get("policy", "half")
        if name == "table":
            policy = FreeValuePolicy.from_table(fv_block.get("table", {}))
        else:
            policy = FreeValuePolicy.constant(name)
    else:
        policy = fv

    return Scenario(params, prob_seq, schedule, claim_spec, exact,
                    tolerances, policy, max_level, doc)


def load_scenario(path: str | Path, overrides: dict | None = None) -> Scenario:
    p = Path(path)
    if not p.exists():
        raise ScenarioError(f"scenario file not found: {p}")
    try:
        doc = yaml.safe_load(p.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{p}: not valid YAML: {exc}") from exc
    try:
        return parse_scenario(doc, overrides)
    except ScenarioError as exc:
        raise ScenarioError(f"{p}: {exc}") from exc
