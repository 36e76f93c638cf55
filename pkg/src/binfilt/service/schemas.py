"""Pydantic request/response models for the HTTP service.

The scenario payload mirrors the YAML scenario file one-to-one; numbers may
be given as floats, ints, or strings like "3/10" (exact mode reads decimal
strings and fractions exactly).
"""
from __future__ import annotations

from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, Field

NumberLike = Union[int, float, str]


class MarketBlock(BaseModel):
    mu: NumberLike
    sigma: NumberLike
    r: NumberLike
    s0: NumberLike


class PBlock(BaseModel):
    constant: Optional[NumberLike] = None
    values: Optional[List[NumberLike]] = None


class ScheduleBlock(BaseModel):
    T: int
    kind: str
    k: Optional[int] = None
    k0: Optional[int] = None
    k1: Optional[int] = None
    custom_maps: Optional[List[List[str]]] = None


class ClaimBlock(BaseModel):
    kind: str
    strike: Optional[NumberLike] = None
    payoff: Optional[Dict[str, NumberLike]] = None


class ArithmeticBlock(BaseModel):
    exact: bool = False
    check_tol: Optional[NumberLike] = None


class FreeValueBlock(BaseModel):
    policy: str = "half"
    table: Optional[Dict[str, NumberLike]] = None


class LimitsBlock(BaseModel):
    max_t: Optional[int] = None


class ScenarioPayload(BaseModel):
    market: MarketBlock
    p: PBlock
    schedule: ScheduleBlock
    claim: Optional[ClaimBlock] = None
    arithmetic: Optional[ArithmeticBlock] = None
    free_value: Optional[FreeValueBlock] = None
    limits: Optional[LimitsBlock] = None

    def to_doc(self) -> dict:
        return self.model_dump(exclude_none=True)


class ScenarioRequest(BaseModel):
    scenario: ScenarioPayload


class MartingaleRequest(BaseModel):
    scenario: ScenarioPayload
    process: str = Field(default="discounted_stock",
                         description="stock | bond | discounted_stock | custom")
    under: str = Field(default="P", description="P | Q")
    custom_rows: Optional[List[List[Any]]] = None


class ValidateResponse(BaseModel):
    legal: bool
    p_non_trivial: bool
    na_precondition: Dict[str, Any]
    schedule: Dict[str, Any]
    notes: List[str]


class RiskNeutralResponse(BaseModel):
    solution: Dict[str, Any]
    transition_check: Dict[str, Any]
    legality: Dict[str, Any]


class PriceResponse(BaseModel):
    claim: Dict[str, Any]
    price0_cash: float
    price0_discounted: float
    replication: Dict[str, Any]
    rows: List[Dict[str, Any]]


class ArbitrageResponse(BaseModel):
    band: float
    gain_drivers: Dict[str, float]
    found: bool
    certificate: Optional[Dict[str, Any]] = None
    note: Optional[str] = None


class MartingaleResponse(BaseModel):
    process: str
    under: str
    report: Dict[str, Any]
