"""Records of verified inequalities and fitted growth exponents."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

SCHEMA_VERSION = 1


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if hasattr(v, "tolist"):
        return _clean(v.tolist())
    return v


@dataclass
class BoundCheck:
    """One inequality ``lhs <= rhs`` checked up to ``tolerance``."""

    tag: str
    lhs: float
    rhs: float
    tolerance: float = 0.0
    inputs: dict = field(default_factory=dict)
    detail: dict = field(default_factory=dict)
    name: Optional[str] = None

    @property
    def margin(self):
        return self.rhs - self.lhs

    @property
    def passed(self):
        # nan margins fail
        return bool(self.margin >= -self.tolerance)

    def to_dict(self):
        return _clean(
            {
                "record": "BoundCheck",
                "schema_version": SCHEMA_VERSION,
                "name": self.name,
                "tag": self.tag,
                "lhs": float(self.lhs),
                "rhs": float(self.rhs),
                "margin": float(self.margin),
                "tolerance": float(self.tolerance),
                "passed": self.passed,
                "inputs": self.inputs,
                "detail": self.detail,
            }
        )


@dataclass
class GrowthReport:
    """Fitted log-log slope of sup|u| (or sup|D u|) against 1 + radius."""

    tag: str
    radii: List[float]
    sups: List[float]
    slope: float
    exponent: float
    slack: float
    sharp_exponent: Optional[float] = None
    order: int = 0
    inputs: dict = field(default_factory=dict)
    detail: dict = field(default_factory=dict)
    name: Optional[str] = None
    lower: Optional[float] = None

    @property
    def passed(self):
        if not math.isfinite(self.slope):
            return False
        ok = self.slope <= self.exponent + self.slack
        if self.lower is not None:
            ok = ok and self.slope >= self.lower
        return bool(ok)

    @property
    def passed_sharp(self):
        if self.sharp_exponent is None:
            return None
        return bool(math.isfinite(self.slope) and self.slope <= self.sharp_exponent + self.slack)

    def to_dict(self):
        return _clean(
            {
                "record": "GrowthReport",
                "schema_version": SCHEMA_VERSION,
                "name": self.name,
                "tag": self.tag,
                "order": self.order,
                "radii": list(self.radii),
                "sups": list(self.sups),
                "slope": float(self.slope),
                "exponent": float(self.exponent),
                "sharp_exponent": None if self.sharp_exponent is None else float(self.sharp_exponent),
                "slack": float(self.slack),
                "lower": self.lower,
                "passed": self.passed,
                "passed_sharp": self.passed_sharp,
                "inputs": self.inputs,
                "detail": self.detail,
            }
        )
