"""Verdict records shared by the analyses and the JSON/human reporters."""

from __future__ import annotations

from dataclasses import dataclass, field

PASS, FAIL, UNKNOWN = "pass", "fail", "unknown"


@dataclass(frozen=True)
class TraceStep:
    transition: str
    time: int | None = None

    def to_json(self) -> dict:
        d = {"transition": self.transition}
        if self.time is not None:
            d["time"] = self.time
        return d


@dataclass
class Verdict:
    check: str
    result: str
    witness: list[TraceStep] | None = None
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.result == PASS

    def to_json(self) -> dict:
        d = {"check": self.check, "result": self.result}
        if self.witness is not None:
            d["witness"] = [s.to_json() for s in self.witness]
        d["details"] = self.details
        return d


def tristate(result: str) -> str:
    """Map pass/fail/unknown onto the yes/no/unknown vocabulary."""
    return {PASS: "yes", FAIL: "no", UNKNOWN: "unknown"}[result]
