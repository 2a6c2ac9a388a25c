"""Per-stage retention accounting."""
from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class StageCount:
    name: str
    in_count: int
    out_count: int
    unit: str = "item"

    def __post_init__(self):
        if self.in_count < 0 or self.out_count < 0:
            raise ValueError("counts must be non-negative")
        if self.out_count > self.in_count:
            raise ValueError(f"stage {self.name}: {self.out_count} out of {self.in_count} in")

    @property
    def rate(self):
        return self.out_count / self.in_count if self.in_count else 1.0


@dataclass(frozen=True)
class UnitChange:
    """A one-to-many step (e.g. clips to generated edits); not a retention rate."""

    name: str
    in_count: int
    out_count: int
    from_unit: str
    to_unit: str


@dataclass
class RetentionLedger:
    stages: list = field(default_factory=list)
    unit_changes: list = field(default_factory=list)

    def record(self, name, in_count, out_count, unit="item"):
        if any(s.name == name for s in self.stages):
            raise ValueError(f"stage {name!r} already recorded")
        self.stages.append(StageCount(name, int(in_count), int(out_count), unit))

    def record_unit_change(self, name, in_count, out_count, from_unit, to_unit):
        self.unit_changes.append(UnitChange(name, int(in_count), int(out_count), from_unit, to_unit))

    @property
    def rates(self):
        return [s.rate for s in self.stages]

    @property
    def cumulative_rate(self):
        return math.prod(self.rates)

    @classmethod
    def from_rates(cls, rates, base=1_000_000, units=None):
        """Ledger with the given stage rates (name -> rate), counts rounded from ``base``.

        Stored rates are exact fractions of the rounded counts; use
        :func:`product_of_rates` for the plain product of the given figures.
        """
        led = cls()
        n = base
        for i, (name, r) in enumerate(rates.items()):
            out = round(n * r)
            led.record(name, n, out, (units or {}).get(name, "item"))
            n = out
        return led

    def report(self, reference=None):
        """Text block of per-stage rates; ``reference`` maps stage names to printed rates."""
        reference = reference or {}
        lines = [f"{'stage':<28}{'unit':<10}{'in':>10}{'out':>10}{'rate':>9}"]
        for s in self.stages:
            ref = f"  (printed {100 * reference[s.name]:.1f}%)" if s.name in reference else ""
            lines.append(f"{s.name:<28}{s.unit:<10}{s.in_count:>10}{s.out_count:>10}{100 * s.rate:>8.1f}%{ref}")
        for u in self.unit_changes:
            lines.append(f"{u.name:<28}{u.from_unit + '->' + u.to_unit:<10}{u.in_count:>10}{u.out_count:>10}{'-':>9}")
        lines.append(f"cumulative retention (product of stage rates): {100 * self.cumulative_rate:.4f}%")
        return "\n".join(lines)


def product_of_rates(rates):
    return math.prod(rates)
