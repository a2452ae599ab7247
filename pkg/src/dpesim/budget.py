"""Collection-efficiency chains and filter-extinction arithmetic.

Stage efficiencies are fractions in (0, 1]; configuration files use percent
and are converted at the interface.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Stage:
    name: str
    efficiency: float  # fraction in (0, 1]

    def __post_init__(self):
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError(
                f"stage {self.name!r}: efficiency {self.efficiency} outside (0, 1]"
            )


@dataclass(frozen=True)
class EfficiencyChain:
    stages: tuple[Stage, ...]

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))

    @classmethod
    def from_percent(cls, items) -> "EfficiencyChain":
        """Build from (name, percent) pairs, as listed in a config file."""
        return cls(tuple(Stage(name, pct / 100.0) for name, pct in items))


def chain_efficiency(chain: EfficiencyChain) -> float:
    """Overall collection efficiency: the product of stage efficiencies."""
    if not chain.stages:
        raise ValueError("efficiency chain must not be empty")
    return float(np.prod([s.efficiency for s in chain.stages]))


def combined_extinction(ratios) -> float:
    """Overall laser extinction ratio of stacked filters: the product."""
    ratios = list(ratios)
    if not ratios:
        raise ValueError("need at least one extinction ratio")
    for r in ratios:
        if not 0.0 < r <= 1.0:
            raise ValueError(f"extinction ratio {r} outside (0, 1]")
    return float(np.prod(ratios))


def format_chain_table(chains: dict[str, EfficiencyChain]) -> str:
    """Plain-text table of one or more chains with their overall products."""
    names: list[str] = []
    for chain in chains.values():
        for s in chain.stages:
            if s.name not in names:
                names.append(s.name)
    cols = list(chains.keys())
    width = max((len(n) for n in names + ["overall"]), default=7) + 2
    header = "stage".ljust(width) + "".join(c.rjust(16) for c in cols)
    lines = [header, "-" * len(header)]
    for n in names:
        row = n.ljust(width)
        for c in cols:
            stage = next((s for s in chains[c].stages if s.name == n), None)
            row += (f"{stage.efficiency * 100:.1f}%" if stage else "-").rjust(16)
        lines.append(row)
    row = "overall".ljust(width)
    for c in cols:
        row += f"{chain_efficiency(chains[c]) * 100:.2f}%".rjust(16)
    lines.append(row)
    return "\n".join(lines) + "\n"
