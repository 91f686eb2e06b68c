from dataclasses import dataclass, field
from typing import Dict, List, Optional

from models.config import Command
from models.ellipse import ContainmentReport
from models.hbar_estimate import GrowthLawFit, HbarEstimate
from models.trajectory import ReachReport


@dataclass
class RunOutcome:
    """What one experiment produced, for the audit log, digest and notification.

    Attributes:
        command: The experiment that ran.
        outputs: Paths of the artifacts written.
        estimates: H estimates, if any.
        reaches: Reach measurements, if any.
        containment: Appendix report, if any.
        growth_law: Growth-law fit of a sweep, when enough amplitudes were given.
        notes: Extra scalar results (final time, margins, disagreement).
    """

    command: Command
    outputs: List[str] = field(default_factory=list)
    estimates: List[HbarEstimate] = field(default_factory=list)
    reaches: List[ReachReport] = field(default_factory=list)
    containment: Optional[ContainmentReport] = None
    growth_law: Optional[GrowthLawFit] = None
    notes: Dict[str, float] = field(default_factory=dict)

    @property
    def has_results(self) -> bool:
        return bool(self.estimates or self.reaches or self.containment or self.notes)
