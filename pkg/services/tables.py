"""CSV artifacts: '#' provenance lines, then a header row and the data.

Artifacts carry no timestamps so identical runs give identical bytes.
"""

import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import pandas as pd

from models.ellipse import ContainmentReport
from models.hbar_estimate import HbarEstimate
from models.state import Checkpoint
from models.trajectory import ReachReport, Trajectory
from services.flowfield import stream

logger = logging.getLogger(__name__)


def write_table(path: str, frame: pd.DataFrame, provenance: Optional[Dict[str, Any]] = None) -> Path:
    """Write `frame` to `path` below one '# key=value' line per provenance entry."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8", newline="") as handle:
        for key, value in (provenance or {}).items():
            handle.write(f"# {key}={value}\n")
        frame.to_csv(handle, index=False, lineterminator="\n")
    logger.info(f"Wrote {len(frame)} rows to {target}")
    return target


def read_table(path: str) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def checkpoint_frame(checkpoints: Sequence[Checkpoint]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {"t": c.t, "mean_w": c.mean_w, "min_w": c.min_w, "max_w": c.max_w, "osc": c.osc}
            for c in checkpoints
        ],
        columns=["t", "mean_w", "min_w", "max_w", "osc"],
    )


def trajectory_frame(trajectory: Trajectory) -> pd.DataFrame:
    """Columns step, x1, x2, eta1, eta2, b, H; the last row holds the final point with no control."""
    points = trajectory.points
    steps = trajectory.steps
    rows: List[Dict[str, Any]] = []
    levels = stream(points)
    for k in range(len(points)):
        moved = k < steps
        rows.append(
            {
                "step": k,
                "x1": points[k, 0],
                "x2": points[k, 1],
                "eta1": trajectory.etas[k, 0] if moved else float("nan"),
                "eta2": trajectory.etas[k, 1] if moved else float("nan"),
                "b": int(trajectory.signs[k]) if moved else pd.NA,
                "H": levels[k],
            }
        )
    frame = pd.DataFrame(rows, columns=["step", "x1", "x2", "eta1", "eta2", "b", "H"])
    frame["b"] = frame["b"].astype("Int64")
    return frame


def reach_frame(reports: Iterable[ReachReport]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "start_x1": r.start[0],
                "start_x2": r.start[1],
                "target": r.target,
                "steps": r.steps_used,
                "time": r.time_used,
                "success": r.success,
                "adversary": r.adversary,
                "final_x1": r.final[0],
                "final_x2": r.final[1],
            }
            for r in reports
        ]
    )


def estimate_frame(estimates: Iterable[HbarEstimate]) -> pd.DataFrame:
    """Sweep table: p1, p2, A, d, method, hbar, err, grid, then the remaining discretization fields."""
    frame = pd.DataFrame([estimate.row() for estimate in estimates])
    leading = ["p1", "p2", "A", "d", "method", "hbar", "err", "grid"]
    return frame[leading + [column for column in frame.columns if column not in leading]]


def containment_frame(report: ContainmentReport) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {"t": row.t, "min_margin": row.min_margin, "violations": row.violations, "nodes_checked": row.nodes_checked}
            for row in report.rows
        ],
        columns=["t", "min_margin", "violations", "nodes_checked"],
    )
