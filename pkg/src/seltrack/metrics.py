"""Evaluation: extraction percentage (PDE), IDF1, and ID switches.

IDF1 follows the standard identity-measure construction: count, for every
(gt id, predicted id) pair, the frames where both are present with box
overlap above the matching threshold, find the identity bijection that
maximizes the total, and score the harmonic mean of identity precision
and recall. PDE is the share of high-confidence detections whose features
were actually extracted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from seltrack import assignment
from seltrack.geometry import BBox, iou
from seltrack.tracker import RunStats

Trajectories = dict[int, dict[int, BBox]]


@dataclass
class EvalReport:
    pde: float | None
    idf1: float
    id_switches: int
    idtp: int
    idfp: int
    idfn: int
    fetches: int = 0
    detections: int = 0

    def kv_lines(self) -> list[str]:
        pde = "n/a" if self.pde is None else f"{self.pde:.4f}"
        return [
            f"pde={pde}",
            f"idf1={self.idf1:.6f}",
            f"id_switches={self.id_switches}",
            f"idtp={self.idtp}",
            f"idfp={self.idfp}",
            f"idfn={self.idfn}",
            f"fetches={self.fetches}",
            f"detections={self.detections}",
        ]

    def table(self) -> str:
        pde = "n/a" if self.pde is None else f"{self.pde:.2f}"
        lines = [
            f"{'PDE (%)':<14}{pde:>10}",
            f"{'IDF1':<14}{self.idf1:>10.4f}",
            f"{'ID switches':<14}{self.id_switches:>10}",
            f"{'IDTP/IDFP/IDFN':<14}{self.idtp:>6}/{self.idfp}/{self.idfn}",
        ]
        return "\n".join(lines)


def pde(stats: RunStats) -> float | None:
    """Percentage of high-confidence detections that paid for an extraction."""
    if stats.high_detections == 0:
        return None
    return 100.0 * stats.fetches / stats.high_detections


def _overlap_counts(gt: Trajectories, pred: Trajectories, iou_match: float):
    """Frames of above-threshold co-occurrence for every (gt id, pred id)."""
    gt_ids = sorted(gt)
    pred_ids = sorted(pred)
    counts = np.zeros((len(gt_ids), len(pred_ids)), dtype=int)
    for gi, g in enumerate(gt_ids):
        for pj, p in enumerate(pred_ids):
            shared = gt[g].keys() & pred[p].keys()
            counts[gi, pj] = sum(
                1 for f in shared if iou(gt[g][f], pred[p][f]) >= iou_match
            )
    return gt_ids, pred_ids, counts


def idf1(gt: Trajectories, pred: Trajectories, iou_match: float = 0.5) -> EvalReport:
    """Identity F1 over the best global gt-to-prediction id mapping."""
    n_gt = sum(len(frames) for frames in gt.values())
    n_pred = sum(len(frames) for frames in pred.values())
    if n_gt == 0 and n_pred == 0:
        return EvalReport(None, 1.0, 0, 0, 0, 0)
    if n_gt == 0 or n_pred == 0:
        return EvalReport(None, 0.0, 0, 0, n_pred, n_gt)
    _, _, counts = _overlap_counts(gt, pred, iou_match)
    # maximize total co-occurrence: minimize its negation, everything feasible
    result = assignment.solve(-counts.astype(float), gate=0.0)
    idtp = int(sum(counts[r, c] for r, c in result.matches))
    idfp = n_pred - idtp
    idfn = n_gt - idtp
    score = 2.0 * idtp / (2.0 * idtp + idfp + idfn)
    return EvalReport(None, score, 0, idtp, idfp, idfn)


def id_switches(gt: Trajectories, pred: Trajectories, iou_match: float = 0.5) -> int:
    """Frames where a gt identity's matched prediction id changes."""
    frames = sorted(
        {f for traj in gt.values() for f in traj}
        | {f for traj in pred.values() for f in traj}
    )
    last_match: dict[int, int] = {}
    switches = 0
    for frame in frames:
        gt_here = [(g, traj[frame]) for g, traj in sorted(gt.items()) if frame in traj]
        pred_here = [(p, traj[frame]) for p, traj in sorted(pred.items()) if frame in traj]
        if not gt_here or not pred_here:
            continue
        cost = np.full((len(gt_here), len(pred_here)), np.inf)
        for i, (_, gb) in enumerate(gt_here):
            for j, (_, pb) in enumerate(pred_here):
                o = iou(gb, pb)
                if o >= iou_match:
                    cost[i, j] = 1.0 - o
        result = assignment.solve(cost, gate=1.0 - iou_match)
        for i, j in result.matches:
            g = gt_here[i][0]
            p = pred_here[j][0]
            if g in last_match and last_match[g] != p:
                switches += 1
            last_match[g] = p
    return switches


def evaluate(
    gt: Trajectories,
    pred: Trajectories,
    iou_match: float = 0.5,
    stats: RunStats | None = None,
) -> EvalReport:
    """Full report: IDF1 fields, switch count, and PDE when stats are given."""
    report = idf1(gt, pred, iou_match)
    report.id_switches = id_switches(gt, pred, iou_match)
    if stats is not None:
        report.pde = pde(stats)
        report.fetches = stats.fetches
        report.detections = stats.high_detections
    return report
