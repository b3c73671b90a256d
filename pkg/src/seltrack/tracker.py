"""Per-sequence tracking pipeline with selective feature extraction.

Each frame: predict all tracks, split detections by confidence, classify
the high-confidence ones as risky/non-risky against the confirmed tracks,
fetch features only for the risky ones (non-risky reuse their candidate's
embedding), associate, then update motion, appearance, and lifecycle.
"""

from __future__ import annotations

import copy
import time
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from seltrack import appearance, assignment, gating, motion
from seltrack.appearance import EmaState, cosine_distance
from seltrack.assignment import INFEASIBLE
from seltrack.gating import GateConfig, RiskLabel, SATURATED_COST
from seltrack.geometry import BBox, iou
from seltrack.motion import KalmanState

TENTATIVE = "tentative"
CONFIRMED = "confirmed"
DELETED = "deleted"

STRATEGY_CASCADE = "cascade"
STRATEGY_FUSED = "fused"

EMIT_KALMAN = "kalman"
EMIT_DETECTION = "detection"


@dataclass
class Detection:
    """One per-frame observation; `index` is its position within the frame."""

    frame: int
    index: int
    box: BBox
    confidence: float
    feature: np.ndarray | None = None

    def __post_init__(self):
        if self.frame < 1:
            raise ValueError(f"frame must be >= 1, got {self.frame}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence out of range: {self.confidence!r}")
        if self.feature is not None:
            self.feature = appearance.feature(self.feature)


@dataclass
class MatchConfig:
    strategy: str = STRATEGY_CASCADE
    appearance_gate: float = 0.4
    iou_gate: float = 0.3
    fused_weight: float = 1.0
    conf_high: float = 0.6
    byte_low: bool | None = None  # default: off for cascade, on for fused
    min_hits: int = 1
    max_age: int = 30
    ema_alpha: float = 0.9
    emit: str = EMIT_KALMAN

    def __post_init__(self):
        if self.strategy not in (STRATEGY_CASCADE, STRATEGY_FUSED):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.byte_low is None:
            self.byte_low = self.strategy == STRATEGY_FUSED
        if not 0.0 <= self.appearance_gate <= 2.0:
            raise ValueError("appearance_gate must be in [0, 2]")
        if not 0.0 <= self.iou_gate <= 1.0:
            raise ValueError("iou_gate must be in [0, 1]")
        if self.fused_weight < 0:
            raise ValueError("fused_weight must be non-negative")
        if not 0.0 <= self.conf_high <= 1.0:
            raise ValueError("conf_high must be in [0, 1]")
        if self.min_hits < 1:
            raise ValueError("min_hits must be >= 1")
        if self.max_age < 1:
            raise ValueError("max_age must be >= 1")
        if not 0.0 < self.ema_alpha < 1.0:
            raise ValueError("ema_alpha must be in (0, 1)")
        if self.emit not in (EMIT_KALMAN, EMIT_DETECTION):
            raise ValueError(f"unknown emit convention {self.emit!r}")


class FeatureProvider(Protocol):
    """Source of appearance embeddings, deterministic per (frame, index)."""

    def fetch(self, frame: int, index: int) -> np.ndarray | None: ...


class NullFeatureProvider:
    """Never has features; turns any configuration into IoU-only tracking."""

    def fetch(self, frame: int, index: int) -> np.ndarray | None:
        return None


class MappingFeatureProvider:
    """Features from an in-memory {(frame, index): vector} mapping."""

    def __init__(self, records):
        self._records = dict(records)

    def fetch(self, frame: int, index: int) -> np.ndarray | None:
        v = self._records.get((frame, index))
        return None if v is None else appearance.feature(v)


class DetectionFeatureProvider:
    """Serves the features attached to Detection objects."""

    def __init__(self, frames: dict[int, list[Detection]]):
        self._records = {
            (d.frame, d.index): d.feature
            for dets in frames.values()
            for d in dets
            if d.feature is not None
        }

    def fetch(self, frame: int, index: int) -> np.ndarray | None:
        return self._records.get((frame, index))


class CountingProvider:
    """Wraps a provider and counts every fetch — the PDE numerator."""

    def __init__(self, inner: FeatureProvider):
        self.inner = inner
        self.fetches = 0

    def fetch(self, frame: int, index: int) -> np.ndarray | None:
        self.fetches += 1
        return self.inner.fetch(frame, index)


@dataclass
class Track:
    id: int
    kalman: KalmanState
    ema: EmaState | None
    status: str
    hits: int
    age: int
    time_since_update: int


@dataclass
class TrackOutput:
    """All emitted (frame, track id, box) rows of a run."""

    rows: list[tuple[int, int, BBox]] = field(default_factory=list)

    def trajectories(self) -> dict[int, dict[int, BBox]]:
        out: dict[int, dict[int, BBox]] = {}
        for frame, tid, box in self.rows:
            out.setdefault(tid, {})[frame] = box
        return out


@dataclass
class RunStats:
    fetches: int = 0
    detections: int = 0
    high_detections: int = 0
    frames: int = 0
    frame_seconds: list[float] = field(default_factory=list)


class SelectiveTracker:
    """Stateful per-sequence tracker; frames must arrive in increasing order."""

    def __init__(
        self,
        provider: FeatureProvider,
        gate: GateConfig | None = None,
        match: MatchConfig | None = None,
    ):
        self.provider = CountingProvider(provider)
        self.gate = gate or GateConfig()
        self.match = match or MatchConfig()
        self.tracks: list[Track] = []
        self.last_frame = 0
        self._next_id = 1
        self.stats = RunStats()

    # -- lifecycle helpers -------------------------------------------------

    def _live(self) -> list[Track]:
        return [t for t in self.tracks if t.status != DELETED]

    def _spawn(self, det: Detection, feat: np.ndarray | None) -> Track:
        ema = None if feat is None else appearance.init_ema(feat, self.match.ema_alpha)
        status = CONFIRMED if self.match.min_hits <= 1 else TENTATIVE
        t = Track(
            id=self._next_id,
            kalman=motion.initiate(det.box),
            ema=ema,
            status=status,
            hits=1,
            age=0,
            time_since_update=0,
        )
        self._next_id += 1
        self.tracks.append(t)
        return t

    def _mark_matched(self, track: Track, det: Detection, fresh: np.ndarray | None):
        track.kalman = motion.update(track.kalman, det.box)
        if fresh is not None:
            if track.ema is None:
                track.ema = appearance.init_ema(fresh, self.match.ema_alpha)
            else:
                track.ema = appearance.ema_update(track.ema, fresh)
        elif track.ema is not None:
            track.ema = appearance.mark_skipped(track.ema)
        track.hits += 1
        track.time_since_update = 0
        if track.status == TENTATIVE and track.hits >= self.match.min_hits:
            track.status = CONFIRMED

    # -- matching stages ---------------------------------------------------

    def _iou_costs(self, tracks: list[Track], dets: list[Detection]) -> np.ndarray:
        cost = np.full((len(tracks), len(dets)), INFEASIBLE)
        for i, t in enumerate(tracks):
            tb = motion.state_to_box(t.kalman)
            for j, d in enumerate(dets):
                o = iou(tb, d.box)
                if o >= self.match.iou_gate:
                    cost[i, j] = 1.0 - o
        return cost

    def _appearance_stage(self, tracks, dets, features, copies, saturated):
        """Cascade stage 1: appearance-only assignment over confirmed tracks."""
        rows = [i for i, t in enumerate(tracks) if t.status == CONFIRMED and t.ema is not None]
        cols = [
            j
            for j in range(len(dets))
            if features[j] is not None or j in copies or j in saturated
        ]
        if not rows or not cols:
            return [], list(range(len(tracks))), list(range(len(dets)))
        row_tracks = [tracks[i].ema for i in rows]
        col_feats = []
        col_copies = {}
        for k, j in enumerate(cols):
            if j in saturated:
                col_feats.append(None)
            elif features[j] is not None:
                col_feats.append(features[j])
            else:
                col_feats.append(None)
                # candidate is an index into the confirmed-track list used by
                # classify; remap it into this stage's row space
                col_copies[k] = rows.index(copies[j])
        cost = np.zeros((len(rows), len(cols)))
        for k, j in enumerate(cols):
            if j in saturated:
                # base-gate semantics: unbounded distance to every track, so
                # the detection can only resolve in the IoU stage
                cost[:, k] = INFEASIBLE
            elif col_feats[k] is not None:
                for r in range(len(rows)):
                    cost[r, k] = cosine_distance(row_tracks[r].embedding, col_feats[k])
            else:
                c = col_copies[k]
                for r in range(len(rows)):
                    cost[r, k] = (
                        0.0
                        if r == c
                        else cosine_distance(
                            row_tracks[r].embedding, row_tracks[c].embedding
                        )
                    )
        result = assignment.solve(cost, self.match.appearance_gate)
        matches = [(rows[r], cols[c]) for r, c in result.matches]
        matched_t = {r for r, _ in matches}
        matched_d = {c for _, c in matches}
        unmatched_t = [i for i in range(len(tracks)) if i not in matched_t]
        unmatched_d = [j for j in range(len(dets)) if j not in matched_d]
        return matches, unmatched_t, unmatched_d

    def _fused_stage(self, tracks, dets, features, copies, saturated):
        """Single-stage assignment on weighted appearance plus IoU cost."""
        if not tracks or not dets:
            return [], list(range(len(tracks))), list(range(len(dets)))
        cost = self._iou_costs(tracks, dets)
        w = self.match.fused_weight
        for i, t in enumerate(tracks):
            for j in range(len(dets)):
                if not np.isfinite(cost[i, j]):
                    continue
                if j in saturated:
                    cost[i, j] += w * SATURATED_COST
                elif features[j] is not None and t.ema is not None:
                    cost[i, j] += w * cosine_distance(t.ema.embedding, features[j])
                elif j in copies and t.ema is not None:
                    c = copies[j]
                    ref = tracks[c].ema
                    if ref is not None:
                        d = 0.0 if i == c else cosine_distance(t.ema.embedding, ref.embedding)
                        cost[i, j] += w * d
        gate = w * SATURATED_COST + (1.0 - self.match.iou_gate)
        result = assignment.solve(cost, gate)
        matched_t = {r for r, _ in result.matches}
        matched_d = {c for _, c in result.matches}
        return (
            result.matches,
            [i for i in range(len(tracks)) if i not in matched_t],
            [j for j in range(len(dets)) if j not in matched_d],
        )

    def _iou_stage(self, tracks, track_idx, dets, det_idx):
        """IoU-only assignment over the given track/detection subsets."""
        if not track_idx or not det_idx:
            return [], list(track_idx), list(det_idx)
        sub_tracks = [tracks[i] for i in track_idx]
        sub_dets = [dets[j] for j in det_idx]
        cost = self._iou_costs(sub_tracks, sub_dets)
        result = assignment.solve(cost, 1.0 - self.match.iou_gate)
        matches = [(track_idx[r], det_idx[c]) for r, c in result.matches]
        matched_t = {r for r, _ in matches}
        matched_d = {c for _, c in matches}
        return (
            matches,
            [i for i in track_idx if i not in matched_t],
            [j for j in det_idx if j not in matched_d],
        )

    # -- the frame step ----------------------------------------------------

    def step(self, frame: int, detections: list[Detection]) -> list[tuple[int, BBox]]:
        """Process one frame and return (track id, box) for tracks matched now."""
        if frame <= self.last_frame:
            raise ValueError(
                f"frames must be strictly increasing: got {frame} after {self.last_frame}"
            )
        for d in detections:
            if d.frame != frame:
                raise ValueError(f"detection frame {d.frame} does not match step frame {frame}")
        if len({d.index for d in detections}) != len(detections):
            raise ValueError(f"duplicate detection indices in frame {frame}")

        snapshot = (
            [copy.copy(t) for t in self.tracks],
            self._next_id,
            self.last_frame,
            self.provider.fetches,
            self.stats.high_detections,
        )
        started = time.perf_counter()
        try:
            emitted = self._step_inner(frame, detections)
        except Exception:
            # the frame never happened: restore track state and counters
            (
                self.tracks,
                self._next_id,
                self.last_frame,
                self.provider.fetches,
                self.stats.high_detections,
            ) = snapshot
            raise
        self.stats.frames += 1
        self.stats.detections += len(detections)
        self.stats.fetches = self.provider.fetches
        self.stats.frame_seconds.append(time.perf_counter() - started)
        return emitted

    def _step_inner(self, frame, detections):
        m = self.match

        # 1. motion prediction for every live track
        live = self._live()
        for t in live:
            t.kalman = motion.predict(t.kalman)
            t.age += 1
            t.time_since_update += 1

        # 2. confidence split; the selective mechanism sees only the high half
        high = [d for d in detections if d.confidence >= m.conf_high]
        low = [d for d in detections if d.confidence < m.conf_high]
        self.stats.high_detections += len(high)

        # 3. risk classification against confirmed tracks' predicted boxes
        confirmed_idx = [i for i, t in enumerate(live) if t.status == CONFIRMED]
        confirmed_boxes = [motion.state_to_box(live[i].kalman) for i in confirmed_idx]
        labels = gating.classify([d.box for d in high], confirmed_boxes, self.gate)

        # 4. feature acquisition: fetch for risky, copy for non-risky
        fetched: dict[int, np.ndarray | None] = {}
        features: list[np.ndarray | None] = [None] * len(high)
        copies: dict[int, int] = {}
        saturated: set[int] = set()
        base_mode = self.gate.mode == gating.MODE_BASE_GATE
        overrides = (
            gating.base_gate_overrides(labels, self.gate) if base_mode else None
        )
        for j, (det, label) in enumerate(zip(high, labels)):
            if label.risky:
                fetched[j] = self.provider.fetch(frame, det.index)
                features[j] = fetched[j]
            elif base_mode:
                if overrides[j]:
                    saturated.add(j)
            else:
                cand = live[confirmed_idx[label.candidate]]
                if cand.ema is not None:
                    copies[j] = label.candidate
                # candidate without an embedding: detection stays feature-less

        # remap copy candidates from confirmed-list space into live-track space
        copies_live = {j: confirmed_idx[c] for j, c in copies.items()}

        # 5. association
        if m.strategy == STRATEGY_CASCADE:
            stage1, left_t, left_d = self._appearance_stage(
                live, high, features, copies_live, saturated
            )
            stage2, left_t, left_d = self._iou_stage(live, left_t, high, left_d)
            matches = stage1 + stage2
        else:
            matches, left_t, left_d = self._fused_stage(
                live, high, features, copies_live, saturated
            )
        if m.byte_low and low:
            byte_matches, left_t, _ = self._iou_stage(
                live, left_t, low, list(range(len(low)))
            )
        else:
            byte_matches = []

        # 6. update matched tracks (byte/copied/feature-less matches decay the EMA)
        emitted: list[tuple[int, BBox]] = []
        for i, j in matches:
            track, det = live[i], high[j]
            self._mark_matched(track, det, fetched.get(j))
            if track.status == CONFIRMED:
                emitted.append((track.id, self._emit_box(track, det)))
        for i, j in byte_matches:
            track, det = live[i], low[j]
            self._mark_matched(track, det, None)
            if track.status == CONFIRMED:
                emitted.append((track.id, self._emit_box(track, det)))

        # unmatched tracks also decay: skipped frames count toward the EMA age
        matched_tracks = {i for i, _ in matches} | {i for i, _ in byte_matches}
        for i, t in enumerate(live):
            if i not in matched_tracks and t.ema is not None:
                t.ema = appearance.mark_skipped(t.ema)

        # 7. births for unmatched high-confidence detections (eager feature)
        for j in left_d:
            det = high[j]
            if j in fetched:
                feat = fetched[j]
            else:
                feat = self.provider.fetch(frame, det.index)
            track = self._spawn(det, feat)
            if track.status == CONFIRMED:
                emitted.append((track.id, self._emit_box(track, det)))

        # deletions after max_age consecutive misses
        for t in self._live():
            if t.time_since_update > m.max_age:
                t.status = DELETED

        self.last_frame = frame
        emitted.sort(key=lambda pair: pair[0])
        return emitted

    def _emit_box(self, track: Track, det: Detection) -> BBox:
        if self.match.emit == EMIT_DETECTION:
            return det.box
        return motion.state_to_box(track.kalman)


def run_sequence(
    frames: dict[int, list[Detection]],
    provider: FeatureProvider,
    gate: GateConfig | None = None,
    match: MatchConfig | None = None,
) -> tuple[TrackOutput, RunStats]:
    """Fold the stepper over the frames (in increasing order)."""
    tracker = SelectiveTracker(provider, gate, match)
    output = TrackOutput()
    for frame in sorted(frames):
        for tid, box in tracker.step(frame, frames[frame]):
            output.rows.append((frame, tid, box))
    return output, tracker.stats
