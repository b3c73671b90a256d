import numpy as np
import pytest

from seltrack.geometry import BBox, iou
from seltrack.io import read_detections, read_features, read_trajectories
from seltrack.synth import (
    PRESETS,
    Scenario,
    Target,
    center_box,
    crossing_scene,
    generate_to_dir,
    preset,
)
from seltrack.appearance import cosine_distance, feature


def tiny_scenario(seed=0, **overrides):
    kwargs = dict(
        seed=seed,
        frames=5,
        targets=[
            Target(np.array([1.0, 0, 0]), [(1, BBox(10, 10, 20, 30)), (5, BBox(30, 10, 20, 30))]),
            Target(np.array([0, 1.0, 0]), [(1, BBox(100, 100, 20, 30)), (5, BBox(80, 100, 20, 30))]),
        ],
    )
    kwargs.update(overrides)
    return Scenario(**kwargs)


class TestGenerate:
    def test_zero_noise_dets_equal_gt(self, tmp_path):
        det, _, gt = generate_to_dir(tiny_scenario(), tmp_path)
        dets = read_detections(det)
        traj = read_trajectories(gt)
        for frame, frame_dets in dets.items():
            for d, tid in zip(frame_dets, [1, 2]):
                assert d.box == traj[tid][frame]

    def test_same_seed_is_bitwise_identical(self, tmp_path):
        sc = tiny_scenario(box_noise=0.5, feature_noise=0.1)
        a = generate_to_dir(sc, tmp_path / "a")
        b = generate_to_dir(sc, tmp_path / "b")
        for pa, pb in zip(a, b):
            assert pa.read_bytes() == pb.read_bytes()

    def test_different_seed_differs(self, tmp_path):
        a = generate_to_dir(tiny_scenario(seed=1, box_noise=0.5), tmp_path / "a")
        b = generate_to_dir(tiny_scenario(seed=2, box_noise=0.5), tmp_path / "b")
        assert a[0].read_bytes() != b[0].read_bytes()

    def test_occlusion_window_drops_rows(self, tmp_path):
        sc = tiny_scenario(occlusions=[(1, 2, 4)])
        det, feat, gt = generate_to_dir(sc, tmp_path)
        traj = read_trajectories(gt)
        assert sorted(traj[2]) == [1, 5]
        assert sorted(traj[1]) == [1, 2, 3, 4, 5]
        dets = read_detections(det)
        assert all(len(dets[f]) == 1 for f in (2, 3, 4))
        # feature keys follow the per-frame reindexing
        assert set(read_features(feat)) >= {(2, 0), (3, 0), (4, 0)}

    def test_out_of_bounds_trajectory_rejected(self, tmp_path):
        sc = tiny_scenario(bounds=(25.0, 25.0))
        with pytest.raises(ValueError, match="bounds"):
            generate_to_dir(sc, tmp_path)

    def test_duplicate_feature_directions_rejected(self):
        with pytest.raises(ValueError, match="direction"):
            Scenario(
                seed=0,
                frames=3,
                targets=[
                    Target(np.array([1.0, 0]), [(1, BBox(0, 0, 5, 5))]),
                    Target(np.array([2.0, 0]), [(1, BBox(20, 20, 5, 5))]),
                ],
            )

    def test_degenerate_keyframe_box_rejected(self):
        with pytest.raises(ValueError):
            Target(np.array([1.0, 0]), [(1, BBox(0, 0, 0, 5))])


class TestCrossingScene:
    def test_both_targets_present_before_and_after(self):
        sc = crossing_scene()
        for frame in (1, 23, 29, 60):
            assert len(sc.visible_boxes(frame)) == 2
        for frame in range(24, 29):
            assert [t for t, _ in sc.visible_boxes(frame)] == [0]

    def test_mid_crossing_overlap_exceeds_half(self):
        sc = crossing_scene()
        a = sc.targets[0].box_at(26)
        b = sc.targets[1].box_at(26)
        assert iou(a, b) > 0.5

    def test_features_orthogonal(self):
        sc = crossing_scene()
        f0 = feature(sc.targets[0].feature_dir)
        f1 = feature(sc.targets[1].feature_dir)
        assert cosine_distance(f0, f1) == 1.0

    def test_reappearance_is_clear_of_both_predictions(self):
        sc = crossing_scene()
        small = sc.targets[1].box_at(29)
        big = sc.targets[0].box_at(29)
        assert iou(small, big) == 0.0


class TestPresets:
    def test_catalog_names(self):
        assert set(PRESETS) == {"crossing", "parade", "enter_exit", "grid"}

    def test_unknown_preset(self):
        with pytest.raises(ValueError, match="unknown preset"):
            preset("nope")

    @pytest.mark.parametrize("name", sorted(PRESETS))
    def test_presets_generate_and_parse(self, name, tmp_path):
        det, feat, gt = generate_to_dir(preset(name), tmp_path / name)
        frames = read_detections(det)
        assert frames
        features = read_features(feat)
        for frame, dets in frames.items():
            for d in dets:
                assert (frame, d.index) in features
        assert read_trajectories(gt)

    def test_parade_lanes_never_overlap(self, tmp_path):
        sc = preset("parade")
        for frame in (1, 100, 200):
            boxes = [b for _, b in sc.visible_boxes(frame)]
            for i in range(len(boxes)):
                for j in range(i + 1, len(boxes)):
                    assert iou(boxes[i], boxes[j]) == 0.0

    def test_grid_neighbours_overlap(self):
        sc = preset("grid")
        boxes = [b for _, b in sc.visible_boxes(1)]
        assert iou(boxes[0], boxes[1]) > 0.2


class TestParserFuzz:
    def test_hundred_random_scenarios_parse(self, tmp_path):
        rng = np.random.default_rng(11)
        for k in range(100):
            n = int(rng.integers(1, 4))
            targets = []
            for i in range(n):
                cx0, cy0 = rng.uniform(100, 600), rng.uniform(100, 400)
                dx, dy = rng.uniform(-40, 40), rng.uniform(-30, 30)
                w, h = rng.uniform(10, 60), rng.uniform(10, 60)
                targets.append(
                    Target(
                        feature_dir=np.eye(4)[i % 4] * (1 + i // 4) + np.full(4, 0.01 * i),
                        keyframes=[
                            (1, center_box(cx0, cy0, w, h)),
                            (10, center_box(cx0 + dx, cy0 + dy, w, h)),
                        ],
                    )
                )
            sc = Scenario(
                seed=int(rng.integers(0, 2**31)),
                frames=10,
                targets=targets,
                box_noise=float(rng.uniform(0, 1)),
                feature_noise=float(rng.uniform(0, 0.2)),
            )
            det, feat, gt = generate_to_dir(sc, tmp_path / f"s{k}")
            assert read_detections(det) is not None
            assert read_features(feat) is not None
            assert read_trajectories(gt) is not None
