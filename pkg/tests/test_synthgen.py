import numpy as np
import pytest

from vqbench.store import quantize_frames, read_avf
from vqbench.synthgen import (
    MAX_BLUR,
    MAX_FLICKER,
    MAX_JITTER,
    MAX_NOISE,
    MAX_VELOCITY,
    N_CONCEPTS,
    ClipSpec,
    OutOfRangeSpec,
    SynthConfig,
    _box_blur,
    _reflect,
    concept_palette,
    draw_specs,
    gen_clip,
    gen_dataset,
    ground_truth_for,
    read_manifest,
)


def clean_spec(**overrides):
    base = dict(seed=1, concept_id=0, noise_sigma=0.0, blur_radius=0,
                flicker_amp=0.0, jitter_rate=0.0, velocity=2.0,
                marker_contrast=0.5, prompt_matches_marker=True)
    base.update(overrides)
    return ClipSpec(**base)


class TestSpecValidation:
    @pytest.mark.parametrize(
        "field,value",
        [("concept_id", -1), ("concept_id", 64), ("noise_sigma", 0.31),
         ("noise_sigma", -0.01), ("blur_radius", 4), ("flicker_amp", 0.51),
         ("jitter_rate", 0.6), ("velocity", 6.5), ("marker_contrast", 1.1)],
    )
    def test_out_of_range(self, field, value):
        with pytest.raises(OutOfRangeSpec):
            gen_clip(clean_spec(**{field: value}))

    def test_boundaries_allowed(self):
        clean_spec(noise_sigma=MAX_NOISE, blur_radius=MAX_BLUR, flicker_amp=MAX_FLICKER,
                   jitter_rate=MAX_JITTER, velocity=MAX_VELOCITY, marker_contrast=1.0).validate()


class TestGroundTruth:
    def test_pristine_static(self):
        gt = ground_truth_for(clean_spec())
        assert gt.static == 100.0
        assert gt.temporal == 100.0

    def test_static_formula(self):
        gt = ground_truth_for(clean_spec(noise_sigma=0.15, blur_radius=3))
        # 100 * (1 - (0.5 + 1.0)/2)
        assert gt.static == pytest.approx(25.0)

    def test_temporal_formula(self):
        gt = ground_truth_for(clean_spec(flicker_amp=0.5, jitter_rate=0.25))
        assert gt.temporal == pytest.approx(100.0 * (1 - (1.0 + 0.5) / 2))

    def test_dynamic_is_velocity_fraction(self):
        assert ground_truth_for(clean_spec(velocity=4.5)).dynamic == pytest.approx(75.0)

    def test_tv_match(self):
        assert ground_truth_for(clean_spec(marker_contrast=0.8)).tv == pytest.approx(80.0)

    def test_tv_mismatch_penalized_tenfold(self):
        gt = ground_truth_for(clean_spec(marker_contrast=0.8, prompt_matches_marker=False))
        assert gt.tv == pytest.approx(8.0)

    def test_as_array_order(self):
        gt = ground_truth_for(clean_spec(velocity=3.0, marker_contrast=0.4))
        np.testing.assert_allclose(gt.as_array(), [100.0, 100.0, 50.0, 40.0])


class TestPalette:
    def test_angles_sweep_half_turn(self):
        a0, _ = concept_palette(0)
        a32, _ = concept_palette(32)
        assert a0 == 0.0
        assert a32 == pytest.approx(np.pi / 2)

    def test_tints_are_signed(self):
        _, tint = concept_palette(5)
        assert tint.min() >= -0.5 and tint.max() <= 0.5

    def test_distinct_neighbours(self):
        _, t1 = concept_palette(1)
        _, t2 = concept_palette(2)
        assert not np.allclose(t1, t2)


class TestHelpers:
    def test_reflect_inside_unchanged(self):
        np.testing.assert_allclose(_reflect(np.asarray(5.0), 0.0, 10.0), 5.0)

    def test_reflect_bounces(self):
        np.testing.assert_allclose(_reflect(np.asarray(12.0), 0.0, 10.0), 8.0)
        np.testing.assert_allclose(_reflect(np.asarray(-3.0), 0.0, 10.0), 3.0)
        np.testing.assert_allclose(_reflect(np.asarray(23.0), 0.0, 10.0), 3.0)

    def test_box_blur_preserves_constant(self):
        frame = np.full((16, 16, 3), 0.3)
        np.testing.assert_allclose(_box_blur(frame, 2), 0.3, atol=1e-12)

    def test_box_blur_matches_direct_average(self):
        rng = np.random.default_rng(0)
        frame = rng.random((8, 8, 1))
        r = 1
        got = _box_blur(frame, r)
        padded = np.pad(frame, [(r, r), (r, r), (0, 0)], mode="edge")
        want = np.empty_like(frame)
        for i in range(8):
            for j in range(8):
                want[i, j] = padded[i : i + 2 * r + 1, j : j + 2 * r + 1].mean(axis=(0, 1))
        np.testing.assert_allclose(got, want, atol=1e-12)


class TestGenClip:
    def test_shape_and_range(self):
        video, _ = gen_clip(clean_spec())
        assert video.frames.shape == (24, 64, 64, 3)
        assert video.frames.min() >= 0.0 and video.frames.max() <= 1.0
        assert video.fps == 8.0

    def test_deterministic(self):
        a, _ = gen_clip(clean_spec(noise_sigma=0.2, blur_radius=1, jitter_rate=0.4))
        b, _ = gen_clip(clean_spec(noise_sigma=0.2, blur_radius=1, jitter_rate=0.4))
        np.testing.assert_array_equal(a.frames, b.frames)

    def test_seed_changes_content(self):
        a, _ = gen_clip(clean_spec(seed=1))
        b, _ = gen_clip(clean_spec(seed=2))
        assert not np.array_equal(a.frames, b.frames)

    def test_zero_velocity_is_static(self):
        # only the alternating scene pulse separates frames when nothing moves
        video, _ = gen_clip(clean_spec(velocity=0.0, marker_contrast=0.0))
        for t in range(2, video.frames.shape[0]):
            np.testing.assert_array_equal(video.frames[t], video.frames[t - 2])
        gap = video.frames[0] - video.frames[1]
        np.testing.assert_allclose(gap, 2 * SynthConfig().pulse, atol=1e-12)

    def test_motion_moves_pixels(self):
        video, _ = gen_clip(clean_spec(velocity=5.0, marker_contrast=0.0))
        assert np.abs(video.frames[1] - video.frames[0]).max() > 0.0

    def test_jitter_permutes_frames(self):
        base, _ = gen_clip(clean_spec(velocity=3.0))
        jit, _ = gen_clip(clean_spec(velocity=3.0, jitter_rate=0.5))
        t = base.frames.shape[0]
        base_sorted = np.sort(base.frames.reshape(t, -1), axis=0)
        jit_sorted = np.sort(jit.frames.reshape(t, -1), axis=0)
        np.testing.assert_array_equal(base_sorted, jit_sorted)
        assert not np.array_equal(base.frames, jit.frames)

    def test_flicker_alternates_brightness(self):
        base, _ = gen_clip(clean_spec(velocity=0.0, marker_contrast=0.0))
        flick, _ = gen_clip(clean_spec(velocity=0.0, marker_contrast=0.0, flicker_amp=0.4))
        diff = flick.frames - base.frames
        mids = np.abs(diff) < 1.0  # ignore clipped pixels
        d0 = diff[0][mids[0]]
        d1 = diff[1][mids[1]]
        assert np.all(d0 >= 0.0) and np.all(d1 <= 0.0)
        np.testing.assert_allclose(d0.max(), 0.2, atol=1e-12)

    def test_marker_tints_with_concept(self):
        a, _ = gen_clip(clean_spec(concept_id=3, velocity=0.0, marker_contrast=1.0))
        b, _ = gen_clip(clean_spec(concept_id=40, velocity=0.0, marker_contrast=1.0))
        assert not np.array_equal(a.frames, b.frames)

    def test_custom_config(self):
        video, _ = gen_clip(clean_spec(), SynthConfig(frames=4, size=32, fps=4.0))
        assert video.frames.shape == (4, 32, 32, 3)
        assert video.fps == 4.0


class TestDrawSpecs:
    def test_count_and_determinism(self):
        a = draw_specs(10, seed=5)
        b = draw_specs(10, seed=5)
        assert len(a) == 10
        assert a == b

    def test_even_indices_match(self):
        specs = draw_specs(10, seed=5)
        for i, (spec, prompt_concept) in enumerate(specs):
            if i % 2 == 0:
                assert spec.prompt_matches_marker
                assert prompt_concept == spec.concept_id
            else:
                assert not spec.prompt_matches_marker
                assert prompt_concept != spec.concept_id

    def test_ranges_respected(self):
        for spec, prompt_concept in draw_specs(50, seed=9):
            spec.validate()
            assert 0 <= prompt_concept < N_CONCEPTS

    def test_parameters_vary(self):
        specs = [s for s, _ in draw_specs(20, seed=0)]
        assert len({s.blur_radius for s in specs}) > 1
        assert len({round(s.velocity, 6) for s in specs}) > 10


class TestDataset:
    def test_gen_dataset_round_trip(self, tmp_path):
        rows = gen_dataset(4, seed=11, out_dir=str(tmp_path), config=SynthConfig(frames=4, size=16))
        assert [r.clip_id for r in rows] == [f"clip{i:05d}" for i in range(4)]
        back = read_manifest(str(tmp_path / "manifest.jsonl"))
        assert back == rows
        for r in rows:
            video = read_avf(str(tmp_path / r.path))
            assert video.frames.shape == (4, 16, 16, 3)

    def test_files_match_regenerated_clips(self, tmp_path):
        config = SynthConfig(frames=4, size=16)
        rows = gen_dataset(2, seed=3, out_dir=str(tmp_path), config=config)
        for r in rows:
            stored = read_avf(str(tmp_path / r.path))
            fresh, gt = gen_clip(r.spec, config)
            np.testing.assert_array_equal(
                quantize_frames(stored.frames), quantize_frames(fresh.frames)
            )
            assert gt == r.ground_truth

    def test_levels_consistent_with_ground_truth(self, tmp_path):
        from vqbench.scorer.forward import mos_to_level

        rows = gen_dataset(6, seed=4, out_dir=str(tmp_path), config=SynthConfig(frames=4, size=16))
        for r in rows:
            for dim, level in r.levels.items():
                assert level == mos_to_level(getattr(r.ground_truth, dim))
