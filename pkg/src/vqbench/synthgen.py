"""Deterministic synthetic clips with analytically known quality labels.

A clip renders a smooth gradient background, two moving discs, and (at
nonzero contrast) a striped concept marker whose orientation and tint
identify one of 64 concepts. Degradations then apply in a fixed order:
box blur, additive Gaussian noise, alternating brightness flicker, and
adjacent-frame jitter swaps. Ground truth for the four dimensions is a
closed-form function of the recipe, so the scorer can be trained and
evaluated end to end without any human labels.
"""

from __future__ import annotations

import colorsys
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import VqbenchError, jsonl_records
from .rng import Xorshift64Star, derive_seed, normal_field
from .scorer.forward import mos_to_level
from .store import VideoTensor, write_avf
from .subjective import DIMENSIONS

N_CONCEPTS = 64
MAX_NOISE = 0.3
MAX_BLUR = 3
MAX_FLICKER = 0.5
MAX_JITTER = 0.5
MAX_VELOCITY = 6.0

_CONTENT_SALT = 0xC0DE
_NOISE_SALT = 0x7015E
_SPEC_SALT = 0x5EED
_PROMPT_SALT = 0x9207


class OutOfRangeSpec(VqbenchError):
    """A clip recipe field is outside its allowed range."""


@dataclass(frozen=True)
class ClipSpec:
    """Complete recipe for one clip; rendering is a pure function of it."""

    seed: int
    concept_id: int
    noise_sigma: float
    blur_radius: int
    flicker_amp: float
    jitter_rate: float
    velocity: float
    marker_contrast: float
    prompt_matches_marker: bool

    def validate(self) -> None:
        checks = [
            (0 <= self.concept_id < N_CONCEPTS, f"concept_id {self.concept_id} outside [0, {N_CONCEPTS})"),
            (0.0 <= self.noise_sigma <= MAX_NOISE, f"noise_sigma {self.noise_sigma} outside [0, {MAX_NOISE}]"),
            (0 <= self.blur_radius <= MAX_BLUR, f"blur_radius {self.blur_radius} outside [0, {MAX_BLUR}]"),
            (0.0 <= self.flicker_amp <= MAX_FLICKER, f"flicker_amp {self.flicker_amp} outside [0, {MAX_FLICKER}]"),
            (0.0 <= self.jitter_rate <= MAX_JITTER, f"jitter_rate {self.jitter_rate} outside [0, {MAX_JITTER}]"),
            (0.0 <= self.velocity <= MAX_VELOCITY, f"velocity {self.velocity} outside [0, {MAX_VELOCITY}]"),
            (0.0 <= self.marker_contrast <= 1.0, f"marker_contrast {self.marker_contrast} outside [0, 1]"),
        ]
        for ok, message in checks:
            if not ok:
                raise OutOfRangeSpec(message)


@dataclass(frozen=True)
class GroundTruth:
    static: float
    temporal: float
    dynamic: float
    tv: float

    def as_array(self) -> np.ndarray:
        return np.asarray([self.static, self.temporal, self.dynamic, self.tv], dtype=np.float64)

    def as_dict(self) -> dict[str, float]:
        return {dim: getattr(self, dim) for dim in DIMENSIONS}


@dataclass(frozen=True)
class SynthConfig:
    frames: int = 24
    size: int = 64
    fps: float = 8.0
    stripe_period: float = 32.0
    marker_strength: float = 1.0
    border: int = 8  # marker band width; discs stay out of it
    pulse: float = 0.1  # alternating scene brightness; swaps stay visible at zero flicker


def ground_truth_for(spec: ClipSpec) -> GroundTruth:
    static = 100.0 * (1.0 - (spec.noise_sigma / MAX_NOISE + spec.blur_radius / MAX_BLUR) / 2.0)
    temporal = 100.0 * (1.0 - (spec.flicker_amp / MAX_FLICKER + spec.jitter_rate / MAX_JITTER) / 2.0)
    dynamic = 100.0 * spec.velocity / MAX_VELOCITY
    tv = 100.0 * spec.marker_contrast
    if not spec.prompt_matches_marker:
        tv *= 0.1
    return GroundTruth(static, temporal, dynamic, tv)


def concept_palette(concept_id: int) -> tuple[float, np.ndarray]:
    """Stripe angle and signed RGB tint for one concept.

    The 64 entries cluster around 8 widely separated archetypes in angle
    and hue, with small per-entry offsets keeping every entry distinct.
    Concepts half a palette apart land in opposite archetypes, so a
    mismatched prompt always faces a maximally different pattern.
    """
    archetype = (concept_id + concept_id // 8) % 8
    detune = (concept_id % 8) / 512.0
    angle = math.pi * (archetype / 8.0 + detune)
    hue = (archetype / 8.0 + detune + 0.05) % 1.0
    rgb = np.asarray(colorsys.hsv_to_rgb(hue, 1.0, 1.0), dtype=np.float64)
    return angle, rgb - 0.5


def _reflect(value: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Fold positions into [lo, hi] as if bouncing off the walls."""
    span = hi - lo
    if span <= 0:
        return np.full_like(value, lo)
    q = np.mod(value - lo, 2.0 * span)
    return lo + (span - np.abs(q - span))


def _box_blur(frame: np.ndarray, radius: int) -> np.ndarray:
    """Uniform (2r+1)^2 box filter with edge-clamped borders."""

    def along(a: np.ndarray, axis: int) -> np.ndarray:
        k = 2 * radius + 1
        pad = [(0, 0)] * a.ndim
        pad[axis] = (radius, radius)
        padded = np.pad(a, pad, mode="edge")
        cs = np.cumsum(padded, axis=axis, dtype=np.float64)
        zero = np.zeros_like(np.take(cs, [0], axis=axis))
        cs = np.concatenate([zero, cs], axis=axis)
        n = a.shape[axis]
        hi = np.take(cs, np.arange(k, k + n), axis=axis)
        lo_ = np.take(cs, np.arange(0, n), axis=axis)
        return (hi - lo_) / k

    return along(along(frame, 0), 1)


def gen_clip(spec: ClipSpec, config: SynthConfig = SynthConfig()) -> tuple[VideoTensor, GroundTruth]:
    """Render one clip and its analytic ground truth."""
    spec.validate()
    t_frames, size = config.frames, config.size
    rng = Xorshift64Star(derive_seed(spec.seed, _CONTENT_SALT))

    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)

    # gradient background: fixed endpoint colors, random direction only.
    # Content randomness is kept deliberately small so the degradations,
    # not the scene, dominate the clip-to-clip feature variance.
    c0 = np.asarray([0.35, 0.40, 0.45])
    c1 = np.asarray([0.60, 0.55, 0.50])
    phi = 2.0 * math.pi * rng.uniform()
    proj = xx * math.cos(phi) + yy * math.sin(phi)
    w = (proj - proj.min()) / max(proj.max() - proj.min(), 1e-9)
    background = c0 + w[..., None] * (c1 - c0)

    base = background
    if spec.marker_contrast > 0.0:
        # concept marker: smooth stripes mixed into the border band at
        # weight alpha, leaving the background untouched as alpha -> 0
        angle, tint = concept_palette(spec.concept_id)
        phase = xx * math.cos(angle) + yy * math.sin(angle)
        stripes = 0.5 + 0.5 * np.sin(2.0 * math.pi * phase / config.stripe_period)
        template = 0.5 + config.marker_strength * stripes[..., None] * tint
        b = config.border
        band = np.zeros((size, size), dtype=bool)
        band[:b, :] = band[-b:, :] = band[:, :b] = band[:, -b:] = True
        base = background.copy()
        base[band] += spec.marker_contrast * (template[band] - base[band])

    # two discs (one bright, one dark) sharing the spec velocity, fixed
    # starts and headings, confined to the interior so the marker band
    # stays clean
    radius = 7
    lo = float(config.border + radius)
    hi = float(size - 1 - config.border - radius)
    span = hi - lo
    discs = (
        (np.asarray([0.90, 0.90, 0.90]), lo + 0.30 * span, lo + 0.25 * span, math.pi / 6.0),
        (np.asarray([0.10, 0.10, 0.10]), lo + 0.70 * span, lo + 0.65 * span, -2.0 * math.pi / 3.0),
    )

    video = np.empty((t_frames, size, size, 3), dtype=np.float64)
    for t in range(t_frames):
        frame = base.copy()
        for color, cx0, cy0, theta in discs:
            cx = _reflect(np.asarray(cx0 + t * spec.velocity * math.cos(theta)), lo, hi)
            cy = _reflect(np.asarray(cy0 + t * spec.velocity * math.sin(theta)), lo, hi)
            mask = (xx - cx) ** 2 + (yy - cy) ** 2 <= radius * radius
            frame[mask] = color
        # the scene itself shimmers on alternate frames; a frame swap then
        # leaves a visible trace even for clips drawn with zero flicker
        video[t] = frame + (config.pulse if t % 2 == 0 else -config.pulse)

    if spec.blur_radius > 0:
        for t in range(t_frames):
            video[t] = _box_blur(video[t], spec.blur_radius)

    if spec.noise_sigma > 0.0:
        video += spec.noise_sigma * normal_field(derive_seed(spec.seed, _NOISE_SALT), video.shape)

    if spec.flicker_amp > 0.0:
        signs = np.where(np.arange(t_frames) % 2 == 0, 1.0, -1.0)
        video += (0.5 * spec.flicker_amp * signs)[:, None, None, None]

    # jitter rate realizes as a deterministic swap count, not a random
    # draw whose realization noise would swamp the label; swaps sit at
    # least three frames apart because denser adjacent swaps chain into
    # runs whose visible traces cancel instead of accumulating
    n_swaps = int(math.floor(spec.jitter_rate * (t_frames - 1) / 1.5 + 0.5))
    if t_frames >= 2:
        n_swaps = min(n_swaps, (t_frames - 2) // 3 + 1)
    if n_swaps > 0:
        start = ((t_frames - 2) - 3 * (n_swaps - 1)) // 2
        for t in range(start, start + 3 * n_swaps, 3):
            video[[t, t + 1]] = video[[t + 1, t]]

    np.clip(video, 0.0, 1.0, out=video)
    return VideoTensor(video, config.fps), ground_truth_for(spec)


@dataclass(frozen=True)
class ManifestRow:
    clip_id: str
    path: str
    spec: ClipSpec
    prompt_concept: int
    ground_truth: GroundTruth
    levels: dict[str, int]


def draw_specs(n: int, seed: int) -> list[tuple[ClipSpec, int]]:
    """n clip recipes with prompt concepts, uniform over parameter ranges.

    Even indices carry a matching prompt; odd indices claim the concept
    half a palette turn away, which maximises the stripe-angle and hue
    gap between what the prompt asks for and what the clip shows.
    """
    out = []
    for i in range(n):
        rng = Xorshift64Star(derive_seed(seed, _SPEC_SALT, i))
        concept = rng.below(N_CONCEPTS)
        matches = i % 2 == 0
        spec = ClipSpec(
            seed=derive_seed(seed, _PROMPT_SALT, i),
            concept_id=concept,
            noise_sigma=rng.uniform() * MAX_NOISE,
            blur_radius=rng.below(MAX_BLUR + 1),
            flicker_amp=rng.uniform() * MAX_FLICKER,
            jitter_rate=rng.uniform() * MAX_JITTER,
            velocity=rng.uniform() * MAX_VELOCITY,
            marker_contrast=rng.uniform(),
            prompt_matches_marker=matches,
        )
        prompt_concept = concept if matches else (concept + N_CONCEPTS // 2) % N_CONCEPTS
        out.append((spec, prompt_concept))
    return out


def gen_dataset(
    n: int, seed: int, out_dir: str, config: SynthConfig = SynthConfig()
) -> list[ManifestRow]:
    """Render n clips into out_dir and write a manifest.jsonl next to them."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    rows = []
    for i, (spec, prompt_concept) in enumerate(draw_specs(n, seed)):
        clip_id = f"clip{i:05d}"
        rel = f"{clip_id}.avf"
        video, gt = gen_clip(spec, config)
        write_avf(os.path.join(out_dir, rel), video)
        levels = {dim: mos_to_level(getattr(gt, dim)) for dim in DIMENSIONS}
        rows.append(ManifestRow(clip_id, rel, spec, prompt_concept, gt, levels))
    write_manifest(rows, os.path.join(out_dir, "manifest.jsonl"))
    return rows


def write_manifest(rows: list[ManifestRow], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in rows:
            fh.write(
                json.dumps(
                    {
                        "clip_id": r.clip_id,
                        "path": r.path,
                        "spec": asdict(r.spec),
                        "prompt_concept": r.prompt_concept,
                        "ground_truth": r.ground_truth.as_dict(),
                        "levels": r.levels,
                    },
                    separators=(",", ":"),
                )
                + "\n"
            )


def read_manifest(path: str) -> list[ManifestRow]:
    rows = []
    for d in jsonl_records(
        path, required=("clip_id", "path", "spec", "prompt_concept", "ground_truth", "levels")
    ):
        try:
            spec = ClipSpec(**d["spec"])
            truth = GroundTruth(**d["ground_truth"])
        except TypeError as exc:
            raise VqbenchError(f"{path}: bad manifest record {d['clip_id']!r}: {exc}") from exc
        rows.append(
            ManifestRow(
                d["clip_id"],
                d["path"],
                spec,
                int(d["prompt_concept"]),
                truth,
                {k: int(v) for k, v in d["levels"].items()},
            )
        )
    return rows
