"""Synthetic indoor scenes with per-frame ground truth.

Actors are textured ellipses moving on piecewise-linear paths over a
static textured background; they optionally pause in place, a slow
global gain models illumination drift, and furniture events permanently
recolor a region. Every frame comes with its exact actor mask and
count, which makes the generator a desk-scale oracle for the whole
pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .frames import RawFrame
from .dataset_io import LabelTable, LabelRow


@dataclass(frozen=True)
class FurnitureEvent:
    frame: int
    region: tuple  # (x0, y0, x1, y1), exclusive upper bounds
    color: tuple   # (r, g, b)


@dataclass(frozen=True)
class SceneConfig:
    width: int = 400
    height: int = 225
    duration: int = 60          # frames
    fps: int = 20
    n_actors: int = 3
    actor_radius: tuple = (12, 28)
    actor_speed: tuple = (1.0, 4.0)   # pixels per frame
    standstill_prob: float = 0.2
    dwell_frames: int = 15
    furniture_events: tuple = ()
    illumination_amplitude: float = 0.0  # fractional gain swing, keep < 0.2
    illumination_period: int = 200
    uniform_fraction: float = 0.0        # fraction of actors in a staff uniform
    uniform_color: tuple = (210, 40, 40)
    seed: int = 0

    def __post_init__(self):
        if self.n_actors < 0 or self.duration < 0:
            raise ValueError("counts must be non-negative")
        if self.illumination_amplitude < 0 or self.illumination_amplitude >= 0.2:
            raise ValueError("illumination amplitude must be in [0, 0.2)")


@dataclass
class GroundTruth:
    counts: list = field(default_factory=list)          # per-frame total actors
    customer_counts: list = field(default_factory=list) # excluding uniformed actors
    masks: list = field(default_factory=list)           # per-frame uint8 (h, w) in {0,1}


class _Actor:
    def __init__(self, rng: np.random.Generator, cfg: SceneConfig, uniform: bool):
        # Radii clamped so the actor always fits inside the viewport.
        rx_hi = min(cfg.actor_radius[1], (cfg.width - 2) // 2)
        ry_hi = min(cfg.actor_radius[1], (cfg.height - 2) // 2)
        self.rx = int(rng.integers(min(cfg.actor_radius[0], rx_hi), rx_hi + 1))
        self.ry = int(rng.integers(min(cfg.actor_radius[0], ry_hi), ry_hi + 1))
        self.pos = np.array([
            rng.uniform(self.rx, cfg.width - self.rx),
            rng.uniform(self.ry, cfg.height - self.ry),
        ])
        self.speed = rng.uniform(*cfg.actor_speed)
        self.target = self._pick_target(rng, cfg)
        self.dwell = 0
        self.uniform = uniform
        if uniform:
            base = np.array(cfg.uniform_color, dtype=np.float64)
            noise = np.zeros((2 * self.ry + 1, 2 * self.rx + 1, 3))
        else:
            base = rng.uniform(40, 240, size=3)
            noise = rng.uniform(-30, 30, size=(2 * self.ry + 1, 2 * self.rx + 1, 3))
        self.texture = np.clip(base + noise, 0, 255).astype(np.uint8)

    def _pick_target(self, rng, cfg):
        return np.array([
            rng.uniform(self.rx, cfg.width - self.rx),
            rng.uniform(self.ry, cfg.height - self.ry),
        ])

    def step(self, rng: np.random.Generator, cfg: SceneConfig):
        if self.dwell > 0:
            self.dwell -= 1
            return
        delta = self.target - self.pos
        dist = float(np.hypot(*delta))
        if dist <= self.speed:
            self.pos = self.target
            if rng.random() < cfg.standstill_prob:
                self.dwell = cfg.dwell_frames
            self.target = self._pick_target(rng, cfg)
        else:
            self.pos = self.pos + delta * (self.speed / dist)

    def render(self, frame: np.ndarray, mask: np.ndarray) -> bool:
        """Draw onto frame/mask; returns True if any pixel was visible."""
        h, w = mask.shape
        cx, cy = self.pos
        x0 = max(0, int(np.floor(cx - self.rx)))
        x1 = min(w, int(np.ceil(cx + self.rx)) + 1)
        y0 = max(0, int(np.floor(cy - self.ry)))
        y1 = min(h, int(np.ceil(cy + self.ry)) + 1)
        if x0 >= x1 or y0 >= y1:
            return False
        ys, xs = np.mgrid[y0:y1, x0:x1]
        inside = (((xs - cx) / self.rx) ** 2 + ((ys - cy) / self.ry) ** 2) <= 1.0
        if not inside.any():
            return False
        ty = np.clip(np.rint(ys - cy).astype(int) + self.ry, 0, 2 * self.ry)
        tx = np.clip(np.rint(xs - cx).astype(int) + self.rx, 0, 2 * self.rx)
        patch = frame[y0:y1, x0:x1]
        patch[inside] = self.texture[ty[inside], tx[inside]]
        mask[y0:y1, x0:x1][inside] = 1
        return True


def make_background(cfg: SceneConfig) -> np.ndarray:
    """Smooth textured backdrop, deterministic in the scene seed."""
    rng = np.random.default_rng(cfg.seed ^ 0x5EED)
    coarse = rng.uniform(60, 200, size=(cfg.height // 16 + 2, cfg.width // 16 + 2, 3))
    up = np.kron(coarse, np.ones((16, 16, 1)))[:cfg.height, :cfg.width]
    return np.clip(up, 0, 255).astype(np.uint8)


def generate(cfg: SceneConfig):
    """Render the scene; returns (frames, GroundTruth), deterministic in seed."""
    rng = np.random.default_rng(cfg.seed)
    base_bg = make_background(cfg)
    n_uniform = int(round(cfg.uniform_fraction * cfg.n_actors))
    actors = [
        _Actor(rng, cfg, uniform=(k < n_uniform))
        for k in range(cfg.n_actors)
    ]
    frames = []
    gt = GroundTruth()
    bg = base_bg.copy()
    events = sorted(cfg.furniture_events, key=lambda e: e.frame)
    next_event = 0
    frame_ms = 1000.0 / cfg.fps
    for k in range(cfg.duration):
        while next_event < len(events) and events[next_event].frame <= k:
            x0, y0, x1, y1 = events[next_event].region
            bg[y0:y1, x0:x1] = events[next_event].color
            next_event += 1
        frame = bg.copy()
        mask = np.zeros((cfg.height, cfg.width), dtype=np.uint8)
        total = customers = 0
        for actor in actors:
            visible = actor.render(frame, mask)
            if visible:
                total += 1
                if not actor.uniform:
                    customers += 1
            actor.step(rng, cfg)
        if cfg.illumination_amplitude > 0:
            gain = 1.0 + cfg.illumination_amplitude * np.sin(
                2.0 * np.pi * k / cfg.illumination_period
            )
            frame = np.clip(frame.astype(np.float64) * gain, 0, 255).astype(np.uint8)
        frames.append(RawFrame(frame, timestamp_ms=int(round(k * frame_ms)), index=k))
        gt.counts.append(total)
        gt.customer_counts.append(customers)
        gt.masks.append(mask)
    return frames, gt


def label_stream(gt: GroundTruth, fps: int = 20) -> LabelTable:
    """Materialize ground truth into the label-table format."""
    rows = [
        LabelRow(
            frame_id=i,
            timestamp_ms=int(round(i * 1000.0 / fps)),
            people_count=gt.counts[i],
            customer_count=gt.customer_counts[i],
        )
        for i in range(len(gt.counts))
    ]
    return LabelTable(rows)
