import numpy as np
import pytest

from peoplecount.lrcn import LRCNConfig, LRCNModel
from peoplecount.synth import SceneConfig, generate
from peoplecount.training import LabeledSequence, PeopleLabel

TINY_CONFIG = LRCNConfig(
    conv_layers=2, filters=2, kernel=5, lstm_units=(4, 3), seq_len=3,
    input_width=24, input_height=16, dropout=0.0,
)


@pytest.fixture
def tiny_model():
    return LRCNModel.build(TINY_CONFIG, seed=7, dtype=np.float64)


def synth_sequences(n_scenes, seq_len, width=100, height=56, actor_range=(0, 3),
                    base_seed=0, duration=None):
    """Labeled sequences built from synthetic scenes.

    The ground-truth mask serves as the P channel, so the samples are
    exact RGBP sequences with known counts.
    """
    duration = duration or seq_len
    samples = []
    for k in range(n_scenes):
        n_actors = actor_range[0] + k % (actor_range[1] - actor_range[0] + 1)
        cfg = SceneConfig(width=width, height=height, duration=duration,
                          n_actors=n_actors, seed=base_seed + k,
                          standstill_prob=0.0)
        frames, gt = generate(cfg)
        x = np.empty((seq_len, height, width, 4), dtype=np.float32)
        for t in range(seq_len):
            x[t, :, :, :3] = frames[t].pixels.astype(np.float32) / 255.0
            x[t, :, :, 3] = gt.masks[t]
        samples.append(LabeledSequence(x, PeopleLabel(gt.counts[seq_len - 1])))
    return samples
