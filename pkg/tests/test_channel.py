import math
import os
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

# Add src to path
sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'src'))

from audio.wav_io import AudioClip, ComplexClip
from watermark.channel import (
    ChannelSpec,
    apply_awgn,
    apply_channel,
    apply_gain,
    apply_requantize,
    derive_seed,
)
from watermark.errors import UndefinedSNRError
from watermark.metrics import snr_db


def test_awgn_infinite_snr_is_identity(rng):
    x = rng.standard_normal(100)
    y = apply_awgn(x, math.inf, seed=3)
    assert np.array_equal(x, y)
    assert y is not x


def test_awgn_zero_signal_is_undefined():
    with pytest.raises(UndefinedSNRError):
        apply_awgn(np.zeros(64), 20.0, seed=0)


@pytest.mark.parametrize("target", [60.0, 20.0, 0.0, -5.0])
def test_awgn_hits_target_snr(target):
    x = np.sin(2 * np.pi * np.arange(8000) / 80)
    y = apply_awgn(x, target, seed=11)
    assert snr_db(x, y) == pytest.approx(target, abs=0.1)


def test_awgn_is_deterministic_per_seed(rng):
    x = rng.standard_normal(512)
    assert np.array_equal(apply_awgn(x, 20.0, 5), apply_awgn(x, 20.0, 5))
    assert not np.array_equal(apply_awgn(x, 20.0, 5), apply_awgn(x, 20.0, 6))


def test_gain_examples():
    assert apply_gain(np.array([0.5, -0.25]), 2.0).tolist() == [1.0, -0.5]


def test_requantize_examples():
    assert apply_requantize(np.array([0.3, -0.3, 1.5]), 4).tolist() == [0.25, -0.25, 1.0]


def test_requantize_is_idempotent(rng):
    x = rng.uniform(-1.2, 1.2, 1000)
    once = apply_requantize(x, 8)
    assert np.array_equal(apply_requantize(once, 8), once)


def test_requantize_16_bits_keeps_pcm16_samples(rng):
    x = rng.integers(-32768, 32768, 4096).astype(np.int16) / 32768.0
    assert np.array_equal(apply_requantize(x, 16), x)


@settings(max_examples=100, deadline=None)
@given(
    arrays(np.float64, st.integers(min_value=1, max_value=128), elements=st.floats(min_value=-2.0, max_value=2.0)),
    st.integers(min_value=4, max_value=16),
)
def test_requantize_is_idempotent_for_any_depth(x, bits):
    once = apply_requantize(x, bits)
    assert np.array_equal(apply_requantize(once, bits), once)


def test_channel_order_is_gain_then_requantize():
    clip = AudioClip([0.3], 8000)
    out = apply_channel(clip, ChannelSpec(gain=2.0, requantize_bits=4))
    # 0.6 on a 1/8 grid rounds to 0.625; requantize-then-gain would give 0.5
    assert out.samples.tolist() == [0.625]


def test_identity_spec_copies(rng):
    clip = AudioClip(rng.standard_normal(32), 8000)
    out = apply_channel(clip, ChannelSpec.identity_spec())
    assert np.array_equal(out.samples, clip.samples)
    assert out.samples is not clip.samples
    assert ChannelSpec(awgn_snr_db=math.inf).is_identity


def test_complex_planes_get_distinct_noise(rng):
    plane = rng.standard_normal(256)
    clip = ComplexClip(plane, plane.copy(), 8000)
    out = apply_channel(clip, ChannelSpec(awgn_snr_db=20.0, seed=9))
    assert not np.array_equal(out.real_part - plane, out.imag_part - plane)

    again = apply_channel(clip, ChannelSpec(awgn_snr_db=20.0, seed=9))
    assert np.array_equal(out.real_part, again.real_part)
    assert np.array_equal(out.imag_part, again.imag_part)


def test_derive_seed_is_stable_and_distinct():
    assert derive_seed(7, 0) == derive_seed(7, 0)
    assert len({derive_seed(7, i) for i in range(100)}) == 100
    assert 0 <= derive_seed(2**64 - 1, 3) < 2**64


def test_spec_validation():
    with pytest.raises(ValueError):
        ChannelSpec()
    with pytest.raises(ValueError):
        ChannelSpec(gain=0.0)
    with pytest.raises(ValueError):
        ChannelSpec(requantize_bits=3)
    with pytest.raises(ValueError):
        ChannelSpec(awgn_snr_db=20.0, seed=-1)
    with pytest.raises(ValueError):
        ChannelSpec(awgn_snr_db=float("nan"))
