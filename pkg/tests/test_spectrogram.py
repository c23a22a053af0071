import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.signal import get_window

from helpers import dominant_hz
from spectral_percept import spectrogram as S
from spectral_percept.audio import AudioClip
from spectral_percept.signals import PMQD_SECONDS, tone

N_PMQD = 67328


def test_stft_matches_direct_dft(rng):
    x = rng.standard_normal(3000)
    n_fft, hop = 256, 100
    padded = np.pad(x, n_fft // 2, mode="reflect")
    win = get_window("hann", n_fft)
    frames = 1 + len(x) // hop
    ref = np.stack(
        [np.fft.rfft(win * padded[t * hop : t * hop + n_fft]) for t in range(frames)], axis=1
    )
    np.testing.assert_allclose(S.stft(x, n_fft, hop), ref, atol=1e-10)


def test_zero_clip_magnitude():
    mag = S.stft_magnitude(AudioClip(np.zeros(5000), 16000), 1024, 260)
    assert mag.shape == (513, 1 + 5000 // 260)
    assert not mag.any()


def test_tone_argmax_bin():
    # cosine phase: reflect padding at the edges continues the tone exactly
    t = np.arange(N_PMQD) / 16000
    mag = S.stft_magnitude(AudioClip(0.5 * np.cos(2 * np.pi * 1000 * t), 16000), 1024, 260)
    assert round(1000 * 1024 / 16000) == 64
    assert np.all(mag.argmax(axis=0) == 64)
    # a sine is odd about t=0, so only the first frame is smeared by the reflection
    assert np.all(S.stft_magnitude(tone(1000.0), 1024, 260)[:, 1:].argmax(axis=0) == 64)


def test_frame_count():
    assert S.stft_magnitude(AudioClip(np.zeros(N_PMQD), 16000), 1024, 260).shape[1] == 259


def test_istft_inverts_stft(rng):
    x = rng.standard_normal(4000)
    for n_fft, hop in [(1024, 260), (512, 128), (256, 200)]:
        y = S.istft(S.stft(x, n_fft, hop), n_fft, hop, length=len(x))
        np.testing.assert_allclose(y, x, atol=1e-10)


def test_filterbank_shape_and_support():
    fb = S.mel_filterbank(256, 1024, 16000)
    assert fb.shape == (256, 513)
    assert np.all(fb >= 0)
    assert np.all(fb.sum(axis=1) > 0)
    for row in fb:
        nz = np.flatnonzero(row)
        assert nz[-1] - nz[0] + 1 == nz.size


def test_filterbank_centers_follow_inverse_mel():
    fb = S.mel_filterbank(256, 1024, 16000)
    top = 2595 * np.log10(1 + 8000 / 700)
    mels = np.linspace(0, top, 258)[1:-1]
    centers_hz = 700 * (10 ** (mels / 2595) - 1)
    bin_hz = 16000 / 1024
    peak_bins = fb.argmax(axis=1)
    assert np.max(np.abs(peak_bins - centers_hz / bin_hz)) <= 0.5
    np.testing.assert_allclose(S.mel_band_centers(256, 16000), centers_hz, rtol=1e-12)


def test_filterbank_empty_filter_policy():
    # lowest default triangle is narrower than one FFT bin
    with pytest.raises(S.MelFilterError):
        S.mel_filterbank(256, 1024, 16000, fill_empty=False)
    with pytest.raises(S.MelFilterError):
        S.mel_filterbank(600, 1024, 16000)
    assert np.all(S.mel_filterbank(40, 1024, 16000, fill_empty=False).sum(axis=1) > 0)


def test_mel_params_validation():
    with pytest.raises(ValueError):
        S.MelParams(hop=2048)
    with pytest.raises(ValueError):
        S.MelParams(eps=0)
    with pytest.raises(ValueError):
        S.MelParams(n_mels=0)


def test_silent_clip_spectrogram():
    spec = S.mel_spectrogram(AudioClip(np.zeros(N_PMQD), 16000))
    assert spec.shape == (256, 256)
    assert not spec.values.any()
    assert spec.log_lo == spec.log_hi == pytest.approx(np.log(0.001), rel=1e-7)
    assert not S.invert_mel(spec).any()


def test_pmqd_clip_dimensions(music_spec):
    assert music_spec.shape == (256, 256)
    assert music_spec.values.dtype == np.float32
    assert music_spec.values.min() >= 0 and music_spec.values.max() <= 1


def test_center_crop_of_raw_frames():
    clip = tone(700.0, seconds=PMQD_SECONDS)
    assert len(clip) == N_PMQD
    full = S.mel_spectrogram(clip, S.MelParams(target_frames=259))
    cropped = S.mel_spectrogram(clip)
    np.testing.assert_array_equal(cropped.values, full.values[:, 1:257])


def test_short_clip_is_right_padded():
    spec = S.mel_spectrogram(tone(700.0, seconds=1.0))
    raw = 1 + 16000 // 260
    assert spec.shape == (256, 256)
    assert spec.values[:, :raw].any()
    assert not spec.values[:, raw:].any()


def test_rate_mismatch_rejected():
    with pytest.raises(ValueError):
        S.mel_spectrogram(AudioClip(np.zeros(100), 48000))


def test_invert_mel_round_trip(rng):
    p = S.MelParams(target_frames=40)
    fb = S.mel_filterbank(p.n_mels, p.n_fft, p.sample_rate)
    mag = rng.random((p.n_freqs, 40))
    mel = fb @ mag
    spec = S.scale_log_mel(mel, p)
    lin = S.invert_mel(spec)
    oracle = np.maximum(np.linalg.pinv(fb) @ S.unscale(spec), 0)
    np.testing.assert_allclose(lin, oracle, rtol=1e-9, atol=1e-12)
    assert np.linalg.norm(lin - mag) / np.linalg.norm(mag) < 0.5


def test_unscale_inverts_scaling(rng):
    p = S.MelParams(target_frames=30)
    mel = rng.random((256, 30)) * 5
    spec = S.scale_log_mel(mel, p)
    np.testing.assert_allclose(S.unscale(spec), mel, rtol=1e-5, atol=1e-5)


def test_griffin_lim_tone_peak():
    clip = tone(500.0)
    mag = S.stft_magnitude(clip, 1024, 260)
    out = S.griffin_lim(mag, 1024, 260, iters=32)
    assert len(out) == (mag.shape[1] - 1) * 260
    assert abs(dominant_hz(out.samples, 16000) - 500) <= 16000 / len(out)


@pytest.mark.parametrize("init", ["zero", "frame", "random"])
def test_griffin_lim_residual_monotone(init, rng):
    x = rng.standard_normal(8000)
    mag = S.stft_magnitude(AudioClip(x, 16000), 512, 128)
    res: list[float] = []
    S.griffin_lim(mag, 512, 128, iters=20, init=init, seed=3, residuals=res)
    assert len(res) == 21
    assert np.all(np.diff(res) <= 1e-9 * res[0])


def test_griffin_lim_zero_iters_deterministic():
    mag = S.stft_magnitude(tone(440.0, seconds=0.5), 1024, 260)
    a = S.griffin_lim(mag, 1024, 260, iters=0).samples
    b = S.griffin_lim(mag, 1024, 260, iters=0).samples
    np.testing.assert_array_equal(a, b)
    r1 = S.griffin_lim(mag, 1024, 260, iters=2, init="random", seed=7).samples
    r2 = S.griffin_lim(mag, 1024, 260, iters=2, init="random", seed=7).samples
    np.testing.assert_array_equal(r1, r2)


def test_griffin_lim_validation():
    with pytest.raises(ValueError):
        S.griffin_lim(np.ones((10, 4)), 1024, 260)
    with pytest.raises(ValueError):
        S.griffin_lim(np.ones((513, 4)), 1024, 260, iters=-1)
    with pytest.raises(ValueError):
        S.griffin_lim(np.ones((513, 4)), 1024, 260, init="bogus")


def _random_spec(rng, h=256, w=256):
    return S.Spectrogram(
        rng.random((h, w)).astype(np.float32),
        S.MelParams(n_mels=h, target_frames=w),
        float(np.float32(-6.9)),
        float(np.float32(3.25)),
    )


def test_sgram_round_trip(tmp_path, rng):
    spec = _random_spec(rng)
    path = tmp_path / "r.sgram"
    S.save_sgram(spec, path)
    assert path.stat().st_size == 29 + 4 * 256 * 256
    back = S.load_sgram(path)
    np.testing.assert_array_equal(back.values, spec.values)
    assert (back.log_lo, back.log_hi) == (spec.log_lo, spec.log_hi)
    assert back.params == spec.params
    assert S.is_sgram(path)


@settings(max_examples=25, deadline=None)
@given(h=st.integers(1, 40), w=st.integers(1, 40), seed=st.integers(0, 2**16))
def test_sgram_round_trip_property(tmp_path_factory, h, w, seed):
    spec = _random_spec(np.random.default_rng(seed), h, w)
    path = tmp_path_factory.mktemp("sg") / "p.sgram"
    S.save_sgram(spec, path)
    back = S.load_sgram(path)
    assert path.stat().st_size == 29 + 4 * h * w
    np.testing.assert_array_equal(back.values, spec.values)


def test_sgram_errors(tmp_path, rng):
    path = tmp_path / "r.sgram"
    S.save_sgram(_random_spec(rng, 8, 8), path)
    raw = path.read_bytes()

    bad = tmp_path / "magic.sgram"
    bad.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(S.SgramMagicError):
        S.load_sgram(bad)

    short = tmp_path / "short.sgram"
    short.write_bytes(raw[:-1])
    with pytest.raises(S.SgramTruncatedError):
        S.load_sgram(short)
    short.write_bytes(raw[:10])
    with pytest.raises(S.SgramTruncatedError):
        S.load_sgram(short)

    ver = tmp_path / "ver.sgram"
    ver.write_bytes(raw[:4] + bytes([9]) + raw[5:])
    with pytest.raises(S.SgramVersionError):
        S.load_sgram(ver)

    kinds = {S.SgramMagicError, S.SgramTruncatedError, S.SgramVersionError}
    assert len(kinds) == 3 and all(issubclass(k, S.SgramError) for k in kinds)
