import numpy as np
import pytest

from corpusaudit.errors import IncompleteFeaturesError, TooShortError
from corpusaudit.features import (
    FRAME_SIZE,
    HOP,
    apply_normalization,
    excerpt_features,
    fit_normalization,
    frame_features,
    frame_signal,
    mel_filterbank,
    read_feature_cache,
    stft_magnitude,
    texture_vectors,
    write_feature_cache,
)

SR = 22050


def test_frame_count_formula():
    n = 661500
    frames = frame_signal(np.zeros(n))
    assert frames.shape == ((n - FRAME_SIZE) // HOP + 1, FRAME_SIZE)
    assert frames.shape[0] == 1290


def test_frame_signal_too_short():
    with pytest.raises(TooShortError):
        frame_signal(np.zeros(FRAME_SIZE - 1))


def test_frame_features_shape_and_determinism():
    rng = np.random.default_rng(0)
    x = rng.normal(size=SR * 2)
    a = frame_features(x)
    b = frame_features(x)
    assert a.shape[1] == 16
    assert np.array_equal(a, b)


def test_zcr_constant_signal():
    feats = frame_features(np.full(SR, 0.5))
    assert np.all(feats[:, 13] == 0.0)


def test_zcr_alternating_signal():
    x = np.tile([0.5, -0.5], SR)
    feats = frame_features(x)
    # every adjacent sample pair crosses zero: 1023 sign changes per frame
    assert np.all(feats[:, 13] == FRAME_SIZE - 1)


def test_centroid_pure_tone():
    t = np.arange(SR) / SR
    x = np.sin(2 * np.pi * 1000.0 * t)
    feats = frame_features(x)
    bin_width = SR / FRAME_SIZE
    assert np.all(np.abs(feats[:, 14] - 1000.0) < bin_width)


def test_centroid_and_rolloff_within_nyquist():
    rng = np.random.default_rng(1)
    feats = frame_features(rng.normal(size=SR))
    assert np.all(feats[:, 14] >= 0) and np.all(feats[:, 14] <= SR / 2)
    assert np.all(feats[:, 15] >= 0) and np.all(feats[:, 15] <= SR / 2)


def test_rolloff_is_minimal_85_percent_bin():
    rng = np.random.default_rng(2)
    x = rng.normal(size=SR)
    mag = stft_magnitude(x)
    feats = frame_features(x)
    bin_freqs = np.arange(mag.shape[1]) * SR / FRAME_SIZE
    for i in range(0, mag.shape[0], 7):
        total = mag[i].sum()
        r = feats[i, 15]
        below = mag[i, bin_freqs <= r].sum()
        assert below >= 0.85 * total
        prev_bins = bin_freqs < r
        if prev_bins.any():
            assert mag[i, prev_bins].sum() < 0.85 * total


def test_mfcc_amplitude_invariance():
    rng = np.random.default_rng(3)
    x = rng.normal(size=SR)
    a = frame_features(x)
    b = frame_features(2.0 * x)
    # doubling amplitude offsets only the DC coefficient
    assert not np.allclose(a[:, 0], b[:, 0])
    assert np.allclose(a[:, 1:13], b[:, 1:13], atol=1e-6)


def test_mel_filterbank_shape_and_area():
    fb = mel_filterbank(SR)
    assert fb.shape == (40, FRAME_SIZE // 2 + 1)
    bin_width = SR / FRAME_SIZE
    # unit area in frequency: sum of weights x bin width close to 1
    areas = fb.sum(axis=1) * bin_width
    assert np.all(np.abs(areas - 1.0) < 0.1)


def test_mel_filterbank_band_edges():
    fb = mel_filterbank(SR)
    bin_freqs = np.arange(FRAME_SIZE // 2 + 1) * SR / FRAME_SIZE
    active = fb.sum(axis=0) > 0
    assert bin_freqs[active].min() > 100.0
    assert bin_freqs[active].max() < 7000.0


def test_texture_vectors_shapes():
    rng = np.random.default_rng(4)
    frames = rng.normal(size=(1290, 16))
    tv = texture_vectors(frames)
    assert tv.shape == (9, 32)


def test_texture_vectors_identical_frames_zero_variance():
    frames = np.tile(np.arange(16.0), (130, 1))
    tv = texture_vectors(frames)
    assert np.allclose(tv[0, :16], np.arange(16.0))
    assert np.allclose(tv[0, 16:], 0.0)


def test_texture_vectors_two_pass_oracle():
    rng = np.random.default_rng(5)
    frames = rng.normal(size=(260, 16))
    tv = texture_vectors(frames)
    for b in range(2):
        block = frames[b * 130:(b + 1) * 130]
        mean = block.sum(axis=0) / 130
        var = ((block - mean) ** 2).sum(axis=0) / 130
        assert np.allclose(tv[b, :16], mean, rtol=1e-9)
        assert np.allclose(tv[b, 16:], var, rtol=1e-9)


def test_texture_vectors_remainder_discarded():
    rng = np.random.default_rng(6)
    frames = rng.normal(size=(300, 16))
    assert texture_vectors(frames).shape == (2, 32)
    assert np.array_equal(texture_vectors(frames), texture_vectors(frames[:260]))


def test_texture_vectors_too_few_frames():
    with pytest.raises(TooShortError):
        texture_vectors(np.zeros((129, 16)))


def test_excerpt_features_full_pipeline():
    rng = np.random.default_rng(7)
    x = rng.normal(size=661500)
    tv = excerpt_features(x)
    assert tv.shape == (9, 32)
    assert np.all(tv[:, 16:] >= 0)


def test_normalization_simple_map():
    nmap = fit_normalization(np.array([[0.0, 5.0], [2.0, 7.0]]))
    out = apply_normalization(nmap, np.array([[1.0, 6.0], [3.0, 5.0]]))
    assert np.allclose(out, [[0.5, 0.5], [1.5, 0.0]])


def test_normalization_training_set_in_unit_box():
    rng = np.random.default_rng(8)
    train = rng.normal(size=(50, 32))
    nmap = fit_normalization(train)
    out = apply_normalization(nmap, train)
    assert np.all(out >= 0.0) and np.all(out <= 1.0)


def test_normalization_unclamped_on_test():
    nmap = fit_normalization(np.array([[0.0], [2.0]]))
    out = apply_normalization(nmap, np.array([[3.0]]))
    assert out[0, 0] == pytest.approx(1.5)


def test_normalization_degenerate_dimension_warns():
    nmap = fit_normalization(np.array([[1.0, 0.0], [1.0, 2.0]]))
    with pytest.warns(UserWarning):
        out = apply_normalization(nmap, np.array([[1.0, 1.0]]))
    assert out[0, 0] == 0.0
    assert out[0, 1] == pytest.approx(0.5)


def test_feature_cache_round_trip(tmp_path):
    rng = np.random.default_rng(9)
    features = {"a.000": rng.normal(size=(9, 32)), "b.001": rng.normal(size=(9, 32))}
    path = tmp_path / "features.csv"
    write_feature_cache(path, features)
    loaded = read_feature_cache(path)
    assert sorted(loaded) == sorted(features)
    for eid in features:
        assert np.array_equal(loaded[eid], features[eid])


def test_feature_cache_rejects_other_csv(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("x,y\n1,2\n")
    with pytest.raises(IncompleteFeaturesError):
        read_feature_cache(path)
