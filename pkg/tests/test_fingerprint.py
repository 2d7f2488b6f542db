import numpy as np
import pytest

from corpusaudit.errors import ParseError
from corpusaudit.fingerprint import (
    DEFAULT_THRESHOLD,
    FingerprintParams,
    compute_fingerprint,
    find_exact_repetitions,
    match,
    match_all,
    pack_key,
    read_cache,
    write_cache,
)
from corpusaudit.corpus import Corpus, Excerpt
from corpusaudit.synth import delayed_copy, tone_cloud

SR = 22050


@pytest.fixture(scope="module")
def clouds():
    rng = np.random.default_rng(42)
    return [tone_cloud(rng, duration=8.0) for _ in range(6)]


def test_fingerprint_deterministic(clouds):
    a = compute_fingerprint(clouds[0], owner="x")
    b = compute_fingerprint(clouds[0], owner="x")
    assert a.hashes == b.hashes


def test_silence_yields_no_hashes():
    fp = compute_fingerprint(np.zeros(SR * 5), owner="quiet")
    assert len(fp.hashes) == 0


def test_self_match_is_one(clouds):
    fp = compute_fingerprint(clouds[0], owner="x")
    result = match(fp, fp)
    assert result.score == 1.0
    assert result.offset_mode == 0


def test_match_symmetric_score(clouds):
    a = compute_fingerprint(clouds[0], owner="a")
    b = compute_fingerprint(clouds[1], owner="b")
    assert match(a, b).score == pytest.approx(match(b, a).score)


def test_unrelated_signals_score_low(clouds):
    fps = [compute_fingerprint(s, owner=f"c{i}") for i, s in enumerate(clouds)]
    for i in range(len(fps)):
        for j in range(i + 1, len(fps)):
            assert match(fps[i], fps[j]).score < 0.05


def test_delayed_scaled_copy_scores_high(clouds):
    original = clouds[0]
    copy = delayed_copy(original, delay_seconds=0.7, gain=0.4, sample_rate=SR)
    a = compute_fingerprint(original, owner="orig")
    b = compute_fingerprint(copy, owner="copy")
    result = match(a, b)
    assert result.score > 0.5
    # modal offset should reflect the planted delay in hops
    expected = round(0.7 * SR / 512)
    assert abs(result.offset_mode) in range(expected - 2, expected + 3)


def test_gain_invariance(clouds):
    loud = compute_fingerprint(clouds[2] * 4.0, owner="loud")
    soft = compute_fingerprint(clouds[2] * 0.05, owner="soft")
    assert match(loud, soft).score == 1.0


def test_hash_count_gain_independent(clouds):
    base = compute_fingerprint(clouds[3], owner="b")
    scaled = compute_fingerprint(clouds[3] * 0.1, owner="s")
    assert len(base.hashes) == len(scaled.hashes)


def test_shift_by_whole_hops_preserves_hashes(clouds):
    params = FingerprintParams()
    shifted = np.concatenate([np.zeros(params.hop * 4), clouds[4]])
    a = compute_fingerprint(clouds[4], owner="a")
    b = compute_fingerprint(shifted, owner="b")
    result = match(a, b)
    assert result.score > 0.8
    assert abs(result.offset_mode) == 4


def test_pack_key_injective_on_ranges():
    seen = set()
    for f1 in (0, 17, 511):
        for f2 in (0, 250, 511):
            for dt in (1, 33, 64):
                key = pack_key(f1, f2, dt)
                assert key not in seen
                seen.add(key)
                assert key >> 17 == f1
                assert (key >> 7) & 0x3FF == f2
                assert key & 0x7F == dt


def test_match_all_pairs(clouds):
    fps = [compute_fingerprint(s, owner=f"c{i}") for i, s in enumerate(clouds[:3])]
    results = match_all(fps)
    assert len(results) == 3
    assert {tuple(sorted(r.pair)) for r in results} == {
        ("c0", "c1"), ("c0", "c2"), ("c1", "c2")}


def planted_corpus(tmp_path, rng):
    """Six excerpts, two planted duplicate pairs."""
    from scipy.io import wavfile
    signals = {}
    base0 = tone_cloud(rng, duration=8.0)
    base1 = tone_cloud(rng, duration=8.0)
    signals["g.000"] = base0
    signals["g.001"] = delayed_copy(base0, 0.5, 0.6, SR)
    signals["g.002"] = base1
    signals["g.003"] = delayed_copy(base1, 1.1, 0.3, SR)
    signals["g.004"] = tone_cloud(rng, duration=8.0)
    signals["g.005"] = tone_cloud(rng, duration=8.0)
    excerpts = []
    for name, sig in signals.items():
        path = tmp_path / f"{name}.wav"
        wavfile.write(path, SR, sig.astype(np.float32))
        excerpts.append(Excerpt(id=name, label="g", artist="A", audio_path=str(path)))
    return Corpus(labels=("g",), excerpts=tuple(excerpts))


def test_find_exact_repetitions_recovers_planted_pairs(tmp_path):
    rng = np.random.default_rng(11)
    corpus = planted_corpus(tmp_path, rng)
    groups = find_exact_repetitions(corpus)
    assert [sorted(g) for g in groups] == [["g.000", "g.001"], ["g.002", "g.003"]]


def test_threshold_monotonicity(tmp_path):
    rng = np.random.default_rng(12)
    corpus = planted_corpus(tmp_path, rng)
    loose = find_exact_repetitions(corpus, threshold=0.05)
    strict = find_exact_repetitions(corpus, threshold=0.99)
    loose_members = {m for g in loose for m in g}
    strict_members = {m for g in strict for m in g}
    assert strict_members <= loose_members
    default = find_exact_repetitions(corpus, threshold=DEFAULT_THRESHOLD)
    assert len(default) == 2


def test_cache_round_trip(tmp_path, clouds):
    fps = {f"c{i}": compute_fingerprint(s, owner=f"c{i}")
           for i, s in enumerate(clouds[:3])}
    path = tmp_path / "prints.bin"
    write_cache(str(path), fps)
    loaded = read_cache(str(path))
    assert sorted(loaded) == sorted(fps)
    for eid in fps:
        assert loaded[eid].hashes == fps[eid].hashes
    with open(path, "rb") as fh:
        assert fh.read(5) == b"DFPK1"


def test_cache_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOPE!" + b"\x00" * 16)
    with pytest.raises(ParseError):
        read_cache(str(path))


def test_empty_fingerprint_matches_nothing(clouds):
    silent = compute_fingerprint(np.zeros(SR * 5), owner="s")
    other = compute_fingerprint(clouds[5], owner="o")
    assert match(silent, other).score == 0.0
    assert match(silent, silent).score == 0.0
