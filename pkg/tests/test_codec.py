import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from streamedit.codec import (
    BlockDCTCodec,
    LatentVideo,
    RGBVideo,
    chunk_boundaries,
    load_raw_video,
    save_raw_video,
    split_frames,
    temporal_map,
)


def video(T, H=16, W=16, seed=0):
    return RGBVideo(np.random.default_rng(seed).random((T, 3, H, W)))


@pytest.mark.parametrize("T,expected", [(1, 1), (9, 3), (81, 21)])
def test_latent_lengths(T, expected):
    lat = BlockDCTCodec().encode(video(T, 8, 8))
    assert lat.latents.shape[0] == expected


def test_first_chunk_groups():
    assert temporal_map(9) == [(0, 1), (1, 5), (5, 9)]


def test_invalid_frame_counts_and_sizes():
    codec = BlockDCTCodec()
    with pytest.raises(ValueError):
        codec.encode(video(8))
    with pytest.raises(ValueError):
        RGBVideo(np.zeros((9, 3, 12, 16)))


def test_roundtrip_error():
    v = video(9)
    out = BlockDCTCodec().decode(BlockDCTCodec().encode(v))
    assert np.abs(out.frames - v.frames).max() < 1e-6


@settings(max_examples=15, deadline=None)
@given(k=st.integers(0, 4), hb=st.integers(1, 3), wb=st.integers(1, 3), seed=st.integers(0, 1000))
def test_roundtrip_property(k, hb, wb, seed):
    v = video(1 + 4 * k, 8 * hb, 8 * wb, seed)
    codec = BlockDCTCodec()
    assert np.abs(codec.decode(codec.encode(v)).frames - v.frames).max() < 1e-6


def test_zero_latent_decodes_to_zero():
    lat = LatentVideo(np.zeros((3, 768, 2, 2), dtype=np.float32))
    assert np.all(BlockDCTCodec().decode(lat).frames == 0)


def test_causal_prefix_is_bitwise():
    v = video(21)
    codec = BlockDCTCodec()
    full = codec.encode(v).latents
    for k in range(6):
        assert np.array_equal(codec.encode(RGBVideo(v.frames[: 1 + 4 * k])).latents, full[: k + 1])


def test_streaming_matches_offline():
    v = video(81, 8, 8)
    codec = BlockDCTCodec()
    lat = codec.encode(v).latents
    streamed = np.concatenate(list(codec.encode_stream(split_frames(v.frames))))
    assert np.array_equal(streamed, lat)
    decoded = np.concatenate(list(codec.decode_stream(np.split(lat, 7))))
    assert np.array_equal(decoded, codec.decode(LatentVideo(lat)).frames)


def test_chunk_boundaries():
    assert chunk_boundaries(21, 3) == [(9, 3)] + [(12, 3)] * 6
    assert chunk_boundaries(3) == [(9, 3)]
    assert sum(n for n, _ in chunk_boundaries(21, 3)) == 81
    with pytest.raises(ValueError):
        chunk_boundaries(20, 3)


def test_malformed_temporal_map():
    with pytest.raises(ValueError):
        LatentVideo(np.zeros((2, 768, 1, 1)), [(0, 4), (4, 8)])
    with pytest.raises(ValueError):
        LatentVideo(np.zeros((2, 768, 1, 1)), [(0, 1), (2, 6)])


def test_lossy_mode_keeps_low_frequencies():
    v = video(5, 8, 8)
    codec = BlockDCTCodec(n_channels=48).fit()
    lat = codec.encode(v)
    assert lat.latents.shape[1] == 48
    err_lossy = np.abs(codec.decode(lat).frames - v.frames).mean()
    # a constant video lives entirely in the DC coefficients
    const = RGBVideo(np.full((5, 3, 8, 8), 0.25))
    assert np.abs(codec.decode(codec.encode(const)).frames - 0.25).max() < 1e-6
    assert err_lossy > 1e-3


def test_transformer_interface():
    v = video(5)
    codec = BlockDCTCodec().fit()
    assert codec.get_params()["n_channels"] is None
    np.testing.assert_allclose(codec.inverse_transform(codec.transform(v.frames)), v.frames, atol=1e-6)


def test_raw_video_roundtrip(tmp_path):
    v = video(9)
    save_raw_video(tmp_path / "v.raw", v)
    back = load_raw_video(tmp_path / "v.raw")
    assert back.fps == 16.0 and np.array_equal(back.frames, v.frames.astype(np.float32))
    data = (tmp_path / "v.raw").read_bytes()
    (tmp_path / "bad.raw").write_bytes(data[:-4])
    with pytest.raises(ValueError):
        load_raw_video(tmp_path / "bad.raw")
