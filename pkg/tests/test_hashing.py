import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import gray
from surfhash.detector import DetectorConfig, detect_keypoints
from surfhash.errors import DomainError, HashFormatError, HashGenerationError
from surfhash.hashing import (HEADER_SIZE, ImageHash, config_fingerprint, decode_hash,
                              encode_hash, generate_hash)
from surfhash.kmeans import KMeansConfig
from surfhash.synthetic import square_image


def _hash(centers, w=640, h=480, fp=0xDEADBEEF):
    return ImageHash(np.asarray(centers, float), w, h, fp)


def test_k1_hash_is_keypoint_centroid(scene):
    h = generate_hash(scene)
    pts = np.array([(k.x, k.y) for k in detect_keypoints(scene)], float)
    assert h.k == 1
    assert np.allclose(h.centers[0], pts.mean(axis=0), atol=1e-9)
    assert (h.source_width, h.source_height) == (scene.width, scene.height)


def test_featureless_image_raises():
    with pytest.raises(HashGenerationError):
        generate_hash(gray(np.full((64, 64), 0.25)))


def test_generation_deterministic():
    cfg = KMeansConfig(k=2, rng_seed=11)
    img = square_image(64, 8)
    assert generate_hash(img, kcfg=cfg) == generate_hash(img, kcfg=cfg)


def test_k1_payload_is_64_bits():
    data = encode_hash(_hash([(12.5, 300.25)]))
    assert len(data) - HEADER_SIZE == 8
    assert len(data) == 27


def test_k3_payload():
    assert len(encode_hash(_hash([(1, 2), (3, 4), (5, 6)]))) - HEADER_SIZE == 24


def test_layout_is_bit_exact():
    data = encode_hash(_hash([(1.5, -2.0)], w=513, h=7, fp=0x01020304))
    assert data[:4] == b"IHSH"
    assert data[4] == 1
    assert data[5:7] == b"\x00\x01"
    assert data[7:11] == (513).to_bytes(4, "big")
    assert data[11:15] == (7).to_bytes(4, "big")
    assert data[15:19] == bytes([1, 2, 3, 4])
    assert data[19:] == struct.pack(">ff", 1.5, -2.0)


def test_round_trip():
    h = _hash([(123.456789, 0.1), (511.9, 77.7)])
    back = decode_hash(encode_hash(h))
    assert back.k == 2 and back.detector_fingerprint == h.detector_fingerprint
    assert (back.source_width, back.source_height) == (640, 480)
    assert np.allclose(back.centers, h.centers, atol=1e-4)
    assert back == h.quantized()
    assert encode_hash(back) == encode_hash(h)


@pytest.mark.parametrize("data", [b"", b"IHS", b"XXXX" + bytes(23)])
def test_bad_bytes(data):
    with pytest.raises(HashFormatError):
        decode_hash(data)


def test_bad_version():
    data = bytearray(encode_hash(_hash([(1, 1)])))
    data[4] = 2
    with pytest.raises(HashFormatError, match="version"):
        decode_hash(bytes(data))


def test_length_mismatch():
    data = bytearray(encode_hash(_hash([(1, 1)])))
    data[5:7] = (2).to_bytes(2, "big")
    with pytest.raises(HashFormatError, match="expected 16"):
        decode_hash(bytes(data))


def test_truncated_and_trailing():
    data = encode_hash(_hash([(1, 1), (2, 2)]))
    with pytest.raises(HashFormatError):
        decode_hash(data[:-1])
    with pytest.raises(HashFormatError):
        decode_hash(data + b"\x00")


def test_non_finite_rejected():
    data = encode_hash(_hash([(1, 1)]))[:HEADER_SIZE] + struct.pack(">ff", float("nan"), 0.0)
    with pytest.raises(HashFormatError, match="non-finite"):
        decode_hash(data)


def test_zero_k_rejected():
    data = bytearray(encode_hash(_hash([(1, 1)])))
    data[5:7] = b"\x00\x00"
    with pytest.raises(HashFormatError):
        decode_hash(bytes(data[:HEADER_SIZE]))


def test_image_hash_invariants():
    with pytest.raises(DomainError):
        _hash(np.zeros((0, 2)))
    with pytest.raises(DomainError):
        _hash([(np.inf, 0)])


def test_text_dump():
    assert _hash([(1.5, 2.0), (3.25, 4.125)]).to_text() == "1.500000 2.000000\n3.250000 4.125000\n"


def test_fingerprint_tracks_config_but_not_seed():
    d, k = DetectorConfig(), KMeansConfig()
    base = config_fingerprint(d, k)
    assert base == config_fingerprint(DetectorConfig(), KMeansConfig(rng_seed=99))
    assert base != config_fingerprint(DetectorConfig(response_threshold=2e-4), k)
    assert base != config_fingerprint(d, KMeansConfig(k=2))
    assert 0 <= base < 2**32


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 1024), st.integers(0, 2**31))
def test_payload_size_and_float32_round_trip(k, seed):
    rng = np.random.default_rng(seed)
    h = _hash(rng.uniform(0, 2**13, size=(k, 2)), w=2**13, h=2**13, fp=seed)
    data = encode_hash(h)
    assert len(data) - HEADER_SIZE == 8 * k
    back = decode_hash(data)
    # float32 round-to-nearest: error at most half an ulp, i.e. 2**-24 relative
    assert np.all(np.abs(back.centers - h.centers) <= np.abs(h.centers) * 2.0**-24)
    assert encode_hash(back) == data


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 2**11, exclude_max=True), min_size=2, max_size=2))
def test_sub_1e4_error_below_2048(xy):
    back = decode_hash(encode_hash(_hash([xy])))
    assert np.max(np.abs(back.centers[0] - xy)) <= 1e-4
