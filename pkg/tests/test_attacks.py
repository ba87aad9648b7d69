import csv

import cv2
import numpy as np
import pytest

import oracles
from conftest import gray
from surfhash.attacks import (ManifestRow, TamperSpec, build_corpus, jpeg_compress,
                              read_manifest, salt_pepper, tamper_patch, write_manifest)
from surfhash.errors import DomainError
from surfhash.image_io import GrayImage, load_grayscale, save_png


def _gradient(h=64, w=96):
    return gray(np.add.outer(np.linspace(0.1, 0.6, h), np.linspace(0, 0.3, w)))


def test_jpeg_preserves_dimensions(scene):
    out = jpeg_compress(scene, 100)
    assert (out.width, out.height) == (scene.width, scene.height)


def test_jpeg_quality_100_psnr():
    img = _gradient()
    ours = oracles.psnr(jpeg_compress(img, 100).pixels, img.pixels)
    # reference codec round trip, independent of Pillow
    ok, buf = cv2.imencode(".jpg", img.to_uint8(), [cv2.IMWRITE_JPEG_QUALITY, 100])
    ref = oracles.psnr(cv2.imdecode(buf, cv2.IMREAD_GRAYSCALE) / 255.0, img.pixels)
    assert ok and ref > 40
    assert ours > 40


def test_jpeg_closure():
    img = jpeg_compress(jpeg_compress(_gradient(), 5), 5)
    assert isinstance(img, GrayImage) and img.pixels.shape == (64, 96)


def test_jpeg_quality_range():
    with pytest.raises(DomainError):
        jpeg_compress(_gradient(), 0)
    with pytest.raises(DomainError):
        jpeg_compress(_gradient(), 101)


def test_salt_pepper_zero_density_is_identity(scene):
    assert salt_pepper(scene, 0.0, 3) == scene


def test_salt_pepper_full_density():
    out = salt_pepper(_gradient(), 1.0, 3)
    assert set(np.unique(out.pixels)) <= {0.0, 1.0}


def test_salt_pepper_rate():
    img = gray(np.full((256, 256), 0.5))
    fractions = [np.mean(salt_pepper(img, 0.1, s).pixels != 0.5) for s in range(50)]
    assert abs(np.mean(fractions) - 0.1) <= 0.01
    # binomial standard error over 50 * 65536 trials is ~1.7e-4
    assert abs(np.mean(fractions) - 0.1) < 1e-3


def test_salt_pepper_polarity_balanced():
    out = salt_pepper(gray(np.full((256, 256), 0.5)), 0.2, 4).pixels
    salt, pepper = np.sum(out == 1.0), np.sum(out == 0.0)
    assert abs(salt - pepper) / (salt + pepper) < 0.03


def test_salt_pepper_deterministic(scene):
    assert salt_pepper(scene, 0.05, 9) == salt_pepper(scene, 0.05, 9)
    assert salt_pepper(scene, 0.05, 9) != salt_pepper(scene, 0.05, 10)


@pytest.mark.parametrize("frac,size,limit", [(0.05, 512, 13107), (0.30, 100, 3000)])
def test_patch_area_bound(frac, size, limit):
    img = gray(np.zeros((size, size)))
    for seed in range(20):
        _, r = tamper_patch(img, TamperSpec(frac, "solid-fill", seed))
        assert r.area <= limit
        # integer rounding of the sides bends the drawn aspect slightly
        assert 0.45 <= r.width / r.height <= 2.2


@pytest.mark.parametrize("mode", ["solid-fill", "noise-fill", "splice-from-donor"])
def test_patch_leaves_outside_untouched(scene, mode):
    donor = gray(np.random.default_rng(0).random((80, 80)))
    for seed in range(5):
        out, r = tamper_patch(scene, TamperSpec(0.05, mode, seed), donor=donor)
        mask = np.ones(scene.pixels.shape, bool)
        mask[r.y0:r.y1 + 1, r.x0:r.x1 + 1] = False
        assert np.array_equal(out.pixels[mask], scene.pixels[mask])
        assert out.pixels.shape == scene.pixels.shape
        assert not np.array_equal(out.pixels[~mask], scene.pixels[~mask])


def test_patch_deterministic(scene):
    spec = TamperSpec(0.05, "noise-fill", 42)
    a, ra = tamper_patch(scene, spec)
    b, rb = tamper_patch(scene, spec)
    assert a == b and ra == rb


def test_patch_errors():
    with pytest.raises(DomainError):
        TamperSpec(0.0)
    with pytest.raises(DomainError):
        TamperSpec(0.5, mode="blur")
    with pytest.raises(DomainError):
        tamper_patch(gray(np.zeros((3, 3))), TamperSpec(0.05))
    with pytest.raises(DomainError):
        tamper_patch(gray(np.zeros((10, 1000))), TamperSpec(0.9, rng_seed=1))
    with pytest.raises(DomainError):
        tamper_patch(gray(np.zeros((50, 50))), TamperSpec(0.1, "splice-from-donor"))


def test_manifest_round_trip(tmp_path):
    rows = [ManifestRow(str(tmp_path / "a.png"), str(tmp_path / "b.png"), "jpeg", 90, 3, "original")]
    write_manifest(rows, tmp_path / "m.csv")
    assert read_manifest(tmp_path / "m.csv") == rows


def test_build_corpus(tmp_path, scene):
    src = tmp_path / "src"
    src.mkdir()
    save_png(scene, src / "one.png")
    save_png(jpeg_compress(scene, 80), src / "two.png")
    (src / "notes.txt").write_text("ignored")
    rows = build_corpus(src, tmp_path / "out", tmp_path / "m.csv", jpeg_qualities=[90, 70],
                        densities=[0.01], area_fractions=[0.05], seed=100)
    assert len(rows) == 8
    with open(tmp_path / "m.csv", newline="") as fh:
        recs = list(csv.DictReader(fh))
    assert list(recs[0]) == ["source_path", "output_path", "kind", "parameter", "rng_seed", "label"]
    assert [r["kind"] for r in recs[:4]] == ["jpeg", "jpeg", "saltpepper", "tamper"]
    assert [r["label"] for r in recs[:4]] == ["original"] * 3 + ["tampered"]
    assert [int(r["rng_seed"]) for r in recs] == list(range(100, 108))
    for row in rows:
        img = load_grayscale(row.output_file)
        assert (img.width, img.height) == (scene.width, scene.height)
    assert read_manifest(tmp_path / "m.csv") == rows
    assert rows[0].source_path == "src/one.png"
    # reproducible from the seed alone
    again = build_corpus(src, tmp_path / "out2", tmp_path / "m2.csv", jpeg_qualities=[90, 70],
                         densities=[0.01], area_fractions=[0.05], seed=100)
    for a, b in zip(rows, again):
        assert load_grayscale(a.output_file) == load_grayscale(b.output_file)
