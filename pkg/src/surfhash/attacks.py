"""Content-preserving attacks and tamper patches used to build test corpora."""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DomainError
from .image_io import GrayImage, load_grayscale, save_png
from .integral import BoxRegion

FILL_MODES = ("solid-fill", "noise-fill", "splice-from-donor")
MANIFEST_COLUMNS = ("source_path", "output_path", "kind", "parameter", "rng_seed", "label")


@dataclass(frozen=True)
class TamperSpec:
    area_fraction: float
    mode: str = "noise-fill"
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.area_fraction < 1.0:
            raise DomainError("area_fraction must lie in (0, 1)")
        if self.mode not in FILL_MODES:
            raise DomainError(f"unknown fill mode {self.mode!r}; choose from {FILL_MODES}")


def jpeg_compress(img: GrayImage, quality: int) -> GrayImage:
    if not 1 <= quality <= 100:
        raise DomainError("JPEG quality must lie in 1..100")
    buf = io.BytesIO()
    Image.fromarray(img.to_uint8(), mode="L").save(buf, format="JPEG", quality=int(quality))
    buf.seek(0)
    with Image.open(buf) as im:
        return GrayImage.from_uint8(np.asarray(im.convert("L")))


def salt_pepper(img: GrayImage, density: float, rng_seed: int = 0) -> GrayImage:
    if not 0.0 <= density <= 1.0:
        raise DomainError("density must lie in [0, 1]")
    rng = np.random.default_rng(rng_seed)
    hit = rng.random(img.pixels.shape) < density
    salt = rng.random(img.pixels.shape) < 0.5
    out = img.pixels.copy()
    out[hit] = np.where(salt[hit], 1.0, 0.0)
    return GrayImage(out)


def tamper_patch(img: GrayImage, spec: TamperSpec,
                 donor: GrayImage | None = None) -> tuple[GrayImage, BoxRegion]:
    """Overwrite one random rectangle covering at most ``area_fraction`` of the image.

    The rectangle's aspect ratio (width / height) is drawn from [0.5, 2].
    """
    rng = np.random.default_rng(spec.rng_seed)
    area = math.floor(spec.area_fraction * img.width * img.height)
    aspect = rng.uniform(0.5, 2.0)
    pw = math.floor(math.sqrt(area * aspect))
    ph = area // pw if pw else 0
    if pw < 1 or ph < 1 or pw > img.width or ph > img.height:
        raise DomainError(
            f"a {spec.area_fraction:.3g}-area patch (aspect {aspect:.3f}) does not fit "
            f"a {img.width}x{img.height} image")
    x0 = int(rng.integers(0, img.width - pw + 1))
    y0 = int(rng.integers(0, img.height - ph + 1))
    region = BoxRegion(x0, y0, x0 + pw - 1, y0 + ph - 1)

    out = img.pixels.copy()
    if spec.mode == "solid-fill":
        fill = np.full((ph, pw), rng.uniform())
    elif spec.mode == "noise-fill":
        fill = rng.uniform(size=(ph, pw))
    else:
        if donor is None:
            raise DomainError("splice-from-donor needs a donor image")
        if donor.width < pw or donor.height < ph:
            raise DomainError("donor image is smaller than the patch")
        dx = int(rng.integers(0, donor.width - pw + 1))
        dy = int(rng.integers(0, donor.height - ph + 1))
        fill = donor.pixels[dy:dy + ph, dx:dx + pw]
    out[y0:y0 + ph, x0:x0 + pw] = fill
    return GrayImage(out), region


@dataclass(frozen=True)
class ManifestRow:
    """One manifest line. Relative paths are taken relative to ``base``."""

    source_path: str
    output_path: str
    kind: str
    parameter: float
    rng_seed: int
    label: str
    base: str = field(default="", compare=False)

    @property
    def source_file(self) -> Path:
        return _resolve(self.base, self.source_path)

    @property
    def output_file(self) -> Path:
        return _resolve(self.base, self.output_path)

    def as_csv(self) -> dict:
        return {
            "source_path": self.source_path,
            "output_path": self.output_path,
            "kind": self.kind,
            "parameter": f"{self.parameter:g}",
            "rng_seed": str(self.rng_seed),
            "label": self.label,
        }


def write_manifest(rows: list[ManifestRow], path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=MANIFEST_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row.as_csv())


def read_manifest(path: str | os.PathLike) -> list[ManifestRow]:
    base = str(Path(path).resolve().parent)
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(MANIFEST_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise DomainError(f"manifest is missing columns: {sorted(missing)}")
        for rec in reader:
            rows.append(ManifestRow(
                source_path=rec["source_path"],
                output_path=rec["output_path"],
                kind=rec["kind"],
                parameter=float(rec["parameter"]),
                rng_seed=int(rec["rng_seed"]),
                label=rec["label"],
                base=base,
            ))
    return rows


def _resolve(base: str, p: str) -> Path:
    q = Path(p)
    return q if q.is_absolute() or not base else Path(base) / q


IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}


def build_corpus(srcdir: str | os.PathLike, outdir: str | os.PathLike,
                 manifest: str | os.PathLike, *,
                 jpeg_qualities=(90,), densities=(0.02,), area_fractions=(0.05,),
                 mode: str = "noise-fill", seed: int = 0) -> list[ManifestRow]:
    """Attack every PNG/JPEG in ``srcdir`` and write PNGs plus a manifest CSV.

    Each source gets one output per JPEG quality, noise density and tamper
    area. Per-output seeds are ``seed`` plus the output's running index, so
    the corpus is reproducible from ``seed`` alone. Paths in the manifest
    are relative to the manifest's directory.
    """
    src = Path(srcdir)
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    base = Path(manifest).resolve().parent

    def rel(p: Path) -> str:
        return Path(os.path.relpath(p.resolve(), base)).as_posix()

    sources = sorted(p for p in src.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    rows = []
    counter = 0
    for path in sources:
        img = load_grayscale(path)
        stem = path.stem
        jobs = ([("jpeg", q) for q in jpeg_qualities]
                + [("saltpepper", d) for d in densities]
                + [("tamper", a) for a in area_fractions])
        for kind, param in jobs:
            rng_seed = seed + counter
            counter += 1
            if kind == "jpeg":
                attacked, label = jpeg_compress(img, int(param)), "original"
                name = f"{stem}_jpeg{int(param)}.png"
            elif kind == "saltpepper":
                attacked, label = salt_pepper(img, param, rng_seed), "original"
                name = f"{stem}_sp{param:g}_s{rng_seed}.png"
            else:
                attacked, _ = tamper_patch(img, TamperSpec(param, mode, rng_seed))
                label = "tampered"
                name = f"{stem}_tamper{param:g}_s{rng_seed}.png"
            target = out / name
            save_png(attacked, target)
            rows.append(ManifestRow(rel(path), rel(target), kind, float(param), rng_seed, label,
                                    str(base)))
    write_manifest(rows, manifest)
    return rows
