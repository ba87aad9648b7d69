"""Experiment drivers: k sweep, threshold calibration and corpus evaluation.

Per-image work is independent. Functions taking ``jobs`` farm it out to a
process pool; results are collected in input order so aggregates never
depend on scheduling.
"""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .attacks import ManifestRow
from .detector import DetectorConfig, detect_keypoints
from .errors import DomainError, HashGenerationError
from .hashing import hash_from_keypoints
from .image_io import GrayImage, load_grayscale
from .kmeans import KMeansConfig
from .verifier import TAMPERED, decide, min_center_distance, recompute_from_keypoints, report

log = logging.getLogger(__name__)


def _map(fn: Callable, items: Sequence, jobs: int | None) -> list:
    if jobs is None:
        jobs = os.cpu_count() or 1
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------- k sweep


@dataclass
class SweepRow:
    k: int
    per_image_min_distance: list[float]
    skipped: list[int] = field(default_factory=list)  # pair indices lacking k keypoints

    @property
    def average_min_distance(self) -> float:
        if not self.per_image_min_distance:
            return math.nan
        return float(np.mean(self.per_image_min_distance))


def _sweep_pair(args):
    (original, comparison), k_values, dcfg, kcfg_base = args
    kp_a = detect_keypoints(original, dcfg)
    kp_b = detect_keypoints(comparison, dcfg)
    out = {}
    for k in k_values:
        if len(kp_a) < k or len(kp_b) < k:
            out[k] = None
            continue
        kcfg = KMeansConfig(k, kcfg_base.max_iterations, kcfg_base.tolerance, kcfg_base.rng_seed)
        sent = hash_from_keypoints(kp_a, original.width, original.height, dcfg, kcfg)
        rec = recompute_from_keypoints(kp_b, comparison.width, comparison.height, sent, dcfg, kcfg)
        out[k] = min_center_distance(sent, rec.hash)
    return out


def sweep_k(pairs: Sequence[tuple[GrayImage, GrayImage]], k_values: Iterable[int],
            dcfg: DetectorConfig | None = None, kcfg_base: KMeansConfig | None = None,
            jobs: int | None = 1) -> list[SweepRow]:
    dcfg = dcfg or DetectorConfig()
    kcfg_base = kcfg_base or KMeansConfig()
    k_values = list(k_values)
    per_pair = _map(_sweep_pair, [(p, k_values, dcfg, kcfg_base) for p in pairs], jobs)
    rows = []
    for k in k_values:
        row = SweepRow(k, [])
        for i, cells in enumerate(per_pair):
            if cells[k] is None:
                row.skipped.append(i)
                log.info("k=%d: pair %d has too few keypoints, skipped", k, i)
            else:
                row.per_image_min_distance.append(cells[k])
        rows.append(row)
    return rows


def write_sweep_csv(rows: list[SweepRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "pairs", "skipped", "average_min_distance", "per_image_min_distance"])
        for r in rows:
            w.writerow([r.k, len(r.per_image_min_distance), len(r.skipped),
                        _fmt(r.average_min_distance),
                        " ".join(_fmt(d) for d in r.per_image_min_distance)])


# ------------------------------------------------------------ calibration


@dataclass
class CalibrationResult:
    attack_kind: str
    crossing_threshold: float
    crossing_accuracy: float
    curve: list[tuple[float, float, float]]  # (threshold, original_acc, tampered_acc)


def _accuracies(original: Sequence, tampered: Sequence, t: float) -> tuple[float, float]:
    orig_acc = float(np.mean([decide(d, t) != TAMPERED for d in original]))
    tamp_acc = float(np.mean([decide(d, t) == TAMPERED for d in tampered]))
    return orig_acc, tamp_acc


def calibrate_from_distances(original_distances: Sequence[float | None],
                             tampered_distances: Sequence[float | None],
                             grid: Sequence[float], attack_kind: str = "") -> CalibrationResult:
    """Find the threshold where original and tampered accuracies meet.

    ``None`` distances (degenerate receiver) always count as tampered.
    A strict sign change of ``original_acc - tampered_acc`` between two grid
    points is resolved by linear interpolation; otherwise the grid point with
    the smallest gap wins, ties going to the smaller threshold.
    """
    if not original_distances or not tampered_distances:
        raise DomainError("calibration needs both original and tampered samples")
    grid = [float(t) for t in grid]
    if len(grid) < 2 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("grid must hold >= 2 strictly ascending thresholds")
    if grid[0] <= 0:
        raise DomainError("thresholds must be positive")

    curve = [(t, *_accuracies(original_distances, tampered_distances, t)) for t in grid]
    for (_, o0, t0), (_, o1, t1) in zip(curve, curve[1:]):
        if o1 < o0 or t1 > t0:
            raise AssertionError("accuracy curves lost monotonicity")

    gaps = [o - t for _, o, t in curve]
    for i in range(len(curve) - 1):
        if gaps[i] < 0 < gaps[i + 1]:
            frac = -gaps[i] / (gaps[i + 1] - gaps[i])
            t = curve[i][0] + frac * (curve[i + 1][0] - curve[i][0])
            acc = curve[i][1] + frac * (curve[i + 1][1] - curve[i][1])
            return CalibrationResult(attack_kind, t, acc, curve)
    best = min(range(len(curve)), key=lambda i: (abs(gaps[i]), curve[i][0]))
    t, o, tp = curve[best]
    return CalibrationResult(attack_kind, t, (o + tp) / 2, curve)


def _pair_distance(args):
    (original, received), dcfg, kcfg = args
    sent = hash_from_keypoints(detect_keypoints(original, dcfg), original.width,
                               original.height, dcfg, kcfg)
    rec = recompute_from_keypoints(detect_keypoints(received, dcfg), received.width,
                                   received.height, sent, dcfg, kcfg)
    return report(sent, rec, 1.0).min_distance


def pair_distances(pairs: Sequence[tuple[GrayImage, GrayImage]], dcfg: DetectorConfig,
                   kcfg: KMeansConfig, jobs: int | None = 1) -> list[float | None]:
    return _map(_pair_distance, [(p, dcfg, kcfg) for p in pairs], jobs)


def calibrate_threshold(originals_attacked: Sequence[tuple[GrayImage, GrayImage]],
                        tampered: Sequence[tuple[GrayImage, GrayImage]],
                        grid: Sequence[float], dcfg: DetectorConfig | None = None,
                        kcfg: KMeansConfig | None = None, attack_kind: str = "",
                        jobs: int | None = 1) -> CalibrationResult:
    dcfg = dcfg or DetectorConfig()
    kcfg = kcfg or KMeansConfig()
    if not originals_attacked or not tampered:
        raise DomainError("calibration needs both original and tampered pairs")
    orig = pair_distances(originals_attacked, dcfg, kcfg, jobs)
    tamp = pair_distances(tampered, dcfg, kcfg, jobs)
    return calibrate_from_distances(orig, tamp, grid, attack_kind)


def write_calibration_csv(results: list[CalibrationResult], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["attack_kind", "threshold", "original_accuracy", "tampered_accuracy",
                    "crossing_threshold", "crossing_accuracy"])
        for r in results:
            for t, o, tp in r.curve:
                w.writerow([r.attack_kind, _fmt(t), _fmt(o), _fmt(tp),
                            _fmt(r.crossing_threshold), _fmt(r.crossing_accuracy)])


# ------------------------------------------------------------- evaluation


@dataclass
class EvaluatedRow:
    image_id: str
    kind: str
    label: str
    min_distance: float | None
    verdict: str


@dataclass
class EvaluationResult:
    per_image_distance: list[EvaluatedRow]
    threshold: float
    failures: list[str] = field(default_factory=list)

    def _rate(self, label: str) -> float | None:
        rows = [r for r in self.per_image_distance if r.label == label]
        if not rows:
            return None
        return sum(r.verdict == TAMPERED for r in rows) / len(rows)

    @property
    def accuracy(self) -> float | None:
        """Fraction of tampered rows flagged tampered; None without tampered rows."""
        return self._rate("tampered")

    @property
    def false_alarm_rate(self) -> float | None:
        return self._rate("original")


def _evaluate_source(args):
    source, indexed_rows, threshold, dcfg, kcfg = args
    out = []
    try:
        original = load_grayscale(source)
        sent = hash_from_keypoints(detect_keypoints(original, dcfg), original.width,
                                   original.height, dcfg, kcfg)
    except (OSError, ValueError, HashGenerationError) as exc:
        return [(i, None, f"{source}: {exc}") for i, _ in indexed_rows]
    for i, row in indexed_rows:
        try:
            img = load_grayscale(row.output_file)
        except (OSError, ValueError) as exc:
            out.append((i, None, f"{row.output_path}: {exc}"))
            continue
        rec = recompute_from_keypoints(detect_keypoints(img, dcfg), img.width, img.height,
                                       sent, dcfg, kcfg)
        out.append((i, report(sent, rec, threshold), None))
    return out


def evaluate(manifest: Sequence[ManifestRow], threshold: float,
             dcfg: DetectorConfig | None = None, kcfg: KMeansConfig | None = None,
             jobs: int | None = 1) -> EvaluationResult:
    """Hash each source once, verify every processed image against it.

    Rows are identified in the output by their manifest ``output_path``.
    """
    dcfg = dcfg or DetectorConfig()
    kcfg = kcfg or KMeansConfig()
    grouped: dict[str, list[tuple[int, ManifestRow]]] = {}
    for i, row in enumerate(manifest):
        grouped.setdefault(str(row.source_file), []).append((i, row))
    tasks = [(src, rows, threshold, dcfg, kcfg) for src, rows in grouped.items()]
    outcome = {}
    failures = []
    for chunk in _map(_evaluate_source, tasks, jobs):
        for i, rep, err in chunk:
            outcome[i] = (rep, err)
    evaluated = []
    for i, row in enumerate(manifest):
        rep, err = outcome[i]
        if err:
            failures.append(err)
            log.warning("evaluation failed: %s", err)
            continue
        evaluated.append(EvaluatedRow(row.output_path, row.kind, row.label,
                                      rep.min_distance, rep.verdict))
    return EvaluationResult(evaluated, threshold, failures)


def write_evaluation_csv(result: EvaluationResult, path) -> None:
    """Per-image distance table followed by summary rows (image_id ``#summary``)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["image_id", "kind", "label", "min_distance", "verdict"])
        for r in result.per_image_distance:
            w.writerow([r.image_id, r.kind, r.label, _fmt(r.min_distance), r.verdict])
        w.writerow(["#summary", "threshold", "", _fmt(result.threshold), ""])
        w.writerow(["#summary", "detection_rate", "tampered", _fmt(result.accuracy), ""])
        w.writerow(["#summary", "false_alarm_rate", "original", _fmt(result.false_alarm_rate), ""])
        w.writerow(["#summary", "failures", "", str(len(result.failures)), ""])


def _fmt(v) -> str:
    if v is None:
        return ""
    return f"{v:.6f}"
