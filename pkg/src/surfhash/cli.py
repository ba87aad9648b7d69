"""``surfhash`` command line.

Exit codes: 0 authentic / success, 1 tampered, 2 any error.
"""

from __future__ import annotations

import argparse
import logging
import statistics
import sys
from pathlib import Path

from . import harness
from .attacks import (FILL_MODES, TamperSpec, build_corpus, jpeg_compress, read_manifest,
                      salt_pepper, tamper_patch)
from .detector import DetectorConfig
from .errors import SurfHashError
from .hashing import decode_hash, encode_hash, generate_hash
from .image_io import load_grayscale, save_png
from .kmeans import KMeansConfig
from .verifier import AUTHENTIC, DEFAULT_THRESHOLD, verify

EXIT_OK = 0
EXIT_TAMPERED = 1
EXIT_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _grid(text: str) -> list[float]:
    """``start:stop:step`` (inclusive stop) or a comma list."""
    if ":" not in text:
        return _float_list(text)
    start, stop, step = (float(v) for v in text.split(":"))
    if step <= 0:
        raise argparse.ArgumentTypeError("grid step must be positive")
    n = int(round((stop - start) / step))
    return [round(start + i * step, 10) for i in range(n + 1)]


def _add_detector_flags(p: argparse.ArgumentParser) -> None:
    d = DetectorConfig()
    p.add_argument("--octaves", type=int, default=d.octaves)
    p.add_argument("--levels", type=int, default=d.levels_per_octave)
    p.add_argument("--response-threshold", type=float, default=d.response_threshold)
    p.add_argument("--max-keypoints", type=int, default=None)


def _add_cluster_flags(p: argparse.ArgumentParser, k: bool = True) -> None:
    if k:
        p.add_argument("--k", type=int, default=1, help="cluster count (default 1)")
    p.add_argument("--seed", type=int, default=0, help="k-means++ seed")


def _detector(args) -> DetectorConfig:
    return DetectorConfig(octaves=args.octaves, levels_per_octave=args.levels,
                          response_threshold=args.response_threshold,
                          max_keypoints=args.max_keypoints)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="surfhash", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("hash", help="hash an image")
    p.add_argument("image")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--text", action="store_true", help="also print centers as 'x y' lines")
    _add_cluster_flags(p)
    _add_detector_flags(p)
    p.set_defaults(func=cmd_hash)

    p = sub.add_parser("verify", help="verify an image against a hash file")
    p.add_argument("image")
    p.add_argument("hashfile")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    _add_detector_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("attack", help="apply one attack to an image")
    p.add_argument("image")
    p.add_argument("-o", "--output", required=True)
    kind = p.add_mutually_exclusive_group(required=True)
    kind.add_argument("--jpeg", type=int, metavar="Q")
    kind.add_argument("--saltpepper", type=float, metavar="D")
    kind.add_argument("--tamper", type=float, metavar="F")
    p.add_argument("--mode", choices=FILL_MODES, default="noise-fill")
    p.add_argument("--donor", help="donor image for splice-from-donor")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("corpus", help="corpus construction")
    csub = p.add_subparsers(dest="corpus_command", required=True, parser_class=_Parser)
    b = csub.add_parser("build", help="attack every image in a directory")
    b.add_argument("srcdir")
    b.add_argument("-o", "--outdir", required=True)
    b.add_argument("--manifest", required=True)
    b.add_argument("--jpeg", type=_int_list, default=[90], metavar="Q[,Q...]")
    b.add_argument("--saltpepper", type=_float_list, default=[0.02], metavar="D[,D...]")
    b.add_argument("--tamper", type=_float_list, default=[0.05], metavar="F[,F...]")
    b.add_argument("--mode", choices=FILL_MODES[:2], default="noise-fill")
    b.add_argument("--seed", type=int, default=0)
    b.set_defaults(func=cmd_corpus_build)

    p = sub.add_parser("experiment", help="run an experiment over a corpus manifest")
    esub = p.add_subparsers(dest="experiment", required=True, parser_class=_Parser)

    e = esub.add_parser("sweep-k", help="average min distance per k")
    e.add_argument("--k-values", type=_int_list, default=[1, 2, 4, 8, 16, 32])
    e.add_argument("--kind", help="only use manifest rows of this kind")
    _add_cluster_flags(e, k=False)
    e.set_defaults(func=cmd_sweep)

    e = esub.add_parser("calibrate", help="threshold calibration per attack kind")
    e.add_argument("--grid", type=_grid, default=_grid("0.125:8:0.125"),
                   help="start:stop:step or comma list")
    _add_cluster_flags(e)
    e.set_defaults(func=cmd_calibrate)

    e = esub.add_parser("evaluate", help="per-image distances and detection rates")
    e.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    _add_cluster_flags(e)
    e.set_defaults(func=cmd_evaluate)

    for e in esub.choices.values():
        e.add_argument("--manifest", required=True)
        e.add_argument("-o", "--output", required=True)
        e.add_argument("--jobs", type=int, default=None,
                       help="worker processes (default: CPU count)")
        _add_detector_flags(e)
    return parser


def cmd_hash(args) -> int:
    dcfg = _detector(args)
    kcfg = KMeansConfig(k=args.k, rng_seed=args.seed)
    img = load_grayscale(args.image)
    h = generate_hash(img, dcfg, kcfg)
    Path(args.output).write_bytes(encode_hash(h))
    if args.text:
        sys.stdout.write(h.quantized().to_text())
    print(f"hashed {args.image}: k={h.k}, {64 * h.k} payload bits", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args) -> int:
    received = decode_hash(Path(args.hashfile).read_bytes())
    dcfg = _detector(args)
    kcfg = KMeansConfig(k=received.k)
    rep = verify(load_grayscale(args.image), received, args.threshold, dcfg, kcfg)
    print(rep.to_json())
    print(f"{rep.verdict}: min distance {rep.min_distance} (threshold {rep.threshold})",
          file=sys.stderr)
    return EXIT_OK if rep.verdict == AUTHENTIC else EXIT_TAMPERED


def cmd_attack(args) -> int:
    img = load_grayscale(args.image)
    if args.jpeg is not None:
        out = jpeg_compress(img, args.jpeg)
    elif args.saltpepper is not None:
        out = salt_pepper(img, args.saltpepper, args.seed)
    else:
        donor = load_grayscale(args.donor) if args.donor else None
        out, region = tamper_patch(img, TamperSpec(args.tamper, args.mode, args.seed), donor)
        print(f"patched x={region.x0}..{region.x1} y={region.y0}..{region.y1}", file=sys.stderr)
    save_png(out, args.output)
    return EXIT_OK


def cmd_corpus_build(args) -> int:
    rows = build_corpus(args.srcdir, args.outdir, args.manifest, jpeg_qualities=args.jpeg,
                        densities=args.saltpepper, area_fractions=args.tamper,
                        mode=args.mode, seed=args.seed)
    print(f"wrote {len(rows)} images, manifest {args.manifest}", file=sys.stderr)
    return EXIT_OK


def _pairs(rows):
    cache = {}

    def load(p):
        if p not in cache:
            cache[p] = load_grayscale(p)
        return cache[p]

    return [(load(r.source_file), load(r.output_file)) for r in rows]


def cmd_sweep(args) -> int:
    rows = [r for r in read_manifest(args.manifest)
            if r.label == "original" and (args.kind is None or r.kind == args.kind)]
    if not rows:
        raise SurfHashError("manifest has no matching original rows")
    result = harness.sweep_k(_pairs(rows), args.k_values, _detector(args),
                             KMeansConfig(rng_seed=args.seed), jobs=args.jobs)
    harness.write_sweep_csv(result, args.output)
    for r in result:
        print(f"k={r.k}: average min distance {r.average_min_distance:.4f} "
              f"({len(r.skipped)} skipped)", file=sys.stderr)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    rows = read_manifest(args.manifest)
    tampered = [r for r in rows if r.label == "tampered"]
    kinds = sorted({r.kind for r in rows if r.label == "original"})
    if not tampered or not kinds:
        raise SurfHashError("calibration needs both original and tampered manifest rows")
    dcfg = _detector(args)
    kcfg = KMeansConfig(k=args.k, rng_seed=args.seed)
    tamp = harness.pair_distances(_pairs(tampered), dcfg, kcfg, args.jobs)
    results = []
    for kind in kinds:
        orig_rows = [r for r in rows if r.label == "original" and r.kind == kind]
        orig = harness.pair_distances(_pairs(orig_rows), dcfg, kcfg, args.jobs)
        res = harness.calibrate_from_distances(orig, tamp, args.grid, kind)
        results.append(res)
        print(f"{kind}: crossing at {res.crossing_threshold:.4f}, "
              f"accuracy {res.crossing_accuracy:.2%}", file=sys.stderr)
    harness.write_calibration_csv(results, args.output)
    if len(results) > 1:
        avg = statistics.fmean(r.crossing_threshold for r in results)
        print(f"average crossing threshold {avg:.4f}", file=sys.stderr)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    result = harness.evaluate(read_manifest(args.manifest), args.threshold, _detector(args),
                              KMeansConfig(k=args.k, rng_seed=args.seed), jobs=args.jobs)
    harness.write_evaluation_csv(result, args.output)

    def pct(v):
        return "n/a" if v is None else f"{v:.2%}"

    print(f"detection rate {pct(result.accuracy)}, false alarms {pct(result.false_alarm_rate)}, "
          f"{len(result.failures)} failures", file=sys.stderr)
    return EXIT_OK


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (SurfHashError, OSError, ValueError) as exc:
        print(f"surfhash: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # exit-code contract: never a traceback exit
        logging.getLogger(__name__).debug("unexpected failure", exc_info=True)
        print(f"surfhash: internal error: {exc!r}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
