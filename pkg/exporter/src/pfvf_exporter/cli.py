"""Command line: one video to one PFVF file.

Errors print a single `error [ClassName]: detail` line on stderr and map to
exit codes: 0 success, 1 unexpected failure, 2 usage, 3 missing input,
4 bad configuration, 5 undecodable video, 6 missing weights, 7 extractor
width mismatch.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .errors import ExporterError
from .export import export
from .extractors import ExtractorConfig

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_MISSING = 3
EXIT_CONFIG = 4
EXIT_UNDECODABLE = 5
EXIT_WEIGHTS = 6
EXIT_WIDTH = 7

_EXIT_BY_ERROR = {
    "FileNotFoundError": EXIT_MISSING,
    "ConfigError": EXIT_CONFIG,
    "UndecodableVideoError": EXIT_UNDECODABLE,
    "MissingWeightsError": EXIT_WEIGHTS,
    "WidthMismatchError": EXIT_WIDTH,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pfvf-export",
        description="Extract per-frame features from a video into a PFVF file.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--video", required=True, help="input video file")
    parser.add_argument("--out", required=True, help="output feature file (.pfvf)")
    parser.add_argument("--mos", type=float, default=None,
                        help="subjective quality label to store (omitted: no label)")
    parser.add_argument("--fps", type=float, default=1.0,
                        help="sampled frames per second of video (default 1)")
    parser.add_argument("--size", type=int, default=224,
                        help="square resize target in pixels (default 224)")
    parser.add_argument("--weights", choices=("random", "pretrained"), default="random",
                        help="extractor weights: seeded random (default) or "
                             "pretrained from local caches only")
    parser.add_argument("--seed", type=int, default=0,
                        help="initialization seed for random weights (default 0)")
    return parser


def main(argv: list[str] = None) -> int:
    args = build_parser().parse_args(argv)
    config = ExtractorConfig(
        rate=args.fps, size=args.size, weights=args.weights, seed=args.seed
    )
    try:
        report = export(args.video, config, args.out, mos=args.mos)
    except (ExporterError, FileNotFoundError) as e:
        name = type(e).__name__
        print(f"error [{name}]: {e}", file=sys.stderr)
        return _EXIT_BY_ERROR.get(name, EXIT_FAILURE)
    t, n, c_feat, c_cont, c_dist = report.header
    fields = f"T={t}, N={n}, C_feat={c_feat}, C_cont={c_cont}, C_dist={c_dist}"
    if report.mos is not None:
        fields += f", mos={report.mos:g}"
    print(f"wrote {report.out_path} ({fields})")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
