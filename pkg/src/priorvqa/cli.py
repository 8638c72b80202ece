"""Command-line client for the service.

Every subcommand talks HTTP to the service layer: by default against an
in-process ASGI app (no socket), or against a remote instance via --server.
Exit codes are stable per error class:

    0  success
    1  unexpected failure, or a gradcheck that exceeded tolerance
    2  usage error (bad flags)
    3  missing file or directory
    4  config error
    5  file format error
    6  data contract violation (shapes, labels, degenerate metrics)
    7  numerical failure (non-finite values, diverged training)
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

import httpx

from . import __version__
from .configfile import load_config_file, split_config_keys

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_MISSING = 3
EXIT_CONFIG = 4
EXIT_FORMAT = 5
EXIT_CONTRACT = 6
EXIT_NUMERIC = 7

_EXIT_BY_ERROR = {
    "FileNotFoundError": EXIT_MISSING,
    "ConfigError": EXIT_CONFIG,
    "FormatError": EXIT_FORMAT,
    "BadMagicError": EXIT_FORMAT,
    "ChecksumError": EXIT_FORMAT,
    "TruncationError": EXIT_FORMAT,
    "ShapeOverflowError": EXIT_FORMAT,
    "VersionError": EXIT_FORMAT,
    "ContractError": EXIT_CONTRACT,
    "DimensionError": EXIT_CONTRACT,
    "UndefinedCorrelationError": EXIT_CONTRACT,
    "NonFiniteError": EXIT_NUMERIC,
    "TrainingDivergedError": EXIT_NUMERIC,
}


class ServiceError(Exception):
    def __init__(self, error: str, detail: str):
        super().__init__(detail)
        self.error = error
        self.detail = detail

    @property
    def exit_code(self) -> int:
        return _EXIT_BY_ERROR.get(self.error, EXIT_FAILURE)


def call_service(method: str, path: str, body: dict = None, server: str = None) -> dict:
    """One request against the service; in-process unless `server` is set."""

    async def go() -> httpx.Response:
        if server:
            async with httpx.AsyncClient(base_url=server, timeout=None) as client:
                return await client.request(method, path, json=body)
        from .service.app import create_app

        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(
            transport=transport, base_url="http://service", timeout=None
        ) as client:
            return await client.request(method, path, json=body)

    response = asyncio.run(go())
    try:
        payload = response.json()
    except json.JSONDecodeError:
        raise ServiceError("FormatError", f"non-JSON response: {response.text[:200]}")
    if response.status_code >= 400:
        if isinstance(payload, dict) and "error" in payload:
            raise ServiceError(payload["error"], payload.get("detail", ""))
        raise ServiceError("HTTPError", f"status {response.status_code}: {payload}")
    return payload


def _width80(prog):
    return argparse.HelpFormatter(prog, width=80)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="priorvqa",
        description="Blind video quality assessment: prior-token transformer, "
        "GRU temporal fusion, memory/current score pooling.",
        formatter_class=_width80,
    )
    parser.add_argument("--version", action="version", version=f"priorvqa {__version__}")
    parser.add_argument(
        "--server",
        metavar="URL",
        default=None,
        help="service base URL; default runs the service in-process",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=1,
        metavar="K",
        help="cap on worker threads (the current pipeline is single-threaded, "
        "so values above 1 change nothing)",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser(
        "synth",
        help="generate a synthetic labeled dataset of feature files",
        description="Generate synthetic videos with analytic MOS and write one "
        ".pfvf feature file per video.",
        formatter_class=_width80,
    )
    p.add_argument("--out-dir", required=True, help="directory for the .pfvf files")
    p.add_argument("--count", type=int, default=250, help="number of videos (default 250)")
    p.add_argument("--frames", type=int, default=8, help="frames per video (default 8)")
    p.add_argument("--tokens", type=int, default=4, help="feature tokens per frame (default 4)")
    p.add_argument("--c-feat", type=int, default=16, help="raw feature width (default 16)")
    p.add_argument("--c-cont", type=int, default=8, help="content embedding width (default 8)")
    p.add_argument("--c-dist", type=int, default=8, help="distortion embedding width (default 8)")
    p.add_argument("--sigma", type=float, default=0.1, help="noise level (default 0.1)")
    p.add_argument("--seed", type=int, default=0, help="generator seed (default 0)")
    p.add_argument(
        "--split",
        type=float,
        default=None,
        metavar="RATIO",
        help="also split into train/ and test/ subdirectories at this ratio",
    )
    p.add_argument("--split-seed", type=int, default=0, help="seed for the split shuffle")

    p = sub.add_parser(
        "train",
        help="train a model on a directory of feature files",
        description="Train on every .pfvf file in --data, print per-epoch "
        "history, and write the parameters to --out.",
        formatter_class=_width80,
    )
    p.add_argument("--data", required=True, help="directory of training .pfvf files")
    p.add_argument("--out", required=True, help="output parameter file (.pfmp)")
    p.add_argument("--config", default=None, help="key=value config file (model + training keys)")
    p.add_argument("--val-data", default=None, help="directory of validation .pfvf files")
    p.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one config key (repeatable)",
    )

    p = sub.add_parser(
        "predict",
        help="score one feature file with trained parameters",
        description="Print one q line per frame followed by the pooled video "
        "score Q.",
        formatter_class=_width80,
    )
    p.add_argument("--params", required=True, help="parameter file (.pfmp)")
    p.add_argument("--video", required=True, help="feature file (.pfvf)")

    p = sub.add_parser(
        "eval",
        help="evaluate parameters against labeled feature files",
        description="Predict every .pfvf file in --data and report PLCC/SRCC "
        "against the stored MOS labels.",
        formatter_class=_width80,
    )
    p.add_argument("--params", required=True, help="parameter file (.pfmp)")
    p.add_argument("--data", required=True, help="directory of labeled .pfvf files")
    p.add_argument(
        "--ablate",
        action="append",
        default=[],
        choices=["ct", "dt", "tp"],
        help="drop the content token (ct), distortion token (dt), or temporal "
        "pooling (tp); repeatable",
    )
    p.add_argument("--pairs", action="store_true", help="also print per-video predictions")

    p = sub.add_parser(
        "gradcheck",
        help="verify analytic gradients against finite differences",
        description="Run the finite-difference gradient check on a tiny model "
        "and print the worst relative error.",
        formatter_class=_width80,
    )
    p.add_argument("--seeds", type=int, default=20, help="number of seeded runs (default 20)")
    p.add_argument(
        "--tolerance", type=float, default=1e-4, help="max relative error allowed (default 1e-4)"
    )

    p = sub.add_parser(
        "serve",
        help="run the HTTP service",
        description="Serve the API over HTTP with uvicorn.",
        formatter_class=_width80,
    )
    p.add_argument("--host", default="127.0.0.1", help="bind address (default 127.0.0.1)")
    p.add_argument("--port", type=int, default=8000, help="port (default 8000)")

    return parser


def _config_from_args(args) -> tuple[dict, dict]:
    raw = {}
    if args.config:
        raw.update(load_config_file(args.config))
    for item in args.set:
        if "=" not in item:
            raise ServiceError("ConfigError", f"--set expects KEY=VALUE, got {item!r}")
        from .configfile import parse_kv_text

        raw.update(parse_kv_text(item, "--set"))
    return split_config_keys(raw)


def cmd_synth(args) -> int:
    body = {
        "out_dir": args.out_dir,
        "count": args.count,
        "T": args.frames,
        "N": args.tokens,
        "C_feat": args.c_feat,
        "C_cont": args.c_cont,
        "C_dist": args.c_dist,
        "sigma": args.sigma,
        "seed": args.seed,
        "split_ratio": args.split,
        "split_seed": args.split_seed,
    }
    out = call_service("POST", "/synth", body, args.server)
    if out.get("train_files") is not None:
        print(
            f"wrote {out['files_written']} files to {out['out_dir']} "
            f"(train {out['train_files']}, test {out['test_files']})"
        )
    else:
        print(f"wrote {out['files_written']} files to {out['out_dir']}")
    return EXIT_OK


def cmd_train(args) -> int:
    arch, schedule = _config_from_args(args)
    body = {
        "data_dir": args.data,
        "params_out": args.out,
        "val_dir": args.val_data,
        "arch": arch,
        "schedule": schedule,
    }
    out = call_service("POST", "/train", body, args.server)
    for row in out["history"]:
        line = f"epoch {row['epoch']}\ttrain_loss {row['train_loss']:.6f}"
        if row.get("val_plcc") is not None:
            line += f"\tval_plcc {row['val_plcc']:.6f}\tval_srcc {row['val_srcc']:.6f}"
        print(line)
    print(f"saved {out['tag']} model ({out['videos_trained']} videos) to {out['params_path']}")
    return EXIT_OK


def cmd_predict(args) -> int:
    out = call_service(
        "POST", "/predict", {"params_path": args.params, "video_path": args.video}, args.server
    )
    for t, value in enumerate(out["q"], start=1):
        print(f"q_{t}\t{value:.6f}")
    print(f"Q\t{out['Q']:.6f}")
    return EXIT_OK


def cmd_eval(args) -> int:
    body = {"params_path": args.params, "data_dir": args.data, "ablate": args.ablate}
    out = call_service("POST", "/eval", body, args.server)
    print(f"PLCC\t{out['plcc']:.6f}\t{out['tag']}")
    print(f"SRCC\t{out['srcc']:.6f}\t{out['tag']}")
    print(f"videos\t{out['videos']}\t{out['tag']}")
    if args.pairs:
        for pair in out["pairs"]:
            print(f"video\t{pair['video_id']}\t{pair['prediction']:.6f}\t{pair['mos']:.6f}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    body = {"seeds": args.seeds, "tolerance": args.tolerance}
    out = call_service("POST", "/gradcheck", body, args.server)
    print(
        f"max_rel_err {out['max_rel_err']:.3e} tolerance {out['tolerance']:.1e} "
        f"seeds {out['seeds']} parameters {out['parameters_checked']} "
        f"elapsed {out['elapsed_seconds']:.1f}s {'PASS' if out['passed'] else 'FAIL'}"
    )
    return EXIT_OK if out["passed"] else EXIT_FAILURE


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


_HANDLERS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "predict": cmd_predict,
    "eval": cmd_eval,
    "gradcheck": cmd_gradcheck,
    "serve": cmd_serve,
}


def main(argv: list[str] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    from .errors import PriorVqaError

    try:
        return _HANDLERS[args.command](args)
    except ServiceError as e:
        print(f"error [{e.error}]: {e.detail}", file=sys.stderr)
        return e.exit_code
    except PriorVqaError as e:
        # raised client-side, before any request (config file parsing and such)
        name = type(e).__name__
        print(f"error [{name}]: {e}", file=sys.stderr)
        return _EXIT_BY_ERROR.get(name, EXIT_FAILURE)
    except FileNotFoundError as e:
        print(f"error [FileNotFoundError]: {e}", file=sys.stderr)
        return EXIT_MISSING
    except httpx.HTTPError as e:
        print(f"error [connection]: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
