"""HTTP service over the core model.

Every endpoint is a thin wrapper: parse the request, call the library, shape
the response.  Domain errors map to structured JSON bodies carrying the
error class name, so clients (the CLI included) can branch on failure kind
without parsing prose.
"""

from __future__ import annotations

import os

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..dataio import SynthSpec, read_feature_file, synth_dataset, write_feature_file
from ..encoder import AblationConfig
from ..errors import (
    ConfigError,
    ContractError,
    DimensionError,
    FormatError,
    NonFiniteError,
    PriorVqaError,
    TrainingDivergedError,
    UndefinedCorrelationError,
)
from ..gradcheck import run_gradcheck
from ..model import ModelConfig, load_params, predict_video, save_params
from ..training import TrainConfig, evaluate, split_dataset, train
from . import schemas

_STATUS_BY_ERROR = [
    (ConfigError, 422),
    (FormatError, 400),
    (DimensionError, 409),
    (UndefinedCorrelationError, 409),
    (ContractError, 409),
    (TrainingDivergedError, 500),
    (NonFiniteError, 500),
]


def _status_for(exc: PriorVqaError) -> int:
    for cls, status in _STATUS_BY_ERROR:
        if isinstance(exc, cls):
            return status
    return 500


def _load_dir(data_dir: str) -> list:
    if not os.path.isdir(data_dir):
        raise FileNotFoundError(data_dir)
    names = sorted(n for n in os.listdir(data_dir) if n.endswith(".pfvf"))
    if not names:
        raise ContractError(f"no .pfvf files in {data_dir}")
    return [read_feature_file(os.path.join(data_dir, n)) for n in names]


def _require_file(path: str):
    if not os.path.isfile(path):
        raise FileNotFoundError(path)


_ABLATION_FLAGS = {"ct": "use_content_token", "dt": "use_distortion_token",
                   "tp": "use_temporal_pooling"}


def ablation_from_flags(ablate: list[str], base: AblationConfig) -> AblationConfig:
    """Translate CLI-style ablation names (ct, dt, tp) into switched-off flags."""
    kwargs = {
        "use_content_token": base.use_content_token,
        "use_distortion_token": base.use_distortion_token,
        "use_temporal_pooling": base.use_temporal_pooling,
        "use_gru": base.use_gru,
    }
    for name in ablate:
        key = _ABLATION_FLAGS.get(name.lower())
        if key is None:
            raise ConfigError(f"unknown ablation {name!r}, expected one of ct, dt, tp")
        kwargs[key] = False
    return AblationConfig(**kwargs)


def create_app() -> FastAPI:
    app = FastAPI(title="priorvqa", version=__version__)

    @app.exception_handler(PriorVqaError)
    async def domain_error(request: Request, exc: PriorVqaError):
        return JSONResponse(
            status_code=_status_for(exc),
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.exception_handler(FileNotFoundError)
    async def missing_file(request: Request, exc: FileNotFoundError):
        return JSONResponse(
            status_code=404,
            content={"error": "FileNotFoundError", "detail": str(exc)},
        )

    @app.get("/health", response_model=schemas.HealthResponse)
    async def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/synth", response_model=schemas.SynthResponse)
    async def synth(req: schemas.SynthRequest):
        spec = SynthSpec(
            count=req.count, T=req.T, N=req.N, C_feat=req.C_feat, C_cont=req.C_cont,
            C_dist=req.C_dist, sigma=req.sigma, seed=req.seed,
            content_clusters=req.content_clusters,
        )
        videos = synth_dataset(spec)
        os.makedirs(req.out_dir, exist_ok=True)
        if req.split_ratio is None:
            for v in videos:
                write_feature_file(v, os.path.join(req.out_dir, f"{v.video_id}.pfvf"))
            return schemas.SynthResponse(out_dir=req.out_dir, files_written=len(videos))
        train_part, test_part = split_dataset(videos, req.split_ratio, req.split_seed)
        for sub, part in (("train", train_part), ("test", test_part)):
            sub_dir = os.path.join(req.out_dir, sub)
            os.makedirs(sub_dir, exist_ok=True)
            for v in part:
                write_feature_file(v, os.path.join(sub_dir, f"{v.video_id}.pfvf"))
        return schemas.SynthResponse(
            out_dir=req.out_dir,
            files_written=len(videos),
            train_files=len(train_part),
            test_files=len(test_part),
        )

    @app.post("/train", response_model=schemas.TrainResponse)
    async def train_endpoint(req: schemas.TrainRequest):
        model_config = ModelConfig.from_dict(req.arch)
        train_config = TrainConfig.from_dict(req.schedule)
        dataset = _load_dir(req.data_dir)
        val = _load_dir(req.val_dir) if req.val_dir else None
        params, history = train(dataset, model_config, train_config, val=val)
        out_dir = os.path.dirname(os.path.abspath(req.params_out))
        os.makedirs(out_dir, exist_ok=True)
        save_params(params, req.params_out)
        return schemas.TrainResponse(
            params_path=req.params_out,
            tag=model_config.ablation.tag(),
            videos_trained=len(dataset),
            history=[schemas.HistoryRow(**row) for row in history],
        )

    @app.post("/predict", response_model=schemas.PredictResponse)
    async def predict(req: schemas.PredictRequest):
        _require_file(req.params_path)
        _require_file(req.video_path)
        params = load_params(req.params_path)
        video = read_feature_file(req.video_path)
        trace = predict_video(video, params)
        return schemas.PredictResponse(
            video_id=video.video_id,
            q=[float(v) for v in trace.q],
            m=[float(v) for v in trace.m],
            c=[float(v) for v in trace.c],
            Q=trace.Q,
            tag=params.config.ablation.tag(),
        )

    @app.post("/eval", response_model=schemas.EvalResponse)
    async def eval_endpoint(req: schemas.EvalRequest):
        _require_file(req.params_path)
        params = load_params(req.params_path)
        dataset = _load_dir(req.data_dir)
        ablation = (
            ablation_from_flags(req.ablate, params.config.ablation) if req.ablate else None
        )
        report = evaluate(params, dataset, ablation)
        return schemas.EvalResponse(
            plcc=report.plcc,
            srcc=report.srcc,
            tag=report.tag,
            videos=len(report.pairs),
            pairs=[
                schemas.PairRow(video_id=vid, prediction=p, mos=m)
                for vid, p, m in report.pairs
            ],
        )

    @app.post("/gradcheck", response_model=schemas.GradcheckResponse)
    async def gradcheck_endpoint(req: schemas.GradcheckRequest):
        result = run_gradcheck(seeds=req.seeds, tolerance=req.tolerance)
        return schemas.GradcheckResponse(
            max_rel_err=result.max_rel_err,
            worst_tensor=result.worst_tensor,
            seeds=result.seeds,
            parameters_checked=result.parameters_checked,
            elapsed_seconds=result.elapsed_seconds,
            tolerance=result.tolerance,
            passed=result.passed,
        )

    return app
