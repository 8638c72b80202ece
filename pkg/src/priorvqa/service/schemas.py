"""Request / response bodies for the HTTP service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class SynthRequest(BaseModel):
    out_dir: str
    count: int = 250
    T: int = 8
    N: int = 4
    C_feat: int = 16
    C_cont: int = 8
    C_dist: int = 8
    sigma: float = 0.1
    seed: int = 0
    content_clusters: int = 5
    # when set, videos are split into train/ and test/ subdirectories
    split_ratio: Optional[float] = Field(default=None, gt=0.0, lt=1.0)
    split_seed: int = 0


class SynthResponse(BaseModel):
    out_dir: str
    files_written: int
    train_files: Optional[int] = None
    test_files: Optional[int] = None


class TrainRequest(BaseModel):
    data_dir: str
    params_out: str
    val_dir: Optional[str] = None
    arch: dict = Field(default_factory=dict)  # ModelConfig keys
    schedule: dict = Field(default_factory=dict)  # TrainConfig keys


class HistoryRow(BaseModel):
    epoch: int
    train_loss: float
    val_plcc: Optional[float] = None
    val_srcc: Optional[float] = None


class TrainResponse(BaseModel):
    params_path: str
    tag: str
    videos_trained: int
    history: list[HistoryRow]


class PredictRequest(BaseModel):
    params_path: str
    video_path: str


class PredictResponse(BaseModel):
    video_id: str
    q: list[float]
    m: list[float]
    c: list[float]
    Q: float
    tag: str


class EvalRequest(BaseModel):
    params_path: str
    data_dir: str
    ablate: list[str] = Field(default_factory=list)


class PairRow(BaseModel):
    video_id: str
    prediction: float
    mos: float


class EvalResponse(BaseModel):
    plcc: float
    srcc: float
    tag: str
    videos: int
    pairs: list[PairRow]


class GradcheckRequest(BaseModel):
    seeds: int = Field(default=20, ge=1)
    tolerance: float = Field(default=1e-4, gt=0.0)


class GradcheckResponse(BaseModel):
    max_rel_err: float
    worst_tensor: str
    seeds: int
    parameters_checked: int
    elapsed_seconds: float
    tolerance: float
    passed: bool


class ErrorBody(BaseModel):
    error: str
    detail: str
