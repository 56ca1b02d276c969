"""Versioned JSON persistence for fitted detectors.

A model file stores the per-column transforms, the graph parameters, the
method state (eigenvector and denominator, vertex degrees, or shortest
path distances and normal set), the model-space training data, and the
sorted training scores used for DORA.  Floats are written at full
round-trip precision, and every write is atomic (temp file + rename).
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .graph import DistanceMetric
from .popularity import kernel_rows
from .preprocess import FeatureTransform, apply_preprocessor
from .scoring import ScoreDistribution, dora_batch

__all__ = ["FORMAT_VERSION", "ModelBundle", "save_model", "load_model", "atomic_write_text"]

FORMAT_VERSION = 1

METHODS = ("popularity", "vertex_degree", "shortest_path")


def atomic_write_text(path, text: str) -> None:
    """Write a file atomically: temp file in the target directory, then rename."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class ModelBundle:
    """Everything needed to score, normalize, and explain new data."""

    method: str
    preprocess: str
    metric: DistanceMetric
    gamma: float
    config: dict
    transforms: list[FeatureTransform]
    training: Dataset
    state: dict
    train_scores: ScoreDistribution = field(init=False)

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method '{self.method}'")
        self.train_scores = ScoreDistribution.from_scores(self.train_scores_rowwise())

    def train_scores_rowwise(self) -> np.ndarray:
        """Per-training-row anomaly scores (larger = more anomalous)."""
        if self.method == "popularity":
            return -np.asarray(self.state["s_vec"])
        if self.method == "vertex_degree":
            return -np.asarray(self.state["vd"])
        return np.asarray(self.state["ra_q"])

    def to_model_space(self, raw: Dataset) -> Dataset:
        return apply_preprocessor(raw, self.transforms)

    def score_model(self, points: np.ndarray) -> np.ndarray:
        """Score model-space points; larger = more anomalous."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if self.method == "popularity":
            k = kernel_rows(pts, self.training.values, self.gamma, self.metric)
            return -(k @ np.asarray(self.state["s_vec"])) / self.state["denom"]
        if self.method == "vertex_degree":
            k = kernel_rows(pts, self.training.values, self.gamma, self.metric)
            return -k.sum(axis=1)
        from scipy.spatial.distance import cdist

        if self.metric is DistanceMetric.EUCLIDEAN:
            sq = cdist(pts, self.training.values, metric="sqeuclidean")
        else:
            d = cdist(pts, self.training.values, metric="cityblock")
            sq = d * d
        return np.min(sq / self.gamma + np.asarray(self.state["ra_q"]), axis=1)

    def score_raw(self, raw: Dataset) -> np.ndarray:
        return self.score_model(self.to_model_space(raw).values)

    def dora_of(self, scores: np.ndarray) -> np.ndarray:
        return dora_batch(self.train_scores, scores)

    @property
    def score_column(self) -> str:
        return {
            "popularity": "relative_anomaly",
            "vertex_degree": "vertex_degree",
            "shortest_path": "ra_q",
        }[self.method]


def _transform_to_dict(tf: FeatureTransform) -> dict:
    return {
        "column": tf.column,
        "delta": tf.delta,
        "lam": tf.lam,
        "mean": tf.mean,
        "sd": tf.sd,
        "boundary": tf.boundary,
        "raw_min": tf.raw_min,
        "raw_max": tf.raw_max,
    }


def save_model(path, bundle: ModelBundle) -> None:
    state = {
        key: (value.tolist() if isinstance(value, np.ndarray) else value)
        for key, value in bundle.state.items()
    }
    doc = {
        "format_version": FORMAT_VERSION,
        "method": bundle.method,
        "preprocess": bundle.preprocess,
        "metric": bundle.metric.value,
        "gamma": bundle.gamma,
        "config": bundle.config,
        "columns": bundle.training.columns,
        "transforms": [_transform_to_dict(tf) for tf in bundle.transforms],
        "training": bundle.training.values.tolist(),
        "state": state,
        "train_scores": bundle.train_scores.sorted_scores.tolist(),
    }
    atomic_write_text(path, json.dumps(doc))


def load_model(path) -> ModelBundle:
    with open(path) as fh:
        doc = json.load(fh)
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(
            f"model file format version {version} is not supported "
            f"(expected {FORMAT_VERSION})"
        )
    transforms = [FeatureTransform(**t) for t in doc["transforms"]]
    state = {
        key: (np.asarray(value, dtype=np.float64) if isinstance(value, list) else value)
        for key, value in doc["state"].items()
    }
    if "normal_set" in state:
        state["normal_set"] = np.asarray(state["normal_set"], dtype=np.int64)
    bundle = ModelBundle(
        method=doc["method"],
        preprocess=doc["preprocess"],
        metric=DistanceMetric(doc["metric"]),
        gamma=float(doc["gamma"]),
        config=doc["config"],
        transforms=transforms,
        training=Dataset(np.asarray(doc["training"], dtype=np.float64), doc["columns"]),
        state=state,
    )
    stored = np.asarray(doc["train_scores"], dtype=np.float64)
    if stored.size != bundle.train_scores.n or not np.array_equal(
        stored, bundle.train_scores.sorted_scores
    ):
        raise ValueError("stored training scores disagree with the model state")
    return bundle
