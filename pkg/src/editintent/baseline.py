"""Desk-scale sentence-quality classifier.

Sentences are preprocessed (markup stripped, special characters removed,
lowercased), hashed into a 2^18-bucket unigram+bigram space with FNV-1a
64-bit, L2-normalized, and fed to a logistic model trained with seeded
stochastic gradient descent.  Deliberately small: every experiment reruns in
seconds and training is bit-reproducible under a fixed seed.
"""

from __future__ import annotations

import json
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .corpus import POSITIVE, CorpusSplit, LabeledSentence
from .evaluation import roc_auc
from .wikitext import strip_markup

HASH_BITS = 18
HASH_DIM = 1 << HASH_BITS

MODEL_MAGIC = b"EDITINTENT-MODEL"
MODEL_VERSION = 1

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1

_SPECIAL = re.compile(r"[^A-Za-z0-9\s]+")


class BaselineError(Exception):
    pass


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def hash_feature(name: str) -> int:
    return fnv1a64(name.encode("utf-8")) & (HASH_DIM - 1)


def preprocess(sentence: str) -> list[str]:
    """Markup stripped, special characters removed, lowercased, split."""
    plain = strip_markup(sentence)
    plain = _SPECIAL.sub(" ", plain)
    return plain.lower().split()


def featurize(tokens: Sequence[str]) -> dict[int, float]:
    """L2-normalized unigram+bigram counts in the hashed bucket space."""
    counts: dict[int, float] = {}
    for tok in tokens:
        idx = hash_feature(tok)
        counts[idx] = counts.get(idx, 0.0) + 1.0
    for a, b in zip(tokens, tokens[1:]):
        idx = hash_feature(f"{a}_{b}")
        counts[idx] = counts.get(idx, 0.0) + 1.0
    norm = sum(v * v for v in counts.values()) ** 0.5
    if norm > 0:
        counts = {k: v / norm for k, v in counts.items()}
    return counts


def featurize_sentence(sentence: str) -> dict[int, float]:
    return featurize(preprocess(sentence))


@dataclass
class Model:
    category: Optional[str]
    weights: np.ndarray
    bias: float
    metadata: dict = field(default_factory=dict)


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + np.exp(-z))
    e = np.exp(z)
    return e / (1.0 + e)


_EPS = 1e-12


def _score(model: Model, features: dict[int, float]) -> float:
    z = model.bias
    for idx, val in features.items():
        z += model.weights[idx] * val
    return float(z)


def predict(model: Model, sentence: str) -> float:
    """Probability the sentence needs the model's improvement category."""
    p = _sigmoid(_score(model, featurize_sentence(sentence)))
    return min(max(p, _EPS), 1.0 - _EPS)


def logistic_loss_and_grad(
    weights: np.ndarray,
    bias: float,
    features: Sequence[dict[int, float]],
    labels: Sequence[int],
) -> tuple[float, np.ndarray, float]:
    """Mean logistic loss and its analytic gradient over a batch."""
    n = len(features)
    if n == 0:
        raise BaselineError("empty batch")
    loss = 0.0
    grad_w = np.zeros_like(weights)
    grad_b = 0.0
    for feats, y in zip(features, labels):
        z = bias + sum(weights[i] * v for i, v in feats.items())
        p = _sigmoid(z)
        p = min(max(p, _EPS), 1.0 - _EPS)
        loss += -(y * np.log(p) + (1 - y) * np.log(1.0 - p))
        err = p - y
        for i, v in feats.items():
            grad_w[i] += err * v
        grad_b += err
    return loss / n, grad_w / n, grad_b / n


def _records_to_data(records: Sequence[LabeledSentence]) -> tuple[list[dict[int, float]], list[int]]:
    feats = [featurize_sentence(r.text) for r in records]
    labels = [1 if r.polarity == POSITIVE else 0 for r in records]
    return feats, labels


def train(
    split: CorpusSplit,
    epochs: int = 5,
    learning_rate: float = 0.5,
    seed: int = 0,
    category: Optional[str] = None,
) -> Model:
    """Seeded SGD over the train split; per-epoch losses go into metadata."""
    if not split.train:
        raise BaselineError("empty training split")
    labels_present = {r.polarity for r in split.train}
    if len(labels_present) < 2:
        raise BaselineError("training data has a single class")
    if category is None:
        categories = {r.category.value for r in split.train}
        category = categories.pop() if len(categories) == 1 else None
    feats, ys = _records_to_data(split.train)
    val_feats, val_ys = _records_to_data(split.validation) if split.validation else ([], [])
    rng = np.random.RandomState(seed)
    weights = np.zeros(HASH_DIM, dtype=np.float64)
    bias = 0.0
    train_losses: list[float] = []
    val_losses: list[Optional[float]] = []
    order = np.arange(len(feats))
    for _epoch in range(epochs):
        rng.shuffle(order)
        for idx in order:
            f = feats[idx]
            y = ys[idx]
            z = bias + sum(weights[i] * v for i, v in f.items())
            err = _sigmoid(z) - y
            step = learning_rate * err
            for i, v in f.items():
                weights[i] -= step * v
            bias -= step
        loss, _, _ = logistic_loss_and_grad(weights, bias, feats, ys)
        train_losses.append(float(loss))
        if val_feats:
            vloss, _, _ = logistic_loss_and_grad(weights, bias, val_feats, val_ys)
            val_losses.append(float(vloss))
        else:
            val_losses.append(None)
    return Model(
        category=category,
        weights=weights,
        bias=float(bias),
        metadata={
            "seed": seed,
            "epochs": epochs,
            "learning_rate": learning_rate,
            "dim": HASH_DIM,
            "hash": "fnv1a64",
            "train_loss": train_losses,
            "validation_loss": val_losses,
        },
    )


def evaluate_model(
    model: Model,
    records: Sequence[LabeledSentence],
    threshold: float = 0.5,
) -> dict:
    """Threshold metrics plus ROC-AUC on a held-out record list."""
    if not records:
        raise BaselineError("empty evaluation split")
    scores = [predict(model, r.text) for r in records]
    labels = [1 if r.polarity == POSITIVE else 0 for r in records]
    tp = fp = fn = tn = 0
    for s, y in zip(scores, labels):
        predicted = s >= threshold
        if predicted and y:
            tp += 1
        elif predicted:
            fp += 1
        elif y:
            fn += 1
        else:
            tn += 1
    precision = tp / (tp + fp) if tp + fp else None
    recall = tp / (tp + fn) if tp + fn else None
    f1 = None
    if precision is not None and recall is not None and precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    try:
        auc = roc_auc(scores, labels)
    except ValueError:
        auc = None
    return {
        "threshold": threshold,
        "tp": tp,
        "fp": fp,
        "fn": fn,
        "tn": tn,
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "roc_auc": auc,
    }


# --- serialization ---------------------------------------------------------------


def save_model(model: Model, path: str | Path) -> None:
    meta = dict(model.metadata)
    meta["category"] = model.category
    meta["bias"] = model.bias
    meta["dim"] = len(model.weights)
    blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fp:
        fp.write(MODEL_MAGIC)
        fp.write(struct.pack("<I", MODEL_VERSION))
        fp.write(struct.pack("<I", len(blob)))
        fp.write(blob)
        fp.write(model.weights.astype("<f8").tobytes())


def load_model(path: str | Path) -> Model:
    with open(path, "rb") as fp:
        magic = fp.read(len(MODEL_MAGIC))
        if magic != MODEL_MAGIC:
            raise BaselineError(f"not a model file: {path}")
        (version,) = struct.unpack("<I", fp.read(4))
        if version != MODEL_VERSION:
            raise BaselineError(f"unsupported model version {version}")
        (meta_len,) = struct.unpack("<I", fp.read(4))
        meta = json.loads(fp.read(meta_len).decode("utf-8"))
        dim = meta.pop("dim")
        bias = meta.pop("bias")
        category = meta.pop("category")
        weights = np.frombuffer(fp.read(dim * 8), dtype="<f8").copy()
    if len(weights) != dim:
        raise BaselineError("model file truncated")
    meta["dim"] = dim
    return Model(category=category, weights=weights, bias=bias, metadata=meta)
