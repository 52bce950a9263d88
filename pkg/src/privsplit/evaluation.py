"""Attack protocol, PSNR, distribution separability, and comparison tables.

The attack is the supervised protocol: a fresh MLP classifier is trained on
the encrypted samples with their true labels, and its held-out accuracy
measures how much recognizable signal the obfuscation leaks. The classifier
never shares parameters with the trained encryption model or its
discriminator.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .autodiff import (
    Tensor,
    add,
    backward,
    matmul,
    sigmoid,
    softmax_cross_entropy,
    tanh,
    tmean,
)
from .datasets import LabeledDataset
from .objectives import bce
from .optim import Adam
from .svgplot import Panel, cluster_color, scatter_grid


def psnr(a, b, peak: float) -> float:
    """10*log10(peak^2 / MSE) in dB; +inf for identical inputs."""
    a = np.asarray(getattr(a, "pixels", a), dtype=np.float64)
    b = np.asarray(getattr(b, "pixels", b), dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"psnr shape mismatch: {a.shape} vs {b.shape}")
    if peak <= 0:
        raise ValueError("peak must be positive")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


@dataclass
class AttackConfig:
    hidden_width: int = 128
    iterations: int = 800
    batch_size: int = 64
    alpha: float = 1e-3
    seed: int = 0


def _init_classifier(rng, widths: list[int]) -> list[Tensor]:
    params = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        params.append(Tensor(rng.uniform(-bound, bound, size=(fan_in, fan_out)),
                             requires_grad=True))
        params.append(Tensor(np.zeros(fan_out), requires_grad=True))
    return params


def _classifier_forward(params: list[Tensor], x: Tensor) -> Tensor:
    h = x
    pairs = [(params[i], params[i + 1]) for i in range(0, len(params), 2)]
    for i, (w, b) in enumerate(pairs):
        h = add(matmul(h, w), b)
        if i < len(pairs) - 1:
            h = tanh(h)
    return h


def _train_classifier(features, labels, out_width, loss_kind, config: AttackConfig):
    rng = np.random.default_rng(config.seed)
    widths = [features.shape[1], config.hidden_width, config.hidden_width, out_width]
    params = _init_classifier(rng, widths)
    opt = Adam(params, alpha=config.alpha)
    n = features.shape[0]
    for _ in range(config.iterations):
        idx = rng.integers(0, n, size=config.batch_size)
        x = Tensor(features[idx])
        logits = _classifier_forward(params, x)
        if loss_kind == "softmax":
            loss = softmax_cross_entropy(logits, labels[idx])
        else:
            probs = sigmoid(logits)
            targets = labels[idx].astype(np.float64).reshape(-1, 1)
            loss = tmean(bce(probs, 1) * Tensor(targets)
                         + bce(probs, 0) * Tensor(1.0 - targets))
        backward(loss)
        opt.step()
    return params


def attack_train_eval(encrypted: LabeledDataset, config: AttackConfig | None = None) -> float:
    """Train a fresh classifier on the encrypted train split; held-out accuracy."""
    config = config or AttackConfig()
    if encrypted.class_count < 2:
        raise ValueError("attack needs at least 2 classes")
    train_x = encrypted.features[encrypted.train_idx]
    train_y = encrypted.labels[encrypted.train_idx]
    params = _train_classifier(train_x, train_y, encrypted.class_count, "softmax", config)
    held_x = Tensor(encrypted.features[encrypted.heldout_idx])
    logits = _classifier_forward(params, held_x)
    predicted = logits.data.argmax(axis=1)
    return float((predicted == encrypted.labels[encrypted.heldout_idx]).mean())


def separability(recon_samples, encrypted_samples, config: AttackConfig | None = None) -> float:
    """Held-out accuracy of a fresh binary classifier on the two sample sets.

    0.5 means the sets are indistinguishable, 1.0 maximal discrepancy. The
    classifier is never the training-time discriminator.
    """
    config = config or AttackConfig()
    recon = np.asarray(recon_samples, dtype=np.float64)
    encrypted = np.asarray(encrypted_samples, dtype=np.float64)
    if recon.shape[0] == 0 or encrypted.shape[0] == 0:
        raise ValueError("separability needs two non-empty sample sets")
    x = np.concatenate([recon, encrypted])
    y = np.concatenate([np.ones(recon.shape[0], dtype=np.int64),
                        np.zeros(encrypted.shape[0], dtype=np.int64)])
    rng = np.random.default_rng(config.seed)
    order = rng.permutation(x.shape[0])
    x, y = x[order], y[order]
    cut = max(1, x.shape[0] // 10)
    params = _train_classifier(x[cut:], y[cut:], 1, "bce", config)
    probs = sigmoid(_classifier_forward(params, Tensor(x[:cut]))).data[:, 0]
    return float(((probs > 0.5).astype(np.int64) == y[:cut]).mean())


# ---------------------------------------------------------------------------
# method comparison tables


@dataclass
class ObfuscationMethod:
    """An encryption transform in feature space, plus optionals for reporting."""

    name: str
    encrypt: Callable[[np.ndarray, np.random.Generator], np.ndarray]
    reconstruct: Callable[[np.ndarray], np.ndarray] | None = None
    proportion: float | None = None


@dataclass
class AttackReport:
    method: str
    accuracy: float
    chance: float
    psnr_recon_db: float | None
    psnr_encrypted_db: float | None
    proportion: float | None
    note: str = ""


def compare_methods(dataset: LabeledDataset, methods: list[ObfuscationMethod],
                    config: AttackConfig | None = None,
                    csv_path=None) -> list[AttackReport]:
    """One attack run per method plus Original and Random reference rows.

    PSNRs are computed on the held-out split against the original features,
    with the peak set to the original set's empirical value range. A failing
    method is reported with NaN accuracy and the error in its note; the
    remaining rows are still produced.
    """
    config = config or AttackConfig()
    chance = 1.0 / dataset.class_count
    held = dataset.heldout_idx
    original_held = dataset.features[held]
    peak = float(dataset.features.max() - dataset.features.min())
    seed_root = np.random.SeedSequence(config.seed)
    streams = seed_root.spawn(len(methods) + 1)

    reports = [
        AttackReport("Original",
                     attack_train_eval(dataset, _reseed(config, streams[0])),
                     chance, None, math.inf, None),
        AttackReport("Random", chance, chance, None, None, None),
    ]
    for method, stream in zip(methods, streams[1:]):
        cfg = _reseed(config, stream)
        try:
            rng = np.random.default_rng(stream)
            encrypted = method.encrypt(dataset.features, rng)
            if encrypted.shape != dataset.features.shape:
                raise ValueError(f"method {method.name} changed the feature shape")
            accuracy = attack_train_eval(dataset.with_features(encrypted), cfg)
            psnr_enc = psnr(encrypted[held], original_held, peak)
            psnr_rec = None
            if method.reconstruct is not None:
                recon = method.reconstruct(dataset.features)
                psnr_rec = psnr(recon[held], original_held, peak)
            reports.append(AttackReport(method.name, accuracy, chance,
                                        psnr_rec, psnr_enc, method.proportion))
        except (ValueError, RuntimeError) as exc:
            reports.append(AttackReport(method.name, math.nan, chance,
                                        None, None, method.proportion, note=str(exc)))
    if csv_path is not None:
        write_report_csv(reports, csv_path)
    return reports


def _reseed(config: AttackConfig, stream: np.random.SeedSequence) -> AttackConfig:
    seed = int(stream.generate_state(1, np.uint64)[0] % np.iinfo(np.int64).max)
    return AttackConfig(hidden_width=config.hidden_width, iterations=config.iterations,
                        batch_size=config.batch_size, alpha=config.alpha, seed=seed)


REPORT_COLUMNS = ("method", "accuracy", "chance", "psnr_recon_db",
                  "psnr_encrypted_db", "proportion")


def write_report_csv(reports: list[AttackReport], path) -> None:
    def cell(v):
        if v is None:
            return ""
        if isinstance(v, float) and math.isinf(v):
            return "inf"
        return repr(float(v)) if isinstance(v, float) else str(v)

    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for r in reports:
            writer.writerow([r.method, cell(r.accuracy), cell(r.chance),
                             cell(r.psnr_recon_db), cell(r.psnr_encrypted_db),
                             cell(r.proportion)])


# ---------------------------------------------------------------------------
# scatter reporting


def scatter_report(original: np.ndarray, labels: np.ndarray,
                   encrypted: dict[int, np.ndarray], reconstructed: dict[int, np.ndarray],
                   csv_path=None, svg_path=None) -> list[tuple]:
    """Rows (x, y, cluster, set, iteration) plus an optional 3-row panel grid.

    Top row: the original samples. Middle: encrypted outputs per recorded
    iteration. Bottom: reconstructed outputs per recorded iteration.
    """
    original = np.asarray(original, dtype=np.float64)
    labels = np.asarray(labels)
    for name, sets in (("original", {0: original}),
                       ("encrypted", encrypted), ("reconstructed", reconstructed)):
        for it, arr in sets.items():
            arr = np.asarray(arr)
            if arr.ndim != 2 or arr.shape[1] != 2:
                raise ValueError(f"{name} samples at iteration {it} are not 2-D points")
            if arr.shape[0] != labels.shape[0]:
                raise ValueError(f"{name} samples at iteration {it} disagree with label count")

    rows: list[tuple] = []
    for (x, y), c in zip(original, labels):
        rows.append((float(x), float(y), int(c), "original", ""))
    for set_name, sets in (("encrypted", encrypted), ("reconstructed", reconstructed)):
        for it in sorted(sets):
            for (x, y), c in zip(np.asarray(sets[it], dtype=np.float64), labels):
                rows.append((float(x), float(y), int(c), set_name, it))

    if csv_path is not None:
        with open(csv_path, "w", newline="", encoding="ascii") as fh:
            writer = csv.writer(fh)
            writer.writerow(("x", "y", "cluster", "set", "iteration"))
            for row in rows:
                writer.writerow([repr(row[0]), repr(row[1]), row[2], row[3], row[4]])

    if svg_path is not None:
        def panel(title, pts):
            return Panel(title, [(float(x), float(y), cluster_color(int(c)))
                                 for (x, y), c in zip(pts, labels)])

        grid = [
            [panel("original", original)],
            [panel(f"encrypted @ {it}", np.asarray(encrypted[it])) for it in sorted(encrypted)],
            [panel(f"reconstructed @ {it}", np.asarray(reconstructed[it]))
             for it in sorted(reconstructed)],
        ]
        scatter_grid([row for row in grid if row], svg_path)
    return rows
