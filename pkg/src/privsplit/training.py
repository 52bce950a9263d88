"""Collaborative training loop, ablation trainers, and checkpoints.

Each iteration samples one minibatch, generates the reconstructed and
encrypted outputs once, and backpropagates the shared objective once: the
adversarial term is literally the same formula for the discriminator and
the encryption model, and the reconstruction terms have no discriminator
path, so a single backward pass at the iteration-start parameters yields
both networks' exact gradients. The Adam updates are then applied in
discriminator-then-generator order.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Iterable

import numpy as np

from .autodiff import Tensor, backward, square, tmean
from .models import (
    ModelBundle,
    ModelConfig,
    NoiseSpec,
    build_models,
    decode,
    discriminate,
    encode,
    fake_privacy,
    merge,
    perceptual_features,
)
from .objectives import generator_adversarial_loss, reconstruction_loss
from .optim import Adam

CHECKPOINT_MAGIC = "privsplit-checkpoint"
CHECKPOINT_VERSION = 1

ABLATIONS = ("full", "no_collaborative", "msednet")


class TrainingDivergedError(RuntimeError):
    """A loss term went non-finite; carries the term name and iteration."""


class MalformedCheckpointError(ValueError):
    pass


class CheckpointVersionError(ValueError):
    pass


@dataclass
class TrainConfig:
    iterations: int
    batch_size: int = 64
    lam: float = 0.01
    alpha: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    alpha_d: float | None = None  # discriminator rate; None shares alpha
    noise_std: float = 1.0
    seed: int = 0
    ablation: str = "full"
    input_width: int = 2
    feature_width: int = 128
    privacy_proportion: Fraction = Fraction(1, 64)
    use_perceptual: bool = False
    early_stop: bool = False
    early_stop_window: int = 100
    early_stop_tol: float = 1e-5

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch size must be at least 1")
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if self.ablation not in ABLATIONS:
            raise ValueError(f"ablation must be one of {ABLATIONS}, got {self.ablation!r}")
        self.privacy_proportion = Fraction(self.privacy_proportion)
        if not (0 < self.privacy_proportion < 1):
            raise ValueError(f"privacy proportion must be in (0,1), got {self.privacy_proportion}")
        width = self.privacy_proportion * self.feature_width
        if width.denominator != 1 or width == 0:
            raise ValueError(
                f"proportion {self.privacy_proportion} of feature width "
                f"{self.feature_width} is not a positive integer")

    def model_config(self, model_seed: int) -> ModelConfig:
        return ModelConfig(
            input_width=self.input_width,
            feature_width=self.feature_width,
            privacy_width=int(self.privacy_proportion * self.feature_width),
            use_perceptual=self.use_perceptual,
            seed=model_seed,
        )


@dataclass
class TrainHistory:
    """Per-iteration loss records; adversarial entries are None when the
    ablation drops that term."""

    iterations: list[int] = field(default_factory=list)
    l_d: list[float | None] = field(default_factory=list)
    l_g_ad: list[float | None] = field(default_factory=list)
    l_recon_mse: list[float] = field(default_factory=list)
    l_perceptual: list[float] = field(default_factory=list)
    l_g_total: list[float] = field(default_factory=list)
    checkpoint_iterations: list[int] = field(default_factory=list)

    def append(self, iteration, l_d, l_g_ad, l_recon_mse, l_perceptual, l_g_total):
        self.iterations.append(iteration)
        self.l_d.append(l_d)
        self.l_g_ad.append(l_g_ad)
        self.l_recon_mse.append(l_recon_mse)
        self.l_perceptual.append(l_perceptual)
        self.l_g_total.append(l_g_total)

    def __len__(self) -> int:
        return len(self.iterations)


def _features_of(dataset) -> np.ndarray:
    feats = getattr(dataset, "features", dataset)
    feats = np.asarray(feats, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[0] == 0:
        raise ValueError(f"training data must be a non-empty (n, d) array, got shape {feats.shape}")
    return feats


def _check_finite(iteration: int, **terms: float) -> None:
    for name, value in terms.items():
        if value is not None and not np.isfinite(value):
            raise TrainingDivergedError(
                f"loss term {name} is non-finite at iteration {iteration}")


def train(dataset, config: TrainConfig,
          snapshot_iters: Iterable[int] = (),
          snapshot_fn: Callable[[int, ModelBundle], None] | None = None,
          update_recorder: Callable[[str], None] | None = None,
          ) -> tuple[ModelBundle, TrainHistory]:
    """Run `config.iterations` training iterations and return the models.

    `snapshot_fn(iteration, bundle)` fires whenever the number of completed
    iterations hits one of `snapshot_iters` (0 means the initial state).
    `update_recorder(phase)` observes the "D"/"G" update sequencing.
    """
    features = _features_of(dataset)
    if features.shape[1] != config.input_width:
        raise ValueError(
            f"dataset width {features.shape[1]} != configured input width {config.input_width}")

    seeds = np.random.SeedSequence(config.seed).spawn(3)
    model_seed = int(seeds[0].generate_state(1, np.uint64)[0])
    batch_rng = np.random.default_rng(seeds[1])
    noise_rng = np.random.default_rng(seeds[2])

    bundle = build_models(config.model_config(model_seed))
    history = TrainHistory()
    snapshot_iters = set(snapshot_iters)

    def snapshot(done: int) -> None:
        if snapshot_fn is not None and done in snapshot_iters:
            snapshot_fn(done, bundle)

    snapshot(0)
    if config.iterations == 0:
        return bundle, history

    moments = dict(beta1=config.beta1, beta2=config.beta2, epsilon=config.epsilon)
    opt_g = Adam(bundle.generator_parameters(), alpha=config.alpha, **moments)
    opt_d = None
    if config.ablation == "full":
        opt_d = Adam(bundle.discriminator_parameters(),
                     alpha=config.alpha if config.alpha_d is None else config.alpha_d,
                     **moments)

    phi = None
    if config.use_perceptual or config.ablation == "msednet":
        phi = lambda t: perceptual_features(t, bundle)
    recon_phi = phi if config.use_perceptual else None

    n = features.shape[0]
    for i in range(config.iterations):
        idx = batch_rng.integers(0, n, size=config.batch_size)
        x = Tensor(features[idx])

        try:
            split = encode(x, bundle)
            x_r = decode(merge(split.public_part, split.privacy_part, bundle), bundle)
            noise = NoiseSpec(std=config.noise_std,
                              seed=int(noise_rng.integers(np.iinfo(np.int64).max)))
            x_e = decode(merge(split.public_part,
                               fake_privacy(split.privacy_part, noise), bundle), bundle)

            recon_mse, perceptual, recon_combined = reconstruction_loss(
                x_r, x, recon_phi, config.lam)

            if config.ablation == "full":
                d_r = discriminate(x_r, bundle)
                d_e = discriminate(x_e, bundle)
                l_ad = generator_adversarial_loss(d_r, d_e)
                total = l_ad + recon_combined
                l_ad_val = l_ad.item()
                l_d_val = l_ad_val  # one shared objective
            elif config.ablation == "no_collaborative":
                total = recon_combined
                l_ad_val = None
                l_d_val = None
            else:  # msednet
                encrypted_distance = tmean(square(phi(x_e) - phi(x)))
                total = recon_combined - encrypted_distance
                l_ad_val = None
                l_d_val = None
        except ValueError as exc:
            if "non-finite" in str(exc):
                raise TrainingDivergedError(
                    f"non-finite values in forward pass at iteration {i}: {exc}") from exc
            raise

        total_val = total.item()
        mse_val = recon_mse.item()
        perc_val = perceptual.item()
        _check_finite(i, l_d=l_d_val, l_g_ad=l_ad_val, l_recon_mse=mse_val,
                      l_perceptual=perc_val, l_g_total=total_val)

        backward(total)
        if opt_d is not None:
            opt_d.step()
            if update_recorder is not None:
                update_recorder("D")
        opt_g.step()
        if update_recorder is not None:
            update_recorder("G")

        history.append(i, l_d_val, l_ad_val, mse_val, perc_val, total_val)
        snapshot(i + 1)

        if config.early_stop and _moving_average_settled(
                history.l_g_total, config.early_stop_window, config.early_stop_tol):
            break

    return bundle, history


def _moving_average_settled(values: list[float], window: int, tol: float) -> bool:
    if len(values) < window + 1:
        return False
    now = sum(values[-window:]) / window
    prev = sum(values[-window - 1:-1]) / window
    return abs(now - prev) < tol


def train_collaborative(dataset, config: TrainConfig, **kwargs):
    if config.ablation != "full":
        raise ValueError("train_collaborative requires ablation='full'")
    return train(dataset, config, **kwargs)


def train_ablation(dataset, config: TrainConfig, **kwargs):
    if config.ablation != "no_collaborative":
        raise ValueError("train_ablation requires ablation='no_collaborative'")
    return train(dataset, config, **kwargs)


def train_msednet(dataset, config: TrainConfig, **kwargs):
    if config.ablation != "msednet":
        raise ValueError("train_msednet requires ablation='msednet'")
    return train(dataset, config, **kwargs)


# ---------------------------------------------------------------------------
# checkpoints


def _layers_to_json(layers) -> list[dict]:
    return [{"shape": list(l.w.data.shape),
             "w": l.w.data.reshape(-1).tolist(),
             "b": l.b.data.tolist()} for l in layers]


def _layers_from_json(records, trainable: bool) -> list:
    from .models import Layer  # local import keeps module load order simple

    layers = []
    for rec in records:
        shape = tuple(rec["shape"])
        w = np.asarray(rec["w"], dtype=np.float64)
        b = np.asarray(rec["b"], dtype=np.float64)
        if w.size != shape[0] * shape[1] or b.size != shape[1]:
            raise MalformedCheckpointError(
                f"layer of shape {shape} carries {w.size} weights / {b.size} biases")
        layers.append(Layer(Tensor(w.reshape(shape), requires_grad=trainable),
                            Tensor(b, requires_grad=trainable)))
    return layers


def save_checkpoint(bundle: ModelBundle, history: TrainHistory, path) -> None:
    doc = {
        "magic": CHECKPOINT_MAGIC,
        "version": CHECKPOINT_VERSION,
        "model_config": asdict(bundle.config),
        "networks": {
            "encoder": _layers_to_json(bundle.encoder),
            "decoder": _layers_to_json(bundle.decoder),
            "discriminator": _layers_to_json(bundle.discriminator),
            "perceptual": _layers_to_json(bundle.perceptual),
        },
        "history": {
            "iterations": history.iterations,
            "l_d": history.l_d,
            "l_g_ad": history.l_g_ad,
            "l_recon_mse": history.l_recon_mse,
            "l_perceptual": history.l_perceptual,
            "l_g_total": history.l_g_total,
            "checkpoint_iterations": history.checkpoint_iterations,
        },
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_checkpoint(path) -> tuple[ModelBundle, TrainHistory]:
    with open(path, "r", encoding="ascii") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedCheckpointError(f"not a checkpoint file: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("magic") != CHECKPOINT_MAGIC:
        raise MalformedCheckpointError("missing checkpoint magic")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointVersionError(
            f"checkpoint version {doc.get('version')!r}, expected {CHECKPOINT_VERSION}")
    try:
        config = ModelConfig(**doc["model_config"])
        nets = doc["networks"]
        bundle = ModelBundle(
            encoder=_layers_from_json(nets["encoder"], True),
            decoder=_layers_from_json(nets["decoder"], True),
            discriminator=_layers_from_json(nets["discriminator"], True),
            perceptual=_layers_from_json(nets["perceptual"], False),
            config=config,
        )
        h = doc["history"]
        history = TrainHistory(
            iterations=list(h["iterations"]),
            l_d=list(h["l_d"]),
            l_g_ad=list(h["l_g_ad"]),
            l_recon_mse=list(h["l_recon_mse"]),
            l_perceptual=list(h["l_perceptual"]),
            l_g_total=list(h["l_g_total"]),
            checkpoint_iterations=list(h.get("checkpoint_iterations", [])),
        )
    except (KeyError, TypeError) as exc:
        raise MalformedCheckpointError(f"checkpoint is missing fields: {exc}") from exc
    return bundle, history


HISTORY_COLUMNS = ("iteration", "l_D", "l_G_ad", "l_recon_mse", "l_perceptual", "l_G_total")


def write_history_csv(history: TrainHistory, path) -> None:
    def cell(v):
        return "" if v is None else repr(float(v))

    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(HISTORY_COLUMNS)
        for row in zip(history.iterations, history.l_d, history.l_g_ad,
                       history.l_recon_mse, history.l_perceptual, history.l_g_total):
            writer.writerow([row[0]] + [cell(v) for v in row[1:]])
