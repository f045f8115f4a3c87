"""Dilated temporal-convolution fall classifier.

Architecture: entry conv (3J -> C, k=3, d=1), then N residual blocks, each a
k=3 conv with dilation 3^n followed by a k=1 conv, every conv trailed by
BN/ReLU/dropout except the final classifier conv. Convolutions are unpadded,
so the skip path is center-cropped before the residual addition. Global
average pooling feeds a k=1 classifier conv with 2 outputs.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, NumericError, ShapeError
from .nn import (
    Adam,
    BatchNorm1d,
    Conv1d,
    Dropout,
    GlobalAvgPool,
    ReLU,
    StepDecay,
    cross_entropy,
)
from .nn.losses import softmax

NOT_FALL, FALL = 0, 1
WCEL_WEIGHTS = (1.0 / 60.0, 59.0 / 60.0)  # (not-fall, fall) per-class weights


@dataclass(frozen=True)
class FallNetConfig:
    joints: int = 16
    length: int = 300
    channels: int = 512
    blocks: int = 4
    dropout: float = 0.25
    kernel: int = 3

    def __post_init__(self):
        if self.blocks < 1:
            raise ConfigError("need at least one residual block")
        if self.length < self.min_length:
            raise ConfigError(
                f"input length {self.length} below minimum {self.min_length} "
                f"for {self.blocks} blocks")

    @property
    def dilations(self):
        """Dilations of all k=3 convolutions: entry then one per block."""
        return (1,) + tuple(3 ** n for n in range(1, self.blocks + 1))

    @property
    def min_length(self):
        return 1 + (self.kernel - 1) * sum(self.dilations)


def layer_output_sizes(config):
    """Per-layer (name, channels, length) following L -> L - 2d at each k=3
    conv; pooling and the classifier have no temporal extent (length None)."""
    sizes = []
    length = config.length
    for i, d in enumerate(config.dilations):
        length -= (config.kernel - 1) * d
        if length < 1:
            raise ShapeError(
                f"input length {config.length} too short; need at least "
                f"{config.min_length}")
        name = "conv_1" if i == 0 else f"res_{i}"
        sizes.append((name, config.channels, length))
    sizes.append(("pool", config.channels, None))
    sizes.append(("conv_2", 2, None))
    return sizes


def receptive_field(config):
    """Frames of input influencing one final-feature position."""
    return 1 + (config.kernel - 1) * sum(config.dilations)


class FallNet:
    def __init__(self, config=FallNetConfig(), seed=0, dtype=np.float32):
        self.config = config
        self.dtype = dtype
        rng = np.random.default_rng(seed)
        self.drop_rng = np.random.default_rng(
            np.random.SeedSequence(seed).spawn(1)[0])
        c = config.channels

        def tail(name, cout):
            return [
                BatchNorm1d(cout, name=f"{name}_bn", dtype=dtype),
                ReLU(),
                Dropout(config.dropout, rng=self.drop_rng),
            ]

        self.entry = [
            Conv1d(3 * config.joints, c, config.kernel, dilation=1, rng=rng,
                   name="conv_1", dtype=dtype),
            *tail("conv_1", c),
        ]
        self.blocks = []
        for n in range(1, config.blocks + 1):
            d = 3 ** n
            blk = [
                Conv1d(c, c, config.kernel, dilation=d, rng=rng,
                       name=f"res_{n}.dconv", dtype=dtype),
                *tail(f"res_{n}.dconv", c),
                Conv1d(c, c, 1, rng=rng, name=f"res_{n}.pconv", dtype=dtype),
                *tail(f"res_{n}.pconv", c),
            ]
            self.blocks.append((blk, d))
        self.pool = GlobalAvgPool()
        self.classifier = Conv1d(c, 2, 1, rng=rng, name="conv_2", dtype=dtype)

    def _layers(self):
        yield from self.entry
        for blk, _ in self.blocks:
            yield from blk
        yield self.classifier

    def parameters(self):
        out = []
        for layer in self._layers():
            out.extend(layer.parameters())
        return out

    def state_dict(self):
        out = []
        for layer in self._layers():
            out.extend(layer.state())
        return out

    def load_state_dict(self, arrays):
        for name, target in self.state_dict():
            if name not in arrays:
                raise DataError(f"checkpoint missing array {name!r}")
            src = arrays[name]
            if src.shape != target.shape:
                raise DataError(
                    f"checkpoint array {name!r} has shape {src.shape}, "
                    f"model expects {target.shape}")
            target[...] = src.astype(target.dtype)

    def forward(self, x, train=False):
        """x: (B, 3J, T) -> logits (B, 2); class order (not-fall, fall)."""
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim == 2:
            x = x[None]
        cfg = self.config
        if x.shape[1] != 3 * cfg.joints or x.shape[2] != cfg.length:
            raise ShapeError(
                f"expected (B, {3 * cfg.joints}, {cfg.length}), got {x.shape}")
        h = x
        for layer in self.entry:
            h = layer.forward(h, train)
        for blk, d in self.blocks:
            # the dilated k=3 conv shrinks by 2d; crop d per side off the skip
            skip = h[:, :, d:-d]
            for layer in blk:
                h = layer.forward(h, train)
            h = h + skip
        pooled = self.pool.forward(h, train)
        logits = self.classifier.forward(pooled[:, :, None], train)
        return logits[:, :, 0]

    def features(self, x):
        """Eval-mode pre-pool feature map (B, C, L_final); position t depends
        only on input frames [t, t + receptive_field - 1]."""
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim == 2:
            x = x[None]
        h = x
        for layer in self.entry:
            h = layer.forward(h, train=False)
        for blk, d in self.blocks:
            skip = h[:, :, d:-d]
            for layer in blk:
                h = layer.forward(h, train=False)
            h = h + skip
        return h

    def backward(self, grad_logits):
        g = self.classifier.backward(
            np.asarray(grad_logits, dtype=self.dtype)[:, :, None])
        g = self.pool.backward(g[:, :, 0])
        for blk, d in reversed(self.blocks):
            g_path = g
            for layer in reversed(blk):
                g_path = layer.backward(g_path)
            g_skip = np.zeros(
                (g.shape[0], g.shape[1], g.shape[2] + 2 * d), dtype=g.dtype)
            g_skip[:, :, d:-d] = g
            g = g_path + g_skip
        for layer in reversed(self.entry):
            g = layer.backward(g)
        return g


def predict(net, seq):
    """Classify one (3J, T) sequence; ties go to not-fall."""
    logits = net.forward(np.asarray(seq)[None], train=False)[0]
    probs = softmax(logits.astype(np.float64))
    label = FALL if probs[FALL] > probs[NOT_FALL] else NOT_FALL
    return label, float(probs[label])


@dataclass
class EpochMetrics:
    epoch: int
    loss: float
    accuracy: float
    precision: float | None
    recall: float | None


@dataclass
class FallTrainResult:
    history: list = field(default_factory=list)

    @property
    def final(self):
        return self.history[-1] if self.history else None


def train_fall(net, data, labels, epochs=20, lr=1e-4, milestones=(),
               decay=0.1, batch_size=16, loss="ce", class_weights=None,
               seed=0, stop_when_perfect=False):
    """Train with (optionally weighted) cross entropy; logs accuracy,
    precision and recall per epoch, measured in eval mode on the training set.

    loss: "ce" or "wcel" (the (1/60, 59/60) weighting); explicit
    class_weights override either."""
    from .metrics import confusion_metrics

    data = np.asarray(data, dtype=net.dtype)
    labels = np.asarray(labels, dtype=np.int64)
    n = data.shape[0]
    if n == 0:
        raise DataError("empty training set")
    if loss not in ("ce", "wcel"):
        raise ConfigError(f"loss must be 'ce' or 'wcel', got {loss!r}")
    if class_weights is None:
        class_weights = WCEL_WEIGHTS if loss == "wcel" else (1.0, 1.0)
    if len(set(labels.tolist())) < 2:
        import warnings

        warnings.warn("single-class training set; precision/recall may be undefined")
    opt = Adam(net.parameters(), lr=lr,
               schedule=StepDecay(milestones=milestones, factor=decay))
    shuffle_rng = np.random.default_rng(seed)
    result = FallTrainResult()
    for epoch in range(epochs):
        opt.set_epoch(epoch)
        order = shuffle_rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            opt.zero_grad()
            logits = net.forward(data[idx], train=True)
            batch_loss, grad = cross_entropy(logits, labels[idx],
                                             weights=class_weights)
            if not np.isfinite(batch_loss):
                raise NumericError(
                    f"non-finite fall-net loss at epoch {epoch}: {batch_loss}")
            net.backward(grad)
            opt.step()
            total += batch_loss * len(idx)
        preds = evaluate_predictions(net, data, batch_size=batch_size)
        cm = confusion_metrics(preds, labels)
        result.history.append(EpochMetrics(
            epoch=epoch, loss=total / n, accuracy=cm.accuracy,
            precision=cm.precision, recall=cm.recall))
        if stop_when_perfect and cm.accuracy == 1.0:
            break
    return result


def evaluate_predictions(net, data, batch_size=16):
    """Eval-mode class predictions for a (N, 3J, T) batch."""
    preds = np.empty(data.shape[0], dtype=np.int64)
    for start in range(0, data.shape[0], batch_size):
        logits = net.forward(data[start:start + batch_size], train=False)
        p = softmax(logits.astype(np.float64))
        preds[start:start + batch_size] = (p[:, FALL] > p[:, NOT_FALL]).astype(np.int64)
    return preds
