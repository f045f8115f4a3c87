"""Evaluation: joint detection rate, classification metrics, parameter and
FLOP accounting, and wall-clock throughput.

FLOP convention: one multiply-accumulate = one FLOP for convolutions;
batch norm, activations, residual adds and pooling count one op per element.
"""

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

UNDEFINED = "undef"  # rendering of precision/recall with a zero denominator


# ---------------------------------------------------------------------------
# Joint detection rate

@dataclass
class JdrResult:
    rates: dict                # joint id -> detection rate in [0, 1]
    poses_used: int
    poses_excluded: int

    def rate(self, joint_id):
        return self.rates[joint_id]


def jdr(pred, gt, head_idx, neck_idx, joint_ids=None):
    """Per-joint detection rates over aligned (N, J, 3) pose sets.

    A joint is detected iff its error is strictly below half the ground-truth
    head-neck distance of that pose. Poses with head == neck are excluded."""
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape or pred.ndim != 3:
        raise DataError(f"jdr: incompatible shapes {pred.shape} vs {gt.shape}")
    n, nj, _ = gt.shape
    ids = list(joint_ids) if joint_ids is not None else list(range(nj))
    if len(ids) != nj:
        raise DataError(f"jdr: {len(ids)} joint ids for {nj} joints")
    thresholds = 0.5 * np.linalg.norm(gt[:, head_idx] - gt[:, neck_idx], axis=1)
    keep = thresholds > 0
    excluded = int((~keep).sum())
    if excluded:
        warnings.warn(f"jdr: excluded {excluded} poses with head == neck")
    if not keep.any():
        raise DataError("jdr: no poses with a computable threshold")
    errors = np.linalg.norm(pred[keep] - gt[keep], axis=2)
    detected = errors < thresholds[keep][:, None]
    rates = detected.mean(axis=0)
    return JdrResult(rates={jid: float(rates[k]) for k, jid in enumerate(ids)},
                     poses_used=int(keep.sum()), poses_excluded=excluded)


def mjdr(rates, joint_set):
    """Unweighted mean detection rate over the joints of ``joint_set``.

    ``rates`` maps joint ids (25-skeleton indices) to rates."""
    missing = [i for i in joint_set.indices if i not in rates]
    if missing:
        raise DataError(f"mjdr: no rate for joints {missing}")
    return float(np.mean([rates[i] for i in joint_set.indices]))


# ---------------------------------------------------------------------------
# Classification metrics

@dataclass
class ConfusionMetrics:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self):
        return self.tp + self.fp + self.fn + self.tn

    @property
    def accuracy(self):
        return (self.tp + self.tn) / self.total

    @property
    def precision(self):
        denom = self.tp + self.fp
        return self.tp / denom if denom else None

    @property
    def recall(self):
        denom = self.tp + self.fn
        return self.tp / denom if denom else None


def confusion_metrics(predictions, labels, positive=1):
    """Accuracy / precision / recall with the fall class as positive.

    Undefined rates (zero denominator) come back as None, not 0."""
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape or predictions.size == 0:
        raise DataError(
            f"confusion_metrics: bad shapes {predictions.shape} vs {labels.shape}")
    p = predictions == positive
    l = labels == positive
    return ConfusionMetrics(
        tp=int((p & l).sum()),
        fp=int((p & ~l).sum()),
        fn=int((~p & l).sum()),
        tn=int((~p & ~l).sum()),
    )


# ---------------------------------------------------------------------------
# Parameter / FLOP accounting

def count_params(model):
    """Total trainable scalars (conv weights and biases, BN gamma/beta)."""
    return int(sum(p.size for p in model.parameters()))


@dataclass
class FlopReport:
    conv_macs: int
    elementwise: int

    @property
    def total(self):
        return self.conv_macs + self.elementwise


def count_flops(model):
    """Single-forward FLOPs in eval mode (dropout free). Returns a FlopReport;
    use ``.total`` for the headline number."""
    from .fallnet import FallNet, layer_output_sizes
    from .lifting import LiftingNet

    if isinstance(model, FallNet):
        cfg = model.config
        sizes = layer_output_sizes(cfg)
        c = cfg.channels
        macs = 0
        elem = 0
        lengths = [length for _, _, length in sizes if length is not None]
        # entry conv + BN/ReLU
        macs += 3 * cfg.joints * c * cfg.kernel * lengths[0]
        elem += 2 * c * lengths[0]
        for ln in lengths[1:]:
            macs += c * c * cfg.kernel * ln   # dilated conv
            macs += c * c * 1 * ln            # pointwise conv
            elem += 2 * 2 * c * ln            # two BN + two ReLU
            elem += c * ln                    # residual add
        elem += c * lengths[-1]               # average pool
        macs += c * 2                         # classifier conv
        return FlopReport(conv_macs=macs, elementwise=elem)
    if isinstance(model, LiftingNet):
        cfg = model.config
        w = cfg.hidden
        macs = 2 * cfg.joints * w + 3 * cfg.joints * w
        elem = 2 * w
        for _ in range(cfg.blocks):
            macs += 2 * w * w
            elem += 2 * 2 * w + w
        return FlopReport(conv_macs=macs, elementwise=elem)
    raise DataError(f"cannot count FLOPs for {type(model).__name__}")


# ---------------------------------------------------------------------------
# Throughput

@dataclass
class BenchResult:
    fps: float
    median_seconds: float
    iters: int
    warmup: int
    platform: str
    low_confidence: bool = False


def bench_fps(model, input_shape, warmup=3, iters=20, platform_tag="unknown"):
    """Median wall-clock single-forward throughput in sequences per second."""
    if iters < 1:
        raise DataError("bench_fps: iters must be >= 1")
    x = np.zeros(input_shape, dtype=np.float32)
    for _ in range(warmup):
        model.forward(x, train=False)
    times = []
    for _ in range(iters):
        t0 = time.perf_counter()
        model.forward(x, train=False)
        times.append(time.perf_counter() - t0)
    median = float(np.median(times))
    return BenchResult(fps=1.0 / median, median_seconds=median, iters=iters,
                       warmup=warmup, platform=platform_tag,
                       low_confidence=iters < 5)


# ---------------------------------------------------------------------------
# Reporting

@dataclass
class EvalReport:
    """Flat bag of evaluation results, rendered as an aligned text table and
    as a machine-readable key-value document (one "dotted.path value" line)."""

    values: dict = field(default_factory=dict)

    def set(self, path, value):
        self.values[path] = value

    def update_confusion(self, cm, prefix="classification"):
        self.set(f"{prefix}.samples", cm.total)
        self.set(f"{prefix}.tp", cm.tp)
        self.set(f"{prefix}.fp", cm.fp)
        self.set(f"{prefix}.fn", cm.fn)
        self.set(f"{prefix}.tn", cm.tn)
        self.set(f"{prefix}.accuracy", cm.accuracy)
        self.set(f"{prefix}.precision", cm.precision)
        self.set(f"{prefix}.recall", cm.recall)

    @staticmethod
    def _render(value):
        if value is None:
            return UNDEFINED
        if isinstance(value, float):
            return repr(value)
        return str(value)

    def to_kv(self):
        lines = [f"{k} {self._render(v)}" for k, v in sorted(self.values.items())]
        return "\n".join(lines) + "\n"

    def to_text(self):
        keys = sorted(self.values)
        width = max((len(k) for k in keys), default=0)
        lines = ["metric".ljust(width) + "  value",
                 "-" * width + "  " + "-" * 5]
        for k in keys:
            lines.append(k.ljust(width) + "  " + self._render(self.values[k]))
        return "\n".join(lines) + "\n"


def read_kv(text):
    """Parse a key-value report back into a dict (ints, floats, undef -> None)."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            key, raw = line.split(None, 1)
        except ValueError:
            raise DataError(f"kv line {lineno}: missing value") from None
        if raw == UNDEFINED:
            out[key] = None
            continue
        try:
            out[key] = int(raw)
        except ValueError:
            try:
                out[key] = float(raw)
            except ValueError:
                out[key] = raw
    return out
