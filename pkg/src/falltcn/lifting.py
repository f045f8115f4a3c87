"""2D-to-3D pose lifting: residual 1x1-convolution network over concatenated
joint coordinates, trained with the squared-error pose loss.
"""

from dataclasses import dataclass, field

import numpy as np

from . import normalize
from .errors import ConfigError, DataError, NumericError, ShapeError
from .nn import Adam, BatchNorm1d, Conv1d, Dropout, ReLU, StepDecay, mse_loss

# Width chosen so 2 blocks x 2 convolutions land near the 2.2M parameter budget.
DEFAULT_HIDDEN = 736


@dataclass(frozen=True)
class LiftingConfig:
    joints: int = 16
    hidden: int = DEFAULT_HIDDEN
    blocks: int = 2
    dropout: float = 0.25

    def __post_init__(self):
        if self.blocks < 1 or self.hidden < 1 or self.joints < 1:
            raise ConfigError(f"invalid lifting config {self}")


class LiftingNet:
    """Input projection 2J -> hidden, residual blocks of two 1x1 convolutions
    (each conv -> BN -> ReLU -> dropout), output projection hidden -> 3J."""

    def __init__(self, config=LiftingConfig(), seed=0, dtype=np.float32):
        self.config = config
        self.dtype = dtype
        rng = np.random.default_rng(seed)
        self.drop_rng = np.random.default_rng(
            np.random.SeedSequence(seed).spawn(1)[0])
        cj = config.joints
        w = config.hidden

        def unit(cin, cout, name):
            return [
                Conv1d(cin, cout, 1, rng=rng, name=name, dtype=dtype),
                BatchNorm1d(cout, name=f"{name}_bn", dtype=dtype),
                ReLU(),
                Dropout(config.dropout, rng=self.drop_rng),
            ]

        self.in_proj = unit(2 * cj, w, "in_proj")
        self.blocks = [
            [*unit(w, w, f"block{b}.conv1"), *unit(w, w, f"block{b}.conv2")]
            for b in range(1, config.blocks + 1)
        ]
        self.out_proj = Conv1d(w, 3 * cj, 1, rng=rng, name="out_proj", dtype=dtype)
        self._block_inputs = None

    # -- parameter plumbing -------------------------------------------------

    def _layers(self):
        yield from self.in_proj
        for blk in self.blocks:
            yield from blk
        yield self.out_proj

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

    # -- forward / backward -------------------------------------------------

    def forward(self, x2d, train=False):
        """x2d: (B, 2J) normalized poses -> (B, 3J) root-relative 3D."""
        x2d = np.asarray(x2d, dtype=self.dtype)
        if x2d.ndim != 2 or x2d.shape[1] != 2 * self.config.joints:
            raise ShapeError(
                f"expected (B, {2 * self.config.joints}) input, got {x2d.shape}")
        h = x2d[:, :, None]
        for layer in self.in_proj:
            h = layer.forward(h, train)
        for blk in self.blocks:
            skip = h
            for layer in blk:
                h = layer.forward(h, train)
            h = h + skip
        out = self.out_proj.forward(h, train)
        return out[:, :, 0]

    def backward(self, grad_out):
        g = self.out_proj.backward(np.asarray(grad_out, dtype=self.dtype)[:, :, None])
        for blk in reversed(self.blocks):
            g_path = g
            for layer in reversed(blk):
                g_path = layer.backward(g_path)
            g = g + g_path
        for layer in reversed(self.in_proj):
            g = layer.backward(g)
        return g[:, :, 0]


def lift(net, pose2d):
    """Lift one normalized (J, 2) pose to a root-relative (J, 3) pose."""
    flat = np.asarray(pose2d).reshape(1, -1)
    out = net.forward(flat, train=False)
    return out.reshape(net.config.joints, 3)


@dataclass
class TrainResult:
    losses: list = field(default_factory=list)

    @property
    def final_loss(self):
        return self.losses[-1] if self.losses else None


def train_lifting(net, x2d, y3d, epochs=60, lr=1e-4, milestones=(20, 40),
                  decay=0.1, batch_size=16, seed=0, stop_below=None):
    """Minimize the mean squared pose error with Adam and step decay.

    x2d: (N, 2J), y3d: (N, 3J), both already normalized. Returns the
    per-epoch training loss curve. When stop_below is set, training ends
    early once the epoch loss drops under that threshold."""
    x2d = np.asarray(x2d, dtype=net.dtype)
    y3d = np.asarray(y3d, dtype=net.dtype)
    n = x2d.shape[0]
    if n == 0:
        raise DataError("empty lifting dataset")
    opt = Adam(net.parameters(), lr=lr,
               schedule=StepDecay(milestones=milestones, factor=decay))
    shuffle_rng = np.random.default_rng(seed)
    result = TrainResult()
    for epoch in range(epochs):
        opt.set_epoch(epoch)
        order = shuffle_rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            opt.zero_grad()
            pred = net.forward(x2d[idx], train=True)
            loss, grad = mse_loss(pred, y3d[idx])
            if not np.isfinite(loss):
                raise NumericError(
                    f"non-finite lifting loss at epoch {epoch}: {loss}")
            net.backward(grad)
            opt.step()
            total += loss * len(idx)
        result.losses.append(total / n)
        if stop_below is not None and result.losses[-1] < stop_below:
            break
    return result


# ---------------------------------------------------------------------------
# Synthetic lifting pairs

@dataclass
class PosePairBatch:
    x2d: np.ndarray          # (N, 2J) normalized
    y3d: np.ndarray          # (N, 3J) normalized
    raw3d: np.ndarray        # (N, J, 3) camera-space, meters
    raw2d: np.ndarray        # (N, J, 2) pixels
    intrinsics: tuple        # (fx, fy, cx, cy)


INTRINSICS = (1000.0, 1000.0, 960.0, 540.0)


def project_pinhole(p3, intrinsics=INTRINSICS):
    """Perspective-project (J, 3) camera-space points (z = depth) to pixels."""
    fx, fy, cx, cy = intrinsics
    u = fx * p3[:, 0] / p3[:, 2] + cx
    v = fy * p3[:, 1] / p3[:, 2] + cy
    return np.stack([u, v], axis=1)


def synth_pose_pairs(rng_seed, n, joints=16):
    """Deterministic (2D, 3D) pairs: smooth random 3D point clouds a few
    meters from a pinhole camera, projected then normalized on both sides."""
    rng = np.random.default_rng(rng_seed)
    raw3d = np.empty((n, joints, 3))
    raw2d = np.empty((n, joints, 2))
    x2d = np.empty((n, 2 * joints))
    y3d = np.empty((n, 3 * joints))
    for i in range(n):
        center = np.array([rng.uniform(-0.5, 0.5), rng.uniform(-0.3, 0.3),
                           rng.uniform(2.5, 3.5)])
        body = rng.normal(0.0, 0.3, size=(joints, 3))
        body[0] = 0.0  # root joint
        p3 = center + body
        p2 = project_pinhole(p3)
        raw3d[i] = p3
        raw2d[i] = p2
        x2d[i] = normalize.normalize_2d(p2, root_index=0).reshape(-1)
        c3 = normalize.center_to_root(p3, 0)
        s3, _ = normalize.frobenius_scale(c3)
        y3d[i] = s3.reshape(-1)
    return PosePairBatch(x2d=x2d, y3d=y3d, raw3d=raw3d, raw2d=raw2d,
                         intrinsics=INTRINSICS)
