"""Losses: batched squared-error pose loss and (weighted) softmax cross entropy.

Both return ``(loss, grad_wrt_input)`` so callers can chain straight into a
network's backward pass.
"""

import numpy as np

from ..errors import ShapeError


def mse_loss(pred, target):
    """Mean over the batch of the per-sample sum of squared differences.

    pred/target: (B, D) or (B, J, 3); any trailing layout, flattened per sample.
    """
    if pred.shape != target.shape:
        raise ShapeError(f"mse_loss: shape mismatch {pred.shape} vs {target.shape}")
    b = pred.shape[0]
    diff = (pred - target).reshape(b, -1)
    loss = float((diff ** 2).sum() / b)
    grad = (2.0 / b) * diff.reshape(pred.shape)
    return loss, grad


def log_softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax(logits):
    return np.exp(log_softmax(logits))


def cross_entropy(logits, labels, weights=None):
    """Weighted softmax cross entropy, mean over the batch.

    logits: (B, K) or (K,); labels: int array (B,) or scalar;
    weights: per-class weights (K,), default uniform 1.
    Per-sample loss is -weights[label] * log softmax(logits)[label].
    """
    single = logits.ndim == 1
    if single:
        logits = logits[None, :]
        labels = np.asarray([labels])
    labels = np.asarray(labels, dtype=np.int64)
    b, k = logits.shape
    if labels.shape != (b,):
        raise ShapeError(f"cross_entropy: {b} logit rows but labels {labels.shape}")
    if weights is None:
        w = np.ones(k, dtype=np.float64)
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (k,):
            raise ShapeError(f"cross_entropy: need {k} class weights, got {w.shape}")
    logp = log_softmax(logits.astype(np.float64))
    wl = w[labels]
    loss = float(-(wl * logp[np.arange(b), labels]).sum() / b)
    grad = np.exp(logp)
    grad[np.arange(b), labels] -= 1.0
    grad *= wl[:, None] / b
    grad = grad.astype(logits.dtype)
    if single:
        grad = grad[0]
    return loss, grad
