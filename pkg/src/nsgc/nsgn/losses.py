"""Losses returning ``(value, gradient)`` averaged over the batch."""

import numpy as np


def loss_mae(pred, target):
    """Mean absolute error; the subgradient at ``pred == target`` is 0."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float).reshape(pred.shape)
    diff = pred - target
    return float(np.mean(np.abs(diff))), np.sign(diff) / diff.size


def loss_mse(pred, target):
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float).reshape(pred.shape)
    diff = pred - target
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size


def softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def loss_ce(logits, classes):
    """Cross-entropy of ``(B, C)`` logits against integer class labels."""
    logits = np.atleast_2d(np.asarray(logits, dtype=float))
    classes = np.atleast_1d(np.asarray(classes, dtype=int))
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    rows = np.arange(len(classes))
    value = float(-logp[rows, classes].mean())
    grad = np.exp(logp)
    grad[rows, classes] -= 1.0
    return value, grad / len(classes)


LOSSES = {"mae": loss_mae, "mse": loss_mse, "ce": loss_ce}
