"""Finite-difference validation of the analytic gradients.

Central differences on a seeded random subsample of parameter entries,
compared against backward() output. Relative error uses denominator
max(|analytic|, |numeric|, 1e-4), so vanishing entries are judged on a
scaled absolute error instead of blowing up the ratio. Run models in
float64 for meaningful tolerances.
"""

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from .model import Transformer, label_smoothed_loss

SUB_BLOCKS = ("embedding", "attention", "ffn", "layernorm")


def classify_param(name: str) -> str:
    if "emb" in name or name == "out_proj":
        return "embedding"
    if ".attn." in name or ".sattn." in name or ".xattn." in name:
        return "attention"
    if ".ffn." in name:
        return "ffn"
    if ".ln" in name or name.startswith(("enc_ln", "dec_ln")):
        return "layernorm"
    raise ValueError(f"unclassified parameter {name!r}")


def finite_difference_error(
    loss_fn: Callable[[], float],
    params: Mapping[str, np.ndarray],
    analytic: Mapping[str, np.ndarray],
    epsilon: float = 1e-5,
    samples_per_param: int = 2,
    seed: int = 0,
    param_filter: Callable[[str], bool] | None = None,
) -> float:
    """Max relative error between analytic grads and central differences.

    loss_fn must read the live arrays in params; entries are perturbed in
    place and restored.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for name in sorted(params):
        if param_filter is not None and not param_filter(name):
            continue
        param = params[name]
        grad = analytic[name]
        count = min(samples_per_param, param.size)
        for flat_index in rng.choice(param.size, size=count, replace=False):
            original = param.flat[flat_index]
            param.flat[flat_index] = original + epsilon
            up = loss_fn()
            param.flat[flat_index] = original - epsilon
            down = loss_fn()
            param.flat[flat_index] = original
            numeric = (up - down) / (2 * epsilon)
            a = float(grad.flat[flat_index])
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-4)
            worst = max(worst, err)
    return worst


def gradient_check(
    model: Transformer,
    params: dict[str, np.ndarray],
    src: np.ndarray,
    tgt_in: np.ndarray,
    tgt_out: np.ndarray,
    smoothing: float = 0.1,
    epsilon: float = 1e-5,
    samples_per_param: int = 2,
    seed: int = 0,
    param_filter: Callable[[str], bool] | None = None,
) -> float:
    """Check the transformer's gradients on one batch (no dropout)."""
    logits, cache = model.forward(params, src, tgt_in, train=False)
    _, dlogits = label_smoothed_loss(logits, tgt_out, smoothing)
    analytic = model.backward(params, cache, dlogits)

    def loss_fn() -> float:
        out, _ = model.forward(params, src, tgt_in, train=False)
        loss, _ = label_smoothed_loss(out, tgt_out, smoothing)
        return loss

    return finite_difference_error(
        loss_fn,
        params,
        analytic,
        epsilon=epsilon,
        samples_per_param=samples_per_param,
        seed=seed,
        param_filter=param_filter,
    )


def gradient_check_blocks(
    model: Transformer,
    params: dict[str, np.ndarray],
    src: np.ndarray,
    tgt_in: np.ndarray,
    tgt_out: np.ndarray,
    **kwargs,
) -> dict[str, float]:
    """Per-sub-block max relative errors (embedding/attention/ffn/layernorm)."""
    return {
        block: gradient_check(
            model,
            params,
            src,
            tgt_in,
            tgt_out,
            param_filter=lambda name, b=block: classify_param(name) == b,
            **kwargs,
        )
        for block in SUB_BLOCKS
    }
