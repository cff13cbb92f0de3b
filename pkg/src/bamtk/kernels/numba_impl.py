"""Numba-compiled kernels.

Same contracts as numpy_impl, written as fused per-row loops. fastmath
stays off so results are reproducible; outputs agree with the numpy
backend to float rounding.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def softmax(x):
    out = np.empty_like(x)
    rows, cols = x.shape
    for r in range(rows):
        peak = x[r, 0]
        for c in range(1, cols):
            if x[r, c] > peak:
                peak = x[r, c]
        total = 0.0
        for c in range(cols):
            e = math.exp(x[r, c] - peak)
            out[r, c] = e
            total += e
        for c in range(cols):
            out[r, c] /= total
    return out


@njit(cache=True)
def softmax_grad(p, dy):
    out = np.empty_like(p)
    rows, cols = p.shape
    for r in range(rows):
        inner = 0.0
        for c in range(cols):
            inner += p[r, c] * dy[r, c]
        for c in range(cols):
            out[r, c] = p[r, c] * (dy[r, c] - inner)
    return out


@njit(cache=True)
def layernorm_fwd(x, gamma, beta, eps):
    rows, cols = x.shape
    y = np.empty_like(x)
    mean = np.empty((rows, 1), dtype=x.dtype)
    invstd = np.empty((rows, 1), dtype=x.dtype)
    for r in range(rows):
        total = 0.0
        for c in range(cols):
            total += x[r, c]
        mu = total / cols
        var = 0.0
        for c in range(cols):
            d = x[r, c] - mu
            var += d * d
        var /= cols
        inv = 1.0 / math.sqrt(var + eps)
        mean[r, 0] = mu
        invstd[r, 0] = inv
        for c in range(cols):
            y[r, c] = (x[r, c] - mu) * inv * gamma[c] + beta[c]
    return y, mean, invstd


@njit(cache=True)
def layernorm_bwd(x, gamma, mean, invstd, dy):
    rows, cols = x.shape
    dx = np.empty_like(x)
    dgamma = np.zeros(cols, dtype=x.dtype)
    dbeta = np.zeros(cols, dtype=x.dtype)
    for r in range(rows):
        mu = mean[r, 0]
        inv = invstd[r, 0]
        m1 = 0.0
        m2 = 0.0
        for c in range(cols):
            xhat = (x[r, c] - mu) * inv
            dxhat = dy[r, c] * gamma[c]
            dgamma[c] += dy[r, c] * xhat
            dbeta[c] += dy[r, c]
            m1 += dxhat
            m2 += dxhat * xhat
        m1 /= cols
        m2 /= cols
        for c in range(cols):
            xhat = (x[r, c] - mu) * inv
            dxhat = dy[r, c] * gamma[c]
            dx[r, c] = inv * (dxhat - m1 - xhat * m2)
    return dx, dgamma, dbeta


@njit(cache=True)
def adam_step(param, grad, m, v, lr, beta1, beta2, eps, t):
    n = param.shape[0]
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    for i in range(n):
        g = grad[i]
        m[i] = beta1 * m[i] + (1.0 - beta1) * g
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g
        param[i] -= lr * (m[i] / bc1) / (math.sqrt(v[i] / bc2) + eps)
