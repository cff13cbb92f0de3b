"""Numeric kernels with selectable backend.

Two interchangeable implementations: compiled (numba) and pure numpy.
The BAMTK_KERNELS environment variable picks one at import time
("numba" or "numpy"); default is numba when importable, numpy otherwise.
set_backend/use_backend switch at runtime, for tests and benchmarks.

All kernels take 2D (rows, features) arrays except adam_step, which
updates arbitrarily-shaped parameters in place.
"""

from __future__ import annotations

import os
from contextlib import contextmanager

import numpy as np

from . import numpy_impl

try:
    from . import numba_impl

    _NUMBA_ERROR: Exception | None = None
except Exception as exc:  # pragma: no cover - depends on host
    numba_impl = None
    _NUMBA_ERROR = exc

_ENV_VAR = "BAMTK_KERNELS"


def _resolve(name: str | None):
    if name in (None, ""):
        name = "numba" if numba_impl is not None else "numpy"
    if name == "numpy":
        return "numpy", numpy_impl
    if name == "numba":
        if numba_impl is None:
            raise RuntimeError(f"numba backend unavailable: {_NUMBA_ERROR}")
        return "numba", numba_impl
    raise ValueError(f"unknown kernel backend {name!r} (use numba or numpy)")


_backend_name, _backend = _resolve(os.environ.get(_ENV_VAR))


def backend_name() -> str:
    return _backend_name


def set_backend(name: str | None) -> str:
    global _backend_name, _backend
    _backend_name, _backend = _resolve(name)
    return _backend_name


@contextmanager
def use_backend(name: str):
    previous = _backend_name
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def softmax(x: np.ndarray) -> np.ndarray:
    return _backend.softmax(x)


def softmax_grad(p: np.ndarray, dy: np.ndarray) -> np.ndarray:
    return _backend.softmax_grad(p, dy)


def layernorm_fwd(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray, eps: float):
    return _backend.layernorm_fwd(x, gamma, beta, eps)


def layernorm_bwd(
    x: np.ndarray,
    gamma: np.ndarray,
    mean: np.ndarray,
    invstd: np.ndarray,
    dy: np.ndarray,
):
    return _backend.layernorm_bwd(x, gamma, mean, invstd, dy)


def adam_step(
    param: np.ndarray,
    grad: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    lr: float,
    beta1: float,
    beta2: float,
    eps: float,
    t: int,
) -> None:
    if _backend is numpy_impl:
        numpy_impl.adam_step(param, grad, m, v, lr, beta1, beta2, eps, t)
    else:
        _backend.adam_step(
            param.reshape(-1),
            np.ascontiguousarray(grad).reshape(-1),
            m.reshape(-1),
            v.reshape(-1),
            lr,
            beta1,
            beta2,
            eps,
            t,
        )
