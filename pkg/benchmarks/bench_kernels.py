#!/usr/bin/env python3
"""Benchmark the compiled (numba) kernels against the pure-numpy fallback.

Times each kernel on transformer-shaped inputs under both backends and
reports the speedup, then times a short end-to-end training run per
backend. The numba path is warmed up first so JIT compilation is not
counted.

Usage: python3 benchmarks/bench_kernels.py [--iters N] [--skip-train]
"""

import argparse
import time

import numpy as np

from bamtk import kernels
from bamtk.nmt import TrainingConfig, train
from bamtk.segmentation import build_vocab


def time_call(fn, iters):
    fn()  # warm up (JIT compilation, cache effects)
    start = time.perf_counter()
    for _ in range(iters):
        fn()
    return (time.perf_counter() - start) / iters


def bench_kernel(name, make_call, iters):
    results = {}
    for backend in ("numpy", "numba"):
        with kernels.use_backend(backend):
            results[backend] = time_call(make_call(), iters)
    speedup = results["numpy"] / results["numba"]
    print(
        f"  {name:<16} numpy {results['numpy'] * 1e6:9.1f} us   "
        f"numba {results['numba'] * 1e6:9.1f} us   speedup {speedup:5.2f}x"
    )


def micro_benchmarks(iters):
    rng = np.random.default_rng(0)
    attn = rng.normal(size=(4096, 64)).astype(np.float32)
    probs = kernels.softmax(attn)
    dy = rng.normal(size=attn.shape).astype(np.float32)

    states = rng.normal(size=(2048, 256)).astype(np.float32)
    gamma = rng.normal(size=256).astype(np.float32)
    beta = rng.normal(size=256).astype(np.float32)
    _, mean, invstd = kernels.layernorm_fwd(states, gamma, beta, 1e-6)
    dstates = rng.normal(size=states.shape).astype(np.float32)

    param = rng.normal(size=(1024, 1024)).astype(np.float32)
    grad = rng.normal(size=param.shape).astype(np.float32)

    print(f"micro kernels ({iters} iterations each):")
    bench_kernel("softmax", lambda: lambda: kernels.softmax(attn), iters)
    bench_kernel(
        "softmax_grad", lambda: lambda: kernels.softmax_grad(probs, dy), iters
    )
    bench_kernel(
        "layernorm_fwd",
        lambda: lambda: kernels.layernorm_fwd(states, gamma, beta, 1e-6),
        iters,
    )
    bench_kernel(
        "layernorm_bwd",
        lambda: lambda: kernels.layernorm_bwd(states, gamma, mean, invstd, dstates),
        iters,
    )

    def make_adam():
        # fresh state per backend so both take identical steps
        state = {
            "param": param.copy(),
            "m": np.zeros_like(param),
            "v": np.zeros_like(param),
            "t": 0,
        }

        def step():
            state["t"] += 1
            kernels.adam_step(
                state["param"], grad, state["m"], state["v"],
                1e-3, 0.9, 0.999, 1e-8, state["t"],
            )

        return step

    bench_kernel("adam_step", make_adam, iters)


def training_benchmark():
    tokens = ["ba", "da", "ka", "ma", "na", "sa", "ta", "wa"]
    rng = np.random.default_rng(7)
    pairs = []
    for _ in range(64):
        length = int(rng.integers(4, 9))
        sentence = [tokens[i] for i in rng.integers(0, len(tokens), size=length)]
        pairs.append((sentence, list(sentence)))
    vocab = build_vocab([src for src, _ in pairs])
    dev = [(src, " ".join(tgt)) for src, tgt in pairs[:8]]
    config = TrainingConfig(
        enc_layers=2,
        dec_layers=2,
        attn_heads=4,
        hidden_size=64,
        emb_size=64,
        ff_size=128,
        dropout=0.1,
        label_smoothing=0.1,
        epochs=3,
        batch_tokens=256,
        beam_width=1,
        seed=7,
    )
    print("end-to-end training (2+2 layers, dim 64, 64 pairs, 3 epochs):")
    for backend in ("numpy", "numba"):
        with kernels.use_backend(backend):
            train(config, pairs, dev, vocab, vocab, epochs=1)  # warm up
            start = time.perf_counter()
            checkpoint = train(config, pairs, dev, vocab, vocab)
            elapsed = time.perf_counter() - start
        per_epoch = elapsed / config.epochs
        print(
            f"  {backend:<6} {elapsed:6.2f} s total   {per_epoch:5.2f} s/epoch   "
            f"dev BLEU {checkpoint.best_dev_bleu:.2f}"
        )


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--iters", type=int, default=200, help="iterations per micro kernel"
    )
    parser.add_argument(
        "--skip-train", action="store_true", help="skip the end-to-end training run"
    )
    args = parser.parse_args(argv)

    try:
        kernels.set_backend("numba")
    except RuntimeError as exc:
        parser.exit(1, f"numba backend unavailable, nothing to compare: {exc}\n")
    print(f"default backend on this host: {kernels.set_backend(None)}")

    micro_benchmarks(args.iters)
    if not args.skip_train:
        training_benchmark()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
