"""Pre-norm transformer encoder-decoder with manual backprop.

Forward passes cache every intermediate needed by the matching backward
pass, so gradients are analytic (no autodiff) and can be validated against
finite differences. Parameters live in a flat name->array dict; the
softmax projection is the target embedding transposed (weight tying) by
default. Hot inner kernels (softmax, layer norm, optimizer step) come
from the kernels package.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .. import kernels
from ..segmentation import PAD_ID
from .config import TrainingConfig

NEG_INF = -1e9
LN_EPS = 1e-6


def sinusoidal_encoding(max_len: int, dim: int) -> np.ndarray:
    position = np.arange(max_len, dtype=np.float64)[:, None]
    div = np.exp(np.arange(0, dim, 2, dtype=np.float64) * (-math.log(10000.0) / dim))
    pe = np.zeros((max_len, dim), dtype=np.float64)
    pe[:, 0::2] = np.sin(position * div)
    pe[:, 1::2] = np.cos(position * div)
    return pe


def _xavier(rng: np.random.Generator, fan_in: int, fan_out: int, dtype) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out)).astype(dtype)


class Transformer:
    def __init__(
        self,
        config: TrainingConfig,
        src_vocab_size: int,
        tgt_vocab_size: int,
        dtype=np.float32,
        max_positions: int = 1024,
    ):
        self.config = config
        self.src_vocab_size = src_vocab_size
        self.tgt_vocab_size = tgt_vocab_size
        self.dtype = np.dtype(dtype)
        self.dim = config.hidden_size
        self.heads = config.attn_heads
        self.head_dim = self.dim // self.heads
        self.ff = config.ff_size
        self.pe = sinusoidal_encoding(max_positions, self.dim).astype(self.dtype)

    # ------------------------------------------------------------------
    # parameters

    def _layer_names(self) -> list[tuple[str, tuple[int, ...]]]:
        names: list[tuple[str, tuple[int, ...]]] = []
        d, f = self.dim, self.ff

        def attn(prefix: str):
            for w in ("wq", "wk", "wv", "wo"):
                names.append((f"{prefix}.{w}", (d, d)))
            for b in ("bq", "bk", "bv", "bo"):
                names.append((f"{prefix}.{b}", (d,)))

        def ln(prefix: str):
            names.append((f"{prefix}.g", (d,)))
            names.append((f"{prefix}.b", (d,)))

        def ffn(prefix: str):
            names.append((f"{prefix}.w1", (d, f)))
            names.append((f"{prefix}.b1", (f,)))
            names.append((f"{prefix}.w2", (f, d)))
            names.append((f"{prefix}.b2", (d,)))

        for i in range(self.config.enc_layers):
            ln(f"enc{i}.ln1")
            attn(f"enc{i}.attn")
            ln(f"enc{i}.ln2")
            ffn(f"enc{i}.ffn")
        ln("enc_ln")
        for i in range(self.config.dec_layers):
            ln(f"dec{i}.ln1")
            attn(f"dec{i}.sattn")
            ln(f"dec{i}.ln2")
            attn(f"dec{i}.xattn")
            ln(f"dec{i}.ln3")
            ffn(f"dec{i}.ffn")
        ln("dec_ln")
        return names

    def init_params(self, seed: int) -> dict[str, np.ndarray]:
        rng = np.random.default_rng(seed)
        params: dict[str, np.ndarray] = {}
        scale = self.dim**-0.5
        params["src_emb"] = rng.normal(0.0, scale, (self.src_vocab_size, self.dim)).astype(self.dtype)
        params["tgt_emb"] = rng.normal(0.0, scale, (self.tgt_vocab_size, self.dim)).astype(self.dtype)
        if self.config.share_src_tgt_embedding:
            params["src_emb"] = params["tgt_emb"]
        if not self.config.tie_softmax_to_output_embedding:
            params["out_proj"] = rng.normal(0.0, scale, (self.tgt_vocab_size, self.dim)).astype(self.dtype)
        for name, shape in self._layer_names():
            leaf = name.rsplit(".", 1)[1]
            if leaf.startswith("w"):
                params[name] = _xavier(rng, shape[0], shape[1], self.dtype)
            elif leaf == "g":
                params[name] = np.ones(shape, dtype=self.dtype)
            else:
                params[name] = np.zeros(shape, dtype=self.dtype)
        return params

    def zero_grads(self, params: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        return {name: np.zeros_like(value) for name, value in params.items()}

    # ------------------------------------------------------------------
    # building blocks

    def _dropout(self, x, train: bool, rng):
        p = self.config.dropout
        if not train or p == 0.0:
            return x, None
        mask = (rng.random(x.shape) >= p).astype(x.dtype) / (1.0 - p)
        return x * mask, mask

    def _embed_fwd(self, emb, ids, train, rng):
        if ids.shape[1] > self.pe.shape[0]:
            raise ValueError(f"sequence length {ids.shape[1]} exceeds positional table")
        scale = math.sqrt(self.dim)
        e = emb[ids] * scale + self.pe[: ids.shape[1]]
        out, mask = self._dropout(e, train, rng)
        return out, {"ids": ids, "mask": mask, "scale": scale}

    def _embed_bwd(self, cache, dout, demb):
        if cache["mask"] is not None:
            dout = dout * cache["mask"]
        np.add.at(demb, cache["ids"], dout * cache["scale"])

    def _ln_fwd(self, params, prefix, x):
        shape = x.shape
        x2 = x.reshape(-1, shape[-1])
        y2, mean, invstd = kernels.layernorm_fwd(
            x2, params[f"{prefix}.g"], params[f"{prefix}.b"], LN_EPS
        )
        return y2.reshape(shape), {"x2": x2, "mean": mean, "invstd": invstd, "prefix": prefix}

    def _ln_bwd(self, params, cache, dy, grads):
        prefix = cache["prefix"]
        dy2 = dy.reshape(cache["x2"].shape)
        dx2, dg, db = kernels.layernorm_bwd(
            cache["x2"], params[f"{prefix}.g"], cache["mean"], cache["invstd"], dy2
        )
        grads[f"{prefix}.g"] += dg
        grads[f"{prefix}.b"] += db
        return dx2.reshape(dy.shape)

    def _split_heads(self, x):
        b, t, _ = x.shape
        return x.reshape(b, t, self.heads, self.head_dim).transpose(0, 2, 1, 3)

    def _merge_heads(self, x):
        b, h, t, k = x.shape
        return x.transpose(0, 2, 1, 3).reshape(b, t, h * k)

    def _mha_fwd(self, params, prefix, q_in, kv_in, mask, train, rng):
        b, tq, d = q_in.shape
        tk = kv_in.shape[1]
        q2, kv2 = q_in.reshape(-1, d), kv_in.reshape(-1, d)
        q = self._split_heads((q2 @ params[f"{prefix}.wq"] + params[f"{prefix}.bq"]).reshape(b, tq, d))
        k = self._split_heads((kv2 @ params[f"{prefix}.wk"] + params[f"{prefix}.bk"]).reshape(b, tk, d))
        v = self._split_heads((kv2 @ params[f"{prefix}.wv"] + params[f"{prefix}.bv"]).reshape(b, tk, d))
        scale = 1.0 / math.sqrt(self.head_dim)
        scores = q @ k.transpose(0, 1, 3, 2) * scale
        if mask is not None:
            scores = scores + mask
        p = kernels.softmax(scores.reshape(-1, tk)).reshape(scores.shape)
        pd, pmask = self._dropout(p, train, rng)
        ctx = self._merge_heads(pd @ v)
        out = (ctx.reshape(-1, d) @ params[f"{prefix}.wo"] + params[f"{prefix}.bo"]).reshape(b, tq, d)
        cache = {
            "prefix": prefix,
            "q_in2": q2,
            "kv_in2": kv2,
            "q": q,
            "k": k,
            "v": v,
            "p": p,
            "pmask": pmask,
            "pd": pd,
            "ctx2": ctx.reshape(-1, d),
            "scale": scale,
            "shape_q": (b, tq, d),
            "shape_kv": (b, tk, d),
        }
        return out, cache

    def _mha_bwd(self, params, cache, dout, grads):
        prefix = cache["prefix"]
        b, tq, d = cache["shape_q"]
        _, tk, _ = cache["shape_kv"]
        dout2 = dout.reshape(-1, d)
        grads[f"{prefix}.wo"] += cache["ctx2"].T @ dout2
        grads[f"{prefix}.bo"] += dout2.sum(axis=0)
        dctx = self._split_heads((dout2 @ params[f"{prefix}.wo"].T).reshape(b, tq, d))
        dpd = dctx @ cache["v"].transpose(0, 1, 3, 2)
        dv = cache["pd"].transpose(0, 1, 3, 2) @ dctx
        dp = dpd if cache["pmask"] is None else dpd * cache["pmask"]
        dscores = kernels.softmax_grad(
            cache["p"].reshape(-1, tk), dp.reshape(-1, tk)
        ).reshape(b, self.heads, tq, tk)
        dscores = dscores * cache["scale"]
        dq = dscores @ cache["k"]
        dk = dscores.transpose(0, 1, 3, 2) @ cache["q"]

        dq2 = self._merge_heads(dq).reshape(-1, d)
        dk2 = self._merge_heads(dk).reshape(-1, d)
        dv2 = self._merge_heads(dv).reshape(-1, d)
        grads[f"{prefix}.wq"] += cache["q_in2"].T @ dq2
        grads[f"{prefix}.bq"] += dq2.sum(axis=0)
        grads[f"{prefix}.wk"] += cache["kv_in2"].T @ dk2
        grads[f"{prefix}.bk"] += dk2.sum(axis=0)
        grads[f"{prefix}.wv"] += cache["kv_in2"].T @ dv2
        grads[f"{prefix}.bv"] += dv2.sum(axis=0)
        dq_in = (dq2 @ params[f"{prefix}.wq"].T).reshape(b, tq, d)
        dkv_in = (
            dk2 @ params[f"{prefix}.wk"].T + dv2 @ params[f"{prefix}.wv"].T
        ).reshape(b, tk, d)
        return dq_in, dkv_in

    def _ffn_fwd(self, params, prefix, x, train, rng):
        b, t, d = x.shape
        x2 = x.reshape(-1, d)
        z1 = x2 @ params[f"{prefix}.w1"] + params[f"{prefix}.b1"]
        r = np.maximum(z1, 0.0)
        rd, rmask = self._dropout(r, train, rng)
        out = (rd @ params[f"{prefix}.w2"] + params[f"{prefix}.b2"]).reshape(b, t, d)
        return out, {"prefix": prefix, "x2": x2, "z1": z1, "rd": rd, "rmask": rmask, "shape": (b, t, d)}

    def _ffn_bwd(self, params, cache, dout, grads):
        prefix = cache["prefix"]
        b, t, d = cache["shape"]
        dout2 = dout.reshape(-1, d)
        grads[f"{prefix}.w2"] += cache["rd"].T @ dout2
        grads[f"{prefix}.b2"] += dout2.sum(axis=0)
        drd = dout2 @ params[f"{prefix}.w2"].T
        dr = drd if cache["rmask"] is None else drd * cache["rmask"]
        dz1 = dr * (cache["z1"] > 0)
        grads[f"{prefix}.w1"] += cache["x2"].T @ dz1
        grads[f"{prefix}.b1"] += dz1.sum(axis=0)
        return (dz1 @ params[f"{prefix}.w1"].T).reshape(b, t, d)

    # ------------------------------------------------------------------
    # masks

    def src_mask(self, src: np.ndarray) -> np.ndarray:
        """(B, 1, 1, Ts) additive mask hiding padding keys."""
        return np.where(src[:, None, None, :] == PAD_ID, NEG_INF, 0.0).astype(self.dtype)

    def tgt_mask(self, tgt_in: np.ndarray) -> np.ndarray:
        """(B, 1, Tt, Tt) additive causal+padding mask."""
        t = tgt_in.shape[1]
        causal = np.triu(np.full((t, t), NEG_INF, dtype=self.dtype), k=1)
        pad = np.where(tgt_in[:, None, None, :] == PAD_ID, NEG_INF, 0.0).astype(self.dtype)
        return causal[None, None] + pad

    # ------------------------------------------------------------------
    # full passes

    def _check_ids(self, ids: np.ndarray, limit: int, what: str) -> None:
        if ids.size and (ids.min() < 0 or ids.max() >= limit):
            raise ValueError(f"{what} token id out of range [0, {limit})")

    def encode(self, params, src, train=False, rng=None):
        self._check_ids(src, self.src_vocab_size, "source")
        mask = self.src_mask(src)
        x, emb_cache = self._embed_fwd(params["src_emb"], src, train, rng)
        layer_caches = []
        for i in range(self.config.enc_layers):
            n1, ln1 = self._ln_fwd(params, f"enc{i}.ln1", x)
            h, attn = self._mha_fwd(params, f"enc{i}.attn", n1, n1, mask, train, rng)
            hd, hmask = self._dropout(h, train, rng)
            x = x + hd
            n2, ln2 = self._ln_fwd(params, f"enc{i}.ln2", x)
            f, ffn = self._ffn_fwd(params, f"enc{i}.ffn", n2, train, rng)
            fd, fmask = self._dropout(f, train, rng)
            x = x + fd
            layer_caches.append(
                {"ln1": ln1, "attn": attn, "hmask": hmask, "ln2": ln2, "ffn": ffn, "fmask": fmask}
            )
        memory, final_ln = self._ln_fwd(params, "enc_ln", x)
        cache = {"emb": emb_cache, "layers": layer_caches, "final_ln": final_ln, "mask": mask}
        return memory, cache

    def decode(self, params, memory, src_mask, tgt_in, train=False, rng=None):
        self._check_ids(tgt_in, self.tgt_vocab_size, "target")
        mask = self.tgt_mask(tgt_in)
        y, emb_cache = self._embed_fwd(params["tgt_emb"], tgt_in, train, rng)
        layer_caches = []
        for i in range(self.config.dec_layers):
            n1, ln1 = self._ln_fwd(params, f"dec{i}.ln1", y)
            h, sattn = self._mha_fwd(params, f"dec{i}.sattn", n1, n1, mask, train, rng)
            hd, hmask = self._dropout(h, train, rng)
            y = y + hd
            n2, ln2 = self._ln_fwd(params, f"dec{i}.ln2", y)
            c, xattn = self._mha_fwd(params, f"dec{i}.xattn", n2, memory, src_mask, train, rng)
            cd, cmask = self._dropout(c, train, rng)
            y = y + cd
            n3, ln3 = self._ln_fwd(params, f"dec{i}.ln3", y)
            f, ffn = self._ffn_fwd(params, f"dec{i}.ffn", n3, train, rng)
            fd, fmask = self._dropout(f, train, rng)
            y = y + fd
            layer_caches.append(
                {
                    "ln1": ln1,
                    "sattn": sattn,
                    "hmask": hmask,
                    "ln2": ln2,
                    "xattn": xattn,
                    "cmask": cmask,
                    "ln3": ln3,
                    "ffn": ffn,
                    "fmask": fmask,
                }
            )
        h, final_ln = self._ln_fwd(params, "dec_ln", y)
        b, t, d = h.shape
        proj = params["tgt_emb"] if self.config.tie_softmax_to_output_embedding else params["out_proj"]
        logits = (h.reshape(-1, d) @ proj.T).reshape(b, t, self.tgt_vocab_size)
        cache = {
            "emb": emb_cache,
            "layers": layer_caches,
            "final_ln": final_ln,
            "h2": h.reshape(-1, d),
        }
        return logits, cache

    def forward(self, params, src, tgt_in, train=False, rng=None):
        """Logits over the target vocabulary for every prefix position."""
        memory, enc_cache = self.encode(params, src, train, rng)
        logits, dec_cache = self.decode(
            params, memory, enc_cache["mask"], tgt_in, train, rng
        )
        return logits, {"enc": enc_cache, "dec": dec_cache, "memory": memory}

    def backward(self, params, cache, dlogits):
        """Gradients of a scalar loss given d(loss)/d(logits)."""
        grads = self.zero_grads(params)
        dec = cache["dec"]
        b, t, _ = dlogits.shape
        d = self.dim
        dl2 = dlogits.reshape(-1, self.tgt_vocab_size)
        proj_name = "tgt_emb" if self.config.tie_softmax_to_output_embedding else "out_proj"
        grads[proj_name] += dl2.T @ dec["h2"]
        dh = (dl2 @ params[proj_name]).reshape(b, t, d)

        dy = self._ln_bwd(params, dec["final_ln"], dh, grads)
        dmemory = np.zeros_like(cache["memory"])
        for i in reversed(range(self.config.dec_layers)):
            lc = dec["layers"][i]
            dfd = dy if lc["fmask"] is None else dy * lc["fmask"]
            dn3 = self._ffn_bwd(params, lc["ffn"], dfd, grads)
            dy = dy + self._ln_bwd(params, lc["ln3"], dn3, grads)
            dcd = dy if lc["cmask"] is None else dy * lc["cmask"]
            dn2, dmem = self._mha_bwd(params, lc["xattn"], dcd, grads)
            dmemory += dmem
            dy = dy + self._ln_bwd(params, lc["ln2"], dn2, grads)
            dhd = dy if lc["hmask"] is None else dy * lc["hmask"]
            dn1, dn1_kv = self._mha_bwd(params, lc["sattn"], dhd, grads)
            dy = dy + self._ln_bwd(params, lc["ln1"], dn1 + dn1_kv, grads)
        self._embed_bwd(dec["emb"], dy, grads["tgt_emb"])

        enc = cache["enc"]
        dx = self._ln_bwd(params, enc["final_ln"], dmemory, grads)
        for i in reversed(range(self.config.enc_layers)):
            lc = enc["layers"][i]
            dfd = dx if lc["fmask"] is None else dx * lc["fmask"]
            dn2 = self._ffn_bwd(params, lc["ffn"], dfd, grads)
            dx = dx + self._ln_bwd(params, lc["ln2"], dn2, grads)
            dhd = dx if lc["hmask"] is None else dx * lc["hmask"]
            dn1, dn1_kv = self._mha_bwd(params, lc["attn"], dhd, grads)
            dx = dx + self._ln_bwd(params, lc["ln1"], dn1 + dn1_kv, grads)
        self._embed_bwd(enc["emb"], dx, grads["src_emb"])
        if self.config.share_src_tgt_embedding:
            total = grads["src_emb"] + grads["tgt_emb"]
            grads["src_emb"] = total
            grads["tgt_emb"] = total
        return grads

    def log_probs(self, params, src, tgt_in):
        """Normalized next-token log-probabilities (evaluation mode)."""
        logits, _ = self.forward(params, src, tgt_in, train=False)
        return log_softmax(logits)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def label_smoothed_loss(
    logits: np.ndarray,
    targets: np.ndarray,
    smoothing: float,
    pad_id: int = PAD_ID,
) -> tuple[float, np.ndarray]:
    """Label-smoothed cross entropy, averaged over non-pad positions.

    Gold probability mass is 1-smoothing; the rest spreads uniformly over
    the vocabulary minus the pad and gold entries. Returns the scalar loss
    and d(loss)/d(logits).
    """
    if not 0.0 <= smoothing < 1.0:
        raise ValueError("smoothing must be in [0, 1)")
    b, t, vocab = logits.shape
    logp = log_softmax(logits)
    nonpad = targets != pad_id
    n_tokens = int(nonpad.sum())
    if n_tokens == 0:
        return 0.0, np.zeros_like(logits)

    rows = logp.reshape(-1, vocab)
    gold = targets.reshape(-1)
    keep = nonpad.reshape(-1)
    idx = np.arange(rows.shape[0])
    gold_logp = rows[idx, gold]
    if smoothing > 0.0:
        uniform = smoothing / (vocab - 2)
        other_sum = rows.sum(axis=-1) - gold_logp - rows[:, pad_id]
        per_pos = -((1.0 - smoothing) * gold_logp + uniform * other_sum)
    else:
        per_pos = -gold_logp
    loss = float(per_pos[keep].sum() / n_tokens)

    target_dist = np.zeros_like(rows)
    if smoothing > 0.0:
        target_dist += smoothing / (vocab - 2)
        target_dist[:, pad_id] = 0.0
    target_dist[idx, gold] = 1.0 - smoothing
    dlogits = (np.exp(rows) - target_dist) / n_tokens
    dlogits[~keep] = 0.0
    return loss, dlogits.reshape(b, t, vocab).astype(logits.dtype)
