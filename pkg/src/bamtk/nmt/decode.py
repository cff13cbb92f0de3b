"""Beam search with length normalization.

Hypotheses are ranked by cumulative log-probability while alive; a
hypothesis retires to the finished set when it generates EOS (or when it
reaches the length bound without one). Final selection is by normalized
score, log-probability divided by generated length, with exact ties
going to the lexicographically smaller token sequence. The decoder never
emits PAD, BOS, or UNK.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..segmentation import BOS_ID, EOS_ID, PAD_ID, UNK_ID
from .model import Transformer, log_softmax

_BANNED = (PAD_ID, BOS_ID, UNK_ID)
_VERY_NEG = -1e18


def _final_score(seq_logprob: float, generated_len: int) -> float:
    return seq_logprob / max(generated_len, 1)


def beam_decode(
    model: Transformer,
    params: dict,
    src: Sequence[int],
    beam_width: int | None = None,
    max_len: int | None = None,
    return_score: bool = False,
):
    """Best token ids for one source sentence (EOS stripped)."""
    if beam_width is None:
        beam_width = model.config.beam_width
    if beam_width < 1:
        raise ValueError("beam_width must be >= 1")
    if len(src) == 0:
        raise ValueError("cannot decode an empty source")
    if max_len is None:
        max_len = model.config.max_decode_len(len(src))

    src_arr = np.asarray([src], dtype=np.int64)
    memory, enc_cache = model.encode(params, src_arr)
    src_mask = enc_cache["mask"]

    live: list[tuple[tuple[int, ...], float]] = [((BOS_ID,), 0.0)]
    finished: list[tuple[tuple[int, ...], float]] = []

    for step in range(max_len):
        tgt = np.asarray([seq for seq, _ in live], dtype=np.int64)
        mem = np.repeat(memory, len(live), axis=0)
        mask = np.repeat(src_mask, len(live), axis=0)
        logits, _ = model.decode(params, mem, mask, tgt)
        logp = log_softmax(logits[:, -1].astype(np.float64))
        logp[:, list(_BANNED)] = _VERY_NEG

        # per-row preselection by (score desc, token asc) cannot drop a
        # global top-k candidate: same-row rivals dominate in that order
        vocab = logp.shape[1]
        row_order_tokens = np.arange(vocab)
        candidates: list[tuple[tuple[int, ...], float]] = []
        for (seq, score), row in zip(live, logp):
            order = np.lexsort((row_order_tokens, -row))[:beam_width]
            for tok in order:
                if row[tok] <= _VERY_NEG:
                    continue
                candidates.append((seq + (int(tok),), score + float(row[tok])))
        candidates.sort(key=lambda c: (-c[1], c[0]))
        selected = candidates[:beam_width]

        live = []
        for seq, score in selected:
            generated = len(seq) - 1
            if seq[-1] == EOS_ID:
                finished.append((seq, _final_score(score, generated)))
            elif generated >= max_len:
                finished.append((seq, _final_score(score, generated)))
            else:
                live.append((seq, score))
        if not live:
            break

    for seq, score in live:
        finished.append((seq, _final_score(score, len(seq) - 1)))

    finished.sort(key=lambda c: (-c[1], c[0]))
    best_seq, best_score = finished[0]
    tokens = [t for t in best_seq[1:] if t != EOS_ID]
    return (tokens, best_score) if return_score else tokens


def translate_corpus(
    model: Transformer,
    params: dict,
    src_ids_list: Sequence[Sequence[int]],
    beam_width: int | None = None,
    max_len: int | None = None,
    batch_size: int = 64,
) -> list[list[int]]:
    """Decode a whole corpus; greedy runs batched, wider beams per sentence."""
    if beam_width is None:
        beam_width = model.config.beam_width
    if beam_width == 1:
        outputs: list[list[int]] = []
        for start in range(0, len(src_ids_list), batch_size):
            outputs.extend(
                _greedy_batch(model, params, src_ids_list[start : start + batch_size], max_len)
            )
        return outputs
    return [
        beam_decode(model, params, src, beam_width=beam_width, max_len=max_len)
        for src in src_ids_list
    ]


def _greedy_batch(
    model: Transformer,
    params: dict,
    srcs: Sequence[Sequence[int]],
    max_len: int | None,
) -> list[list[int]]:
    if any(len(s) == 0 for s in srcs):
        raise ValueError("cannot decode an empty source")
    n = len(srcs)
    if n == 0:
        return []
    caps = [
        max_len if max_len is not None else model.config.max_decode_len(len(s))
        for s in srcs
    ]
    width = max(len(s) for s in srcs)
    src_arr = np.full((n, width), PAD_ID, dtype=np.int64)
    for i, s in enumerate(srcs):
        src_arr[i, : len(s)] = s
    memory, enc_cache = model.encode(params, src_arr)
    src_mask = enc_cache["mask"]

    seqs = np.full((n, 1), BOS_ID, dtype=np.int64)
    ended = np.zeros(n, dtype=bool)
    for step in range(max(caps)):
        logits, _ = model.decode(params, memory, src_mask, seqs)
        rows = log_softmax(logits[:, -1].astype(np.float64))
        rows[:, list(_BANNED)] = _VERY_NEG
        next_tokens = rows.argmax(axis=1)
        seqs = np.concatenate([seqs, next_tokens[:, None]], axis=1)
        ended |= next_tokens == EOS_ID
        ended |= np.array([step + 1 >= cap for cap in caps])
        if ended.all():
            break

    outputs: list[list[int]] = []
    for i in range(n):
        tokens: list[int] = []
        for tok in seqs[i, 1:]:
            if tok == EOS_ID or len(tokens) >= caps[i]:
                break
            tokens.append(int(tok))
        outputs.append(tokens)
    return outputs


def greedy_decode(
    model: Transformer,
    params: dict,
    src: Sequence[int],
    max_len: int | None = None,
) -> list[int]:
    """Argmax decoding; an independent code path from beam_decode."""
    if len(src) == 0:
        raise ValueError("cannot decode an empty source")
    if max_len is None:
        max_len = model.config.max_decode_len(len(src))
    src_arr = np.asarray([src], dtype=np.int64)
    memory, enc_cache = model.encode(params, src_arr)
    src_mask = enc_cache["mask"]
    seq = [BOS_ID]
    for _ in range(max_len):
        tgt = np.asarray([seq], dtype=np.int64)
        logits, _ = model.decode(params, memory, src_mask, tgt)
        row = log_softmax(logits[0, -1].astype(np.float64))
        row[list(_BANNED)] = _VERY_NEG
        tok = int(np.argmax(row))
        seq.append(tok)
        if tok == EOS_ID:
            break
    return [t for t in seq[1:] if t != EOS_ID]
