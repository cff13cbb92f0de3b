"""Training loop: token-bucketed batches, Adam, per-epoch dev BLEU.

Batches are deterministic: sentences sort by (target length, source
length, index) and pack greedily up to the target-token budget; only the
batch order is reshuffled each epoch with the run seed. Dropout draws
come from a per-(epoch, batch) generator, so a rerun with the same seed
reproduces every update bit for bit on one platform. The checkpoint keeps
the parameters and optimizer moments of the best dev-BLEU epoch.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .. import kernels, metrics
from ..segmentation import BOS_ID, EOS_ID, PAD_ID, Vocabulary
from .config import TrainingConfig
from .decode import translate_corpus
from .model import Transformer, label_smoothed_loss

TokenPair = tuple[Sequence[str], Sequence[str]]


@dataclass
class Checkpoint:
    params: dict[str, np.ndarray]
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int
    epoch: int
    best_epoch: int
    config: TrainingConfig
    history: list[dict] = field(default_factory=list)
    src_itos: tuple[str, ...] = ()
    tgt_itos: tuple[str, ...] = ()

    @property
    def best_dev_bleu(self) -> float:
        if not self.history:
            return 0.0
        return max(h["dev_bleu"] for h in self.history)

    def save(self, path: str | Path) -> None:
        arrays: dict[str, np.ndarray] = {}
        for name, value in self.params.items():
            arrays[f"p/{name}"] = value
        for name, value in self.m.items():
            arrays[f"m/{name}"] = value
        for name, value in self.v.items():
            arrays[f"v/{name}"] = value
        meta = {
            "step": self.step,
            "epoch": self.epoch,
            "best_epoch": self.best_epoch,
            "config": self.config.to_dict(),
            "config_hash": self.config.config_hash(),
            "history": self.history,
            "src_itos": list(self.src_itos),
            "tgt_itos": list(self.tgt_itos),
        }
        arrays["meta"] = np.array(json.dumps(meta))
        np.savez(path, **arrays)

    @classmethod
    def load(cls, path: str | Path) -> "Checkpoint":
        data = np.load(path, allow_pickle=False)
        meta = json.loads(str(data["meta"][()]))
        params: dict[str, np.ndarray] = {}
        m: dict[str, np.ndarray] = {}
        v: dict[str, np.ndarray] = {}
        for key in data.files:
            if key.startswith("p/"):
                params[key[2:]] = data[key]
            elif key.startswith("m/"):
                m[key[2:]] = data[key]
            elif key.startswith("v/"):
                v[key[2:]] = data[key]
        config = TrainingConfig(**meta["config"])
        if config.share_src_tgt_embedding:
            params["src_emb"] = params["tgt_emb"]
        return cls(
            params=params,
            m=m,
            v=v,
            step=meta["step"],
            epoch=meta["epoch"],
            best_epoch=meta["best_epoch"],
            config=config,
            history=meta["history"],
            src_itos=tuple(meta["src_itos"]),
            tgt_itos=tuple(meta["tgt_itos"]),
        )


def numericalize(
    pairs: Sequence[TokenPair], src_vocab: Vocabulary, tgt_vocab: Vocabulary
) -> list[tuple[list[int], list[int]]]:
    """(source ids with EOS, core target ids). BOS/EOS wrap at batch time."""
    return [
        (src_vocab.encode(src, add_eos=True), tgt_vocab.encode(tgt))
        for src, tgt in pairs
    ]


def make_batches(
    encoded: Sequence[tuple[list[int], list[int]]], batch_tokens: int
) -> list[list[int]]:
    """Deterministic length-bucketed packing by target-token budget."""
    order = sorted(
        range(len(encoded)),
        key=lambda i: (len(encoded[i][1]) + 1, len(encoded[i][0]), i),
    )
    batches: list[list[int]] = []
    current: list[int] = []
    used = 0
    for i in order:
        cost = len(encoded[i][1]) + 1
        if current and used + cost > batch_tokens:
            batches.append(current)
            current = []
            used = 0
        current.append(i)
        used += cost
    if current:
        batches.append(current)
    return batches


def pad_batch(
    encoded: Sequence[tuple[list[int], list[int]]], indices: Sequence[int]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(src, tgt_in, tgt_out) int64 arrays, right-padded."""
    src_len = max(len(encoded[i][0]) for i in indices)
    tgt_len = max(len(encoded[i][1]) for i in indices) + 1
    src = np.full((len(indices), src_len), PAD_ID, dtype=np.int64)
    tgt_in = np.full((len(indices), tgt_len), PAD_ID, dtype=np.int64)
    tgt_out = np.full((len(indices), tgt_len), PAD_ID, dtype=np.int64)
    for row, i in enumerate(indices):
        s, c = encoded[i]
        src[row, : len(s)] = s
        tgt_in[row, 0] = BOS_ID
        tgt_in[row, 1 : len(c) + 1] = c
        tgt_out[row, : len(c)] = c
        tgt_out[row, len(c)] = EOS_ID
    return src, tgt_in, tgt_out


def _param_norms(params: dict[str, np.ndarray], top: int = 5) -> str:
    norms = sorted(
        ((float(np.linalg.norm(value)), name) for name, value in params.items()),
        reverse=True,
    )
    return ", ".join(f"{name}={norm:.3g}" for norm, name in norms[:top])


def _clip_grads(grads: dict[str, np.ndarray], limit: float) -> None:
    total = np.sqrt(sum(float((g**2).sum()) for g in grads.values()))
    if total > limit:
        scale = limit / total
        for g in grads.values():
            g *= scale


def evaluate_bleu(
    model: Transformer,
    params: dict,
    dev_pairs: Sequence[tuple[Sequence[str], str]],
    src_vocab: Vocabulary,
    tgt_vocab: Vocabulary,
    detokenize: Callable[[list[str]], str],
    beam_width: int,
) -> float:
    src_ids = [src_vocab.encode(src, add_eos=True) for src, _ in dev_pairs]
    outputs = translate_corpus(model, params, src_ids, beam_width=beam_width)
    hypotheses = [detokenize(tgt_vocab.decode(ids)) for ids in outputs]
    references = [ref for _, ref in dev_pairs]
    return metrics.bleu(hypotheses, references).score


def train(
    config: TrainingConfig,
    train_pairs: Sequence[TokenPair],
    dev_pairs: Sequence[tuple[Sequence[str], str]],
    src_vocab: Vocabulary,
    tgt_vocab: Vocabulary,
    detokenize: Callable[[list[str]], str] = lambda toks: " ".join(toks),
    train_provider: Callable[[int], Sequence[TokenPair]] | None = None,
    init: Checkpoint | None = None,
    epochs: int | None = None,
    eval_beam: int | None = None,
    stop_bleu: float | None = None,
    log: Callable[[str], None] | None = None,
) -> Checkpoint:
    """Train a transformer; return the best-dev-BLEU checkpoint.

    train_provider(epoch) supplies per-epoch token pairs (subword-dropout
    resegmentation); when absent, train_pairs is reused. init continues
    from an existing checkpoint, reusing its optimizer moments. eval_beam
    overrides config.beam_width for dev decoding; stop_bleu ends training
    once dev BLEU reaches the threshold.
    """
    model = Transformer(config, len(src_vocab), len(tgt_vocab))
    if init is not None:
        params = {k: v.copy() for k, v in init.params.items()}
        m = {k: v.copy() for k, v in init.m.items()}
        v_ = {k: v.copy() for k, v in init.v.items()}
        step = init.step
        if config.share_src_tgt_embedding:
            params["src_emb"] = params["tgt_emb"]
    else:
        params = model.init_params(config.seed)
        m = model.zero_grads(params)
        v_ = model.zero_grads(params)
        step = 0
    if config.share_src_tgt_embedding:
        m["src_emb"] = m["tgt_emb"]
        v_["src_emb"] = v_["tgt_emb"]

    update_names = sorted(params)
    if config.share_src_tgt_embedding and "src_emb" in update_names:
        update_names.remove("src_emb")

    n_epochs = config.epochs if epochs is None else epochs
    history: list[dict] = []
    best_bleu = -1.0
    best_epoch = 0
    best_state: tuple[dict, dict, dict, int] | None = None

    for epoch in range(1, n_epochs + 1):
        pairs = train_provider(epoch) if train_provider is not None else train_pairs
        encoded = numericalize(pairs, src_vocab, tgt_vocab)
        batches = make_batches(encoded, config.batch_tokens)
        order = np.random.default_rng((config.seed, 7919, epoch)).permutation(len(batches))

        epoch_loss = 0.0
        token_count = 0
        for position, batch_index in enumerate(order):
            indices = batches[batch_index]
            src, tgt_in, tgt_out = pad_batch(encoded, indices)
            rng = np.random.default_rng((config.seed, epoch, position))
            logits, cache = model.forward(params, src, tgt_in, train=True, rng=rng)
            loss, dlogits = label_smoothed_loss(logits, tgt_out, config.label_smoothing)
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"non-finite loss at epoch {epoch} batch {position}: "
                    f"loss={loss}; largest parameter norms: {_param_norms(params)}"
                )
            n_tok = int((tgt_out != PAD_ID).sum())
            epoch_loss += loss * n_tok
            token_count += n_tok
            grads = model.backward(params, cache, dlogits)
            if config.grad_clip is not None:
                _clip_grads(grads, config.grad_clip)
            step += 1
            for name in update_names:
                kernels.adam_step(
                    params[name],
                    grads[name],
                    m[name],
                    v_[name],
                    config.learning_rate,
                    config.adam_beta1,
                    config.adam_beta2,
                    config.adam_eps,
                    step,
                )

        for value in params.values():
            if not np.isfinite(value).all():
                raise RuntimeError(f"non-finite parameter after epoch {epoch}")

        dev_bleu = evaluate_bleu(
            model,
            params,
            dev_pairs,
            src_vocab,
            tgt_vocab,
            detokenize,
            config.beam_width if eval_beam is None else eval_beam,
        )
        mean_loss = epoch_loss / max(token_count, 1)
        history.append({"epoch": epoch, "loss": mean_loss, "dev_bleu": dev_bleu})
        if log is not None:
            log(f"epoch {epoch}: loss {mean_loss:.4f}, dev BLEU {dev_bleu:.2f}")
        if dev_bleu > best_bleu:
            best_bleu = dev_bleu
            best_epoch = epoch
            best_state = (
                {k: v.copy() for k, v in params.items()},
                {k: v.copy() for k, v in m.items()},
                {k: v.copy() for k, v in v_.items()},
                step,
            )
        if stop_bleu is not None and dev_bleu >= stop_bleu:
            break

    if best_state is None:
        best_state = (params, m, v_, step)
    best_params, best_m, best_v, best_step = best_state
    if config.share_src_tgt_embedding:
        best_params["src_emb"] = best_params["tgt_emb"]
    return Checkpoint(
        params=best_params,
        m=best_m,
        v=best_v,
        step=best_step,
        epoch=len(history),
        best_epoch=best_epoch,
        config=config,
        history=history,
        src_itos=tuple(src_vocab.itos),
        tgt_itos=tuple(tgt_vocab.itos),
    )
