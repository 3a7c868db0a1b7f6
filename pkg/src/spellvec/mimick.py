"""Character BiLSTM plus MLP mapping a word's spelling to an embedding.

The model is trained at the type level to reproduce the vectors of a
pre-trained table by minimizing squared Euclidean distance, then used to
assign vectors to words the table does not cover. Cosine nearest-neighbor
queries over a table support qualitative inspection of inferred vectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .archive import ArchiveError, load_archive, save_archive
from .embeddings import EmbeddingTable
from .nn import (
    DimensionError,
    LstmCellParams,
    MomentumSgd,
    Tape,
    Tensor,
    embedding_init,
    glorot_uniform,
    lstm_step,
)

UNK_CHAR_INDEX = 0


class CharVocabulary:
    """Dense character -> index mapping with a reserved UNK index at 0."""

    def __init__(self, chars: Iterable[str]):
        self.chars = sorted(set(chars))
        self._index = {c: i + 1 for i, c in enumerate(self.chars)}

    @classmethod
    def from_words(cls, words: Iterable[str]) -> "CharVocabulary":
        return cls(c for w in words for c in w)

    @property
    def size(self) -> int:
        return len(self.chars) + 1

    def encode(self, word: str) -> list[int]:
        return [self._index.get(c, UNK_CHAR_INDEX) for c in word]


@dataclass
class MimickTrainConfig:
    char_dim: int = 20
    hidden: int = 50
    epochs: int = 60
    dev_fraction: float = 0.01
    lr: float = 0.01
    momentum: float = 0.9
    seed: int = 0
    unk_char_rate: float = 0.05

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not 0.0 <= self.dev_fraction < 0.5:
            raise ValueError(f"dev fraction must be in [0, 0.5), got {self.dev_fraction}")


class MimickModel:
    """Forward/backward char LSTMs feeding a two-layer tanh MLP of width
    `hidden`, with output dimension matching the embedding table."""

    def __init__(
        self,
        chars: CharVocabulary,
        dim: int,
        char_dim: int = 20,
        hidden: int = 50,
        rng: np.random.Generator | None = None,
    ):
        self.chars = chars
        self.dim = dim
        self.char_dim = char_dim
        self.hidden = hidden
        if rng is None:
            self.char_emb = Tensor(np.zeros((chars.size, char_dim)))
        else:
            self.char_emb = Tensor(embedding_init(rng, chars.size, char_dim))
        self.fwd = LstmCellParams(char_dim, hidden, rng)
        self.bwd = LstmCellParams(char_dim, hidden, rng)
        if rng is None:
            self.t_h = Tensor(np.zeros((hidden, 2 * hidden)))
            self.o_t = Tensor(np.zeros((dim, hidden)))
        else:
            self.t_h = Tensor(glorot_uniform(rng, hidden, 2 * hidden))
            self.o_t = Tensor(glorot_uniform(rng, dim, hidden))
        self.b_h = Tensor(np.zeros(hidden))
        self.b_t = Tensor(np.zeros(dim))

    def parameters(self) -> dict[str, Tensor]:
        params = {"char_emb": self.char_emb}
        params.update(self.fwd.parameters("fwd."))
        params.update(self.bwd.parameters("bwd."))
        params.update({"t_h": self.t_h, "b_h": self.b_h, "o_t": self.o_t, "b_t": self.b_t})
        return params

    def forward_on_tape(self, tape: Tape, indices: list[int]) -> Tensor:
        if not indices:
            raise ValueError("cannot embed an empty word")
        xs = [tape.row(self.char_emb, i) for i in indices]
        h_f = self._sweep(tape, self.fwd, xs)
        h_b = self._sweep(tape, self.bwd, list(reversed(xs)))
        z = tape.concat([h_f, h_b])
        return tape.affine(self.o_t, tape.tanh(tape.affine(self.t_h, z, self.b_h)), self.b_t)

    def _sweep(self, tape: Tape, cell: LstmCellParams, xs: list[Tensor]) -> Tensor:
        h = Tensor(np.zeros(self.hidden))
        c = Tensor(np.zeros(self.hidden))
        for x in xs:
            h, c = lstm_step(tape, cell, x, h, c)
        return h

    def forward(self, word: str) -> np.ndarray:
        """Infer the embedding of a word; unseen characters collapse to UNK."""
        out = self.forward_on_tape(Tape(), self.chars.encode(word))
        return out.data.copy()

    def save(self, path: str, extra_meta: dict | None = None) -> None:
        meta = {
            "chars": self.chars.chars,
            "char_dim": self.char_dim,
            "hidden": self.hidden,
            "dim": self.dim,
        }
        if extra_meta:
            meta.update(extra_meta)
        save_archive(path, "mimick", meta, {k: p.data for k, p in self.parameters().items()})

    @classmethod
    def load(cls, path: str) -> "MimickModel":
        manifest, tensors = load_archive(path, expect_kind="mimick")
        meta = manifest["meta"]
        model = cls(
            CharVocabulary(meta["chars"]),
            dim=meta["dim"],
            char_dim=meta["char_dim"],
            hidden=meta["hidden"],
        )
        restore_parameters(path, model.parameters(), tensors)
        return model


def restore_parameters(path: str, params: dict[str, Tensor], tensors: dict[str, np.ndarray]) -> None:
    for name, param in params.items():
        if name not in tensors:
            raise ArchiveError(f"{path}: missing tensor {name!r}")
        if tensors[name].shape != param.data.shape:
            raise ArchiveError(
                f"{path}: tensor {name!r} has shape {tensors[name].shape}, "
                f"expected {param.data.shape}"
            )
        param.data[...] = tensors[name]


def mimick_loss(model: MimickModel, word: str, target: np.ndarray) -> float:
    """Squared Euclidean distance between the inferred and target vectors."""
    target = np.asarray(target, dtype=np.float64)
    if target.shape != (model.dim,):
        raise DimensionError(f"target shape {target.shape}, expected ({model.dim},)")
    return float(np.sum((model.forward(word) - target) ** 2))


@dataclass
class EpochLoss:
    epoch: int
    train_loss: float
    dev_loss: float


def train_mimick(
    table: EmbeddingTable, cfg: MimickTrainConfig
) -> tuple[MimickModel, list[EpochLoss]]:
    """Per-word momentum SGD on the squared-distance objective.

    The vocabulary is split (seeded) into train and a held-out dev fraction
    used only for loss monitoring; the UNK vector, if any, is not a training
    target. Returns the model and the per-epoch mean train/dev losses.
    """
    words = table.words()
    if len(words) < 2:
        raise ValueError(f"need at least 2 vocabulary words, got {len(words)}")
    rng = np.random.default_rng(cfg.seed)
    chars = CharVocabulary.from_words(words)
    model = MimickModel(chars, table.dim, cfg.char_dim, cfg.hidden, rng)
    optimizer = MomentumSgd(model.parameters(), cfg.lr, cfg.momentum)

    perm = rng.permutation(len(words))
    dev_size = int(round(cfg.dev_fraction * len(words)))
    dev_words = [words[i] for i in perm[:dev_size]]
    train_words = [words[i] for i in perm[dev_size:]]

    trace: list[EpochLoss] = []
    for epoch in range(1, cfg.epochs + 1):
        total = 0.0
        for i in rng.permutation(len(train_words)):
            word = train_words[i]
            indices = chars.encode(word)
            if cfg.unk_char_rate > 0.0:
                drop = rng.random(len(indices)) < cfg.unk_char_rate
                indices = [
                    UNK_CHAR_INDEX if hit else idx for idx, hit in zip(indices, drop)
                ]
            tape = Tape()
            out = model.forward_on_tape(tape, indices)
            loss = tape.sum_squares(tape.sub(out, Tensor(table.vector(word))))
            optimizer.zero_grad()
            tape.backward(loss)
            optimizer.step()
            total += float(loss.data)
        dev_loss = (
            float(np.mean([mimick_loss(model, w, table.vector(w)) for w in dev_words]))
            if dev_words
            else float("nan")
        )
        trace.append(EpochLoss(epoch, total / len(train_words), dev_loss))
    return model, trace


def infer_oov(model: MimickModel, table: EmbeddingTable, words: list[str]) -> EmbeddingTable:
    """Infer vectors for the requested words (in-vocabulary ones included)."""
    if model.dim != table.dim:
        raise DimensionError(f"model dimension {model.dim} != table dimension {table.dim}")
    return EmbeddingTable(model.dim, [(w, model.forward(w)) for w in dict.fromkeys(words)])


def nearest_neighbors(
    table: EmbeddingTable, query: np.ndarray, k: int
) -> list[tuple[str, float]]:
    """Top-k table words by cosine similarity, descending; ties broken by
    table order; zero-norm table vectors rank last."""
    query = np.asarray(query, dtype=np.float64)
    if query.shape != (table.dim,):
        raise DimensionError(f"query shape {query.shape}, expected ({table.dim},)")
    qnorm = np.linalg.norm(query)
    if qnorm == 0.0:
        raise ValueError("query vector must be non-zero")
    if not 1 <= k <= len(table):
        raise ValueError(f"k must be in [1, {len(table)}], got {k}")
    matrix = table.matrix()
    norms = np.linalg.norm(matrix, axis=1)
    sims = np.full(len(table), -np.inf)
    nonzero = norms > 0.0
    sims[nonzero] = (matrix[nonzero] @ query) / (norms[nonzero] * qnorm)
    order = np.argsort(-sims, kind="stable")[:k]
    words = table.words()
    return [(words[i], float(sims[i])) for i in order]
