"""Joint POS and morphosyntactic attribute tagger.

A two-layer sentence BiLSTM runs over per-token word representations; one
two-layer projection head per attribute (plus one for POS) turns each hidden
state into a distribution over that attribute's training inventory, with an
explicit NONE class at index 0 for non-POS attributes.

Word representations start from a pre-trained table and differ only in how
out-of-vocabulary forms are initialized (the four variants below). Every
form's vector is materialized once per run into a trainable embedding row
and is updated during training like any other parameter. The char2tag and
both variants additionally append a task-trained character BiLSTM output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .archive import load_archive, save_archive
from .conllu import (
    AttributeSchema,
    CorpusSplit,
    SchemaError,
    Sentence,
    Token,
    build_schema,
    token_count,
)
from .embeddings import MIMICK_DIRECT, UNK_LOWERCASE, EmbeddingTable, lookup
from .evaluate import TaggedCorpusPair, micro_f1, pos_accuracy
from .mimick import CharVocabulary, MimickModel, restore_parameters
from .nn import (
    DimensionError,
    LstmCellParams,
    MomentumSgd,
    Tape,
    Tensor,
    dropout_mask,
    embedding_init,
    glorot_uniform,
    lstm_step,
)

VARIANTS = ("no-char", "mimick", "char2tag", "both")
_VARIANT_POLICY = {
    "no-char": UNK_LOWERCASE,
    "char2tag": UNK_LOWERCASE,
    "mimick": MIMICK_DIRECT,
    "both": MIMICK_DIRECT,
}

POS_HEAD = "POS"

# training sets at or below this many tokens get a doubled epoch budget
LOW_RESOURCE_TOKENS = 5000


@dataclass
class WordRepSpec:
    """How token vectors are built: base table plus the OOV strategy."""

    variant: str
    table: EmbeddingTable
    mimick: MimickModel | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.variant in ("mimick", "both"):
            if self.mimick is None:
                raise ValueError(f"variant {self.variant!r} requires a mimick model")
            if self.mimick.dim != self.table.dim:
                raise DimensionError(
                    f"mimick dimension {self.mimick.dim} != table dimension {self.table.dim}"
                )
        elif self.table.unk is None:
            raise ValueError(f"variant {self.variant!r} requires a table with an UNK vector")

    @property
    def policy(self) -> str:
        return _VARIANT_POLICY[self.variant]

    @property
    def uses_char_lstm(self) -> bool:
        return self.variant in ("char2tag", "both")


@dataclass
class TaggerTrainConfig:
    loss_mode: str = "sum"  # or "weighted"
    epochs: int = 40
    dropout: float = 0.5
    lr: float = 0.01
    momentum: float = 0.9
    seed: int = 0
    hidden: int = 128  # per direction, both sentence BiLSTM layers
    char_dim: int = 20  # char2tag embedding dimension
    char_hidden: int = 128  # char2tag LSTM hidden size per direction
    pos_only: bool = False

    def __post_init__(self):
        if self.loss_mode not in ("sum", "weighted"):
            raise ValueError(f"loss mode must be 'sum' or 'weighted', got {self.loss_mode!r}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")


class Head:
    """Per-attribute projection: O @ tanh(W @ h + b) + b_out, both layers
    as wide as the attribute's value inventory."""

    def __init__(self, in_width: int, n_values: int, rng: np.random.Generator | None):
        if rng is None:
            self.w_h = Tensor(np.zeros((n_values, in_width)))
            self.o_w = Tensor(np.zeros((n_values, n_values)))
        else:
            self.w_h = Tensor(glorot_uniform(rng, n_values, in_width))
            self.o_w = Tensor(glorot_uniform(rng, n_values, n_values))
        self.b_h = Tensor(np.zeros(n_values))
        self.b_w = Tensor(np.zeros(n_values))

    def logits(self, tape: Tape, h: Tensor) -> Tensor:
        return tape.affine(self.o_w, tape.tanh(tape.affine(self.w_h, h, self.b_h)), self.b_w)

    def parameters(self, prefix: str) -> dict[str, Tensor]:
        return {
            f"{prefix}w_h": self.w_h,
            f"{prefix}b_h": self.b_h,
            f"{prefix}o_w": self.o_w,
            f"{prefix}b_w": self.b_w,
        }


class CharToTag:
    """Task-trained character BiLSTM appended to each word representation."""

    def __init__(
        self,
        chars: CharVocabulary,
        char_dim: int = 20,
        hidden: int = 128,
        rng: np.random.Generator | None = None,
    ):
        self.chars = chars
        self.char_dim = char_dim
        self.hidden = hidden
        if rng is None:
            self.char_emb = Tensor(np.zeros((chars.size, char_dim)))
        else:
            self.char_emb = Tensor(embedding_init(rng, chars.size, char_dim))
        self.fwd = LstmCellParams(char_dim, hidden, rng)
        self.bwd = LstmCellParams(char_dim, hidden, rng)

    @property
    def width(self) -> int:
        return 2 * self.hidden

    def forward_on_tape(self, tape: Tape, word: str) -> Tensor:
        indices = self.chars.encode(word)
        ends = []
        for cell, seq in ((self.fwd, indices), (self.bwd, list(reversed(indices)))):
            h = Tensor(np.zeros(self.hidden))
            c = Tensor(np.zeros(self.hidden))
            for idx in seq:
                h, c = lstm_step(tape, cell, tape.row(self.char_emb, idx), h, c)
            ends.append(h)
        return tape.concat(ends)

    def parameters(self, prefix: str) -> dict[str, Tensor]:
        params = {f"{prefix}char_emb": self.char_emb}
        params.update(self.fwd.parameters(f"{prefix}fwd."))
        params.update(self.bwd.parameters(f"{prefix}bwd."))
        return params


class TaggerModel:
    def __init__(
        self,
        schema: AttributeSchema,
        rep: WordRepSpec,
        hidden: int = 128,
        char_dim: int = 20,
        char_hidden: int = 128,
        c2t_chars: CharVocabulary | None = None,
        rng: np.random.Generator | None = None,
    ):
        self.schema = schema
        self.rep = rep
        self.hidden = hidden
        self.c2t: CharToTag | None = None
        if rep.uses_char_lstm:
            if c2t_chars is None:
                raise ValueError(f"variant {rep.variant!r} needs a character inventory")
            self.c2t = CharToTag(c2t_chars, char_dim, char_hidden, rng)
        self.width = rep.table.dim + (self.c2t.width if self.c2t else 0)
        self.l1f = LstmCellParams(self.width, hidden, rng)
        self.l1b = LstmCellParams(self.width, hidden, rng)
        self.l2f = LstmCellParams(2 * hidden, hidden, rng)
        self.l2b = LstmCellParams(2 * hidden, hidden, rng)
        self.pos_head = Head(2 * hidden, len(schema.pos), rng)
        self.attr_heads = {
            attr: Head(2 * hidden, len(values) + 1, rng)
            for attr, values in schema.attrs.items()
        }
        self.rows: dict[str, Tensor] = {}
        self._pos_index = {tag: i for i, tag in enumerate(schema.pos)}
        self._value_index = {
            attr: {value: i + 1 for i, value in enumerate(values)}
            for attr, values in schema.attrs.items()
        }

    # ------------------------------------------------------------------
    # word representations

    def word_row(self, word: str) -> Tensor:
        """The trainable embedding row for a form, materialized on first use
        from the table under the variant's backoff policy."""
        row = self.rows.get(word)
        if row is None:
            vec, _ = lookup(self.rep.table, self.rep.policy, word, self.rep.mimick)
            row = Tensor(vec)
            self.rows[word] = row
        return row

    # ------------------------------------------------------------------
    # forward

    def states_on_tape(
        self,
        tape: Tape,
        sentence: Sentence,
        dropout: float = 0.0,
        rng: np.random.Generator | None = None,
    ) -> list[Tensor]:
        if not sentence.tokens:
            raise ValueError("cannot run the tagger on an empty sentence")
        reps = []
        for token in sentence.tokens:
            rep = self.word_row(token.form)
            if self.c2t is not None:
                rep = tape.concat([rep, self.c2t.forward_on_tape(tape, token.form)])
            if dropout > 0.0:
                rep = tape.mul_const(rep, dropout_mask(self.width, dropout, rng))
            reps.append(rep)
        layer1 = self._bilstm(tape, self.l1f, self.l1b, reps)
        if dropout > 0.0:
            layer1 = [
                tape.mul_const(h, dropout_mask(2 * self.hidden, dropout, rng)) for h in layer1
            ]
        return self._bilstm(tape, self.l2f, self.l2b, layer1)

    def _bilstm(
        self, tape: Tape, fwd: LstmCellParams, bwd: LstmCellParams, xs: list[Tensor]
    ) -> list[Tensor]:
        def sweep(cell, seq):
            h = Tensor(np.zeros(self.hidden))
            c = Tensor(np.zeros(self.hidden))
            states = []
            for x in seq:
                h, c = lstm_step(tape, cell, x, h, c)
                states.append(h)
            return states

        forward_states = sweep(fwd, xs)
        backward_states = sweep(bwd, list(reversed(xs)))[::-1]
        return [tape.concat([f, b]) for f, b in zip(forward_states, backward_states)]

    # ------------------------------------------------------------------
    # loss

    def loss_on_tape(
        self,
        tape: Tape,
        sentence: Sentence,
        mode: str = "sum",
        dropout: float = 0.0,
        rng: np.random.Generator | None = None,
    ) -> Tensor:
        if mode not in ("sum", "weighted"):
            raise ValueError(f"loss mode must be 'sum' or 'weighted', got {mode!r}")
        states = self.states_on_tape(tape, sentence, dropout, rng)
        parts = [self._head_nll(tape, self.pos_head, states, self._pos_targets(sentence))]
        for attr, head in self.attr_heads.items():
            targets = [
                self._attr_target(attr, token.attrs.get(attr)) for token in sentence.tokens
            ]
            attr_sum = self._head_nll(tape, head, states, targets)
            if mode == "weighted":
                attr_sum = tape.scale(attr_sum, self.schema.proportions[attr])
            parts.append(attr_sum)
        return parts[0] if len(parts) == 1 else tape.add_n(parts)

    def _head_nll(self, tape: Tape, head: Head, states: list[Tensor], targets: list[int]) -> Tensor:
        losses = [
            tape.scale(tape.pick(tape.log_softmax(head.logits(tape, h)), target), -1.0)
            for h, target in zip(states, targets)
        ]
        return losses[0] if len(losses) == 1 else tape.add_n(losses)

    def _pos_targets(self, sentence: Sentence) -> list[int]:
        targets = []
        for token in sentence.tokens:
            if token.upos not in self._pos_index:
                raise SchemaError(f"POS tag {token.upos!r} not in training inventory")
            targets.append(self._pos_index[token.upos])
        return targets

    def _attr_target(self, attr: str, value: str | None) -> int:
        if value is None:
            return 0
        index = self._value_index[attr].get(value)
        if index is None:
            raise SchemaError(f"value {value!r} not in inventory of {attr!r}")
        return index

    # ------------------------------------------------------------------
    # prediction

    def tag_sentence(self, sentence: Sentence) -> list[tuple[str, dict[str, str]]]:
        """Per-token (POS, attributes); NONE selections are emitted as
        attribute absence. Argmax ties resolve to the lowest inventory index."""
        tape = Tape()
        states = self.states_on_tape(tape, sentence)
        out = []
        for h in states:
            pos = self.schema.pos[int(np.argmax(self.pos_head.logits(tape, h).data))]
            attrs = {}
            for attr, head in self.attr_heads.items():
                index = int(np.argmax(head.logits(tape, h).data))
                if index != 0:
                    attrs[attr] = self.schema.attrs[attr][index - 1]
            out.append((pos, attrs))
        return out

    # ------------------------------------------------------------------
    # parameters and persistence

    def network_parameters(self) -> dict[str, Tensor]:
        params: dict[str, Tensor] = {}
        if self.c2t is not None:
            params.update(self.c2t.parameters("c2t."))
        params.update(self.l1f.parameters("l1f."))
        params.update(self.l1b.parameters("l1b."))
        params.update(self.l2f.parameters("l2f."))
        params.update(self.l2b.parameters("l2b."))
        params.update(self.pos_head.parameters(f"head.{POS_HEAD}."))
        for attr, head in self.attr_heads.items():
            params.update(head.parameters(f"head.attr.{attr}."))
        return params

    def parameters(self) -> dict[str, Tensor]:
        params = {f"row.{word}": row for word, row in self.rows.items()}
        params.update(self.network_parameters())
        return params

    def save(self, path: str, extra_meta: dict | None = None) -> None:
        rep = self.rep
        meta = {
            "variant": rep.variant,
            "dim": rep.table.dim,
            "hidden": self.hidden,
            "char_dim": self.c2t.char_dim if self.c2t else None,
            "char_hidden": self.c2t.hidden if self.c2t else None,
            "c2t_chars": self.c2t.chars.chars if self.c2t else None,
            "schema": {
                "pos": self.schema.pos,
                "attrs": self.schema.attrs,
                "proportions": self.schema.proportions,
            },
            "rows": list(self.rows),
            "base_words": rep.table.words(),
            "mimick": _mimick_meta(rep.mimick) if rep.mimick else None,
        }
        if extra_meta:
            meta.update(extra_meta)
        tensors: dict[str, np.ndarray] = {
            "rows": np.stack([r.data for r in self.rows.values()])
            if self.rows
            else np.zeros((0, rep.table.dim)),
            "base": rep.table.matrix(),
        }
        if rep.table.unk is not None:
            tensors["base_unk"] = rep.table.unk
        if rep.mimick is not None:
            tensors.update(
                {f"mimick.{k}": p.data for k, p in rep.mimick.parameters().items()}
            )
        tensors.update({k: p.data for k, p in self.network_parameters().items()})
        save_archive(path, "tagger", meta, tensors)

    @classmethod
    def load(cls, path: str) -> "TaggerModel":
        manifest, tensors = load_archive(path, expect_kind="tagger")
        meta = manifest["meta"]
        table = EmbeddingTable(
            meta["dim"],
            zip(meta["base_words"], tensors["base"]),
            unk=tensors.get("base_unk"),
        )
        mimick = None
        if meta["mimick"] is not None:
            mimick = MimickModel(
                CharVocabulary(meta["mimick"]["chars"]),
                dim=meta["mimick"]["dim"],
                char_dim=meta["mimick"]["char_dim"],
                hidden=meta["mimick"]["hidden"],
            )
            sub = {
                name[len("mimick.") :]: arr
                for name, arr in tensors.items()
                if name.startswith("mimick.")
            }
            restore_parameters(path, mimick.parameters(), sub)
        schema = AttributeSchema(
            pos=list(meta["schema"]["pos"]),
            attrs={a: list(v) for a, v in meta["schema"]["attrs"].items()},
            proportions=dict(meta["schema"]["proportions"]),
        )
        model = cls(
            schema,
            WordRepSpec(meta["variant"], table, mimick),
            hidden=meta["hidden"],
            char_dim=meta["char_dim"] or 20,
            char_hidden=meta["char_hidden"] or 128,
            c2t_chars=CharVocabulary(meta["c2t_chars"]) if meta["c2t_chars"] is not None else None,
        )
        restore_parameters(path, model.network_parameters(), tensors)
        for word, vec in zip(meta["rows"], tensors["rows"]):
            model.rows[word] = Tensor(vec.copy())
        return model


def _mimick_meta(model: MimickModel) -> dict:
    return {
        "chars": model.chars.chars,
        "char_dim": model.char_dim,
        "hidden": model.hidden,
        "dim": model.dim,
    }


# ----------------------------------------------------------------------
# public operations


def attribute_distribution(model: TaggerModel, h: np.ndarray, attr: str) -> np.ndarray:
    """Probability distribution over an attribute's inventory (NONE first for
    non-POS attributes) given a sentence-BiLSTM state."""
    h = np.asarray(h, dtype=np.float64)
    if h.shape != (2 * model.hidden,):
        raise DimensionError(f"state shape {h.shape}, expected ({2 * model.hidden},)")
    if attr == POS_HEAD:
        head = model.pos_head
    elif attr in model.attr_heads:
        head = model.attr_heads[attr]
    else:
        raise SchemaError(f"unknown attribute {attr!r}")
    tape = Tape()
    return tape.softmax(head.logits(tape, Tensor(h))).data.copy()


def sentence_forward(
    model: TaggerModel,
    sentence: Sentence,
    mode: str = "eval",
    dropout: float = 0.5,
    rng: np.random.Generator | None = None,
) -> list[np.ndarray]:
    """Per-token hidden states; dropout applies in train mode only."""
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    if mode == "train" and dropout > 0.0 and rng is None:
        raise ValueError("train mode with dropout needs a random generator")
    tape = Tape()
    states = model.states_on_tape(
        tape, sentence, dropout if mode == "train" else 0.0, rng
    )
    return [s.data.copy() for s in states]


def joint_loss(model: TaggerModel, sentence: Sentence, mode: str = "sum") -> float:
    """Evaluation-mode joint negative log likelihood of the gold tags."""
    return float(model.loss_on_tape(Tape(), sentence, mode).data)


def tag(model: TaggerModel, sentence: Sentence) -> list[tuple[str, dict[str, str]]]:
    return model.tag_sentence(sentence)


def tag_corpus(model: TaggerModel, sentences: list[Sentence]) -> list[Sentence]:
    """Predicted copies of the input sentences (forms kept, tags replaced)."""
    out = []
    for sentence in sentences:
        tagged = model.tag_sentence(sentence)
        tokens = [
            Token(token.form, pos, attrs)
            for token, (pos, attrs) in zip(sentence.tokens, tagged)
        ]
        out.append(Sentence(tokens, sentence.sent_id))
    return out


@dataclass
class EpochMetrics:
    epoch: int
    train_loss: float
    dev_pos_accuracy: float
    dev_micro_f1: float


def effective_epochs(epochs: int, train_tokens: int) -> int:
    return epochs * 2 if train_tokens <= LOW_RESOURCE_TOKENS else epochs


def train_tagger(
    split: CorpusSplit, rep: WordRepSpec, cfg: TaggerTrainConfig
) -> tuple[TaggerModel, list[EpochMetrics]]:
    """Seeded per-sentence momentum SGD over the joint loss.

    The schema comes from the training split alone. The epoch budget doubles
    for low-resource training sets. Dev POS accuracy and micro F1 are
    recorded after every epoch (NaN when no dev split is given).
    """
    train = split.train
    n_tokens = token_count(train)
    if n_tokens == 0:
        raise ValueError("empty training split")
    schema = build_schema(train, include_attributes=not cfg.pos_only)
    rng = np.random.default_rng(cfg.seed)
    c2t_chars = None
    if rep.uses_char_lstm:
        c2t_chars = CharVocabulary.from_words(t.form for s in train for t in s.tokens)
    model = TaggerModel(
        schema, rep, cfg.hidden, cfg.char_dim, cfg.char_hidden, c2t_chars, rng
    )
    # materialize the type-level embedding cache before the optimizer snapshot
    for sentence in train:
        for token in sentence.tokens:
            model.word_row(token.form)
    optimizer = MomentumSgd(model.parameters(), cfg.lr, cfg.momentum)

    trace: list[EpochMetrics] = []
    for epoch in range(1, effective_epochs(cfg.epochs, n_tokens) + 1):
        total = 0.0
        for i in rng.permutation(len(train)):
            tape = Tape()
            loss = model.loss_on_tape(tape, train[i], cfg.loss_mode, cfg.dropout, rng)
            optimizer.zero_grad()
            tape.backward(loss)
            optimizer.step()
            total += float(loss.data)
        if split.dev:
            pair = TaggedCorpusPair(split.dev, tag_corpus(model, split.dev))
            dev_acc = pos_accuracy(pair)
            dev_f1 = micro_f1(pair, breakdown=False).f1
        else:
            dev_acc = dev_f1 = float("nan")
        trace.append(EpochMetrics(epoch, total / len(train), dev_acc, dev_f1))
    return model, trace
