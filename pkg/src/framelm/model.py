"""Frame sequence models: joint and separate embedding variants.

Both variants share the LSTM and softmax stack and the joint word:label
output inventory; they differ only in how input units are embedded. The
joint variant learns one vector per word:label unit; the separate variant
concatenates a word vector and a label vector (and can start from
pre-trained word vectors). Hidden size always equals the input embedding
width.
"""
from __future__ import annotations

import io
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Sequence

import numpy as np

from . import nn
from .embeddings import init_embedding
from .frames import EOS_LABEL, PRED_LABEL, ArgumentUnit, FrameSequence
from .vocab import EncodedFrame, Vocabulary, encode_frame

MODEL_MAGIC = "framelm-model"
MODEL_VERSION = 1

MODES = ("joint", "separate")


class ModelFormatError(ValueError):
    pass


class TrainingError(RuntimeError):
    pass


@dataclass
class ModelConfig:
    """Architecture settings; hidden width is derived from the mode."""

    mode: str
    word_dim: int = 50
    label_dim: int = 16
    joint_dim: int = 64
    seed: int = 0
    vocab_checksum: str = ""
    hidden: int = field(init=False)

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        self.hidden = self.input_dim

    @property
    def input_dim(self) -> int:
        if self.mode == "joint":
            return self.joint_dim
        return self.word_dim + self.label_dim


class FrameModel:
    """A trainable distribution over next frame units given a unit prefix."""

    def __init__(
        self,
        config: ModelConfig,
        vocab: Vocabulary,
        pretrained_word_embeddings: np.ndarray | None = None,
        _skip_init: bool = False,
    ):
        self.config = config
        self.vocab = vocab
        self.freeze_word_embeddings = False
        config.vocab_checksum = vocab.checksum()
        if _skip_init:
            return
        rng = np.random.default_rng(config.seed)
        # Draw order is fixed so a seed fully determines the model:
        # embeddings, LSTM w/u/b, output w/b.
        if config.mode == "joint":
            if pretrained_word_embeddings is not None:
                raise ValueError("pre-trained word vectors require the separate-embedding mode")
            self.emb_joint = init_embedding(vocab.n_joint, config.joint_dim, rng)
        else:
            self.emb_word = init_embedding(vocab.n_words, config.word_dim, rng)
            self.emb_label = init_embedding(vocab.n_labels, config.label_dim, rng)
            if pretrained_word_embeddings is not None:
                if pretrained_word_embeddings.shape != self.emb_word.shape:
                    raise ValueError(
                        f"pre-trained table shape {pretrained_word_embeddings.shape} != "
                        f"expected {self.emb_word.shape}"
                    )
                self.emb_word = np.array(pretrained_word_embeddings, dtype=np.float64)
        self.lstm = nn.LstmParams.init(config.input_dim, config.hidden, rng)
        self.out_w = rng.uniform(-nn.WEIGHT_INIT_SCALE, nn.WEIGHT_INIT_SCALE, size=(config.hidden, vocab.n_joint))
        self.out_b = rng.uniform(-nn.WEIGHT_INIT_SCALE, nn.WEIGHT_INIT_SCALE, size=vocab.n_joint)

    @property
    def mode(self) -> str:
        return self.config.mode

    @property
    def n_out(self) -> int:
        return self.vocab.n_joint

    def parameters(self) -> dict[str, np.ndarray]:
        """Live parameter arrays in the fixed persistence order."""
        if self.mode == "joint":
            params = {"emb_joint": self.emb_joint}
        else:
            params = {"emb_word": self.emb_word, "emb_label": self.emb_label}
        params.update(
            lstm_w=self.lstm.w,
            lstm_u=self.lstm.u,
            lstm_b=self.lstm.b,
            out_w=self.out_w,
            out_b=self.out_b,
        )
        return params

    def encode(self, frame: FrameSequence) -> EncodedFrame:
        return encode_frame(frame, self.vocab, self.mode)

    def _embed(
        self,
        joint: Sequence[int],
        words: Sequence[int] | None,
        labels: Sequence[int] | None,
    ) -> np.ndarray:
        if self.mode == "joint":
            return self.emb_joint[np.array(joint, dtype=np.intp)]
        word_rows = self.emb_word[np.array(words, dtype=np.intp)]
        label_rows = self.emb_label[np.array(labels, dtype=np.intp)]
        return np.concatenate([word_rows, label_rows], axis=1)

    def _input_matrix(self, enc: EncodedFrame) -> np.ndarray:
        """Embedding rows for the input positions (all units but the final EOS)."""
        return self._embed(
            enc.joint[:-1],
            None if enc.words is None else enc.words[:-1],
            None if enc.labels is None else enc.labels[:-1],
        )

    def _forward(self, enc: EncodedFrame) -> tuple[np.ndarray, list[nn.LstmState], np.ndarray]:
        x_seq = self._input_matrix(enc)
        states = nn.forward_sequence(x_seq, self.lstm)
        h_seq = np.stack([st.h for st in states])
        probs = nn.softmax(h_seq @ self.out_w + self.out_b)
        return x_seq, states, probs

    def sequence_nll(self, enc: EncodedFrame) -> float:
        """Total negative log-likelihood of a frame, EOS step included."""
        _, _, probs = self._forward(enc)
        return sum(nn.nll_loss(probs[t], target) for t, target in enumerate(enc.targets))

    def loss_and_gradients(self, enc: EncodedFrame) -> tuple[float, dict[str, np.ndarray]]:
        """Forward plus full backpropagation through time for one frame."""
        x_seq, states, probs = self._forward(enc)
        loss = sum(nn.nll_loss(probs[t], target) for t, target in enumerate(enc.targets))

        dlogits = probs.copy()
        dlogits[np.arange(len(enc.targets)), np.array(enc.targets, dtype=np.intp)] -= 1.0
        h_seq = np.stack([st.h for st in states])
        grads: dict[str, np.ndarray] = {
            "out_w": h_seq.T @ dlogits,
            "out_b": dlogits.sum(axis=0),
        }
        dh_seq = dlogits @ self.out_w.T
        dx_seq, dw, du, db = nn.backward_sequence(x_seq, states, dh_seq, self.lstm)
        grads["lstm_w"] = dw
        grads["lstm_u"] = du
        grads["lstm_b"] = db

        if self.mode == "joint":
            demb = np.zeros_like(self.emb_joint)
            np.add.at(demb, np.array(enc.joint[:-1], dtype=np.intp), dx_seq)
            grads["emb_joint"] = demb
        else:
            d_w = self.config.word_dim
            demb_word = np.zeros_like(self.emb_word)
            demb_label = np.zeros_like(self.emb_label)
            np.add.at(demb_word, np.array(enc.words[:-1], dtype=np.intp), dx_seq[:, :d_w])
            np.add.at(demb_label, np.array(enc.labels[:-1], dtype=np.intp), dx_seq[:, d_w:])
            grads["emb_word"] = demb_word
            grads["emb_label"] = demb_label
        return loss, {name: grads[name] for name in self.parameters()}

    def _encode_prefix(self, prefix: Sequence[ArgumentUnit]) -> EncodedFrame:
        if len(prefix) == 0:
            raise ValueError("empty prefix")
        if prefix[0].label != PRED_LABEL:
            raise ValueError(f"prefix must start with a {PRED_LABEL}-labeled unit")
        for unit in prefix:
            if unit.label == EOS_LABEL:
                raise ValueError("EOS inside a prefix")
        joint = tuple(self.vocab.joint_id(u.word, u.label) for u in prefix)
        if self.mode == "joint":
            return EncodedFrame(joint=joint)
        return EncodedFrame(
            joint=joint,
            words=tuple(self.vocab.word_id(u.word) for u in prefix),
            labels=tuple(self.vocab.label_id(u.label) for u in prefix),
        )

    def next_argument_distribution(self, prefix: Sequence[ArgumentUnit]) -> np.ndarray:
        """Distribution over the joint output inventory after a unit prefix."""
        enc = self._encode_prefix(prefix)
        x_seq = self._embed(enc.joint, enc.words, enc.labels)
        states = nn.forward_sequence(x_seq, self.lstm)
        return nn.softmax_layer(states[-1].h, self.out_w, self.out_b)

    def sequence_log_probability(self, frame: FrameSequence) -> float:
        """Log probability of a complete frame: sum of per-step log estimates."""
        return -self.sequence_nll(self.encode(frame))

    def sequence_nll_precise(self, enc: EncodedFrame, params: dict[str, np.ndarray] | None = None):
        """Extended-precision NLL for finite-difference gradient checking.

        A deliberately plain per-step loop over (possibly perturbed) parameter
        copies, run in the widest float the platform offers so the central
        difference is not drowned by rounding of the f64 fast path.
        """
        if params is None:
            params = {k: v.astype(np.longdouble) for k, v in self.parameters().items()}
        m = self.config.hidden
        w, u, b = params["lstm_w"], params["lstm_u"], params["lstm_b"]
        out_w, out_b = params["out_w"], params["out_b"]
        h = np.zeros(m, dtype=np.longdouble)
        c = np.zeros(m, dtype=np.longdouble)
        loss = np.longdouble(0.0)
        for t, target in enumerate(enc.targets):
            if self.mode == "joint":
                x = params["emb_joint"][enc.joint[t]]
            else:
                x = np.concatenate([params["emb_word"][enc.words[t]],
                                    params["emb_label"][enc.labels[t]]])
            z = x @ w + b + h @ u
            i = 1.0 / (1.0 + np.exp(-z[0:m]))
            c_hat = np.tanh(z[m:2 * m])
            f = 1.0 / (1.0 + np.exp(-z[2 * m:3 * m]))
            o = 1.0 / (1.0 + np.exp(-z[3 * m:4 * m]))
            c = i * c_hat + f * c
            h = o * np.tanh(c)
            logits = h @ out_w + out_b
            shifted = logits - np.max(logits)
            loss += np.log(np.sum(np.exp(shifted))) - shifted[target]
        return loss


@dataclass
class TrainReport:
    """Per-epoch mean loss (NLL per prediction step) and run metadata."""

    epoch_mean_nll: list[float] = field(default_factory=list)
    epochs: int = 0
    frames_seen: int = 0
    wall_time_s: float = 0.0

    def to_tsv(self) -> str:
        lines = ["epoch\tmean_nll"]
        lines += [f"{i}\t{v:.10f}" for i, v in enumerate(self.epoch_mean_nll)]
        return "\n".join(lines) + "\n"


def train(
    model: FrameModel,
    frames: Sequence[FrameSequence],
    epochs: int,
    shuffle_seed: int = 0,
    rho: float = 0.95,
    eps: float = 1e-6,
) -> TrainReport:
    """Per-frame SGD with AdaDelta over every parameter, embeddings included.

    Frame order is reshuffled each epoch from a dedicated seeded generator,
    so identical (model seed, shuffle seed, data) runs are bit-reproducible.
    """
    encoded = [model.encode(frame) for frame in frames]
    optimizer = nn.AdaDelta(rho=rho, eps=eps)
    rng = np.random.default_rng(shuffle_seed)
    report = TrainReport()
    start = time.perf_counter()
    for _ in range(epochs):
        order = rng.permutation(len(encoded))
        total_nll = 0.0
        total_steps = 0
        for idx in order:
            enc = encoded[idx]
            loss, grads = model.loss_and_gradients(enc)
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss on frame {enc.source_id!r}")
            params = model.parameters()
            if model.freeze_word_embeddings:
                params.pop("emb_word", None)
            optimizer.step(params, grads)
            total_nll += loss
            total_steps += enc.n_steps
        report.epoch_mean_nll.append(total_nll / total_steps)
        report.epochs += 1
        report.frames_seen += len(encoded)
    report.wall_time_s = time.perf_counter() - start
    return report


def _param_shapes(config: ModelConfig, vocab: Vocabulary) -> dict[str, tuple[int, ...]]:
    if config.mode == "joint":
        shapes = {"emb_joint": (vocab.n_joint, config.joint_dim)}
    else:
        shapes = {
            "emb_word": (vocab.n_words, config.word_dim),
            "emb_label": (vocab.n_labels, config.label_dim),
        }
    shapes.update(
        lstm_w=(config.input_dim, 4 * config.hidden),
        lstm_u=(config.hidden, 4 * config.hidden),
        lstm_b=(4 * config.hidden,),
        out_w=(config.hidden, vocab.n_joint),
        out_b=(vocab.n_joint,),
    )
    return shapes


def save_model(model: FrameModel, sink: str | Path | BinaryIO) -> None:
    """Write the container: text header, embedded vocabulary, raw <f8 arrays.

    Array order is fixed: embeddings (joint, or word then label), stacked
    LSTM input/recurrent/bias blocks, output weights, output bias.
    """
    if isinstance(sink, (str, Path)):
        with open(sink, "wb") as fh:
            save_model(model, fh)
        return
    cfg = model.config
    vocab_text = io.StringIO()
    model.vocab.save(vocab_text)
    vocab_bytes = vocab_text.getvalue().encode("utf-8")
    header = [
        f"{MODEL_MAGIC} {MODEL_VERSION}",
        f"mode {cfg.mode}",
        f"word_dim {cfg.word_dim}",
        f"label_dim {cfg.label_dim}",
        f"joint_dim {cfg.joint_dim}",
        f"seed {cfg.seed}",
        f"vocab_checksum {model.vocab.checksum()}",
        f"vocab_bytes {len(vocab_bytes)}",
        "end_header",
        "",
    ]
    sink.write("\n".join(header).encode("utf-8"))
    sink.write(vocab_bytes)
    for array in model.parameters().values():
        sink.write(np.ascontiguousarray(array, dtype="<f8").tobytes())


def load_model(source: str | Path | BinaryIO) -> FrameModel:
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            return load_model(fh)
    data = source.read()
    try:
        header_end = data.index(b"end_header\n")
    except ValueError:
        raise ModelFormatError("missing header terminator") from None
    try:
        header_lines = data[:header_end].decode("utf-8").splitlines()
        magic = header_lines[0].split()
        if magic[0] != MODEL_MAGIC:
            raise ModelFormatError("not a model container")
        if int(magic[1]) != MODEL_VERSION:
            raise ModelFormatError(f"unsupported model version {magic[1]}")
        fields = dict(line.split(" ", 1) for line in header_lines[1:])
    except (UnicodeDecodeError, IndexError, ValueError) as err:
        if isinstance(err, ModelFormatError):
            raise
        raise ModelFormatError(f"malformed container header: {err}") from None
    body = data[header_end + len(b"end_header\n"):]

    vocab_len = int(fields["vocab_bytes"])
    if len(body) < vocab_len:
        raise ModelFormatError("truncated container: vocabulary section")
    vocab = Vocabulary.load(io.StringIO(body[:vocab_len].decode("utf-8")))
    if vocab.checksum() != fields["vocab_checksum"]:
        raise ModelFormatError("vocabulary checksum mismatch")

    config = ModelConfig(
        mode=fields["mode"],
        word_dim=int(fields["word_dim"]),
        label_dim=int(fields["label_dim"]),
        joint_dim=int(fields["joint_dim"]),
        seed=int(fields["seed"]),
    )
    arrays: dict[str, np.ndarray] = {}
    offset = vocab_len
    for name, shape in _param_shapes(config, vocab).items():
        n_bytes = int(np.prod(shape)) * 8
        chunk = body[offset:offset + n_bytes]
        if len(chunk) != n_bytes:
            raise ModelFormatError(f"truncated container: parameter {name}")
        arrays[name] = np.frombuffer(chunk, dtype="<f8").reshape(shape).copy()
        offset += n_bytes
    if offset != len(body):
        raise ModelFormatError("trailing bytes after parameter section")

    model = FrameModel(config, vocab, _skip_init=True)
    model.lstm = nn.LstmParams(w=arrays.pop("lstm_w"), u=arrays.pop("lstm_u"), b=arrays.pop("lstm_b"))
    for name, array in arrays.items():
        setattr(model, name, array)
    return model
