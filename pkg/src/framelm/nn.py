"""Dense numerical kernel: LSTM, softmax, NLL, BPTT, AdaDelta, gradient check.

Everything runs in 64-bit floats on numpy arrays. The LSTM follows the
standard single-layer formulation

    i_t = sigmoid(W_i x_t + U_i h_{t-1} + b_i)
    c~_t = tanh  (W_c x_t + U_c h_{t-1} + b_c)
    f_t = sigmoid(W_f x_t + U_f h_{t-1} + b_f)
    C_t = i_t * c~_t + f_t * C_{t-1}
    o_t = sigmoid(W_o x_t + U_o h_{t-1} + b_o)
    h_t = o_t * tanh(C_t)

with no peepholes. The four gate blocks are stored stacked column-wise in
order [i, c, f, o] so a step costs two matrix products; per-gate views are
exposed for tests and persistence.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

WEIGHT_INIT_SCALE = 0.08
GATE_ORDER = ("i", "c", "f", "o")

# Probability floor applied by nll_loss when a target underflows to zero.
NLL_FLOOR = 1e-30
_nll_clamp_count = 0


def nll_clamp_count() -> int:
    """Number of times nll_loss hit the probability floor since import."""
    return _nll_clamp_count


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    t = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + t), t / (1.0 + t))


def softmax(logits: np.ndarray) -> np.ndarray:
    """Softmax over the last axis, computed with max-subtraction."""
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    ex = np.exp(shifted)
    return ex / np.sum(ex, axis=-1, keepdims=True)


def softmax_layer(h: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Output distribution softmax(h W + b)."""
    return softmax(h @ w + b)


def nll_loss(dist: np.ndarray, target: int) -> float:
    """Negative log-likelihood of one target under a probability vector."""
    global _nll_clamp_count
    p = dist[target]
    if p < NLL_FLOOR:
        _nll_clamp_count += 1
        logger.warning("target probability %.3g clamped to %.0e", p, NLL_FLOOR)
        p = NLL_FLOOR
    return -float(np.log(p))


@dataclass
class LstmParams:
    """Stacked LSTM parameters: w (d x 4m), u (m x 4m), b (4m,)."""

    w: np.ndarray
    u: np.ndarray
    b: np.ndarray

    @property
    def input_dim(self) -> int:
        return self.w.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.u.shape[0]

    def _block(self, array: np.ndarray, gate: str) -> np.ndarray:
        g = GATE_ORDER.index(gate)
        m = self.hidden_dim
        return array[..., g * m:(g + 1) * m]

    # Per-gate views onto the stacked storage (writable).
    @property
    def w_i(self) -> np.ndarray:
        return self._block(self.w, "i")

    @property
    def w_c(self) -> np.ndarray:
        return self._block(self.w, "c")

    @property
    def w_f(self) -> np.ndarray:
        return self._block(self.w, "f")

    @property
    def w_o(self) -> np.ndarray:
        return self._block(self.w, "o")

    @property
    def u_i(self) -> np.ndarray:
        return self._block(self.u, "i")

    @property
    def u_c(self) -> np.ndarray:
        return self._block(self.u, "c")

    @property
    def u_f(self) -> np.ndarray:
        return self._block(self.u, "f")

    @property
    def u_o(self) -> np.ndarray:
        return self._block(self.u, "o")

    @property
    def b_i(self) -> np.ndarray:
        return self._block(self.b, "i")

    @property
    def b_c(self) -> np.ndarray:
        return self._block(self.b, "c")

    @property
    def b_f(self) -> np.ndarray:
        return self._block(self.b, "f")

    @property
    def b_o(self) -> np.ndarray:
        return self._block(self.b, "o")

    @classmethod
    def init(cls, input_dim: int, hidden_dim: int, rng: np.random.Generator) -> "LstmParams":
        scale = WEIGHT_INIT_SCALE
        return cls(
            w=rng.uniform(-scale, scale, size=(input_dim, 4 * hidden_dim)),
            u=rng.uniform(-scale, scale, size=(hidden_dim, 4 * hidden_dim)),
            b=rng.uniform(-scale, scale, size=4 * hidden_dim),
        )

    @classmethod
    def zeros(cls, input_dim: int, hidden_dim: int) -> "LstmParams":
        return cls(
            w=np.zeros((input_dim, 4 * hidden_dim)),
            u=np.zeros((hidden_dim, 4 * hidden_dim)),
            b=np.zeros(4 * hidden_dim),
        )


@dataclass
class LstmState:
    """Post-step state plus the activations the backward pass needs."""

    h: np.ndarray
    c: np.ndarray
    i: np.ndarray
    f: np.ndarray
    o: np.ndarray
    c_hat: np.ndarray
    tanh_c: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray

    @classmethod
    def initial(cls, hidden_dim: int) -> "LstmState":
        return cls(*(np.zeros(hidden_dim) for _ in range(9)))


def lstm_step(
    x: np.ndarray,
    h_prev: np.ndarray,
    c_prev: np.ndarray,
    params: LstmParams,
    zx: np.ndarray | None = None,
) -> LstmState:
    """One LSTM update. ``zx`` may carry the precomputed x W + b row."""
    if not np.all(np.isfinite(x)):
        raise FloatingPointError("non-finite LSTM input")
    if zx is None:
        zx = x @ params.w + params.b
    z = zx + h_prev @ params.u
    m = params.hidden_dim
    i = sigmoid(z[0:m])
    c_hat = np.tanh(z[m:2 * m])
    f = sigmoid(z[2 * m:3 * m])
    o = sigmoid(z[3 * m:4 * m])
    c = i * c_hat + f * c_prev
    tanh_c = np.tanh(c)
    h = o * tanh_c
    return LstmState(h=h, c=c, i=i, f=f, o=o, c_hat=c_hat, tanh_c=tanh_c, h_prev=h_prev, c_prev=c_prev)


def forward_sequence(x_seq: np.ndarray, params: LstmParams) -> list[LstmState]:
    """Run the LSTM over a (L, d) input matrix from a zero initial state."""
    zx_all = x_seq @ params.w + params.b
    h = np.zeros(params.hidden_dim)
    c = np.zeros(params.hidden_dim)
    states = []
    for t in range(x_seq.shape[0]):
        state = lstm_step(x_seq[t], h, c, params, zx=zx_all[t])
        states.append(state)
        h, c = state.h, state.c
    return states


def backward_sequence(
    x_seq: np.ndarray,
    states: list[LstmState],
    dh_seq: np.ndarray,
    params: LstmParams,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Backpropagation through time.

    ``dh_seq`` is the (L, m) loss gradient wrt each step's hidden output.
    Returns (dx_seq, dw, du, db) matching x_seq and the stacked parameters.
    """
    length = x_seq.shape[0]
    m = params.hidden_dim
    dz_all = np.empty((length, 4 * m))
    dh_rec = np.zeros(m)
    dc = np.zeros(m)
    for t in range(length - 1, -1, -1):
        st = states[t]
        dh = dh_seq[t] + dh_rec
        do = dh * st.tanh_c
        dc = dc + dh * st.o * (1.0 - st.tanh_c ** 2)
        dz = dz_all[t]
        dz[0:m] = dc * st.c_hat * st.i * (1.0 - st.i)
        dz[m:2 * m] = dc * st.i * (1.0 - st.c_hat ** 2)
        dz[2 * m:3 * m] = dc * st.c_prev * st.f * (1.0 - st.f)
        dz[3 * m:4 * m] = do * st.o * (1.0 - st.o)
        dh_rec = params.u @ dz
        dc = dc * st.f
    h_prev_seq = np.stack([st.h_prev for st in states])
    dw = x_seq.T @ dz_all
    du = h_prev_seq.T @ dz_all
    db = dz_all.sum(axis=0)
    dx_seq = dz_all @ params.w.T
    return dx_seq, dw, du, db


@dataclass
class AdaDeltaState:
    """Per-parameter running averages E[g^2] and E[dx^2]."""

    eg2: np.ndarray
    edx2: np.ndarray
    rho: float = 0.95
    eps: float = 1e-6
    _tmp: np.ndarray | None = None
    _dx: np.ndarray | None = None

    @classmethod
    def for_param(cls, param: np.ndarray, rho: float = 0.95, eps: float = 1e-6) -> "AdaDeltaState":
        return cls(eg2=np.zeros_like(param), edx2=np.zeros_like(param), rho=rho, eps=eps)


def adadelta_update(param: np.ndarray, grad: np.ndarray, state: AdaDeltaState) -> np.ndarray:
    """In-place AdaDelta step: accumulate E[g^2], apply dx, accumulate E[dx^2].

    Scratch buffers live on the state; the update runs allocation-free on the
    training fast path.
    """
    rho, eps = state.rho, state.eps
    if state._tmp is None:
        state._tmp = np.empty_like(state.eg2)
        state._dx = np.empty_like(state.eg2)
    tmp, dx = state._tmp, state._dx
    # E[g^2] <- rho E[g^2] + (1-rho) g^2
    np.multiply(grad, grad, out=tmp)
    tmp *= 1.0 - rho
    state.eg2 *= rho
    state.eg2 += tmp
    # dx = -(sqrt(E[dx^2]+eps) / sqrt(E[g^2]+eps)) * g
    np.add(state.eg2, eps, out=tmp)
    np.sqrt(tmp, out=tmp)
    np.add(state.edx2, eps, out=dx)
    np.sqrt(dx, out=dx)
    dx /= tmp
    dx *= grad
    np.negative(dx, out=dx)
    # E[dx^2] <- rho E[dx^2] + (1-rho) dx^2
    np.multiply(dx, dx, out=tmp)
    tmp *= 1.0 - rho
    state.edx2 *= rho
    state.edx2 += tmp
    param += dx
    return param


@dataclass
class AdaDelta:
    """AdaDelta over a named parameter set; state is created lazily."""

    rho: float = 0.95
    eps: float = 1e-6
    states: dict[str, AdaDeltaState] = field(default_factory=dict)

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        for name, param in params.items():
            if name not in self.states:
                self.states[name] = AdaDeltaState.for_param(param, self.rho, self.eps)
            adadelta_update(param, grads[name], self.states[name])


def grad_check(model, enc, epsilon: float = 1e-5, n_samples: int = 500, seed: int = 0) -> float:
    """Compare analytic gradients to central finite differences.

    Samples up to ``n_samples`` coordinates across all parameters (all of
    them when the model is smaller than that) and returns the maximum
    relative error |ga - gn| / max(|ga|, |gn|, 1e-8). The difference
    quotient is evaluated through the model's extended-precision loss so
    near-zero coordinates are not swamped by f64 rounding of the loss.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    _, analytic = model.loss_and_gradients(enc)
    params = model.parameters()
    coords = [(name, i) for name, arr in params.items() for i in range(arr.size)]
    rng = np.random.default_rng(seed)
    if len(coords) > n_samples:
        picks = rng.choice(len(coords), size=n_samples, replace=False)
        coords = [coords[int(i)] for i in picks]
    base = {name: arr.astype(np.longdouble) for name, arr in params.items()}
    eps = np.longdouble(epsilon)
    worst = 0.0
    for name, flat_i in coords:
        orig = base[name].flat[flat_i]
        base[name].flat[flat_i] = orig + eps
        loss_plus = model.sequence_nll_precise(enc, base)
        base[name].flat[flat_i] = orig - eps
        loss_minus = model.sequence_nll_precise(enc, base)
        base[name].flat[flat_i] = orig
        numeric = float((loss_plus - loss_minus) / (2.0 * eps))
        ga = analytic[name].flat[flat_i]
        rel = abs(ga - numeric) / max(abs(ga), abs(numeric), 1e-8)
        worst = max(worst, rel)
    return worst
