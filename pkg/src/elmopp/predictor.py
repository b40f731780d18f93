"""Nested-LSTM inflow predictor with hand-rolled backprop and Adam training.

The recurrent cell generalizes the standard LSTM by replacing the additive
cell-state update with another LSTM, recursively to a chosen depth; depth 1
is exactly the classic cell. Each level computes standard gates; the gated
input i*g and the gated previous cell state f*c feed the level below, whose
output becomes the new cell state. The deepest level applies the classic
additive update i*g + f*c.

Training is next-step regression (mean squared error) on normalized
series, optimized with Adam, either in batched windows (pre-training) or
one observation pair at a time (online updates during simulation).
"""

import copy
from dataclasses import dataclass

import numpy as np


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class CellState:
    """Recurrent state: hidden output plus one cell vector per nesting level."""

    h: np.ndarray
    cs: list[np.ndarray]

    def copy(self) -> "CellState":
        return CellState(self.h.copy(), [c.copy() for c in self.cs])


class NlstmCell:
    """Nested LSTM cell. `W[0]` maps [x, h]; deeper levels map [i*g, f*c]."""

    def __init__(self, depth: int, hidden_size: int, input_size: int,
                 rng: np.random.Generator | None = None):
        if depth < 1:
            raise ValueError("depth must be >= 1")
        if hidden_size < 1 or input_size < 1:
            raise ValueError("hidden_size and input_size must be positive")
        self.depth = depth
        self.hidden_size = hidden_size
        self.input_size = input_size
        n = hidden_size
        bound = 1.0 / np.sqrt(n)
        rng = rng if rng is not None else np.random.default_rng(0)
        self.W: list[np.ndarray] = []
        self.b: list[np.ndarray] = []
        for level in range(depth):
            in_dim = (input_size + n) if level == 0 else 2 * n
            self.W.append(rng.uniform(-bound, bound, size=(in_dim, 4 * n)))
            b = np.zeros(4 * n)
            b[n:2 * n] = 1.0  # forget-gate bias aids long-horizon memory
            self.b.append(b)

    def zero_state(self, batch: int = 1) -> CellState:
        n = self.hidden_size
        return CellState(np.zeros((batch, n)), [np.zeros((batch, n)) for _ in range(self.depth)])

    def step(self, state: CellState, x: np.ndarray,
             cache: list | None = None) -> tuple[np.ndarray, CellState]:
        """One recurrence step on a (batch, input_size) input.

        Returns (h, new_state); pass a list as `cache` to record the
        intermediates needed by `backward_step`.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if not np.isfinite(x).all():
            raise ValueError("non-finite input to cell step")
        n = self.hidden_size
        new_cs: list[np.ndarray] = [None] * self.depth
        if cache is not None:
            del cache[:]
            cache.extend([None] * self.depth)

        def level(l: int, x_in: np.ndarray, h_in: np.ndarray) -> np.ndarray:
            xh = np.concatenate([x_in, h_in], axis=1)
            z = xh @ self.W[l] + self.b[l]
            i = _sigmoid(z[:, :n])
            f = _sigmoid(z[:, n:2 * n])
            o = _sigmoid(z[:, 2 * n:3 * n])
            g = np.tanh(z[:, 3 * n:])
            u = i * g
            v = f * state.cs[l]
            if l == self.depth - 1:
                c_new = u + v
            else:
                c_new = level(l + 1, u, v)
            new_cs[l] = c_new
            tc = np.tanh(c_new)
            if cache is not None:
                cache[l] = (xh, i, f, o, g, state.cs[l], tc)
            return o * tc

        h = level(0, x, state.h)
        return h, CellState(h, new_cs)

    def backward_step(self, cache: list, dh: np.ndarray, dc_carry: list[np.ndarray],
                      grad_W: list[np.ndarray], grad_b: list[np.ndarray],
                      ) -> tuple[np.ndarray, list[np.ndarray]]:
        """Backprop one step; returns (dh_prev, dc_prev per level).

        `dh` is the loss gradient on this step's hidden output and
        `dc_carry[l]` the gradient flowing back into level l's new cell
        state from the following timestep. Weight gradients accumulate
        into grad_W/grad_b.
        """
        n = self.hidden_size
        dc_prev: list[np.ndarray] = [None] * self.depth

        def level_back(l: int, dy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
            xh, i, f, o, g, c_prev, tc = cache[l]
            dc = dy * o * (1.0 - tc * tc) + dc_carry[l]
            do = dy * tc
            if l == self.depth - 1:
                du, dv = dc, dc
            else:
                du, dv = level_back(l + 1, dc)
            di = du * g
            dg = du * i
            df = dv * c_prev
            dc_prev[l] = dv * f
            dz = np.concatenate([
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                do * o * (1.0 - o),
                dg * (1.0 - g * g),
            ], axis=1)
            grad_W[l] += xh.T @ dz
            grad_b[l] += dz.sum(axis=0)
            dxh = dz @ self.W[l].T
            split = xh.shape[1] - n
            return dxh[:, :split], dxh[:, split:]

        _, dh_prev = level_back(0, dh)
        return dh_prev, dc_prev


# --- Adam ------------------------------------------------------------------

@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def for_params(cls, params: list[np.ndarray]) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params])


def adam_step(params: list[np.ndarray], grads: list[np.ndarray], state: AdamState,
              lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> None:
    """One bias-corrected Adam update, in place."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("parameter/gradient/state length mismatch")
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
    state.t += 1
    c1 = 1.0 - beta1 ** state.t
    c2 = 1.0 - beta2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)


# --- prediction model -------------------------------------------------------

@dataclass
class TrainConfig:
    units: int = 16
    epochs: int = 100
    batch_size: int = 10
    learning_rate: float = 1e-3
    window: int = 20
    train_split: float = 0.8


class PredictorModel:
    """Nested-LSTM next-step inflow model with persistent runtime state.

    Prediction methods are pure (they never move the runtime state); only
    `online_update` consumes observations, taking one Adam step per pair
    and advancing the state with the pre-update weights.
    """

    def __init__(self, cell: NlstmCell, w_out: np.ndarray, b_out: np.ndarray,
                 scale: np.ndarray, adam: AdamState, seed: int,
                 learning_rate: float = 1e-3):
        self.cell = cell
        self.w_out = w_out
        self.b_out = b_out
        self.scale = scale
        self.adam = adam
        self.seed = seed
        self.learning_rate = learning_rate
        self.state = cell.zero_state(1)

    @classmethod
    def new(cls, seed: int, depth: int = 1, hidden_size: int = 16,
            input_size: int = 4, learning_rate: float = 1e-3) -> "PredictorModel":
        rng = np.random.default_rng(seed)
        cell = NlstmCell(depth, hidden_size, input_size, rng)
        bound = 1.0 / np.sqrt(hidden_size)
        w_out = rng.uniform(-bound, bound, size=(hidden_size, input_size))
        b_out = np.zeros(input_size)
        adam = AdamState.for_params(_interleave(cell) + [w_out, b_out])
        return cls(cell, w_out, b_out, np.ones(input_size), adam, seed, learning_rate)

    def parameters(self) -> list[np.ndarray]:
        return _interleave(self.cell) + [self.w_out, self.b_out]

    def clone(self) -> "PredictorModel":
        return copy.deepcopy(self)

    def reset_state(self) -> None:
        self.state = self.cell.zero_state(1)

    def _normalize(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(1, -1)
        if x.shape[1] != self.cell.input_size:
            raise ValueError(f"expected {self.cell.input_size}-vector input")
        return x / self.scale

    def predict_next(self, x) -> np.ndarray:
        """One-step forecast; non-negative, in input units; state untouched."""
        return self.predict_horizon(x, 1)[0]

    def predict_horizon(self, x0, horizon: int) -> np.ndarray:
        """(horizon, dim) recursive forecast; the runtime state is restored."""
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        x = self._normalize(x0)
        st = self.state.copy()
        out = np.empty((horizon, self.cell.input_size))
        for k in range(horizon):
            h, st = self.cell.step(st, x)
            y = np.maximum(h @ self.w_out + self.b_out, 0.0)
            out[k] = y[0]
            x = y
        return out * self.scale

    def online_update(self, x_prev, x_obs) -> float:
        """Single-pair Adam step (x_prev -> x_obs); returns the pre-step MSE.

        The runtime state then advances by x_prev using the weights the
        forward pass was computed with.
        """
        xp = self._normalize(x_prev)
        xo = self._normalize(x_obs)
        cache: list = []
        h, new_state = self.cell.step(self.state, xp, cache)
        pred = h @ self.w_out + self.b_out
        r = pred - xo
        loss = float((r * r).mean())

        d = self.cell.depth
        grad_W = [np.zeros_like(w) for w in self.cell.W]
        grad_b = [np.zeros_like(b) for b in self.cell.b]
        dP = (2.0 / r.size) * r
        gw_out = h.T @ dP
        gb_out = dP.sum(axis=0)
        dh = dP @ self.w_out.T
        zero_c = [np.zeros_like(c) for c in self.state.cs]
        self.cell.backward_step(cache, dh, zero_c, grad_W, grad_b)
        grads = _zip_grads(grad_W, grad_b, d) + [gw_out, gb_out]
        adam_step(self.parameters(), grads, self.adam, lr=self.learning_rate)
        self.state = new_state
        return loss


def _interleave(cell: NlstmCell) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for w, b in zip(cell.W, cell.b):
        out.extend((w, b))
    return out


def _zip_grads(grad_W: list[np.ndarray], grad_b: list[np.ndarray], depth: int) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for l in range(depth):
        out.extend((grad_W[l], grad_b[l]))
    return out


def loss_and_gradients(model: PredictorModel, xs: np.ndarray, ys: np.ndarray,
                       ) -> tuple[float, list[np.ndarray]]:
    """Mean-squared next-step loss over (batch, steps, dim) sequences.

    Sequences start from a zero state; neither normalization nor the
    model's runtime state is involved. The gradient list parallels
    `model.parameters()`.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 3:
        raise ValueError("xs and ys must be matching (batch, steps, dim) arrays")
    batch, steps, _ = xs.shape
    cell = model.cell
    st = cell.zero_state(batch)
    caches = []
    hs = np.empty((batch, steps, cell.hidden_size))
    for t in range(steps):
        cache: list = []
        h, st = cell.step(st, xs[:, t], cache)
        caches.append(cache)
        hs[:, t] = h
    preds = hs @ model.w_out + model.b_out
    r = preds - ys
    loss = float((r * r).mean())

    dP = (2.0 / r.size) * r
    gw_out = np.tensordot(hs, dP, axes=([0, 1], [0, 1]))
    gb_out = dP.sum(axis=(0, 1))
    dH = dP @ model.w_out.T
    grad_W = [np.zeros_like(w) for w in cell.W]
    grad_b = [np.zeros_like(b) for b in cell.b]
    dh_carry = np.zeros((batch, cell.hidden_size))
    dc_carry = [np.zeros((batch, cell.hidden_size)) for _ in range(cell.depth)]
    for t in range(steps - 1, -1, -1):
        dh = dH[:, t] + dh_carry
        dh_carry, dc_carry = cell.backward_step(caches[t], dh, dc_carry, grad_W, grad_b)
    grads = _zip_grads(grad_W, grad_b, cell.depth) + [gw_out, gb_out]
    return loss, grads


def train(model: PredictorModel, series: np.ndarray, cfg: TrainConfig) -> list[float]:
    """Batched next-step pre-training on the leading train_split of `series`.

    Sets the model's per-channel normalization from the training segment,
    then runs `cfg.epochs` passes over non-overlapping windows in a seeded
    shuffled order with `cfg.batch_size` windows per Adam step. Returns the
    per-epoch mean losses (normalized units). The runtime state is reset
    afterward.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim != 2 or series.shape[0] < 2:
        raise ValueError("series must be (n, dim) with n >= 2")
    split = int(round(series.shape[0] * cfg.train_split))
    split = min(max(split, 2), series.shape[0])
    seg = series[:split]

    scale = seg.max(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    model.scale = scale
    norm = seg / scale

    window = max(1, min(cfg.window, split - 1))
    starts = np.arange(0, split - window, window)
    if len(starts) == 0:
        starts = np.array([0])
    xs_all = np.stack([norm[s:s + window] for s in starts])
    ys_all = np.stack([norm[s + 1:s + window + 1] for s in starts])

    rng = np.random.default_rng([model.seed, 0x747261])
    losses: list[float] = []
    params = model.parameters()
    for _ in range(cfg.epochs):
        order = rng.permutation(len(starts))
        total, count = 0.0, 0
        for lo in range(0, len(order), cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            loss, grads = loss_and_gradients(model, xs_all[idx], ys_all[idx])
            adam_step(params, grads, model.adam, lr=cfg.learning_rate)
            total += loss * len(idx)
            count += len(idx)
        losses.append(total / count)
    model.reset_state()
    return losses


# --- checkpoints -------------------------------------------------------------

def save_checkpoint(model: PredictorModel, path) -> None:
    """Write an .npz checkpoint; loading reproduces predictions bitwise."""
    arrays = {
        "meta": np.array([model.cell.depth, model.cell.hidden_size,
                          model.cell.input_size, model.adam.t], dtype=np.int64),
        "seed": np.array([model.seed], dtype=np.uint64),
        "lr": np.array([model.learning_rate]),
        "w_out": model.w_out,
        "b_out": model.b_out,
        "scale": model.scale,
        "state_h": model.state.h,
    }
    for l in range(model.cell.depth):
        arrays[f"W{l}"] = model.cell.W[l]
        arrays[f"b{l}"] = model.cell.b[l]
        arrays[f"state_c{l}"] = model.state.cs[l]
    for i, (m, v) in enumerate(zip(model.adam.m, model.adam.v)):
        arrays[f"adam_m{i}"] = m
        arrays[f"adam_v{i}"] = v
    np.savez(path, **arrays)


def load_checkpoint(path) -> PredictorModel:
    with np.load(path) as data:
        depth, hidden, input_size, adam_t = (int(v) for v in data["meta"])
        cell = NlstmCell(depth, hidden, input_size)
        for l in range(depth):
            cell.W[l] = data[f"W{l}"].copy()
            cell.b[l] = data[f"b{l}"].copy()
        model = PredictorModel(
            cell,
            data["w_out"].copy(),
            data["b_out"].copy(),
            data["scale"].copy(),
            AdamState(m=[], v=[], t=adam_t),
            int(data["seed"][0]),
            learning_rate=float(data["lr"][0]),
        )
        n_params = len(model.parameters())
        model.adam.m = [data[f"adam_m{i}"].copy() for i in range(n_params)]
        model.adam.v = [data[f"adam_v{i}"].copy() for i in range(n_params)]
        model.state = CellState(data["state_h"].copy(),
                                [data[f"state_c{l}"].copy() for l in range(depth)])
    return model
