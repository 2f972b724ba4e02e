"""Three-layer GRU sequence classifier, implemented from first principles.

Cell convention (pinned; all gradients and tests assume it):

    r   = sigmoid(W_r x + U_r h_prev + b_r)
    z   = sigmoid(W_z x + U_z h_prev + b_z)
    hc  = tanh(W_h x + U_h (r * h_prev) + b_h)
    h   = (1 - z) * h_prev + z * hc

so the update gate z weights the candidate state. Four inverted-dropout
layers sit after the input and after each GRU layer; the last one is
therefore the head's input. Classification reads the top layer's hidden
state at the final timestep through a dense head, and training minimizes
softmax cross-entropy. Everything runs in float64; gradients come from
backpropagation through time over the cached forward activations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit as sigmoid

from .errors import DimensionMismatch, StaleCache
from .keypoints import VECTOR_SIZE, ActionLabel, SampleSequence

NUM_LAYERS = 3
NUM_DROPOUT = 4
DEFAULT_DROPOUT = (0.2, 0.2, 0.2, 0.2)
DEFAULT_HIDDEN = 64

# Fixed per-layer tensor order, shared by the optimizer and the model file.
PARAM_FIELDS = ("W_r", "W_z", "W_h", "U_r", "U_z", "U_h", "b_r", "b_z", "b_h")


@dataclass
class GruLayerParams:
    """One layer's gate weights: W_* map the input, U_* the hidden state."""

    W_r: np.ndarray
    W_z: np.ndarray
    W_h: np.ndarray
    U_r: np.ndarray
    U_z: np.ndarray
    U_h: np.ndarray
    b_r: np.ndarray
    b_z: np.ndarray
    b_h: np.ndarray

    @property
    def hidden_dim(self) -> int:
        return self.U_r.shape[0]

    @property
    def input_dim(self) -> int:
        return self.W_r.shape[1]


@dataclass
class GruNetwork:
    """Stacked 3-layer GRU with a dense softmax head.

    dropout_rates has one entry per dropout layer: input, after layer 0,
    after layer 1, after layer 2 (before the head).
    """

    layers: list[GruLayerParams]
    head_W: np.ndarray
    head_b: np.ndarray
    dropout_rates: tuple[float, ...] = DEFAULT_DROPOUT

    def __post_init__(self):
        if len(self.layers) != NUM_LAYERS:
            raise ValueError(f"expected exactly {NUM_LAYERS} GRU layers, got {len(self.layers)}")
        self.dropout_rates = tuple(float(r) for r in self.dropout_rates)
        if len(self.dropout_rates) != NUM_DROPOUT:
            raise ValueError(f"expected {NUM_DROPOUT} dropout rates, got {len(self.dropout_rates)}")
        for r in self.dropout_rates:
            if not 0.0 <= r < 1.0:
                raise ValueError(f"dropout rate must lie in [0, 1), got {r}")

    @property
    def input_dim(self) -> int:
        return self.layers[0].input_dim

    @property
    def hidden_dim(self) -> int:
        return self.layers[0].hidden_dim

    @property
    def num_classes(self) -> int:
        return self.head_W.shape[0]


@dataclass
class Gradients:
    """Per-tensor gradients, shaped exactly like the network parameters."""

    layers: list[GruLayerParams]
    head_W: np.ndarray
    head_b: np.ndarray


def init_params(
    num_classes: int,
    input_dim: int = VECTOR_SIZE,
    hidden_dim: int = DEFAULT_HIDDEN,
    dropout_rates: tuple[float, ...] = DEFAULT_DROPOUT,
    seed: int = 0,
) -> GruNetwork:
    """Deterministically initialize a network.

    Each weight matrix draws from uniform(-s, s) with
    s = sqrt(6 / (fan_in + fan_out)); biases start at zero. The draw order
    (per layer: W_r, W_z, W_h, U_r, U_z, U_h; then the head) is fixed so a
    seed always reproduces the same parameters.
    """
    rng = np.random.default_rng(seed)

    def uniform(rows, cols):
        s = np.sqrt(6.0 / (rows + cols))
        return rng.uniform(-s, s, size=(rows, cols))

    layers = []
    in_dim = input_dim
    for _ in range(NUM_LAYERS):
        layers.append(
            GruLayerParams(
                W_r=uniform(hidden_dim, in_dim),
                W_z=uniform(hidden_dim, in_dim),
                W_h=uniform(hidden_dim, in_dim),
                U_r=uniform(hidden_dim, hidden_dim),
                U_z=uniform(hidden_dim, hidden_dim),
                U_h=uniform(hidden_dim, hidden_dim),
                b_r=np.zeros(hidden_dim),
                b_z=np.zeros(hidden_dim),
                b_h=np.zeros(hidden_dim),
            )
        )
        in_dim = hidden_dim
    return GruNetwork(
        layers=layers,
        head_W=uniform(num_classes, hidden_dim),
        head_b=np.zeros(num_classes),
        dropout_rates=dropout_rates,
    )


def zero_gradients(net: GruNetwork) -> Gradients:
    layers = [
        GruLayerParams(**{f: np.zeros_like(getattr(layer, f)) for f in PARAM_FIELDS})
        for layer in net.layers
    ]
    return Gradients(layers=layers, head_W=np.zeros_like(net.head_W), head_b=np.zeros_like(net.head_b))


def param_items(obj) -> list[tuple[str, np.ndarray]]:
    """All parameter (or gradient) tensors in the documented fixed order."""
    items = []
    for l, layer in enumerate(obj.layers):
        for f in PARAM_FIELDS:
            items.append((f"layers.{l}.{f}", getattr(layer, f)))
    items.append(("head_W", obj.head_W))
    items.append(("head_b", obj.head_b))
    return items


def _cell(params: GruLayerParams, x, h_prev):
    """One GRU step; returns (h, r, z, hc) for caching."""
    r = sigmoid(params.W_r @ x + params.U_r @ h_prev + params.b_r)
    z = sigmoid(params.W_z @ x + params.U_z @ h_prev + params.b_z)
    hc = np.tanh(params.W_h @ x + params.U_h @ (r * h_prev) + params.b_h)
    h = (1.0 - z) * h_prev + z * hc
    return h, r, z, hc


def gru_cell_forward(params: GruLayerParams, x: np.ndarray, h_prev: np.ndarray) -> np.ndarray:
    """Advance one layer's hidden state by a single timestep."""
    x = np.asarray(x, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    if x.shape != (params.input_dim,):
        raise DimensionMismatch(f"input shape {x.shape} does not match ({params.input_dim},)")
    if h_prev.shape != (params.hidden_dim,):
        raise DimensionMismatch(f"hidden shape {h_prev.shape} does not match ({params.hidden_dim},)")
    return _cell(params, x, h_prev)[0]


def _dropout_masks(net: GruNetwork, T: int, rng_seed: int):
    """Inverted-dropout masks, one (T, dim) array per dropout layer."""
    rng = np.random.default_rng(rng_seed)
    dims = [net.input_dim] + [net.hidden_dim] * NUM_LAYERS
    masks = []
    for dim, rate in zip(dims, net.dropout_rates):
        keep = rng.random((T, dim)) >= rate
        masks.append(keep.astype(np.float64) / (1.0 - rate))
    return masks


def forward(net: GruNetwork, seq, mode: str = "eval", rng_seed: int = 0):
    """Run the full stack over a sequence; returns (logits, cache).

    ``seq`` is a SampleSequence or a (T, input_dim) array. In train mode,
    dropout masks are drawn deterministically from ``rng_seed``; eval mode
    applies no dropout at all. The cache holds every activation the
    backward pass needs.
    """
    if isinstance(seq, SampleSequence):
        seq = seq.vectors
    x = np.asarray(seq, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.input_dim:
        raise DimensionMismatch(f"expected a (T, {net.input_dim}) sequence, got {x.shape}")
    if x.shape[0] < 1:
        raise DimensionMismatch("sequence must contain at least one timestep")
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")

    T = x.shape[0]
    H = net.hidden_dim
    masks = _dropout_masks(net, T, rng_seed) if mode == "train" else None

    inputs = []   # per layer: the (possibly dropped) input sequence
    rs, zs, hcs, hs = [], [], [], []
    layer_in = x * masks[0] if masks is not None else x
    for l, params in enumerate(net.layers):
        inputs.append(layer_in)
        r_l = np.empty((T, H))
        z_l = np.empty((T, H))
        hc_l = np.empty((T, H))
        h_l = np.empty((T, H))
        h = np.zeros(H)
        for t in range(T):
            h, r, z, hc = _cell(params, layer_in[t], h)
            r_l[t], z_l[t], hc_l[t], h_l[t] = r, z, hc, h
        rs.append(r_l)
        zs.append(z_l)
        hcs.append(hc_l)
        hs.append(h_l)
        layer_in = h_l * masks[l + 1] if masks is not None else h_l

    head_in = layer_in[T - 1]
    logits = net.head_W @ head_in + net.head_b
    cache = {
        "dims": (net.input_dim, net.hidden_dim, net.num_classes),
        "T": T,
        "mode": mode,
        "inputs": inputs,
        "r": rs,
        "z": zs,
        "hc": hcs,
        "h": hs,
        "masks": masks,
        "head_in": head_in,
    }
    return logits, cache


def softmax(logits: np.ndarray) -> np.ndarray:
    """Probabilities from logits, stabilized by max-subtraction."""
    shifted = logits - np.max(logits)
    e = np.exp(shifted)
    return e / np.sum(e)


def softmax_cross_entropy(logits: np.ndarray, label) -> tuple[float, np.ndarray]:
    """Loss and its gradient w.r.t. the logits for one labeled sample."""
    index = label.index if isinstance(label, ActionLabel) else int(label)
    if not 0 <= index < logits.shape[0]:
        raise DimensionMismatch(f"label index {index} out of range for {logits.shape[0]} classes")
    shifted = logits - np.max(logits)
    log_norm = np.log(np.sum(np.exp(shifted)))
    loss = float(log_norm - shifted[index])
    dlogits = np.exp(shifted - log_norm)
    dlogits[index] -= 1.0
    return loss, dlogits


def backward(net: GruNetwork, cache: dict, dlogits: np.ndarray) -> Gradients:
    """Backpropagate through time from the logits gradient.

    Replays the cached activations layer by layer (top first), timestep by
    timestep (last first), accumulating a gradient for every parameter
    tensor. Dropout masks recorded during the forward are re-applied on
    the way down.
    """
    if cache.get("dims") != (net.input_dim, net.hidden_dim, net.num_classes):
        raise StaleCache(
            f"cache dims {cache.get('dims')} do not match network "
            f"({net.input_dim}, {net.hidden_dim}, {net.num_classes})"
        )
    dlogits = np.asarray(dlogits, dtype=np.float64)
    if dlogits.shape != (net.num_classes,):
        raise DimensionMismatch(f"expected ({net.num_classes},) logits gradient, got {dlogits.shape}")

    T = cache["T"]
    masks = cache["masks"]
    grads = zero_gradients(net)

    grads.head_W += np.outer(dlogits, cache["head_in"])
    grads.head_b += dlogits

    # Gradient w.r.t. each layer's output sequence; the head only touches
    # the top layer's final step (through the last dropout mask).
    d_out = np.zeros((T, net.hidden_dim))
    d_head_in = net.head_W.T @ dlogits
    d_out[T - 1] = d_head_in * masks[NUM_LAYERS][T - 1] if masks is not None else d_head_in

    for l in range(NUM_LAYERS - 1, -1, -1):
        params = net.layers[l]
        g = grads.layers[l]
        x_l = cache["inputs"][l]
        r_l, z_l, hc_l, h_l = cache["r"][l], cache["z"][l], cache["hc"][l], cache["h"][l]

        d_x = np.empty_like(x_l)
        carry = np.zeros(net.hidden_dim)
        for t in range(T - 1, -1, -1):
            dh = d_out[t] + carry
            h_prev = h_l[t - 1] if t > 0 else np.zeros(net.hidden_dim)
            r, z, hc = r_l[t], z_l[t], hc_l[t]

            # h = (1 - z) h_prev + z hc
            dz = dh * (hc - h_prev)
            dhc = dh * z
            dprev = dh * (1.0 - z)

            # hc = tanh(a_h), a_h = W_h x + U_h (r h_prev) + b_h
            da_h = dhc * (1.0 - hc * hc)
            g.W_h += np.outer(da_h, x_l[t])
            g.U_h += np.outer(da_h, r * h_prev)
            g.b_h += da_h
            d_rh = params.U_h.T @ da_h
            dr = d_rh * h_prev
            dprev += d_rh * r

            # z = sigmoid(a_z), a_z = W_z x + U_z h_prev + b_z
            da_z = dz * z * (1.0 - z)
            g.W_z += np.outer(da_z, x_l[t])
            g.U_z += np.outer(da_z, h_prev)
            g.b_z += da_z
            dprev += params.U_z.T @ da_z

            # r = sigmoid(a_r), a_r = W_r x + U_r h_prev + b_r
            da_r = dr * r * (1.0 - r)
            g.W_r += np.outer(da_r, x_l[t])
            g.U_r += np.outer(da_r, h_prev)
            g.b_r += da_r
            dprev += params.U_r.T @ da_r

            d_x[t] = params.W_h.T @ da_h + params.W_z.T @ da_z + params.W_r.T @ da_r
            carry = dprev

        if l > 0:
            d_out = d_x * masks[l] if masks is not None else d_x

    return grads
