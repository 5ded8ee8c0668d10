"""Dual-decoder 1-D U-Net with physics-informed losses and its training loop.

The network maps a normalized CARS spectrum to two outputs of the same
length: the resonant Raman estimate and the non-resonant background (NRB)
estimate.  A shared convolutional encoder feeds an attention bottleneck and
two identical decoder branches; skip connections concatenate encoder stages
into the decoder.  Training combines a data term with two physics terms: a
Kramers-Kronig consistency loss tying the Raman output to the Hilbert
transform of the background-subtracted input, and a first-difference
smoothness penalty on the background output.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import nn
from .errors import NonFiniteGradient, ShapeMismatch
from .nn.ops import BatchNormState
from .nn.tensor import Tensor, no_grad
from .spectra import Spectrum, default_grid, normalize
from .synth import Sample


@dataclass(frozen=True)
class RamPinnConfig:
    """Architecture and training knobs, with the published defaults."""

    input_length: int = 1000
    encoder_channels: tuple[int, ...] = (64, 128, 256, 512)
    decoder_channels: tuple[int, ...] = (256, 128, 64, 32)
    use_attention: bool = True
    width_multiplier: float = 1.0
    lambda_data: float = 10.0
    lambda_kk: float = 1.0
    lambda_smooth: float = 10.0
    lr: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 200
    patience: int = 20
    clip_norm: float = 1.0
    seed: int = 0
    kernel_size: int = 5

    def __post_init__(self):
        if not (0.0 < self.width_multiplier <= 1.0):
            raise ValueError("width_multiplier must lie in (0, 1]")
        if min(self.lambda_data, self.lambda_kk, self.lambda_smooth) < 0:
            raise ValueError("loss weights must be non-negative")
        if any(c <= 0 for c in self.encoder_channels + self.decoder_channels):
            raise ValueError("channel counts must be positive")

    def scaled(self, base: int) -> int:
        return max(1, int(round(base * self.width_multiplier)))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["encoder_channels"] = list(self.encoder_channels)
        d["decoder_channels"] = list(self.decoder_channels)
        return d

    @staticmethod
    def from_dict(d: dict) -> "RamPinnConfig":
        d = dict(d)
        d["encoder_channels"] = tuple(d.get("encoder_channels", (64, 128, 256, 512)))
        d["decoder_channels"] = tuple(d.get("decoder_channels", (256, 128, 64, 32)))
        return RamPinnConfig(**d)


# ---------------------------------------------------------------------------
# layers


def _he_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = math.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(np.float32)


class _Conv:
    def __init__(self, model: "RamPinnModel", name: str, cin: int, cout: int, k: int):
        rng = model._init_rng
        self.k = k
        self.weight = model.register(f"{name}.weight", _he_uniform(rng, (cout, cin, k), cin * k))
        self.bias = model.register(f"{name}.bias", np.zeros(cout, dtype=np.float32))

    def __call__(self, x: Tensor) -> Tensor:
        return nn.conv1d(x, self.weight.tensor, self.bias.tensor, padding=self.k // 2)


class _BatchNorm:
    def __init__(self, model: "RamPinnModel", name: str, channels: int):
        self.gamma = model.register(f"{name}.gamma", np.ones(channels, dtype=np.float32))
        self.beta = model.register(f"{name}.beta", np.zeros(channels, dtype=np.float32))
        self.state = BatchNormState(channels)
        model.bn_states[name] = self.state
        model.buffers[f"{name}.running_mean"] = self.state.running_mean
        model.buffers[f"{name}.running_var"] = self.state.running_var

    def __call__(self, x: Tensor, training: bool) -> Tensor:
        return nn.batchnorm1d(x, self.gamma.tensor, self.beta.tensor, self.state, training)


class _ConvBlock:
    """Convolution, batch normalisation, ReLU."""

    def __init__(self, model, name, cin, cout, k):
        self.conv = _Conv(model, f"{name}.conv", cin, cout, k)
        self.bn = _BatchNorm(model, f"{name}.bn", cout)

    def __call__(self, x: Tensor, training: bool) -> Tensor:
        return nn.relu(self.bn(self.conv(x), training))


class _Attention:
    def __init__(self, model, name, channels):
        rng = model._init_rng
        self.proj = {}
        for key in ("q", "k", "v"):
            w = model.register(f"{name}.w{key}", _he_uniform(rng, (channels, channels), channels))
            b = model.register(f"{name}.b{key}", np.zeros(channels, dtype=np.float32))
            self.proj[key] = (w, b)

    def __call__(self, x: Tensor) -> Tensor:
        (wq, bq), (wk, bk), (wv, bv) = self.proj["q"], self.proj["k"], self.proj["v"]
        return nn.self_attention_1d(
            x, wq.tensor, bq.tensor, wk.tensor, bk.tensor, wv.tensor, bv.tensor
        )


class _Decoder:
    """Four upsampling stages with encoder skips, then a 1x1 head with sigmoid."""

    def __init__(self, model, name, bottleneck_ch, enc_chs, dec_chs, k):
        self.blocks = []
        cin = bottleneck_ch
        skips = [enc_chs[3], enc_chs[2], enc_chs[1], None]
        for i, (cout, skip) in enumerate(zip(dec_chs, skips)):
            self.blocks.append(_ConvBlock(model, f"{name}.up{i + 1}", cin, cout, k))
            cin = cout + (skip or 0)
        self.head = _Conv(model, f"{name}.head", dec_chs[-1], 1, 1)

    def __call__(self, x: Tensor, skips: list[Tensor], training: bool, out_len: int) -> Tensor:
        # skips arrive deepest-first; the last stage has no skip
        for i, block in enumerate(self.blocks):
            x = nn.upsample_linear(x, 2)
            x = block(x, training)
            if i < len(skips):
                skip = skips[i]
                if x.data.shape[-1] != skip.data.shape[-1]:
                    x = nn.interpolate_linear(x, skip.data.shape[-1])
                x = nn.concat_channels(x, skip)
        out = nn.sigmoid(self.head(x))
        if out.data.shape[-1] != out_len:
            out = nn.interpolate_linear(out, out_len)
        return out


class RamPinnModel:
    """Shared encoder, attention bottleneck, and two decoder branches."""

    def __init__(self, config: RamPinnConfig):
        self.config = config
        self.params: dict[str, nn.Parameter] = {}
        self.buffers: dict[str, np.ndarray] = {}
        self.bn_states: dict[str, BatchNormState] = {}
        self._init_rng = np.random.default_rng([config.seed, 0])
        k = config.kernel_size
        enc = [config.scaled(c) for c in config.encoder_channels]
        dec = [config.scaled(c) for c in config.decoder_channels]
        self.enc_blocks = [
            _ConvBlock(self, f"enc{i + 1}", cin, cout, k)
            for i, (cin, cout) in enumerate(zip([1] + enc[:-1], enc))
        ]
        self.bottleneck_in = _ConvBlock(self, "bottleneck.conv1", enc[-1], enc[-1], k)
        self.attention = _Attention(self, "bottleneck.attn", enc[-1]) if config.use_attention else None
        self.bottleneck_out = _ConvBlock(self, "bottleneck.conv2", enc[-1], enc[-1], k)
        self.raman_decoder = _Decoder(self, "raman", enc[-1], enc, dec, k)
        self.nrb_decoder = _Decoder(self, "nrb", enc[-1], enc, dec, k)
        del self._init_rng

    # -- parameter plumbing -------------------------------------------------

    def register(self, name: str, data: np.ndarray) -> nn.Parameter:
        param = nn.Parameter(data, name)
        self.params[name] = param
        return param

    def parameter_list(self) -> list[nn.Parameter]:
        return list(self.params.values())

    def parameter_count(self) -> int:
        return sum(p.data.size for p in self.params.values())

    def state_arrays(self) -> dict[str, np.ndarray]:
        arrays = {f"param/{k}": v.data for k, v in self.params.items()}
        arrays.update({f"buffer/{k}": v for k, v in self.buffers.items()})
        return arrays

    def snapshot(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.state_arrays().items()}

    def restore(self, snapshot: dict[str, np.ndarray]) -> None:
        for key, value in snapshot.items():
            kind, name = key.split("/", 1)
            target = self.params[name].data if kind == "param" else self.buffers[name]
            target[...] = value

    def cast(self, dtype) -> "RamPinnModel":
        """Convert parameters, optimizer state and buffers to ``dtype``.

        Used for 64-bit shadow-mode gradient checks.
        """
        for p in self.params.values():
            p.tensor.data = p.tensor.data.astype(dtype)
            p.m = p.m.astype(dtype)
            p.v = p.v.astype(dtype)
            p.tensor.grad = None
        for name, state in self.bn_states.items():
            state.running_mean = state.running_mean.astype(dtype)
            state.running_var = state.running_var.astype(dtype)
            self.buffers[f"{name}.running_mean"] = state.running_mean
            self.buffers[f"{name}.running_var"] = state.running_var
        return self

    def save(self, path: str | Path) -> None:
        nn.save_arrays(path, self.state_arrays(), meta={"config": self.config.to_dict()})

    @staticmethod
    def load(path: str | Path) -> "RamPinnModel":
        arrays, meta = nn.load_arrays(path)
        model = RamPinnModel(RamPinnConfig.from_dict(meta["config"]))
        model.restore(arrays)
        return model

    # -- forward ------------------------------------------------------------

    def forward(self, x: Tensor, training: bool = False) -> tuple[Tensor, Tensor]:
        """Map a (batch, 1, length) input to (raman_hat, nrb_hat)."""
        if x.data.ndim != 3 or x.data.shape[1] != 1:
            raise ShapeMismatch(f"expected (B,1,L) input, got {x.data.shape}")
        if x.data.shape[-1] != self.config.input_length:
            raise ShapeMismatch(
                f"input length {x.data.shape[-1]} != configured {self.config.input_length}"
            )
        length = x.data.shape[-1]
        skips = []
        h = x
        for block in self.enc_blocks:
            h = block(h, training)
            skips.append(h)
            h = nn.avg_pool1d(h, 2)
        h = self.bottleneck_in(h, training)
        if self.attention is not None:
            h = self.attention(h)
        h = self.bottleneck_out(h, training)
        decoder_skips = [skips[3], skips[2], skips[1]]
        raman = self.raman_decoder(h, decoder_skips, training, length)
        nrb = self.nrb_decoder(h, decoder_skips, training, length)
        return raman, nrb

    def predict_arrays(self, x: np.ndarray, batch_size: int = 64) -> tuple[np.ndarray, np.ndarray]:
        """Eval-mode forward over (N, L) inputs, returned as float64 arrays."""
        x = np.asarray(x, dtype=np.float32)
        if x.ndim == 1:
            x = x[None, :]
        outs_r, outs_n = [], []
        with no_grad():
            for start in range(0, len(x), batch_size):
                chunk = x[start : start + batch_size][:, None, :]
                r, n = self.forward(Tensor(chunk), training=False)
                outs_r.append(r.data[:, 0, :].astype(np.float64))
                outs_n.append(n.data[:, 0, :].astype(np.float64))
        return np.concatenate(outs_r), np.concatenate(outs_n)


# ---------------------------------------------------------------------------
# losses


def loss_kk(raman_hat: Tensor, x: Tensor, nrb_hat: Tensor) -> Tensor:
    """Mean squared deviation of the Raman output from the KK target.

    The target is the imaginary part of the analytic signal of the
    background-subtracted input; gradients flow into both decoder outputs
    (through the transform's adjoint for the background).
    """
    residual = nn.sub(x, nrb_hat)
    target = nn.hilbert_im(residual)
    diff = nn.sub(raman_hat, target)
    return nn.mean_all(nn.mul(diff, diff))


def loss_smooth(nrb_hat: Tensor) -> Tensor:
    """Mean squared first difference of the background output."""
    d = nn.forward_diff(nrb_hat)
    return nn.mean_all(nn.mul(d, d))


def loss_total(
    raman_hat: Tensor,
    nrb_hat: Tensor,
    x: Tensor,
    y_true: Tensor | None = None,
    lambdas: tuple[float, float, float] = (10.0, 1.0, 10.0),
) -> tuple[Tensor, dict[str, float]]:
    """Weighted sum of data, KK and smoothness terms.

    Returns the scalar loss tensor and the raw (unweighted) component values.
    When no labels are given the data term contributes zero.
    """
    lam_data, lam_kk, lam_smooth = lambdas
    parts: dict[str, float] = {}
    kk = loss_kk(raman_hat, x, nrb_hat)
    smooth = loss_smooth(nrb_hat)
    parts["kk"] = kk.item()
    parts["smooth"] = smooth.item()
    total = nn.add(nn.scale(kk, lam_kk), nn.scale(smooth, lam_smooth))
    if y_true is not None and lam_data > 0:
        data = nn.mse(raman_hat, y_true)
        parts["data"] = data.item()
        total = nn.add(total, nn.scale(data, lam_data))
    else:
        parts["data"] = 0.0
    parts["total"] = total.item()
    return total, parts


# ---------------------------------------------------------------------------
# datasets and training


@dataclass
class ArrayDataset:
    """Input spectra and optional Raman labels as flat float arrays."""

    x: np.ndarray
    y: np.ndarray | None = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float32)
        if self.y is not None:
            self.y = np.asarray(self.y, dtype=np.float32)
            if self.y.shape != self.x.shape:
                raise ShapeMismatch("labels must match input shape")

    def __len__(self) -> int:
        return len(self.x)

    def subset(self, idx) -> "ArrayDataset":
        return ArrayDataset(self.x[idx], None if self.y is None else self.y[idx])


def dataset_from_samples(samples: list[Sample], with_labels: bool = True) -> ArrayDataset:
    x = np.stack([s.triple.cars.values for s in samples])
    y = np.stack([s.triple.raman.values for s in samples]) if with_labels else None
    return ArrayDataset(x, y)


@dataclass
class TrainHistory:
    """Per-epoch loss components; written as the training history CSV."""

    epochs: list[dict] = field(default_factory=list)
    best_epoch: int = -1
    aborted_epoch: int | None = None

    COLUMNS = ("epoch", "L_data", "L_KK", "L_smooth", "L_total_train", "L_total_val")

    def append(self, epoch, data, kk, smooth, total_train, total_val):
        self.epochs.append(
            {
                "epoch": epoch,
                "L_data": data,
                "L_KK": kk,
                "L_smooth": smooth,
                "L_total_train": total_train,
                "L_total_val": total_val,
            }
        )

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.COLUMNS)
            for row in self.epochs:
                writer.writerow([row["epoch"]] + [format(row[c], ".10g") for c in self.COLUMNS[1:]])


def _evaluate_loss(model: RamPinnModel, data: ArrayDataset, lambdas, batch_size: int) -> float:
    total = 0.0
    count = 0
    with no_grad():
        for start in range(0, len(data), batch_size):
            xb = data.x[start : start + batch_size][:, None, :]
            yb = None if data.y is None else Tensor(data.y[start : start + batch_size][:, None, :])
            raman, nrb = model.forward(Tensor(xb), training=False)
            _, parts = loss_total(raman, nrb, Tensor(xb), yb, lambdas)
            total += parts["total"] * len(xb)
            count += len(xb)
    return total / max(count, 1)


def train(
    model: RamPinnModel,
    train_set: ArrayDataset,
    val_set: ArrayDataset | None = None,
    config: RamPinnConfig | None = None,
) -> TrainHistory:
    """Mini-batch training with early stopping on the validation loss.

    When no validation set is given, the last 10% of the training split is
    held out.  The best-validation parameter snapshot is restored before
    returning.  A non-finite gradient restores that snapshot and re-raises
    :class:`NonFiniteGradient` tagged with the epoch.
    """
    cfg = config or model.config
    if len(train_set) == 0:
        raise ValueError("training set is empty")
    if val_set is None:
        n_val = max(1, len(train_set) // 10)
        if len(train_set) > n_val:
            val_set = train_set.subset(slice(len(train_set) - n_val, None))
            train_set = train_set.subset(slice(0, len(train_set) - n_val))
        else:
            val_set = train_set
    lambdas = (cfg.lambda_data, cfg.lambda_kk, cfg.lambda_smooth)
    params = model.parameter_list()
    shuffle_rng = np.random.default_rng([cfg.seed, 1])
    history = TrainHistory()
    best_val = math.inf
    best_snapshot = model.snapshot()
    stale = 0
    for epoch in range(1, cfg.max_epochs + 1):
        order = shuffle_rng.permutation(len(train_set))
        sums = {"data": 0.0, "kk": 0.0, "smooth": 0.0, "total": 0.0}
        seen = 0
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            xb = train_set.x[idx][:, None, :]
            yb = None if train_set.y is None else Tensor(train_set.y[idx][:, None, :])
            x_t = Tensor(xb)
            nn.zero_grad(params)
            raman, nrb = model.forward(x_t, training=True)
            total, parts = loss_total(raman, nrb, x_t, yb, lambdas)
            total.backward()
            try:
                nn.adam_step(params, lr=cfg.lr, clip_norm=cfg.clip_norm)
            except NonFiniteGradient:
                model.restore(best_snapshot)
                history.aborted_epoch = epoch
                err = NonFiniteGradient("training diverged", epoch=epoch)
                err.history = history
                raise err
            for key in sums:
                sums[key] += parts[key] * len(idx)
            seen += len(idx)
        val_loss = _evaluate_loss(model, val_set, lambdas, cfg.batch_size)
        history.append(
            epoch,
            sums["data"] / seen,
            sums["kk"] / seen,
            sums["smooth"] / seen,
            sums["total"] / seen,
            val_loss,
        )
        if val_loss < best_val:
            best_val = val_loss
            best_snapshot = model.snapshot()
            history.best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    model.restore(best_snapshot)
    return history


# ---------------------------------------------------------------------------
# inference


def predict(model: RamPinnModel, cars: Spectrum | np.ndarray) -> tuple[Spectrum, Spectrum]:
    """Run the model on one spectrum of any length.

    The input is linearly resampled to the model's native length if needed,
    and the normalized outputs are mapped back onto the input's grid.
    """
    if isinstance(cars, Spectrum):
        grid, values = cars.grid, cars.values
    else:
        values = np.asarray(cars, dtype=np.float64)
        grid = default_grid(len(values))
    native = model.config.input_length
    axis_in = grid.points
    if grid.length != native:
        axis_native = default_grid(native).points
        resampled = np.interp(axis_native, axis_in, values)
    else:
        axis_native = axis_in
        resampled = values
    raman, nrb = model.predict_arrays(resampled.astype(np.float32))
    raman, nrb = raman[0], nrb[0]
    if grid.length != native:
        raman = np.interp(axis_in, axis_native, raman)
        nrb = np.interp(axis_in, axis_native, nrb)
    return (
        normalize(Spectrum(grid, raman)),
        normalize(Spectrum(grid, nrb)),
    )
