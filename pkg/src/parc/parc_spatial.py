"""Global circular correlation with a learned per-position input offset.

The operator sweeps one spatial axis (H or V) with a kernel as long as that
axis, wrapping indices modulo the axis length, after adding a position
embedding to the input.  Kernel and embedding are stored at a fixed meta
length and stretched to the runtime extent by linear interpolation, so one
parameter set serves any input size.

Two spatial implementations are provided on purpose: ``parc_forward``
gathers with explicit modulo indexing, ``parc_forward_via_concat`` extends
the input periodically and runs a valid correlation over the extension.
Both accumulate taps in the same order, so their outputs agree bit for bit.
A frequency-domain route lives in ``fast_parc``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._threads import run_sliced
from .tensor import Tensor4, interp_linear_adjoint, interp_rows

_AXIS = {"H": 2, "V": 3}
DEFAULT_META_LEN = 14


def sweep_axis(orientation: str) -> int:
    """Array axis swept by the given orientation: H -> 2 (height), V -> 3."""
    try:
        return _AXIS[orientation]
    except KeyError:
        raise ValueError(f"orientation must be 'H' or 'V', got {orientation!r}")


@dataclass
class ParCParams:
    """Learnable state of one circular-correlation layer.

    Depthwise mode holds one kernel row per channel: meta_kernel (C, K),
    meta_pe (C, K_pe), bias (C,).  Dense mode mixes channels: meta_kernel
    (C_out, C_in, K), meta_pe (C_in, K_pe), bias (C_out,).  All values are
    kept as float64 and must be finite.

    Treat instances as immutable after construction; the two trailing dicts
    cache per-(length, dtype) resolved parameters and weight spectra.
    """

    mode: str
    orientation: str
    meta_kernel: np.ndarray
    meta_pe: np.ndarray
    bias: np.ndarray
    _resolved: dict = field(default_factory=dict, repr=False, compare=False)
    _spectra: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.mode not in ("depthwise", "dense"):
            raise ValueError(f"mode must be 'depthwise' or 'dense', got {self.mode!r}")
        sweep_axis(self.orientation)
        mk = np.asarray(self.meta_kernel, dtype=np.float64)
        pe = np.asarray(self.meta_pe, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        want = 2 if self.mode == "depthwise" else 3
        if mk.ndim != want or min(mk.shape) < 1:
            raise ValueError(f"{self.mode} meta_kernel must have rank {want} with positive extents")
        if pe.ndim != 2 or min(pe.shape) < 1:
            raise ValueError("meta_pe must be (channels_in, K_pe)")
        if b.ndim != 1:
            raise ValueError("bias must be a vector")
        c_in = mk.shape[0] if self.mode == "depthwise" else mk.shape[1]
        c_out = mk.shape[0]
        if pe.shape[0] != c_in:
            raise ValueError(f"meta_pe carries {pe.shape[0]} channels, kernel implies {c_in}")
        if b.shape[0] != c_out:
            raise ValueError(f"bias carries {b.shape[0]} channels, kernel implies {c_out}")
        for name, arr in (("meta_kernel", mk), ("meta_pe", pe), ("bias", b)):
            if not np.isfinite(arr).all():
                raise ValueError(f"{name} contains non-finite values")
        self.meta_kernel = mk
        self.meta_pe = pe
        self.bias = b

    @property
    def channels_in(self) -> int:
        return self.meta_pe.shape[0]

    @property
    def channels_out(self) -> int:
        return self.bias.shape[0]

    @property
    def k_meta(self) -> int:
        return self.meta_kernel.shape[-1]

    def resolved(self, n: int, dtype_name: str):
        """Kernel, PE, and bias stretched to sweep length n and cast.

        Interpolation runs in float64 and the result is cached per
        (n, dtype_name), so repeated calls at one resolution are free.
        """
        key = (n, dtype_name)
        hit = self._resolved.get(key)
        if hit is None:
            dt = np.float32 if dtype_name == "f32" else np.float64
            hit = (
                interp_rows(self.meta_kernel, n).astype(dt),
                interp_rows(self.meta_pe, n).astype(dt),
                self.bias.astype(dt),
            )
            self._resolved[key] = hit
        return hit


def random_params(
    rng: np.random.Generator,
    channels: int,
    *,
    orientation: str = "H",
    mode: str = "depthwise",
    channels_out: int | None = None,
    k_meta: int = DEFAULT_META_LEN,
    kernel_scale: float = 1.0,
    pe_scale: float = 0.1,
    bias_scale: float = 0.1,
) -> ParCParams:
    """Uniformly random parameters, scaled per group for test conditioning."""
    if mode == "depthwise":
        mk = rng.uniform(-1.0, 1.0, (channels, k_meta)) * kernel_scale
        c_out = channels
    else:
        c_out = channels_out if channels_out is not None else channels
        mk = rng.uniform(-1.0, 1.0, (c_out, channels, k_meta)) * kernel_scale
    pe = rng.uniform(-1.0, 1.0, (channels, k_meta)) * pe_scale
    b = rng.uniform(-1.0, 1.0, c_out) * bias_scale
    return ParCParams(mode, orientation, mk, pe, b)


# ---------------------------------------------------------------------------
# Forward
# ---------------------------------------------------------------------------


def _per_channel(vec: np.ndarray) -> np.ndarray:
    return vec.reshape(1, -1, 1, 1)


def _pe_block(pe_n: np.ndarray, axis: int) -> np.ndarray:
    return pe_n[None, :, :, None] if axis == 2 else pe_n[None, :, None, :]


def _axis_window(arr: np.ndarray, axis: int, start: int, stop: int) -> np.ndarray:
    sl = [slice(None)] * arr.ndim
    sl[axis] = slice(start, stop)
    return arr[tuple(sl)]


def _offset_input(x: Tensor4, p: ParCParams):
    if x.shape[1] != p.channels_in:
        raise ValueError(f"input carries {x.shape[1]} channels, params expect {p.channels_in}")
    axis = sweep_axis(p.orientation)
    n = x.shape[axis]
    kernel_n, pe_n, bias = p.resolved(n, x.dtype_name)
    xp = x.data + _pe_block(pe_n, axis)
    return axis, n, kernel_n, pe_n, bias, xp


def _accumulate(source, tap_of, out_shape, kernel_n, bias, mode, n, parallel):
    """Shared tap loop: tap_of(view, k) yields the k-shifted window of view.

    Both spatial routes funnel through here so the accumulation order, and
    therefore every intermediate rounding, is identical between them.
    """
    y = np.zeros(out_shape, dtype=source.dtype)
    if mode == "depthwise":

        def work(sl):
            src = source[:, sl]
            dst = y[:, sl]
            taps = kernel_n[sl]
            for k in range(n):
                dst += _per_channel(taps[:, k]) * tap_of(src, k)

        run_sliced(work, out_shape[1], parallel)
    else:
        for k in range(n):
            y += np.einsum("oi,bihw->bohw", kernel_n[:, :, k], tap_of(source, k))
    y += _per_channel(bias)
    return Tensor4(y)


def _out_shape(xp, mode, kernel_n):
    shape = list(xp.shape)
    if mode == "dense":
        shape[1] = kernel_n.shape[0]
    return tuple(shape)


def parc_forward(x: Tensor4, p: ParCParams, parallel: bool = False) -> Tensor4:
    """Circular correlation via explicit modulo gathers.

    Output position i along the swept axis is
    sum_k kernel[c, k] * (x + pe)[c, (k + i) mod N] + bias[c]; dense mode
    additionally contracts over input channels.  Output shape matches the
    input except that dense mode replaces C with channels_out.
    """
    axis, n, kernel_n, _, bias, xp = _offset_input(x, p)
    base = np.arange(n)

    def tap_of(view, k):
        return np.take(view, (base + k) % n, axis=axis)

    return _accumulate(xp, tap_of, _out_shape(xp, p.mode, kernel_n),
                       kernel_n, bias, p.mode, n, parallel)


def parc_forward_via_concat(x: Tensor4, p: ParCParams, parallel: bool = False) -> Tensor4:
    """Same operator computed over a periodic extension of the input.

    The offset input is concatenated with its own first N-1 positions along
    the swept axis (length 2N-1) and the kernel slides over that extension
    with no padding.  Independent of the modulo route in its indexing, yet
    bit-identical to it because the tap order matches.
    """
    axis, n, kernel_n, _, bias, xp = _offset_input(x, p)
    ext = np.concatenate([xp, _axis_window(xp, axis, 0, n - 1)], axis=axis)

    def tap_of(view, k):
        return _axis_window(view, axis, k, k + n)

    return _accumulate(ext, tap_of, _out_shape(xp, p.mode, kernel_n),
                       kernel_n, bias, p.mode, n, parallel)


# ---------------------------------------------------------------------------
# Backward
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ParCGrads:
    """Cotangents for every learnable input of the forward pass.

    d_kernel_n / d_pe_n are at the resolved sweep length; d_meta_kernel /
    d_meta_pe are pulled back through the interpolation adjoint.
    """

    d_input: Tensor4
    d_kernel_n: np.ndarray
    d_pe_n: np.ndarray
    d_bias: np.ndarray
    d_meta_kernel: np.ndarray
    d_meta_pe: np.ndarray


def _adjoint_rows(rows: np.ndarray, k: int) -> np.ndarray:
    lead = rows.shape[:-1]
    flat = rows.reshape(-1, rows.shape[-1])
    out = np.empty((flat.shape[0], k), dtype=np.float64)
    for r in range(flat.shape[0]):
        out[r] = interp_linear_adjoint(flat[r], k)
    return out.reshape(lead + (k,))


def parc_backward(x: Tensor4, p: ParCParams, dy: Tensor4) -> ParCGrads:
    """Analytic adjoint of ``parc_forward`` at the point (x, p).

    Given dY with the forward output's shape, returns dX (same shape as x),
    tap/embedding gradients at the resolved length, the bias gradient, and
    meta-length gradients obtained through ``interp_linear_adjoint``.
    """
    axis, n, kernel_n, _, _, xp = _offset_input(x, p)
    b, _, h, w = x.shape
    out_c = p.channels_out
    expect = (b, out_c, h, w)
    if dy.shape != expect:
        raise ValueError(f"dY shape {dy.shape} does not match forward output {expect}")
    g = dy.data.astype(np.float64, copy=False)
    xp64 = xp.astype(np.float64, copy=False)
    k64 = kernel_n.astype(np.float64, copy=False)
    base = np.arange(n)
    orth = 3 if axis == 2 else 2

    dxp = np.zeros(xp64.shape, dtype=np.float64)
    if p.mode == "depthwise":
        dwn = np.empty((out_c, n), dtype=np.float64)
        for k in range(n):
            shifted_x = np.take(xp64, (base + k) % n, axis=axis)
            dwn[:, k] = np.einsum("bchw,bchw->c", g, shifted_x)
            shifted_g = np.take(g, (base - k) % n, axis=axis)
            dxp += _per_channel(k64[:, k]) * shifted_g
    else:
        dwn = np.empty((out_c, p.channels_in, n), dtype=np.float64)
        for k in range(n):
            shifted_x = np.take(xp64, (base + k) % n, axis=axis)
            dwn[:, :, k] = np.einsum("bohw,bihw->oi", g, shifted_x)
            shifted_g = np.take(g, (base - k) % n, axis=axis)
            dxp += np.einsum("oi,bohw->bihw", k64[:, :, k], shifted_g)

    d_bias = g.sum(axis=(0, 2, 3))
    d_pe_n = dxp.sum(axis=(0, orth))
    return ParCGrads(
        d_input=Tensor4(dxp.astype(x.dtype)),
        d_kernel_n=dwn,
        d_pe_n=d_pe_n,
        d_bias=d_bias,
        d_meta_kernel=_adjoint_rows(dwn, p.meta_kernel.shape[-1]),
        d_meta_pe=_adjoint_rows(d_pe_n, p.meta_pe.shape[-1]),
    )
