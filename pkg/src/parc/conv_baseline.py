"""Zero-padded sliding-window convolutions used as local-operator baselines.

These are correlation-convention (no kernel flip), per-channel operators:
the 1D form slides along H or V, the 2D form is the familiar depthwise KxK
layer.  They exist to contrast local receptive fields with the global
circular operators and to feed the latency benchmark.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import Tensor4

_AXIS = {"H": 2, "V": 3}


@dataclass(frozen=True)
class ZeroPadConvParams:
    """Per-channel taps, symmetric zero padding, and the swept orientation.

    kernel: (C, K) with orientation "H" or "V", (C, K, K) with "2D".
    pad: zeros added on both ends of each swept axis.
    """

    kernel: np.ndarray
    pad: int
    orientation: str = "H"

    def __post_init__(self):
        k = np.asarray(self.kernel, dtype=np.float64)
        if self.orientation not in ("H", "V", "2D"):
            raise ValueError(f"orientation must be 'H', 'V', or '2D', got {self.orientation!r}")
        want = 3 if self.orientation == "2D" else 2
        if k.ndim != want or min(k.shape) < 1:
            raise ValueError(f"orientation {self.orientation} needs a rank-{want} kernel")
        if k.ndim == 3 and k.shape[1] != k.shape[2]:
            raise ValueError("2D kernels must be square")
        if not np.isfinite(k).all():
            raise ValueError("kernel contains non-finite values")
        if self.pad < 0:
            raise ValueError("pad must be >= 0")
        object.__setattr__(self, "kernel", k)

    @property
    def channels(self) -> int:
        return self.kernel.shape[0]

    @property
    def taps(self) -> int:
        return self.kernel.shape[1]


def _check_channels(x: Tensor4, p: ZeroPadConvParams) -> None:
    if x.shape[1] != p.channels:
        raise ValueError(f"input carries {x.shape[1]} channels, kernel {p.channels}")


def conv1d_zeropad(x: Tensor4, p: ZeroPadConvParams) -> Tensor4:
    """Per-channel 1D correlation along the configured axis with zero padding.

    Output position i along the swept axis reads input positions
    i - pad .. i - pad + K - 1, out-of-range taps contributing zero, so the
    swept extent becomes N - K + 2*pad + 1 (input-sized when pad=(K-1)/2).
    The other three axes pass through unchanged.
    """
    if p.orientation not in _AXIS:
        raise ValueError("conv1d_zeropad needs orientation 'H' or 'V'")
    _check_channels(x, p)
    axis = _AXIS[p.orientation]
    n = x.shape[axis]
    k, pad = p.taps, p.pad
    out_len = n - k + 2 * pad + 1
    if out_len < 1:
        raise ValueError(f"kernel of {k} taps with pad {pad} leaves no output on extent {n}")

    widths = [(0, 0)] * 4
    widths[axis] = (pad, pad)
    xpad = np.pad(x.data, widths)
    shape = list(x.shape)
    shape[axis] = out_len
    y = np.zeros(shape, dtype=x.dtype)
    taps = p.kernel.astype(x.dtype)
    for j in range(k):
        sl = [slice(None)] * 4
        sl[axis] = slice(j, j + out_len)
        y += taps[:, j].reshape(1, -1, 1, 1) * xpad[tuple(sl)]
    return Tensor4(y)


def dwconv2d_zeropad(x: Tensor4, p: ZeroPadConvParams) -> Tensor4:
    """Depthwise same-size KxK correlation over (H, W), zero padded.

    Requires orientation "2D", odd K, and pad = (K - 1) / 2, the only
    configuration the benchmark table exercises.
    """
    if p.orientation != "2D":
        raise ValueError("dwconv2d_zeropad needs orientation '2D'")
    _check_channels(x, p)
    k, pad = p.taps, p.pad
    if k % 2 == 0 or pad != (k - 1) // 2:
        raise ValueError(f"same-size depthwise conv needs odd K and pad (K-1)/2, got K={k} pad={pad}")

    xpad = np.pad(x.data, [(0, 0), (0, 0), (pad, pad), (pad, pad)])
    h, w = x.shape[2], x.shape[3]
    y = np.zeros(x.shape, dtype=x.dtype)
    taps = p.kernel.astype(x.dtype)
    for r in range(k):
        for s in range(k):
            y += taps[:, r, s].reshape(1, -1, 1, 1) * xpad[:, :, r:r + h, s:s + w]
    return Tensor4(y)
