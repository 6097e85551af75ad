"""Dense 4D tensors, 1D parameter interpolation, and the PARC1 fixture format.

Everything downstream operates on (batch, channel, height, width) arrays in
row-major order with the width index fastest.  ``Tensor4`` is a thin wrapper
that pins down dtype, contiguity, and flat-offset semantics so the operator
modules never have to re-check them.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

DTYPE_NAMES = {"f32": np.dtype(np.float32), "f64": np.dtype(np.float64)}
_NAMES_BY_DTYPE = {v: k for k, v in DTYPE_NAMES.items()}

FIXTURE_MAGIC = b"PARC1"


def dtype_from_name(name: str) -> np.dtype:
    """Map a precision name ("f32" or "f64") to its numpy dtype."""
    try:
        return DTYPE_NAMES[name]
    except KeyError:
        raise ValueError(f"unknown precision {name!r}; expected one of {sorted(DTYPE_NAMES)}")


@dataclass(frozen=True)
class Tensor4:
    """A (B, C, H, W) array of float32 or float64 scalars.

    The wrapped array is always C-contiguous, so element (b, c, i, j) sits at
    flat offset ((b*C + c)*H + i)*W + j.  Construction validates rank, dtype,
    and that every extent is at least 1.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = self.data
        if not isinstance(arr, np.ndarray) or arr.ndim != 4:
            raise ValueError("Tensor4 wraps a rank-4 ndarray (batch, channel, height, width)")
        if arr.dtype not in _NAMES_BY_DTYPE:
            raise ValueError(f"unsupported dtype {arr.dtype}; use float32 or float64")
        if min(arr.shape) < 1:
            raise ValueError(f"every extent must be >= 1, got shape {arr.shape}")
        if not arr.flags.c_contiguous:
            object.__setattr__(self, "data", np.ascontiguousarray(arr))

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.data.shape

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def dtype_name(self) -> str:
        return _NAMES_BY_DTYPE[self.data.dtype]

    @classmethod
    def zeros(cls, shape: tuple[int, int, int, int], dtype="f64") -> "Tensor4":
        dt = dtype_from_name(dtype) if isinstance(dtype, str) else np.dtype(dtype)
        return cls(np.zeros(shape, dtype=dt))

    @classmethod
    def from_array(cls, arr) -> "Tensor4":
        """Wrap array-like data, promoting integer input to float64."""
        a = np.asarray(arr)
        if a.dtype not in _NAMES_BY_DTYPE:
            a = a.astype(np.float64)
        return cls(np.ascontiguousarray(a))

    def index(self, b: int, c: int, i: int, j: int) -> float:
        """Read one scalar with full range validation.

        Negative indices are rejected rather than wrapped; the operators own
        all wraparound semantics themselves.
        """
        for name, k, bound in zip("bcij", (b, c, i, j), self.shape):
            if not 0 <= k < bound:
                raise IndexError(f"index {name}={k} out of range [0, {bound})")
        return float(self.data[b, c, i, j])

    def flat(self) -> np.ndarray:
        """The underlying scalars as a 1D view in layout order."""
        return self.data.reshape(-1)


# ---------------------------------------------------------------------------
# Linear resampling of 1D parameter vectors.
#
# A stored vector of length K is stretched to any runtime length N by
# sampling at positions p*(K-1)/(N-1) for p = 0..N-1 (endpoints align).
# ---------------------------------------------------------------------------


def _interp_taps(k: int, n: int):
    """Source indices and blend fractions for resampling length k -> n."""
    if n == 1:
        return np.array([0]), np.array([0]), np.array([0.0])
    # Multiply before dividing so position n-1 lands on k-1 exactly.
    pos = np.arange(n) * (k - 1) / (n - 1)
    i0 = np.minimum(pos.astype(np.int64), k - 2) if k > 1 else np.zeros(n, np.int64)
    i1 = np.minimum(i0 + 1, k - 1)
    frac = np.clip(pos - i0, 0.0, 1.0)
    return i0, i1, frac


def interp_linear(v: np.ndarray, n: int) -> np.ndarray:
    """Resample a 1D vector to length n by endpoint-aligned linear blending.

    Exactness contracts: n == len(v) returns an identical copy, a constant
    vector stays exactly constant (the blend is computed as
    v[i0] + frac * (v[i1] - v[i0]), whose second term is exactly zero), and
    a length-1 source broadcasts its single value.

    Args:
        v: source vector, shape (K,), K >= 1.
        n: target length, >= 1.

    Returns:
        Resampled vector of shape (n,), same dtype as v.
    """
    v = np.asarray(v)
    if v.ndim != 1 or v.shape[0] < 1:
        raise ValueError("interp_linear expects a 1D vector with at least one entry")
    if n < 1:
        raise ValueError(f"target length must be >= 1, got {n}")
    k = v.shape[0]
    if n == k:
        return v.copy()
    if k == 1:
        return np.full(n, v[0], dtype=v.dtype)
    i0, i1, frac = _interp_taps(k, n)
    frac = frac.astype(v.dtype)
    return v[i0] + frac * (v[i1] - v[i0])


def interp_linear_adjoint(g: np.ndarray, k: int) -> np.ndarray:
    """Transpose of ``interp_linear``: scatter a length-n cotangent back to k.

    Row m of the implicit interpolation matrix holds (1 - frac_m) at i0 and
    frac_m at i1; the adjoint accumulates g through the same taps, so
    dot(interp_linear(v, n), g) == dot(v, interp_linear_adjoint(g, k)) up to
    roundoff for every v.

    Args:
        g: cotangent of the resampled vector, shape (n,).
        k: source length the gradient is scattered back to.

    Returns:
        Accumulated gradient of shape (k,), float64.
    """
    g = np.asarray(g, dtype=np.float64)
    if g.ndim != 1 or g.shape[0] < 1:
        raise ValueError("interp_linear_adjoint expects a 1D cotangent")
    if k < 1:
        raise ValueError(f"source length must be >= 1, got {k}")
    n = g.shape[0]
    out = np.zeros(k, dtype=np.float64)
    if n == k:
        out += g
        return out
    if k == 1:
        out[0] = g.sum()
        return out
    i0, i1, frac = _interp_taps(k, n)
    np.add.at(out, i0, (1.0 - frac) * g)
    np.add.at(out, i1, frac * g)
    return out


def interp_rows(m: np.ndarray, n: int) -> np.ndarray:
    """Apply ``interp_linear`` to every row of a 2D (or stacked) array."""
    m = np.asarray(m)
    k = m.shape[-1]
    if n == k:
        return m.copy()
    if k == 1:
        return np.broadcast_to(m, m.shape[:-1] + (n,)).copy()
    i0, i1, frac = _interp_taps(k, n)
    frac = frac.astype(m.dtype)
    return m[..., i0] + frac * (m[..., i1] - m[..., i0])


# ---------------------------------------------------------------------------
# PARC1 fixture files: magic, little-endian u32 header length, JSON header,
# then raw little-endian scalars in layout order.
# ---------------------------------------------------------------------------


def write_fixture(path, t: Tensor4) -> None:
    """Serialize a tensor to the PARC1 container at ``path``."""
    header = json.dumps(
        {"dtype": t.dtype_name, "shape": list(t.shape)},
        separators=(",", ":"), sort_keys=True,
    ).encode("ascii")
    wire = "<f4" if t.dtype_name == "f32" else "<f8"
    with open(path, "wb") as fh:
        fh.write(FIXTURE_MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(np.ascontiguousarray(t.data, dtype=wire).tobytes())


def read_fixture(path) -> Tensor4:
    """Load a PARC1 container, validating magic, header, and payload size."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:5] != FIXTURE_MAGIC:
        raise ValueError("not a PARC1 file (bad magic)")
    if len(blob) < 9:
        raise ValueError("truncated PARC1 file (missing header length)")
    (hlen,) = struct.unpack_from("<I", blob, 5)
    body = 9 + hlen
    if len(blob) < body:
        raise ValueError("truncated PARC1 file (header shorter than declared)")
    meta = json.loads(blob[9:body].decode("ascii"))
    dtype_name = meta["dtype"]
    shape = tuple(meta["shape"])
    if dtype_name not in DTYPE_NAMES or len(shape) != 4:
        raise ValueError(f"malformed PARC1 header: {meta}")
    wire = "<f4" if dtype_name == "f32" else "<f8"
    count = int(np.prod(shape))
    payload = blob[body:]
    expect = count * np.dtype(wire).itemsize
    if len(payload) != expect:
        raise ValueError(f"PARC1 payload holds {len(payload)} bytes, header implies {expect}")
    arr = np.frombuffer(payload, dtype=wire, count=count).reshape(shape)
    return Tensor4(arr.astype(DTYPE_NAMES[dtype_name]))
