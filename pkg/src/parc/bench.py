"""Single-operator latency harness with CSV/markdown reporting.

Each (op, resolution) pair gets one random input allocated up front, a
untimed warmup run, then individually timed iterations on a monotonic clock.
Reported spread is the population standard deviation; optional trimming
drops the fastest and slowest 5% before aggregating.  The circular ops time
the composite used in real blocks: half the channels swept along H, half
along V ("parc" runs the periodic-extension spatial route, "fastparc" the
frequency route), so their mul_count matches the model in ``flops``.
"""

from __future__ import annotations

import csv
import platform
import time
from dataclasses import dataclass

import numpy as np

from .conv_baseline import ZeroPadConvParams, dwconv2d_zeropad
from .fast_parc import fast_parc_forward
from .flops import format_mega, op_mul_count
from .parc_spatial import parc_forward_via_concat, random_params
from .tensor import Tensor4, dtype_from_name

CSV_HEADER = [
    "op", "resolution", "batch", "channels", "precision",
    "mul_count", "latency_ms_mean", "latency_ms_std", "iters", "host",
]


@dataclass
class BenchConfig:
    batch: int = 1
    channels: int = 96
    resolutions: tuple = (28, 56, 112, 224)
    ops: tuple = ("dw3", "dw7", "parc", "fastparc")
    warmup: int = 200
    iters: int = 100
    precision: str = "f32"
    seed: int = 0
    parallel: bool = False
    trim: bool = False

    def __post_init__(self):
        if self.warmup < 1 or self.iters < 1:
            raise ValueError("warmup and iters must be >= 1")
        dtype_from_name(self.precision)


@dataclass(frozen=True)
class BenchRecord:
    op: str
    resolution: int
    batch: int
    channels: int
    precision: str
    mul_count: int
    latency_ms_mean: float
    latency_ms_std: float
    iters: int
    host: str


def host_descriptor() -> str:
    return f"{platform.node() or 'unknown'}/{platform.system()}-{platform.machine()}"


def _make_runner(op: str, cfg: BenchConfig, resolution: int):
    """Closure executing one forward pass; inputs pre-allocated, untimed."""
    n = resolution
    rng = np.random.default_rng(cfg.seed * 1_000_003 + n)
    x = Tensor4(rng.standard_normal((cfg.batch, cfg.channels, n, n))
                .astype(dtype_from_name(cfg.precision)))
    if op.startswith("dw") and op[2:].isdigit():
        k = int(op[2:])
        p = ZeroPadConvParams(rng.uniform(-1, 1, (cfg.channels, k, k)) / (k * k),
                              pad=(k - 1) // 2, orientation="2D")
        return lambda: dwconv2d_zeropad(x, p)
    if op in ("parc", "fastparc"):
        if cfg.channels % 2:
            raise ValueError(f"op {op!r} needs an even channel count, got {cfg.channels}")
        half = cfg.channels // 2
        ph = random_params(rng, half, orientation="H", kernel_scale=1.0 / n)
        pv = random_params(rng, half, orientation="V", kernel_scale=1.0 / n)
        xh = Tensor4(np.ascontiguousarray(x.data[:, :half]))
        xv = Tensor4(np.ascontiguousarray(x.data[:, half:]))
        fwd = parc_forward_via_concat if op == "parc" else fast_parc_forward

        def run():
            fwd(xh, ph, parallel=cfg.parallel)
            fwd(xv, pv, parallel=cfg.parallel)

        return run
    raise ValueError(f"unknown op {op!r}; expected dw<K> (e.g. dw3, dw7), parc, or fastparc")


def _aggregate(samples_ms: np.ndarray, trim: bool):
    if trim and samples_ms.size >= 20:
        k = samples_ms.size // 20
        samples_ms = np.sort(samples_ms)[k:samples_ms.size - k]
    return float(samples_ms.mean()), float(samples_ms.std())


def run_bench(cfg: BenchConfig, progress=None) -> list[BenchRecord]:
    """Time every (op, resolution) pair in cfg; see the module docstring.

    progress, when given, is called with each finished BenchRecord.
    """
    host = host_descriptor()
    table = []
    for op in cfg.ops:
        # Fail on bad names before any allocation or timing happens.
        for n in cfg.resolutions:
            op_mul_count(op, cfg.channels, n)
    for op in cfg.ops:
        for n in cfg.resolutions:
            run = _make_runner(op, cfg, n)
            for _ in range(cfg.warmup):
                run()
            samples = np.empty(cfg.iters)
            for i in range(cfg.iters):
                t0 = time.perf_counter()
                run()
                samples[i] = (time.perf_counter() - t0) * 1e3
            mean, std = _aggregate(samples, cfg.trim)
            rec = BenchRecord(
                op=op, resolution=n, batch=cfg.batch, channels=cfg.channels,
                precision=cfg.precision, mul_count=op_mul_count(op, cfg.channels, n),
                latency_ms_mean=mean, latency_ms_std=std, iters=cfg.iters, host=host,
            )
            table.append(rec)
            if progress is not None:
                progress(rec)
    return table


def crossover(table: list[BenchRecord], op_a: str, op_b: str):
    """Smallest shared resolution where op_a's mean is strictly below op_b's.

    Returns None when op_a never wins; raises when fewer than two shared
    resolutions exist to compare.
    """
    mean_a = {r.resolution: r.latency_ms_mean for r in table if r.op == op_a}
    mean_b = {r.resolution: r.latency_ms_mean for r in table if r.op == op_b}
    shared = sorted(set(mean_a) & set(mean_b))
    if len(shared) < 2:
        raise ValueError(f"need {op_a!r} and {op_b!r} at >= 2 shared resolutions, have {len(shared)}")
    for n in shared:
        if mean_a[n] < mean_b[n]:
            return n
    return None


def write_csv(table: list[BenchRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in table:
            writer.writerow([
                r.op, r.resolution, r.batch, r.channels, r.precision, r.mul_count,
                f"{r.latency_ms_mean:.6f}", f"{r.latency_ms_std:.6f}", r.iters, r.host,
            ])


def to_markdown(table: list[BenchRecord]) -> str:
    lines = [
        "| op | resolution | mul_count | latency (ms) |",
        "| --- | --- | --- | --- |",
    ]
    for r in table:
        lines.append(
            f"| {r.op} | {r.resolution} | {format_mega(r.mul_count)} "
            f"| {r.latency_ms_mean:.3f} ± {r.latency_ms_std:.3f} |"
        )
    return "\n".join(lines) + "\n"
