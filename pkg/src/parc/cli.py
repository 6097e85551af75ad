"""Command-line front end: equivalence checks, FLOPs tables, benchmarks,
block demos, and fixture generation.

Exit codes: 0 on success, 1 when a verification (equiv) fails, 2 on usage
errors.  PARC_THREADS caps the worker count whenever --parallel is given.
"""

from __future__ import annotations

import csv
import hashlib
import sys

import click
import numpy as np

from . import bench as bench_mod
from . import blocks as blocks_mod
from .fast_parc import fast_parc_forward
from .flops import complexity_curve, write_curves_csv
from .parc_spatial import parc_forward, parc_forward_via_concat, random_params
from .rng import Xoshiro256
from .tensor import Tensor4, dtype_from_name, write_fixture


def _parse_ints(text: str, label: str) -> list[int]:
    items = [s.strip() for s in text.split(",") if s.strip()]
    try:
        values = [int(s) for s in items]
    except ValueError:
        raise click.UsageError(f"{label} must be comma-separated integers, got {text!r}")
    if any(v < 1 for v in values):
        raise click.UsageError(f"{label} entries must be >= 1, got {text!r}")
    return values


@click.group()
def main():
    """Circular-convolution operator toolkit."""


@main.command()
@click.option("--seed", default=0, show_default=True)
@click.option("--precision", default="f64", type=click.Choice(["f32", "f64"]), show_default=True)
@click.option("--resolutions", default="7,14,28,56", show_default=True)
@click.option("--channels", default=96, show_default=True)
@click.option("--batch", default=1, show_default=True)
def equiv(seed, precision, resolutions, channels, batch):
    """Cross-check the three operator implementations pairwise.

    Passes when, at every resolution, the worst pairwise max-abs error
    relative to the output scale stays below 1e-10 (f64) or 1e-5 (f32).
    """
    res_list = _parse_ints(resolutions, "--resolutions")
    if not res_list:
        raise click.UsageError("--resolutions must name at least one size")
    limit = 1e-10 if precision == "f64" else 1e-5
    rng = np.random.default_rng(seed)
    failed = False
    for idx, n in enumerate(res_list):
        orientation = "H" if idx % 2 == 0 else "V"
        try:
            p = random_params(rng, channels, orientation=orientation, kernel_scale=1.0 / n)
            x = Tensor4(rng.standard_normal((batch, channels, n, n))
                        .astype(dtype_from_name(precision)))
            outs = {
                "spatial": parc_forward(x, p),
                "periodic-ext": parc_forward_via_concat(x, p),
                "frequency": fast_parc_forward(x, p),
            }
        except ValueError as e:
            raise click.UsageError(str(e))
        scale = max(1.0, float(np.abs(outs["spatial"].data).max()))
        names = list(outs)
        for a in range(len(names)):
            for b in range(a + 1, len(names)):
                diff = np.abs(outs[names[a]].data.astype(np.float64)
                              - outs[names[b]].data.astype(np.float64))
                max_abs = float(diff.max())
                mean_abs = float(diff.mean())
                rel = max_abs / scale
                ok = rel <= limit
                failed |= not ok
                click.echo(
                    f"res {n:>4} {orientation} {names[a]:>12} vs {names[b]:<12} "
                    f"max-abs {max_abs:.3e} mean-abs {mean_abs:.3e} "
                    f"{'ok' if ok else f'FAIL (rel {rel:.3e} > {limit:.0e})'}"
                )
    if failed:
        sys.exit(1)
    click.echo(f"all pairs within {limit:.0e} (relative to output scale)")


@main.command("flops")
@click.option("--ops", default="dw3,dw7,parc,fastparc", show_default=True)
@click.option("--channels", default=96, show_default=True)
@click.option("--resolutions", default="28,56,112,224", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None,
              help="CSV path; stdout when omitted.")
def flops_cmd(ops, channels, resolutions, out):
    """Emit mul-count curves as CSV (op,channels,resolution,mul_count)."""
    op_list = [s.strip() for s in ops.split(",") if s.strip()]
    res_list = _parse_ints(resolutions, "--resolutions")
    try:
        # materialize every row before emitting anything, so a bad op or
        # channel count cannot leave a half-written table behind
        rows = [(op, channels, r, count)
                for op in op_list
                for r, count in complexity_curve(op, channels, res_list)]
    except ValueError as e:
        raise click.UsageError(str(e))
    if out is None:
        writer = csv.writer(sys.stdout)
        writer.writerow(["op", "channels", "resolution", "mul_count"])
        writer.writerows(rows)
    else:
        write_curves_csv(out, op_list, channels, res_list)
        click.echo(f"wrote {out}")


@main.command("bench")
@click.option("--channels", default=96, show_default=True)
@click.option("--batch", default=1, show_default=True)
@click.option("--resolutions", default="28,56,112,224", show_default=True)
@click.option("--ops", default="dw3,dw7,parc,fastparc", show_default=True)
@click.option("--warmup", default=200, show_default=True)
@click.option("--iters", default=100, show_default=True)
@click.option("--precision", default="f32", type=click.Choice(["f32", "f64"]), show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None)
@click.option("--md", is_flag=True, help="Also print a markdown table.")
@click.option("--parallel", is_flag=True, help="Use the library's threaded path.")
@click.option("--trim", is_flag=True, help="Drop the fastest/slowest 5% of samples.")
def bench_cmd(channels, batch, resolutions, ops, warmup, iters, precision, seed,
              out, md, parallel, trim):
    """Time each op at each resolution; latency is host-specific by nature."""
    try:
        cfg = bench_mod.BenchConfig(
            batch=batch, channels=channels,
            resolutions=tuple(_parse_ints(resolutions, "--resolutions")),
            ops=tuple(s.strip() for s in ops.split(",") if s.strip()),
            warmup=warmup, iters=iters, precision=precision, seed=seed,
            parallel=parallel, trim=trim,
        )

        def progress(rec):
            click.echo(f"{rec.op:>9} @{rec.resolution:<4} "
                       f"{rec.latency_ms_mean:9.3f} ms ± {rec.latency_ms_std:.3f}")

        table = bench_mod.run_bench(cfg, progress=progress)
    except ValueError as e:
        raise click.UsageError(str(e))
    if out is not None:
        bench_mod.write_csv(table, out)
        click.echo(f"wrote {out}")
    if md:
        click.echo(bench_mod.to_markdown(table))
    present = {r.op for r in table}
    if {"parc", "fastparc"} <= present and len(cfg.resolutions) >= 2:
        n = bench_mod.crossover(table, "fastparc", "parc")
        click.echo(f"crossover (frequency beats spatial): "
                   f"{'none observed' if n is None else n}")


def _xoshiro_tensor(shape, seed, precision) -> Tensor4:
    gen = Xoshiro256(seed)
    count = int(np.prod(shape))
    data = gen.fill_signed(count).reshape(shape)
    return Tensor4(data.astype(dtype_from_name(precision)))


@main.command("demo-block")
@click.option("--block", type=click.Choice(["metaformer", "convnet"]), required=True)
@click.option("--shape", default="1,8,14,14", show_default=True, help="B,C,H,W")
@click.option("--seed", default=0, show_default=True)
def demo_block(block, shape, seed):
    """Run one block forward and report its receptive-field footprint."""
    dims = _parse_ints(shape, "--shape")
    if len(dims) != 4:
        raise click.UsageError(f"--shape must be B,C,H,W, got {shape!r}")
    b, c, h, w = dims
    x = _xoshiro_tensor((b, c, h, w), seed, "f64")
    rng = np.random.default_rng(seed + 1)
    try:
        if block == "metaformer":
            params = blocks_mod.random_metaformer(rng, c, hidden=2 * c, kernel_scale=0.5)
            fn = lambda t: blocks_mod.metaformer_block_forward(t, params)
        else:
            params = blocks_mod.random_convnet_mixer(rng, c, kernel_scale=0.5)
            fn = lambda t: blocks_mod.convnet_mixer_forward(t, params)
        y = fn(x)
    except ValueError as e:
        raise click.UsageError(str(e))
    digest = hashlib.sha256(y.data.tobytes()).hexdigest()
    click.echo(f"block {block} shape {tuple(y.shape)} checksum sha256:{digest[:16]}")
    click.echo(f"output mean {y.data.mean():+.6f} std {y.data.std():.6f}")

    ci, cj = h // 2, w // 2
    half = c // 2
    if block == "convnet":
        # Depthwise halves never mix channels, so probe each group separately.
        mask_h = blocks_mod.perturbation_support(fn, x, channel=0, i=ci, j=cj)
        mask_v = blocks_mod.perturbation_support(fn, x, channel=half, i=ci, j=cj)
        col = np.zeros((h, w), bool)
        col[:, cj] = True
        row = np.zeros((h, w), bool)
        row[ci, :] = True
        ok_h = (mask_h[0] == col).all() and not mask_h[1:].any()
        ok_v = (mask_v[half] == row).all() and not np.delete(mask_v, half, axis=0).any()
        click.echo(f"bumped (ch 0, {ci}, {cj}): {mask_h[0].sum()}/{h * w} positions "
                   f"moved in channel 0 (column {cj}), other channels untouched: "
                   f"{not mask_h[1:].any()}")
        click.echo(f"bumped (ch {half}, {ci}, {cj}): {mask_v[half].sum()}/{h * w} positions "
                   f"moved in channel {half} (row {ci}), other channels untouched: "
                   f"{not np.delete(mask_v, half, axis=0).any()}")
        ok = ok_h and ok_v
        shape_desc = "cruciform (own-channel column / row only)"
    else:
        mask = blocks_mod.perturbation_support(fn, x, channel=0, i=ci, j=cj)
        frac = mask.sum() / mask.size
        click.echo(f"bumped (ch 0, {ci}, {cj}): {frac:.1%} of all outputs moved")
        ok = bool(mask.all())
        shape_desc = "full plane across every channel"
    click.echo(f"footprint {shape_desc}: {'confirmed' if ok else 'NOT as expected'}")


@main.command("gen-fixture")
@click.option("--shape", required=True, help="B,C,H,W")
@click.option("--seed", default=0, show_default=True)
@click.option("--precision", default="f64", type=click.Choice(["f32", "f64"]), show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, writable=True), required=True)
def gen_fixture(shape, seed, precision, out):
    """Write a seeded pseudorandom tensor as a PARC1 fixture.

    Values come from xoshiro256** seeded through splitmix64, mapped to
    [-1, 1); the same flags always produce byte-identical files.
    """
    dims = _parse_ints(shape, "--shape")
    if len(dims) != 4:
        raise click.UsageError(f"--shape must be B,C,H,W, got {shape!r}")
    t = _xoshiro_tensor(tuple(dims), seed, precision)
    try:
        write_fixture(out, t)
    except OSError as e:
        raise click.ClickException(f"cannot write {out}: {e}")
    click.echo(f"wrote {out} ({t.dtype_name}, shape {t.shape})")


if __name__ == "__main__":
    main()
