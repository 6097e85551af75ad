"""Positional-aware circular convolution operators and their FFT twin.

Public surface, by layer:

- tensor: Tensor4 container, linear parameter interpolation, PARC1 fixtures.
- conv_baseline: zero-padded local convolutions used as baselines.
- parc_spatial: the circular operator, two spatial routes, analytic adjoint.
- fast_parc: self-contained FFT engine and the frequency-domain route.
- flops: exact multiplication-count model.
- bench: latency harness and crossover analysis.
- blocks: metaformer-style and convnet-style block assemblies.
"""

from .bench import BenchConfig, BenchRecord, crossover, run_bench
from .blocks import (
    ChannelAttentionParams,
    ConvNetMixerParams,
    MetaFormerBlockParams,
    channel_attention,
    convnet_mixer_forward,
    metaformer_block_forward,
)
from .conv_baseline import ZeroPadConvParams, conv1d_zeropad, dwconv2d_zeropad
from .fast_parc import FftPlan, Spectrum, dft_naive, fast_parc_forward, fft, get_plan, ifft
from .flops import (
    FlopsReport,
    complexity_curve,
    flops_conv2d_dense,
    flops_dwconv2d,
    flops_fast_parc,
    flops_parc,
    flops_self_attention_order,
)
from .parc_spatial import (
    ParCGrads,
    ParCParams,
    parc_backward,
    parc_forward,
    parc_forward_via_concat,
    random_params,
)
from .tensor import Tensor4, interp_linear, interp_linear_adjoint, read_fixture, write_fixture

__version__ = "0.1.0"

__all__ = [
    "BenchConfig", "BenchRecord", "ChannelAttentionParams", "ConvNetMixerParams",
    "FftPlan", "FlopsReport", "MetaFormerBlockParams", "ParCGrads", "ParCParams",
    "Spectrum", "Tensor4", "ZeroPadConvParams", "channel_attention",
    "complexity_curve", "conv1d_zeropad", "convnet_mixer_forward", "crossover",
    "dft_naive", "dwconv2d_zeropad", "fast_parc_forward", "fft",
    "flops_conv2d_dense", "flops_dwconv2d", "flops_fast_parc", "flops_parc",
    "flops_self_attention_order", "get_plan", "ifft", "interp_linear",
    "interp_linear_adjoint", "metaformer_block_forward", "parc_backward",
    "parc_forward", "parc_forward_via_concat", "random_params", "read_fixture",
    "run_bench", "write_fixture",
]
