"""Inference for the two tiny auxiliary networks.

The coring-refinement net is an 11-layer, 40-channel, bias-free 3-D conv
stack split into two stages. Stage 1 treats each block independently
(batch = all blocks of one frame grid, channels = temporal taps, spatial =
colour x block rows x block cols). Stage 2 regroups the tensor so that
every within-block pixel becomes a batch item and the grid of overlapping
blocks becomes the spatial extent, letting the net exploit inter-block
context. The last layer of each stage has no activation.

The blind noise net is four bias-free 2-D convs (three activations) from a
3-channel frame to a per-pixel noise-STD map, made nonnegative by absolute
value.

Weight names in a bundle: "coring.s1.k{i}", "coring.s2.k{i}", "noise.k{i}",
optional scalar "meta.leaky_slope".
"""

from dataclasses import dataclass

import numpy as np

from .tensor_core import ConvLayer, conv_forward, count_params, rearrange

__all__ = [
    "CoringNet",
    "NoiseNet",
    "build_coring_net",
    "build_noise_net",
    "refine_gains",
    "estimate_noise_map",
    "coring_layout",
    "noise_layout",
    "make_coring_weights",
    "make_noise_weights",
]

CORING_WIDTH = 40
CORING_STAGE1_LAYERS = 6
CORING_STAGE2_LAYERS = 5
NOISE_CHANNELS = (3, 20, 20, 20, 1)

# Published parameter totals for the corresponding networks; our default
# layout is a reconstruction and lands at 324,000 / 7,920 (see count_params).
REPORTED_CORING_PARAMS = 279_315
REPORTED_NOISE_PARAMS = 8_280


@dataclass(frozen=True)
class CoringNet:
    stage1: tuple
    stage2: tuple
    taps: int

    @property
    def layers(self):
        return list(self.stage1) + list(self.stage2)

    @property
    def params(self):
        return count_params(self.layers)


@dataclass(frozen=True)
class NoiseNet:
    layers: tuple

    @property
    def params(self):
        return count_params(self.layers)


def coring_layout(taps=5, width=CORING_WIDTH):
    """Per-stage channel chains of the default coring net."""
    s1 = [taps] + [width] * (CORING_STAGE1_LAYERS - 1) + [taps]
    s2 = [taps] + [width] * (CORING_STAGE2_LAYERS - 1) + [taps]
    return s1, s2


def _identity_kernel(cout, cin, extents):
    k = np.zeros((cout, cin) + extents, dtype=np.float32)
    centre = tuple(e // 2 for e in extents)
    for j in range(min(cout, cin)):
        k[(j, j) + centre] = 1.0
    return k


def make_coring_weights(init="zero", taps=5, seed=0, scale=0.05):
    """Bundle entries for a coring net: init is zero, identity, or random.

    The identity net propagates its input unchanged: delta kernels copy
    channels through, and because classic gains are nonnegative the leaky
    activations never bend the pass-through path.
    """
    rng = np.random.default_rng(seed)
    bundle = {}
    for stage, chain in zip(("s1", "s2"), coring_layout(taps)):
        for i, (cin, cout) in enumerate(zip(chain[:-1], chain[1:])):
            shape = (cout, cin, 3, 3, 3)
            if init == "zero":
                k = np.zeros(shape, dtype=np.float32)
            elif init == "identity":
                k = _identity_kernel(cout, cin, (3, 3, 3))
            elif init == "random":
                k = rng.normal(0.0, scale, size=shape).astype(np.float32)
            else:
                raise ValueError(f"unknown init {init!r}")
            bundle[f"coring.{stage}.k{i}"] = k
    return bundle


def make_noise_weights(init="zero", seed=0, scale=0.05):
    rng = np.random.default_rng(seed)
    bundle = {}
    for i, (cin, cout) in enumerate(zip(NOISE_CHANNELS[:-1], NOISE_CHANNELS[1:])):
        shape = (cout, cin, 3, 3)
        if init == "zero":
            k = np.zeros(shape, dtype=np.float32)
        elif init == "random":
            k = rng.normal(0.0, scale, size=shape).astype(np.float32)
        else:
            raise ValueError(f"unknown init {init!r}")
        bundle[f"noise.k{i}"] = k
    return bundle


def _collect_stage(bundle, prefix):
    keys = []
    i = 0
    while f"{prefix}.k{i}" in bundle:
        keys.append(f"{prefix}.k{i}")
        i += 1
    extra = [k for k in bundle if k.startswith(prefix + ".k") and k not in keys]
    if extra:
        raise KeyError(f"missing tensor before {sorted(extra)[0]!r}")
    if not keys:
        raise KeyError(f"bundle has no {prefix}.k* tensors")
    return [np.asarray(bundle[k], dtype=np.float64) for k in keys]


def _chain_layers(kernels, slope, what):
    layers = []
    for i, k in enumerate(kernels):
        if i > 0 and k.shape[1] != kernels[i - 1].shape[0]:
            raise ValueError(
                f"{what}: layer {i} wants {k.shape[1]} input channels, "
                f"layer {i-1} provides {kernels[i-1].shape[0]}"
            )
        act = "none" if i == len(kernels) - 1 else "leaky"
        layers.append(ConvLayer(k, activation=act, slope=slope))
    return layers


def _leaky_slope(bundle):
    if "meta.leaky_slope" in bundle:
        return float(np.asarray(bundle["meta.leaky_slope"]).reshape(-1)[0])
    return 0.1


def build_coring_net(bundle):
    """Assemble a CoringNet from bundle tensors, validating channel chains."""
    slope = _leaky_slope(bundle)
    s1 = _chain_layers(_collect_stage(bundle, "coring.s1"), slope, "stage 1")
    s2 = _chain_layers(_collect_stage(bundle, "coring.s2"), slope, "stage 2")
    for name, stage in (("stage 1", s1), ("stage 2", s2)):
        if stage[0].cin != stage[-1].cout:
            raise ValueError(
                f"{name} must preserve its channel count "
                f"({stage[0].cin} in, {stage[-1].cout} out)"
            )
    if s1[0].cin != s2[0].cin:
        raise ValueError("stage 1 and stage 2 disagree on temporal taps")
    return CoringNet(tuple(s1), tuple(s2), taps=s1[0].cin)


def build_noise_net(bundle):
    slope = _leaky_slope(bundle)
    layers = _chain_layers(_collect_stage(bundle, "noise"), slope, "noise net")
    if layers[0].cin != 3 or layers[-1].cout != 1:
        raise ValueError("noise net must map a 3-channel frame to a 1-channel map")
    return NoiseNet(tuple(layers))


def refine_gains(net, gains, grid, clamp=False):
    """Refine one frame's grid of gain blocks.

    gains: [N, T, C, B, B] with N = grid rows * grid cols, blocks in
    row-major grid order. Returns the refined gains with the same shape.
    """
    gains = np.asarray(gains, dtype=np.float64)
    gh, gw = grid
    if gains.ndim != 5 or gains.shape[0] != gh * gw:
        raise ValueError(
            f"gains shape {gains.shape} does not match grid {gh}x{gw}"
        )
    if gains.shape[1] != net.taps:
        raise ValueError(f"gains have {gains.shape[1]} taps, net wants {net.taps}")
    x = gains
    for layer in net.stage1:
        x = conv_forward(x, layer)
    x = rearrange(x, "(gh gw) t c bh bw -> (bh bw) t c gh gw", gh=gh, gw=gw)
    for layer in net.stage2:
        x = conv_forward(x, layer)
    bh, bw = gains.shape[3], gains.shape[4]
    x = rearrange(x, "(bh bw) t c gh gw -> (gh gw) t c bh bw", bh=bh, bw=bw)
    if clamp:
        x = np.clip(x, 0.0, 1.0)
    return x


def estimate_noise_map(net, frame):
    """Per-pixel noise STD map (1 x H x W, nonnegative) for a 3 x H x W frame."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 3 or frame.shape[0] != 3:
        raise ValueError(f"frame must be [3, H, W], got {frame.shape}")
    x = frame[None]
    for layer in net.layers:
        x = conv_forward(x, layer)
    return np.abs(x[0])
