"""Synthetic electron-microscopy-like image domains.

Images contain non-overlapping dark elliptical organelle-like instances with
jittered boundaries on a textured lighter background. A domain is described by
a DomainSpec whose ranges control the shift axes we care about: instance
count, instance size, intensity statistics, and background texture frequency.
Everything is deterministic given (spec.seed, sample index).
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

log = logging.getLogger(__name__)

DENSITY_SIGMA = 2.0
# amplitude of the discrete unit-mass Gaussian at its center pixel
DENSITY_PEAK_VALUE = 1.0 / (2.0 * np.pi * DENSITY_SIGMA**2)

_TEXTURE_AMPLITUDE = 0.07
_PLACEMENT_ATTEMPTS = 60


@dataclass
class DomainSpec:
    image_size: int = 128
    instances_per_image: tuple[int, int] = (3, 6)
    instance_radius: tuple[float, float] = (9.0, 15.0)
    instance_eccentricity: tuple[float, float] = (0.0, 0.8)
    fg_mean: float = 0.32
    bg_mean: float = 0.68
    fg_noise_std: float = 0.04
    bg_noise_std: float = 0.04
    texture_frequency: float = 6.0
    seed: int = 0

    def validate(self) -> None:
        if self.image_size < 32:
            raise ValueError(f"image_size must be ≥ 32, got {self.image_size}")
        for name in ("instances_per_image", "instance_radius", "instance_eccentricity"):
            lo, hi = getattr(self, name)
            if hi < lo:
                raise ValueError(f"{name} range empty: {(lo, hi)}")
        for name in ("fg_mean", "bg_mean"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0,1], got {v}")

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("instances_per_image", "instance_radius", "instance_eccentricity"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DomainSpec":
        kwargs = dict(d)
        for k in ("instances_per_image", "instance_radius", "instance_eccentricity"):
            if k in kwargs:
                kwargs[k] = tuple(kwargs[k])
        spec = cls(**kwargs)
        spec.validate()
        return spec


@dataclass
class Sample:
    image: np.ndarray  # H×W float in [0,1]
    instance_map: np.ndarray  # H×W int32, 0 = background
    centers: list[tuple[int, int]]  # one (row, col) per instance id, ascending id
    sparse_points: list[tuple[int, int]]  # subset of centers
    density: np.ndarray = field(default=None)  # derived from centers

    def __post_init__(self):
        if self.density is None:
            self.density = density_from_points(self.centers, DENSITY_SIGMA, self.instance_map.shape)


def density_from_points(points, sigma: float, shape: tuple[int, int]) -> np.ndarray:
    """Sum of unit-mass Gaussians truncated to a ±3σ square window, one per
    point, accumulated in list order (bit-reproducible)."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    h, w = shape
    out = np.zeros((h, w))
    if not points:
        return out
    half = int(np.ceil(3.0 * sigma))
    ax = np.arange(-half, half + 1)
    kern = np.exp(-(ax[:, None] ** 2 + ax[None, :] ** 2) / (2.0 * sigma**2))
    kern = kern / (2.0 * np.pi * sigma**2)
    for r, c in points:
        if not (0 <= r < h and 0 <= c < w):
            raise ValueError(f"point ({r},{c}) outside shape {shape}")
        r0, r1 = max(0, r - half), min(h, r + half + 1)
        c0, c1 = max(0, c - half), min(w, c + half + 1)
        out[r0:r1, c0:c1] += kern[r0 - r + half : r1 - r + half, c0 - c + half : c1 - c + half]
    return out


def sample_sparse_points(centers, fraction: float, seed: int) -> list[tuple[int, int]]:
    """Uniform without-replacement subset of round(fraction·|centers|) centers."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must be in [0,1], got {fraction}")
    k = round(fraction * len(centers))
    if k == 0:
        return []
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(centers), size=k, replace=False)
    return [centers[i] for i in sorted(idx)]


def _bandpass_texture(rng: np.random.Generator, size: int, frequency: float) -> np.ndarray:
    """Zero-mean unit-std noise field band-passed around `frequency` cycles
    per image side."""
    noise = rng.normal(size=(size, size))
    f = np.fft.fftfreq(size) * size  # cycles per image
    rho = np.hypot(f[:, None], f[None, :])
    bw = max(frequency / 2.0, 1.0)
    mask = np.exp(-0.5 * ((rho - frequency) / bw) ** 2)
    tex = np.fft.ifft2(np.fft.fft2(noise) * mask).real
    std = tex.std()
    if std > 0:
        tex = (tex - tex.mean()) / std
    return tex


def _ellipse_mask(size: int, center, a: float, b: float, theta: float, jitter_amp, jitter_phase) -> np.ndarray:
    """Filled rotated ellipse with a low-order sinusoidal boundary perturbation."""
    cr, cc = center
    rr, cc_ = np.mgrid[0:size, 0:size]
    dr = rr - cr
    dc = cc_ - cc
    ct, st = np.cos(theta), np.sin(theta)
    u = (dr * ct + dc * st) / a
    v = (-dr * st + dc * ct) / b
    rho = np.hypot(u, v)
    ang = np.arctan2(v, u)
    bound = 1.0
    for k, (amp, ph) in enumerate(zip(jitter_amp, jitter_phase), start=2):
        bound = bound + amp * np.sin(k * ang + ph)
    return rho <= bound


def generate_sample(spec: DomainSpec, index: int, sparse_fraction: float = 0.15) -> Sample:
    """One deterministic sample; pure in (spec, index, sparse_fraction)."""
    spec.validate()
    ss = np.random.SeedSequence([spec.seed, index])
    rng = np.random.default_rng(ss)
    size = spec.image_size

    lo, hi = spec.instances_per_image
    want = int(rng.integers(lo, hi + 1))
    occupied = np.zeros((size, size), dtype=bool)
    instance_map = np.zeros((size, size), dtype=np.int32)
    centers: list[tuple[int, int]] = []
    placed = 0
    for _ in range(want):
        ok = False
        for _ in range(_PLACEMENT_ATTEMPTS):
            a = rng.uniform(*spec.instance_radius)
            e = rng.uniform(*spec.instance_eccentricity)
            b = a * np.sqrt(max(1.0 - e * e, 1e-3))
            theta = rng.uniform(0, np.pi)
            margin = int(np.ceil(a * 1.2)) + 1
            if 2 * margin >= size:
                continue
            cr = int(rng.integers(margin, size - margin))
            cc = int(rng.integers(margin, size - margin))
            amp = rng.uniform(0.0, 0.12, size=3)
            ph = rng.uniform(0, 2 * np.pi, size=3)
            mask = _ellipse_mask(size, (cr, cc), a, b, theta, amp, ph)
            if not mask.any():
                continue
            # demand a 1-px clearance so instances stay 4-disconnected
            grown = mask.copy()
            grown[1:, :] |= mask[:-1, :]
            grown[:-1, :] |= mask[1:, :]
            grown[:, 1:] |= mask[:, :-1]
            grown[:, :-1] |= mask[:, 1:]
            if (grown & occupied).any():
                continue
            ok = True
            break
        if not ok:
            log.info("sample %d: placed %d/%d instances before giving up", index, placed, want)
            break
        placed += 1
        occupied |= grown
        instance_map[mask] = placed
        ys, xs = np.nonzero(mask)
        cy, cx = ys.mean(), xs.mean()
        j = int(np.argmin((ys - cy) ** 2 + (xs - cx) ** 2))
        centers.append((int(ys[j]), int(xs[j])))

    tex = _bandpass_texture(rng, size, spec.texture_frequency)
    image = spec.bg_mean + _TEXTURE_AMPLITUDE * tex + rng.normal(0, spec.bg_noise_std, (size, size))
    fg = instance_map > 0
    fg_levels = rng.uniform(-0.03, 0.03, size=placed + 1)
    inst_noise = rng.normal(0, spec.fg_noise_std, (size, size))
    image[fg] = spec.fg_mean + fg_levels[instance_map[fg]] + inst_noise[fg]
    image = np.clip(image, 0.0, 1.0)

    sparse_seed = int(np.random.default_rng(ss.spawn(1)[0]).integers(0, 2**31 - 1))
    sparse = sample_sparse_points(centers, sparse_fraction, sparse_seed)
    return Sample(image=image, instance_map=instance_map, centers=centers, sparse_points=sparse)


def generate_domain(spec: DomainSpec, n_samples: int, sparse_fraction: float = 0.15) -> list[Sample]:
    if n_samples < 1:
        raise ValueError(f"n_samples must be ≥ 1, got {n_samples}")
    return [generate_sample(spec, i, sparse_fraction) for i in range(n_samples)]
