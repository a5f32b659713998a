"""Cropping and the weak/strong view pipeline.

A ViewTransform fully describes one view: crop origin, dihedral part (flips +
quarter-turns), and photometric part (intensity shift + pixel noise). Weak
views use crop+flips only; strong views add rotations and photometrics. The
teacher/student pair shares one weak transform; the student's extra rotation
is recoverable via `align_to_strong`, which maps weak-view arrays/points onto
the strong view exactly (pure dihedral index remapping, no interpolation).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .generate import DENSITY_SIGMA, Sample, density_from_points


@dataclass(frozen=True)
class ViewTransform:
    crop_r: int
    crop_c: int
    crop_size: int
    vflip: bool
    hflip: bool
    rot90: int  # quarter-turns, 0..3, applied after flips
    intensity_shift: float = 0.0
    noise_std: float = 0.0
    noise_seed: int = 0


def draw_view(image_size: int, crop_size: int, strength: str, rng: np.random.Generator) -> ViewTransform:
    if crop_size > image_size:
        raise ValueError(f"crop_size {crop_size} exceeds image size {image_size}")
    if strength not in ("weak", "strong"):
        raise ValueError(f"strength must be weak|strong, got {strength!r}")
    r0 = int(rng.integers(0, image_size - crop_size + 1))
    c0 = int(rng.integers(0, image_size - crop_size + 1))
    vflip = bool(rng.integers(0, 2))
    hflip = bool(rng.integers(0, 2))
    if strength == "weak":
        return ViewTransform(r0, c0, crop_size, vflip, hflip, 0)
    return ViewTransform(
        r0,
        c0,
        crop_size,
        vflip,
        hflip,
        int(rng.integers(0, 4)),
        intensity_shift=float(rng.uniform(-0.1, 0.1)),
        noise_std=float(rng.uniform(0.0, 0.05)),
        noise_seed=int(rng.integers(0, 2**31 - 1)),
    )


def strengthen(weak: ViewTransform, rng: np.random.Generator) -> ViewTransform:
    """Derive the student's strong view from the teacher's weak view: same
    crop and flips, extra quarter-turns and photometrics."""
    return replace(
        weak,
        rot90=int(rng.integers(0, 4)),
        intensity_shift=float(rng.uniform(-0.1, 0.1)),
        noise_std=float(rng.uniform(0.0, 0.05)),
        noise_seed=int(rng.integers(0, 2**31 - 1)),
    )


def _dihedral_array(arr: np.ndarray, vflip: bool, hflip: bool, rot90: int) -> np.ndarray:
    if vflip:
        arr = arr[::-1, ...]
    if hflip:
        arr = arr[:, ::-1, ...]
    if rot90:
        arr = np.rot90(arr, rot90)
    return np.ascontiguousarray(arr)


def _dihedral_point(r: int, c: int, n: int, vflip: bool, hflip: bool, rot90: int) -> tuple[int, int]:
    if vflip:
        r = n - 1 - r
    if hflip:
        c = n - 1 - c
    for _ in range(rot90 % 4):
        r, c = n - 1 - c, r
    return r, c


def apply_geometry(arr: np.ndarray, vt: ViewTransform) -> np.ndarray:
    """Crop then apply the dihedral part; works for any H×W(-leading) array."""
    crop = arr[vt.crop_r : vt.crop_r + vt.crop_size, vt.crop_c : vt.crop_c + vt.crop_size, ...]
    return _dihedral_array(crop, vt.vflip, vt.hflip, vt.rot90)


def apply_geometry_point(r: int, c: int, vt: ViewTransform) -> tuple[int, int] | None:
    """Map an image-frame point into the view; None if it leaves the crop."""
    rr, cc = r - vt.crop_r, c - vt.crop_c
    if not (0 <= rr < vt.crop_size and 0 <= cc < vt.crop_size):
        return None
    return _dihedral_point(rr, cc, vt.crop_size, vt.vflip, vt.hflip, vt.rot90)


def align_to_strong(arr: np.ndarray, weak: ViewTransform, strong: ViewTransform) -> np.ndarray:
    """Map a weak-view array onto the matching strong view (the extra
    quarter-turns); exact because both views share crop and flips."""
    if (weak.crop_r, weak.crop_c, weak.vflip, weak.hflip) != (strong.crop_r, strong.crop_c, strong.vflip, strong.hflip):
        raise ValueError("weak/strong views do not share crop and flips")
    k = (strong.rot90 - weak.rot90) % 4
    return np.ascontiguousarray(np.rot90(arr, k))


def align_point_to_strong(r: int, c: int, weak: ViewTransform, strong: ViewTransform) -> tuple[int, int]:
    k = (strong.rot90 - weak.rot90) % 4
    return _dihedral_point(r, c, weak.crop_size, False, False, k)


def apply_view(sample: Sample, vt: ViewTransform) -> Sample:
    """Produce the transformed Sample.

    Instances clipped by the crop keep their pixels; an instance whose center
    left the crop gets a recomputed center (in-view pixel nearest its in-view
    centroid) so every visible instance keeps exactly one in-instance center.
    Sparse membership is per-instance and survives recomputation. Density is
    regenerated from the transformed centers.
    """
    image = apply_geometry(sample.image, vt).astype(np.float64)
    inst = apply_geometry(sample.instance_map, vt)

    old_ids = [i + 1 for i in range(len(sample.centers))]
    sparse_ids = set()
    for p in sample.sparse_points:
        for oid, cpt in zip(old_ids, sample.centers):
            if cpt == p:
                sparse_ids.add(oid)
                break

    new_map = np.zeros_like(inst)
    centers: list[tuple[int, int]] = []
    sparse: list[tuple[int, int]] = []
    next_id = 0
    for oid in old_ids:
        pix = inst == oid
        if not pix.any():
            continue
        next_id += 1
        new_map[pix] = next_id
        moved = apply_geometry_point(*sample.centers[oid - 1], vt)
        if moved is None or not pix[moved]:
            ys, xs = np.nonzero(pix)
            j = int(np.argmin((ys - ys.mean()) ** 2 + (xs - xs.mean()) ** 2))
            moved = (int(ys[j]), int(xs[j]))
        centers.append(moved)
        if oid in sparse_ids:
            sparse.append(moved)

    if vt.intensity_shift or vt.noise_std:
        prng = np.random.default_rng(vt.noise_seed)
        image = image + vt.intensity_shift + prng.normal(0.0, vt.noise_std or 0.0, image.shape)
        image = np.clip(image, 0.0, 1.0)

    density = density_from_points(centers, DENSITY_SIGMA, inst.shape)
    return Sample(image=image, instance_map=new_map, centers=centers, sparse_points=sparse, density=density)


def crop_and_augment(sample: Sample, crop_size: int, strength: str, seed: int) -> Sample:
    """Single-view convenience wrapper used by supervised training and tests."""
    rng = np.random.default_rng(seed)
    vt = draw_view(sample.image.shape[0], crop_size, strength, rng)
    return apply_view(sample, vt)
