"""Parametric synthetic iris: a surface of revolution with a controllable
anterior bow and a Gaussian frill ridge.

The profile over radius rho in [pupil_radius, root_radius] is

    f(rho) = bow * (1 - ((rho - rho_m)/w)^2) + frill_amp * exp(-(rho - frill_center)^2 / (2*sigma^2))

with rho_m the annulus midpoint and w its half-width, so f vanishes at both
rims when the frill is off and peaks at the midpoint. Its exact derivatives
give closed-form meridional and circumferential curvatures, which makes the
phantom the ground-truth oracle for the whole downstream pipeline. Slices
are rasterized exactly like the scan geometry describes, with the surface
drawn anteriorly (toward row 0) from a baseline row.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .boundary import SliceBoundarySet, segments_from_columns
from .errors import PhantomError
from .reconstruct import ScanGeometry

__all__ = [
    "OPEN",
    "CLOSURE",
    "PhantomParams",
    "PhantomSurface",
    "PhantomVolume",
    "phantom_surface",
    "phantom_slices",
    "render_slice_image",
    "sample_volume_params",
    "write_phantom_metadata",
]

OPEN, CLOSURE = 0, 1


@dataclass(frozen=True)
class PhantomParams:
    pupil_radius: float
    root_radius: float
    bow: float = 0.0
    frill_amp: float = 0.0
    frill_center: float | None = None
    frill_sigma: float = 3.0
    noise_amp: float = 0.0
    label_threshold: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.pupil_radius < self.root_radius:
            raise PhantomError(
                f"need 0 < pupil_radius < root_radius, got "
                f"{self.pupil_radius}, {self.root_radius}"
            )
        if self.frill_sigma <= 0:
            raise PhantomError("frill_sigma must be positive")
        if self.bow < 0 or self.frill_amp < 0 or self.noise_amp < 0:
            raise PhantomError("amplitudes must be non-negative")

    @property
    def label(self) -> int:
        return CLOSURE if self.bow > self.label_threshold else OPEN


class PhantomSurface:
    """Profile z = f(rho) plus closed-form curvature of the revolved surface."""

    def __init__(self, params: PhantomParams):
        self.params = params
        self.rho_mid = 0.5 * (params.pupil_radius + params.root_radius)
        self.half_width = 0.5 * (params.root_radius - params.pupil_radius)
        self.frill_center = (
            params.frill_center if params.frill_center is not None else self.rho_mid
        )

    def f(self, rho):
        rho = np.asarray(rho, dtype=np.float64)
        p = self.params
        bow = p.bow * (1.0 - ((rho - self.rho_mid) / self.half_width) ** 2)
        g = np.exp(-((rho - self.frill_center) ** 2) / (2.0 * p.frill_sigma**2))
        return bow + p.frill_amp * g

    def df(self, rho):
        rho = np.asarray(rho, dtype=np.float64)
        p = self.params
        bow = -2.0 * p.bow * (rho - self.rho_mid) / self.half_width**2
        g = np.exp(-((rho - self.frill_center) ** 2) / (2.0 * p.frill_sigma**2))
        frill = p.frill_amp * g * (-(rho - self.frill_center) / p.frill_sigma**2)
        return bow + frill

    def d2f(self, rho):
        rho = np.asarray(rho, dtype=np.float64)
        p = self.params
        bow = np.full_like(rho, -2.0 * p.bow / self.half_width**2)
        g = np.exp(-((rho - self.frill_center) ** 2) / (2.0 * p.frill_sigma**2))
        frill = p.frill_amp * g * (
            (rho - self.frill_center) ** 2 / p.frill_sigma**4 - 1.0 / p.frill_sigma**2
        )
        return bow + frill

    def kappa_meridional(self, rho):
        fp = self.df(rho)
        return self.d2f(rho) / (1.0 + fp * fp) ** 1.5

    def kappa_circumferential(self, rho):
        rho = np.asarray(rho, dtype=np.float64)
        fp = self.df(rho)
        return fp / (rho * np.sqrt(1.0 + fp * fp))


def phantom_surface(params: PhantomParams) -> PhantomSurface:
    return PhantomSurface(params)


@dataclass
class PhantomVolume:
    params: PhantomParams
    geometry: ScanGeometry
    label: int
    boundaries: SliceBoundarySet
    analytic_rows: dict[int, np.ndarray]  # per slice: float row per column (NaN outside)
    masks: list[np.ndarray] | None
    base_row: float
    thickness: int
    meridian_offsets: np.ndarray


def phantom_slices(
    params: PhantomParams,
    geom: ScanGeometry,
    base_row: float | None = None,
    thickness: int = 8,
    with_masks: bool = True,
) -> PhantomVolume:
    """Rasterize the phantom into per-slice masks and boundaries.

    Each slice covers the meridian pair at angles i*pi/S and i*pi/S + pi;
    the upper boundary row is base_row - f(rho)/s_z, pushed anteriorly by
    the bow. Azimuthal noise is a seeded per-meridian row offset. Rejects
    surfaces that leave the image bounds, naming the offending slice.
    """
    surf = PhantomSurface(params)
    s = geom.slices
    if base_row is None:
        base_row = 0.65 * geom.height
    max_col_radius = (geom.width / 2.0 - 1.0) * geom.s_xy
    if params.root_radius > max_col_radius:
        raise PhantomError(
            f"root radius {params.root_radius} exceeds image half-width "
            f"{max_col_radius}"
        )
    rng = np.random.default_rng(params.seed)
    offsets = (
        rng.uniform(-params.noise_amp, params.noise_amp, size=2 * s)
        if params.noise_amp > 0
        else np.zeros(2 * s)
    )

    cols = np.arange(geom.width)
    rho_signed = (cols - geom.center_col) * geom.s_xy
    rho = np.abs(rho_signed)
    inside = (rho >= params.pupil_radius) & (rho <= params.root_radius)

    bset = SliceBoundarySet()
    analytic: dict[int, np.ndarray] = {}
    masks: list[np.ndarray] | None = [] if with_masks else None
    for i in range(s):
        meridian = np.where(rho_signed >= 0, i, i + s)
        z_float = np.full(geom.width, np.nan)
        z_float[inside] = (
            base_row - (surf.f(rho[inside]) + offsets[meridian[inside]]) / geom.s_z
        )
        z_int = np.floor(z_float[inside] + 0.5).astype(np.int64)
        if z_int.size:
            if z_int.min() < 0 or z_int.max() + thickness > geom.height:
                raise PhantomError(
                    f"surface exceeds image bounds at slice {i} "
                    f"(rows {z_int.min()}..{z_int.max() + thickness})"
                )
        analytic[i] = z_float
        segs = segments_from_columns(cols[inside], z_int, geom.center_col)
        bset.add(i, segs)
        if masks is not None:
            mask = np.zeros((geom.height, geom.width), dtype=np.uint8)
            cc = cols[inside]
            for t in range(thickness):
                mask[z_int + t, cc] = 1
            masks.append(mask)
    return PhantomVolume(
        params=params,
        geometry=geom,
        label=params.label,
        boundaries=bset,
        analytic_rows=analytic,
        masks=masks,
        base_row=base_row,
        thickness=thickness,
        meridian_offsets=offsets,
    )


def render_slice_image(mask: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Turn a binary mask into a noisy grayscale slice in [0, 1]: bright
    tissue on a dark background with additive Gaussian noise."""
    img = 0.15 + 0.65 * mask.astype(np.float64)
    img += rng.normal(0.0, 0.08, size=mask.shape)
    return np.clip(img, 0.0, 1.0)


def sample_volume_params(
    rng: np.random.Generator,
    closure: bool,
    geom: ScanGeometry,
    label_threshold: float = 15.0,
) -> PhantomParams:
    """Draw one volume's parameters; the bow ranges of the two classes are
    disjoint around the label threshold."""
    half_w = geom.width / 2.0 * geom.s_xy
    pupil = rng.uniform(0.10, 0.14) * half_w
    root = rng.uniform(0.86, 0.94) * half_w
    bow = rng.uniform(1.6, 2.6) * label_threshold if closure else rng.uniform(
        0.0, 0.5
    ) * label_threshold
    width_units = root - pupil
    return PhantomParams(
        pupil_radius=pupil,
        root_radius=root,
        bow=bow,
        frill_amp=rng.uniform(0.0, 0.25) * label_threshold,
        frill_center=pupil + rng.uniform(0.35, 0.65) * width_units,
        frill_sigma=rng.uniform(0.08, 0.15) * width_units,
        noise_amp=0.0,
        label_threshold=label_threshold,
        seed=int(rng.integers(0, 2**31 - 1)),
    )


def write_phantom_metadata(path, volume: PhantomVolume, n_curvature_samples: int = 64) -> None:
    """Dump parameters, label, and an analytic curvature table as JSON."""
    surf = PhantomSurface(volume.params)
    rho = np.linspace(
        volume.params.pupil_radius, volume.params.root_radius, n_curvature_samples
    )
    p = volume.params
    meta = {
        "params": {
            "pupil_radius": p.pupil_radius,
            "root_radius": p.root_radius,
            "bow": p.bow,
            "frill_amp": p.frill_amp,
            "frill_center": surf.frill_center,
            "frill_sigma": p.frill_sigma,
            "noise_amp": p.noise_amp,
            "label_threshold": p.label_threshold,
            "seed": p.seed,
        },
        "label": "closure" if volume.label == CLOSURE else "open",
        "base_row": volume.base_row,
        "thickness": volume.thickness,
        "geometry": {
            "slices": volume.geometry.slices,
            "width": volume.geometry.width,
            "height": volume.geometry.height,
            "s_xy": volume.geometry.s_xy,
            "s_z": volume.geometry.s_z,
        },
        "curvature_table": {
            "rho": rho.tolist(),
            "kappa_meridional": surf.kappa_meridional(rho).tolist(),
            "kappa_circumferential": surf.kappa_circumferential(rho).tolist(),
        },
    }
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
