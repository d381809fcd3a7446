"""Volumetric lookup-table calibration and restoration for underwater images."""

import json

from ._vlut import (
    CameraIntrinsics,
    FrustumSpec,
    LookupTable,
    VlutError,
    backproject,
    ground_truth_lut,
    load_lut,
    make_dataset,
    observation_weight,
    project,
    recipe_names,
    restore_image,
    run_cli,
    save_lut,
    snr,
)
from . import _vlut

__all__ = [
    "CameraIntrinsics",
    "FrustumSpec",
    "LookupTable",
    "VlutError",
    "backproject",
    "calibrate",
    "ground_truth_lut",
    "load_lut",
    "make_dataset",
    "observation_weight",
    "project",
    "recipe_names",
    "restore_image",
    "run_cli",
    "save_lut",
    "snr",
]


def calibrate(manifest, pyramid=((4, 3, 10), (40, 30, 10)), mode="known_color", in_air=False,
              pure_water=True, samples=(40, 30), anchor=None, anchor_alpha=None):
    """Calibrate a table from a manifest. Returns (LookupTable, report dict)."""
    if mode not in ("known_color", "correspondence_only"):
        raise ValueError(f"unknown mode {mode!r}")
    lut, report = _vlut._calibrate(
        str(manifest), [tuple(p) for p in pyramid], mode == "correspondence_only", in_air, pure_water,
        tuple(samples), None if anchor is None else tuple(anchor),
        None if anchor_alpha is None else tuple(anchor_alpha))
    return lut, json.loads(report)
