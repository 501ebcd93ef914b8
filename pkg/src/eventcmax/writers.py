"""Output files: 8-bit PGM maps, CSV grids and key=value manifests."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np


def scale_iwe(img) -> np.ndarray:
    """``[0, max]`` onto ``[0, 255]`` (all zeros for an empty image)."""
    img = np.asarray(img, dtype=float)
    top = img.max() if img.size else 0.0
    if top <= 0:
        return np.zeros(img.shape, dtype=np.uint8)
    return np.clip(np.rint(255.0 * img / top), 0, 255).astype(np.uint8)


def scale_diwe(img) -> np.ndarray:
    """``[-2, 2]`` onto ``[0, 255]`` with 0 at 128, clamped."""
    return np.clip(np.rint(128.0 + 64.0 * np.asarray(img, dtype=float)), 0, 255).astype(np.uint8)


def scale_iwa(img) -> np.ndarray:
    """``[0, 2]`` onto ``[0, 255]`` with 1 at 128, clamped."""
    return np.clip(np.rint(128.0 * np.asarray(img, dtype=float)), 0, 255).astype(np.uint8)


def write_pgm(path, gray) -> None:
    gray = np.asarray(gray, dtype=np.uint8)
    h, w = gray.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(gray).tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 255:
        raise ValueError(f"{path}: only 8-bit PGM is supported")
    return np.frombuffer(parts[4][: w * h], dtype=np.uint8).reshape(h, w)


def write_grid_csv(path, img) -> None:
    """One CSV row per image row, values in full precision."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in np.asarray(img, dtype=float):
            w.writerow([repr(float(v)) for v in row])


def read_grid_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def write_landscape_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["value", "G", "R_div", "R_def", "J"])
        for r in rows:
            w.writerow([repr(float(v)) if np.isfinite(v) else "" for v in r])


def write_manifest(path, entries: dict) -> None:
    """Plain ``key=value`` lines in insertion order."""
    with open(path, "w") as fh:
        for key, value in entries.items():
            fh.write(f"{key}={_fmt(value)}\n")


def read_manifest(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if line and not line.startswith("#"):
            key, _, value = line.partition("=")
            out[key] = value
    return out


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float | np.floating):
        return repr(float(value))
    if isinstance(value, list | tuple | np.ndarray):
        return ",".join(_fmt(v) for v in value)
    if value is None:
        return ""
    return str(value)
