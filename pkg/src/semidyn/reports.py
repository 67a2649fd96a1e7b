"""Report assembly and file output.

Reports are pure functions of the run configuration: keys are sorted,
floats go through repr via json, and nothing time- or host-dependent is
embedded, so repeated runs produce byte-identical files.  Wall-clock
information lives in a separate .meta.json sidecar instead.  All writes
go through a temp file plus rename so readers never see a torn file.
"""
from __future__ import annotations

import json
import math
import os
import tempfile
import time
from pathlib import Path
from typing import Any

import numpy as np

from .escape import Classification, ContainmentReport, PixelStatus
from .semigroup import PermutabilityResult, word_label
from .singular import HyperbolicityReport, PostSingularCloud
from .topology import ComponentReport, UnboundednessReport

SCHEMA = "semidyn-report/1"

# palette: escaping white, non-escaping black, indeterminate gray
_COLORS = {
    int(PixelStatus.ESCAPING_ALL): (255, 255, 255),
    int(PixelStatus.NON_ESCAPING): (0, 0, 0),
    int(PixelStatus.INDETERMINATE): (128, 128, 128),
}
_JULIA_RED = 200


def json_complex(v: complex) -> dict[str, float]:
    return {"re": float(v.real), "im": float(v.imag)}

def json_float(x: float | None) -> float | None:
    """JSON has no inf/nan; map them to None with the caller documenting why."""
    if x is None or not math.isfinite(x):
        return None
    return float(x)


def classification_summary(c: Classification) -> dict[str, Any]:
    out = {
        "label": c.label,
        "grid": c.grid.to_dict(),
        "max_word_length": c.max_word_length,
        "n_words": len(c.words),
        "words": [word_label(w) for w in c.words],
    }
    out.update(c.stats)
    return out


def components_section(
    components: list[ComponentReport],
    summary: UnboundednessReport,
    connectivity: int,
    max_listed: int = 64,
) -> dict[str, Any]:
    return {
        "connectivity": connectivity,
        "total": summary.total_components,
        "frame_touching": summary.frame_touching,
        "interior": list(summary.interior_ids),
        "interior_count": summary.interior_count,
        "largest": [
            {
                "id": comp.component_id,
                "pixels": comp.pixel_count,
                "touches_frame": comp.touches_frame,
                "bbox": list(comp.bbox),
            }
            for comp in sorted(components, key=lambda r: (-r.pixel_count, r.component_id))[:max_listed]
        ],
    }


def cloud_section(cloud: PostSingularCloud) -> dict[str, Any]:
    return {
        "verdict": cloud.verdict.value,
        "depth": cloud.depth,
        "max_word_length": cloud.max_word_length,
        "n_orbits": len(cloud.orbits),
        "n_points": len(cloud.points),
        "radius": json_float(cloud.radius),
        "limit_points": [json_complex(p) for p in cloud.limit_points],
        "over_approximation": cloud.over_approximation,
    }


def hyperbolicity_section(report: HyperbolicityReport) -> dict[str, Any]:
    return {
        "verdict": report.verdict.value,
        "separation": json_float(report.separation),
        "separation_infinite": report.separation == math.inf,
        "threshold": report.threshold,
        "julia_pixel_count": report.julia_pixel_count,
        "cloud": cloud_section(report.cloud),
        "per_generator": [
            {
                "label": g.label,
                "cloud_verdict": g.cloud_verdict.value,
                "cloud_radius": json_float(g.cloud_radius),
                "separation": json_float(g.separation),
            }
            for g in report.per_generator
        ],
    }


def containment_section(report: ContainmentReport) -> dict[str, Any]:
    return {
        "inner": report.inner_label,
        "outer": report.outer_label,
        "pixels_checked": report.pixels_checked,
        "hard_violations": report.hard_violations,
        "soft_violations": report.soft_violations,
        "first_violations": [list(p) for p in report.first_violations],
        "ok": report.ok,
    }


def permutability_section(result: PermutabilityResult) -> dict[str, Any]:
    return {
        "permutable": result.permutable,
        "max_deviation": result.max_deviation,
        "samples_used": result.samples_used,
        "samples_skipped": result.samples_skipped,
        "tolerance": result.tolerance,
    }


def build_report(
    config: dict[str, Any],
    classification: dict[str, Any] | None = None,
    components: dict[str, Any] | None = None,
    hyperbolicity: dict[str, Any] | None = None,
    checks: list[dict[str, Any]] | None = None,
    extra: dict[str, Any] | None = None,
) -> dict[str, Any]:
    report: dict[str, Any] = {
        "schema": SCHEMA,
        "config": config,
        "classification_summary": classification,
        "components": components,
        "hyperbolicity": hyperbolicity,
        "checks": checks or [],
    }
    if extra:
        report["extra"] = extra
    return report


def report_bytes(report: dict[str, Any]) -> bytes:
    return (json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n").encode()


def write_atomic(path: str | Path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_report(path: str | Path, report: dict[str, Any], started: float | None = None) -> None:
    """Write the deterministic report plus a timing sidecar next to it."""
    write_atomic(path, report_bytes(report))
    meta = {
        "written_at_unix": time.time(),
        "elapsed_seconds": None if started is None else time.time() - started,
    }
    write_atomic(str(path) + ".meta.json", (json.dumps(meta, indent=2) + "\n").encode())


def render_rgb(classification: Classification, julia_mask: np.ndarray | None = None) -> np.ndarray:
    """(ny, nx, 3) uint8 image; row 0 is the top of the picture."""
    status = classification.status
    rgb = np.zeros(status.shape + (3,), np.uint8)
    for value, color in _COLORS.items():
        rgb[status == value] = color
    if julia_mask is not None and julia_mask.size:
        rgb[julia_mask, 0] = _JULIA_RED
        rgb[julia_mask, 1] = 0
        rgb[julia_mask, 2] = 0
    return rgb[::-1]  # grid row 0 is im_min; images want it at the bottom


def ppm_bytes(rgb: np.ndarray) -> bytes:
    ny, nx = rgb.shape[:2]
    return f"P6\n{nx} {ny}\n255\n".encode() + rgb.astype(np.uint8).tobytes()


def write_ppm(path: str | Path, classification: Classification,
              julia_mask: np.ndarray | None = None) -> None:
    write_atomic(path, ppm_bytes(render_rgb(classification, julia_mask)))
