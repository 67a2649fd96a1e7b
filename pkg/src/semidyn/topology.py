"""Connected components of pixel masks and unboundedness evidence.

A component that touches the window frame is consistent with being a
slice of an unbounded set; an interior component (frame-free) is the
interesting object, since a genuinely bounded escaping component would
contradict the expectation that all escaping components are unbounded.
Interior flags are only treated as evidence once they persist under
grid refinement, otherwise they are reported as resolution artifacts.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .escape import GridSpec

_STRUCTURE_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], bool)
_STRUCTURE_8 = np.ones((3, 3), bool)


@dataclass(frozen=True)
class ComponentReport:
    component_id: int
    pixel_count: int
    touches_frame: bool
    bbox: tuple[int, int, int, int]  # (iy_min, iy_max, ix_min, ix_max) inclusive

    def plane_bbox(self, grid: GridSpec) -> tuple[float, float, float, float]:
        """Covered plane rectangle (re_min, re_max, im_min, im_max)."""
        iy0, iy1, ix0, ix1 = self.bbox
        return (
            grid.re_min + ix0 * grid.dx,
            grid.re_min + (ix1 + 1) * grid.dx,
            grid.im_min + iy0 * grid.dy,
            grid.im_min + (iy1 + 1) * grid.dy,
        )


def connected_components(mask: np.ndarray, connectivity: int = 4) -> list[ComponentReport]:
    """Components of a boolean mask, ids dense from 0 in raster-scan order.

    The component whose first pixel comes earliest in row-major order
    gets id 0, and so on; this pins report output regardless of how the
    underlying labeling routine numbers things.
    """
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    mask = np.asarray(mask, bool)
    if mask.size == 0 or not mask.any():
        return []
    structure = _STRUCTURE_4 if connectivity == 4 else _STRUCTURE_8
    labels, _ = ndimage.label(mask, structure=structure)
    flat = labels.ravel()
    nonzero = np.flatnonzero(flat)
    raw, first = np.unique(flat[nonzero], return_index=True)
    order = np.argsort(first, kind="stable")
    ny, nx = mask.shape
    slices = ndimage.find_objects(labels)
    reports = []
    for new_id, k in enumerate(order):
        raw_label = int(raw[k])
        sl = slices[raw_label - 1]
        iy0, iy1 = sl[0].start, sl[0].stop - 1
        ix0, ix1 = sl[1].start, sl[1].stop - 1
        touches = iy0 == 0 or ix0 == 0 or iy1 == ny - 1 or ix1 == nx - 1
        count = int(np.count_nonzero(labels[sl] == raw_label))
        reports.append(ComponentReport(new_id, count, touches, (iy0, iy1, ix0, ix1)))
    return reports


@dataclass(frozen=True)
class UnboundednessReport:
    total_components: int
    frame_touching: int
    interior_ids: tuple[int, ...]
    window: dict | None = None

    @property
    def interior_count(self) -> int:
        return len(self.interior_ids)

    @property
    def all_touch_frame(self) -> bool:
        return self.interior_count == 0


def unboundedness_report(
    components: list[ComponentReport], grid: GridSpec | None = None
) -> UnboundednessReport:
    """Count frame-touching vs interior components.

    Interior components are candidate bounded escaping components, i.e.
    evidence against unboundedness at this resolution; callers should
    pass them through interior_persistence before treating the flag as
    more than a resolution artifact.  The grid argument documents which
    window the counts refer to.
    """
    interior = tuple(c.component_id for c in components if not c.touches_frame)
    return UnboundednessReport(
        total_components=len(components),
        frame_touching=len(components) - len(interior),
        interior_ids=interior,
        window=grid.to_dict() if grid is not None else None,
    )


def _rects_overlap(a: tuple[float, float, float, float],
                   b: tuple[float, float, float, float]) -> bool:
    return a[0] < b[1] and b[0] < a[1] and a[2] < b[3] and b[2] < a[3]


@dataclass(frozen=True)
class PersistenceEntry:
    component_id: int
    persists: bool


def interior_persistence(
    base_components: list[ComponentReport],
    base_grid: GridSpec,
    refined_components: list[ComponentReport],
    refined_grid: GridSpec,
) -> list[PersistenceEntry]:
    """Match interior components of a base run against a refined run.

    An interior component persists when the refined grid has an interior
    component whose plane bounding box overlaps it; otherwise the flag
    is a resolution artifact.
    """
    refined_interior = [c.plane_bbox(refined_grid)
                        for c in refined_components if not c.touches_frame]
    out = []
    for comp in base_components:
        if comp.touches_frame:
            continue
        rect = comp.plane_bbox(base_grid)
        hit = any(_rects_overlap(rect, other) for other in refined_interior)
        out.append(PersistenceEntry(comp.component_id, hit))
    return out
