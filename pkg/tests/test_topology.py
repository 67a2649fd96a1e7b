"""Connected components, frame contact, refinement persistence."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from semidyn.escape import GridSpec
from semidyn.topology import (
    connected_components,
    interior_persistence,
    unboundedness_report,
)


def test_diagonal_pixels_split_under_4_connectivity():
    mask = np.array([[1, 0], [0, 1]], bool)
    assert len(connected_components(mask, connectivity=4)) == 2
    assert len(connected_components(mask, connectivity=8)) == 1


def test_component_ids_dense_in_raster_order():
    mask = np.array([
        [0, 1, 0, 1],
        [0, 1, 0, 1],
        [0, 0, 0, 1],
    ], bool)
    comps = connected_components(mask, connectivity=4)
    assert [c.component_id for c in comps] == [0, 1]
    # id 0 is the component whose first pixel comes first in raster order
    assert comps[0].bbox == (0, 1, 1, 1)
    assert comps[1].bbox == (0, 2, 3, 3)
    assert comps[0].pixel_count == 2 and comps[1].pixel_count == 3


def test_touches_frame():
    mask = np.zeros((5, 5), bool)
    mask[2, 2] = True
    comps = connected_components(mask)
    assert not comps[0].touches_frame
    mask[0, 0] = True
    comps = connected_components(mask)
    assert any(c.touches_frame for c in comps)
    assert sum(c.touches_frame for c in comps) == 1


def test_empty_and_full_masks():
    assert connected_components(np.zeros((4, 4), bool)) == []
    comps = connected_components(np.ones((4, 4), bool))
    assert len(comps) == 1
    assert comps[0].pixel_count == 16 and comps[0].touches_frame


def test_invalid_connectivity():
    with pytest.raises(ValueError):
        connected_components(np.ones((2, 2), bool), connectivity=6)


_masks = arrays(np.bool_, (12, 12), elements=st.booleans())


@given(_masks, st.sampled_from([4, 8]))
@settings(max_examples=150, deadline=None)
def test_components_partition_the_mask(mask, connectivity):
    comps = connected_components(mask, connectivity)
    assert sum(c.pixel_count for c in comps) == int(mask.sum())
    reference = oracles.bfs_components(mask.tolist(), connectivity)
    assert len(comps) == len(reference)
    sizes = sorted(c.pixel_count for c in comps)
    assert sizes == sorted(len(c) for c in reference)


@given(_masks)
@settings(max_examples=100, deadline=None)
def test_component_count_transpose_invariant(mask):
    a = connected_components(mask, 4)
    b = connected_components(mask.T, 4)
    assert len(a) == len(b)
    assert sorted(c.pixel_count for c in a) == sorted(c.pixel_count for c in b)


def test_unboundedness_report():
    mask = np.zeros((6, 6), bool)
    mask[0, 0:3] = True   # touches frame
    mask[3, 3] = True     # interior blob
    grid = GridSpec(-1.0, 1.0, -1.0, 1.0, 6, 6)
    comps = connected_components(mask)
    report = unboundedness_report(comps, grid)
    assert report.total_components == 2
    assert report.frame_touching == 1
    assert report.interior_count == 1
    assert not report.all_touch_frame
    assert report.window == grid.to_dict()
    empty = unboundedness_report([], grid)
    assert empty.total_components == 0 and empty.all_touch_frame


def test_plane_bbox_maps_pixels_to_coordinates():
    grid = GridSpec(0.0, 4.0, 0.0, 4.0, 4, 4)
    mask = np.zeros((4, 4), bool)
    mask[1, 2] = True
    comp = connected_components(mask)[0]
    re0, re1, im0, im1 = comp.plane_bbox(grid)
    assert (re0, re1) == (2.0, 3.0)
    assert (im0, im1) == (1.0, 2.0)


def test_interior_persistence_matches_overlapping_blobs():
    base_grid = GridSpec(0.0, 8.0, 0.0, 8.0, 8, 8)
    fine_grid = base_grid.refined(2)
    base = np.zeros((8, 8), bool)
    base[3:5, 3:5] = True
    base_comps = connected_components(base)
    # persists: the same blob is present at 2x resolution
    fine = np.zeros((16, 16), bool)
    fine[6:10, 6:10] = True
    entries = interior_persistence(base_comps, base_grid,
                                   connected_components(fine), fine_grid)
    assert len(entries) == 1 and entries[0].persists
    # vanishes: nothing overlapping at 2x, a resolution artifact
    entries = interior_persistence(base_comps, base_grid,
                                   connected_components(np.zeros((16, 16), bool)),
                                   fine_grid)
    assert not entries[0].persists


def test_interior_persistence_ignores_frame_components():
    grid = GridSpec(0.0, 4.0, 0.0, 4.0, 4, 4)
    mask = np.zeros((4, 4), bool)
    mask[0, :] = True
    comps = connected_components(mask)
    entries = interior_persistence(comps, grid, comps, grid)
    assert entries == []
