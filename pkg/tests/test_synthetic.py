import numpy as np

from warpinvert.synthetic import (
    edge_map,
    ellipse_mask,
    layout_pair,
    make_synthetic_pair,
    rect_mask,
    render_layout,
)


def test_same_seed_gives_identical_pair():
    a_src, a_tgt = make_synthetic_pair(1)
    b_src, b_tgt = make_synthetic_pair(1)
    assert np.array_equal(a_src, b_src)
    assert np.array_equal(a_tgt, b_tgt)


def test_different_seeds_give_different_layouts():
    a_src, _ = make_synthetic_pair(1)
    b_src, _ = make_synthetic_pair(2)
    assert not np.array_equal(a_src, b_src)


def test_pair_is_unaligned_by_construction():
    source, target = make_synthetic_pair(3)
    assert not np.array_equal(source, target)


def test_rerendered_masks_have_iou_one():
    src_layout, tgt_layout = layout_pair(7)
    for layout in (src_layout, tgt_layout):
        first = ellipse_mask(layout, 16)
        again = ellipse_mask(layout_pair(7)[0 if layout is src_layout else 1], 16)
        union = np.logical_or(first, again).sum()
        inter = np.logical_and(first, again).sum()
        assert union > 0
        assert inter / union == 1.0
        assert np.array_equal(rect_mask(layout, 16),
                              rect_mask(layout, 16))


def test_render_matches_its_layout_masks():
    layout, _ = layout_pair(9)
    image = render_layout(layout, 16)
    inside_rect = rect_mask(layout, 16)
    assert np.allclose(image[inside_rect], layout.rect_color)
    only_ellipse = ellipse_mask(layout, 16) & ~inside_rect
    if only_ellipse.any():
        assert np.allclose(image[only_ellipse], layout.ellipse_color)


def test_images_are_in_range_and_shaped():
    source, target = make_synthetic_pair(11, size=32)
    for img in (source, target):
        assert img.shape == (32, 32, 3)
        assert img.min() >= 0.0
        assert img.max() <= 1.0


def test_edge_variant_is_single_channel_binary():
    source, target = make_synthetic_pair(13, edge_source=True)
    assert source.shape == (16, 16, 1)
    assert set(np.unique(source)) <= {0.0, 1.0}
    assert source.max() == 1.0          # layouts always produce some boundary
    assert target.shape == (16, 16, 3)


def test_edge_map_of_flat_image_is_empty():
    flat = np.full((8, 8, 3), 0.4)
    assert edge_map(flat).sum() == 0.0
