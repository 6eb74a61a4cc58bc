import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from occlabel.config import GridConfig, PipelineConfig, dumps, loads

pos = st.floats(1e-3, 1e4, allow_nan=False)
small = st.floats(-50, 50, allow_nan=False)
vec = st.tuples(small, small, small)


@st.composite
def configs(draw):
    lo = draw(vec)
    hi = tuple(a + draw(st.floats(0, 10)) for a in lo)
    exp = draw(st.floats(1, 1e3))
    grid = GridConfig(
        origin_m=draw(vec),
        voxel_size_m=draw(pos),
        dims=tuple(draw(st.integers(1, 64)) for _ in range(3)),
        ego_centered=draw(st.booleans()),
    )
    return PipelineConfig(
        range_m=draw(pos),
        range_shape=draw(st.sampled_from(["sphere", "box"])),
        target_count=draw(st.integers(1, 10**7)),
        seed=draw(st.integers(0, 2**64 - 1)),
        grid=grid,
        octree_base_voxel_size_m=draw(pos),
        octree_anchors_per_voxel=draw(st.integers(1, 64)),
        octree_expand_threshold=exp,
        octree_contract_threshold=draw(st.floats(0, exp * 0.99)),
        ground_grid_spacing_m=draw(pos),
        ground_height_offset_m=draw(pos),
        ground_extent_m=draw(pos),
        box_inflation=draw(st.floats(1.0, 2.0)),
        ego_min_m=lo,
        ego_max_m=hi,
        camera_union=draw(st.booleans()),
        rig_offsets_m=tuple(draw(st.lists(vec, min_size=1, max_size=4))),
    )


@settings(max_examples=100, deadline=None)
@given(configs())
def test_round_trip(cfg):
    assert loads(dumps(cfg)) == cfg


def test_default_round_trip_and_units_in_keys():
    text = dumps(PipelineConfig())
    assert "range_m = 40.0" in text
    assert "[grid]" in text
    assert loads(text) == PipelineConfig()


def test_integers_accepted_for_floats():
    cfg = loads("range_m = 30\n[grid]\nvoxel_size_m = 1\n")
    assert cfg.range_m == 30.0 and isinstance(cfg.range_m, float)
    assert cfg.grid.voxel_size_m == 1.0


@pytest.mark.parametrize(
    "text",
    [
        "bogus = 1\n",
        "[grid]\nbogus = 1\n",
        "range_m = -1.0\n",
        "range_shape = 'cube'\n",
        "seed = -1\n",
        "ego_min_m = [0.0, 0.0, 1.0]\nego_max_m = [0.0, 0.0, 0.0]\n",
        "[grid]\ndims = [0, 1, 1]\n",
    ],
)
def test_rejects_invalid(text):
    with pytest.raises(ValueError):
        loads(text)


def test_spec_for_ego_centered():
    g = GridConfig(origin_m=(-1.0, -2.0, -3.0), voxel_size_m=0.5, dims=(4, 4, 4))
    assert list(g.spec_for((10.0, 0.0, 1.0)).origin) == [9.0, -2.0, -2.0]
    fixed = GridConfig(origin_m=(-1.0, -2.0, -3.0), voxel_size_m=0.5, dims=(4, 4, 4), ego_centered=False)
    assert list(fixed.spec_for((10.0, 0.0, 1.0)).origin) == [-1.0, -2.0, -3.0]
