"""Procedural sprite rendering and dataset generation."""

from __future__ import annotations

import numpy as np
import pytest
from PIL import Image

from shiftbench.errors import JitterOutOfRangeError, SchemaError, ShiftBenchError
from shiftbench.synth import (
    BACKGROUND_COLORS,
    OBJECT_COLORS,
    SIZE_FACTORS,
    SynthSpec,
    generate_dataset,
    instance_id_for,
    jitter_for,
    load_spec,
    render,
    spec_from_dict,
    spec_to_dict,
)

BIG_RED_ON_ORANGE = ("square", "red", "orange", "big")


def object_mask(image):
    """Boolean mask of pixels carrying the object color."""
    color = np.array(OBJECT_COLORS[image.assignment[1]], dtype=np.uint8)
    return (image.pixels == color).all(axis=2)


class TestRenderGeometry:
    def test_big_square_is_exactly_1024_pixels(self):
        image = render(BIG_RED_ON_ORANGE)
        assert image.pixels.shape == (64, 64, 3)
        assert object_mask(image).sum() == 1024

    @pytest.mark.parametrize("jitter", [(0, 0), (8, 8), (-8, -8), (5, -7)])
    def test_square_pixel_count_is_jitter_invariant(self, jitter):
        assert object_mask(render(BIG_RED_ON_ORANGE, jitter=jitter)).sum() == 1024

    def test_small_square_is_exactly_676_pixels(self):
        image = render(("square", "red", "orange", "small"))
        assert object_mask(image).sum() == 676

    @pytest.mark.parametrize("shape", ["square", "ellipse", "heart"])
    def test_size_ratio_tracks_scale_squared(self, shape):
        def count(size):
            return object_mask(render((shape, "red", "orange", size))).sum()

        big = count("big")
        assert count("small") / big == pytest.approx(0.8**2, abs=0.03)
        assert count("middle") / big == pytest.approx(0.9**2, abs=0.03)

    @pytest.mark.parametrize("shape", ["square", "ellipse", "heart"])
    @pytest.mark.parametrize("jitter", [(3, 4), (-8, 8)])
    def test_area_is_preserved_under_jitter(self, shape, jitter):
        combo = (shape, "blue", "green", "big")
        centered = object_mask(render(combo)).sum()
        moved = object_mask(render(combo, jitter=jitter)).sum()
        assert moved == centered

    def test_jitter_translates_the_shape(self):
        base = object_mask(render(BIG_RED_ON_ORANGE))
        shifted = object_mask(render(BIG_RED_ON_ORANGE, jitter=(4, 2)))
        assert np.array_equal(np.roll(base, (2, 4), axis=(0, 1)), shifted)

    def test_ellipse_is_wider_than_tall(self):
        mask = object_mask(render(("ellipse", "red", "orange", "big")))
        rows = np.flatnonzero(mask.any(axis=1))
        cols = np.flatnonzero(mask.any(axis=0))
        width = cols[-1] - cols[0] + 1
        height = rows[-1] - rows[0] + 1
        assert width > height

    def test_heart_lobes_point_up(self):
        mask = object_mask(render(("heart", "red", "orange", "big")))
        top = mask[:32].sum()
        bottom = mask[32:].sum()
        assert top > bottom
        # the bottom tip narrows to a point, the top splits into lobes
        tip_row = mask[np.flatnonzero(mask.any(axis=1))[-1]]
        assert tip_row.sum() <= 4

    def test_shapes_are_pairwise_distinct(self):
        masks = {
            shape: object_mask(render((shape, "red", "orange", "big")))
            for shape in ("square", "ellipse", "heart")
        }
        for a in masks:
            for b in masks:
                if a != b:
                    assert (masks[a] ^ masks[b]).any()


class TestRenderColors:
    @pytest.mark.parametrize("combo_index", range(0, 81, 7))
    def test_every_pixel_is_object_or_background(self, synth_schema, combo_index):
        combo = synth_schema.combinations()[combo_index]
        image = render(combo, jitter=(-6, 3))
        flat = image.pixels.reshape(-1, 3)
        seen = {tuple(c) for c in np.unique(flat, axis=0)}
        assert seen == {
            OBJECT_COLORS[combo[1]],
            BACKGROUND_COLORS[combo[2]],
        }

    def test_palettes_do_not_overlap(self):
        assert not set(OBJECT_COLORS.values()) & set(BACKGROUND_COLORS.values())

    def test_size_factors(self):
        assert SIZE_FACTORS == {"small": 0.8, "middle": 0.9, "big": 1.0}


class TestRenderValidation:
    @pytest.mark.parametrize(
        "combo",
        [
            ("triangle", "red", "orange", "big"),
            ("square", "cyan", "orange", "big"),
            ("square", "red", "black", "big"),
            ("square", "red", "orange", "huge"),
        ],
    )
    def test_unknown_names_rejected(self, combo):
        with pytest.raises(SchemaError):
            render(combo)

    @pytest.mark.parametrize("jitter", [(9, 0), (0, -9), (64, 64)])
    def test_jitter_bound_is_an_eighth_of_the_side(self, jitter):
        with pytest.raises(JitterOutOfRangeError):
            render(BIG_RED_ON_ORANGE, jitter=jitter)

    def test_render_is_deterministic(self):
        a = render(BIG_RED_ON_ORANGE, jitter=(2, -2))
        b = render(BIG_RED_ON_ORANGE, jitter=(2, -2))
        assert np.array_equal(a.pixels, b.pixels)


class TestSynthSpec:
    def test_defaults(self):
        spec = SynthSpec()
        assert spec.image_side == 64
        assert spec.per_cell == 20
        assert spec.jitter_limit == 8

    def test_explicit_jitter_cap(self):
        assert SynthSpec(max_jitter=2).jitter_limit == 2
        assert SynthSpec(max_jitter=0).jitter_limit == 0

    def test_rejects_bad_values(self):
        with pytest.raises(ShiftBenchError):
            SynthSpec(image_side=8)
        with pytest.raises(ShiftBenchError):
            SynthSpec(per_cell=0)
        with pytest.raises(JitterOutOfRangeError):
            SynthSpec(max_jitter=9)

    def test_dict_round_trip_resolves_jitter(self):
        spec = SynthSpec(per_cell=5)
        loaded = spec_from_dict(spec_to_dict(spec))
        assert loaded.per_cell == 5
        assert loaded.jitter_limit == spec.jitter_limit

    def test_palette_mismatch_rejected(self):
        data = spec_to_dict(SynthSpec())
        data["object_colors"]["red"] = [200, 0, 0]
        with pytest.raises(SchemaError):
            spec_from_dict(data)


class TestJitterFor:
    def test_deterministic_and_bounded(self):
        spec = SynthSpec(max_jitter=2)
        combo = ("heart", "blue", "purple", "middle")
        first = jitter_for(spec, combo, 3)
        assert first == jitter_for(spec, combo, 3)
        assert abs(first[0]) <= 2 and abs(first[1]) <= 2

    def test_zero_limit_pins_shapes(self):
        spec = SynthSpec(max_jitter=0)
        assert jitter_for(spec, ("square", "red", "orange", "big"), 0) == (0, 0)

    def test_instances_get_different_jitter(self):
        spec = SynthSpec(max_jitter=8)
        combo = ("square", "red", "orange", "big")
        draws = {jitter_for(spec, combo, k) for k in range(12)}
        assert len(draws) > 1


class TestGenerateDataset:
    def test_layout_and_counts(self, tmp_path):
        spec = SynthSpec(per_cell=2, max_jitter=2)
        table = generate_dataset(spec, tmp_path)
        assert table.n == 162
        pngs = sorted((tmp_path / "images").glob("*.png"))
        assert len(pngs) == 162
        assert (tmp_path / "annotations.csv").exists()
        assert (tmp_path / "schema.json").exists()
        assert load_spec(tmp_path / "spec.json").per_cell == 2

    def test_ids_follow_assignment(self, tmp_path):
        spec = SynthSpec(per_cell=1, max_jitter=0)
        table = generate_dataset(spec, tmp_path)
        for instance_id, assignment in table.rows:
            combo = table.combination_of(assignment)
            assert instance_id == instance_id_for(combo, 0)
            assert (tmp_path / "images" / f"{instance_id}.png").exists()

    def test_regeneration_is_byte_identical(self, tmp_path):
        spec = SynthSpec(per_cell=1, max_jitter=3)
        generate_dataset(spec, tmp_path / "a")
        generate_dataset(spec, tmp_path / "b")
        assert (
            (tmp_path / "a" / "annotations.csv").read_bytes()
            == (tmp_path / "b" / "annotations.csv").read_bytes()
        )
        name = "synth_heart-blue-purple-big_0.png"
        assert (
            (tmp_path / "a" / "images" / name).read_bytes()
            == (tmp_path / "b" / "images" / name).read_bytes()
        )

    def test_written_pixels_survive_png_round_trip(self, tmp_path):
        spec = SynthSpec(per_cell=1, max_jitter=0)
        generate_dataset(spec, tmp_path)
        name = instance_id_for(("square", "red", "orange", "big"), 0)
        loaded = np.asarray(Image.open(tmp_path / "images" / f"{name}.png"))
        rendered = render(BIG_RED_ON_ORANGE)
        assert np.array_equal(loaded, rendered.pixels)
