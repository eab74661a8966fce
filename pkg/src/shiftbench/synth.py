"""Procedural three-shape image dataset with fully annotated attributes.

Generates hard-edged 64x64 RGB sprites (square, ellipse, heart) over
solid backgrounds, crossing shape x object color x background color x
size into 81 combinations with a fixed number of instances per cell.
Every pixel is exactly the object color or exactly the background
color, so color-based shortcuts are perfectly available to a model by
construction. Deterministic position jitter prevents solving shape from
a single fixed pixel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from . import catalog
from .errors import JitterOutOfRangeError, SchemaError, ShiftBenchError
from .rng import keyed_generator
from .schema import AnnotationTable, Combination, save_schema, write_table

OBJECT_COLORS: dict[str, tuple[int, int, int]] = {
    "red": (255, 0, 0),
    "yellow": (255, 255, 0),
    "blue": (0, 0, 255),
}
BACKGROUND_COLORS: dict[str, tuple[int, int, int]] = {
    "orange": (255, 153, 51),
    "green": (0, 153, 0),
    "purple": (102, 0, 255),
}
SIZE_FACTORS: dict[str, float] = {"small": 0.8, "middle": 0.9, "big": 1.0}

# Tight bounding box of {(x, y) : (x^2 + y^2 - 1)^3 - x^2 y^3 <= 0},
# precomputed by bisection; the tip sits exactly at (0, -1).
_HEART_XMAX = 1.1390281622
_HEART_YMIN = -1.0
_HEART_YMAX = 1.2366591685


@dataclass(frozen=True)
class SynthSpec:
    """Dataset recipe: image size, instances per combination, jitter."""

    image_side: int = 64
    per_cell: int = 20
    jitter_seed: int = 0
    max_jitter: int | None = None

    def __post_init__(self) -> None:
        if self.image_side < 16:
            raise ShiftBenchError(f"image_side must be >= 16, got {self.image_side}")
        if self.per_cell < 1:
            raise ShiftBenchError(f"per_cell must be >= 1, got {self.per_cell}")
        if self.max_jitter is not None and not 0 <= self.max_jitter <= self.image_side // 8:
            raise JitterOutOfRangeError(
                f"max_jitter must be in [0, {self.image_side // 8}], got {self.max_jitter}"
            )

    @property
    def jitter_limit(self) -> int:
        return self.image_side // 8 if self.max_jitter is None else self.max_jitter


@dataclass(frozen=True)
class SynthImage:
    pixels: np.ndarray
    assignment: Combination
    instance_id: str


def render(
    assignment: Combination,
    jitter: tuple[int, int] = (0, 0),
    image_side: int = 64,
    instance_id: str = "",
) -> SynthImage:
    """Rasterize one (shape, object color, background color, size) cell.

    Hard-edged: a pixel is the object color iff its center falls inside
    the shape, so the image contains exactly two distinct colors. The
    shape is centered at the image center plus ``jitter``. Base extent
    is B = image_side/2; a square has side round(s*B), an ellipse
    semi-axes (s*B/2, 0.35*s*B), and a heart fills the implicit region
    (x^2+y^2-1)^3 - x^2 y^3 <= 0 mapped from its bounding box into an
    s*B pixel box.
    """
    shape_name, object_color, background_color, size_name = assignment
    if shape_name not in catalog.SYNTH.label.values:
        raise SchemaError(f"unknown shape {shape_name!r}")
    if object_color not in OBJECT_COLORS:
        raise SchemaError(f"unknown object color {object_color!r}")
    if background_color not in BACKGROUND_COLORS:
        raise SchemaError(f"unknown background color {background_color!r}")
    if size_name not in SIZE_FACTORS:
        raise SchemaError(f"unknown size {size_name!r}")
    dx, dy = jitter
    if abs(dx) > image_side / 8 or abs(dy) > image_side / 8:
        raise JitterOutOfRangeError(
            f"jitter {jitter} exceeds +-{image_side / 8:.0f} pixels"
        )

    scale = SIZE_FACTORS[size_name]
    base = image_side / 2.0
    cx = image_side / 2.0 + dx
    cy = image_side / 2.0 + dy
    ys, xs = np.mgrid[0:image_side, 0:image_side]
    px = xs + 0.5
    py = ys + 0.5

    if shape_name == "square":
        side = int(np.floor(scale * base + 0.5))
        x0 = int(np.floor(cx - side / 2.0 + 0.5))
        y0 = int(np.floor(cy - side / 2.0 + 0.5))
        mask = (xs >= x0) & (xs < x0 + side) & (ys >= y0) & (ys < y0 + side)
    elif shape_name == "ellipse":
        a = scale * base / 2.0
        b = 0.35 * scale * base
        mask = ((px - cx) / a) ** 2 + ((py - cy) / b) ** 2 <= 1.0
    else:  # heart
        half = scale * base / 2.0
        u = (px - cx) / half
        v = (cy - py) / half
        hx = u * _HEART_XMAX
        hy = _HEART_YMIN + (v + 1.0) / 2.0 * (_HEART_YMAX - _HEART_YMIN)
        mask = (hx**2 + hy**2 - 1.0) ** 3 - hx**2 * hy**3 <= 0.0

    if not mask.any():
        raise ShiftBenchError(f"degenerate raster for {assignment}")
    pixels = np.empty((image_side, image_side, 3), dtype=np.uint8)
    pixels[:] = BACKGROUND_COLORS[background_color]
    pixels[mask] = OBJECT_COLORS[object_color]
    return SynthImage(pixels=pixels, assignment=assignment, instance_id=instance_id)


def instance_id_for(assignment: Combination, k: int) -> str:
    return f"synth_{'-'.join(assignment)}_{k}"


def jitter_for(spec: SynthSpec, assignment: Combination, k: int) -> tuple[int, int]:
    """Deterministic per-instance jitter, independent across instances."""
    limit = spec.jitter_limit
    if limit == 0:
        return (0, 0)
    gen = keyed_generator(spec.jitter_seed, "|".join(assignment), k)
    dx, dy = gen.integers(-limit, limit + 1, size=2)
    return int(dx), int(dy)


def generate_dataset(spec: SynthSpec, out_dir: str | Path) -> AnnotationTable:
    """Write ``81 * per_cell`` PNGs plus annotations and the recipe.

    Layout: ``images/<id>.png``, ``annotations.csv``, ``spec.json``.
    A pure function of ``spec``: identical specs produce identical
    bytes.
    """
    out = Path(out_dir)
    images = out / "images"
    images.mkdir(parents=True, exist_ok=True)
    schema = catalog.SYNTH
    rows = []
    for assignment in schema.combinations():
        for k in range(spec.per_cell):
            instance_id = instance_id_for(assignment, k)
            image = render(
                assignment,
                jitter=jitter_for(spec, assignment, k),
                image_side=spec.image_side,
                instance_id=instance_id,
            )
            Image.fromarray(image.pixels, "RGB").save(images / f"{instance_id}.png")
            rows.append(
                (instance_id, dict(zip(schema.attribute_names, assignment)))
            )
    table = AnnotationTable(schema=schema, rows=tuple(rows))
    write_table(table, out / "annotations.csv")
    save_schema(schema, out / "schema.json")
    save_spec(spec, out / "spec.json")
    return table


def spec_to_dict(spec: SynthSpec) -> dict:
    return {
        "image_side": spec.image_side,
        "per_cell": spec.per_cell,
        "jitter_seed": spec.jitter_seed,
        "max_jitter": spec.jitter_limit,
        "shapes": list(catalog.SYNTH.label.values),
        "object_colors": {k: list(v) for k, v in OBJECT_COLORS.items()},
        "background_colors": {k: list(v) for k, v in BACKGROUND_COLORS.items()},
        "size_factors": SIZE_FACTORS,
    }


def spec_from_dict(data: dict) -> SynthSpec:
    recorded = {k: tuple(v) for k, v in data.get("object_colors", {}).items()}
    if recorded and recorded != OBJECT_COLORS:
        raise SchemaError("recorded object colors differ from this build's palette")
    return SynthSpec(
        image_side=data["image_side"],
        per_cell=data["per_cell"],
        jitter_seed=data["jitter_seed"],
        max_jitter=data.get("max_jitter"),
    )


def save_spec(spec: SynthSpec, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(spec_to_dict(spec), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_spec(path: str | Path) -> SynthSpec:
    with Path(path).open(encoding="utf-8") as fh:
        return spec_from_dict(json.load(fh))
