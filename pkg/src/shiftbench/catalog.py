"""Built-in attribute schemas for the five controlled benchmark datasets.

Each schema fixes one label attribute and three shift attributes. The
CelebA and DeepFashion value sets are the usual binarized buckets; the
binarization itself is assumed to happen upstream when the annotation
tables are produced.

``synth`` is the self-contained procedural dataset (see :mod:`.synth`);
it mirrors the dSprites attribute structure so the full pipeline runs
without any external data.
"""

from __future__ import annotations

from .errors import SchemaError
from .schema import AttributeDef, AttributeSchema

_CATALOG: dict[str, AttributeSchema] = {}


def _register(schema: AttributeSchema) -> AttributeSchema:
    _CATALOG[schema.dataset_name] = schema
    return schema


DSPRITES = _register(
    AttributeSchema(
        dataset_name="dsprites",
        label=AttributeDef("object_shape", ("square", "ellipse", "heart")),
        shift_attributes=(
            AttributeDef("object_color", ("red", "yellow", "blue")),
            AttributeDef("background_color", ("orange", "green", "purple")),
            AttributeDef("object_size", ("small", "middle", "big")),
        ),
    )
)

SHAPES3D = _register(
    AttributeSchema(
        dataset_name="shapes3d",
        label=AttributeDef("object_shape", ("cube", "cylinder", "sphere", "capsule")),
        shift_attributes=(
            AttributeDef("object_color", ("red", "orange", "yellow", "green")),
            AttributeDef("background_color", ("red", "orange", "yellow", "green")),
            AttributeDef("object_size", ("tiny", "small", "middle", "big")),
        ),
    )
)

SMALLNORB = _register(
    AttributeSchema(
        dataset_name="smallnorb",
        label=AttributeDef("object", ("animal", "human", "car", "truck", "airplane")),
        shift_attributes=(
            AttributeDef("azimuth", ("0", "80", "160", "240", "320")),
            AttributeDef("lighting", ("0", "1", "2", "3", "4")),
            AttributeDef("elevation", ("30", "40", "50", "60", "70")),
        ),
    )
)

CELEBA = _register(
    AttributeSchema(
        dataset_name="celeba",
        label=AttributeDef("gender", ("male", "female")),
        shift_attributes=(
            AttributeDef("hair_color", ("black", "others")),
            AttributeDef("smiling", ("smiling", "no_smiling")),
            AttributeDef("hair_style", ("straight", "others")),
        ),
    )
)

DEEPFASHION = _register(
    AttributeSchema(
        dataset_name="deepfashion",
        label=AttributeDef("dress", ("skirt", "others")),
        shift_attributes=(
            AttributeDef("pattern", ("floral", "solid")),
            AttributeDef("sleeve", ("long_sleeve", "sleeveless")),
            AttributeDef("fabric", ("chiffon", "cotton")),
        ),
    )
)

SYNTH = _register(
    AttributeSchema(
        dataset_name="synth",
        label=AttributeDef("object_shape", ("square", "ellipse", "heart")),
        shift_attributes=(
            AttributeDef("object_color", ("red", "yellow", "blue")),
            AttributeDef("background_color", ("orange", "green", "purple")),
            AttributeDef("object_size", ("small", "middle", "big")),
        ),
    )
)

CONTROLLED_DATASETS = ("dsprites", "shapes3d", "smallnorb", "celeba", "deepfashion")


def builtin_schema(name: str) -> AttributeSchema:
    """Look up a built-in schema by dataset name."""
    try:
        return _CATALOG[name]
    except KeyError:
        raise SchemaError(
            f"unknown dataset {name!r}; built-ins: {sorted(_CATALOG)}"
        ) from None
