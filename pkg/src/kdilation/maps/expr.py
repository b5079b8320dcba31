"""The MapExpr union and its JSON expression-tree form."""

from typing import Annotated

from pydantic import Field, TypeAdapter

from .chart import RectangleChart
from .combinators import Compose, Product, Suspend
from .construct import Prop1Map
from .primitives import Constant, CubeCollapse, DegreeWrap, Hopf, Rescale, Rotation, Smash

MapExpr = Annotated[
    Hopf
    | Rotation
    | DegreeWrap
    | CubeCollapse
    | Rescale
    | Smash
    | Constant
    | RectangleChart
    | Compose
    | Product
    | Suspend
    | Prop1Map,
    Field(discriminator="kind"),
]

for _node in (Compose, Product, Suspend, Prop1Map):
    _node.model_rebuild()

_adapter: TypeAdapter[MapExpr] = TypeAdapter(MapExpr)


def dump_expr(expr: MapExpr, indent: int | None = 2) -> str:
    """JSON expression tree; floats keep their shortest round-trip form."""
    return _adapter.dump_json(expr, indent=indent).decode()


def load_expr(text: str | bytes) -> MapExpr:
    return _adapter.validate_json(text)
