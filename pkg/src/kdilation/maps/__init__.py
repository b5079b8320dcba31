"""Explicit piecewise-smooth maps between spheres and cubes."""

from .base import (
    DomainError,
    MapError,
    MapNode,
    NonFiniteError,
    Space,
    SpaceKind,
    cube,
    evaluate,
    sphere,
    sphere_frames,
    sphere_product,
)
from .chart import ChartCapacityError, RectangleChart
from .combinators import Compose, CompositionError, Product, Suspend
from .construct import CONSTRUCTIONS, Prop1Map, named_construction, prop1_construct
from .expr import MapExpr, dump_expr, load_expr
from .grammar import MapSpecError, parse_map_spec
from .primitives import Constant, CubeCollapse, DegreeWrap, Hopf, Rescale, Rotation, Smash

__all__ = [
    "CONSTRUCTIONS",
    "ChartCapacityError",
    "Compose",
    "CompositionError",
    "Constant",
    "CubeCollapse",
    "DegreeWrap",
    "DomainError",
    "Hopf",
    "MapError",
    "MapExpr",
    "MapNode",
    "MapSpecError",
    "NonFiniteError",
    "Product",
    "Prop1Map",
    "RectangleChart",
    "Rescale",
    "Rotation",
    "Smash",
    "Space",
    "SpaceKind",
    "Suspend",
    "cube",
    "dump_expr",
    "evaluate",
    "load_expr",
    "named_construction",
    "parse_map_spec",
    "prop1_construct",
    "sphere",
    "sphere_frames",
    "sphere_product",
]
