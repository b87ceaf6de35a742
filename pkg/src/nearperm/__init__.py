"""Near permutations and near actions on finitely presented carriers."""

from .carrier import AxisDomain, Carrier, Cell, Point, Rect, RectSet, make_rect, pt
from .nearmap import NearMap, Piece, Transform, compose, index, invert, near_equal
from .nearaction import GroupSpec, NearAction

__version__ = "0.1.0"

__all__ = [
    "AxisDomain", "Carrier", "Cell", "Point", "Rect", "RectSet", "make_rect", "pt",
    "NearMap", "Piece", "Transform", "compose", "index", "invert", "near_equal",
    "GroupSpec", "NearAction",
]
