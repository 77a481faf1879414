"""Enumerate every geodesic shorter than a radius between two points of a triangle mesh."""

from .mesh import AtVertex, InFace, MeshError, OnEdge, TriangleMesh, VertexClass, canonicalize, load_mesh, parse_point_spec
from .propagation import BuildCapExceeded, GeodesicIntervalTree, Mode, build_git
from .query import (
    GeodesicGraph,
    GeodesicPath,
    PrimitiveGeodesic,
    build_geodesic_graph,
    enum_complete,
    enum_reduced,
    enumerate_geodesics,
    get_intervals,
    paths_of_graph,
)

__all__ = [
    "AtVertex",
    "BuildCapExceeded",
    "GeodesicGraph",
    "GeodesicIntervalTree",
    "GeodesicPath",
    "InFace",
    "MeshError",
    "Mode",
    "OnEdge",
    "PrimitiveGeodesic",
    "TriangleMesh",
    "VertexClass",
    "build_geodesic_graph",
    "build_git",
    "canonicalize",
    "enum_complete",
    "enum_reduced",
    "enumerate_geodesics",
    "get_intervals",
    "load_mesh",
    "parse_point_spec",
    "paths_of_graph",
]
