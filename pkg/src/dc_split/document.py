"""JSON field documents: parsing, validation and deterministic output."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import DCSplitError
from .field import PLField
from .geometry import as_ccw_polygon, polygon_area
from .mesh import Triangulation, triangulate_grid
from .presets import PRESETS, SQUARE, default_grid, preset_function

__all__ = [
    "SCHEMA",
    "DocumentError",
    "FieldDocument",
    "parse_document",
    "load_document",
    "dump_json",
    "build_field",
    "preset_document",
    "document_from_field",
]

SCHEMA = "dc-split/1"


class DocumentError(DCSplitError):
    """Malformed input document; the message lists every problem found."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridSpec(_Strict):
    nx: int = Field(ge=2)
    ny: int = Field(ge=2)


class MeshSpec(_Strict):
    vertices: list[tuple[float, float]] = Field(min_length=3)
    triangles: list[tuple[int, int, int]] = Field(min_length=1)


class Metadata(_Strict):
    name: str = ""
    units: str = ""


class FieldDocument(_Strict):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    schema_: Literal["dc-split/1"] = Field(default=SCHEMA, alias="schema")
    domain: list[tuple[float, float]] = Field(min_length=3)
    grid: Optional[GridSpec] = None
    mesh: Optional[MeshSpec] = None
    values: Optional[list[float]] = None
    preset: Optional[str] = None
    metadata: Metadata = Field(default_factory=Metadata)

    @model_validator(mode="after")
    def _one_of_each(self):
        if (self.grid is None) == (self.mesh is None):
            raise ValueError("give exactly one of 'grid' or 'mesh'")
        if (self.values is None) == (self.preset is None):
            raise ValueError("give exactly one of 'values' or 'preset'")
        if self.preset is not None and self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}; choose from {', '.join(PRESETS)}")
        return self


def _format_errors(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<document>"
        lines.append(f"{loc}: {err['msg']}")
    return "\n".join(lines)


def parse_document(text: str) -> FieldDocument:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        return FieldDocument.model_validate(raw)
    except ValidationError as exc:
        raise DocumentError(_format_errors(exc)) from None


def load_document(source: str) -> FieldDocument:
    """Read a document from a path, or build one from ``preset:NAME``."""
    if source.startswith("preset:"):
        return preset_document(source.split(":", 1)[1])
    try:
        text = Path(source).read_text()
    except OSError as exc:
        raise DocumentError(f"{source}: {exc.strerror}") from None
    return parse_document(text)


def _mesh(doc: FieldDocument) -> Triangulation:
    try:
        domain = as_ccw_polygon(doc.domain)
    except DCSplitError as exc:
        raise DocumentError(f"domain: {exc}") from None
    if doc.grid is not None:
        return triangulate_grid(domain, doc.grid.nx, doc.grid.ny)
    m = doc.mesh
    try:
        mesh = Triangulation.from_arrays(np.array(m.vertices), np.array(m.triangles))
    except (DCSplitError, IndexError) as exc:
        raise DocumentError(f"mesh: {exc}") from None
    if abs(polygon_area(mesh.domain) - polygon_area(domain)) > mesh.tol:
        raise DocumentError("mesh: triangles do not cover the domain")
    return mesh


def build_field(doc: FieldDocument) -> PLField:
    mesh = _mesh(doc)
    if doc.preset is not None:
        V = mesh.vertices
        return PLField(mesh, preset_function(doc.preset)(V[:, 0], V[:, 1]))
    if len(doc.values) != mesh.n_vertices:
        raise DocumentError(
            f"values: expected {mesh.n_vertices} entries for the mesh, got {len(doc.values)}")
    try:
        return PLField(mesh, np.array(doc.values, dtype=float))
    except DCSplitError as exc:
        raise DocumentError(f"values: {exc}") from None


def preset_document(name: str, nx: int | None = None, ny: int | None = None) -> FieldDocument:
    if nx is None or ny is None:
        nx, ny = default_grid(name)
    return FieldDocument(domain=list(SQUARE), grid=GridSpec(nx=nx, ny=ny), preset=name,
                         metadata=Metadata(name=name))


def document_from_field(field: PLField, nx: int | None = None, ny: int | None = None,
                        name: str = "", units: str = "") -> FieldDocument:
    """Document holding explicit node values; the mesh is a grid when sizes are given."""
    mesh = field.mesh
    common = dict(domain=[tuple(p) for p in mesh.domain.tolist()],
                  values=field.values.tolist(), metadata=Metadata(name=name, units=units))
    if nx is not None and ny is not None:
        return FieldDocument(grid=GridSpec(nx=nx, ny=ny), **common)
    return FieldDocument(mesh=MeshSpec(vertices=[tuple(v) for v in mesh.vertices.tolist()],
                                       triangles=[tuple(t) for t in mesh.triangles.tolist()]),
                         **common)


def dump_json(obj: Any) -> str:
    """Deterministic JSON text; floats use the shortest round-trip repr."""
    if isinstance(obj, BaseModel):
        obj = obj.model_dump(by_alias=True, exclude_none=True)
    return json.dumps(obj, indent=1, allow_nan=False) + "\n"
