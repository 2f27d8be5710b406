"""Site designs and block-maxima panels shared by every module."""
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from itertools import combinations

import numpy as np

from .errors import DesignError, ParameterDomainError, ScaleError, SchemaError


class MarginScale(str, Enum):
    RAW = "raw"
    UNIT_FRECHET = "unit-frechet"
    UNIT_GUMBEL = "unit-gumbel"


class SpatialDesign:
    """Site identifiers and planar coordinates with cached Euclidean distances."""

    def __init__(self, coords, ids=None):
        coords = np.array(coords, dtype=float)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise SchemaError("coordinates must be an array of shape (D, 2)")
        if coords.shape[0] < 2:
            raise SchemaError("a design needs at least two sites")
        if not np.all(np.isfinite(coords)):
            raise SchemaError("coordinates must be finite")
        if ids is None:
            ids = [f"s{i + 1}" for i in range(coords.shape[0])]
        ids = [str(i) for i in ids]
        if len(ids) != coords.shape[0]:
            raise SchemaError("one id per site is required")
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise SchemaError(f"duplicated site id(s): {', '.join(dup)}")
        coords.setflags(write=False)
        self.coords = coords
        self.ids = tuple(ids)

    @classmethod
    def uniform_square(cls, n_sites, rng, side=10.0):
        """Sites drawn uniformly on ``[0, side]^2``."""
        return cls(rng.uniform(0.0, side, size=(n_sites, 2)))

    def __len__(self):
        return self.coords.shape[0]

    @property
    def D(self):
        return self.coords.shape[0]

    def __eq__(self, other):
        if not isinstance(other, SpatialDesign):
            return NotImplemented
        return self.ids == other.ids and np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash((self.ids, self.coords.tobytes()))

    def __repr__(self):
        return f"SpatialDesign(D={self.D})"

    @cached_property
    def distances(self):
        diff = self.coords[:, None, :] - self.coords[None, :, :]
        d = np.sqrt((diff ** 2).sum(axis=-1))
        d.setflags(write=False)
        return d

    @property
    def diameter(self):
        return float(self.distances.max())

    @cached_property
    def pairs(self):
        """All (j, k) with j < k in lexicographic order, shape (C(D,2), 2)."""
        j, k = np.triu_indices(self.D, k=1)
        p = np.column_stack([j, k]).astype(np.intp)
        p.setflags(write=False)
        return p

    @property
    def pair_distances(self):
        p = self.pairs
        return self.distances[p[:, 0], p[:, 1]]

    @cached_property
    def triplets(self):
        """All (j, k, l) with j < k < l in lexicographic order, shape (C(D,3), 3)."""
        t = np.array(list(combinations(range(self.D), 3)), dtype=np.intp).reshape(-1, 3)
        t.setflags(write=False)
        return t

    @property
    def triangle_sides(self):
        t = self.triplets
        d = self.distances
        return np.column_stack([d[t[:, 0], t[:, 1]], d[t[:, 0], t[:, 2]], d[t[:, 1], t[:, 2]]])

    def check_same(self, other):
        if self != other:
            raise DesignError("objects were built on different spatial designs")


@dataclass(eq=False)
class BlockMaximaPanel:
    """n blocks (rows) by D sites (columns) on a tagged margin scale."""

    values: np.ndarray
    scale: MarginScale
    design: SpatialDesign
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.scale = MarginScale(self.scale)
        if self.values.ndim != 2 or self.values.shape[0] < 1:
            raise SchemaError("panel values must be a non-empty 2-D array")
        if self.values.shape[1] != self.design.D:
            raise SchemaError(
                f"panel has {self.values.shape[1]} columns but the design has {self.design.D} sites")
        if self.scale is MarginScale.UNIT_FRECHET and not np.all(self.values > 0):
            raise ParameterDomainError("unit-Frechet panels must be strictly positive")

    @property
    def n_blocks(self):
        return self.values.shape[0]

    def require(self, scale):
        if self.scale is not MarginScale(scale):
            raise ScaleError(f"expected a {MarginScale(scale).value} panel, got {self.scale.value}")
        return self
