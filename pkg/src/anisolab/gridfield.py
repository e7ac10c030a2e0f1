"""Scalar fields on uniform square grids, with mask and file plumbing.

Fields live on the nodes of an N x N grid with spacing h over
[x0, x0 + (N-1) h]^2 and extend by zero outside; gradients are forward
differences per cell, so a field that is zero on the boundary nodes has
all of its energy inside the box.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .aniso2d import SampledFn2D

__all__ = ["GridField2D", "forward_gradient", "divergence_of", "mask_to_rle", "mask_from_rle"]


@dataclass
class GridField2D:
    values: np.ndarray
    h: float
    x0: float = 0.0
    y0: float = 0.0

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def cell_area(self):
        return self.h * self.h

    def axis(self):
        return self.x0 + self.h * np.arange(self.n)

    @classmethod
    def zeros(cls, n, h, x0=0.0, y0=0.0):
        return cls(values=np.zeros((n, n)), h=h, x0=x0, y0=y0)

    @classmethod
    def unit_square(cls, n):
        """n x n nodes over [0, 1]^2."""
        return cls.zeros(n, 1.0 / (n - 1))

    def copy(self):
        return GridField2D(self.values.copy(), self.h, self.x0, self.y0)

    def as_sampled(self):
        return SampledFn2D(x0=self.x0, y0=self.y0, hx=self.h, hy=self.h, values=self.values)

    def to_binary(self, path):
        self.as_sampled().to_binary(path)

    @classmethod
    def from_binary(cls, path):
        s = SampledFn2D.from_binary(path)
        if s.nx != s.ny:
            raise ValueError("grid fields are square")
        return cls(values=s.values, h=s.hx, x0=s.x0, y0=s.y0)

    def to_csv(self, path):
        self.as_sampled().to_csv(path)


def forward_gradient(values, h):
    """Cell gradients ((N-1) x (N-1) arrays): forward differences at each
    cell's lower-left node."""
    gx = (values[1:, :-1] - values[:-1, :-1]) / h
    gy = (values[:-1, 1:] - values[:-1, :-1]) / h
    return gx, gy


def divergence_of(ax, ay, h, n):
    """Discrete divergence adjoint to forward_gradient: node array from
    cell vector fields with sum_cells(grad u . (ax, ay)) = -sum_nodes(u * div)."""
    out = np.zeros((n, n))
    out[:-1, :-1] += ax + ay
    out[1:, :-1] -= ax
    out[:-1, 1:] -= ay
    return out / h


def mask_to_rle(mask):
    """Run-length encode a boolean node mask as {"n": N, "runs": [[i, j0, len]]}."""
    mask = np.asarray(mask, dtype=bool)
    runs = []
    for i in range(mask.shape[0]):
        j = 0
        row = mask[i]
        while j < len(row):
            if row[j]:
                j0 = j
                while j < len(row) and row[j]:
                    j += 1
                runs.append([int(i), int(j0), int(j - j0)])
            else:
                j += 1
    return {"n": int(mask.shape[0]), "runs": runs}


def mask_from_rle(data):
    n = data["n"]
    mask = np.zeros((n, n), dtype=bool)
    for i, j0, ln in data["runs"]:
        mask[i, j0 : j0 + ln] = True
    return mask


def save_mask(mask, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(mask_to_rle(mask), fh, sort_keys=True)
        fh.write("\n")


def load_mask(path):
    with open(path, encoding="utf-8") as fh:
        return mask_from_rle(json.load(fh))
