"""Workload description: dims, tensors, and the einsum they form.

A workload is a single einsum over named dims. Each tensor projects onto an
ordered subset of the dims; exactly one tensor is the output. Dims absent
from the output's projection are reduced. Operand tensors carry a density
model spec; the output never does (its contents are produced, not
characterized).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

from .errors import SpecInvariantError, SpecReferenceError


@dataclass(frozen=True)
class TensorDecl:
    name: str
    projection: tuple[str, ...]
    density_spec: Any = None  # density.DensityModelSpec for operands, None for output
    is_output: bool = False


@dataclass(frozen=True)
class Workload:
    """Einsum workload: ordered dims with bounds plus tensor declarations."""

    dims: tuple[tuple[str, int], ...]  # (name, bound), declaration order
    tensors: tuple[TensorDecl, ...]

    def __post_init__(self):
        names = [d for d, _ in self.dims]
        if len(set(names)) != len(names):
            raise SpecInvariantError("duplicate dim name", entity=",".join(names))
        for d, b in self.dims:
            if not isinstance(b, int) or b < 1:
                raise SpecInvariantError(f"dim bound must be a positive integer, got {b!r}", entity=d)
        tnames = [t.name for t in self.tensors]
        if len(set(tnames)) != len(tnames):
            raise SpecInvariantError("duplicate tensor name", entity=",".join(tnames))
        bound_map = dict(self.dims)
        for t in self.tensors:
            if len(set(t.projection)) != len(t.projection):
                raise SpecInvariantError("tensor projects a dim twice", entity=t.name)
            for d in t.projection:
                if d not in bound_map:
                    raise SpecReferenceError(f"tensor projects unknown dim {d!r}", entity=t.name)
        outs = [t for t in self.tensors if t.is_output]
        if len(outs) != 1:
            raise SpecInvariantError(f"exactly one output tensor required, found {len(outs)}")
        if outs[0].density_spec is not None:
            raise SpecInvariantError("output tensor must not carry a density model", entity=outs[0].name)
        for t in self.tensors:
            if not t.is_output and t.density_spec is None:
                raise SpecInvariantError("operand tensor needs a density model", entity=t.name)
        used = {d for t in self.tensors for d in t.projection}
        unused = [d for d, _ in self.dims if d not in used]
        if unused:
            raise SpecInvariantError("dim appears in no tensor", entity=",".join(unused))

    # -- lookups ---------------------------------------------------------

    @property
    def dim_names(self) -> tuple[str, ...]:
        return tuple(d for d, _ in self.dims)

    @property
    def bounds(self) -> dict[str, int]:
        return dict(self.dims)

    def bound(self, dim: str) -> int:
        return dict(self.dims)[dim]

    def tensor(self, name: str) -> TensorDecl:
        for t in self.tensors:
            if t.name == name:
                return t
        raise SpecReferenceError("unknown tensor", entity=name)

    @property
    def output(self) -> TensorDecl:
        return next(t for t in self.tensors if t.is_output)

    @property
    def operands(self) -> tuple[TensorDecl, ...]:
        return tuple(t for t in self.tensors if not t.is_output)

    def tensor_size(self, name: str) -> int:
        t = self.tensor(name)
        return math.prod(self.bound(d) for d in t.projection) if t.projection else 1

    @property
    def compute_count(self) -> int:
        """Total MACs: the full iteration space, independent of any mapping."""
        return math.prod(b for _, b in self.dims)

    @property
    def reduced_dims(self) -> tuple[str, ...]:
        out = set(self.output.projection)
        return tuple(d for d, _ in self.dims if d not in out)


def matmul_workload(m: int, n: int, k: int, densities: dict[str, Any]) -> Workload:
    """Convenience constructor for Z[m,n] = sum_k A[m,k] * B[k,n]."""
    return Workload(
        dims=(("m", m), ("n", n), ("k", k)),
        tensors=(
            TensorDecl("A", ("m", "k"), densities["A"]),
            TensorDecl("B", ("k", "n"), densities["B"]),
            TensorDecl("Z", ("m", "n"), None, is_output=True),
        ),
    )
