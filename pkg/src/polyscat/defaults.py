"""Numeric defaults for every command, with their admissible ranges.

Config files and ``--override`` values are merged over this table and
checked against the ranges before any computation starts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

from .errors import InputError


@dataclass(frozen=True)
class Default:
    value: Any
    lo: Optional[float] = None
    hi: Optional[float] = None
    doc: str = ""


TABLE = {
    "k": Default(1.0, 1e-6, 200.0, "wavenumber"),
    "d": Default(None, doc="incident direction; defaults to e1"),
    "grid.n": Default(2, 2, 3, "dimension"),
    "grid.R": Default(1.5, 1e-3, 1e3, "half side of the computational box"),
    "grid.N": Default(128, 16, 1024, "cells per axis"),
    "solver.method": Default("iterative", doc="iterative | born"),
    "solver.tol": Default(1e-8, 1e-15, 1e-2, "relative residual target"),
    "solver.maxit": Default(1000, 1, 100000, "GMRES outer iterations"),
    "solver.terms": Default(20, 1, 1000, "Neumann series terms"),
    "n_dirs": Default(64, 1, 100000, "far-field directions"),
    "dump_format": Default("bin", doc="bin | csv"),
    "eps": Default(0.1, 1e-8, 1.0, "edge weight in the 3D frequency construction"),
    "s_list": Default([1, 2, 4, 8, 16, 32, 64, 128, 256], doc="scales for certification and corner sweeps"),
    "eps_list": Default([0.2, 0.1, 0.05, 0.025], doc="edge weights for the split sweep"),
    "n_pairs": Default(50, 1, 100000, "random pairs in a distinguishability campaign"),
    "contrast": Default(0.05, 1e-8, 10.0, "bound on k^2 |V| for random values"),
    "maxit": Default(50, 1, 10000, "Gauss-Newton iterations"),
    "noise": Default([], doc="relative noise levels for the reconstruction noise sweep"),
    "data_refine": Default(1, 1, 8, "synthetic data grid refinement factor (1 = same grid as the inversion)"),
    "seed": Default(0, 0, 2**63 - 1, "random seed"),
    "threads": Default(1, 1, 1024, "FFT worker threads"),
}


def get(cfg: dict, key: str):
    """Dotted lookup in ``cfg`` falling back to the table."""
    cur = cfg
    for part in key.split("."):
        if not isinstance(cur, dict) or part not in cur:
            return TABLE[key].value if key in TABLE else None
        cur = cur[part]
    return cur


def set_dotted(cfg: dict, key: str, value) -> None:
    parts = key.split(".")
    cur = cfg
    for part in parts[:-1]:
        cur = cur.setdefault(part, {})
        if not isinstance(cur, dict):
            raise InputError(f"override {key!r} descends into a non-table value")
    cur[parts[-1]] = value


def check_ranges(cfg: dict) -> None:
    for key, spec in TABLE.items():
        if spec.lo is None:
            continue
        val = get(cfg, key)
        if val is None:
            continue
        try:
            x = float(val)
        except (TypeError, ValueError):
            raise InputError(f"{key} must be numeric, got {val!r}") from None
        if not spec.lo <= x <= spec.hi:
            raise InputError(f"{key}={val} outside [{spec.lo:g}, {spec.hi:g}]")


def describe() -> str:
    rows = [f"{k:<14} {v.value!r:<24} {'' if v.lo is None else f'[{v.lo:g}, {v.hi:g}]':<18} {v.doc}" for k, v in TABLE.items()]
    return "\n".join(rows)
