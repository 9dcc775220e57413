"""Assembly of the null design W and the alternative-only design Z.

The null model is linear in parameters: a single shared constant, the plain
linear regressors, and the series expansions of the nonparametric components.
The alternative block Z collects the extra series terms that can only enter
when the null is false: higher own powers, tensor interactions, or a custom
term list.  Columns are tracked by canonical labels so that anything already
present in W is never duplicated in Z, and ``screen_collinear`` removes Z
columns that are numerically inside the span of what came before them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .basis import (
    BasisMatrix,
    BasisSpec,
    build_basis,
    restricted_interaction_order,
    tensor_interactions,
    tensor_interaction_labels,
)
from .errors import DesignError, RankDeficiencyError

__all__ = [
    "AlternativeSpec",
    "ModelSpec",
    "DesignPair",
    "build_partially_linear",
    "simulation_design",
    "screen_collinear",
]

RECIPES = ("full_tensor", "restricted_tensor", "additive_only", "custom")


@dataclass(frozen=True)
class AlternativeSpec:
    """How to populate Z.

    For the tensor/additive recipes, ``basis`` lists the univariate series
    used under the alternative, one entry per variable (linear null
    regressors included, since they too get expanded under the alternative).
    The custom recipe takes explicit product terms like ``"price^2*age"``.
    """

    recipe: str
    basis: tuple = field(default=())  # tuple of (var, BasisSpec)
    custom_terms: tuple = field(default=())

    def __post_init__(self):
        if self.recipe not in RECIPES:
            raise ValueError(f"unknown alternative recipe {self.recipe!r}")
        object.__setattr__(self, "basis", tuple((v, s) for v, s in self.basis))
        object.__setattr__(self, "custom_terms", tuple(self.custom_terms))
        if self.recipe == "custom":
            if not self.custom_terms:
                raise ValueError("custom recipe needs a nonempty term list")
        elif not self.basis:
            raise ValueError(f"recipe {self.recipe!r} needs alternative bases")


@dataclass(frozen=True)
class ModelSpec:
    """Semiparametric null model plus the alternative recipe."""

    linear_vars: tuple
    series_vars: tuple  # tuple of (var, BasisSpec)
    alternative: AlternativeSpec

    def __post_init__(self):
        object.__setattr__(self, "linear_vars", tuple(self.linear_vars))
        object.__setattr__(self, "series_vars",
                           tuple((v, s) for v, s in self.series_vars))
        series_names = [v for v, _ in self.series_vars]
        overlap = set(self.linear_vars) & set(series_names)
        if overlap:
            raise ValueError(f"variables both linear and series: {sorted(overlap)}")
        if len(set(self.linear_vars)) != len(self.linear_vars):
            raise ValueError("duplicate linear variable")
        if len(set(series_names)) != len(series_names):
            raise ValueError("duplicate series variable")
        if not self.linear_vars and not self.series_vars:
            raise ValueError("model has no variables")

    def to_dict(self) -> dict:
        return {
            "linear_vars": list(self.linear_vars),
            "series_vars": [
                {"var": v, "family": s.family, "a": s.a, "spline_order": s.spline_order}
                for v, s in self.series_vars
            ],
            "alternative": {
                "recipe": self.alternative.recipe,
                "basis": [
                    {"var": v, "family": s.family, "a": s.a,
                     "spline_order": s.spline_order}
                    for v, s in self.alternative.basis
                ],
                "custom_terms": list(self.alternative.custom_terms),
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        def _spec(entry):
            return (entry["var"],
                    BasisSpec(entry.get("family", "power"), int(entry["a"]),
                              int(entry.get("spline_order", 3))))

        alt = d.get("alternative", {})
        return cls(
            linear_vars=tuple(d.get("linear_vars", ())),
            series_vars=tuple(_spec(e) for e in d.get("series_vars", ())),
            alternative=AlternativeSpec(
                recipe=alt.get("recipe", "restricted_tensor"),
                basis=tuple(_spec(e) for e in alt.get("basis", ())),
                custom_terms=tuple(alt.get("custom_terms", ())),
            ),
        )


@dataclass(frozen=True)
class DesignPair:
    """Null regressors W (n x m) and alternative-only regressors Z (n x r)."""

    w: np.ndarray
    z: np.ndarray
    w_labels: tuple
    z_labels: tuple

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        z = np.asarray(self.z, dtype=float)
        if z.size == 0:
            z = z.reshape(w.shape[0], 0)
        if w.ndim != 2 or z.ndim != 2 or w.shape[0] != z.shape[0]:
            raise ValueError("W and Z must be 2-d with equal row counts")
        if len(self.w_labels) != w.shape[1] or len(self.z_labels) != z.shape[1]:
            raise ValueError("label counts must match column counts")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "w_labels", tuple(self.w_labels))
        object.__setattr__(self, "z_labels", tuple(self.z_labels))

    @property
    def n_obs(self) -> int:
        return self.w.shape[0]

    @property
    def m_n(self) -> int:
        return self.w.shape[1]

    @property
    def r_n(self) -> int:
        return self.z.shape[1]

    @property
    def k_n(self) -> int:
        return self.m_n + self.r_n


_TERM_FACTOR = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_.]*)\s*(?:\^\s*(\d+))?\s*$")


def parse_term(term: str):
    """Parse a product term like ``"price^2*age"`` into ((var, power), ...)."""
    factors = {}
    for piece in term.split("*"):
        m = _TERM_FACTOR.match(piece)
        if m is None:
            raise DesignError(f"cannot parse term factor {piece!r} in {term!r}")
        var, power = m.group(1), int(m.group(2) or 1)
        if power < 1:
            raise DesignError(f"zero power in term {term!r}")
        factors[var] = factors.get(var, 0) + power
    return tuple(sorted(factors.items()))


def _term_label(factors) -> str:
    return "*".join(v if p == 1 else f"{v}^{p}" for v, p in factors)


def _combine_labels(l1: str, l2: str) -> str:
    return "*".join(sorted((l1, l2)))


class _ColumnPool:
    """Accumulates labeled columns, dropping label duplicates."""

    def __init__(self):
        self.labels = []
        self.columns = []
        self._seen = set()

    def add(self, label: str, col: np.ndarray) -> bool:
        if label in self._seen:
            return False
        self._seen.add(label)
        self.labels.append(label)
        self.columns.append(np.asarray(col, dtype=float).ravel())
        return True

    def has(self, label: str) -> bool:
        return label in self._seen

    def matrix(self, n: int) -> np.ndarray:
        if not self.columns:
            return np.empty((n, 0))
        return np.column_stack(self.columns)


def _get_column(data, name: str) -> np.ndarray:
    try:
        col = data[name]
    except KeyError:
        raise DesignError(f"variable {name!r} not found in data") from None
    arr = np.asarray(col, dtype=float).ravel()
    if not np.all(np.isfinite(arr)):
        raise DesignError(f"variable {name!r} contains non-finite values")
    return arr


def build_partially_linear(data, spec: ModelSpec) -> DesignPair:
    """Build (W, Z) for a partially linear null against the chosen alternative.

    ``data`` maps variable names to equal-length numeric vectors.  W holds a
    single constant, the linear regressors, and each series expansion without
    its own constant; Z holds the alternative terms whose canonical label is
    not already in W.
    """
    all_vars = list(spec.linear_vars) + [v for v, _ in spec.series_vars]
    n = _get_column(data, all_vars[0]).shape[0]

    basis_cache: dict = {}

    def get_basis(var: str, bspec: BasisSpec) -> BasisMatrix:
        key = (var, bspec.family, bspec.a, bspec.spline_order)
        if key not in basis_cache:
            col = _get_column(data, var)
            if col.shape[0] != n:
                raise DesignError(f"variable {var!r} has inconsistent length")
            basis_cache[key] = build_basis(col, bspec, name=var)
        return basis_cache[key]

    w_pool = _ColumnPool()
    w_pool.add("const", np.ones(n))
    for var in spec.linear_vars:
        col = _get_column(data, var)
        if col.shape[0] != n:
            raise DesignError(f"variable {var!r} has inconsistent length")
        if not w_pool.add(var, col):
            raise DesignError(f"duplicate column {var!r} in null design")
    for var, bspec in spec.series_vars:
        b = get_basis(var, bspec)
        for label, col in zip(b.column_labels[1:], b.values[:, 1:].T):
            if not w_pool.add(label, col):
                raise DesignError(f"duplicate column {label!r} in null design")

    alt = spec.alternative
    z_pool = _ColumnPool()

    def add_alt(label: str, col: np.ndarray):
        if not w_pool.has(label):
            z_pool.add(label, col)

    if alt.recipe == "custom":
        for term in alt.custom_terms:
            factors = parse_term(term)
            col = np.ones(n)
            for var, power in factors:
                col = col * _get_column(data, var) ** power
            add_alt(_term_label(factors), col)
    else:
        for var, bspec in alt.basis:
            b = get_basis(var, bspec)
            for label, col in zip(b.column_labels[1:], b.values[:, 1:].T):
                add_alt(label, col)
        if alt.recipe in ("full_tensor", "restricted_tensor"):
            inter_bases = []
            for var, bspec in alt.basis:
                if alt.recipe == "restricted_tensor":
                    a_bar = restricted_interaction_order(bspec.a)
                    bspec = BasisSpec(bspec.family, a_bar, bspec.spline_order)
                inter_bases.append(get_basis(var, bspec))
            for i in range(len(inter_bases)):
                for j in range(i + 1, len(inter_bases)):
                    cols = tensor_interactions(inter_bases[i], inter_bases[j])
                    labels = tensor_interaction_labels(inter_bases[i], inter_bases[j])
                    for label, col in zip(labels, cols.T):
                        add_alt(_combine_labels(*label.split("*", 1)), col)

    w = w_pool.matrix(n)
    z = z_pool.matrix(n)
    k_n = w.shape[1] + z.shape[1]
    if n <= k_n:
        raise DesignError(f"need n > k_n (got n={n}, k_n={k_n})")
    return DesignPair(w, z, tuple(w_pool.labels), tuple(z_pool.labels))


def simulation_design(x1, x2, a_n: int, family: str = "power") -> DesignPair:
    """The two-regressor partially linear design used in the simulation study.

    Null: [1, x1, a_n-term series in x2].  Alternative adds the higher own
    terms of x1 and all pairwise interactions of the constant-free restricted
    bases, so k_n = 2 a_n - 1 + (a_bar - 1)^2.
    """
    if a_n < 4:
        raise ValueError("simulation design needs a_n >= 4")
    bspec = BasisSpec(family, a_n)
    spec = ModelSpec(
        linear_vars=("x1",),
        series_vars=(("x2", bspec),),
        alternative=AlternativeSpec(
            recipe="restricted_tensor",
            basis=(("x1", bspec), ("x2", bspec)),
        ),
    )
    return build_partially_linear({"x1": x1, "x2": x2}, spec)


def screen_collinear(pair: DesignPair, tol: float = 1e-10):
    """Drop Z columns numerically inside the span of W and the kept Z columns.

    Greedy left-to-right: a column is dropped when the squared norm of its
    residual (after projecting on W and previously kept columns) falls below
    ``tol`` times its own squared norm.  W is never touched; a rank-deficient
    W raises.

    Returns
    -------
    (DesignPair, list of str)
        The screened pair and the labels of dropped columns.
    """
    if tol <= 0.0:
        raise ValueError("tolerance must be positive")
    q, r, piv = scipy.linalg.qr(pair.w, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size and (diag[0] == 0.0 or np.any(diag < tol * diag[0])):
        bad = piv[np.where(diag < tol * max(diag[0], np.finfo(float).tiny))[0]]
        raise RankDeficiencyError(
            "null design W is rank deficient at the screening tolerance",
            columns=list(bad),
        )

    basis = q  # grows as Z columns are accepted
    kept_cols, kept_labels, dropped = [], [], []
    for label, col in zip(pair.z_labels, pair.z.T):
        norm2 = float(col @ col)
        resid = col - basis @ (basis.T @ col)
        resid -= basis @ (basis.T @ resid)  # second pass for orthogonality
        r2 = float(resid @ resid)
        if norm2 == 0.0 or r2 < tol * norm2:
            dropped.append(label)
            continue
        kept_cols.append(col)
        kept_labels.append(label)
        basis = np.column_stack([basis, resid / np.sqrt(r2)])

    z = np.column_stack(kept_cols) if kept_cols else np.empty((pair.n_obs, 0))
    return DesignPair(pair.w, z, pair.w_labels, tuple(kept_labels)), dropped
