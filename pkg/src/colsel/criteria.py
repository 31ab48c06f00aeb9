"""Column subset selection criteria and the registry tying them together.

Every criterion is a function of the singular values of the selected
submatrix C (plus its column norms for the scaled volume, and the parent
matrix for the residuals).  The registry records, for each criterion, its
optimization direction and the optimal value attained by k orthonormal
columns, which is what turns the optimization problems into decision
problems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidParameterError, RankDeficiencyError, ShapeError
from .matrixkit import DenseMatrix, default_rank_tolerance, svd

KINDS = frozenset(
    {
        "volume",
        "relative_volume",
        "s_optimality",
        "norm",
        "pinv_norm",
        "cond_two",
        "cond_frobenius",
        "cond_schatten",
        "cond_mixed",
        "cond_mixed_schatten",
        "stable_rank",
        "residual_two",
        "residual_frobenius",
    }
)

_MAXIMIZED = frozenset({"volume", "relative_volume", "s_optimality", "stable_rank"})
_P_KINDS = frozenset({"norm", "pinv_norm", "cond_schatten", "cond_mixed_schatten", "stable_rank"})
_RANK_REQUIRED = frozenset(
    {
        "relative_volume",
        "s_optimality",
        "pinv_norm",
        "cond_two",
        "cond_frobenius",
        "cond_schatten",
        "cond_mixed",
        "cond_mixed_schatten",
    }
)


def _sigma(c: DenseMatrix) -> tuple[np.ndarray, int]:
    res = svd(c)
    return res.singular_values, res.numerical_rank


def _require_full_rank(c: DenseMatrix) -> np.ndarray:
    sigma, rank = _sigma(c)
    if rank < c.cols:
        raise RankDeficiencyError(f"matrix has numerical rank {rank} < {c.cols} columns")
    return sigma


def _check_p(p, minimum=1.0):
    if p is None:
        raise InvalidParameterError("Schatten parameter p is required")
    if p != math.inf and not p >= minimum:
        raise InvalidParameterError(f"Schatten parameter must be >= {minimum} or inf, got {p}")
    return float(p)


# The helpers below reduce along the last axis, so the scalar evaluators
# (1-d sigma) and the batched selector path (2-d sigma) share the exact same
# floating-point operations and never disagree on near-ties.


def _vol_from_sigma(sigma):
    return np.prod(sigma, axis=-1)


def _rvol_from_sigma(sigma):
    return np.prod(sigma / sigma[..., :1], axis=-1)


def _schatten_from_sigma(sigma, p):
    if p == math.inf:
        return sigma[..., 0]
    return np.sum(sigma**p, axis=-1) ** (1.0 / p)


def _pinv_schatten_from_sigma(sigma, p):
    if p == math.inf:
        return 1.0 / sigma[..., -1]
    return np.sum(sigma ** (-p), axis=-1) ** (1.0 / p)


def _cond_from_sigma(sigma, kind, p):
    if kind == "two" or p == math.inf:
        return sigma[..., 0] / sigma[..., -1]
    if kind == "frobenius":
        return _schatten_from_sigma(sigma, 2.0) * _pinv_schatten_from_sigma(sigma, 2.0)
    if kind == "schatten":
        return _schatten_from_sigma(sigma, p) * _pinv_schatten_from_sigma(sigma, p)
    if kind == "mixed":
        return _schatten_from_sigma(sigma, 2.0) / sigma[..., -1]
    return _schatten_from_sigma(sigma, p) / sigma[..., -1]


def _srank_from_sigma(sigma, p):
    return np.sum((sigma / sigma[..., :1]) ** p, axis=-1)


def _sopt_from_sigma(sigma, column_norms):
    k = column_norms.shape[-1]
    return (np.prod(sigma, axis=-1) / np.prod(column_norms, axis=-1)) ** (1.0 / k)


def volume(c: DenseMatrix) -> float:
    """Product of all k singular values; 0 for numerically rank-deficient input."""
    sigma, rank = _sigma(c)
    if rank < c.cols:
        return 0.0
    return float(_vol_from_sigma(sigma))


def relative_volume(c: DenseMatrix) -> float:
    """Product of sigma_j / sigma_1, in (0, 1] with 1 exactly for orthonormal columns."""
    sigma = _require_full_rank(c)
    return float(_rvol_from_sigma(sigma))


def s_optimality(c: DenseMatrix) -> float:
    """k-th root of the volume scaled by the product of the column two-norms."""
    norms = c.column_norms()
    if np.any(norms == 0.0):
        raise InvalidInputError("matrix has a zero column")
    sigma = _require_full_rank(c)
    return float(_sopt_from_sigma(sigma, norms))


def schatten_norm(c: DenseMatrix, p) -> float:
    """(sum sigma_j^p)^(1/p); p=2 is the Frobenius norm, p=inf the two-norm."""
    p = _check_p(p)
    sigma, _ = _sigma(c)
    return float(_schatten_from_sigma(sigma, p))


def pinv_schatten_norm(c: DenseMatrix, p) -> float:
    """Schatten p-norm of the pseudo-inverse, computed as (sum sigma_j^-p)^(1/p)."""
    p = _check_p(p)
    sigma = _require_full_rank(c)
    return float(_pinv_schatten_from_sigma(sigma, p))


def condition_number(c: DenseMatrix, kind: str, p=None) -> float:
    """Condition number with respect to left inversion.

    kind selects the flavor: "two" (sigma_1/sigma_k), "frobenius",
    "schatten" (needs p), "mixed" (Frobenius times two-norm of the
    pseudo-inverse), or "mixed_schatten" (needs p).
    """
    if kind in ("two", "frobenius", "mixed"):
        if p is not None:
            raise InvalidParameterError(f"condition number kind {kind!r} takes no p")
    elif kind in ("schatten", "mixed_schatten"):
        p = _check_p(p)
    else:
        raise InvalidParameterError(f"unknown condition number kind {kind!r}")
    sigma = _require_full_rank(c)
    return float(_cond_from_sigma(sigma, kind, p))


def stable_rank(c: DenseMatrix, p=2) -> float:
    """Schatten-p energy relative to the largest singular value; 0 for the zero matrix."""
    p = _check_p(p, minimum=2.0)
    if p == math.inf:
        raise InvalidParameterError("stable rank requires a finite p >= 2")
    sigma, _ = _sigma(c)
    if sigma[0] == 0.0:
        return 0.0
    return float(_srank_from_sigma(sigma, p))


def residual(a: DenseMatrix, c: DenseMatrix, norm: str) -> float:
    """Norm of the part of ``a`` outside range(C), i.e. of (I - C C^+) a.

    Rank-deficient C is handled through tolerance truncation, so any column
    selection yields a finite residual.
    """
    if a.rows != c.rows:
        raise ShapeError(f"row counts differ: {a.rows} vs {c.rows}")
    if norm not in ("two", "frobenius"):
        raise InvalidParameterError(f"unknown residual norm {norm!r}")
    u, s, _ = np.linalg.svd(c.array, full_matrices=False)
    tol = default_rank_tolerance(c.rows, c.cols, float(s[0]))
    basis = u[:, s > tol]
    rest = a.array - basis @ (basis.T @ a.array)
    if norm == "two":
        return float(np.linalg.svd(rest, compute_uv=False)[0])
    return float(np.linalg.norm(rest))


@dataclass(frozen=True)
class CriterionSpec:
    """A named criterion with optimization direction and optimal unit-column value."""

    kind: str
    p: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown criterion kind {self.kind!r}")
        if self.kind in _P_KINDS:
            minimum = 2.0 if self.kind == "stable_rank" else 1.0
            p = _check_p(self.p, minimum=minimum)
            if self.kind == "stable_rank" and p == math.inf:
                raise InvalidParameterError("stable rank requires a finite p >= 2")
            object.__setattr__(self, "p", p)
        elif self.p is not None:
            raise InvalidParameterError(f"criterion kind {self.kind!r} takes no p")

    @property
    def direction(self) -> str:
        return "maximize" if self.kind in _MAXIMIZED else "minimize"

    @property
    def rank_required(self) -> bool:
        return self.kind in _RANK_REQUIRED

    @property
    def identifier(self) -> str:
        """Stable lowercase string id, e.g. "rvol", "cond-two", "pinv-norm:p=4"."""
        base = {
            "volume": "vol",
            "relative_volume": "rvol",
            "s_optimality": "sopt",
            "cond_two": "cond-two",
            "cond_frobenius": "cond-frobenius",
            "cond_mixed": "cond-mixed",
            "residual_two": "res-two",
            "residual_frobenius": "res-frobenius",
        }
        if self.kind in base:
            return base[self.kind]
        if self.kind == "norm":
            if self.p == math.inf:
                return "norm-two"
            if self.p == 2:
                return "norm-frobenius"
            return f"norm:p={_fmt_p(self.p)}"
        if self.kind == "pinv_norm":
            if self.p == math.inf:
                return "pinv-norm-two"
            if self.p == 2:
                return "pinv-norm-frobenius"
            return f"pinv-norm:p={_fmt_p(self.p)}"
        if self.kind == "cond_schatten":
            return f"cond:p={_fmt_p(self.p)}"
        if self.kind == "cond_mixed_schatten":
            return f"cond-mixed:p={_fmt_p(self.p)}"
        if self.p == 2:
            return "srank"
        return f"srank:p={_fmt_p(self.p)}"

    def optimal_unit_value(self, k: int) -> float | None:
        """Criterion value attained by k orthonormal columns, or None when the
        criterion has no distinguished unit-column optimum."""
        if self.kind in ("volume", "relative_volume", "s_optimality", "cond_two"):
            return 1.0
        if self.kind in ("norm", "pinv_norm"):
            if self.p == math.inf:
                return 1.0
            if self.p == 2:
                return math.sqrt(k)
            if self.p > 2:
                return k ** (1.0 / self.p)
            return None
        if self.kind == "cond_frobenius":
            return float(k)
        if self.kind == "cond_schatten":
            return k ** (2.0 / self.p) if self.p != math.inf else 1.0
        if self.kind == "cond_mixed":
            return math.sqrt(k)
        if self.kind == "cond_mixed_schatten":
            return k ** (1.0 / self.p) if self.p != math.inf else 1.0
        if self.kind == "stable_rank":
            return float(k)
        return None

    @property
    def characterizes_orthonormal(self) -> bool:
        """Whether attaining the optimal unit-column value forces orthonormal columns.

        False for the Frobenius norm (every unit-column matrix attains sqrt(k)),
        for Schatten norms with p < 2, and for the residuals.
        """
        if self.kind in ("residual_two", "residual_frobenius"):
            return False
        if self.kind == "norm":
            return self.p == math.inf or self.p > 2
        if self.kind == "pinv_norm":
            return self.p == math.inf or self.p >= 2
        return True

    def __str__(self):
        return self.identifier


def _fmt_p(p: float) -> str:
    if p == math.inf:
        return "inf"
    if float(p).is_integer():
        return str(int(p))
    return repr(float(p))


# id -> (kind, default p, whether the id pins its parameter)
_BASE_IDS = {
    "vol": ("volume", None, True),
    "volume": ("volume", None, True),
    "rvol": ("relative_volume", None, True),
    "sopt": ("s_optimality", None, True),
    "norm-two": ("norm", math.inf, True),
    "norm-frobenius": ("norm", 2.0, True),
    "norm": ("norm", None, False),
    "pinv-norm-two": ("pinv_norm", math.inf, True),
    "pinv-norm-frobenius": ("pinv_norm", 2.0, True),
    "pinv-norm": ("pinv_norm", None, False),
    "cond-two": ("cond_two", None, True),
    "cond-frobenius": ("cond_frobenius", None, True),
    "cond-mixed": ("cond_mixed", None, False),
    "cond": ("cond_schatten", None, False),
    "srank": ("stable_rank", 2.0, False),
    "res-two": ("residual_two", None, True),
    "res-frobenius": ("residual_frobenius", None, True),
}


def parse_criterion(text: str, p=None) -> CriterionSpec:
    """Parse a criterion id like "rvol", "cond-two" or "pinv-norm:p=4".

    An explicit ``p`` argument supplies the Schatten parameter for the bare
    forms "norm", "pinv-norm", "cond", "cond-mixed" and "srank"; a ":p=" suffix
    in the id takes precedence.
    """
    text = text.strip().lower()
    suffix_p = None
    if ":p=" in text:
        text, _, raw = text.partition(":p=")
        suffix_p = math.inf if raw == "inf" else _parse_p_token(raw)
    if text not in _BASE_IDS:
        raise InvalidParameterError(f"unknown criterion id {text!r}")
    kind, default_p, p_fixed = _BASE_IDS[text]
    override = suffix_p
    if override is None and p is not None:
        override = math.inf if p == "inf" else float(p)
    if override is not None:
        if p_fixed:
            raise InvalidParameterError(f"criterion {text!r} takes no Schatten parameter")
        if kind == "cond_mixed":
            kind = "cond_mixed_schatten"
        chosen = override
    else:
        chosen = default_p
    if kind in _P_KINDS and chosen is None:
        raise InvalidParameterError(f"criterion {text!r} needs a Schatten parameter p")
    return CriterionSpec(kind, chosen if kind in _P_KINDS else None)


def _parse_p_token(raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise InvalidParameterError(f"bad Schatten parameter {raw!r}") from None


DEFAULT_SCHATTEN_PS = (3.0, 4.0)


def _build_registry() -> tuple[CriterionSpec, ...]:
    specs = [
        CriterionSpec("volume"),
        CriterionSpec("relative_volume"),
        CriterionSpec("s_optimality"),
        CriterionSpec("norm", math.inf),
    ]
    specs += [CriterionSpec("norm", p) for p in DEFAULT_SCHATTEN_PS]
    specs.append(CriterionSpec("norm", 2.0))
    specs.append(CriterionSpec("pinv_norm", math.inf))
    specs.append(CriterionSpec("pinv_norm", 2.0))
    specs += [CriterionSpec("pinv_norm", p) for p in DEFAULT_SCHATTEN_PS]
    specs.append(CriterionSpec("cond_two"))
    specs.append(CriterionSpec("cond_frobenius"))
    specs += [CriterionSpec("cond_schatten", p) for p in DEFAULT_SCHATTEN_PS]
    specs.append(CriterionSpec("cond_mixed"))
    specs += [CriterionSpec("cond_mixed_schatten", p) for p in DEFAULT_SCHATTEN_PS]
    specs.append(CriterionSpec("stable_rank", 2.0))
    specs += [CriterionSpec("stable_rank", p) for p in DEFAULT_SCHATTEN_PS]
    specs.append(CriterionSpec("residual_two"))
    specs.append(CriterionSpec("residual_frobenius"))
    return tuple(specs)


REGISTRY: tuple[CriterionSpec, ...] = _build_registry()


def registry() -> tuple[CriterionSpec, ...]:
    """All registered criteria, in report order."""
    return REGISTRY


def equivalence_criteria() -> tuple[CriterionSpec, ...]:
    """Registered criteria whose unit-column optimum is attained only by
    orthonormal columns, the ones usable in orthonormal-subset decisions."""
    return tuple(s for s in REGISTRY if s.characterizes_orthonormal)


@dataclass(frozen=True)
class CriterionValue:
    """A criterion evaluated on a k-column submatrix."""

    value: float
    criterion: CriterionSpec
    subset_size: int

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise InvalidInputError(f"criterion value must be finite, got {self.value}")


def evaluate(spec: CriterionSpec, c: DenseMatrix, full_matrix: DenseMatrix | None = None) -> CriterionValue:
    """Evaluate a criterion on submatrix ``c``.

    The residual criteria additionally need the parent matrix the residual is
    measured against.
    """
    kind = spec.kind
    if kind == "volume":
        value = volume(c)
    elif kind == "relative_volume":
        value = relative_volume(c)
    elif kind == "s_optimality":
        value = s_optimality(c)
    elif kind == "norm":
        value = schatten_norm(c, spec.p)
    elif kind == "pinv_norm":
        value = pinv_schatten_norm(c, spec.p)
    elif kind == "cond_two":
        value = condition_number(c, "two")
    elif kind == "cond_frobenius":
        value = condition_number(c, "frobenius")
    elif kind == "cond_schatten":
        value = condition_number(c, "schatten", spec.p)
    elif kind == "cond_mixed":
        value = condition_number(c, "mixed")
    elif kind == "cond_mixed_schatten":
        value = condition_number(c, "mixed_schatten", spec.p)
    elif kind == "stable_rank":
        value = stable_rank(c, spec.p)
    else:
        if full_matrix is None:
            raise InvalidParameterError("residual criteria need the parent matrix")
        value = residual(full_matrix, c, "two" if kind == "residual_two" else "frobenius")
    return CriterionValue(value, spec, c.cols)


def batch_values(spec: CriterionSpec, sigma: np.ndarray, column_norms: np.ndarray, full_rank: np.ndarray):
    """Vectorized criterion values for a batch of submatrices.

    ``sigma`` is (B, r) with singular values sorted non-increasing per row,
    ``column_norms`` is (B, k), and ``full_rank`` flags rows whose numerical
    rank equals k.  Returns (values, valid); invalid rows hold placeholder
    values and must be skipped by the caller.  The arithmetic is shared with
    the scalar evaluators, so batched values match scalar ones bit for bit.
    Residual criteria are not singular-value computable and are rejected
    here.
    """
    kind = spec.kind
    b, r = sigma.shape
    k = column_norms.shape[1]
    ones = np.ones(b, dtype=bool)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if kind == "volume":
            vals = np.where(full_rank, _vol_from_sigma(sigma) if r == k else 0.0, 0.0)
            return vals, ones
        if kind == "relative_volume":
            return _masked(_rvol_from_sigma(sigma), full_rank), full_rank
        if kind == "s_optimality":
            return _masked(_sopt_from_sigma(sigma, column_norms), full_rank), full_rank
        if kind == "norm":
            return np.asarray(_schatten_from_sigma(sigma, spec.p)), ones
        if kind == "pinv_norm":
            vals = _pinv_schatten_from_sigma(sigma, spec.p) if r == k else np.zeros(b)
            return _masked(vals, full_rank), full_rank
        if kind in ("cond_two", "cond_frobenius", "cond_schatten", "cond_mixed",
                    "cond_mixed_schatten"):
            flavor = kind[len("cond_"):]
            vals = _cond_from_sigma(sigma, flavor, spec.p) if r == k else np.zeros(b)
            return _masked(vals, full_rank), full_rank
        if kind == "stable_rank":
            vals = np.where(sigma[:, 0] > 0.0, _srank_from_sigma(sigma, spec.p), 0.0)
            return vals, ones
    raise InvalidParameterError(f"criterion {spec.identifier!r} is not singular-value computable")


def _masked(vals: np.ndarray, valid: np.ndarray) -> np.ndarray:
    return np.where(valid & np.isfinite(vals), vals, 0.0)
