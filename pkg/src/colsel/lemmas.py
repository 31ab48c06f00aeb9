"""Seeded randomized checks for every optimal-value and partition inequality.

``run_suite`` draws matrix families (random unit-column, orthonormal,
near-orthonormal perturbations, full-column-rank partitions, and parent/
submatrix pairs) and evaluates each documented inequality, equality band,
monotonicity and reconstruction identity on them.  Failures are data, not
exceptions: each check contributes a signed violation (positive means the
tolerance was exceeded) and the per-check maxima are aggregated into one
report record per lemma id.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .criteria import (
    condition_number,
    pinv_schatten_norm,
    relative_volume,
    s_optimality,
    schatten_norm,
    stable_rank,
    volume,
)
from .errors import InvalidParameterError, RankDeficiencyError
from .matrixkit import DenseMatrix, complement_projector, partitioned_pinv, pseudo_inverse, svd

LEMMA_IDS = (
    "e_inter",
    "e_mean",
    "e_sc",
    "e_srk",
    "l_cond",
    "l_fi",
    "l_inter",
    "l_inter2",
    "l_norm",
    "l_pi0",
    "l_pi1",
    "l_pinv",
    "l_srank",
    "l_vol",
    "lem:orth",
    "r_schattenp",
)

# equality characterizations: defect <= DEFECT_TIGHT must put the criterion
# within BAND_LOOSE of its optimum, and a criterion within BAND_TIGHT of the
# optimum must come from defect <= DEFECT_LOOSE
DEFECT_TIGHT = 1e-8
BAND_LOOSE = 1e-6
BAND_TIGHT = 1e-10
DEFECT_LOOSE = 1e-4


@dataclass(frozen=True)
class LemmaReport:
    lemma_id: str
    trials: int
    failures: int
    worst_violation: float
    seed: int


@dataclass(frozen=True)
class SuiteSizes:
    """Dimension and Schatten-parameter ranges the suite draws from."""

    rows: tuple[int, int] = (3, 8)
    subset_cols: tuple[int, int] = (1, 5)
    parent_cols: tuple[int, int] = (2, 8)
    p_large: tuple[float, ...] = (3.0, 4.0, 6.0)
    p_small: tuple[float, ...] = (1.0, 1.5)
    submatrix_samples: int = 12


class _Accumulator:
    __slots__ = ("trials", "failures", "worst")

    def __init__(self):
        self.trials = 0
        self.failures = 0
        self.worst = -math.inf

    def record(self, *violations: float):
        worst = max(violations)
        self.trials += 1
        self.worst = max(self.worst, worst)
        if worst > 0.0:
            self.failures += 1


def _band(defect: float, value: float, optimum: float) -> float:
    """Two-sided equality-characterization check, as a signed violation."""
    hit = abs(value - optimum)
    v_if = (hit - BAND_LOOSE) if defect <= DEFECT_TIGHT else -math.inf
    v_only_if = (defect - DEFECT_LOOSE) if hit <= BAND_TIGHT else -math.inf
    return max(v_if, v_only_if)


def _orthonormality_defect(c: DenseMatrix) -> float:
    k = c.cols
    return float(np.linalg.norm(c.array.T @ c.array - np.eye(k)))


def _draw_full_rank(rng, m: int, k: int) -> DenseMatrix:
    for _ in range(64):
        g = rng.standard_normal((m, k))
        c = DenseMatrix(g)
        if svd(c).numerical_rank == k:
            return c
    raise RuntimeError("could not draw a full-rank matrix")  # pragma: no cover


def _unit_columns(arr: np.ndarray) -> DenseMatrix:
    return DenseMatrix(arr / np.linalg.norm(arr, axis=0))


def _unit_column_checks(c: DenseMatrix, acc: dict, sizes: SuiteSizes):
    """All unit-column optimal-value lemmas on one matrix."""
    k = c.cols
    defect = _orthonormality_defect(c)
    fro = schatten_norm(c, 2)
    vol = volume(c)
    sopt = s_optimality(c)
    rvol = relative_volume(c)
    two = schatten_norm(c, math.inf)
    ptwo = pinv_schatten_norm(c, math.inf)
    pfro = pinv_schatten_norm(c, 2)
    sr = stable_rank(c, 2)

    acc["e_srk"].record(abs(fro**2 - k) - 1e-12)
    acc["e_mean"].record(vol ** (2.0 / k) - fro**2 / k - 1e-12)
    acc["l_vol"].record(
        vol - 1.0 - 1e-10,
        sopt - 1.0 - 1e-10,
        _band(defect, vol, 1.0),
        _band(defect, sopt, 1.0),
    )
    acc["lem:orth"].record(
        -rvol,
        rvol - 1.0 - 1e-10,
        _band(defect, rvol, 1.0),
    )

    norm_checks = [(1.0 - two) - 1e-10, _band(defect, two, 1.0)]
    pinv_checks = [
        (1.0 - ptwo) - 1e-10,
        (math.sqrt(k) - pfro) - 1e-10,
        _band(defect, ptwo, 1.0),
        _band(defect, pfro, math.sqrt(k)),
    ]
    cond_checks = []
    for kind, p, optimum in (
        ("two", None, 1.0),
        ("frobenius", None, float(k)),
        ("mixed", None, math.sqrt(k)),
    ):
        kappa = condition_number(c, kind, p)
        cond_checks += [(optimum - kappa) - 1e-10, _band(defect, kappa, optimum)]
    srank_checks = [sr - k - 1e-10, _band(defect, sr, float(k))]

    for p in sizes.p_large:
        np_norm = schatten_norm(c, p)
        npinv = pinv_schatten_norm(c, p)
        opt = k ** (1.0 / p)
        norm_checks += [(opt - np_norm) - 1e-10, _band(defect, np_norm, opt)]
        pinv_checks += [(opt - npinv) - 1e-10, _band(defect, npinv, opt)]
        kp = condition_number(c, "schatten", p)
        kdp = condition_number(c, "mixed_schatten", p)
        cond_checks += [
            (k ** (2.0 / p) - kp) - 1e-10,
            _band(defect, kp, k ** (2.0 / p)),
            (opt - kdp) - 1e-10,
            _band(defect, kdp, opt),
        ]
        srp = stable_rank(c, p)
        srank_checks += [srp - k - 1e-10, _band(defect, srp, float(k))]

    small_checks = []
    for p in sizes.p_small:
        np_norm = schatten_norm(c, p)
        opt = k ** (1.0 / p)
        small_checks += [
            (math.sqrt(k) - np_norm) - 1e-10,
            (np_norm - opt) - 1e-10,
            _band(defect, np_norm, opt),
        ]

    acc["l_norm"].record(*norm_checks)
    acc["r_schattenp"].record(*small_checks)
    acc["l_pinv"].record(*pinv_checks)
    acc["l_cond"].record(*cond_checks)
    acc["l_srank"].record(*srank_checks)


def _dims(rng, sizes: SuiteSizes) -> tuple[int, int]:
    m = int(rng.integers(sizes.rows[0], sizes.rows[1] + 1))
    k_hi = min(sizes.subset_cols[1], m)
    k = int(rng.integers(sizes.subset_cols[0], k_hi + 1))
    return m, k


def _unit_trial(rng, sizes, acc):
    m, k = _dims(rng, sizes)
    c = _unit_columns(_draw_full_rank(rng, m, k).array)
    _unit_column_checks(c, acc, sizes)


def _orthonormal_trial(rng, sizes, acc):
    m, k = _dims(rng, sizes)
    q, _ = np.linalg.qr(_draw_full_rank(rng, m, k).array)
    _unit_column_checks(DenseMatrix(q), acc, sizes)


def _perturbed_trial(rng, sizes, acc, eps: float):
    m, k = _dims(rng, sizes)
    q, _ = np.linalg.qr(_draw_full_rank(rng, m, k).array)
    g = rng.standard_normal((m, k))
    g /= np.linalg.norm(g, 2)
    _unit_column_checks(_unit_columns(q + eps * g), acc, sizes)


def _partition_trial(rng, sizes, acc):
    m = int(rng.integers(max(sizes.rows[0], 3), sizes.rows[1] + 1))
    n = int(rng.integers(2, min(m, 6) + 1))
    c = _draw_full_rank(rng, m, n)
    split = int(rng.integers(1, n))
    c1 = DenseMatrix(c.array[:, :split])
    c2 = DenseMatrix(c.array[:, split:])

    whole_f = pinv_schatten_norm(c, 2)
    acc["l_fi"].record(
        pinv_schatten_norm(c1, 2) ** 2 + pinv_schatten_norm(c2, 2) ** 2 - whole_f**2 - 1e-9
    )
    # block-diagonal Schatten-q norms add in q-th powers, so the partition
    # bound for p > 2 is in p-th powers (the squared form is the p=2 case)
    pi1_checks = []
    for p in (3.0, 4.0, 6.0):
        whole_p = pinv_schatten_norm(c, p)
        pi1_checks.append(
            pinv_schatten_norm(c1, p) ** p + pinv_schatten_norm(c2, p) ** p - whole_p**p - 1e-9
        )
    acc["l_pi1"].record(*pi1_checks)

    parts = partitioned_pinv(c1, c2)
    direct = pseudo_inverse(c)
    recon = float(np.max(np.abs(parts.stacked().array - direct.array)))
    spd = min(
        float(np.linalg.eigvalsh(parts.schur1.array)[0]),
        float(np.linalg.eigvalsh(parts.schur2.array)[0]),
    )
    acc["l_pi0"].record(recon - 1e-9, -spd)

    # determinant identity for appending one column
    head = DenseMatrix(c.array[:, :-1])
    tail = c.array[:, -1]
    lhs = volume(c) ** 2
    gram = head.array.T @ head.array
    rhs = float(np.linalg.det(gram) * np.sum((complement_projector(head).array @ tail) ** 2))
    scale = max(abs(lhs), abs(rhs), 1e-300)
    acc["e_sc"].record(abs(lhs - rhs) / scale - 1e-9)


def _interlacing_trial(rng, sizes, acc):
    m = int(rng.integers(sizes.rows[0], sizes.rows[1] + 1))
    n = int(rng.integers(sizes.parent_cols[0], sizes.parent_cols[1] + 1))
    a = DenseMatrix(rng.standard_normal((m, n)))
    k = int(rng.integers(2, min(m, n, sizes.subset_cols[1]) + 1)) if min(m, n) > 2 else 2
    cols = np.sort(rng.choice(n, size=k, replace=False))
    c = a.columns(cols)

    sig_a = svd(a).singular_values
    sig_c = svd(c).singular_values
    worst = -math.inf
    for j in range(k):
        # deleting n-k columns pushes sigma_j(C) down to at most position
        # n-k+j of the parent spectrum; beyond min(m, n) the bound is 0
        pos = n - k + j
        lower = sig_a[pos] if pos < len(sig_a) else 0.0
        worst = max(worst, lower - sig_c[j] - 1e-10)
        worst = max(worst, sig_c[j] - sig_a[j] - 1e-10)
    acc["e_inter"].record(worst)

    if svd(c).numerical_rank < k:
        acc["l_inter"].record(-math.inf)
        acc["l_inter2"].record(-math.inf)
        return
    ell = int(rng.integers(1, k))
    subsets = list(itertools.combinations(range(k), ell))
    if len(subsets) > sizes.submatrix_samples:
        pick = rng.choice(len(subsets), size=sizes.submatrix_samples, replace=False)
        subsets = [subsets[i] for i in sorted(pick)]
    parent_rvol = relative_volume(c)
    parent_kappa = _kappa_profile(c)
    v_inter = -math.inf
    v_inter2 = -math.inf
    for sub_idx in subsets:
        sub = c.columns(sub_idx)
        v_inter = max(v_inter, parent_rvol - relative_volume(sub) - 1e-10)
        for kappa_sub, kappa_parent in zip(_kappa_profile(sub), parent_kappa):
            v_inter2 = max(v_inter2, kappa_sub - kappa_parent - 1e-10)
    acc["l_inter"].record(v_inter)
    acc["l_inter2"].record(v_inter2)


def _kappa_profile(c: DenseMatrix, p: float = 4.0) -> tuple[float, ...]:
    return (
        condition_number(c, "two"),
        condition_number(c, "frobenius"),
        condition_number(c, "schatten", p),
        condition_number(c, "mixed"),
        condition_number(c, "mixed_schatten", p),
    )


def run_suite(seed: int = 0, trials: int = 200, sizes: SuiteSizes | None = None) -> list[LemmaReport]:
    """Run every documented check ``trials`` times per matrix family.

    Deterministic given ``seed``; the report is sorted by lemma id and a
    missing id means the suite itself is broken.
    """
    if trials < 1:
        raise InvalidParameterError(f"need trials >= 1, got {trials}")
    sizes = sizes or SuiteSizes()
    acc = {lid: _Accumulator() for lid in LEMMA_IDS}
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        _unit_trial(rng, sizes, acc)
        _orthonormal_trial(rng, sizes, acc)
        _perturbed_trial(rng, sizes, acc, 1e-6)
        _perturbed_trial(rng, sizes, acc, 1e-3)
        _partition_trial(rng, sizes, acc)
        _interlacing_trial(rng, sizes, acc)
    return [
        LemmaReport(lid, acc[lid].trials, acc[lid].failures, acc[lid].worst, seed)
        for lid in LEMMA_IDS
    ]


def check_removal_monotonicity(c: DenseMatrix, ell: int, seed: int = 0) -> bool:
    """Whether removing columns never lowers the scaled volume or raises any
    condition number.

    Checks all ell-column submatrices when there are at most 1000, otherwise a
    seeded sample of 1000.
    """
    k = c.cols
    if not 1 <= ell < k:
        raise InvalidParameterError(f"need 1 <= ell < {k}, got {ell}")
    if svd(c).numerical_rank < k:
        raise RankDeficiencyError("removal monotonicity requires full column rank")
    total = math.comb(k, ell)
    if total <= 1000:
        subsets = itertools.combinations(range(k), ell)
    else:
        rng = np.random.default_rng(seed)
        subsets = (
            tuple(np.sort(rng.choice(k, size=ell, replace=False))) for _ in range(1000)
        )
    parent_rvol = relative_volume(c)
    parent_kappa = _kappa_profile(c)
    for sub_idx in subsets:
        sub = c.columns(sub_idx)
        if relative_volume(sub) < parent_rvol - 1e-10:
            return False
        for kappa_sub, kappa_parent in zip(_kappa_profile(sub), parent_kappa):
            if kappa_sub > kappa_parent + 1e-10:
                return False
    return True
