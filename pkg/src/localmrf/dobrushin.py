"""Dobrushin comparison certificates for localized models.

The interaction matrix C has one entry per ordered adjacent pair: C_ij is the
worst-case change of node i's conditional p(x_i = +1 | rest) when only
neighbour j flips. With 2a = the conditional's log odds split into the flip
term 2J_ij and the rest M, the entry is

    f(M, J) = | sigma(-(M + 2J)) - sigma(-(M - 2J)) |

f is even in M and decreasing in |M|, so the sup over assignments is f at the
achievable M closest to zero (a signed-sum search over the other neighbours).

When max_i sum_j C_ij < 1 the comparison series D = (I - C)^-1 = sum_k C^k
converges and, for a model nu and its localisation mu agreeing inside alpha,

    |mu(x_q = s) - nu(x_q = s)| <= sum_{j in boundary_alpha} D_qj b_j

where b_j is the worst-case conditional gap between the two models at j. The
same geometric-series shape yields a distance form: influence decays like
c^d, giving a radius that certifies a target accuracy from c alone.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .model import IsingModel, LocalMRFError, LocalizedModel, Region

ENUMERATION_CAP = 25
POWER_ITERS = 200
POWER_TOL = 1e-10
_T_LOW = 1e-6  # search domain is t in (1 + _T_LOW, _T_HIGH]
_T_HIGH = 1e4
NEG_TOL = 1e-12  # tolerated numerical negativity in D


class EnumerationCapError(LocalMRFError):
    """Neighbourhood too large for exact worst-case enumeration."""


class DobrushinConditionError(LocalMRFError):
    """Contraction coefficient outside (0, 1)."""


def _sigmoid(t: float) -> float:
    if t >= 0.0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


def conditional_gap(m: float, j: float) -> float:
    """f(M, J): worst single-probability gap when one neighbour flips."""
    return abs(_sigmoid(-(m + 2.0 * j)) - _sigmoid(-(m - 2.0 * j)))


def _signed_sums(values: list[float]) -> np.ndarray:
    sums = np.zeros(1)
    for v in values:
        sums = np.concatenate([sums - v, sums + v])
    return sums


def _min_abs_offset_sum(values: list[float], offset: float) -> float:
    """min over signs s of |offset + sum_l s_l * values_l| (exact)."""
    k = len(values)
    if k == 0:
        return abs(offset)
    if k <= 4:
        best = math.inf
        for bits in range(1 << k):
            s = offset
            for l in range(k):
                s = s + values[l] if bits >> l & 1 else s - values[l]
            best = min(best, abs(s))
        return best
    if k <= 13:
        return float(np.min(np.abs(offset + _signed_sums(values))))
    left = _signed_sums(values[: k // 2])
    right = np.sort(offset + _signed_sums(values[k // 2 :]))
    pos = np.searchsorted(right, -left)
    best = math.inf
    for shift in (0, -1):
        take = np.clip(pos + shift, 0, right.size - 1)
        best = min(best, float(np.min(np.abs(left + right[take]))))
    return best


def interaction_entry(model: IsingModel, i: int, j: int, cap: int = ENUMERATION_CAP) -> float:
    """C_ij of the given model; zero unless i and j are adjacent."""
    j_ij = model.coupling(i, j)
    if j_ij == 0.0:
        return 0.0
    others = [2.0 * model.coupling(i, l) for l in model.adjacency[i] if l != j]
    if len(others) > cap:
        raise EnumerationCapError(
            f"node {i} has {len(others) + 1} neighbours, enumeration cap is {cap}"
        )
    m = _min_abs_offset_sum(others, 2.0 * float(model.h[i]))
    return conditional_gap(m, j_ij)


def interaction_matrix(model: IsingModel, cap: int = ENUMERATION_CAP) -> np.ndarray:
    """Dense C for a (small) model; rows are conditioned nodes."""
    n = model.n
    c = np.zeros((n, n))
    for i in range(n):
        for j in model.adjacency[i]:
            c[i, j] = interaction_entry(model, i, j, cap=cap)
    return c


def dobrushin_coefficient(model: IsingModel, cap: int = ENUMERATION_CAP) -> tuple[float, int]:
    """(c, argmax node) where c = max_i sum_j C_ij, ties to the lowest id."""
    best = 0.0
    best_node = 0
    for i in range(model.n):
        row = 0.0
        for j in model.adjacency[i]:
            row += interaction_entry(model, i, j, cap=cap)
        if row > best:
            best, best_node = row, i
    return best, best_node


def spectral_radius(c: np.ndarray, iters: int = POWER_ITERS, tol: float = POWER_TOL) -> float:
    """Power-iteration estimate of rho(C) for entrywise nonnegative C.

    Iterates on C + I: the shift keeps the iteration aperiodic and moves the
    radius by exactly +1 for nonnegative matrices.
    """
    n = c.shape[0]
    if n == 0:
        return 0.0
    v = np.full(n, 1.0 / n)
    lam = 0.0
    for _ in range(iters):
        w = c @ v + v
        new_lam = float(np.max(np.abs(w)))
        if new_lam == 0.0:
            return 0.0
        v = w / new_lam
        if abs(new_lam - lam) <= tol:
            lam = new_lam
            break
        lam = new_lam
    return lam - 1.0


def influence_matrix(
    c: np.ndarray,
    prev: tuple[np.ndarray, int, np.ndarray] | None = None,
) -> tuple[np.ndarray, bool]:
    """(D, valid) with D = (I - C)^-1.

    valid requires rho(C) < 1 (power iteration) and D >= -1e-12 entrywise.
    With `prev = (D_prev, new_index, C_prev)` the inverse is updated from the
    previous alpha's solution: rank-one corrections for the rows whose
    neighbourhood changed, then a bordering step for the appended node. The
    update path agrees with the direct solve to 1e-8.
    """
    n = c.shape[0]
    rho = spectral_radius(c)
    if prev is None:
        d, solved = _direct_inverse(c)
    else:
        d, solved = _incremental_inverse(c, *prev)
        if not solved:
            d, solved = _direct_inverse(c)
    if not solved:
        return np.full((n, n), np.nan), False
    valid = rho < 1.0 and float(d.min()) >= -NEG_TOL
    return d, valid


def _direct_inverse(c: np.ndarray) -> tuple[np.ndarray, bool]:
    n = c.shape[0]
    try:
        return np.linalg.solve(np.eye(n) - c, np.eye(n)), True
    except np.linalg.LinAlgError:
        return np.full((n, n), np.nan), False


def _incremental_inverse(
    c: np.ndarray, d_prev: np.ndarray, new_index: int, c_prev: np.ndarray
) -> tuple[np.ndarray, bool]:
    n = c.shape[0]
    old = [i for i in range(n) if i != new_index]
    a_new = np.eye(n - 1) - c[np.ix_(old, old)]
    delta = a_new - (np.eye(n - 1) - c_prev)
    d_old = d_prev.copy()
    for r in np.flatnonzero(np.any(delta != 0.0, axis=1)):
        u = delta[r]
        col = d_old[:, r].copy()
        row = u @ d_old
        denom = 1.0 + row[r]
        if abs(denom) < 1e-14:
            return d_prev, False
        d_old -= np.outer(col, row) / denom
    # bordering: inverse of [[A, b], [c, d]] from A^-1 via the Schur complement
    b_col = -c[old, new_index]
    c_row = -c[new_index, old]
    x = d_old @ b_col
    y = c_row @ d_old
    s = (1.0 - c[new_index, new_index]) - float(c_row @ x)
    if abs(s) < 1e-14:
        return d_prev, False
    d = np.empty((n, n))
    d[np.ix_(old, old)] = d_old + np.outer(x, y) / s
    d[old, new_index] = -x / s
    d[new_index, old] = -y / s
    d[new_index, new_index] = 1.0 / s
    return d, True


def perturbation_vector(
    model: IsingModel,
    localized: LocalizedModel,
    region: Region,
    cap: int = ENUMERATION_CAP,
) -> np.ndarray:
    """Worst-case conditional gaps b, aligned with the alpha order.

    Interior alpha nodes see identical conditionals in both models, so their
    entries are exactly zero. For a boundary node j the localized conditional
    uses the compensated field and alpha neighbours only, while the full
    model's also sums the outside neighbours; the sup over outside assignments
    is attained at the extreme cross sums, so only alpha-side assignments are
    enumerated.
    """
    alpha = region.alpha
    index = {g: i for i, g in enumerate(alpha)}
    b = np.zeros(len(alpha))
    sub = localized.submodel
    for j in region.boundary_alpha:
        li = index[j]
        if model.degree(j) > cap:
            raise EnumerationCapError(
                f"node {j} has degree {model.degree(j)}, enumeration cap is {cap}"
            )
        alpha_js = [2.0 * sub.coupling(li, index[k]) for k in model.adjacency[j] if k in index]
        t = 2.0 * sum(abs(model.coupling(j, k)) for k in model.adjacency[j] if k not in index)
        sums = _signed_sums(alpha_js)
        base_mu = 2.0 * sub.h[li] + sums
        base_nu = 2.0 * model.h[j] + sums
        p_mu = _expit(base_mu)
        gap = np.maximum(
            np.abs(p_mu - _expit(base_nu + t)),
            np.abs(p_mu - _expit(base_nu - t)),
        )
        b[li] = float(np.max(gap))
    return b


def _expit(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


@dataclass(frozen=True, eq=False)
class DobrushinCertificate:
    """Certified error bound for a localized marginal query.

    bound upper-bounds |p_local(x_query = s) - p_global(x_query = s)| for both
    spin values whenever valid is True. C, D and b are aligned with alpha.
    """

    alpha: tuple[int, ...]
    C: np.ndarray
    D: np.ndarray
    b: np.ndarray
    bound: float
    valid: bool
    c_local: float
    method: str
    cap: int

    def to_json(self) -> str:
        payload = {
            "alpha": list(self.alpha),
            "bound": self.bound if self.valid else None,
            "valid": self.valid,
            "b": [float(x) for x in self.b],
            "c_local": self.c_local,
        }
        return json.dumps(payload, sort_keys=True)


def local_certificate(
    model: IsingModel,
    region: Region,
    localized: LocalizedModel,
    cap: int = ENUMERATION_CAP,
    prev: tuple[np.ndarray, int, np.ndarray] | None = None,
) -> DobrushinCertificate:
    """Certificate for the query marginal of a localized model.

    C is computed on the localized submodel (compensated fields, alpha-internal
    edges only); b compares the two conditionals at the alpha boundary; the
    bound is row `query` of D against b. An unusable solve or rho >= 1 yields
    valid=False and bound=+inf.
    """
    sub = localized.submodel
    c = interaction_matrix(sub, cap=cap)
    d, valid = influence_matrix(c, prev=prev)
    b = perturbation_vector(model, localized, region, cap=cap)
    c_local = float(np.max(c.sum(axis=1))) if c.size else 0.0
    qi = region.alpha.index(region.query)
    bound = float(d[qi] @ b) if valid else math.inf
    return DobrushinCertificate(
        alpha=region.alpha,
        C=c,
        D=d,
        b=b,
        bound=bound,
        valid=valid,
        c_local=c_local,
        method=localized.method.value,
        cap=cap,
    )


def _decay_rate(c: float, t: float) -> float:
    """Per-hop log decay ln((1 + (t-1)c) / (tc)); positive for 0 < c < 1."""
    return math.log((1.0 + (t - 1.0) * c) / (t * c))


def _radius_objective(c: float, eps: float, t: float) -> float:
    return math.log(t / (2.0 * eps * (t - 1.0) * (1.0 - c))) / _decay_rate(c, t)


def _bound_objective(c: float, d: float, t: float) -> float:
    # worst-entry factor 1/2 times the geometric tail e^(-d rate) * t/((t-1)(1-c))
    log_val = math.log(0.5 * t / ((t - 1.0) * (1.0 - c))) - d * _decay_rate(c, t)
    return math.exp(log_val)


def _golden_min(fun, lo: float, hi: float, iters: int = 120) -> float:
    """Golden-section minimiser on [lo, hi]; returns the argmin."""
    ratio = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - ratio * (b - a)
    x2 = a + ratio * (b - a)
    f1, f2 = fun(x1), fun(x2)
    for _ in range(iters):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - ratio * (b - a)
            f1 = fun(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + ratio * (b - a)
            f2 = fun(x2)
    return (a + b) / 2.0


def _candidate_ts(fun) -> list[float]:
    """Shared t-search: golden section in log(t-1) plus a fixed grid and t=2."""
    lo, hi = math.log(_T_LOW), math.log(_T_HIGH - 1.0)
    u_star = _golden_min(lambda u: fun(1.0 + math.exp(u)), lo, hi)
    grid = np.exp(np.linspace(lo, hi, 65))
    return [1.0 + math.exp(u_star), 2.0] + [1.0 + g for g in grid]


def _check_c(c: float) -> None:
    if c >= 1.0:
        raise DobrushinConditionError(f"contraction coefficient c={c} is not < 1")
    if c <= 0.0:
        raise DobrushinConditionError(f"contraction coefficient c={c} is not > 0")


def decay_radius(c: float, eps: float, return_t: bool = False):
    """Smallest certified hop distance: matching a model on a radius-r ball
    around the query keeps the query marginal within eps.

    Minimises the un-ceiled distance expression over t by golden section, then
    takes the best integer over the candidate set; the t=2 closed form
    ceil(-ln(eps (1-c)) / ln((1+c)/(2c))) is always a candidate, so the result
    never exceeds it. Clamped at zero. With return_t, also reports the t that
    attained the minimum.
    """
    _check_c(c)
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    best, best_t = math.inf, 2.0
    for t in _candidate_ts(lambda t: _radius_objective(c, eps, t)):
        r = max(0, math.ceil(_radius_objective(c, eps, t)))
        if r < best:
            best, best_t = r, t
    return (int(best), best_t) if return_t else int(best)


def decay_bound(c: float, d: float) -> float:
    """Certified marginal gap at hop distance d >= 0 under coefficient c.

    Inverse-consistent with decay_radius: decay_bound(c, decay_radius(c, eps))
    is at most eps.
    """
    _check_c(c)
    if d < 0:
        raise ValueError(f"distance must be >= 0, got {d}")
    best = math.inf
    for t in _candidate_ts(lambda t: _bound_objective(c, d, t)):
        best = min(best, _bound_objective(c, d, t))
    return best
