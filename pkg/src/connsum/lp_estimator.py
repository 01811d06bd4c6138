"""One-dimensional power-weight kernel operators: exact boundedness
predicates and empirical norm trends.

Two model families on the half line:

* domain [1, oo), measures r^{d_1 - 1} dr (left) and r^{d_2 - 1} dr
  (right), kernel x^{-a} y^{-b} for x <= y and x^{-a'} y^{-b'} for y < x;
  bounded L^p(d_2) -> L^p(d_1) when p (a + b - d_2) > d_1 - d_2,
  p (a' + b' - d_2) > d_1 - d_2 and
  d_1/min(d_1, a') < p < d_2/max(0, d_2 - b);

* domain (0, oo), d_1 = d_2 = d with the homogeneous calibration
  a + b = d = a' + b': after the Mellin substitution the operator is
  convolution by u(s) = e^{(d/p - a) s} (s <= 0), e^{(d/p - a') s}
  (s > 0), so it is bounded exactly when u is integrable:
  a' > a and d/a' < p < d/a, with operator norm at most ||u||_{L^1}.

Equalities in any of the inequalities are boundary cases: the lemmas are
silent there and the predicate raises instead of guessing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .fits import loglog_slope

_BTOL = 1e-12


class BoundaryCase(ArithmeticError):
    """An inequality of the lemma holds with equality: no classification."""


@dataclass(frozen=True)
class PowerKernel:
    a: float
    b: float
    a_prime: float
    b_prime: float
    d1: float = 1.0
    d2: float = 1.0
    domain_start: float = 1.0   # 1 for the [1, oo) lemma, 0 for the scaling one

    def __post_init__(self):
        if self.d1 < 1 or self.d2 < 1:
            raise DomainError("PowerKernel: need d1, d2 >= 1")
        if self.domain_start not in (0.0, 1.0):
            raise DomainError("PowerKernel: domain starts at 0 or 1")
        if self.domain_start == 0.0:
            if self.d1 != self.d2:
                raise DomainError("scaling lemma needs d1 == d2")
            if abs(self.a + self.b - self.d1) > _BTOL or \
               abs(self.a_prime + self.b_prime - self.d1) > _BTOL:
                raise DomainError(
                    "scaling lemma needs the homogeneous calibration "
                    "a + b = d = a' + b'")

    @property
    def homogeneous(self) -> bool:
        return self.domain_start == 0.0

    def values(self, x, y):
        x = np.asarray(x, dtype=float)[:, None]
        y = np.asarray(y, dtype=float)[None, :]
        below = x ** (-self.a) * y ** (-self.b)
        above = x ** (-self.a_prime) * y ** (-self.b_prime)
        return np.where(x <= y, below, above)


def lemma_predicate(kernel: PowerKernel, p: float) -> bool:
    """Exact boundedness predicate of the applicable lemma.

    Raises BoundaryCase when any inequality is an equality (within
    1e-12), where the lemmas assert nothing.
    """
    if p <= 1:
        raise DomainError("lemma_predicate: need p > 1")
    k = kernel
    if k.homogeneous:
        d = k.d1
        checks = [k.a_prime - k.a, p - d / k.a_prime, d / k.a - p]
        if any(abs(c) <= _BTOL for c in checks):
            raise BoundaryCase(f"boundary case at p={p}")
        return all(c > 0 for c in checks)
    lhs1 = p * (k.a + k.b - k.d2) - (k.d1 - k.d2)
    lhs2 = p * (k.a_prime + k.b_prime - k.d2) - (k.d1 - k.d2)
    low = k.d1 / min(k.d1, k.a_prime) if k.a_prime > 0 else math.inf
    denom = max(0.0, k.d2 - k.b)
    high = math.inf if denom == 0.0 else k.d2 / denom
    checks = [lhs1, lhs2, p - low, (high - p) if math.isfinite(high) else 1.0]
    if any(abs(c) <= _BTOL for c in checks):
        raise BoundaryCase(f"boundary case at p={p}")
    return all(c > 0 for c in checks)


def mellin_profile_l1(kernel: PowerKernel, p: float,
                      quadrature: bool = False) -> float:
    """|| u ||_{L^1(R)} for the log-substituted convolution profile of a
    homogeneous kernel: closed form 1/(d/p - a) + 1/(a' - d/p) inside the
    boundedness window, infinity outside.

    quadrature=True evaluates the same integral numerically instead (the
    substitution oracle)."""
    if not kernel.homogeneous:
        raise DomainError("Mellin profile needs the homogeneous calibration")
    d = kernel.d1
    alpha = d / p - kernel.a        # exponent for s <= 0
    beta = d / p - kernel.a_prime   # exponent for s > 0
    if alpha <= 0 or beta >= 0:
        return math.inf
    if not quadrature:
        return 1.0 / alpha - 1.0 / beta
    from scipy.integrate import quad

    left, _ = quad(lambda s: math.exp(alpha * s), -80.0 / alpha, 0.0, limit=200)
    right, _ = quad(lambda s: math.exp(beta * s), 0.0, -80.0 / beta, limit=200)
    return left + right


@dataclass
class BoundednessVerdict:
    p: float
    predicate: bool
    trend: str                  # "stable" | "divergent"
    norms: list
    growth_exponent: float | None = None

    @property
    def agree(self) -> bool:
        return self.predicate == (self.trend == "stable")


def _log_grid_operator(kernel: PowerKernel, r_max: float, pts_per_decade: int):
    lo = 1.0 if kernel.domain_start == 1.0 else 1.0 / r_max
    n = max(24, int(math.log10(r_max / lo) * pts_per_decade) + 1)
    x = np.geomspace(lo, r_max, n)
    w2 = np.gradient(x) * x ** (kernel.d2 - 1)
    w1 = np.gradient(x) * x ** (kernel.d1 - 1)
    mat = kernel.values(x, x) * w2[None, :]
    return mat, w1, w2


def _norm_lower(mat, w1, w2, p: float, iters: int = 40) -> float:
    f = np.ones(mat.shape[1])
    best = 0.0
    for _ in range(iters):
        nf = float(np.dot(w2, f ** p)) ** (1.0 / p)
        if not (np.isfinite(nf) and nf > 0):
            break
        f = f / nf
        g = mat @ f
        best = max(best, float(np.dot(w1, np.abs(g) ** p)) ** (1.0 / p))
        h = (mat.T @ (w1 * g ** (p - 1.0))) / w2
        f = h ** (1.0 / (p - 1.0))
        if not np.all(np.isfinite(f)):
            break
    return best


def empirical_norm_trend(kernel: PowerKernel, p: float,
                         r_maxes=(1e2, 1e3, 1e4, 1e5, 1e6),
                         pts_per_decade: int = 16,
                         stability: float = 0.05) -> BoundednessVerdict:
    """Discretize on log grids up to each R_max, estimate the operator
    norm by the positive-kernel power iteration, and classify the trend.

    The verdict matches the exact predicate away from boundary cases.
    """
    if p <= 1:
        raise DomainError("empirical_norm_trend: need p > 1")
    norms = []
    for rmax in r_maxes:
        mat, w1, w2 = _log_grid_operator(kernel, rmax, pts_per_decade)
        norms.append(_norm_lower(mat, w1, w2, p))
    tail = np.array(norms[-3:])
    var = float((tail.max() - tail.min()) / tail.max())
    try:
        pred = lemma_predicate(kernel, p)
    except BoundaryCase:
        pred = None
    if var < stability:
        return BoundednessVerdict(p, pred, "stable", norms)
    slope = loglog_slope(np.array(r_maxes, dtype=float), np.array(norms))
    return BoundednessVerdict(p, pred, "divergent", norms, slope)


def random_instance_suite(n_instances: int = 200, seed: int = 5,
                          pts_per_decade: int = 20) -> dict:
    """Predicate/trend agreement over random non-boundary instances of
    both lemmas."""
    rng = np.random.default_rng(seed)
    agree = 0
    total = 0
    disagreements = []
    while total < n_instances:
        if rng.random() < 0.5:
            d = float(rng.uniform(1.0, 4.0))
            a = float(rng.uniform(0.1, d - 0.1))
            ap = float(rng.uniform(0.1, d - 0.05))
            kern = PowerKernel(a, d - a, ap, d - ap, d, d, domain_start=0.0)
        else:
            d1 = float(rng.uniform(1.0, 4.0))
            d2 = float(rng.uniform(1.0, 4.0))
            a = float(rng.uniform(0.2, 3.0))
            b = float(rng.uniform(0.2, 3.0))
            ap = float(rng.uniform(0.2, 3.5))
            bp = float(rng.uniform(0.2, 3.0))
            kern = PowerKernel(a, b, ap, bp, d1, d2)
        p = float(rng.uniform(1.1, 5.0))
        try:
            pred = lemma_predicate(kern, p)
        except BoundaryCase:
            continue
        # keep clear of boundary cases so truncation effects cannot flip
        # the classification
        if _margin(kern, p) < 0.35:
            continue
        verdict = empirical_norm_trend(kern, p, pts_per_decade=pts_per_decade)
        total += 1
        if verdict.agree:
            agree += 1
        else:
            disagreements.append((kern, p, pred, verdict.trend))
    return {"agree": agree, "total": total, "disagreements": disagreements}


def _margin(kernel: PowerKernel, p: float) -> float:
    """Distance to the nearest lemma boundary in exponent units: the
    slowest exponential rate of the underlying Mellin-type profiles.
    Small margins mean the truncated norms converge or diverge only
    logarithmically slowly, so the suite skips them."""
    k = kernel
    if k.homogeneous:
        d = k.d1
        return min(abs(d / p - k.a), abs(k.a_prime - d / p))
    m1 = abs(p * (k.a + k.b - k.d2) - (k.d1 - k.d2)) / p
    m2 = abs(p * (k.a_prime + k.b_prime - k.d2) - (k.d1 - k.d2)) / p
    m3 = abs(min(k.d1, k.a_prime) - k.d1 / p)
    vals = [m1, m2, m3]
    vals.append(abs(k.b - k.d2 * (1.0 - 1.0 / p)))
    return min(vals)


def dual_kernel(kernel: PowerKernel) -> PowerKernel:
    """Transpose kernel K(y, x): the x <= y branch picks up the primed
    exponents with the roles of the variables swapped, and the two
    measures trade places."""
    return PowerKernel(kernel.b_prime, kernel.a_prime, kernel.b, kernel.a,
                       kernel.d2, kernel.d1,
                       domain_start=kernel.domain_start)


def paper_instances(n_plus: int = 3):
    """The kernel instances arising in the low-energy gradient analysis,
    with the p-ranges on which they are bounded."""
    n = n_plus
    return [
        # both variables on the two-dimensional end: d = 2, a = 1, a' = 2
        (PowerKernel(1.0, 1.0, 2.0, 0.0, 2.0, 2.0, domain_start=0.0),
         (1.0, 2.0)),
        # left on the plus end, right on the minus end
        (PowerKernel(n - 1.0, 1.0, float(n), 0.0, float(n), 2.0), (1.0, 2.0)),
        # left on the minus end, right on the plus end
        (PowerKernel(1.0, n - 1.0, 2.0, n - 2.0, 2.0, float(n)),
         (1.0, float(n))),
        # both on the plus end: min(r^{-n} r'^{2-n}, r^{1-n} r'^{1-n})
        (PowerKernel(n - 1.0, n - 1.0, float(n), n - 2.0, float(n), float(n)),
         (1.0, float(n))),
    ]
