"""Limit law of the last cards drawn under an infinite weight sequence.

For weights theta_1 <= theta_2 <= ... attach independent Exponential(theta_i)
clocks X_i.  The reversed draw order of the finite model on labels 1..n
converges in law, as n grows, exactly when

    x0 = inf { x : f(x) < infinity } < infinity   and   f(x0) = infinity,

where f(x) = sum_i exp(-theta_i x).  The limiting probability that the
bottom k cards read a_1, ..., a_k (a_1 at the very bottom) is

    integral over x_1 > ... > x_k > 0 of
        prod_j theta_{a_j} e^{-theta_{a_j} x_j}
        * prod_{i not in a} (1 - e^{-theta_i x_k})  dx.

The inner x_1..x_{k-1} integrals telescope in closed form, leaving a single
one-dimensional integral

    prod_{m=2}^{k-1} theta_{a_m}/T_m *
    integral_0^inf theta_{a_k} e^{-T_k x} prod_{i not in a}(1 - e^{-theta_i x}) dx

with T_m = theta_{a_1} + ... + theta_{a_m}, evaluated here after the
substitution y = e^{-x} by adaptive Gauss-Kronrod quadrature.  The infinite
survival product is evaluated in log space with certified tail brackets per
weight family, and an importance-sampling Monte Carlo estimator is provided
as an independent cross-check.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .core import as_weight_vector
from .exceptions import DefectiveMassWarning, PreconditionError, ToleranceError

__all__ = [
    "WeightSequence",
    "linear_weights",
    "constant_weights",
    "log_weights",
    "log_loglog_weights",
    "SEQUENCE_FAMILIES",
    "ConvergenceReport",
    "f_eval",
    "convergence_test",
    "limit_bottom_pmf",
    "limit_bottom_pmf_mc",
    "sukhatme_last_card_table",
    "finite_n_bottom_pmf",
]

LOG_PRODUCT_FLOOR = -700.0  # survival products below e^-700 are flushed to zero
_TERMS_MAX = 1 << 21
_DIVERGENT = (math.inf, math.inf)


class WeightSequence:
    """An infinite nondecreasing sequence of strictly positive weights.

    Parameters
    ----------
    evaluator : callable
        Maps a 1-based index to the weight; values must be positive and
        nondecreasing (checked lazily as indices are touched).
    monotone : bool
        Declares the sequence nondecreasing; required by the convergence
        classifier.
    tail_bound : callable or None
        Optional ``(n_terms, x) -> upper bound on sum_{i > n_terms}
        exp(-theta_i x)``.  Enables certified truncation for custom
        sequences; the named families below carry sharper built-in brackets.
    family : str or None
        Registry tag of a built-in family; drives analytic classification
        and exact tail handling.
    beta : float or None
        Scale parameter of the ``log`` family.
    """

    __slots__ = ("_evaluator", "monotone", "tail_bound", "family", "beta", "_cache")

    def __init__(self, evaluator, *, monotone=False, tail_bound=None, family=None, beta=None):
        self._evaluator = evaluator
        self.monotone = bool(monotone)
        self.tail_bound = tail_bound
        self.family = family
        self.beta = beta
        self._cache = np.empty(0, dtype=np.float64)

    def thetas(self, n):
        """Weights for indices 1..n as an array (cached)."""
        if n > self._cache.size:
            lo = self._cache.size
            new = np.array([self._evaluator(i) for i in range(lo + 1, n + 1)], dtype=np.float64)
            if np.any(new <= 0.0) or not np.all(np.isfinite(new)):
                raise PreconditionError("sequence weights must be strictly positive and finite")
            merged = np.concatenate([self._cache, new])
            if self.monotone and np.any(np.diff(merged) < -1e-12):
                raise PreconditionError("sequence declared monotone but weights decrease")
            self._cache = merged
        return self._cache[:n]

    def theta(self, i):
        if i < 1:
            raise PreconditionError("indices are 1-based")
        return float(self.thetas(i)[i - 1])

    def __repr__(self):
        tag = self.family or "custom"
        return f"WeightSequence({tag})"


def linear_weights():
    """theta_i = i."""
    return WeightSequence(lambda i: float(i), monotone=True, family="linear")


def constant_weights():
    """theta_i = 1 (the uniform urn; the reversed order never converges)."""
    return WeightSequence(lambda i: 1.0, monotone=True, family="constant")


def log_weights(beta=1.0):
    """theta_i = beta * log(i + 1)."""
    if beta <= 0:
        raise PreconditionError("beta must be positive")
    return WeightSequence(lambda i: beta * math.log(i + 1), monotone=True,
                          family="log", beta=float(beta))


def log_loglog_weights():
    """theta_i = log(i+1) + 2 log log(i+1), first term floored to log 2.

    At i = 1 the nominal formula is negative (log log 2 < 0), so the first
    weight is taken as log 2; the tail, and hence the convergence behavior,
    is unchanged.  The sequence sits exactly on the boundary where
    f(x0) stays finite, so the reversed order has a defective limit.
    """

    def ev(i):
        if i == 1:
            return math.log(2.0)
        return math.log(i + 1) + 2.0 * math.log(math.log(i + 1))

    return WeightSequence(ev, monotone=True, family="log-loglog")


SEQUENCE_FAMILIES = {
    "linear": linear_weights,
    "constant": constant_weights,
    "log": log_weights,
    "log-loglog": log_loglog_weights,
}


# ---------------------------------------------------------------------------
# certified tails
# ---------------------------------------------------------------------------

def _loglog_tail_integral(x, n_terms):
    """integral_{n_terms+1}^inf (t+1)^-x log(t+1)^-2x dt for x >= 1."""
    a = math.log(n_terms + 2)
    if x == 1.0:
        return 1.0 / a
    val, _ = integrate.quad(lambda u: math.exp((1.0 - x) * u) * u ** (-2.0 * x),
                            a, math.inf, epsabs=0.0, epsrel=1e-10, limit=200)
    return val


def _tail_exp_sum_bracket(seq, n_terms, x):
    """Bracket (lo, hi) of sum_{i > n_terms} exp(-theta_i x).

    Returns ``(inf, inf)`` when the tail provably diverges and None when the
    sequence carries no usable tail information.
    """
    if seq.family == "linear":
        q = math.exp(-x)
        v = math.exp(-(n_terms + 1) * x) / (1.0 - q) if x > 0 else math.inf
        if x <= 0:
            return _DIVERGENT
        return (v, v)
    if seq.family == "constant":
        return _DIVERGENT
    if seq.family == "log":
        s = seq.beta * x
        if s <= 1.0:
            return _DIVERGENT
        base = float(n_terms + 2)
        lo = base ** (1.0 - s) / (s - 1.0)
        return (lo, lo + base ** (-s))
    if seq.family == "log-loglog":
        if x < 1.0:
            return _DIVERGENT
        lo = _loglog_tail_integral(x, n_terms)
        g = (n_terms + 2) ** (-x) * math.log(n_terms + 2) ** (-2.0 * x)
        return (lo, lo + g)
    if seq.tail_bound is not None:
        hi = float(seq.tail_bound(n_terms, x))
        if math.isinf(hi):
            return None
        return (0.0, hi)
    return None


def _linear_tail_log_survival(n_terms, x):
    """Exact sum_{i > n_terms} log(1 - e^{-ix}) via the geometric m-series.

    Equals -sum_m (1/m) e^{-m(n_terms+1)x} / (1 - e^{-mx}); truncated once
    terms fall below machine noise or the running total guarantees the
    survival product flushes to zero anyway.
    """
    acc = 0.0
    for m in range(1, 100000):
        mx = m * x
        denom = -math.expm1(-mx)
        term = math.exp(-m * (n_terms + 1) * x) / (m * denom)
        acc += term
        if term < 1e-18 * max(acc, 1e-300):
            break
        if acc > 800.0:
            break
    return -acc


def _log_survival_bracket(seq, x, exclude, rel_tol, min_terms=0):
    """Bracket of sum over i not in ``exclude`` of log(1 - e^{-theta_i x}).

    Returns (lo, hi); (-inf, -inf) means the product is exactly zero (the
    underlying sum diverges or the partial product crossed the e^-700 floor).
    """
    max_excl = max(exclude) if exclude else 0
    n = max(32, 2 * max_excl, int(min_terms))
    partial = 0.0
    done = 0
    while True:
        th = seq.thetas(n)[done:n]
        with np.errstate(divide="ignore"):
            terms = np.log1p(-np.exp(-x * th))
        if done < max_excl:
            keep = np.array([i not in exclude for i in range(done + 1, n + 1)])
            terms = terms[keep]
        partial += float(terms.sum())
        done = n
        if partial <= LOG_PRODUCT_FLOOR or math.isinf(partial):
            return (-math.inf, -math.inf)
        br = _tail_exp_sum_bracket(seq, n, x)
        if br == _DIVERGENT:
            return (-math.inf, -math.inf)
        if seq.family == "linear":
            t = _linear_tail_log_survival(n, x)
            if partial + t <= LOG_PRODUCT_FLOOR:
                return (-math.inf, -math.inf)
            return (partial + t, partial + t)
        if br is not None:
            s_lo, s_hi = br
            r = math.exp(-seq.theta(n + 1) * x)
            # the m >= 2 terms of the -log(1-u) expansions are folded into
            # the upper magnitude via u^m <= u r^(m-1)
            hi_mag = s_hi * (1.0 + r / (2.0 * (1.0 - r))) if r < 1.0 else math.inf
            if hi_mag - s_lo <= rel_tol or hi_mag <= 1e-300:
                return (partial - hi_mag, partial - s_lo)
        else:
            # no tail information: extend until the newest term is negligible
            if math.exp(-seq.theta(n) * x) < 1e-18:
                return (partial, partial)
        if n >= _TERMS_MAX:
            # out of budget: report the widest honest bracket instead of
            # silently tightening it
            if br is not None and math.isfinite(hi_mag):
                return (partial - hi_mag, partial - s_lo)
            return (-math.inf, partial)
        n *= 2


# ---------------------------------------------------------------------------
# f and the convergence classifier
# ---------------------------------------------------------------------------

def f_eval(seq, x, tol=1e-10):
    """sum_i exp(-theta_i x) within additive ``tol``; inf when divergent."""
    if tol <= 0:
        raise PreconditionError("tol must be positive")
    x = float(x)
    if x <= 0.0:
        raise PreconditionError("x must be positive (the sum is infinite at x <= 0)")
    n = 64
    partial = 0.0
    done = 0
    prev_window = None
    stalls = 0
    while True:
        th = seq.thetas(n)[done:n]
        window = float(np.exp(-x * th).sum())
        partial += window
        done = n
        br = _tail_exp_sum_bracket(seq, n, x)
        if br == _DIVERGENT:
            return math.inf
        if br is not None and br[1] - br[0] <= tol and math.isfinite(br[1]):
            return partial + 0.5 * (br[0] + br[1])
        if br is None and prev_window is not None:
            if window <= tol / 4.0 and window < 0.5 * prev_window:
                q = window / prev_window
                est = window * q / (1.0 - q)
                if est <= tol:
                    return partial + 0.5 * est
            if window > tol and window >= 0.9 * prev_window:
                stalls += 1
                if stalls >= 3:
                    return math.inf
            else:
                stalls = 0
        prev_window = window
        if n >= _TERMS_MAX:
            raise ToleranceError(f"f_eval could not certify tolerance {tol:g} at x={x:g}")
        n *= 2


@dataclass(frozen=True)
class ConvergenceReport:
    """Outcome of the reversed-order convergence test.

    ``converges`` is true exactly when x0 is finite and f(x0) is infinite.
    """

    x0: float
    f_at_x0: str
    converges: bool
    method: str
    caveat: str | None = None

    def __post_init__(self):
        if self.f_at_x0 not in ("finite", "infinite"):
            raise PreconditionError("f_at_x0 must be 'finite' or 'infinite'")
        expected = math.isfinite(self.x0) and self.f_at_x0 == "infinite"
        if self.converges != expected:
            raise PreconditionError("converges flag inconsistent with x0 / f(x0)")

    def to_dict(self):
        return {
            "x0": self.x0 if math.isfinite(self.x0) else "inf",
            "f_at_x0": self.f_at_x0,
            "converges": self.converges,
            "method": self.method,
            "caveat": self.caveat,
        }


_ANALYTIC_CLASSIFICATION = {
    # family -> (x0(beta), f_at_x0)
    "linear": (lambda beta: 0.0, "infinite"),
    "constant": (lambda beta: math.inf, "finite"),
    "log": (lambda beta: 1.0 / beta, "infinite"),
    "log-loglog": (lambda beta: 1.0, "finite"),
}


def convergence_test(seq):
    """Classify whether the reversed draw order has a (proper) limit law."""
    if seq.family in _ANALYTIC_CLASSIFICATION:
        x0_of, f_at = _ANALYTIC_CLASSIFICATION[seq.family]
        x0 = x0_of(seq.beta)
        converges = math.isfinite(x0) and f_at == "infinite"
        return ConvergenceReport(x0=x0, f_at_x0=f_at, converges=converges, method="analytic")
    if not seq.monotone:
        raise PreconditionError("convergence_test requires a monotone sequence")

    caveat = None if seq.tail_bound is not None else \
        "no tail bound supplied; classification rests on partial-sum heuristics"

    def is_finite(x):
        if seq.tail_bound is not None:
            n = 64
            while n <= _TERMS_MAX:
                if math.isfinite(float(seq.tail_bound(n, x))):
                    return True
                n *= 2
            return False
        try:
            return math.isfinite(f_eval(seq, x, tol=1e-6))
        except ToleranceError:
            return False

    hi = 1.0
    doublings = 0
    while not is_finite(hi):
        hi *= 2.0
        doublings += 1
        if doublings > 60:
            return ConvergenceReport(x0=math.inf, f_at_x0="finite", converges=False,
                                     method="numeric-best-effort",
                                     caveat=caveat or "no finite point located")
    lo = hi / 2.0
    halvings = 0
    while is_finite(lo):
        hi = lo
        lo /= 2.0
        halvings += 1
        if halvings > 60:
            lo = 0.0
            break
    if lo == 0.0:
        x0 = 0.0
    else:
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if is_finite(mid):
                hi = mid
            else:
                lo = mid
        x0 = 0.5 * (lo + hi)

    # decide f(x0) by raw partial-sum growth at (or just above) zero
    probe = x0 if x0 > 0 else 1e-12
    partial = float(np.exp(-probe * seq.thetas(1 << 16)).sum())
    f_at_x0 = "infinite" if partial > 1e4 else "finite"
    converges = math.isfinite(x0) and f_at_x0 == "infinite"
    return ConvergenceReport(x0=x0, f_at_x0=f_at_x0, converges=converges,
                             method="numeric-best-effort", caveat=caveat)


# ---------------------------------------------------------------------------
# bottom-card pmfs
# ---------------------------------------------------------------------------

def _check_bottom_labels(a, n=None):
    a = tuple(int(v) for v in a)
    if len(a) == 0:
        raise PreconditionError("need at least one label")
    if len(set(a)) != len(a):
        raise PreconditionError("labels must be distinct")
    for v in a:
        if v < 1 or (n is not None and v > n):
            hi = n if n is not None else "inf"
            raise PreconditionError(f"label {v} out of range 1..{hi}")
    return a


def _telescoped_integral(theta_a, log_survival_bracket, tol, points=None):
    """prefactor * integral_0^1 theta_k y^(T_k - 1) * survival(x=-log y) dy.

    ``log_survival_bracket(x)`` returns (lo, hi) enclosing the log survival
    product.  The integrand uses the midpoint; the worst node-wise envelope
    gap is added to the quadrature error estimate before the tolerance
    check, so sequences whose tails cannot be bracketed tightly fail loudly
    instead of returning a silently degraded value.
    """
    th = np.asarray(theta_a, dtype=np.float64)
    t_partial = np.cumsum(th)
    prefactor = float(np.prod(th[1:-1] / t_partial[1:-1])) if th.size > 2 else 1.0
    c = float(t_partial[-1])
    th_last = float(th[-1])
    worst_gap = 0.0

    def integrand(y):
        nonlocal worst_gap
        if y <= 0.0 or y >= 1.0:
            return 0.0
        x = -math.log(y)
        lo, hi = log_survival_bracket(x)
        base = (c - 1.0) * math.log(y)
        t_hi = base + hi
        if t_hi <= -745.0 or t_hi == -math.inf:
            return 0.0
        t_mid = base + 0.5 * (lo + hi)
        value = 0.0 if t_mid <= -745.0 else th_last * math.exp(t_mid)
        worst_gap = max(worst_gap, th_last * math.exp(t_hi) - value)
        return value

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, abserr = integrate.quad(integrand, 0.0, 1.0,
                                     epsabs=0.5 * tol, epsrel=min(1e-8, 0.1 * tol),
                                     limit=300, points=points)
    # the y interval has unit length, so max node gap bounds its integral
    if abserr + worst_gap > tol:
        raise ToleranceError(
            f"certified error {abserr + worst_gap:g} exceeds tol {tol:g} "
            f"(quadrature {abserr:g}, survival bracket {worst_gap:g})"
        )
    return prefactor * val


def limit_bottom_pmf(seq, a, tol=1e-8, min_terms=0):
    """Limiting probability that the bottom cards read a_1, ..., a_k.

    a_1 is the very bottom card (last drawn), a_2 the one above it, and so
    on.  In the defective regime the value is still computed but a
    :class:`DefectiveMassWarning` is emitted because the probabilities over
    all prefixes then sum to less than one.
    """
    if tol <= 0:
        raise PreconditionError("tol must be positive")
    a = _check_bottom_labels(a)
    exclude = frozenset(a)
    theta_a = [seq.theta(v) for v in a]
    rel = min(1e-9, max(0.01 * tol, 1e-14))

    def ln_surv(x):
        return _log_survival_bracket(seq, x, exclude, rel, min_terms)

    points = None
    if seq.family in _ANALYTIC_CLASSIFICATION:
        x0 = _ANALYTIC_CLASSIFICATION[seq.family][0](seq.beta)
        if 0.0 < x0 < math.inf:
            points = [math.exp(-x0)]
        report = convergence_test(seq)
        if not report.converges:
            warnings.warn("limit law is defective; probabilities sum to less than one",
                          DefectiveMassWarning, stacklevel=2)
    value = _telescoped_integral(theta_a, ln_surv, tol, points=points)
    return value


def sukhatme_last_card_table(max_label, tol=1e-6):
    """Limiting last-card probabilities for theta_i = i.

    Row ell is P(bottom card = ell) = integral_0^1 ell y^(ell-1)
    prod_{j != ell} (1 - y^j) dy; returns [(label, probability)] for
    labels 1..max_label.
    """
    if max_label < 1:
        raise PreconditionError("max_label must be at least 1")
    seq = linear_weights()
    return [(ell, limit_bottom_pmf(seq, (ell,), tol=tol)) for ell in range(1, max_label + 1)]


def finite_n_bottom_pmf(w, a, tol=1e-10):
    """P(reversed draw order starts a_1, ..., a_k) under finite weights.

    Equivalently the chance the bottom k cards of an n-card deck, built by
    drawing labels 1..n without replacement, read a_1 (bottom) through a_k.
    Uses the same telescoped integral as the limit law, with the finite
    survival product over the labels outside ``a``.
    """
    w = as_weight_vector(w)
    a = _check_bottom_labels(a, n=w.n)
    idx = np.asarray(a) - 1
    theta_a = w.weights[idx]
    others = np.delete(w.weights, idx)
    if others.size == 0:
        t_partial = np.cumsum(theta_a)
        return float(np.prod(theta_a / t_partial))

    def ln_surv(x):
        with np.errstate(divide="ignore"):
            v = float(np.log1p(-np.exp(-x * others)).sum())
        return (v, v)

    return _telescoped_integral(theta_a, ln_surv, tol)


def limit_bottom_pmf_mc(seq, a, size, rng, terms_tol=1e-12):
    """Importance-sampling Monte Carlo estimate of :func:`limit_bottom_pmf`.

    Draws the k exponential clocks of the named labels directly, scores the
    descending-order indicator times the survival product of the remaining
    labels at the smallest clock, and averages.  Returns (estimate, stderr).
    """
    a = _check_bottom_labels(a)
    if size < 1:
        raise PreconditionError("size must be at least 1")
    th = np.array([seq.theta(v) for v in a])
    u = rng.random((size, len(a)))
    x = -np.log(u) / th[None, :]
    ordered = np.all(x[:, :-1] > x[:, 1:], axis=1) if len(a) > 1 else np.ones(size, dtype=bool)
    xk = x[:, -1]

    log_w = np.zeros(size)
    active = ordered.copy()
    exclude = frozenset(a)
    i = 0
    while np.any(active) and i < _TERMS_MAX:
        i += 1
        if i in exclude:
            continue
        th_i = seq.theta(i)
        t = -th_i * xk[active]
        e = np.exp(t)
        log_w[active] += np.log1p(-e)
        still = log_w[active] > LOG_PRODUCT_FLOOR
        live = e > terms_tol
        sub = np.flatnonzero(active)
        active[sub[~(still & live)]] = False
    weight = np.where(ordered & (log_w > LOG_PRODUCT_FLOOR), np.exp(log_w), 0.0)
    weight[~ordered] = 0.0
    est = float(weight.mean())
    stderr = float(weight.std(ddof=1) / math.sqrt(size))
    return est, stderr
