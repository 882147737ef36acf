"""Error metrics, expected-error bounds, and Monte Carlo verification.

The bound helpers evaluate the closed-form expected squared-error bounds of
the two-sided sketch (with and without power iteration) from the
transformed-domain singular values alone; nothing is sketched to evaluate a
bound.  The ``mc_`` helpers estimate the matching expectations empirically
so the bounds can be checked end to end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace as _dc_replace

import numpy as np

from . import tensor_core as tc
from .lowrank import MethodSpec, l_trp_sketch, reconstruct, run_method
from .sketch_ops import SeedStream, make_operator_set

__all__ = [
    "rel_error",
    "psnr",
    "BoundReport",
    "expected_error_bound",
    "expected_error_bound_power",
    "mc_check_error_bound",
    "McRatioReport",
    "mc_pinv_product_ratio",
    "CoreSplitReport",
    "mc_core_error_split",
    "SubspaceErrors",
    "subspace_errors",
    "spectrum",
]


def rel_error(a, ahat):
    """Squared relative error: norm(a - ahat)^2 / norm(a)^2."""
    a = np.asarray(a)
    ahat = np.asarray(ahat)
    if a.shape != ahat.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {ahat.shape}")
    ref = tc.frob_norm(a) ** 2
    if ref == 0.0:
        raise ValueError("reference tensor is zero; relative error undefined")
    return tc.frob_norm(a - ahat) ** 2 / ref


def psnr(a, ahat):
    """Peak signal-to-noise ratio in dB against the max magnitude of ``a``.

    Returns +inf for an exact reconstruction.
    """
    a = np.asarray(a)
    ahat = np.asarray(ahat)
    if a.shape != ahat.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {ahat.shape}")
    err = tc.frob_norm(a - ahat) ** 2
    if err == 0.0:
        return math.inf
    peak = float(np.max(np.abs(a)))
    return 10.0 * math.log10(a.size * peak * peak / err)


@dataclass(frozen=True)
class BoundReport:
    """A closed-form expected-error bound, optionally with its empirical check."""

    k: int
    s: int
    q: int
    rho_grid: np.ndarray
    bounds: np.ndarray
    best_rho: int
    bound: float
    empirical_mean: float | None = None
    stderr: float | None = None
    trials: int = 0
    satisfied: bool | None = None


def _gram_tail_profile(transform, a, power=1):
    """Tail sums of the Gram tensor raised to an odd power.

    Entry j (0-based) is the tail from index j+1 on of the slicewise
    singular values of (a * a^H)^power, aggregated over slices the same way
    tensor singular values aggregate: sum_k sv[k, i]**(2*power) / rho summed
    over i > j.  For power=1 this is exactly the squared tail energy of
    ``a`` itself, the optimal squared error of a rank-j approximation.
    """
    sv = tc.slice_singular_values(transform, a)
    contrib = np.sum(sv ** (2 * power), axis=0) / transform.rho
    return np.concatenate([np.cumsum(contrib[::-1])[::-1], [0.0]])


def _bound_from_tails(k, s, q, tails):
    if k < 3:
        raise ValueError("the bound needs k >= 3 to search the tail index")
    if s < 2 * k + 1:
        raise ValueError(f"the bound needs s >= 2k+1 = {2 * k + 1}, got {s}")
    rho_grid = np.arange(1, k - 1)
    lead = 1.0 + k / (s - k - 1.0)
    bounds = np.array(
        [lead * (1.0 + 2.0 * r / (k - r - 1.0)) * tails[r] for r in rho_grid]
    )
    best = int(np.argmin(bounds))
    return BoundReport(
        k=k, s=s, q=q, rho_grid=rho_grid, bounds=bounds,
        best_rho=int(rho_grid[best]), bound=float(bounds[best]),
    )


def expected_error_bound(transform, a, k, s):
    """Expected squared-error bound for the two-sided sketch.

    For each admissible tail index r the bound is
    ``(1 + k/(s-k-1)) * (1 + 2r/(k-r-1)) * tail_{r+1}(a * a^H)``;
    the report carries the whole grid and its minimizer.
    """
    tails = _gram_tail_profile(transform, a, power=1)
    return _bound_from_tails(k, s, 0, tails)


def expected_error_bound_power(transform, a, k, s, q):
    """Expected-error bound after ``q`` rounds of power iteration.

    Same prefactors as :func:`expected_error_bound`, with the tail taken on
    the (2q+1)-th power of the Gram tensor, evaluated from singular values
    without forming any dense product.
    """
    if q < 0:
        raise ValueError("q must be >= 0")
    tails = _gram_tail_profile(transform, a, power=2 * q + 1)
    return _bound_from_tails(k, s, q, tails)


def mc_check_error_bound(transform, a, spec, trials, seed=0):
    """Estimate the method's mean squared error and compare to its bound.

    Runs ``spec`` with independent per-trial seeds and fills the report with
    the empirical mean, its standard error, and the strict verdict
    ``mean + 3 * stderr <= bound``.
    """
    if trials < 2:
        raise ValueError("need at least 2 trials")
    if spec.resolved_transform() != transform.kind:
        raise ValueError("spec transform does not match the supplied transform")
    report = (
        expected_error_bound_power(transform, a, spec.k, spec.s, spec.q)
        if spec.q > 0
        else expected_error_bound(transform, a, spec.k, spec.s)
    )
    stream = SeedStream(seed)
    errs = np.empty(trials)
    for t in range(trials):
        trial_spec = _dc_replace(spec, seed=stream.label("bound-trial", t))
        ahat = reconstruct(run_method(trial_spec, a))
        errs[t] = tc.frob_norm(a - ahat) ** 2
    mean = float(np.mean(errs))
    se = float(np.std(errs, ddof=1) / math.sqrt(trials))
    return _dc_replace(
        report, empirical_mean=mean, stderr=se, trials=trials,
        satisfied=bool(mean + 3.0 * se <= report.bound),
    )


@dataclass(frozen=True)
class McRatioReport:
    empirical: float
    analytic: float
    stderr: float
    trials: int


def mc_pinv_product_ratio(t_rows, q_cols, l_cols, b, trials, transform, seed=0):
    """Monte Carlo mean of ``norm(pinv(G1) * G2 * b)^2 / norm(b)^2``.

    G1 (t_rows, q_cols, p) and G2 (t_rows, l_cols, p) are first-slice
    standard Gaussian tensors; the products and pseudo-inverse are taken
    slicewise in the transformed domain.  The analytic mean is
    ``q_cols / (t_rows - q_cols - 1)``.
    """
    b = transform._check(np.asarray(b))
    p = transform.size
    if b.shape[0] != l_cols:
        raise ValueError(f"b must have {l_cols} rows, got {b.shape[0]}")
    if t_rows < q_cols + 2:
        raise ValueError("need t_rows >= q_cols + 2 for a finite mean")
    if trials < 2:
        raise ValueError("need at least 2 trials")
    bnorm2 = tc.frob_norm(b) ** 2
    if bnorm2 == 0.0:
        # the product is identically zero whatever the draws
        analytic = q_cols / (t_rows - q_cols - 1.0)
        return McRatioReport(empirical=0.0, analytic=analytic, stderr=0.0,
                             trials=trials)

    stream = SeedStream(seed)
    g1 = np.empty((trials, t_rows, q_cols))
    g2 = np.empty((trials, t_rows, l_cols))
    for t in range(trials):
        rng = stream.substream("pinv-ratio", t)
        g1[t] = rng.standard_normal((t_rows, q_cols))
        g2[t] = rng.standard_normal((t_rows, l_cols))

    # first-slice tensors transform to col0-scaled copies of the slice
    col0 = transform.matrix[:, 0]
    g1bar = g1[:, None, :, :] * col0[None, :, None, None]
    g2bar = g2[:, None, :, :] * col0[None, :, None, None]
    bbar = tc._stack(transform.forward(b))
    prod = np.linalg.pinv(g1bar) @ g2bar @ bbar
    sq = np.sum(np.abs(prod) ** 2, axis=(1, 2, 3)) / transform.rho
    ratios = sq / bnorm2
    return McRatioReport(
        empirical=float(np.mean(ratios)),
        analytic=q_cols / (t_rows - q_cols - 1.0),
        stderr=float(np.std(ratios, ddof=1) / math.sqrt(trials)),
        trials=trials,
    )


@dataclass(frozen=True)
class SubspaceErrors:
    """Squared-error pieces of one factored approximation."""

    total_sq: float       # norm(a - left core right^H)^2
    proj_sq: float        # norm(a - Q Q^H a P P^H)^2
    core_sq: float        # norm(core - Q^H a P)^2
    corner_sq: float      # norm(Qperp^H a Pperp)^2
    left_proj_sq: float   # norm(a - Q Q^H a)^2
    right_proj_sq: float  # norm(a - a P P^H)^2


def subspace_errors(transform, a, fa):
    """Decompose the error of a factored approximation around its bases."""
    a = transform._check(a)
    ab = tc._stack(transform.forward(a))
    qb = tc._stack(fa.left)
    pb = tc._stack(fa.right)
    cb = tc._stack(fa.core)
    rho = transform.rho

    def sq(stack):
        return float(np.sum(np.abs(stack) ** 2) / rho)

    qh_a = tc._hstack(qb) @ ab
    core_true = qh_a @ pb
    qfull = np.linalg.qr(qb, mode="complete")[0]
    pfull = np.linalg.qr(pb, mode="complete")[0]
    k_left = qb.shape[-1]
    k_right = pb.shape[-1]
    qperp = qfull[:, :, k_left:]
    pperp = pfull[:, :, k_right:]
    return SubspaceErrors(
        total_sq=sq(ab - qb @ cb @ tc._hstack(pb)),
        proj_sq=sq(ab - qb @ core_true @ tc._hstack(pb)),
        core_sq=sq(cb - core_true),
        corner_sq=sq(tc._hstack(qperp) @ ab @ pperp),
        left_proj_sq=sq(ab - qb @ qh_a),
        right_proj_sq=sq(ab - ab @ pb @ tc._hstack(pb)),
    )


@dataclass(frozen=True)
class CoreSplitReport:
    """Per-trial error split plus the mean core-error identity check."""

    trials: int
    max_split_residual: float   # worst |total - proj - core| / total
    mean_core: float
    mean_rhs: float
    stderr: float               # standard error of (core - rhs)
    satisfied: bool


def mc_core_error_split(transform, a, k, s, trials, seed=0, operator="gaussian"):
    """Check the exact error split and the mean core-error formula.

    Per trial the total squared error must equal projection error plus core
    error (an algebraic identity of the orthonormal factors).  Across trials
    the mean core error is compared against
    ``k/(s-k-1) * proj + k(2k+1-s)/(s-k-1)^2 * corner`` per trial, with a
    three-standard-error verdict on the difference.
    """
    a = transform._check(a)
    m, n, p = a.shape
    if s < k + 2:
        raise ValueError("need s >= k + 2 for a finite core-error mean")
    if trials < 2:
        raise ValueError("need at least 2 trials")
    stream = SeedStream(seed)
    c1 = k / (s - k - 1.0)
    c2 = k * (2 * k + 1.0 - s) / (s - k - 1.0) ** 2
    core_terms = np.empty(trials)
    rhs_terms = np.empty(trials)
    worst = 0.0
    for t in range(trials):
        rng = stream.substream("core-split", t)
        ops = make_operator_set(operator, "pure", m, n, p, k, s, rng)
        fa = l_trp_sketch(transform, a, k, s, ops)
        errs = subspace_errors(transform, a, fa)
        core_terms[t] = errs.core_sq
        rhs_terms[t] = c1 * errs.proj_sq + c2 * errs.corner_sq
        if errs.total_sq > 0.0:
            split = abs(errs.total_sq - errs.proj_sq - errs.core_sq)
            worst = max(worst, split / errs.total_sq)
    diff = core_terms - rhs_terms
    se = float(np.std(diff, ddof=1) / math.sqrt(trials))
    mean_diff = float(np.mean(diff))
    return CoreSplitReport(
        trials=trials,
        max_split_residual=worst,
        mean_core=float(np.mean(core_terms)),
        mean_rhs=float(np.mean(rhs_terms)),
        stderr=se,
        satisfied=bool(abs(mean_diff) <= 3.0 * se),
    )


def spectrum(transform, a, q_list):
    """Normalized tensor singular values of the power-iterated operator.

    For each q in ``q_list`` returns the spectrum of ``(a a^H)^q a``
    normalized by its largest value, evaluated directly from singular
    values (slices of the power tensor have singular values sv**(2q+1)).
    Returns a dict mapping q to a length-min(m, n) array.
    """
    q_list = list(q_list)
    if not q_list:
        raise ValueError("q_list must not be empty")
    if any(q < 0 for q in q_list):
        raise ValueError("power counts must be >= 0")
    sv = tc.slice_singular_values(transform, a)
    out = {}
    for q in q_list:
        sigma = np.sqrt(np.sum(sv ** (2 * (2 * q + 1)), axis=0) / transform.rho)
        top = sigma[0] if sigma.size else 0.0
        if top == 0.0:
            raise ValueError("zero tensor has no normalizable spectrum")
        out[int(q)] = sigma / top
    return out
