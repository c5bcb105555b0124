"""Exact per-instance execution of the stopping algorithms and the Monte
Carlo harness estimating their consistency and robustness.

The core acceptance rule: a value is accepted when it is best-so-far (at
least as large as everything seen before) and its cdf under the predicted
prior strictly exceeds the threshold level at its arrival time, where a
level of 0 accepts every best-so-far value outright.  The zero-phase
carve-out matters only when the predicted support lies above the realized
values, pinning the cdf to exactly 0; full-support priors never tie the
threshold.

The scan over a batch of trials is the hot loop; it runs through the
compiled kernel when available and through the vectorized numpy fallback
otherwise.  Both consume identical pre-generated batches, so a given seed
yields identical reports on either backend.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .priors import power_root_cdf

if os.environ.get("STOPPRED_PURE_PYTHON"):
    from . import _kernels_py as _kernels

    KERNEL_BACKEND = "python"
else:
    try:
        from . import _kernels

        KERNEL_BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as _kernels

        KERNEL_BACKEND = "python"

scan_first_accept = _kernels.scan_first_accept

_BATCH = 4096  # fixed so that a seed pins the whole random stream

__all__ = [
    "Instance",
    "SimReport",
    "KERNEL_BACKEND",
    "run_bicriteria",
    "run_sharding",
    "attach_uniform_times",
    "simulate",
    "accepted_value_samples",
    "simulate_coupled_sharding",
    "googol_win_mc",
]


@dataclass(frozen=True)
class Instance:
    """Realized values in arrival order, with optional arrival times."""

    values: np.ndarray
    arrival_times: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or len(values) == 0:
            raise ValueError("values must be a non-empty 1-d array")
        if np.any(values < 0.0):
            raise ValueError("values must be non-negative")
        if self.arrival_times is not None:
            times = np.asarray(self.arrival_times, dtype=float)
            object.__setattr__(self, "arrival_times", times)
            if times.shape != values.shape:
                raise ValueError("values and arrival_times must have equal length")
            if len(np.unique(times)) != len(times):
                raise ValueError("arrival times must be pairwise distinct")
            if np.any(times < 0.0) or np.any(times > 1.0):
                raise ValueError("arrival times must lie in [0, 1]")


def attach_uniform_times(values, rng):
    """Discrete-time adapter: sorted uniform draws become the arrival times."""
    values = np.asarray(values, dtype=float)
    times = np.sort(rng.random(len(values)))
    return Instance(values, times)


def run_bicriteria(inst, predicted, theta):
    """Index of the accepted value, or None.

    Scans in time order and takes the first value that is best-so-far with
    predicted cdf strictly above the threshold at its arrival time (a zero
    threshold accepts any best-so-far value).
    """
    if inst.arrival_times is None:
        raise ValueError("instance needs arrival times; see attach_uniform_times")
    order = np.argsort(inst.arrival_times)
    prefix_max = 0.0
    for i in order:
        x = inst.values[i]
        if x >= prefix_max:
            level = theta.eval(inst.arrival_times[i])
            if predicted.cdf(x) > level or level == 0.0:
                return int(i)
            prefix_max = x
    return None


def run_sharding(values, k, predicted, theta, rng):
    """One pass of the implicit-sharding algorithm over values in arrival order.

    Draws n*k sorted uniform arrival times, picks one uniformly from the i-th
    block of k as the virtual time of value i, and accepts the first
    best-so-far value whose cdf under the k-th root of the predicted prior
    exceeds the threshold at its virtual time.
    """
    values = np.asarray(values, dtype=float)
    k = int(k)
    if k < 1:
        raise ValueError("need k >= 1")
    n = len(values)
    shard_prior = power_root_cdf(predicted, k)
    t_sorted = np.sort(rng.random(n * k))
    s = t_sorted[np.arange(n) * k + rng.integers(0, k, size=n)]
    prefix_max = 0.0
    for i in range(n):
        x = values[i]
        if x >= prefix_max:
            level = theta.eval(s[i])
            if shard_prior.cdf(x) > level or level == 0.0:
                return int(i)
            prefix_max = x
    return None


@dataclass(frozen=True)
class SimReport:
    """Monte Carlo estimates with standard errors."""

    trials: int
    maxprob: float
    maxprob_se: float
    maxexp_ratio: float
    maxexp_se: float
    acceptance_rate: float

    def __str__(self):
        return (
            f"trials={self.trials} maxprob={self.maxprob:.6f}+-{self.maxprob_se:.6f} "
            f"maxexp_ratio={self.maxexp_ratio:.6f}+-{self.maxexp_se:.6f} "
            f"acceptance_rate={self.acceptance_rate:.6f}"
        )


def _batches(total):
    done = 0
    while done < total:
        b = min(_BATCH, total - done)
        yield b
        done += b


def _scan_batch(rng, b, n, real, predicted, theta):
    vals = real.quantile(rng.random((b, n)))
    times = rng.random((b, n))
    order = np.argsort(times, axis=1)
    tv = np.take_along_axis(times, order, axis=1)
    xv = np.take_along_axis(vals, order, axis=1)
    q = np.ascontiguousarray(predicted.cdf(xv))
    th = np.ascontiguousarray(theta.eval(tv))
    pos, acc = scan_first_accept(np.ascontiguousarray(xv), q, th)
    return pos, acc, xv.max(axis=1)


def accepted_value_samples(real, predicted, theta, n, trials, seed):
    """Per-trial (accepted value, maximum value); 0 marks no acceptance."""
    if trials < 1:
        raise ValueError("need trials >= 1")
    if real.quantile(0.0) < 0.0:
        raise ValueError("real prior must be supported on [0, inf)")
    rng = np.random.default_rng(seed)
    accepted = np.empty(trials)
    maxima = np.empty(trials)
    done = 0
    for b in _batches(trials):
        _, acc, mx = _scan_batch(rng, b, n, real, predicted, theta)
        accepted[done : done + b] = acc
        maxima[done : done + b] = mx
        done += b
    return accepted, maxima


def simulate(real, predicted, theta, n, trials, seed):
    """Estimate the win probability and the expectation ratio jointly.

    Instances are i.i.d. draws from the real prior with uniform arrival
    times; the threshold consults the (possibly different) predicted prior.
    Deterministic for a fixed seed.
    """
    if trials < 1:
        raise ValueError("need trials >= 1")
    if real.quantile(0.0) < 0.0:
        raise ValueError("real prior must be supported on [0, inf)")
    rng = np.random.default_rng(seed)
    wins = 0
    accepts = 0
    s_a = s_aa = s_m = s_mm = s_am = 0.0
    for b in _batches(trials):
        pos, acc, mx = _scan_batch(rng, b, n, real, predicted, theta)
        wins += int(np.count_nonzero((pos >= 0) & (acc == mx)))
        accepts += int(np.count_nonzero(pos >= 0))
        s_a += acc.sum()
        s_aa += (acc * acc).sum()
        s_m += mx.sum()
        s_mm += (mx * mx).sum()
        s_am += (acc * mx).sum()
    t = float(trials)
    p = wins / t
    p_se = math.sqrt(p * (1.0 - p) / t)
    mean_a, mean_m = s_a / t, s_m / t
    ratio = mean_a / mean_m
    var_a = max(s_aa / t - mean_a**2, 0.0)
    var_m = max(s_mm / t - mean_m**2, 0.0)
    cov = s_am / t - mean_a * mean_m
    # delta method for the ratio of means
    var_ratio = max(var_a - 2.0 * ratio * cov + ratio**2 * var_m, 0.0) / mean_m**2
    ratio_se = math.sqrt(var_ratio / t)
    return SimReport(
        trials=trials,
        maxprob=p,
        maxprob_se=p_se,
        maxexp_ratio=ratio,
        maxexp_se=ratio_se,
        acceptance_rate=accepts / t,
    )


def googol_win_mc(values, predicted, theta, trials, seed):
    """Fixed values, random arrival order: Monte Carlo win probability.

    Returns (estimate, standard error) of the probability that the scan
    accepts the maximum value.
    """
    values = np.asarray(values, dtype=float)
    if len(np.unique(values)) != len(values):
        raise ValueError("values must be distinct")
    n = len(values)
    q = np.asarray(predicted.cdf(values), dtype=float)
    vmax = values.max()
    rng = np.random.default_rng(seed)
    wins = 0
    for b in _batches(trials):
        times = rng.random((b, n))
        order = np.argsort(times, axis=1)
        tv = np.take_along_axis(times, order, axis=1)
        xv = np.ascontiguousarray(values[order])
        qv = np.ascontiguousarray(q[order])
        th = np.ascontiguousarray(theta.eval(tv))
        pos, acc = scan_first_accept(xv, qv, th)
        wins += int(np.count_nonzero((pos >= 0) & (acc == vmax)))
    p = wins / trials
    return p, math.sqrt(p * (1.0 - p) / trials)


def simulate_coupled_sharding(real, predicted, theta, n, k, trials, seed):
    """Count couplings where sharding accepts strictly less than the base run.

    Each trial draws n*k shard values from the k-th-root prior with sorted
    arrival times, forms the n-value instance (block maxima, with the block
    argmax times as virtual times), and runs both the sharding pass on the
    n values and the plain scan on the full n*k shard instance.  The shared
    realization makes the sharding value dominate; the return value counts
    violations of that dominance (expected 0).
    """
    k = int(k)
    if k < 1:
        raise ValueError("need k >= 1")
    rng = np.random.default_rng(seed)
    shard_real = power_root_cdf(real, k)
    shard_pred = power_root_cdf(predicted, k)
    violations = 0
    for _ in range(trials):
        shard_vals = np.asarray(shard_real.quantile(rng.random(n * k)))
        t_sorted = np.sort(rng.random(n * k))
        blocks = shard_vals.reshape(n, k)
        arg = blocks.argmax(axis=1)
        x = blocks[np.arange(n), arg]
        s = t_sorted.reshape(n, k)[np.arange(n), arg]

        # sharding pass on the coupled n-instance
        accepted_sharding = 0.0
        prefix = 0.0
        for i in range(n):
            if x[i] >= prefix:
                level = theta.eval(s[i])
                if shard_pred.cdf(x[i]) > level or level == 0.0:
                    accepted_sharding = x[i]
                    break
                prefix = x[i]

        # base scan on the n*k shard instance (values are in time order)
        accepted_base = 0.0
        prefix = 0.0
        for j in range(n * k):
            v = shard_vals[j]
            if v >= prefix:
                level = theta.eval(t_sorted[j])
                if shard_pred.cdf(v) > level or level == 0.0:
                    accepted_base = v
                    break
                prefix = v

        if accepted_sharding < accepted_base:
            violations += 1
    return violations
