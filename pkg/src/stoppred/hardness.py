"""Factor-revealing linear program bounding the win-probability trade-off.

A stopping rule facing a discrete predicted prior over {1..K} and the family
of its truncations to {1..k} can be summarized, without loss, by a
"minor-oblivious" table: the probability of accepting at step t given that
the current value equals the running maximum level l.  Equivalently, by the
rejection table

    Rej_t(l) = P[no acceptance through step t | max of first t values = l].

With Delta^t(l) := F(l)^t - F(l-1)^t (Delta^0(l) := 1{l=1}, 0^0 = 0), the
win probability under the truncation to {1..k} is a fixed linear expression
in the rejection table, and the feasible tables form a polytope.  Maximizing
lambda * alpha + (1 - lambda) * beta over that polytope therefore upper
bounds every achievable (consistency, robustness) pair; sweeping lambda
traces the hardness frontier.

The model is assembled sparsely with auxiliary variables, each scaled by
the power of F that bounds it:

    p_{t,l} = sum_{m <= l} Delta^t(m) y_{t,m} / F(l)^t      (prefix sums)
    v_l     = the level-l win contribution / F(l)^n
    b_l     = win probability under the truncation to {1..l}

so row lengths stay O(1) or O(n), every coefficient lies in [0, 1] (the
unscaled rows carry factors down to F(1)^n, which sink below solver
tolerances at full scale), and the robustness rows read beta <= b_l.
Solving goes through scipy's HiGHS; export_lp writes the model in the
standard LP text format for external solvers.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .priors import DiscretePrior

__all__ = [
    "harmonic_prior",
    "PolytopeModel",
    "build_polytope",
    "LpSolution",
    "solve_lp",
    "export_lp",
    "parse_lp",
    "FrontierPoint",
    "frontier_sweep",
    "delta_table",
    "win_prob_by_truncation",
    "acc_to_rej",
    "rej_to_acc",
    "rule_solution_vector",
    "brute_force_win_prob",
    "random_rule",
]


def harmonic_prior(K):
    """Discrete prior with pmf proportional to 1/k on {1..K}."""
    if int(K) != K or K < 1:
        raise ValueError("need integer K >= 1")
    w = 1.0 / np.arange(1, K + 1)
    return DiscretePrior(w / w.sum())


def _pmf_array(pmf):
    if isinstance(pmf, DiscretePrior):
        return pmf.pmf
    arr = np.asarray(pmf, dtype=float)
    DiscretePrior(arr)  # reuse the validation
    return arr


def delta_table(pmf, n):
    """Delta^t(l) for t = 0..n as an (n+1, K) array.

    Delta^t(l) = F(l)^t - F(l-1)^t, computed as F(l)^t * (-expm1(t * log(
    F(l-1)/F(l)))) to avoid the subtractive cancellation at large l.
    """
    pmf = _pmf_array(pmf)
    K = len(pmf)
    F = np.cumsum(pmf)
    F[-1] = 1.0
    Fm1 = np.concatenate(([0.0], F[:-1]))
    delta = np.zeros((n + 1, K))
    delta[0, 0] = 1.0
    with np.errstate(divide="ignore"):
        logratio = np.where(Fm1 > 0.0, np.log(np.maximum(Fm1, 1e-300) / F), -np.inf)
    for t in range(1, n + 1):
        delta[t] = F**t * -np.expm1(t * logratio)
    return delta


@dataclass(frozen=True)
class PolytopeModel:
    """Assembled LP: maximize lam * alpha + (1 - lam) * beta over the polytope."""

    n: int
    K: int
    pmf: np.ndarray
    lam: float
    c: np.ndarray
    a_ub: sparse.csr_matrix
    b_ub: np.ndarray
    a_eq: sparse.csr_matrix
    b_eq: np.ndarray
    bounds: list
    col_names: list
    row_names_ub: list
    row_names_eq: list

    @property
    def num_vars(self):
        return len(self.c)

    def with_lambda(self, lam):
        lam = float(lam)
        if not 0.0 <= lam <= 1.0:
            raise ValueError("lambda weight must lie in [0, 1]")
        c = np.zeros_like(self.c)
        c[-2] = -lam
        c[-1] = -(1.0 - lam)
        return replace(self, lam=lam, c=c)


def build_polytope(n, K, pmf, lambda_weight=0.5):
    """Assemble the polytope for n steps over support {1..K}.

    Columns: the rejection table y_{t,l} (t in [n]) in [0,1], the scaled
    prefix sums p_{t,l} = sum_{m<=l} Delta^t(m) y_{t,m} / F(l)^t in [0,1]
    (t in [n-1]), the scaled per-level win contributions v_l, the cumulative
    win probabilities b_l under the truncation to {1..l} (so the robustness
    rows read beta <= b_l), then alpha and beta.  The t = 0 table is fixed
    at 1 and folded into the right-hand sides.

    The scaling by powers of F keeps every coefficient inside [0, 1]; the
    unscaled rows carry factors down to F(1)^n, which underflow the
    solver's feasibility tolerance at full scale and silently void the
    robustness rows.
    """
    n = int(n)
    K = int(K)
    if n < 1 or K < 1:
        raise ValueError("need n >= 1 and K >= 1")
    pmf = _pmf_array(pmf)
    if len(pmf) != K:
        raise ValueError("pmf length must equal K")
    if np.any(pmf <= 0.0):
        raise ValueError("the truncation family needs strictly positive pmf entries")
    lam = float(lambda_weight)
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda weight must lie in [0, 1]")
    F = np.cumsum(pmf)
    F[-1] = 1.0
    Fm1 = np.concatenate(([0.0], F[:-1]))
    ratio = Fm1 / F  # F(l-1)/F(l), zero at l = 1
    # D[t, l] = Delta^t(l) / F(l)^t = 1 - ratio^t, with D[0, l] = 1{l = 1}
    D = np.zeros((n + 1, K))
    D[0, 0] = 1.0
    with np.errstate(divide="ignore"):
        logratio = np.where(ratio > 0.0, np.log(np.maximum(ratio, 1e-300)), -np.inf)
    for t in range(1, n + 1):
        D[t] = -np.expm1(t * logratio)
    hazard = pmf / F  # f(l)/F(l) = D[1, l]

    def iy(t, l):  # t in 1..n, l in 1..K
        return (t - 1) * K + (l - 1)

    def ip(t, l):  # t in 1..n-1
        return n * K + (t - 1) * K + (l - 1)

    def iv(l):
        return (2 * n - 1) * K + (l - 1)

    def ib(l):
        return 2 * n * K + (l - 1)

    ialpha = (2 * n + 1) * K
    ibeta = ialpha + 1
    nvars = ibeta + 1

    col_names = (
        [f"y_{t}_{l}" for t in range(1, n + 1) for l in range(1, K + 1)]
        + [f"p_{t}_{l}" for t in range(1, n) for l in range(1, K + 1)]
        + [f"v_{l}" for l in range(1, K + 1)]
        + [f"b_{l}" for l in range(1, K + 1)]
        + ["alpha", "beta"]
    )

    eq_rows, eq_cols, eq_vals, b_eq, row_names_eq = [], [], [], [], []
    ub_rows, ub_cols, ub_vals, b_ub, row_names_ub = [], [], [], [], []

    def eq_add(row, cols, vals, rhs, name):
        eq_rows.extend([row] * len(cols))
        eq_cols.extend(cols)
        eq_vals.extend(vals)
        b_eq.append(rhs)
        row_names_eq.append(name)

    def ub_add(row, cols, vals, rhs, name):
        ub_rows.extend([row] * len(cols))
        ub_cols.extend(cols)
        ub_vals.extend(vals)
        b_ub.append(rhs)
        row_names_ub.append(name)

    r = 0
    for t in range(1, n):
        for l in range(1, K + 1):
            # p_{t,l} = ratio_l^t p_{t,l-1} + D[t,l] y_{t,l}
            cols = [ip(t, l), iy(t, l)]
            vals = [1.0, -D[t, l - 1]]
            if l > 1:
                cols.append(ip(t, l - 1))
                vals.append(-(ratio[l - 1] ** t))
            eq_add(r, cols, vals, 0.0, f"pdef_{t}_{l}")
            r += 1
    for l in range(1, K + 1):
        # v_l = sum_t [hazard_l p_{t-1,l} + D[t-1,l] ratio_l y_{t-1,l} - D[t,l] y_{t,l}]
        cols, vals = [iv(l)], [1.0]
        for tau in range(1, n + 1):
            coef = D[tau, l - 1]
            if tau <= n - 1:
                coef -= D[tau, l - 1] * ratio[l - 1]
                cols.append(ip(tau, l))
                vals.append(-hazard[l - 1])
            cols.append(iy(tau, l))
            vals.append(coef)
        rhs = hazard[l - 1]  # t = 1 terms with p_{0,l} = 1
        eq_add(r, cols, vals, rhs, f"vdef_{l}")
        r += 1
    for l in range(1, K + 1):
        # b_l = ratio_l^n b_{l-1} + v_l
        cols, vals = [ib(l), iv(l)], [1.0, -1.0]
        if l > 1:
            cols.append(ib(l - 1))
            vals.append(-(ratio[l - 1] ** n))
        eq_add(r, cols, vals, 0.0, f"bdef_{l}")
        r += 1

    r = 0
    for t in range(1, n + 1):
        for l in range(1, K + 1):
            cols = [iy(t, l)]
            vals = [-D[t, l - 1]]
            if t > 1:
                cols.append(iy(t - 1, l))
                vals.append(D[t - 1, l - 1] * ratio[l - 1])
            ub_add(r, cols, vals, 0.0, f"slo_{t}_{l}")
            r += 1
    for t in range(1, n + 1):
        for l in range(1, K + 1):
            cols = [iy(t, l)]
            vals = [D[t, l - 1]]
            rhs = 0.0
            if t > 1:
                cols.extend([iy(t - 1, l), ip(t - 1, l)])
                vals.extend([-D[t - 1, l - 1] * ratio[l - 1], -hazard[l - 1]])
            else:
                rhs = hazard[l - 1]  # p_{0,l} = 1
            ub_add(r, cols, vals, rhs, f"sup_{t}_{l}")
            r += 1
    ub_add(r, [ialpha, ib(K)], [1.0, -1.0], 0.0, "cons")
    r += 1
    for k in range(1, K + 1):
        ub_add(r, [ibeta, ib(k)], [1.0, -1.0], 0.0, f"rob_{k}")
        r += 1

    c = np.zeros(nvars)
    c[ialpha] = -lam
    c[ibeta] = -(1.0 - lam)
    bounds = (
        [(0.0, 1.0)] * (n * K)
        + [(0.0, 1.0)] * ((n - 1) * K)
        + [(None, None)] * (2 * K)
        + [(None, None), (None, None)]
    )
    a_eq = sparse.coo_matrix((eq_vals, (eq_rows, eq_cols)), shape=(len(b_eq), nvars)).tocsr()
    a_ub = sparse.coo_matrix((ub_vals, (ub_rows, ub_cols)), shape=(len(b_ub), nvars)).tocsr()
    return PolytopeModel(
        n=n,
        K=K,
        pmf=pmf,
        lam=lam,
        c=c,
        a_ub=a_ub,
        b_ub=np.asarray(b_ub),
        a_eq=a_eq,
        b_eq=np.asarray(b_eq),
        bounds=bounds,
        col_names=col_names,
        row_names_ub=row_names_ub,
        row_names_eq=row_names_eq,
    )


@dataclass(frozen=True)
class LpSolution:
    lam: float
    objective: float
    alpha: float
    beta: float
    y: np.ndarray


class LpError(RuntimeError):
    pass


def solve_lp(model, feasibility_tol=1e-7):
    """Solve the assembled LP and read back the envelope point.

    alpha and beta are recomputed from the optimal rejection table (they are
    the win-probability expressions at y*), which pins them even when their
    objective weight is 0.
    """
    res = linprog(
        model.c,
        A_ub=model.a_ub,
        b_ub=model.b_ub,
        A_eq=model.a_eq,
        b_eq=model.b_eq,
        bounds=model.bounds,
        method="highs",
    )
    if res.status == 3:
        raise LpError("LP reported unbounded; alpha and beta are bounded by 1, so the model is broken")
    if res.status == 2:
        raise LpError("LP reported infeasible; the reject-all table is always feasible, so the model is broken")
    if not res.success:
        raise LpError(f"LP solve failed: {res.message}")
    x = res.x
    resid_ub = float(np.max(model.a_ub @ x - model.b_ub, initial=0.0))
    resid_eq = float(np.max(np.abs(model.a_eq @ x - model.b_eq), initial=0.0))
    if max(resid_ub, resid_eq) > feasibility_tol:
        raise LpError(f"solution violates constraints by {max(resid_ub, resid_eq):.3e}")
    y = x[: model.n * model.K].reshape(model.n, model.K)
    exprs = win_prob_by_truncation(y, model.pmf)
    alpha = float(exprs[-1])
    beta = float(exprs.min())
    objective = float(-res.fun)
    if abs(model.lam * alpha + (1.0 - model.lam) * beta - objective) > 1e-6:
        raise LpError("recomputed envelope point disagrees with the LP objective")
    return LpSolution(lam=model.lam, objective=objective, alpha=alpha, beta=beta, y=y)


@dataclass(frozen=True)
class FrontierPoint:
    lam: float
    lp_star: float
    alpha_star: float
    beta_star: float
    error: str | None = None


def frontier_sweep(n, K, pmf, lambdas):
    """Solve the LP across a lambda grid; per-point failures become gaps."""
    base = build_polytope(n, K, pmf, 0.5)
    points = []
    for lam in lambdas:
        try:
            sol = solve_lp(base.with_lambda(float(lam)))
        except LpError as exc:
            points.append(FrontierPoint(float(lam), math.nan, math.nan, math.nan, str(exc)))
        else:
            points.append(FrontierPoint(sol.lam, sol.objective, sol.alpha, sol.beta))
    return points


# ---------------------------------------------------------------------------
# Rule representations and oracles


def random_rule(n, K, rng):
    """Acceptance table with i.i.d. uniform entries."""
    return rng.random((n, K))


def _rej_products(prev_rej, delta_prev):
    return np.cumsum(delta_prev * prev_rej)


def acc_to_rej(acc, pmf):
    """Forward induction from acceptance to rejection probabilities.

    Where the conditioning event has zero probability (delta^t(l) = 0) the
    entry is vacuous and set to 1; where the best-so-far arrival mass is
    zero the acceptance entry is irrelevant and drops out on its own.
    """
    acc = np.asarray(acc, dtype=float)
    if np.any(acc < 0.0) or np.any(acc > 1.0):
        raise ValueError("acceptance entries must lie in [0, 1]")
    n, K = acc.shape
    pmf = _pmf_array(pmf)
    F = np.cumsum(pmf)
    F[-1] = 1.0
    Fm1 = np.concatenate(([0.0], F[:-1]))
    delta = delta_table(pmf, n)
    rej = np.empty_like(acc)
    prev = np.ones(K)
    for t in range(1, n + 1):
        arrivals = pmf * _rej_products(prev, delta[t - 1])
        num = prev * delta[t - 1] * Fm1 + (1.0 - acc[t - 1]) * arrivals
        with np.errstate(invalid="ignore", divide="ignore"):
            row = np.where(delta[t] > 0.0, num / np.where(delta[t] > 0.0, delta[t], 1.0), 1.0)
        rej[t - 1] = np.clip(row, 0.0, 1.0)
        prev = rej[t - 1]
    return rej


def rej_to_acc(rej, pmf):
    """Inverse of acc_to_rej; entries with zero arrival mass map to 0."""
    rej = np.asarray(rej, dtype=float)
    n, K = rej.shape
    pmf = _pmf_array(pmf)
    F = np.cumsum(pmf)
    F[-1] = 1.0
    Fm1 = np.concatenate(([0.0], F[:-1]))
    delta = delta_table(pmf, n)
    acc = np.empty_like(rej)
    prev = np.ones(K)
    for t in range(1, n + 1):
        den = pmf * _rej_products(prev, delta[t - 1])
        num = rej[t - 1] * delta[t] - prev * delta[t - 1] * Fm1
        with np.errstate(invalid="ignore", divide="ignore"):
            acc[t - 1] = np.where(den > 0.0, 1.0 - num / np.where(den > 0.0, den, 1.0), 0.0)
        prev = rej[t - 1]
    return acc


def win_prob_by_truncation(rej, pmf):
    """Win probability of a rejection table under each truncated prior.

    Entry k - 1 is the linear expression behind the k-th robustness row
    (k = K gives the consistency row), evaluated at the table.
    """
    rej = np.asarray(rej, dtype=float)
    n, K = rej.shape
    pmf = _pmf_array(pmf)
    F = np.cumsum(pmf)
    F[-1] = 1.0
    Fm1 = np.concatenate(([0.0], F[:-1]))
    delta = delta_table(pmf, n)
    rej_ext = np.vstack([np.ones(K), rej])
    V = np.zeros(K)
    for t in range(1, n + 1):
        arrivals = pmf * np.cumsum(delta[t - 1] * rej_ext[t - 1])
        w = arrivals + delta[t - 1] * Fm1 * rej_ext[t - 1] - delta[t] * rej_ext[t]
        V += F ** (n - t) * w
    with np.errstate(divide="ignore"):
        return np.cumsum(V) / F**n


def rule_solution_vector(model, rej):
    """Full variable vector (y, scaled prefixes, wins, cumulatives, alpha,
    beta) induced by a rejection table; feasible whenever the table comes
    from a genuine rule."""
    rej = np.asarray(rej, dtype=float)
    n, K = model.n, model.K
    if rej.shape != (n, K):
        raise ValueError("rejection table shape does not match the model")
    pmf = model.pmf
    F = np.cumsum(pmf)
    F[-1] = 1.0
    delta = delta_table(pmf, n)
    x = np.zeros(model.num_vars)
    x[: n * K] = rej.ravel()
    for t in range(1, n):
        x[n * K + (t - 1) * K : n * K + t * K] = np.cumsum(delta[t] * rej[t - 1]) / F**t
    exprs = win_prob_by_truncation(rej, pmf)
    # v_l is the l-th increment of the scaled cumulative win probabilities
    b = exprs
    v = b - np.concatenate(([0.0], b[:-1])) * np.concatenate(([0.0], (F[:-1] / F[1:]) ** n))
    x[(2 * n - 1) * K : 2 * n * K] = v
    x[2 * n * K : (2 * n + 1) * K] = b
    x[-2] = exprs[-1]
    x[-1] = exprs.min()
    return x


def brute_force_win_prob(acc, pmf, k):
    """Exhaustive win probability under the truncation to {1..k}.

    Enumerates all k**n sequences; a sequence wins at step t when the rule
    fires there, the value is best-so-far, and it ties the overall maximum
    (all-ties-win convention).  Budgeted at 1e6 sequences.
    """
    acc = np.asarray(acc, dtype=float)
    n, K = acc.shape
    k = int(k)
    if k < 1 or k > K:
        raise ValueError("truncation level outside the support")
    if k**n > 1_000_000:
        raise ValueError("enumeration budget exceeded (k**n > 1e6)")
    pmf = _pmf_array(pmf)
    fk = pmf[:k] / pmf[:k].sum()
    seqs = np.indices((k,) * n).reshape(n, -1).T + 1  # (k**n, n)
    probs = fk[seqs - 1].prod(axis=1)
    prefmax = np.maximum.accumulate(seqs, axis=1)
    best = seqs == prefmax
    fire = np.where(best, acc[np.arange(n)[None, :], seqs - 1], 0.0)
    surv = np.cumprod(1.0 - fire, axis=1)
    surv = np.concatenate([np.ones((len(seqs), 1)), surv[:, :-1]], axis=1)
    is_max = seqs == seqs.max(axis=1, keepdims=True)
    return float(np.sum(probs * np.sum(surv * fire * is_max, axis=1)))


# ---------------------------------------------------------------------------
# LP text format


def _fmt(x):
    return f"{x:.17g}"


def _terms_to_str(pairs):
    parts = []
    for name, coef in pairs:
        if coef == 0.0:
            continue
        sign = "-" if coef < 0.0 else "+"
        if not parts and sign == "+":
            parts.append(f"{_fmt(coef)} {name}")
        else:
            parts.append(f"{sign} {_fmt(abs(coef))} {name}")
    return " ".join(parts) if parts else "0 " + pairs[0][0]


def export_lp(model):
    """Serialize the model in the standard LP text format."""
    lines = ["Maximize", f" obj: {_terms_to_str([('alpha', model.lam), ('beta', 1.0 - model.lam)])}"]
    lines.append("Subject To")
    a_eq = model.a_eq.tocoo()
    a_ub = model.a_ub.tocoo()

    def rows_of(coo, nrows):
        rows = [[] for _ in range(nrows)]
        order = np.lexsort((coo.col, coo.row))
        for i in order:
            rows[coo.row[i]].append((model.col_names[coo.col[i]], float(coo.data[i])))
        return rows

    for name, terms, rhs in zip(model.row_names_ub, rows_of(a_ub, len(model.b_ub)), model.b_ub):
        lines.append(f" {name}: {_terms_to_str(terms)} <= {_fmt(rhs)}")
    for name, terms, rhs in zip(model.row_names_eq, rows_of(a_eq, len(model.b_eq)), model.b_eq):
        lines.append(f" {name}: {_terms_to_str(terms)} = {_fmt(rhs)}")
    lines.append("Bounds")
    for name, (lo, hi) in zip(model.col_names, model.bounds):
        if lo is None and hi is None:
            lines.append(f" {name} free")
        elif hi is None:
            lines.append(f" {name} >= {_fmt(lo)}")
        else:
            lines.append(f" {_fmt(lo)} <= {name} <= {_fmt(hi)}")
    lines.append("End")
    return "\n".join(lines) + "\n"


_TERM_RE = re.compile(r"([+-])?\s*(\d[\d.eE+-]*)?\s*([A-Za-z]\w*)")


def _parse_terms(expr):
    terms = {}
    for sign, coef, name in _TERM_RE.findall(expr):
        value = float(coef) if coef else 1.0
        if sign == "-":
            value = -value
        terms[name] = terms.get(name, 0.0) + value
    return terms


def parse_lp(text):
    """Parse the canonical export format back into objective/rows/bounds."""
    section = None
    objective = {}
    rows = {}
    bounds = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        lowered = line.lower()
        if lowered in ("maximize", "minimize"):
            section = "obj"
            continue
        if lowered == "subject to":
            section = "rows"
            continue
        if lowered == "bounds":
            section = "bounds"
            continue
        if lowered == "end":
            break
        if section == "obj":
            _, expr = line.split(":", 1)
            objective = _parse_terms(expr)
        elif section == "rows":
            name, rest = line.split(":", 1)
            if "<=" in rest:
                expr, rhs = rest.split("<=")
                sense = "<="
            elif ">=" in rest:
                expr, rhs = rest.split(">=")
                sense = ">="
            else:
                expr, rhs = rest.split("=")
                sense = "="
            rows[name.strip()] = (_parse_terms(expr), sense, float(rhs))
        elif section == "bounds":
            if line.endswith(" free"):
                bounds[line[:-5].strip()] = (None, None)
            elif "<=" in line:
                lo, name, hi = line.split("<=")
                bounds[name.strip()] = (float(lo), float(hi))
            elif ">=" in line:
                name, lo = line.split(">=")
                bounds[name.strip()] = (float(lo), None)
    return {"objective": objective, "rows": rows, "bounds": bounds}
