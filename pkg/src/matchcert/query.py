"""Precision, recall, and error-rate certificates for query matchers.

A query matcher produces identified matches per node on demand; its full
identified set is never materialized. Certification therefore works on
per-node statistics:

* single-node precision p(x): fraction of x's identified matches that are
  actual (undefined when x has no identified matches);
* single-node recall r(x): fraction of x's actual matches identified
  (undefined when x has no actual matches);
* single-node error w(x): 1 when identified and actual match sets differ.

Query precision/recall are means of p(x) and r(x) over the nodes where
they are defined. The holdout certificates bound these means from the
verified node sample directly. The complete-matcher certificates add a
correction bounded from a second, independent node sample on which only
matcher outputs are observed, never actual matches: d_r(x) flags nodes
where the holdout matcher found something the complete one dropped, and
d_p(x) additionally charges for partial overlap.

Population sizes of the defined-node subsets are unknowable without full
enumeration, so the conservative stand-in |X| is used where a size is
needed (the Hoeffding slack ignores it; the EBS factor and the exact
inversion only widen under an overestimate).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from .bounds import (
    BoundMethod,
    Confidence,
    DeltaBudget,
    PopulationSpec,
    SampleSummary,
    bound_mean,
)
from .errors import MatchcertError
from .graphs import MatchSet, NetworkPair, PerNodeView, by_x
from .matchers import MatcherHandle, run_query
from .reports import VACUOUS_DENOMINATOR, ValidationReport, digest_of
from .sampling import stream_without_replacement

__all__ = [
    "PerNodeStats",
    "QueryValidationInput",
    "single_node_precision",
    "single_node_recall",
    "single_node_error",
    "disagreement_recall",
    "disagreement_precision",
    "holdout_query_bounds",
    "complete_query_recall",
    "complete_query_precision",
    "error_rate_bounds",
    "compute_node_stats",
    "sample_until_usable",
    "true_query_metrics",
    "true_error_rate",
]

DP_DEFAULT_RANGE = (-1.0, 2.0)


def single_node_precision(
    m_hat_view: PerNodeView, m_view: PerNodeView
) -> float | None:
    """|identified ∩ actual| / |identified|; None when nothing identified."""
    if not m_hat_view.matched:
        return None
    return len(m_hat_view.matched & m_view.matched) / len(m_hat_view.matched)


def single_node_recall(m_hat_view: PerNodeView, m_view: PerNodeView) -> float | None:
    """|identified ∩ actual| / |actual|; None when no actual matches."""
    if not m_view.matched:
        return None
    return len(m_hat_view.matched & m_view.matched) / len(m_view.matched)


def single_node_error(m_hat_view: PerNodeView, m_view: PerNodeView) -> int:
    """1 when the identified and actual sets differ at all, else 0."""
    return int(m_hat_view.matched != m_view.matched)


def disagreement_recall(holdout: frozenset, complete: frozenset) -> float:
    """d_r(x): 1 when the holdout matcher found a pair the complete one lost."""
    return 1.0 if holdout - complete else 0.0


def disagreement_precision(holdout: frozenset, complete: frozenset) -> float:
    """d_p(x): per-node precision damage of switching holdout -> complete.

    Zero when both matchers are silent for x or agree exactly; 1 when only
    the holdout matcher speaks; 1 + |holdout-only| / |complete| when both
    speak but differ.
    """
    if complete and holdout:
        if holdout != complete:
            return 1.0 + len(holdout - complete) / len(complete)
        return 0.0
    if holdout and not complete:
        return 1.0
    return 0.0


@dataclass(frozen=True)
class PerNodeStats:
    node: str
    p: float | None = None
    r: float | None = None
    w: int | None = None
    d_r: float | None = None
    d_p: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "node": self.node,
            "p": self.p,
            "r": self.r,
            "w": self.w,
            "d_r": self.d_r,
            "d_p": self.d_p,
        }


@dataclass(frozen=True)
class QueryValidationInput:
    """Inputs for the query certificates.

    ``s_x`` is a uniform without-replacement node sample with verified
    actual matches in ``actual_for``. ``s_x_prime`` is a second sample,
    drawn independently of ``s_x``, for which actual matches are NOT
    required (and are never read): it only feeds matcher-vs-matcher
    disagreement terms. ``k_cap`` caps identified matches per node and
    sets the widened d_p range.
    """

    pair: NetworkPair
    holdout: MatcherHandle
    s_x: tuple[str, ...]
    actual_for: Mapping[str, frozenset[str]]
    method: BoundMethod
    budget: DeltaBudget
    complete: MatcherHandle | None = None
    s_x_prime: tuple[str, ...] = ()
    k_cap: int = 1
    vacuous_eps: float = 0.0

    def __post_init__(self) -> None:
        if self.k_cap < 1:
            raise MatchcertError(f"invalid-kcap: {self.k_cap}")

    @property
    def n_x(self) -> int:
        return len(self.pair.x_net.nodes)


def _require_parts(inp: QueryValidationInput, k: int) -> None:
    if len(inp.budget) != k:
        raise MatchcertError(
            f"budget-arity: certificate needs {k} delta parts, got {len(inp.budget)}"
        )


def _actual(inp: QueryValidationInput, x: str) -> frozenset:
    if x not in inp.actual_for:
        raise MatchcertError(f"missing-actual: no verified matches for {x!r}")
    return inp.actual_for[x]


def _holdout_views(inp: QueryValidationInput, nodes: Sequence[str]):
    return {x: run_query(inp.holdout, inp.pair, x).matched for x in nodes}


def _complete_views(inp: QueryValidationInput, nodes: Sequence[str]):
    assert inp.complete is not None
    return {x: run_query(inp.complete, inp.pair, x).matched for x in nodes}


def _term(
    inp: QueryValidationInput,
    values: Sequence[float],
    delta: Confidence,
    side: str,
    lo: float = 0.0,
    hi: float = 1.0,
    allow_exact: bool = True,
) -> tuple[float, str]:
    """One bound term; downgrades the exact method where it cannot apply."""
    method = inp.method
    if method is BoundMethod.HYPERGEOMETRIC and not allow_exact:
        method = BoundMethod.HOEFFDING
    res = bound_mean(
        PopulationSpec(inp.n_x, lo, hi),
        SampleSummary.of(values),
        method,
        delta,
        side,
    )
    return (res.lower if side == "lower" else res.upper), method.value


def _digest(inp: QueryValidationInput, bound_id: str) -> str:
    return digest_of(
        {
            "bound_id": bound_id,
            "n_x": inp.n_x,
            "s_x": sorted(inp.s_x),
            "s_x_prime": sorted(inp.s_x_prime),
            "method": inp.method.value,
            "deltas": [p.delta for p in inp.budget.parts],
            "k_cap": inp.k_cap,
            "holdout": inp.holdout.config.to_json_dict(),
            "complete": (
                inp.complete.config.to_json_dict() if inp.complete else None
            ),
        }
    )


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def _holdout_precision_term(
    inp: QueryValidationInput, hv: Mapping[str, frozenset], delta: Confidence
) -> tuple[float, str, int]:
    values = []
    for x in inp.s_x:
        if hv[x]:
            p = single_node_precision(
                PerNodeView(x, hv[x]), PerNodeView(x, _actual(inp, x))
            )
            values.append(p)
    if not values:
        raise MatchcertError(
            "no-usable-sample: no sampled node has identified matches"
        )
    lb, used = _term(inp, values, delta, "lower")
    return lb, used, len(values)


def _holdout_recall_term(
    inp: QueryValidationInput, hv: Mapping[str, frozenset], delta: Confidence
) -> tuple[float, str, int]:
    values = []
    for x in inp.s_x:
        actual = _actual(inp, x)
        if actual:
            values.append(
                single_node_recall(PerNodeView(x, hv[x]), PerNodeView(x, actual))
            )
    if not values:
        raise MatchcertError("no-usable-sample: no sampled node has actual matches")
    lb, used = _term(inp, values, delta, "lower")
    return lb, used, len(values)


def holdout_query_bounds(
    inp: QueryValidationInput,
) -> tuple[ValidationReport, ValidationReport]:
    """Certify holdout query precision and recall, each at the budget's
    single delta (combine with union_confidence to hold both jointly)."""
    _require_parts(inp, 1)
    if not inp.s_x:
        raise MatchcertError("empty-sample: s_x has no nodes")
    delta = inp.budget.parts[0]
    hv = _holdout_views(inp, inp.s_x)
    p_lb, p_used, p_n = _holdout_precision_term(inp, hv, delta)
    r_lb, r_used, r_n = _holdout_recall_term(inp, hv, delta)
    precision = ValidationReport(
        bound_id="holdout-query-precision",
        quantity="precision",
        variant="holdout",
        mode="query",
        budget=inp.budget,
        lower_bound=_clamp01(p_lb),
        terms={"precision_term": p_lb, "usable_nodes": float(p_n)},
        term_methods={"precision_term": p_used},
        inputs_digest=_digest(inp, "holdout-query-precision"),
    )
    recall = ValidationReport(
        bound_id="holdout-query-recall",
        quantity="recall",
        variant="holdout",
        mode="query",
        budget=inp.budget,
        lower_bound=_clamp01(r_lb),
        terms={"recall_term": r_lb, "usable_nodes": float(r_n)},
        term_methods={"recall_term": r_used},
        inputs_digest=_digest(inp, "holdout-query-recall"),
    )
    return precision, recall


def _require_complete(inp: QueryValidationInput) -> MatcherHandle:
    if inp.complete is None:
        raise MatchcertError("missing-complete: no complete matcher supplied")
    if not inp.s_x_prime:
        raise MatchcertError("empty-sample: s_x_prime has no nodes")
    return inp.complete


def complete_query_recall(inp: QueryValidationInput) -> ValidationReport:
    """Holdout recall minus the disagreement rate rescaled by the matched
    fraction of X; reduces exactly to the holdout certificate when the
    complete matcher is the same function as the holdout one."""
    _require_parts(inp, 3)
    complete = _require_complete(inp)
    d_r, d_x, d_frac = inp.budget.parts
    hv = _holdout_views(inp, inp.s_x)
    r_lb, r_used, r_n = _holdout_recall_term(inp, hv, d_r)
    digest = _digest(inp, "complete-query-recall")
    if complete.same_function(inp.holdout):
        return ValidationReport(
            bound_id="complete-query-recall",
            quantity="recall",
            variant="complete",
            mode="query",
            budget=inp.budget,
            lower_bound=_clamp01(r_lb),
            terms={"recall_term": r_lb, "disagreement_term": 0.0,
                   "usable_nodes": float(r_n)},
            term_methods={"recall_term": r_used},
            flags=("reduced-to-holdout",),
            inputs_digest=digest,
        )
    hv_prime = _holdout_views(inp, inp.s_x_prime)
    cv_prime = _complete_views(inp, inp.s_x_prime)
    d_values = [
        disagreement_recall(hv_prime[x], cv_prime[x]) for x in inp.s_x_prime
    ]
    d_ub, d_used = _term(inp, d_values, d_x, "upper")
    matched_ind = [1.0 if _actual(inp, x) else 0.0 for x in inp.s_x]
    frac_lb, frac_used = _term(inp, matched_ind, d_frac, "lower")
    terms = {
        "recall_term": r_lb,
        "disagreement_term": d_ub,
        "matched_fraction_term": frac_lb,
        "usable_nodes": float(r_n),
    }
    term_methods = {
        "recall_term": r_used,
        "disagreement_term": d_used,
        "matched_fraction_term": frac_used,
    }
    if frac_lb <= inp.vacuous_eps:
        return ValidationReport(
            bound_id="complete-query-recall",
            quantity="recall",
            variant="complete",
            mode="query",
            budget=inp.budget,
            lower_bound=0.0,
            terms=terms,
            term_methods=term_methods,
            flags=(VACUOUS_DENOMINATOR,),
            inputs_digest=digest,
        )
    value = r_lb - d_ub / frac_lb
    return ValidationReport(
        bound_id="complete-query-recall",
        quantity="recall",
        variant="complete",
        mode="query",
        budget=inp.budget,
        lower_bound=_clamp01(value),
        terms=terms,
        term_methods=term_methods,
        inputs_digest=digest,
    )


def complete_query_precision(inp: QueryValidationInput) -> ValidationReport:
    """[lower(holdout-matched fraction) * lower(holdout precision) -
    upper(d_p mean)] / upper(complete-matched fraction).

    The d_p term uses the documented default range (-1, 2), widened to
    (0, 1 + k_cap) when an observed value exceeds 2 (possible as soon as a
    node has several identified matches); the range actually used is
    recorded in the terms.
    """
    _require_parts(inp, 4)
    complete = _require_complete(inp)
    d1, d2, d3, d4 = inp.budget.parts
    hv = _holdout_views(inp, inp.s_x)
    hv_prime = _holdout_views(inp, inp.s_x_prime)
    cv_prime = _complete_views(inp, inp.s_x_prime)
    reduced = complete.same_function(inp.holdout)

    p_lb, p_used, p_n = _holdout_precision_term(inp, hv, d2)
    h_ind = [1.0 if hv_prime[x] else 0.0 for x in inp.s_x_prime]
    h_frac_lb, h_frac_used = _term(inp, h_ind, d1, "lower")
    c_ind = [1.0 if cv_prime[x] else 0.0 for x in inp.s_x_prime]
    c_frac_ub, c_frac_used = _term(inp, c_ind, d4, "upper")

    term_methods = {
        "holdout_fraction_term": h_frac_used,
        "precision_term": p_used,
        "complete_fraction_term": c_frac_used,
    }
    terms = {
        "holdout_fraction_term": h_frac_lb,
        "precision_term": p_lb,
        "complete_fraction_term": c_frac_ub,
        "usable_nodes": float(p_n),
    }
    flags: tuple[str, ...] = ()
    if reduced:
        dp_ub = 0.0
        terms["dp_term"] = 0.0
        flags = ("reduced-to-holdout",)
    else:
        dp_values = [
            disagreement_precision(hv_prime[x], cv_prime[x])
            for x in inp.s_x_prime
        ]
        lo, hi = DP_DEFAULT_RANGE
        if max(dp_values, default=0.0) > hi:
            lo, hi = 0.0, 1.0 + inp.k_cap
            flags = ("dp-range-widened",)
        dp_ub, dp_used = _term(
            inp, dp_values, d3, "upper", lo=lo, hi=hi, allow_exact=False
        )
        terms["dp_term"] = dp_ub
        terms["dp_range_lo"] = lo
        terms["dp_range_hi"] = hi
        term_methods["dp_term"] = dp_used
    digest = _digest(inp, "complete-query-precision")
    if c_frac_ub <= inp.vacuous_eps:
        return ValidationReport(
            bound_id="complete-query-precision",
            quantity="precision",
            variant="complete",
            mode="query",
            budget=inp.budget,
            lower_bound=0.0,
            terms=terms,
            term_methods=term_methods,
            flags=flags + (VACUOUS_DENOMINATOR,),
            inputs_digest=digest,
        )
    value = (h_frac_lb * p_lb - dp_ub) / c_frac_ub
    return ValidationReport(
        bound_id="complete-query-precision",
        quantity="precision",
        variant="complete",
        mode="query",
        budget=inp.budget,
        lower_bound=_clamp01(value),
        terms=terms,
        term_methods=term_methods,
        flags=flags,
        inputs_digest=digest,
    )


def error_rate_bounds(inp: QueryValidationInput) -> ValidationReport:
    """Upper-bound the mean single-node error over X.

    Holdout variant (no complete matcher supplied): one upper bound over
    the verified sample. Complete variant: the holdout bound plus an upper
    bound on the holdout/complete disagreement rate from the independent
    sample, since a complete-matcher error needs the holdout matcher to
    err or the two matchers to differ.
    """
    if not inp.s_x:
        raise MatchcertError("empty-sample: s_x has no nodes")
    hv = _holdout_views(inp, inp.s_x)
    w_values = [
        float(
            single_node_error(PerNodeView(x, hv[x]), PerNodeView(x, _actual(inp, x)))
        )
        for x in inp.s_x
    ]
    if inp.complete is None:
        _require_parts(inp, 1)
        w_ub, w_used = _term(inp, w_values, inp.budget.parts[0], "upper")
        return ValidationReport(
            bound_id="holdout-query-error-rate",
            quantity="error-rate",
            variant="holdout",
            mode="query",
            budget=inp.budget,
            upper_bound=_clamp01(w_ub),
            terms={"error_term": w_ub},
            term_methods={"error_term": w_used},
            inputs_digest=_digest(inp, "holdout-query-error-rate"),
        )
    _require_parts(inp, 2)
    complete = _require_complete(inp)
    d1, d2 = inp.budget.parts
    w_ub, w_used = _term(inp, w_values, d1, "upper")
    digest = _digest(inp, "complete-query-error-rate")
    if complete.same_function(inp.holdout):
        return ValidationReport(
            bound_id="complete-query-error-rate",
            quantity="error-rate",
            variant="complete",
            mode="query",
            budget=inp.budget,
            upper_bound=_clamp01(w_ub),
            terms={"error_term": w_ub, "disagreement_term": 0.0},
            term_methods={"error_term": w_used},
            flags=("reduced-to-holdout",),
            inputs_digest=digest,
        )
    hv_prime = _holdout_views(inp, inp.s_x_prime)
    cv_prime = _complete_views(inp, inp.s_x_prime)
    diff_values = [
        1.0 if hv_prime[x] != cv_prime[x] else 0.0 for x in inp.s_x_prime
    ]
    diff_ub, diff_used = _term(inp, diff_values, d2, "upper")
    return ValidationReport(
        bound_id="complete-query-error-rate",
        quantity="error-rate",
        variant="complete",
        mode="query",
        budget=inp.budget,
        upper_bound=_clamp01(w_ub + diff_ub),
        terms={"error_term": w_ub, "disagreement_term": diff_ub},
        term_methods={"error_term": w_used, "disagreement_term": diff_used},
        inputs_digest=digest,
    )


def compute_node_stats(inp: QueryValidationInput) -> list[PerNodeStats]:
    """Per-node statistics for reporting.

    Verified-sample nodes carry p, r, w against the holdout matcher (plus
    d_r, d_p when a complete matcher is present); independent-sample-only
    nodes carry d_r, d_p alone, never touching actual matches.
    """
    out = []
    hv = _holdout_views(inp, inp.s_x)
    cv = _complete_views(inp, inp.s_x) if inp.complete is not None else None
    for x in inp.s_x:
        actual = PerNodeView(x, _actual(inp, x))
        view = PerNodeView(x, hv[x])
        out.append(
            PerNodeStats(
                node=x,
                p=single_node_precision(view, actual),
                r=single_node_recall(view, actual),
                w=single_node_error(view, actual),
                d_r=disagreement_recall(hv[x], cv[x]) if cv is not None else None,
                d_p=disagreement_precision(hv[x], cv[x]) if cv is not None else None,
            )
        )
    seen = set(inp.s_x)
    prime_only = [x for x in inp.s_x_prime if x not in seen]
    if prime_only and inp.complete is not None:
        hvp = _holdout_views(inp, prime_only)
        cvp = _complete_views(inp, prime_only)
        for x in prime_only:
            out.append(
                PerNodeStats(
                    node=x,
                    d_r=disagreement_recall(hvp[x], cvp[x]),
                    d_p=disagreement_precision(hvp[x], cvp[x]),
                )
            )
    return out


def sample_until_usable(
    universe: Sequence[str],
    predicate: Callable[[str], bool],
    target: int,
    seed_or_rng,
) -> list[str]:
    """Extend a without-replacement draw until ``target`` drawn items
    satisfy the predicate; returns the full drawn prefix.

    The bounds stay valid on samples grown this way: the usable subset of
    a longer uniform draw is still a uniform draw from the usable part of
    the population.
    """
    drawn: list[str] = []
    usable = 0
    for item in stream_without_replacement(universe, seed_or_rng):
        drawn.append(item)
        if predicate(item):
            usable += 1
            if usable >= target:
                return drawn
    raise MatchcertError(
        f"no-usable-sample: universe exhausted with {usable} usable < {target}"
    )


def true_query_metrics(
    pair: NetworkPair, m_hat: MatchSet, m_true: MatchSet
) -> tuple[float | None, float | None]:
    """Exact query precision/recall: means of p(x) and r(x) over the nodes
    where they are defined. Test and harness oracle only."""
    hat = by_x(m_hat)
    true = by_x(m_true)
    p_vals = [
        len(ys & true.get(x, frozenset())) / len(ys) for x, ys in hat.items()
    ]
    r_vals = [
        len(ys & hat.get(x, frozenset())) / len(ys) for x, ys in true.items()
    ]
    precision = sum(p_vals) / len(p_vals) if p_vals else None
    recall = sum(r_vals) / len(r_vals) if r_vals else None
    return precision, recall


def true_error_rate(pair: NetworkPair, m_hat: MatchSet, m_true: MatchSet) -> float:
    """Exact mean single-node error over all of X. Oracle only."""
    hat = by_x(m_hat)
    true = by_x(m_true)
    wrong = sum(
        1
        for x in pair.x_net.nodes
        if hat.get(x, frozenset()) != true.get(x, frozenset())
    )
    return wrong / len(pair.x_net.nodes)
