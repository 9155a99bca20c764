"""Precision and recall certificates for batch matchers.

A batch matcher materializes its full identified-match set before
validation. From a verified sample of actual matches and a node sample
with known actual matches, these functions certify:

* holdout recall: the identified-membership rate over the verified match
  sample lower-bounds recall directly.
* holdout precision: recall times actual-match density, rescaled by the
  identified-set size (precision = recall * |M| / |identified|, with |M|
  lower-bounded through the per-node match-count mean).
* complete variants: the holdout certificate minus a correction for the
  pairs the holdout matcher identified but the complete matcher dropped.
  The complete matcher may have been trained on the validation samples;
  only the holdout matcher must be independent of them.

Every certificate consumes an explicit delta budget with one part per
bound term; the total failure probability is the sum of the parts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .bounds import (
    BoundMethod,
    DeltaBudget,
    PopulationSpec,
    SampleSummary,
    bound_mean,
)
from .errors import MatchcertError
from .graphs import MatchSet, NetworkPair
from .reports import VACUOUS_DENOMINATOR, ValidationReport, digest_of

__all__ = [
    "BatchValidationInput",
    "holdout_batch_recall",
    "holdout_batch_precision",
    "complete_batch_recall",
    "complete_batch_precision",
    "true_batch_metrics",
]


@dataclass(frozen=True)
class BatchValidationInput:
    """Inputs shared by the batch certificates.

    ``s_m`` is a sample drawn uniformly without replacement from the
    actual matches; ``s_x`` likewise from the x universe, with
    ``actual_for`` giving the verified actual matches for each sampled
    node. ``m_size`` is the actual-match count when known; when unknown,
    ``m_size_upper`` supplies a conservative stand-in (the exact method is
    then unavailable for the recall term and Hoeffding is used instead).
    """

    pair: NetworkPair
    m_hat_holdout: MatchSet
    s_m: tuple[tuple[str, str], ...]
    s_x: tuple[str, ...]
    actual_for: Mapping[str, frozenset[str]]
    method: BoundMethod
    budget: DeltaBudget
    k_y: int = 1
    m_hat_complete: MatchSet | None = None
    m_size: int | None = None
    m_size_upper: int | None = None
    vacuous_eps: float = 0.0

    def __post_init__(self) -> None:
        if self.k_y < 1:
            raise MatchcertError(f"invalid-ky: {self.k_y}")

    @property
    def n_x(self) -> int:
        return len(self.pair.x_net.nodes)


def _require_parts(inp: BatchValidationInput, k: int) -> None:
    if len(inp.budget) != k:
        raise MatchcertError(
            f"budget-arity: certificate needs {k} delta parts, "
            f"got {len(inp.budget)}"
        )


def _digest(inp: BatchValidationInput, bound_id: str) -> str:
    return digest_of(
        {
            "bound_id": bound_id,
            "n_x": inp.n_x,
            "m_hat_holdout": sorted(map(list, inp.m_hat_holdout.pairs)),
            "m_hat_complete": (
                sorted(map(list, inp.m_hat_complete.pairs))
                if inp.m_hat_complete
                else None
            ),
            "s_m": sorted(map(list, inp.s_m)),
            "s_x": sorted(inp.s_x),
            "k_y": inp.k_y,
            "method": inp.method.value,
            "deltas": [p.delta for p in inp.budget.parts],
            "m_size": inp.m_size,
            "m_size_upper": inp.m_size_upper,
        }
    )


def _recall_term(inp: BatchValidationInput, delta) -> tuple[float, BoundMethod]:
    """Lower-bound the identified rate over the actual matches."""
    if not inp.s_m:
        raise MatchcertError("empty-sample: s_m has no verified matches")
    values = [1.0 if p in inp.m_hat_holdout.pairs else 0.0 for p in inp.s_m]
    if inp.m_size is not None:
        n, method = inp.m_size, inp.method
    elif inp.m_size_upper is not None:
        n = inp.m_size_upper
        # the exact method needs the true population size; the Hoeffding
        # slack ignores n and the EBS rho factor grows with it, so both
        # stay valid under an upper bound
        method = (
            BoundMethod.HOEFFDING
            if inp.method is BoundMethod.HYPERGEOMETRIC
            else inp.method
        )
    else:
        raise MatchcertError(
            "missing-population: supply m_size or m_size_upper for the recall term"
        )
    res = bound_mean(
        PopulationSpec(n, 0.0, 1.0), SampleSummary.of(values), method, delta, "lower"
    )
    return res.lower, method


def _density_term(inp: BatchValidationInput, delta) -> tuple[float, BoundMethod]:
    """Lower-bound the mean per-node actual-match count over X."""
    if not inp.s_x:
        raise MatchcertError("empty-sample: s_x has no nodes")
    values = []
    for x in inp.s_x:
        if x not in inp.actual_for:
            raise MatchcertError(f"missing-actual: no verified matches for {x!r}")
        values.append(float(len(inp.actual_for[x])))
    res = bound_mean(
        PopulationSpec(inp.n_x, 0.0, float(inp.k_y)),
        SampleSummary.of(values),
        inp.method,
        delta,
        "lower",
    )
    return res.lower, inp.method


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def _precision_scale(n_x: int, m_hat_size: int, recall_lb: float, density_lb: float) -> float:
    # shared by the holdout and complete precision certificates so that the
    # zero-disagreement case reduces to the holdout value bit-for-bit
    return n_x / m_hat_size * recall_lb * density_lb


def holdout_batch_recall(inp: BatchValidationInput) -> ValidationReport:
    _require_parts(inp, 1)
    recall_lb, method = _recall_term(inp, inp.budget.parts[0])
    return ValidationReport(
        bound_id="holdout-batch-recall",
        quantity="recall",
        variant="holdout",
        mode="batch",
        budget=inp.budget,
        lower_bound=_clamp01(recall_lb),
        terms={"recall_term": recall_lb, "sample_size": float(len(inp.s_m))},
        term_methods={"recall_term": method.value},
        inputs_digest=_digest(inp, "holdout-batch-recall"),
    )


def holdout_batch_precision(inp: BatchValidationInput) -> ValidationReport:
    _require_parts(inp, 2)
    if not inp.m_hat_holdout.pairs:
        raise MatchcertError("no-identified-matches: holdout identified set is empty")
    recall_lb, rm = _recall_term(inp, inp.budget.parts[0])
    density_lb, dm = _density_term(inp, inp.budget.parts[1])
    value = _precision_scale(
        inp.n_x, len(inp.m_hat_holdout.pairs), recall_lb, density_lb
    )
    return ValidationReport(
        bound_id="holdout-batch-precision",
        quantity="precision",
        variant="holdout",
        mode="batch",
        budget=inp.budget,
        lower_bound=_clamp01(value),
        terms={
            "recall_term": recall_lb,
            "match_density_term": density_lb,
            "identified_count": float(len(inp.m_hat_holdout.pairs)),
        },
        term_methods={"recall_term": rm.value, "match_density_term": dm.value},
        inputs_digest=_digest(inp, "holdout-batch-precision"),
    )


def _require_complete(inp: BatchValidationInput) -> MatchSet:
    if inp.m_hat_complete is None:
        raise MatchcertError("missing-complete: no complete identified set supplied")
    return inp.m_hat_complete


def complete_batch_recall(inp: BatchValidationInput) -> ValidationReport:
    _require_parts(inp, 2)
    m_hat = _require_complete(inp)
    recall_lb, rm = _recall_term(inp, inp.budget.parts[0])
    density_lb, dm = _density_term(inp, inp.budget.parts[1])
    disagreement = len(inp.m_hat_holdout.pairs - m_hat.pairs)
    terms = {
        "recall_term": recall_lb,
        "match_density_term": density_lb,
        "disagreement_count": float(disagreement),
    }
    term_methods = {"recall_term": rm.value, "match_density_term": dm.value}
    digest = _digest(inp, "complete-batch-recall")
    if density_lb <= inp.vacuous_eps:
        return ValidationReport(
            bound_id="complete-batch-recall",
            quantity="recall",
            variant="complete",
            mode="batch",
            budget=inp.budget,
            lower_bound=0.0,
            terms=terms,
            term_methods=term_methods,
            flags=(VACUOUS_DENOMINATOR,),
            inputs_digest=digest,
        )
    value = recall_lb - disagreement / (inp.n_x * density_lb)
    return ValidationReport(
        bound_id="complete-batch-recall",
        quantity="recall",
        variant="complete",
        mode="batch",
        budget=inp.budget,
        lower_bound=_clamp01(value),
        terms=terms,
        term_methods=term_methods,
        inputs_digest=digest,
    )


def complete_batch_precision(inp: BatchValidationInput) -> ValidationReport:
    _require_parts(inp, 2)
    m_hat = _require_complete(inp)
    if not m_hat.pairs:
        raise MatchcertError("no-identified-matches: complete identified set is empty")
    recall_lb, rm = _recall_term(inp, inp.budget.parts[0])
    density_lb, dm = _density_term(inp, inp.budget.parts[1])
    disagreement = len(inp.m_hat_holdout.pairs - m_hat.pairs)
    value = (
        _precision_scale(inp.n_x, len(m_hat.pairs), recall_lb, density_lb)
        - disagreement / len(m_hat.pairs)
    )
    return ValidationReport(
        bound_id="complete-batch-precision",
        quantity="precision",
        variant="complete",
        mode="batch",
        budget=inp.budget,
        lower_bound=_clamp01(value),
        terms={
            "recall_term": recall_lb,
            "match_density_term": density_lb,
            "disagreement_count": float(disagreement),
            "identified_count": float(len(m_hat.pairs)),
        },
        term_methods={"recall_term": rm.value, "match_density_term": dm.value},
        inputs_digest=_digest(inp, "complete-batch-precision"),
    )


def true_batch_metrics(
    pair: NetworkPair, m_hat: MatchSet, m_true: MatchSet
) -> tuple[float | None, float | None]:
    """Exact (precision, recall) by set arithmetic; None on an empty
    denominator. Test and harness oracle only: requires full ground truth."""
    hit = len(m_hat.pairs & m_true.pairs)
    precision = hit / len(m_hat.pairs) if m_hat.pairs else None
    recall = hit / len(m_true.pairs) if m_true.pairs else None
    return precision, recall
