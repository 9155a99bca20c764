import math

import pytest

from matchcert.batch import (
    BatchValidationInput,
    complete_batch_precision,
    complete_batch_recall,
    holdout_batch_precision,
    holdout_batch_recall,
    true_batch_metrics,
)
from matchcert.bounds import (
    BoundMethod,
    Confidence,
    DeltaBudget,
    hypergeom_invert_lower,
)
from matchcert.errors import MatchcertError
from matchcert.graphs import MatchRole, by_x, make_match_set
from matchcert.sampling import sample_without_replacement
from matchcert.synth import ErdosRenyi, GeneratorConfig, generate_pair

HG = BoundMethod.HYPERGEOMETRIC
HOEFF = BoundMethod.HOEFFDING


@pytest.fixture(scope="module")
def world():
    cfg = GeneratorConfig(
        n_entities=300,
        base_model=ErdosRenyi(0.02),
        node_drop_x=0.1,
        node_drop_y=0.1,
        rng_seed=42,
    )
    pair, truth = generate_pair(cfg)
    return pair, truth


def base_input(pair, truth, m_hat, s_m, s_x, method, budget, **kw):
    return BatchValidationInput(
        pair=pair,
        m_hat_holdout=m_hat,
        s_m=tuple(s_m),
        s_x=tuple(s_x),
        actual_for=_full_actuals(pair, truth),
        method=method,
        budget=budget,
        m_size=len(truth.pairs),
        **kw,
    )


def _full_actuals(pair, truth):
    per_x = by_x(truth)
    return {x: per_x.get(x, frozenset()) for x in pair.x_net.nodes}


class TestHoldoutRecall:
    def test_all_sample_identified_delegates_to_inversion(self, world):
        pair, truth = world
        s_m = sample_without_replacement(sorted(truth.pairs), 20, 1)
        m_hat = make_match_set(truth.pairs, pair, MatchRole.IDENTIFIED_HOLDOUT)
        inp = base_input(pair, truth, m_hat, s_m, ["x0"], HG, DeltaBudget.of(0.05))
        # fixture: 20 of 20 identified with |M| = 100
        inp = BatchValidationInput(
            pair=inp.pair,
            m_hat_holdout=inp.m_hat_holdout,
            s_m=inp.s_m,
            s_x=inp.s_x,
            actual_for=inp.actual_for,
            method=HG,
            budget=DeltaBudget.of(0.05),
            m_size=100,
        )
        rep = holdout_batch_recall(inp)
        assert rep.lower_bound == hypergeom_invert_lower(100, 20, 20, Confidence(0.05))
        assert rep.quantity == "recall" and rep.variant == "holdout"

    def test_nothing_identified_gives_zero(self, world):
        pair, truth = world
        s_m = sample_without_replacement(sorted(truth.pairs), 15, 2)
        m_hat = make_match_set([], pair, MatchRole.IDENTIFIED_HOLDOUT)
        inp = base_input(pair, truth, m_hat, s_m, ["x0"], HOEFF, DeltaBudget.of(0.05))
        assert holdout_batch_recall(inp).lower_bound == 0.0

    def test_census_pins_to_one(self, world):
        pair, truth = world
        m_hat = make_match_set(truth.pairs, pair, MatchRole.IDENTIFIED_HOLDOUT)
        inp = base_input(
            pair, truth, m_hat, sorted(truth.pairs), ["x0"], HG, DeltaBudget.of(0.05)
        )
        assert holdout_batch_recall(inp).lower_bound == 1.0

    def test_empty_sample_rejected(self, world):
        pair, truth = world
        m_hat = make_match_set(truth.pairs, pair, MatchRole.IDENTIFIED_HOLDOUT)
        inp = base_input(pair, truth, m_hat, [], ["x0"], HOEFF, DeltaBudget.of(0.05))
        with pytest.raises(MatchcertError, match="empty-sample"):
            holdout_batch_recall(inp)

    def test_unknown_population_falls_back_to_hoeffding(self, world):
        pair, truth = world
        s_m = sample_without_replacement(sorted(truth.pairs), 30, 3)
        m_hat = make_match_set(truth.pairs, pair, MatchRole.IDENTIFIED_HOLDOUT)
        inp = BatchValidationInput(
            pair=pair,
            m_hat_holdout=m_hat,
            s_m=tuple(s_m),
            s_x=("x0",),
            actual_for=_full_actuals(pair, truth),
            method=HG,
            budget=DeltaBudget.of(0.05),
            m_size=None,
            m_size_upper=len(pair.x_net.nodes),
        )
        rep = holdout_batch_recall(inp)
        assert rep.term_methods["recall_term"] == "hoeffding"
        assert rep.lower_bound == pytest.approx(
            1.0 - math.sqrt(math.log(1 / 0.05) / (2 * 30))
        )

    def test_no_population_info_rejected(self, world):
        pair, truth = world
        m_hat = make_match_set(truth.pairs, pair, MatchRole.IDENTIFIED_HOLDOUT)
        inp = BatchValidationInput(
            pair=pair,
            m_hat_holdout=m_hat,
            s_m=(next(iter(truth.pairs)),),
            s_x=("x0",),
            actual_for=_full_actuals(pair, truth),
            method=HOEFF,
            budget=DeltaBudget.of(0.05),
        )
        with pytest.raises(MatchcertError, match="missing-population"):
            holdout_batch_recall(inp)

    def test_monotone_in_identified_count(self, world):
        pair, truth = world
        ordered = sorted(truth.pairs)
        s_m = ordered[:40]
        for method in (HOEFF, BoundMethod.EBS, HG):
            prev = -1.0
            for hits in (10, 20, 30, 40):
                m_hat = make_match_set(s_m[:hits], pair, MatchRole.IDENTIFIED_HOLDOUT)
                inp = base_input(
                    pair, truth, m_hat, s_m, ["x0"], method, DeltaBudget.of(0.05)
                )
                lb = holdout_batch_recall(inp).lower_bound
                assert lb >= prev
                prev = lb


class TestHoldoutPrecision:
    def test_perfect_matcher_census_is_one(self, world):
        pair, truth = world
        m_hat = make_match_set(truth.pairs, pair, MatchRole.IDENTIFIED_HOLDOUT)
        inp = base_input(
            pair,
            truth,
            m_hat,
            sorted(truth.pairs),
            sorted(pair.x_net.nodes),
            HG,
            DeltaBudget.of(0.025, 0.025),
        )
        rep = holdout_batch_precision(inp)
        assert rep.lower_bound == 1.0

    def test_perfect_matcher_finite_samples(self, world):
        pair, truth = world
        m_hat = make_match_set(truth.pairs, pair, MatchRole.IDENTIFIED_HOLDOUT)
        s_m = sample_without_replacement(sorted(truth.pairs), 150, 4)
        s_x = sample_without_replacement(sorted(pair.x_net.nodes), 150, 5)
        inp = base_input(
            pair, truth, m_hat, s_m, s_x, HG, DeltaBudget.of(0.025, 0.025)
        )
        rep = holdout_batch_precision(inp)
        true_p, _ = true_batch_metrics(pair, m_hat, truth)
        assert rep.lower_bound < 1.0
        assert rep.lower_bound >= 0.8
        assert rep.lower_bound <= true_p

    def test_zero_recall_term_zeroes_the_product(self, world):
        pair, truth = world
        s_m = sample_without_replacement(sorted(truth.pairs), 10, 6)
        m_hat = make_match_set([("x0", "y1")], pair, MatchRole.IDENTIFIED_HOLDOUT)
        inp = base_input(
            pair, truth, m_hat, s_m, ["x0"], HG, DeltaBudget.of(0.025, 0.025)
        )
        assert holdout_batch_precision(inp).lower_bound == 0.0

    def test_density_term_closed_form(self, world):
        # k_y = 1 and every sampled node matched: Hoeffding density term is
        # 1 - sqrt(ln(1/delta_p) / (2 s))
        pair, truth = world
        matched_x = sorted(by_x(truth))
        s_x = matched_x[:50]
        m_hat = make_match_set(truth.pairs, pair, MatchRole.IDENTIFIED_HOLDOUT)
        s_m = sample_without_replacement(sorted(truth.pairs), 20, 7)
        inp = base_input(
            pair, truth, m_hat, s_m, s_x, HOEFF, DeltaBudget.of(0.025, 0.025)
        )
        rep = holdout_batch_precision(inp)
        want = 1.0 - math.sqrt(math.log(1 / 0.025) / (2 * 50))
        assert rep.terms["match_density_term"] == pytest.approx(want, abs=1e-12)

    def test_empty_identified_rejected(self, world):
        pair, truth = world
        m_hat = make_match_set([], pair, MatchRole.IDENTIFIED_HOLDOUT)
        inp = base_input(
            pair, truth, m_hat, sorted(truth.pairs)[:5], ["x0"], HOEFF,
            DeltaBudget.of(0.025, 0.025),
        )
        with pytest.raises(MatchcertError, match="no-identified-matches"):
            holdout_batch_precision(inp)

    def test_budget_arity_enforced(self, world):
        pair, truth = world
        m_hat = make_match_set(truth.pairs, pair, MatchRole.IDENTIFIED_HOLDOUT)
        inp = base_input(
            pair, truth, m_hat, sorted(truth.pairs)[:5], ["x0"], HOEFF,
            DeltaBudget.of(0.05),
        )
        with pytest.raises(MatchcertError, match="budget-arity"):
            holdout_batch_precision(inp)


class TestCompleteVariants:
    def make_inputs(self, world, m_hat_c_pairs=None, s_m_n=40, s_x_n=60, seed=8):
        pair, truth = world
        m_hat_h = make_match_set(truth.pairs, pair, MatchRole.IDENTIFIED_HOLDOUT)
        m_hat_c = make_match_set(
            m_hat_c_pairs if m_hat_c_pairs is not None else truth.pairs,
            pair,
            MatchRole.IDENTIFIED,
        )
        s_m = sample_without_replacement(sorted(truth.pairs), s_m_n, seed)
        s_x = sample_without_replacement(sorted(pair.x_net.nodes), s_x_n, seed + 1)
        return pair, truth, m_hat_h, m_hat_c, s_m, s_x

    def test_recall_reduces_to_holdout(self, world):
        pair, truth, m_hat_h, m_hat_c, s_m, s_x = self.make_inputs(world)
        budget2 = DeltaBudget.of(0.02, 0.03)
        inp_c = base_input(
            pair, truth, m_hat_h, s_m, s_x, HG, budget2, m_hat_complete=m_hat_c
        )
        inp_h = base_input(pair, truth, m_hat_h, s_m, s_x, HG, DeltaBudget.of(0.02))
        rep_c = complete_batch_recall(inp_c)
        rep_h = holdout_batch_recall(inp_h)
        assert rep_c.lower_bound == rep_h.lower_bound
        assert rep_c.terms["disagreement_count"] == 0.0

    def test_precision_reduces_to_holdout(self, world):
        pair, truth, m_hat_h, m_hat_c, s_m, s_x = self.make_inputs(world)
        budget = DeltaBudget.of(0.02, 0.03)
        inp_c = base_input(
            pair, truth, m_hat_h, s_m, s_x, HG, budget, m_hat_complete=m_hat_c
        )
        inp_h = base_input(pair, truth, m_hat_h, s_m, s_x, HG, budget)
        assert (
            complete_batch_precision(inp_c).lower_bound
            == holdout_batch_precision(inp_h).lower_bound
        )

    def test_recall_disagreement_clamps_to_zero(self, world):
        pair, truth, m_hat_h, _, s_m, s_x = self.make_inputs(world)
        # complete matcher drops everything the holdout found
        m_hat_c = make_match_set([("x0", "y1")], pair, MatchRole.IDENTIFIED)
        inp = base_input(
            pair, truth, m_hat_h, s_m, s_x, HOEFF, DeltaBudget.of(0.025, 0.025),
            m_hat_complete=m_hat_c,
        )
        rep = complete_batch_recall(inp)
        assert rep.lower_bound == 0.0
        assert not rep.vacuous  # genuine zero, not a degenerate denominator

    def test_vacuous_denominator_flagged(self, world):
        pair, truth, m_hat_h, m_hat_c, s_m, _ = self.make_inputs(world)
        # every sampled node unmatched: the density lower bound collapses to 0
        unmatched = sorted(pair.x_net.nodes - set(by_x(truth)))[:10]
        inp = base_input(
            pair, truth, m_hat_h, s_m, unmatched, HOEFF,
            DeltaBudget.of(0.025, 0.025),
            m_hat_complete=make_match_set([("x0", "y1")], pair, MatchRole.IDENTIFIED),
        )
        rep = complete_batch_recall(inp)
        assert rep.vacuous
        assert rep.lower_bound == 0.0

    def test_precision_subtracts_disagreement(self, world):
        pair, truth, m_hat_h, _, s_m, s_x = self.make_inputs(world)
        kept = sorted(m_hat_h.pairs)[: len(m_hat_h.pairs) // 2]
        m_hat_c = make_match_set(kept, pair, MatchRole.IDENTIFIED)
        inp = base_input(
            pair, truth, m_hat_h, s_m, s_x, HG, DeltaBudget.of(0.025, 0.025),
            m_hat_complete=m_hat_c,
        )
        rep = complete_batch_precision(inp)
        dropped = len(m_hat_h.pairs) - len(kept)
        assert rep.terms["disagreement_count"] == float(dropped)
        true_p, _ = true_batch_metrics(pair, m_hat_c, truth)
        assert rep.lower_bound <= true_p

    def test_precision_clamps_when_disagreement_dominates(self, world):
        pair, truth, m_hat_h, _, s_m, s_x = self.make_inputs(world)
        # complete keeps a single pair the holdout never identified, so the
        # subtracted disagreement ratio overwhelms the product term
        unmatched_pair = ("x0", "y1")
        assert unmatched_pair not in m_hat_h.pairs
        m_hat_c = make_match_set([unmatched_pair], pair, MatchRole.IDENTIFIED)
        inp = base_input(
            pair, truth, m_hat_h, s_m, s_x, HG, DeltaBudget.of(0.025, 0.025),
            m_hat_complete=m_hat_c,
        )
        assert complete_batch_precision(inp).lower_bound == 0.0

    def test_missing_complete_rejected(self, world):
        pair, truth, m_hat_h, _, s_m, s_x = self.make_inputs(world)
        inp = base_input(
            pair, truth, m_hat_h, s_m, s_x, HOEFF, DeltaBudget.of(0.025, 0.025)
        )
        with pytest.raises(MatchcertError, match="missing-complete"):
            complete_batch_recall(inp)


class TestTrueMetrics:
    def test_perfect(self, world):
        pair, truth = world
        m_hat = make_match_set(truth.pairs, pair, MatchRole.IDENTIFIED)
        assert true_batch_metrics(pair, m_hat, truth) == (1.0, 1.0)

    def test_disjoint(self, world):
        pair, truth = world
        wrong = make_match_set([("x0", "y1")], pair, MatchRole.IDENTIFIED)
        assert ("x0", "y1") not in truth.pairs
        assert true_batch_metrics(pair, wrong, truth) == (0.0, 0.0)

    def test_counting(self, world):
        pair, truth = world
        some = sorted(truth.pairs)[:3]
        m_hat = make_match_set(some + [("x0", "y1")], pair, MatchRole.IDENTIFIED)
        p, r = true_batch_metrics(pair, m_hat, truth)
        assert p == 0.75
        assert r == 3 / len(truth.pairs)

    def test_empty_identified_undefined(self, world):
        pair, truth = world
        empty = make_match_set([], pair, MatchRole.IDENTIFIED)
        p, r = true_batch_metrics(pair, empty, truth)
        assert p is None
        assert r == 0.0
