import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elda.corpus import Corpus
from elda.errors import BudgetError
from elda.greedy import (RunningSum, SolverConfig, fast_greedy, fast_initialize, link_budget, simple_greedy,
                         update)
from elda.objective import (Link, PlaceholderConfig, marginal_value_naive, objective_fdot,
                            unconstrained_optimum)
from elda.synthetic import random_instance
from elda.topics import GeneratorConfig, TopicMatrix, build_candidate_set

from conftest import small_instance
from oracles import brute_force_step, literal_opt

E_RATIO = 1.0 - 1.0 / math.e


class TestBudget:
    def test_rounding(self):
        assert link_budget(1.5, 4, 3) == 6
        assert link_budget(0.1 * 3, 10, 3, cover=False) == 3  # 0.30000000000000004 * 10

    def test_errors(self):
        with pytest.raises(BudgetError, match=r"< \|D\|"):
            link_budget(0.5, 4, 3)
        with pytest.raises(BudgetError):
            link_budget(4, 4, 3)
        with pytest.raises(BudgetError):
            link_budget(0.1, 4, 3, cover=False)


class TestSimpleGreedy:
    def test_fixture_each_step_is_a_global_argmax(self, fixture_corpus):
        topics = build_candidate_set(fixture_corpus, GeneratorConfig("exp_umass"))
        sol = simple_greedy(fixture_corpus, topics, 1.0)
        assert len(sol) == 3
        for j, link in enumerate(sol.links):
            best, argmax = brute_force_step(fixture_corpus, topics.scores, sol.log_p, sol.links[:j])
            assert link in argmax
            assert sol.marginals[j] == pytest.approx(best, rel=1e-12)

    def test_full_budget_reaches_unconstrained_optimum(self, rng):
        c, t = random_instance(rng, 4, 3, 10)
        sol = simple_greedy(c, t, 3)
        assert len(set(sol.links)) == 12
        assert sol.objective == pytest.approx(unconstrained_optimum(c, t, sol.log_p), rel=1e-12)

    def test_guarantee_on_twelve_link_instance(self):
        r = np.random.default_rng(7)
        c, t = random_instance(r, 3, 4, 8)
        lp = float(t.scores.min()) - 0.5
        sol = simple_greedy(c, t, 2, placeholder=PlaceholderConfig(lp, auto_lower=False))
        opt = literal_opt(c, t, lp, 6, cover=True)
        assert sol.objective >= E_RATIO * opt

    def test_trace_is_correctly_rounded_sum(self, rng):
        c, t = random_instance(rng, 6, 5, 20)
        sol = simple_greedy(c, t, 2.5)
        for j in range(len(sol)):
            assert sol.objective_trace[j] == math.fsum(sol.marginals[:j + 1])
        assert sol.objective == pytest.approx(objective_fdot(sol.links, c, t, sol.log_p), rel=1e-12)


class TestFastInitialize:
    def test_initial_memo_matches_oracle(self, rng):
        c, t = random_instance(rng, 5, 4, 12)
        lp = PlaceholderConfig().resolve(t, c)
        links, marginals, state = fast_initialize(c, t)
        assert sorted(d for _, d in links) == list(range(5))
        assert len(state.heap) == 5
        assert marginals == sorted(marginals, reverse=True)
        for d in range(5):
            row0 = [marginal_value_naive([], (k, d), c, t, lp) for k in range(4)]
            assert marginals[[dd for _, dd in links].index(d)] == max(row0)
            for k in range(4):
                if not state.linked[d, k]:
                    assert state.M[d, k] == pytest.approx(marginal_value_naive(links, (k, d), c, t, lp), rel=1e-12)

    def test_single_document_two_topics(self):
        c = Corpus.from_counts(("a", "b"), [{0: 3, 1: 1}])
        phi = np.log([[0.3, 0.7], [0.6, 0.4]])
        links, _, _ = fast_initialize(c, phi)
        assert links == [Link(1, 0)]


class TestUpdate:
    def test_memo_matches_naive_after_each_update(self, rng):
        c, t = random_instance(rng, 4, 5, 15)
        links, _, state = fast_initialize(c, t, lazy_word_skip=False)
        lp = state.log_p
        for added in [Link(3, 1), Link(0, 1), Link(2, 3)]:
            if state.linked[added.doc, added.topic]:
                continue
            before = state.M.copy(), [p.copy() for p in state.P]
            update(state, added, c, t, lazy_word_skip=False, debug=True)
            links.append(added)
            for d in range(4):
                if d != added.doc:
                    np.testing.assert_array_equal(state.M[d], before[0][d])
                    np.testing.assert_array_equal(state.P[d], before[1][d])
            assert np.all(state.P[added.doc] >= before[1][added.doc])
            for k in range(5):
                if not state.linked[added.doc, k]:
                    assert state.M[added.doc, k] == pytest.approx(
                        marginal_value_naive(links, (k, added.doc), c, t, lp), rel=1e-12)

    def test_identical_topic_is_a_no_op(self):
        c = Corpus.from_counts(("a", "b", "c"), [{0: 2, 1: 1, 2: 1}])
        phi = np.log([[0.6, 0.3, 0.1], [0.6, 0.3, 0.1], [0.1, 0.2, 0.7]])
        links, _, state = fast_initialize(c, phi, lazy_word_skip=False)
        assert links == [Link(0, 0)]
        m_before = state.M[0, 2]
        update(state, Link(1, 0), c, phi, lazy_word_skip=False)
        assert state.M[0, 2] == m_before
        assert -state.heap[0][0] == m_before


class TestFastGreedy:
    def test_kappa_one_is_a_clustering(self, rng):
        c, t = random_instance(rng, 8, 5, 20)
        sol = fast_greedy(c, t, SolverConfig(kappa=1))
        assert sorted(d for _, d in sol.links) == list(range(8))
        for (k, d) in sol.links:
            assert k == int(np.argmax(np.asarray(c.counts_matrix[d].todense()).ravel() @ t.scores.T))

    def test_monotone_trace_and_diminishing_per_doc_marginals(self, rng):
        c, t = random_instance(rng, 10, 8, 30)
        sol = fast_greedy(c, t, SolverConfig(kappa=3))
        assert np.all(np.diff(sol.objective_trace) >= 0)
        per_doc = {}
        for (k, d), m in zip(sol.links, sol.marginals):
            per_doc.setdefault(d, []).append(m)
        for ms in per_doc.values():
            assert all(a >= b for a, b in zip(ms, ms[1:]))

    @pytest.mark.parametrize("seed", range(8))
    def test_lazy_eager_and_debug_agree(self, seed):
        c, t = small_instance(seed)
        kappa = min(3.0, t.num_topics)
        a = fast_greedy(c, t, SolverConfig(kappa=kappa))
        b = fast_greedy(c, t, SolverConfig(kappa=kappa, lazy_word_skip=False, debug=True))
        assert a.links == b.links and a.marginals == b.marginals and a.objective_trace == b.objective_trace

    def test_trace_flag_and_timing(self, rng):
        c, t = random_instance(rng, 5, 4, 10)
        sol = fast_greedy(c, t, SolverConfig(kappa=2, track_trace=False, record_timing=True))
        assert len(sol.objective_trace) == 1
        assert sol.meta["loop_seconds"] >= 0 and sol.meta["init_seconds"] >= 0

    def test_zero_gain_links_fill_the_budget(self):
        c = Corpus.from_counts(("a", "b"), [{0: 1}, {1: 1}])
        phi = np.log([[0.5, 0.5]] * 3)
        sol = fast_greedy(c, phi, SolverConfig(kappa=3))
        ref = simple_greedy(c, phi, 3)
        assert sol.links == ref.links
        assert len(set(sol.links)) == 6
        assert sol.marginals[2:] == [0.0] * 4

    def test_rejects_sub_cover_budget(self, fixture_corpus):
        with pytest.raises(BudgetError):
            fast_greedy(fixture_corpus, TopicMatrix(("x",), np.log([[0.2, 0.3, 0.5]])), SolverConfig(kappa=0.5))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(kappa=0)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), max_size=40))
def test_running_sum_is_correctly_rounded(xs):
    acc = RunningSum()
    for j, x in enumerate(xs):
        assert acc.add(x) == math.fsum(xs[:j + 1])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_fast_greedy_matches_simple_greedy(seed):
    c, t = small_instance(seed, max_docs=8, max_topics=6, max_vocab=20)
    kappa = float(np.random.default_rng(seed).uniform(1, t.num_topics))
    a = fast_greedy(c, t, SolverConfig(kappa=kappa))
    b = simple_greedy(c, t, kappa)
    assert a.links == b.links
    assert a.marginals == b.marginals
    assert a.objective_trace == b.objective_trace
