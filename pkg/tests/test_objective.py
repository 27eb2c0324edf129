import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gammaln

from elda.corpus import Corpus, DocRow
from elda.errors import DuplicateLinkError, MissingLinkError
from elda.objective import (Assignment, PlaceholderConfig, assign_words, assignment_from_links,
                            expected_topics_per_doc, likelihood_term, log_posterior_full, marginal_value_naive,
                            objective_f, objective_fdot, resolve_log_p, unconstrained_optimum)
from elda.synthetic import random_instance

LOG_P = math.log(1e-10)


def one_doc(entries, vocab=("a", "b", "c")):
    return Corpus.from_counts(vocab, [entries])


class TestAssignWords:
    def test_singleton_link(self, fixture_corpus):
        phi = np.log([[0.5, 0.3, 0.2], [0.2, 0.3, 0.5]])
        assert assign_words(fixture_corpus.docs[0], {0}, phi) == {0: 0, 1: 0}

    def test_direct_argmax(self):
        doc = DocRow.from_counts({0: 2, 1: 1})
        phi = np.log([[0.8, 0.1, 0.1], [0.1, 0.8, 0.1]])
        assert assign_words(doc, {0, 1}, phi) == {0: 0, 1: 1}

    def test_ties_go_to_lower_topic(self):
        doc = DocRow.from_counts({0: 1, 2: 3})
        phi = np.log([[0.2, 0.3, 0.5]] * 3)
        assert assign_words(doc, {2, 1}, phi) == {0: 1, 2: 1}

    def test_empty_link_set(self):
        with pytest.raises(MissingLinkError):
            assign_words(DocRow.from_counts({0: 1}), set(), np.log([[1.0]]))


class TestObjective:
    def test_f_by_hand(self):
        c = one_doc({0: 2, 1: 1})
        phi = np.log([[0.8, 0.1, 0.1]])
        assert objective_f([(0, 0)], c, phi) == pytest.approx(2 * math.log(0.8) + math.log(0.1), rel=1e-15)

    def test_f_needs_cover(self, fixture_corpus):
        with pytest.raises(MissingLinkError):
            objective_f([(0, 0)], fixture_corpus, np.log(np.full((1, 3), 1 / 3)))

    def test_fdot_empty_and_single_link(self):
        c = one_doc({0: 2, 1: 1})
        phi = np.log([[0.8, 0.1, 0.1]])
        assert objective_fdot([], c, phi, LOG_P) == 0.0
        expect = 2 * (math.log(0.8) - LOG_P) + (math.log(0.1) - LOG_P)
        assert objective_fdot([(0, 0)], c, phi, LOG_P) == pytest.approx(expect, rel=1e-14)

    def test_fdot_differences_match_f_on_covers(self, rng):
        c, t = random_instance(rng, 5, 4, 12)
        e1 = [(0, d) for d in range(5)]
        e2 = e1 + [(1, 0), (2, 3)]
        lp = float(t.scores.min()) - 1.0
        np.testing.assert_allclose(objective_fdot(e2, c, t, lp) - objective_fdot(e1, c, t, lp),
                                   objective_f(e2, c, t) - objective_f(e1, c, t), rtol=1e-9)

    def test_full_link_set_is_unconstrained_optimum(self, rng):
        c, t = random_instance(rng, 4, 3, 10)
        s = t.scores
        expect = math.fsum(float(n) * (s[:, w].max() - LOG_P) for row in c.docs
                           for w, n in zip(row.word_ids, row.counts))
        assert unconstrained_optimum(c, t, LOG_P) == pytest.approx(expect, rel=1e-12)
        full = [(k, d) for d in range(4) for k in range(3)]
        assert objective_f(full, c, t) == pytest.approx(
            math.fsum(float(n) * s[:, w].max() for row in c.docs for w, n in zip(row.word_ids, row.counts)))

    def test_document_separability(self, rng):
        c, t = random_instance(rng, 6, 5, 15)
        links = [(int(rng.integers(5)), int(rng.integers(6))) for _ in range(10)]
        links = list(dict.fromkeys(links))
        total = objective_fdot(links, c, t, LOG_P)
        parts = [objective_fdot([(k, 0) for k, d in links if d == doc],
                                Corpus(c.vocab, (c.docs[doc],), ("x",)), t, LOG_P) for doc in range(6)]
        assert total == pytest.approx(math.fsum(parts), rel=1e-12)

    def test_f_equals_likelihood_of_argmax(self, rng):
        c, t = random_instance(rng, 5, 6, 15)
        links = [(d % 6, d) for d in range(5)] + [(3, 1), (4, 2)]
        assign = assignment_from_links(links, c, t)
        assert objective_f(links, c, t) == pytest.approx(likelihood_term(assign, c, t), rel=1e-12)


class TestMarginal:
    def test_first_link_equals_single_link_value(self, rng):
        c, t = random_instance(rng, 3, 4, 10)
        assert marginal_value_naive([], (2, 1), c, t, LOG_P) == objective_fdot([(2, 1)], c, t, LOG_P)

    def test_useless_topic_is_zero(self):
        c = one_doc({0: 1, 1: 1})
        phi = np.log([[0.5, 0.4, 0.1], [0.4, 0.3, 0.3]])
        assert marginal_value_naive([(0, 0)], (1, 0), c, phi, LOG_P) == 0.0

    def test_duplicate_link(self, fixture_corpus):
        with pytest.raises(DuplicateLinkError):
            marginal_value_naive([(0, 0)], (0, 0), fixture_corpus, np.log(np.full((1, 3), 1 / 3)))


class TestPlaceholder:
    def test_auto_lower_never_raises(self, rng):
        c, t = random_instance(rng, 5, 4, 10)
        assert PlaceholderConfig(-1e6).resolve(t, c) == -1e6
        lp = PlaceholderConfig().resolve(t, c)
        assert lp <= LOG_P and lp < t.scores.min()

    def test_fixed_placeholder_must_be_below_scores(self, rng):
        c, t = random_instance(rng, 5, 4, 10)
        with pytest.raises(ValueError):
            PlaceholderConfig(0.0, auto_lower=False).resolve(t, c)
        assert resolve_log_p(-50.0, t, c) == -50.0

    def test_first_links_outrank_second_links(self, rng):
        c, t = random_instance(rng, 6, 5, 12)
        lp = PlaceholderConfig().resolve(t, c)
        first = min(marginal_value_naive([], (k, d), c, t, lp) for d in range(6) for k in range(5))
        second = max(marginal_value_naive([(a, d)], (b, d), c, t, lp)
                     for d in range(6) for a in range(5) for b in range(5) if a != b)
        assert first > second


class TestLogPosterior:
    def test_gamma_cancellation(self):
        c = one_doc({1: 1})
        phi = np.log([[0.2, 0.5, 0.3]])
        assert log_posterior_full(Assignment([[0]]), c, phi, 1.0) == pytest.approx(math.log(0.5), rel=1e-15)

    def test_term_by_term_on_enumerated_assignments(self):
        c = Corpus.from_counts(("a", "b"), [{0: 2, 1: 1}])
        phi = np.log([[0.7, 0.3], [0.2, 0.8]])
        alpha = np.array([0.5, 2.0])
        w = c.docs[0].tokens()
        for z in itertools.product(range(2), repeat=3):
            n = np.bincount(z, minlength=2)
            expect = (sum(phi[zi, wi] for zi, wi in zip(z, w)) + sum(gammaln(n + alpha))
                      + gammaln(alpha.sum()) - gammaln(alpha.sum() + 3) - sum(gammaln(alpha)))
            got = log_posterior_full(Assignment([np.array(z)]), c, phi, alpha)
            assert got == pytest.approx(expect, rel=1e-12)

    def test_invalid_alpha(self, fixture_corpus):
        a = Assignment([np.zeros(3, int), np.zeros(2, int), np.zeros(1, int)])
        with pytest.raises(ValueError):
            log_posterior_full(a, fixture_corpus, np.log(np.full((1, 3), 1 / 3)), 0.0)


class TestExpectedTopics:
    def test_trivial_cases(self):
        assert expected_topics_per_doc([5, 9, 100], 1)[0] == pytest.approx(1.0)
        assert expected_topics_per_doc([1], 37)[0] == pytest.approx(1.0)

    @pytest.mark.parametrize("k", [50, 100, 500])
    def test_exact_and_approx_agree(self, k):
        exact, approx = expected_topics_per_doc([10, 100, 400], k)
        assert abs(exact - approx) <= 0.01 * approx

    def test_bad_input(self):
        with pytest.raises(ValueError):
            expected_topics_per_doc([0], 10)


@st.composite
def instances_with_nested_sets(draw):
    seed = draw(st.integers(0, 2 ** 32 - 1))
    r = np.random.default_rng(seed)
    n_docs, k = draw(st.integers(1, 5)), draw(st.integers(1, 5))
    c, t = random_instance(r, n_docs, k, 8)
    ground = [(a, d) for d in range(n_docs) for a in range(k)]
    mask_big = draw(st.lists(st.booleans(), min_size=len(ground), max_size=len(ground)))
    mask_small = draw(st.lists(st.booleans(), min_size=len(ground), max_size=len(ground)))
    big = [g for g, m in zip(ground, mask_big) if m]
    small = [g for g, m, s in zip(ground, mask_big, mask_small) if m and s]
    rest = [g for g in ground if g not in big]
    return c, t, small, big, rest


@settings(max_examples=150, deadline=None)
@given(instances_with_nested_sets())
def test_monotone_submodular(case):
    c, t, small, big, rest = case
    assert objective_fdot(small, c, t, LOG_P) <= objective_fdot(big, c, t, LOG_P) + 1e-9
    for a in rest:
        g_small = marginal_value_naive(small, a, c, t, LOG_P)
        g_big = marginal_value_naive(big, a, c, t, LOG_P)
        assert g_small >= g_big - 1e-9
        assert g_big >= 0.0
