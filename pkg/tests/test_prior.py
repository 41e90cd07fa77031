import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crisp.data import SinglePositiveDataset
from crisp.prior import (
    EstimatorConfig,
    MissingPositivesError,
    estimate_all_priors,
    estimate_prior,
    q_hat,
    q_hat_p,
    ucb_objective,
)
from crisp.synth import score_fixture
from oracles import exhaustive_threshold, ucb_objective_by_hand

SCORES = [0.9, 0.8, 0.7, 0.4, 0.3, 0.1]
LABELED = [0, 2]
CFG = EstimatorConfig(delta=0.5, tau=0.01)


class TestEmpiricalCdfs:
    def test_q_hat(self):
        assert q_hat(SCORES, 0.7) == 0.5
        assert q_hat(SCORES, 0.0) == 1.0
        assert q_hat([0.5, 0.5], 0.5) == 1.0

    def test_q_hat_p(self):
        assert q_hat_p(SCORES, LABELED, 0.8) == 0.5
        assert q_hat_p(SCORES, LABELED, 0.7) == 1.0

    def test_errors(self):
        with pytest.raises(ValueError):
            q_hat([], 0.5)
        with pytest.raises(ValueError, match="no observed positives"):
            q_hat_p(SCORES, [], 0.5)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0, 1), min_size=2, max_size=40), st.data())
    def test_monotone(self, scores, data):
        lab = data.draw(st.lists(st.integers(0, len(scores) - 1), min_size=1, unique=True))
        zs = np.sort(np.unique(scores))
        q = [q_hat(scores, z) for z in zs]
        qp = [q_hat_p(scores, lab, z) for z in zs]
        assert all(a >= b for a, b in zip(q, q[1:]))
        assert all(a >= b for a, b in zip(qp, qp[1:]))


class TestObjective:
    def test_worked_values(self):
        pen = math.sqrt(math.log(8) / 12) + math.sqrt(math.log(8) / 4)
        assert ucb_objective(SCORES, LABELED, 0.7, CFG) == pytest.approx(0.5 + 1.01 * pen, abs=1e-12)
        assert ucb_objective(SCORES, LABELED, 0.7, CFG) == pytest.approx(1.6487, abs=1e-4)
        assert ucb_objective(SCORES, LABELED, 0.9, CFG) == pytest.approx(2.6307, abs=1e-4)

    def test_zero_qp_rejected(self):
        with pytest.raises(ValueError):
            ucb_objective(SCORES, LABELED, 0.95, CFG)

    def test_penalty_vanishes_in_the_limit(self):
        # huge n and n_p, tiny tau: objective -> ratio
        scores = np.repeat(SCORES, 200_000)
        lab = np.flatnonzero(np.isin(scores, [0.9, 0.7]))
        cfg = EstimatorConfig(delta=0.5, tau=1e-9)
        assert ucb_objective(scores, lab, 0.7, cfg) == pytest.approx(0.5, abs=5e-3)

    def test_config_validation(self):
        for bad in (0.0, 1.0, -0.1):
            with pytest.raises(ValueError):
                EstimatorConfig(delta=bad)
            with pytest.raises(ValueError):
                EstimatorConfig(tau=bad)


class TestEstimatePrior:
    def test_worked_example(self):
        pi, z, obj = estimate_prior(SCORES, LABELED, CFG)
        oz, oratio, oobj = exhaustive_threshold(SCORES, LABELED, 0.5, 0.01)
        assert (z, pi) == (0.7, 0.5)
        assert z == oz and abs(pi - oratio) <= 1e-12 and abs(obj - oobj) <= 1e-12

    def test_constant_scores(self):
        pi, z, _ = estimate_prior([0.7] * 5, [1, 3], EstimatorConfig())
        assert (pi, z) == (1.0, 0.7)

    def test_two_candidates(self):
        pi, z, _ = estimate_prior([1.0, 1.0, 0.0, 0.0], [0, 1], CFG)
        assert (z, pi) == (1.0, 0.5)

    def test_empty_labeled(self):
        with pytest.raises(ValueError):
            estimate_prior(SCORES, [], CFG)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.sampled_from([0.0, 0.1, 0.25, 0.5, 0.6, 0.9, 1.0]), min_size=1, max_size=30),
           st.data(), st.sampled_from([0.01, 0.1, 0.5]), st.sampled_from([0.01, 0.5]))
    def test_matches_exhaustive_oracle(self, scores, data, delta, tau):
        lab = data.draw(st.lists(st.integers(0, len(scores) - 1), min_size=1, unique=True))
        pi, z, obj = estimate_prior(scores, lab, EstimatorConfig(delta, tau))
        oz, oratio, oobj = exhaustive_threshold(scores, lab, delta, tau)
        assert z == oz
        assert obj == pytest.approx(oobj, rel=1e-12)
        assert pi == pytest.approx(min(max(oratio, 1 / len(scores)), 1.0), rel=1e-12)
        assert 1 / len(scores) <= pi <= 1.0
        assert any(scores[i] >= z for i in lab)

    def test_ratio_invariant_under_duplication(self):
        rng = np.random.default_rng(5)
        s = rng.random(50)
        lab = np.arange(0, 50, 4)
        s2 = np.concatenate([s, s])
        lab2 = np.concatenate([lab, lab + 50])
        for z in np.unique(s)[:20]:
            if q_hat_p(s, lab, z) == 0:
                continue
            r1 = q_hat(s, z) / q_hat_p(s, lab, z)
            r2 = q_hat(s2, z) / q_hat_p(s2, lab2, z)
            assert r1 == pytest.approx(r2, rel=1e-15)
        # the penalty does shrink, so the objective changes
        z = np.sort(s[lab])[0]
        assert ucb_objective(s2, lab2, z, CFG) < ucb_objective(s, lab, z, CFG)

    def test_deterministic(self):
        s, lab, _ = score_fixture(2000, 0.3, seed=3)
        assert estimate_prior(s, lab, EstimatorConfig()) == estimate_prior(s, lab, EstimatorConfig())


class TestEstimateAll:
    def _sp(self, gamma, c):
        return SinglePositiveDataset(np.zeros((len(gamma), 1)), np.array(gamma), c)

    def test_single_label_reduces(self):
        sp = self._sp([0] * 6, 1)
        P = np.array(SCORES)[:, None]
        # every row observed -> labeled set is everything
        est = estimate_all_priors(P, sp, CFG)
        assert (est.pi_hat[0], est.z_hat[0], est.objective[0]) == estimate_prior(SCORES, range(6), CFG)

    def test_constant_column(self):
        sp = self._sp([0, 1, 0, 1], 2)
        P = np.column_stack([[0.3] * 4, [0.1, 0.9, 0.2, 0.8]])
        est = estimate_all_priors(P, sp, EstimatorConfig())
        assert est.pi_hat[0] == 1.0
        assert est.n_p.tolist() == [2, 2]

    def test_missing_label(self):
        sp = self._sp([0, 0, 2], 3)
        P = np.full((3, 3), 0.5)
        with pytest.raises(MissingPositivesError, match="label 1") as exc:
            estimate_all_priors(P, sp, EstimatorConfig())
        assert exc.value.label == 1
        est = estimate_all_priors(P, sp, EstimatorConfig(), previous=[0.2, 0.3, 0.4])
        assert est.pi_hat[1] == 0.3 and est.reused.tolist() == [False, True, False]

    def test_separable_monte_carlo(self):
        s, lab, pi = score_fixture(10_000, 0.3, 0.6, 1.0, 0.0, 0.4, 0.2, seed=11)
        sp_obs = np.full(s.size, 1)
        sp_obs[lab] = 0
        sp = self._sp(sp_obs, 2)
        P = np.column_stack([s, np.full(s.size, 0.5)])
        est = estimate_all_priors(P, sp, EstimatorConfig())
        assert 0.25 <= est.pi_hat[0] <= 0.35
        assert pi == 0.3
