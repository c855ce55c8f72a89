import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fairdyn.distributions import Gaussian
from fairdyn.evolution import (EvolutionModel, StepSchedule, feedback_signal, role_model_count,
                               role_model_fraction, role_model_fraction_asymptotic, step_size,
                               update_theta)
from fairdyn.policy import Institution, mfg_policy, threshold_set

CAPS = (0.1, 0.05, 0.2)
probs = st.floats(0.0, 1.0)


class TestStepSchedule:
    def test_fixed(self):
        s = StepSchedule("fixed", 0.5)
        assert all(step_size(s, t) == 0.5 for t in (0, 7, 10_000))

    def test_decaying_first(self):
        assert StepSchedule("decaying", 1.0, 1.0)(0) == 1.0

    def test_robbins_monro(self):
        s = StepSchedule("decaying", 1.0, 1.0)
        eta = np.array([s(t) for t in range(1_000_000)])
        # harmonic partial sums keep growing, squared ones settle at pi^2/6
        assert eta[:1_000_000].sum() - eta[:1000].sum() > 6.0
        assert abs((eta ** 2).sum() - math.pi ** 2 / 6) < 1e-5

    @pytest.mark.parametrize("exp", [0.5, 0.3, 1.2])
    def test_rejects_bad_exponent(self, exp):
        with pytest.raises(ValueError):
            StepSchedule("decaying", 1.0, exp)

    def test_rejects_negative_round(self):
        with pytest.raises(ValueError):
            StepSchedule()(-1)


class TestUpdate:
    def test_zero_drift(self):
        assert update_theta(EvolutionModel(), 0.3, 0.25, 0.25, 0) == 0.3

    def test_pure_example(self):
        assert update_theta(EvolutionModel(), 0.25, 0.33, 0.25, 0) == pytest.approx(0.29, abs=1e-15)

    def test_order_amplifies_small_drift(self):
        m = EvolutionModel("order", beta=0.8)
        step = update_theta(m, 0.5, 0.33, 0.25, 0) - 0.5
        assert step == pytest.approx(0.5 * 0.08 ** 0.8)
        assert step > 0.5 * 0.08

    @given(st.floats(0.05, 0.95), probs, probs, st.floats(0.2, 3.0))
    def test_drift_sign(self, theta, signal, s, beta):
        for m in (EvolutionModel(), EvolutionModel("order", beta=beta)):
            new = update_theta(m, theta, signal, s, 0, epsilon=1e-9)
            raw_ok = 1e-9 < new < 1 - 1e-9
            if raw_ok and abs(signal - s) > 1e-9:
                assert np.sign(new - theta) == np.sign(signal - s)

    @given(st.floats(0.01, 0.99), st.lists(probs, min_size=3, max_size=3), probs)
    def test_reduction_identities(self, theta, actions, s):
        pure = EvolutionModel()
        sig = feedback_signal(pure, actions, CAPS)
        w = EvolutionModel("weighted", weights=CAPS)
        assert feedback_signal(w, actions, CAPS) == pytest.approx(sig, abs=1e-12)
        o = EvolutionModel("order", beta=1.0)
        assert update_theta(o, theta, sig, s, 3) == update_theta(pure, theta, sig, s, 3)


class TestRoleModel:
    def test_hand_example(self):
        assert role_model_fraction([9, 7], [8, 6], 0.5, 0.3) == 0.5

    def test_r_one_is_action(self):
        assert role_model_fraction([9, 7, 1], [8, 6], 1.0, 0.3) == 0.6

    def test_empty_set_is_neutral(self):
        assert role_model_fraction([9], [8], 0.4, 0.37) == 0.37

    def test_tie_majority_first(self):
        assert role_model_fraction([5.0], [5.0], 0.5, 0.3) == 0.0

    def test_count(self):
        assert role_model_count(0.29, 100) == 29
        assert role_model_count(0.5, 7) == 3

    @given(st.floats(0.01, 1.0), st.floats(0.01, 1.0), st.integers(0, 400))
    def test_count_monotone_in_r(self, r1, r2, A):
        lo, hi = min(r1, r2), max(r1, r2)
        assert role_model_count(lo, A) <= role_model_count(hi, A)

    @given(st.lists(st.floats(-5, 5), min_size=0, max_size=20),
           st.lists(st.floats(-5, 5), min_size=0, max_size=20), st.floats(0.05, 1.0))
    def test_fraction_bounded(self, x0, x1, r):
        if not x0 and not x1:
            return
        v = role_model_fraction(x0, x1, r, 0.5)
        assert 0.0 <= v <= 1.0

    def test_brute_force_agrees(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            x0 = rng.normal(size=rng.integers(0, 15))
            x1 = rng.normal(size=rng.integers(1, 15))
            r = rng.uniform(0.05, 1)
            n = role_model_count(r, x0.size + x1.size)
            if n == 0:
                continue
            tagged = sorted([(v, 1) for v in x0] + [(v, 0) for v in x1], key=lambda t: -t[0])
            ref = sum(g for _, g in tagged[:n]) / n
            assert role_model_fraction(x0, x1, r, 0.5) == pytest.approx(ref)

    def test_signal_r_one_equals_pure(self):
        m_role = EvolutionModel("role_model", role_fraction=1.0)
        acts = [0.3, 0.5, 0.2]
        assert feedback_signal(m_role, acts, CAPS, role_fractions=acts) == feedback_signal(
            EvolutionModel(), acts, CAPS)


class TestRoleModelAsymptotic:
    def _setup(self, s=0.3):
        dists = (Gaussian(5, 1), Gaussian(5, 1))
        insts = [Institution(c, 0.75) for c in CAPS]
        prof = mfg_policy(s, dists, insts, 0.4)
        ths = threshold_set(s, prof.actions, dists, CAPS)
        return dists, prof, ths

    def test_r_one_returns_action(self):
        dists, prof, ths = self._setup()
        for k, a in enumerate(prof.actions):
            assert role_model_fraction_asymptotic(0.3, a, ths[k], dists, CAPS[k], 1.0) == a

    def test_matches_large_sample(self):
        # Monte Carlo: draw a big pool, apply the thresholds, keep the top half of admits.
        s = 0.3
        dists, prof, ths = self._setup(s)
        rng = np.random.default_rng(4)
        n = 2_000_000
        x0 = rng.normal(5, 1, int(s * n))
        x1 = rng.normal(5, 1, int((1 - s) * n))
        for k in range(3):
            th = ths[k]
            a0 = x0[(x0 >= th.lower[0]) & (x0 <= th.upper[0])]
            a1 = x1[(x1 >= th.lower[1]) & (x1 <= th.upper[1])]
            mc = role_model_fraction(a0, a1, 0.5, s)
            ref = role_model_fraction_asymptotic(s, prof.actions[k], th, dists, CAPS[k], 0.5)
            assert ref == pytest.approx(mc, abs=0.01)

    def test_minority_underrepresented_above_alpha_target(self):
        # Top slots go mostly to the group not boosted by the fairness term.
        s = 0.25
        dists, prof, ths = self._setup(s)
        pi_r = sum(c * role_model_fraction_asymptotic(s, a, ths[k], dists, c, 0.5)
                   for k, (a, c) in enumerate(zip(prof.actions, CAPS))) / sum(CAPS)
        assert pi_r < s


def test_model_validation():
    with pytest.raises(ValueError):
        EvolutionModel("nope")
    with pytest.raises(ValueError):
        EvolutionModel("order", beta=0)
    with pytest.raises(ValueError):
        EvolutionModel("weighted", weights=(1.0, -1.0))
    with pytest.raises(ValueError):
        EvolutionModel("role_model", role_fraction=0.0)
