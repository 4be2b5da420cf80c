import numpy as np
import pytest

from alqa.errors import ContractError
from alqa.evidential import (
    anneal_coefficient,
    dirichlet_kl_uniform,
    evidence_from_logits,
    evidential_loss,
    from_evidence,
    logits_loss_and_grad,
    loss_batch,
    loss_grad_batch,
)


class TestEvidentialOutput:
    def test_zero_evidence_is_maximally_uncertain(self):
        o = from_evidence([0.0, 0.0])
        assert np.array_equal(o.alpha, [1.0, 1.0])
        assert o.strength == 2.0
        assert o.uncertainty == 1.0
        assert np.array_equal(o.probabilities, [0.5, 0.5])

    def test_arithmetic_example(self):
        o = from_evidence([9.0, 0.0])
        assert np.array_equal(o.alpha, [10.0, 1.0])
        assert o.strength == 11.0
        assert o.uncertainty == pytest.approx(2 / 11, abs=1e-12)
        np.testing.assert_allclose(o.probabilities, [10 / 11, 1 / 11], atol=1e-12)

    def test_uncertainty_decoupled_from_probabilities(self):
        o = from_evidence([4.0, 4.0])
        assert o.uncertainty == pytest.approx(0.2, abs=1e-12)
        np.testing.assert_allclose(o.probabilities, [0.5, 0.5], atol=1e-12)

    def test_invariants_over_random_vectors(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            k = int(rng.integers(2, 5))
            o = from_evidence(rng.uniform(0, 50, size=k))
            assert np.all(o.alpha >= 1.0)
            assert o.strength >= k
            assert 0.0 < o.uncertainty <= 1.0
            assert abs(o.probabilities.sum() - 1.0) <= 1e-9
            assert abs(o.uncertainty - k / o.strength) <= 1e-9

    def test_negative_evidence_rejected(self):
        with pytest.raises(ContractError):
            from_evidence([-0.1, 1.0])


class TestLoss:
    def test_hand_value_at_uniform(self):
        # alpha=(1,1), y=(1,0), lam=0: (0.5^2+0.5^2) + 2*(0.25/3)
        assert loss_batch([0.0, 0.0], [1.0, 0.0], 0.0) == pytest.approx(2 / 3, abs=1e-12)

    def test_kl_of_uniform_is_zero(self):
        assert dirichlet_kl_uniform(np.ones(2)) == pytest.approx(0.0, abs=1e-14)
        assert dirichlet_kl_uniform(np.ones(5)) == pytest.approx(0.0, abs=1e-14)

    def test_confident_correct_prediction_drives_loss_to_zero(self):
        for t in (1e3, 1e5, 1e7):
            assert loss_batch([t, 0.0], [1.0, 0.0], 1.0) < 10 / t

    def test_loss_nonnegative(self):
        rng = np.random.default_rng(1)
        for _ in range(300):
            e = rng.uniform(0, 30, size=2)
            y = np.zeros(2)
            y[rng.integers(2)] = 1.0
            assert loss_batch(e, y, rng.uniform(0, 1)) >= 0.0

    def test_non_onehot_rejected(self):
        with pytest.raises(ContractError):
            loss_batch([1.0, 1.0], [0.5, 0.5], 0.0)
        with pytest.raises(ContractError):
            loss_batch([1.0, 1.0], [1.0, 1.0], 0.0)

    def test_epoch_interface_and_annealing(self):
        out = from_evidence([2.0, 1.0])
        y = np.array([1.0, 0.0])
        l0 = evidential_loss(out, y, epoch=0, kl_anneal_epochs=10)
        l5 = evidential_loss(out, y, epoch=5, kl_anneal_epochs=10)
        l20 = evidential_loss(out, y, epoch=20, kl_anneal_epochs=10)
        assert l0 < l5 < l20  # KL weight ramps up
        assert anneal_coefficient(5, 10) == 0.5
        assert anneal_coefficient(20, 10) == 1.0


class TestGradient:
    def test_matches_central_finite_differences(self):
        rng = np.random.default_rng(2)
        h = 1e-5
        for _ in range(100):
            e = rng.uniform(0.01, 10.0, size=2)
            y = np.zeros(2)
            y[rng.integers(2)] = 1.0
            lam = rng.uniform(0.0, 1.0)
            _, grad = loss_grad_batch(e, y, lam)
            for j in range(2):
                ep, em = e.copy(), e.copy()
                ep[j] += h
                em[j] -= h
                num = (loss_batch(ep, y, lam) - loss_batch(em, y, lam)) / (2 * h)
                rel = abs(num - grad[j]) / max(abs(num), abs(grad[j]), 1e-10)
                assert rel <= 1e-4

    def test_logits_chain_rule(self):
        rng = np.random.default_rng(3)
        z = rng.normal(0, 2, size=(4, 2))
        y = np.zeros((4, 2))
        y[np.arange(4), rng.integers(0, 2, 4)] = 1.0
        loss, dz = logits_loss_and_grad(z, y, 0.3)
        h = 1e-6
        for i in range(4):
            for j in range(2):
                zp, zm = z.copy(), z.copy()
                zp[i, j] += h
                zm[i, j] -= h
                lp = logits_loss_and_grad(zp, y, 0.3)[0]
                lm = logits_loss_and_grad(zm, y, 0.3)[0]
                num = (lp - lm) / (2 * h)
                assert abs(num - dz[i, j]) <= 1e-6 + 1e-4 * abs(num)

    def test_evidence_from_logits_nonnegative(self):
        z = np.linspace(-50, 50, 101)
        e = evidence_from_logits(z)
        assert np.all(e >= 0)
        assert e[0] == pytest.approx(0.0, abs=1e-12)
