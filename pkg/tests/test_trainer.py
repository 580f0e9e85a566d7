import io

import numpy as np
import pytest

from swarmsense import (
    CircuitConfig,
    DetectionSpec,
    PsoParams,
    SignalParams,
    Swarm,
    Particle,
    TrainerError,
    TrainingHistory,
    accuracy,
    init_swarm,
    make_loss_evaluator,
    make_rank1_covariance,
    orthonormalize,
    pso_step,
    train,
    uniform_direction,
    update_gbest,
)
from swarmsense.trainer import EpochRecord


class TestAccuracy:
    def test_identical_vectors(self):
        w = uniform_direction(5)
        assert accuracy(w, w) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_vectors(self):
        assert accuracy(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_sign_invariant(self):
        w = orthonormalize(np.array([1.0, 2.0, 3.0])).w
        s = orthonormalize(np.array([0.5, -1.0, 2.0])).w
        assert accuracy(w, s) == accuracy(-w, s)

    def test_haar_mean_is_inverse_m(self):
        rng = np.random.default_rng(0)
        m = 21
        target = uniform_direction(m)
        z = rng.standard_normal((100_000, m))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        vals = (z @ target) ** 2
        se = vals.std() / np.sqrt(vals.size)
        assert abs(vals.mean() - 1 / m) < 3 * se

    def test_rejects_non_unit(self):
        with pytest.raises(TrainerError):
            accuracy(np.array([1.0, 1.0]), np.array([1.0, 0.0]))

    def test_rejects_length_mismatch(self):
        with pytest.raises(TrainerError):
            accuracy(np.array([1.0, 0.0]), np.array([1.0, 0.0, 0.0]))


class TestPsoParams:
    @pytest.mark.parametrize("kwargs", [
        {"particle_count": 1},
        {"inertia": 1.0},
        {"inertia": -0.1},
        {"r_max": 0.0},
        {"forgetting": 1.5},
        {"epochs": 0},
        {"shots_per_eval": 0},
    ])
    def test_rejects_bad_ranges(self, kwargs):
        with pytest.raises(TrainerError):
            PsoParams(**kwargs)


def zero_evaluator(circuit, rng):
    return 0.0


class _FixedUniformRng:
    """Stands in for a Generator when only uniform() draws are consumed."""

    def __init__(self, value):
        self.value = value

    def uniform(self, low, high, size=None):
        return np.full(size, self.value)


class TestPsoStep:
    def test_fixed_point_at_gbest(self):
        w = uniform_direction(4)
        particles = [Particle(w.copy(), np.zeros(4), 0.0) for _ in range(3)]
        swarm = Swarm(particles, w.copy(), 0.0, w.copy(), 0.0)
        params = PsoParams(particle_count=3, epochs=1, shots_per_eval=1)
        out = pso_step(swarm, zero_evaluator, params, np.random.default_rng(0))
        for p in out.particles:
            assert np.allclose(p.position, w, atol=1e-12)

    def test_hand_evaluated_update(self):
        # inertia 0, both draws forced to r: raw position w + 2 r (b - w)
        r = 0.2
        w = np.array([1.0, 0.0, 0.0])
        b = np.array([0.0, 1.0, 0.0])
        particles = [Particle(w.copy(), np.zeros(3), 0.0),
                     Particle(w.copy(), np.zeros(3), 0.0)]
        swarm = Swarm(particles, b.copy(), -1.0, b.copy(), -1.0)
        params = PsoParams(particle_count=2, inertia=0.0, epochs=1, shots_per_eval=1)
        out = pso_step(swarm, zero_evaluator, params, _FixedUniformRng(r))
        raw = w + 2 * r * (b - w)
        assert np.allclose(out.particles[0].velocity, 2 * r * (b - w), atol=1e-12)
        assert np.allclose(out.particles[0].position, raw / np.linalg.norm(raw), atol=1e-12)

    def test_deterministic_given_seed(self):
        cov = make_rank1_covariance(SignalParams(5, 0.1))
        spec = DetectionSpec("counting", "pca", 20)
        evaluator = make_loss_evaluator(spec, cov)
        params = PsoParams(particle_count=4, epochs=1, shots_per_eval=20)

        def run():
            rng = np.random.default_rng(42)
            swarm = init_swarm(5, params, evaluator, rng)
            swarm = pso_step(swarm, evaluator, params, rng)
            return swarm

        a, b = run(), run()
        for pa, pb in zip(a.particles, b.particles):
            assert np.array_equal(pa.position, pb.position)
            assert pa.last_loss == pb.last_loss

    def test_positions_stay_unit_norm_and_orthogonal_to_u(self):
        u = np.zeros(6)
        u[0] = 1.0
        cov = make_rank1_covariance(SignalParams(6, 0.1))
        evaluator = make_loss_evaluator(DetectionSpec("counting", "cca", 5), cov)
        params = PsoParams(particle_count=4, epochs=1, shots_per_eval=5)
        rng = np.random.default_rng(1)
        swarm = init_swarm(6, params, evaluator, rng, u)
        for _ in range(5):
            swarm = pso_step(swarm, evaluator, params, rng)
            for p in swarm.particles:
                assert np.linalg.norm(p.position) == pytest.approx(1.0, abs=1e-12)
                assert abs(p.position @ u) < 1e-10


class TestUpdateGbest:
    def make_swarm(self, best_loss, gbest_loss):
        best = np.array([0.0, 1.0, 0.0])
        gbest = np.array([1.0, 0.0, 0.0])
        return Swarm([], best, best_loss, gbest, gbest_loss)

    def test_improvement_replaces_gbest(self):
        swarm = self.make_swarm(best_loss=-2.0, gbest_loss=-1.0)
        params = PsoParams(forgetting=0.0, epochs=1, shots_per_eval=1)
        out = update_gbest(swarm, zero_evaluator, params, np.random.default_rng(0))
        assert np.array_equal(out.gbest_position, swarm.best_position)
        assert out.gbest_loss == -2.0

    def test_zero_forgetting_keeps_gbest(self):
        swarm = self.make_swarm(best_loss=-0.5, gbest_loss=-1.0)
        params = PsoParams(forgetting=0.0, epochs=1, shots_per_eval=1)
        out = update_gbest(swarm, zero_evaluator, params, np.random.default_rng(0))
        assert np.array_equal(out.gbest_position, swarm.gbest_position)
        assert out.gbest_loss == -1.0

    def test_full_forgetting_adopts_epoch_best(self):
        swarm = self.make_swarm(best_loss=-0.5, gbest_loss=-1.0)
        params = PsoParams(forgetting=1.0, epochs=1, shots_per_eval=1)
        out = update_gbest(swarm, zero_evaluator, params, np.random.default_rng(0))
        assert np.allclose(out.gbest_position, swarm.best_position, atol=1e-12)
        assert out.gbest_loss == 0.0  # freshly sampled from the evaluator

    def test_partial_forgetting_blends(self):
        swarm = self.make_swarm(best_loss=-0.5, gbest_loss=-1.0)
        params = PsoParams(forgetting=0.25, epochs=1, shots_per_eval=1)
        out = update_gbest(swarm, zero_evaluator, params, np.random.default_rng(0))
        blended = 0.75 * swarm.gbest_position + 0.25 * swarm.best_position
        blended /= np.linalg.norm(blended)
        assert np.allclose(out.gbest_position, blended, atol=1e-12)


class TestTrain:
    def test_determinism(self):
        params = PsoParams(particle_count=4, epochs=8, shots_per_eval=10, seed=3)
        kwargs = dict(signal=SignalParams(5, 0.1), pso=params)
        a = train("pca", "counting", **kwargs)
        b = train("pca", "counting", **kwargs)
        assert a.records == b.records
        assert np.array_equal(a.final_gbest, b.final_gbest)

    def test_record_count_matches_epochs(self):
        params = PsoParams(particle_count=3, epochs=7, shots_per_eval=5, seed=0)
        history = train("pca", "counting", SignalParams(4, 0.2), params)
        assert len(history.records) == 7
        assert [r.epoch for r in history.records] == list(range(1, 8))

    def test_zero_signal_stays_at_random_guess(self):
        m = 21
        accs = []
        for seed in range(40):
            params = PsoParams(particle_count=5, epochs=3, shots_per_eval=5, seed=seed)
            history = train("pca", "counting", SignalParams(m, 0.0), params)
            accs.append(history.records[-1].acc_gbest)
        sd = np.sqrt((2 * m - 2) / (m ** 2 * (m + 2)))
        assert abs(np.mean(accs) - 1 / m) < 3 * sd / np.sqrt(len(accs))

    def test_easy_instance_converges(self):
        hits = 0
        for seed in range(10):
            params = PsoParams(epochs=150, shots_per_eval=1000, seed=seed)
            history = train("pca", "counting", SignalParams(2, 0.2), params)
            hits += history.records[-1].acc_gbest >= 0.9
        assert hits >= 8

    def test_cca_requires_u(self):
        with pytest.raises(TrainerError):
            train("cca", "counting", SignalParams(4, 0.1),
                  PsoParams(particle_count=3, epochs=1, shots_per_eval=1))

    def test_history_accuracies_in_unit_interval(self):
        params = PsoParams(particle_count=4, epochs=10, shots_per_eval=20, seed=1)
        history = train("pca", "homodyne", SignalParams(4, 0.3), params)
        for r in history.records:
            assert 0.0 <= r.acc_best <= 1.0
            assert 0.0 <= r.acc_gbest <= 1.0


class TestHistoryCsv:
    def test_roundtrip(self):
        history = TrainingHistory([
            EpochRecord(1, -0.5, -0.25, 0.125, 0.0625),
            EpochRecord(2, -0.75, -0.5, 0.25, 0.5),
        ])
        buf = io.StringIO()
        history.write_csv(buf)
        buf.seek(0)
        back = TrainingHistory.read_csv(buf)
        assert back.records == history.records

    def test_serialize_parse_serialize_identity(self):
        params = PsoParams(particle_count=3, epochs=5, shots_per_eval=10, seed=2)
        history = train("pca", "counting", SignalParams(3, 0.4), params)
        buf = io.StringIO()
        history.write_csv(buf)
        buf.seek(0)
        buf2 = io.StringIO()
        TrainingHistory.read_csv(buf).write_csv(buf2)
        assert buf.getvalue() == buf2.getvalue()

    def test_rejects_wrong_header(self):
        with pytest.raises(TrainerError):
            TrainingHistory.read_csv(io.StringIO("a,b,c\n1,2,3\n"))
