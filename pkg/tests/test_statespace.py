import json

import numpy as np
import pytest

from nisynth import (
    StateSpace,
    eval_tf,
    has_zero_at_origin,
    interconnect_positive_feedback,
    is_minimal,
    linalg,
    simulate,
)
from nisynth.errors import (
    InputError,
    PoleProximityError,
    SimulationDivergedError,
)
from nisynth.statespace import load_system

from gen import random_hurwitz, random_skew_nonsingular


def demo_nominal_closed():
    return StateSpace(
        A=np.array([[-1.0, 0, 1, 1], [1, -4, -1, -1], [1, -4, 0, -2],
                    [-3, -8, 12.5, -2.5]]),
        B=np.array([[0.0, 0], [1, 1], [1, 1], [1, 0]]),
        C=np.array([[0.0, 1, 0, 0], [0, 0, 1, 0]]))


class TestEvalTf:
    def test_demo_dc_gain(self):
        R0 = eval_tf(demo_nominal_closed(), 0.0)
        assert np.allclose(R0, [[0.25, 0.25], [0.25, 0.5]], atol=1e-12)

    def test_scalar_dc(self):
        sys = StateSpace(A=[[-1.0]], B=[[1.0]], C=[[1.0]])
        assert np.allclose(eval_tf(sys, 0.0), [[1.0]])

    def test_scalar_at_j(self):
        # hand evaluation: 1/(1+j) = 0.5 - 0.5j
        sys = StateSpace(A=[[-1.0]], B=[[1.0]], C=[[1.0]])
        assert np.allclose(eval_tf(sys, 1j), [[0.5 - 0.5j]])

    def test_pole_proximity(self):
        sys = StateSpace(A=[[-1.0]], B=[[1.0]], C=[[1.0]])
        with pytest.raises(PoleProximityError) as exc:
            eval_tf(sys, -1.0 + 1e-12)
        assert exc.value.pole is not None

    def test_conjugate_symmetry(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            n = int(rng.integers(1, 6))
            sys = StateSpace(A=rng.standard_normal((n, n)),
                             B=rng.standard_normal((n, 2)),
                             C=rng.standard_normal((2, n)))
            s = complex(rng.standard_normal(), rng.standard_normal())
            assert np.allclose(eval_tf(sys, np.conj(s)),
                               np.conj(eval_tf(sys, s)), atol=1e-9)


class TestMinimality:
    def test_demo_plant_minimal(self, demo_plant):
        m = is_minimal(demo_plant)
        assert m.controllable and m.observable

    def test_uncontrollable(self):
        sys = StateSpace(A=np.diag([-1.0, -2.0]), B=[[1.0], [0.0]],
                         C=[[1.0, 1.0]])
        assert not is_minimal(sys).controllable

    def test_scalar_minimal(self):
        sys = StateSpace(A=[[-1.0]], B=[[1.0]], C=[[1.0]])
        assert is_minimal(sys).minimal


class TestZeroAtOrigin:
    def test_demo_plant(self, demo_plant):
        assert not has_zero_at_origin(demo_plant)

    def test_integrator(self):
        sys = StateSpace(A=[[0.0]], B=[[1.0]], C=[[1.0]])
        assert not has_zero_at_origin(sys)

    def test_cancelling_outputs(self):
        # Rosenbrock pencil at s=0 drops rank (oracle: the 3x3 determinant
        # of [[A, B], [C, 0]] vanishes)
        sys = StateSpace(A=np.diag([-1.0, -1.0]), B=[[1.0], [1.0]],
                         C=[[1.0, -1.0]])
        pencil = np.block([[sys.A, sys.B], [sys.C, np.zeros((1, 1))]])
        assert abs(np.linalg.det(pencil)) < 1e-12
        assert has_zero_at_origin(sys)


class TestInterconnect:
    def test_demo_uncertain_loop(self, demo_uncertainty):
        loop = interconnect_positive_feedback(demo_nominal_closed(),
                                              demo_uncertainty)
        assert loop.n == 6
        assert np.max(np.linalg.eigvals(loop.A).real) < 0

    def test_zero_delta_gives_union(self):
        plant = demo_nominal_closed()
        zero = StateSpace(A=[[-3.0]], B=np.zeros((1, 2)), C=np.zeros((2, 1)))
        loop = interconnect_positive_feedback(plant, zero)
        got = np.sort_complex(np.linalg.eigvals(loop.A))
        want = np.sort_complex(np.concatenate(
            [np.linalg.eigvals(plant.A), [-3.0]]))
        assert np.allclose(got, want, atol=1e-9)

    def test_dimension_mismatch(self, demo_plant):
        bad = StateSpace(A=[[-1.0]], B=[[1.0]], C=[[1.0]])
        with pytest.raises(InputError):
            interconnect_positive_feedback(demo_plant, bad)

    def test_static_gain_matches_characteristic_roots(self):
        # oracle: closed poles are roots of q(s) - k n(s), with n
        # reconstructed densely from samples of R(s) q(s)
        rng = np.random.default_rng(29)
        for _ in range(5):
            n = 4
            sys = StateSpace(A=rng.standard_normal((n, n)),
                             B=rng.standard_normal((n, 1)),
                             C=rng.standard_normal((1, n)))
            k = float(rng.uniform(-1.0, 1.0))
            gain = StateSpace(A=np.zeros((0, 0)), B=np.zeros((0, 1)),
                              C=np.zeros((1, 0)), D=[[k]])
            loop = interconnect_positive_feedback(sys, gain)
            q = np.poly(np.linalg.eigvals(sys.A))
            pts = 2.5j * np.exp(2j * np.pi * np.arange(n) / n) + 0.1
            vals = [complex(eval_tf(sys, s)[0, 0]) * np.polyval(q, s)
                    for s in pts]
            V = np.vander(pts, n)
            n_poly = np.linalg.solve(V, vals)
            closed_poly = q - k * np.concatenate([[0.0], n_poly])
            want = np.roots(closed_poly)
            got = np.linalg.eigvals(loop.A)
            dist = np.abs(got[:, None] - want[None, :])
            assert dist.min(axis=0).max() < 1e-6
            assert dist.min(axis=1).max() < 1e-6


class TestSimulate:
    def test_scalar_decay(self):
        sys = StateSpace(A=[[-1.0]], B=[[1.0]], C=[[1.0]])
        traj = simulate(sys, [1.0], t_end=1.0, dt=0.01)
        assert abs(traj.states[-1, 0] - np.exp(-1.0)) < 1e-6

    def test_zero_everything(self):
        sys = StateSpace(A=[[-1.0]], B=[[1.0]], C=[[1.0]])
        traj = simulate(sys, [0.0], t_end=1.0, dt=0.01)
        assert np.all(traj.states == 0.0) and np.all(traj.outputs == 0.0)

    def test_demo_uncertain_loop_decay(self, demo_uncertainty):
        # oracle: asymptotic decay rate is the spectral abscissa of the
        # interconnection (-0.164), so t=20 contracts by roughly e^-3.3
        loop = interconnect_positive_feedback(demo_nominal_closed(),
                                              demo_uncertainty)
        abscissa = float(np.max(np.linalg.eigvals(loop.A).real))
        assert abscissa < 0
        rng = np.random.default_rng(31)
        for _ in range(5):
            x0 = rng.standard_normal(6)
            traj = simulate(loop, x0, t_end=20.0, dt=0.01)
            ratio = np.linalg.norm(traj.states[-1]) / np.linalg.norm(x0)
            assert ratio < 10.0 * np.exp(abscissa * 20.0)

    def test_hurwitz_energy_decreases(self):
        rng = np.random.default_rng(37)
        A = random_hurwitz(rng, 4)
        sys = StateSpace(A=A, B=np.zeros((4, 1)), C=np.eye(4)[:1])
        x0 = rng.standard_normal(4)
        traj = simulate(sys, x0, t_end=30.0, dt=0.01)
        norms = np.linalg.norm(traj.states, axis=1)
        assert norms[-1] < 1e-6 * norms[0]

    def test_marginal_system_bounded(self):
        rng = np.random.default_rng(41)
        S0 = random_skew_nonsingular(rng, 4)
        T = np.eye(4) + 0.3 * rng.standard_normal((4, 4))
        A = np.linalg.solve(T, S0) @ T
        P = linalg.kernel_pd_solution(A)
        lam = np.linalg.eigvalsh(P)
        kappa = float(np.sqrt(lam[-1] / lam[0])) - 1.0
        sys = StateSpace(A=A, B=np.zeros((4, 1)), C=np.eye(4)[:1])
        x0 = rng.standard_normal(4)
        traj = simulate(sys, x0, t_end=25.0, dt=0.005)
        norms = np.linalg.norm(traj.states, axis=1)
        assert norms.max() <= (1.0 + kappa) * np.linalg.norm(x0) * (1 + 1e-6)

    def test_divergence_reported(self):
        sys = StateSpace(A=[[50.0]], B=[[1.0]], C=[[1.0]])
        with pytest.raises(SimulationDivergedError) as exc:
            simulate(sys, [1.0], t_end=100.0, dt=0.5)
        assert exc.value.t_bad is not None

    def test_constant_and_sampled_inputs_agree(self):
        sys = StateSpace(A=[[-1.0]], B=[[1.0]], C=[[1.0]])
        t1 = simulate(sys, [0.0], input_signal=[2.0], t_end=1.0, dt=0.01)
        ts = np.arange(0.0, 1.01, 0.01)
        t2 = simulate(sys, [0.0], input_signal=(ts, 2.0 * np.ones((len(ts), 1))),
                      t_end=1.0, dt=0.01)
        assert np.allclose(t1.states, t2.states)
        assert abs(t1.states[-1, 0] - 2.0 * (1 - np.exp(-1.0))) < 1e-6


class TestJsonSchema:
    def test_round_trip(self, demo_plant, tmp_path):
        path = tmp_path / "sys.json"
        path.write_text(json.dumps(demo_plant.to_dict()))
        loaded = load_system(path)
        assert np.array_equal(loaded.A, demo_plant.A)
        assert np.array_equal(loaded.B, demo_plant.B)
        assert loaded.name == "demo-plant"
        assert np.all(loaded.D == 0.0)

    def test_ragged_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"A": [[1, 0], [1]], "B": [[1], [1]], "C": [[1, 0]]}')
        with pytest.raises(InputError):
            load_system(path)

    def test_invalid_json_reports_line(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"A": [[1,\n 0]')
        with pytest.raises(InputError) as exc:
            load_system(path)
        assert "line" in str(exc.value)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(InputError):
            StateSpace(A=np.eye(2), B=[[1.0]], C=[[1.0, 0.0]])
