import numpy as np
import pytest
import scipy.linalg

from spectral_atlas.curves import envelope_point
from spectral_atlas.integrator import (
    DivergentGainError,
    NetworkSpec,
    build_network,
    build_T,
    beta_for,
    constant_tau_rho1,
    gain,
    impulse_response,
    measured_gain,
    preset_spec,
)
from spectral_atlas.kernel import eig_dense
from spectral_atlas.lowrank import decompose_cofactor, perturbed_matrix

B6 = np.concatenate([np.ones(6), np.zeros(2)])
LAM = -0.05  # 20 s time constant


@pytest.fixture(scope="module")
def normal():
    return build_network(preset="ag_normal")


@pytest.fixture(scope="module")
def normal_dec(normal):
    return decompose_cofactor(normal)


class TestBuildT:
    def test_slow_rate_placed(self):
        T, beta = build_T(6, 200.0, 5.0)
        top = np.max(np.linalg.eigvalsh(200.0 * T))
        assert np.isclose(top, -5.0, atol=1e-9)

    def test_structure(self):
        T, beta = build_T(4, 100.0, 2.0)
        assert np.allclose(np.diag(T), -1.0 + beta)
        assert np.allclose(np.diag(T, 1), beta)
        assert np.count_nonzero(T) == 4 + 2 * 3

    def test_large_N_limit(self):
        assert np.isclose(beta_for(100000, 200.0, 5.0), (1 - 5 / 200) / 3, atol=1e-8)

    def test_validation(self):
        with pytest.raises(ValueError):
            build_T(1, 200.0, 5.0)
        with pytest.raises(ValueError):
            build_T(6, 200.0, 300.0)


class TestBuildNetwork:
    def test_unperturbed_spectrum(self, normal):
        # block triangular: spec(alpha T) plus the double Purkinje rate
        ev = np.sort(eig_dense(normal.M).values.real)
        T, _ = build_T(6, 200.0, 5.0)
        expect = np.sort(np.concatenate([np.linalg.eigvalsh(200.0 * T), [-200.0, -200.0]]))
        assert np.allclose(ev, expect, atol=1e-8)

    def test_feedback_wiring(self, normal):
        A = perturbed_matrix(normal, 0.3, 0.7)
        # rho entries land in the u-slot columns
        assert np.isclose(A[0, 6], -200.0 * 0.3)
        assert np.isclose(A[2, 7], -200.0 * 0.7)

    def test_presets_differ(self):
        a = preset_spec("ag_normal")
        b = preset_spec("ag_in")
        assert not np.array_equal(a.w1, b.w1)
        assert np.array_equal(a.u1, b.u1)

    def test_bad_preset(self):
        with pytest.raises(ValueError):
            preset_spec("nope")
        with pytest.raises(ValueError):
            build_network(preset="custom")

    def test_spec_validation(self):
        e = np.eye(6)
        with pytest.raises(ValueError):
            NetworkSpec(6, 200.0, 5.0, 2 * e[0], e[2], e[1], e[1], B6)
        with pytest.raises(ValueError):
            NetworkSpec(6, 200.0, 5.0, e[0], e[2], e[1][:5], e[1], B6)


class TestConstantTau:
    def test_paper_coefficients(self, normal_dec):
        # rho1 ~ (0.137 + 2.536 rho2) / (1 + 0.371 rho2)
        d = normal_dec
        a = -d.D(LAM) / d.P1(LAM)
        b = -d.P2(LAM) / d.P1(LAM)
        c = d.Q(LAM) / d.P1(LAM)
        assert abs(a - 0.137) < 0.01
        assert abs(b - 2.536) < 0.01
        assert abs(c - 0.371) < 0.01

    def test_eigenvalue_held(self, normal, normal_dec):
        for r2 in np.linspace(0.0, 1.2, 7):
            r1 = constant_tau_rho1(normal_dec, LAM, r2, problem=normal)
            ev = eig_dense(perturbed_matrix(normal, r1, r2)).values
            assert np.min(np.abs(ev - LAM)) < 1e-6

    def test_tangency_first_quadrant(self, normal_dec):
        sols = [s for s in envelope_point(normal_dec, LAM) if s[0] > 0 and s[1] > 0]
        assert len(sols) == 1
        r1, r2 = sols[0]
        assert abs(r2 - 1.22) < 0.01 and abs(r1 - 2.23) < 0.01

    def test_asymptote_raises(self, normal_dec):
        pole = -normal_dec.P1(LAM) / normal_dec.Q(LAM)
        with pytest.raises(ZeroDivisionError):
            constant_tau_rho1(normal_dec, LAM, pole)


class TestGain:
    @pytest.mark.parametrize(
        "r2,predicted", [(0.65, 2.52), (0.955, 5.92), (1.095, 12.88)]
    )
    def test_predicted_operating_points(self, normal, normal_dec, r2, predicted):
        r1 = constant_tau_rho1(normal_dec, LAM, r2)
        g = gain(normal, r1, r2, B6)
        assert abs(g - predicted) <= 0.02 * predicted

    def test_normal_matrix_bounded(self):
        rng = np.random.default_rng(0)
        A = rng.standard_normal((5, 5))
        A = 0.5 * (A + A.T)
        from spectral_atlas.lowrank import LowRankProblem

        f = rng.standard_normal(5)
        p = LowRankProblem(A, f, f)
        b = rng.standard_normal(5)
        g = gain(p, 0.4, 0.0, b)
        assert -1.0 - 1e-9 <= g <= 1.0 + 1e-9

    def test_divergent_at_tangency(self, normal, normal_dec):
        sols = [s for s in envelope_point(normal_dec, LAM) if s[0] > 0 and s[1] > 0]
        r1, r2 = sols[0]
        with pytest.raises(DivergentGainError):
            gain(normal, r1, r2, B6)

    def test_rational_shape_and_pole(self, normal, normal_dec):
        # along the operating curve the gain is a degree-(2,2) rational
        # function of rho2 whose pole is the envelope tangency
        r2s = np.linspace(0.0, 1.15, 24)
        gs = np.array(
            [gain(normal, constant_tau_rho1(normal_dec, LAM, r2), r2, B6) for r2 in r2s]
        )
        A = np.column_stack(
            [np.ones_like(r2s), r2s, r2s**2, -gs * r2s, -gs * r2s**2]
        )
        a0, a1, a2, b1, b2 = np.linalg.lstsq(A, gs, rcond=None)[0]
        fit = (a0 + a1 * r2s + a2 * r2s**2) / (1 + b1 * r2s + b2 * r2s**2)
        assert np.max(np.abs(fit - gs)) < 1e-2
        poles = np.roots([b2, b1, 1.0])
        pole = poles[np.argmin(np.abs(poles - 1.22))]
        assert abs(pole - 1.22) < 0.01


class TestImpulse:
    def test_decay_from_rest_coupling(self, normal):
        t, resp = impulse_response(normal, 0.0, 0.0, B6, t_end=1.0)
        assert resp[0] == pytest.approx(B6 @ B6)
        assert np.max(resp) == resp[0]
        assert resp[-1] < resp[0]

    def test_matches_matrix_exponential(self, normal):
        r1, r2 = 1.0, 0.5
        t, resp = impulse_response(normal, r1, r2, B6, t_end=0.5)
        A = perturbed_matrix(normal, r1, r2)
        for k in [len(t) // 3, len(t) - 1]:
            ref = B6 @ (scipy.linalg.expm(t[k] * A) @ B6)
            assert np.isclose(resp[k], ref, rtol=1e-6, atol=1e-9)

    def test_step_cap_enforced(self, normal):
        with pytest.raises(ValueError):
            impulse_response(normal, 0.0, 0.0, B6, t_end=1.0, dt=1.0)

    @pytest.mark.parametrize(
        "r2,measured", [(0.65, 2.54), (0.955, 5.87), (1.095, 12.53)]
    )
    def test_measured_operating_points(self, normal, normal_dec, r2, measured):
        r1 = constant_tau_rho1(normal_dec, LAM, r2)
        t, resp = impulse_response(normal, r1, r2, B6, t_end=80.0)
        assert abs(measured_gain(resp, B6) - measured) <= 0.03 * measured

    def test_measured_gain_validation(self):
        with pytest.raises(ValueError):
            measured_gain([], B6)
        assert measured_gain(np.zeros(5), B6) == 0.0


class TestMiswiredPreset:
    def test_hopf_before_envelope_on_curve(self):
        p = build_network(preset="ag_in")
        dec = decompose_cofactor(p)
        from spectral_atlas.phase import classify_point

        first_rhp = first_real = None
        prev = None
        for r2 in np.linspace(0.0, 0.6, 121):
            r1 = constant_tau_rho1(dec, LAM, r2)
            lab = classify_point(p, r1, r2)
            if prev is not None:
                if first_rhp is None and lab.n_rhp != prev.n_rhp:
                    first_rhp = r2
                if first_real is None and lab.n_real != prev.n_real:
                    first_real = r2
            prev = lab
        assert first_rhp is not None and first_real is not None
        assert first_rhp < first_real

    def test_oscillation_frequency_matches_pair(self):
        from scipy.optimize import brentq

        p = build_network(preset="ag_in")
        dec = decompose_cofactor(p)

        def pair_real(r2):
            r1 = constant_tau_rho1(dec, LAM, r2)
            ev = eig_dense(perturbed_matrix(p, r1, r2)).values
            ev = ev[np.abs(ev.imag) > 1e-8]
            return float(np.max(ev.real))

        r2c = brentq(pair_real, 0.45, 0.5)
        r1c = constant_tau_rho1(dec, LAM, r2c)
        ev = eig_dense(perturbed_matrix(p, r1c, r2c)).values
        pair = ev[np.abs(ev.imag) > 1e-6]
        om = abs(pair[np.argmax(pair.real)].imag)

        r2 = r2c + 0.005
        r1 = constant_tau_rho1(dec, LAM, r2)
        t, resp = impulse_response(p, r1, r2, B6, t_end=6.0)
        late = resp[len(resp) // 2 :]
        late = late - late.mean()
        freqs = np.fft.rfftfreq(len(late), d=t[1] - t[0]) * 2 * np.pi
        amp = np.abs(np.fft.rfft(late))
        om_meas = freqs[np.argmax(amp[1:]) + 1]
        assert abs(om_meas - om) / om < 0.05
