import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectral_atlas.curves import (
    CurveBranch,
    CurvePoint,
    DegenerateCurveError,
    SymmetricDegeneracyError,
    branches_to_csv,
    constant_eigenvalue_curve,
    envelope,
    envelope_point,
    envelope_q_zero,
    genericity_check,
    hopf_curve,
    hopf_point,
    singular_piece,
    solve_bilinear_rows,
    triple_points,
    zero_curve,
)
from spectral_atlas.kernel import Poly, eig_dense
from spectral_atlas.lowrank import AKDecomposition, decompose_cofactor, perturbed_matrix
from spectral_atlas.presets import SQRT2, example1

LAMSTAR = -2.0 + SQRT2 / 2.0


@pytest.fixture(scope="module")
def dec():
    return decompose_cofactor(example1())


def closed_form_envelope(lam):
    """Benchmark envelope: rho1 = -(l+2)(l+2+s/2) +- (l+2) sqrt(2(l+3/2)(l+5/2))."""
    t = lam + 2.0
    rad = 2.0 * (lam + 1.5) * (lam + 2.5)
    if rad < 1e-8:  # gap, or its boundary where roundoff decides the sign
        return None
    base = -t * (t + SQRT2 / 2.0)
    root = t * np.sqrt(rad)
    return sorted([base - root, base + root])


class TestBilinearSolver:
    def test_linear_case(self):
        # rho1 + rho2 = 3, rho1 - rho2 = 1
        sols = solve_bilinear_rows([-3, 1, 1, 0], [-1, 1, -1, 0])
        assert len(sols) == 1
        assert np.allclose(sols[0], (2.0, 1.0))

    def test_linear_singular_raises(self):
        with pytest.raises(DegenerateCurveError):
            solve_bilinear_rows([1, 1, 1, 0], [2, 2, 2, 0])

    def test_two_solutions(self):
        # rho1 rho2 = 1, rho1 + rho2 = 2.5 -> (2, 1/2) and (1/2, 2)
        sols = solve_bilinear_rows([-1, 0, 0, 1], [-2.5, 1, 1, 0])
        assert len(sols) == 2
        got = sorted(sols)
        assert np.allclose(got[0], (0.5, 2.0))
        assert np.allclose(got[1], (2.0, 0.5))

    def test_gap(self):
        # rho1 rho2 = 1, rho1 + rho2 = 1: discriminant negative
        assert solve_bilinear_rows([-1, 0, 0, 1], [-1, 1, 1, 0]) == []

    @given(st.floats(-3, 3), st.floats(-3, 3))
    @settings(max_examples=40, deadline=None)
    def test_solutions_satisfy_rows(self, s, p):
        a = np.array([0.7, -1.2, 0.9, 0.31])
        b = np.array([s, 1.0, p, -0.45])
        try:
            sols = solve_bilinear_rows(a, b)
        except DegenerateCurveError:
            return
        for r1, r2 in sols:
            for row in (a, b):
                v = row[0] + row[1] * r1 + row[2] * r2 + row[3] * r1 * r2
                assert abs(v) < 1e-6 * max(1.0, abs(r1), abs(r2)) ** 2


class TestConstantCurve:
    def test_benchmark_zero_curve(self, dec):
        # rho1 = -(12 + (4-2s2) rho2) / ((4-2s2) + rho2 * (-1)) at lambda = 0
        c = 4.0 - 2.0 * SQRT2
        br = zero_curve(dec, np.linspace(-5, 5, 41))
        for p in br.points:
            expect = -(12.0 + c * p.rho2) / (c - p.rho2)
            assert np.isclose(p.rho1, expect, rtol=1e-9, atol=1e-9)

    def test_eigenvalue_held(self, dec):
        lam = -0.7
        br = constant_eigenvalue_curve(dec, lam, np.linspace(-3, 3, 13))
        p = example1()
        for pt in br.points[::3]:
            ev = eig_dense(perturbed_matrix(p, pt.rho1, pt.rho2)).values
            assert np.min(np.abs(ev - lam)) < 1e-8

    def test_pole_records_gap(self, dec):
        # denominator P1 + rho2 Q vanishes at rho2 = P1(0) = 4 - 2 sqrt(2)
        pole = 4.0 - 2.0 * SQRT2
        br = zero_curve(dec, np.linspace(pole - 0.05, pole + 0.05, 11))
        assert len(br.gaps) == 1 or len(br.points) < 11


class TestEnvelope:
    def test_closed_form_grid(self, dec):
        for lam in np.linspace(-4, 0, 81):
            cf = closed_form_envelope(lam)
            sols = envelope_point(dec, lam)
            if cf is None:
                assert sols == [] or -2.5 < lam < -1.5
                continue
            if -2.5 < lam < -1.5:
                continue
            got = sorted(r1 for r1, _ in sols)
            if len(got) == 1:
                got = [got[0], got[0]]
            assert np.allclose(got, cf, atol=1e-8)

    def test_double_eigenvalue_on_curve(self, dec):
        p = example1()
        for lam in [-3.2, -1.1, -0.4]:
            for r1, r2 in envelope_point(dec, lam):
                ev = eig_dense(perturbed_matrix(p, r1, r2)).values
                close = np.sort(np.abs(ev - lam))
                # double roots amplify backward error by a square root
                assert close[0] < 1e-5 and close[1] < 1e-5

    def test_gap_interval(self, dec):
        assert envelope_point(dec, -2.0) == []
        assert envelope_point(dec, -2.49) == []
        assert envelope_point(dec, -1.51) == []

    def test_branches_and_gaps(self, dec):
        brs = envelope(dec, np.linspace(-4, 0, 101))
        assert {b.branch for b in brs} == {"+", "-"}
        for b in brs:
            assert len(b.gaps) == 1
            lo, hi = b.gaps[0]
            assert lo < -1.5 and hi > -2.5 or (lo >= -2.6 and hi <= -1.4)

    def test_passes_origin(self, dec):
        # at lambda = -2 + eps both branches approach rho = 0
        sols = envelope_point(dec, -1.5 + 1e-6)
        assert sols  # just outside the gap

    def test_mirror_symmetry(self, dec):
        # the benchmark has P1 = P2, so the envelope is symmetric in rho1<->rho2
        for lam in [-3.0, -1.0]:
            sols = envelope_point(dec, lam)
            assert len(sols) == 2
            (a1, a2), (b1, b2) = sols
            assert np.isclose(a1, b2, atol=1e-8) and np.isclose(a2, b1, atol=1e-8)


class TestEnvelopeQZero:
    def test_matches_generic_solver(self):
        # build a rank-two problem with parallel g's: Q = 0 exactly
        rng = np.random.default_rng(3)
        from spectral_atlas.lowrank import LowRankProblem

        A = rng.standard_normal((5, 5))
        g = rng.standard_normal(5)
        p = LowRankProblem(A, rng.standard_normal(5), g, rng.standard_normal(5), 1.7 * g)
        d = decompose_cofactor(p)
        assert d.Q.is_zero
        lam = 0.3
        r1, r2 = envelope_q_zero(d, lam)
        sols = envelope_point(d, lam)
        assert len(sols) == 1
        assert np.allclose(sols[0], (r1, r2), atol=1e-7)


class TestGenericity:
    def test_generic_interior(self, dec):
        assert genericity_check(dec, -1.0) == "generic"
        assert genericity_check(dec, -3.4) == "generic"

    def test_c1_at_cusp(self, dec):
        assert genericity_check(dec, LAMSTAR) == "C1"

    def test_singular_piece_lines(self, dec):
        piece = singular_piece(dec, LAMSTAR)
        assert np.isclose(piece["rho1_line"], -0.5, atol=1e-8)
        assert np.isclose(piece["rho2_line"], -0.5, atol=1e-8)

    def test_singular_piece_rejects_generic(self, dec):
        with pytest.raises(DegenerateCurveError):
            singular_piece(dec, -1.0)

    def test_singular_lines_are_eigen_loci(self, dec):
        # on the line rho1 = -1/2 the benchmark keeps lambda* as an eigenvalue
        p = example1()
        for r2 in [-2.0, 0.0, 1.5]:
            ev = eig_dense(perturbed_matrix(p, -0.5, r2)).values
            assert np.min(np.abs(ev - LAMSTAR)) < 1e-6


class TestHopf:
    def test_pure_imaginary_pair(self, dec):
        p = example1()
        for om in [0.5, 1.0, 2.0]:
            for r1, r2 in hopf_point(dec, om):
                ev = eig_dense(perturbed_matrix(p, r1, r2)).values
                assert np.min(np.abs(ev - 1j * om)) < 1e-7

    def test_closed_form(self, dec):
        # rho1 = (4+s2)(4 om^2 - 14 +- sqrt(30(18 - 8 s2 + (1-2 s2) om^2 + om^4)))/14
        for om in [0.3, 1.0, 1.7]:
            rad = 30.0 * (18.0 - 8.0 * SQRT2 + (1.0 - 2.0 * SQRT2) * om**2 + om**4)
            cf = sorted(
                (4.0 + SQRT2) * (4.0 * om**2 - 14.0 + s * np.sqrt(rad)) / 14.0
                for s in (-1.0, 1.0)
            )
            got = sorted(r1 for r1, _ in hopf_point(dec, om))
            assert np.allclose(got, cf, atol=1e-7)

    def test_zero_frequency_limit_exact(self, dec):
        # at omega -> 0 the curve meets the envelope and the zero curve at
        # rho1 = -(4+s2) +- sqrt(30), rho2 the mirror
        target = sorted([-(4.0 + SQRT2) + np.sqrt(30.0), -(4.0 + SQRT2) - np.sqrt(30.0)])
        got = sorted(r1 for r1, _ in hopf_point(dec, 1e-6))
        assert np.allclose(got, target, atol=1e-4)
        env = sorted(r1 for r1, _ in envelope_point(dec, 0.0))
        assert np.allclose(env, target, atol=1e-9)

    def test_branches(self, dec):
        brs = hopf_curve(dec, np.linspace(0.1, 2.0, 50))
        assert all(len(b.points) == 50 for b in brs)


class TestTriplePoints:
    def test_benchmark_triples(self, dec):
        tps = triple_points(dec, (-4.0, 0.0))
        assert len(tps) == 2
        pts = sorted((round(t["rho1"], 6), round(t["rho2"], 6)) for t in tps)
        assert pts == [(-1.5, -0.5), (-0.5, -1.5)]
        for t in tps:
            assert abs(t["lam"] - LAMSTAR) < 1e-8

    def test_triple_eigenvalue_verified(self, dec):
        p = example1()
        for t in triple_points(dec, (-4.0, 0.0)):
            ev = np.sort_complex(eig_dense(perturbed_matrix(p, t["rho1"], t["rho2"])).values)
            close = np.sort(np.abs(ev - t["lam"]))
            # triple roots amplify backward error by a cube root
            assert np.all(close[:3] < 1e-3)

    def test_spurious_candidate_rejected(self, dec):
        # the compatibility condition also vanishes near lambda = -2.354,
        # where no real triple point exists
        tps = triple_points(dec, (-4.0, 0.0))
        assert all(abs(t["lam"] + 2.3539) > 0.5 for t in tps)

    def test_symmetric_degeneracy_raised(self):
        # P1 = P2 = Q = 0: identically satisfied condition
        zero = Poly.zero()
        d = AKDecomposition(Poly([1.0, 2.0, 1.0]), zero, zero, zero)
        with pytest.raises(SymmetricDegeneracyError):
            triple_points(d, (-2.0, 0.0))


class TestCsv:
    def test_roundtrippable_text(self, dec):
        brs = envelope(dec, np.linspace(-4, 0, 21))
        text = branches_to_csv(brs)
        lines = text.strip().splitlines()
        assert lines[0] == "kind,branch,parameter,rho1,rho2"
        data = [l for l in lines if not l.startswith("#")][1:]
        first = data[0].split(",")
        assert first[0] == "envelope" and first[1] in "+-"
        float(first[2]), float(first[3]), float(first[4])
        assert any(l.startswith("# gap") for l in lines)
