import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freeconv.errors import (InversionDiverged, NotCentered,
                             NotUpperHalfPlane)
from freeconv.inversion import kolmogorov, measure_to_cdf
from freeconv.measures import bernoulli_measure, make_atomic, semicircle_measure
from freeconv.ncpart import moments_to_cumulants
from freeconv.transforms import (c1_index, cauchy, nevanlinna_sigma,
                                 newton_invert, reciprocal_cauchy,
                                 reciprocal_pair, voiculescu)

GOLDEN = (np.sqrt(5) - 1) / 2          # Im of -G_semicircle(i)


def delta(x):
    return make_atomic([(x, 1.0)])


def semicircle_G(z):
    z = np.asarray(z, dtype=complex)
    s = np.sqrt(z - 2) * np.sqrt(z + 2)
    return 2.0 / (z + s)


upper_points = st.builds(complex, st.floats(-5, 5), st.floats(0.05, 10))


class TestCauchy:
    @given(upper_points)
    def test_dirac(self, z):
        assert cauchy(delta(0.0), z) == pytest.approx(1 / z, rel=1e-12)

    def test_bernoulli_at_i(self):
        assert cauchy(bernoulli_measure(), 1j) == pytest.approx(-0.5j)

    def test_semicircle_at_i(self):
        g = cauchy(semicircle_measure(2001), 1j)
        assert g == pytest.approx(1j * (1 - np.sqrt(5)) / 2, abs=1e-4)

    def test_semicircle_against_closed_form_grid(self):
        m = semicircle_measure(4001)
        zs = (np.linspace(-3, 3, 7)[:, None]
              + 1j * np.array([0.1, 0.5, 2.0]))
        assert np.max(np.abs(cauchy(m, zs) - semicircle_G(zs))) < 1e-5

    @given(upper_points)
    def test_half_plane_mapping(self, z):
        g = cauchy(bernoulli_measure(), z)
        assert g.imag < 0
        assert abs(g) <= 1 / z.imag + 1e-12

    def test_rejects_lower_half_plane(self):
        with pytest.raises(NotUpperHalfPlane):
            cauchy(bernoulli_measure(), 1 - 1j)
        with pytest.raises(NotUpperHalfPlane):
            cauchy(bernoulli_measure(), 1.0 + 0j)


class TestReciprocalCauchy:
    @given(upper_points)
    def test_dirac(self, z):
        assert reciprocal_cauchy(delta(0.0), z) == pytest.approx(z, rel=1e-12)

    def test_bernoulli_at_i(self):
        assert reciprocal_cauchy(bernoulli_measure(), 1j) == pytest.approx(2j)

    def test_semicircle_at_i(self):
        f = reciprocal_cauchy(semicircle_measure(2001), 1j)
        assert f == pytest.approx(1j * (np.sqrt(5) + 1) / 2, abs=1e-4)

    @given(upper_points)
    def test_imaginary_part_grows(self, z):
        f = reciprocal_cauchy(semicircle_measure(501), z)
        assert f.imag >= z.imag - 1e-10

    @given(upper_points)
    def test_product_round_trip(self, z):
        m = make_atomic([(-2, 0.3), (0.5, 0.7)])
        assert cauchy(m, z) * reciprocal_cauchy(m, z) == pytest.approx(1.0,
                                                                       abs=1e-12)


class TestC1Index:
    def test_dirac_is_zero(self):
        for b in (0.0, 2.5, -1.0):
            assert abs(c1_index(delta(b))) < 1e-10

    def test_bernoulli(self):
        assert c1_index(bernoulli_measure()) == pytest.approx(1.0)

    def test_semicircle(self):
        assert c1_index(semicircle_measure(2001)) == pytest.approx(GOLDEN,
                                                                   abs=1e-4)

    def test_nonnegative(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            pos = np.sort(rng.uniform(-3, 3, 3))
            w = rng.dirichlet(np.ones(3))
            assert c1_index(make_atomic(list(zip(pos, w)))) >= -1e-10


class TestVoiculescu:
    def test_dirac_is_constant(self):
        for z in (2j, 1 + 3j, -0.5 + 10j):
            assert voiculescu(delta(0.7), z) == pytest.approx(0.7, abs=1e-10)

    def test_semicircle_is_reciprocal(self):
        phi = voiculescu(semicircle_measure(4001), 3j)
        assert phi == pytest.approx(-1j / 3, abs=1e-6)

    def test_bernoulli_closed_form(self):
        z = 3j
        expected = (np.sqrt(z**2 + 4) - z) / 2
        phi = voiculescu(bernoulli_measure(), z)
        assert phi == pytest.approx(expected, abs=1e-8)
        assert phi == pytest.approx(1j * (np.sqrt(5) - 3) / 2, abs=1e-8)

    def test_tends_to_first_cumulant(self):
        m = make_atomic([(0.0, 0.5), (1.0, 0.5)])
        phi = voiculescu(m, 200j)
        assert phi == pytest.approx(m.moment(1), abs=1e-2)

    def test_divergence_is_reported(self):
        # Bernoulli phi has a branch point at 2i; just above the real axis
        # inside the support Newton cannot land on the Voiculescu branch
        with pytest.raises(InversionDiverged):
            voiculescu(bernoulli_measure(), 0.05j)


class TestNewtonInvert:
    def test_solves_simple(self):
        F, Fp = reciprocal_pair(delta(1.0))
        w = newton_invert(F, Fp, 5j, 5j)
        assert F(w) == pytest.approx(5j, abs=1e-9)

    def test_reports_divergence(self):
        def F(w):
            return 1j * abs(w) / (1 + abs(w))      # bounded: 5j unreachable

        def Fp(w):
            return 1.0

        with pytest.raises(InversionDiverged):
            newton_invert(F, Fp, 5j, 1j)


class TestNevanlinnaSigma:
    def test_dirac_gives_zero_measure(self):
        assert nevanlinna_sigma(delta(0.0)).mass() == 0.0

    def test_bernoulli_gives_point_mass(self):
        sig = nevanlinna_sigma(bernoulli_measure())
        assert sig.atom_positions == pytest.approx([0.0], abs=1e-10)
        assert sig.atom_weights == pytest.approx([1.0], abs=1e-10)

    def test_semicircle_reproduces_itself(self):
        sc = semicircle_measure(4001)
        sig = nevanlinna_sigma(sc)
        assert sig.mass() == pytest.approx(1.0, abs=1e-3)
        assert kolmogorov(measure_to_cdf(sig),
                          measure_to_cdf(sc)).distance < 5e-3

    def test_mass_is_variance(self):
        m = make_atomic([(-2.0, 0.25), (0.0, 0.5), (2.0, 0.25)])
        sig = nevanlinna_sigma(m)
        assert sig.mass() == pytest.approx(m.moment(2), abs=1e-9)

    def test_requires_centered(self):
        with pytest.raises(NotCentered):
            nevanlinna_sigma(delta(1.0))


def exact_moments(m, kmax):
    """Moments of the measure with the piecewise-linear density integrated
    exactly per segment (m.moment uses the trapezoid rule, which differs at
    grid-resolution order and would pollute high-order asymptotics)."""
    out = []
    for k in range(kmax + 1):
        total = float(np.sum(m.atom_weights * m.atom_positions**k))
        if m.grid.size:
            x0, x1 = m.grid[:-1], m.grid[1:]
            v0, v1 = m.density[:-1], m.density[1:]
            d = (v1 - v0) / (x1 - x0)
            c = v0 - d * x0
            total += float(np.sum(c * (x1**(k + 1) - x0**(k + 1)) / (k + 1)
                                  + d * (x1**(k + 2) - x0**(k + 2)) / (k + 2)))
        out.append(total)
    return out


class TestMomentAsymptotics:
    @pytest.mark.parametrize("m", [bernoulli_measure(), semicircle_measure(2001)],
                             ids=["bernoulli", "semicircle"])
    def test_expansion_error_decreases(self, m):
        moments = exact_moments(m, 5)
        for k in range(1, 5):
            errs = []
            for y in (50.0, 100.0, 200.0):
                z = 1j * y
                tail = cauchy(m, z) - sum(moments[j] / z**(j + 1)
                                          for j in range(k + 1))
                errs.append(abs(z**(k + 1) * tail))
            assert errs[0] > errs[1] > errs[2]

    @pytest.mark.parametrize("m", [bernoulli_measure(), semicircle_measure(4001)],
                             ids=["bernoulli", "semicircle"])
    def test_cumulants_from_transform_asymptotics(self, m):
        # least-squares fit of the 1/z expansion of G at several heights,
        # two extra orders absorbing the tail, then convert to cumulants
        ys = np.geomspace(50, 400, 8)
        zs = 1j * ys
        A = np.column_stack([1.0 / zs**(j + 1) for j in range(7)])
        b = cauchy(m, zs)
        A_r = np.vstack([A.real, A.imag])
        b_r = np.concatenate([b.real, b.imag])
        coef, *_ = np.linalg.lstsq(A_r, b_r, rcond=None)
        est = coef[1:5]                     # coef[0] is the total mass
        exact = moments_to_cumulants(exact_moments(m, 4)[1:])
        fitted = moments_to_cumulants(est)
        assert np.max(np.abs(np.subtract(fitted, exact))) < 1e-2
