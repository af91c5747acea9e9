"""Channel synthesis: spherical-wave LoS, multipath, Rician and far-field models."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from irsma import channel
from irsma.config import IrsGeometry, Scenario
from irsma.errors import DegenerateGeometryError, InvalidParameterError
from irsma.rng import substream


class TestRayleighDistance:
    def test_default_scenario_value(self):
        s = Scenario()
        d = channel.rayleigh_distance(s.geometry(), s.region_length, s.wavelength)
        assert d == pytest.approx(50.95, abs=0.05)

    def test_zero_aperture(self):
        g = IrsGeometry(num_y=1, num_z=1, spacing=0.0)
        assert channel.rayleigh_distance(g, 0.0, 0.06) == 0.0

    def test_hand_arithmetic(self):
        # aperture sqrt(2^2 + 2^2) * 0.5 = sqrt(2); 2 * (sqrt(2))^2 / 0.5 = 8
        g = IrsGeometry(num_y=2, num_z=2, spacing=0.5)
        assert channel.rayleigh_distance(g, 0.0, 0.5) == pytest.approx(8.0, rel=1e-12)

    def test_bad_wavelength(self):
        g = IrsGeometry(num_y=2, num_z=2, spacing=0.5)
        with pytest.raises(InvalidParameterError):
            channel.rayleigh_distance(g, 0.0, 0.0)


class TestNuswLos:
    def test_single_element_one_wavelength(self):
        lam = 0.06
        g = IrsGeometry(num_y=1, num_z=1, spacing=0.0)
        h = channel.nusw_los_vector([lam, 0.0, 0.0], g, lam)
        assert abs(h[0]) == pytest.approx(1 / (4 * np.pi), rel=1e-12)
        assert np.angle(h[0]) == pytest.approx(0.0, abs=1e-9)

    def test_half_wavelength(self):
        lam = 0.06
        g = IrsGeometry(num_y=1, num_z=1, spacing=0.0)
        h = channel.nusw_los_vector([lam / 2, 0.0, 0.0], g, lam)
        assert abs(h[0]) == pytest.approx(1 / (2 * np.pi), rel=1e-12)
        assert abs(np.angle(h[0])) == pytest.approx(np.pi, abs=1e-9)

    def test_amplitudes_decrease_with_distance(self, small_geometry):
        lam = 0.06
        a1 = np.abs(channel.nusw_los_vector([1.0, 0, 0], small_geometry, lam))
        a2 = np.abs(channel.nusw_los_vector([2.0, 0, 0], small_geometry, lam))
        assert np.all(a2 < a1)

    def test_entry_formula_per_element(self, small_geometry):
        lam = 0.0599584916
        t = np.array([1.3, -0.2, 0.4])
        h = channel.nusw_los_vector(t, small_geometry, lam)
        d = np.linalg.norm(small_geometry.element_positions() - t, axis=1)
        np.testing.assert_allclose(np.abs(h), lam / (4 * np.pi * d), rtol=1e-12)
        np.testing.assert_allclose(
            np.angle(h * np.exp(-2j * np.pi * d / lam)), 0.0, atol=1e-9)

    def test_coincident_point_raises(self, small_geometry):
        t = small_geometry.element_positions()[0]
        with pytest.raises(DegenerateGeometryError):
            channel.nusw_los_vector(t, small_geometry, 0.06)

    def test_matrix_single_column(self, small_geometry):
        t = np.array([2.0, 0.1, -0.1])
        m = channel.nusw_los_matrix([t], small_geometry, 0.06)
        np.testing.assert_array_equal(
            m[:, 0], channel.nusw_los_vector(t, small_geometry, 0.06))

    def test_matrix_column_permutation(self, small_geometry):
        pos = np.array([[2.0, 0, 0], [2.5, 0.1, 0], [3.0, -0.1, 0.2]])
        m = channel.nusw_los_matrix(pos, small_geometry, 0.06)
        m_perm = channel.nusw_los_matrix(pos[::-1], small_geometry, 0.06)
        np.testing.assert_array_equal(m_perm, m[:, ::-1])

    def test_equidistant_antennas_equal_magnitude(self):
        g = IrsGeometry(num_y=1, num_z=1, spacing=0.0)
        m = channel.nusw_los_matrix([[1.0, 1.0, 0], [1.0, -1.0, 0]], g, 0.06)
        assert abs(abs(m[0, 0]) - abs(m[0, 1])) < 1e-15


class TestNearFieldResponse:
    def test_unit_modulus(self, rng):
        pts = rng.normal(size=(10, 3))
        out = channel.near_field_response(pts, [5.0, 5.0, 5.0], 0.06)
        np.testing.assert_allclose(np.abs(out), 1.0, atol=1e-12)

    def test_full_wavelength_phase(self):
        lam = 0.06
        out = channel.near_field_response([[lam, 0, 0]], [0, 0, 0], lam)
        assert out[0] == pytest.approx(1.0, abs=1e-9)

    def test_half_turn(self):
        lam = 0.06
        out = channel.near_field_response([[lam, 0, 0], [1.5 * lam, 0, 0]],
                                          [0, 0, 0], lam)
        assert out[0] == pytest.approx(1.0, abs=1e-9)
        assert out[1] == pytest.approx(-1.0, abs=1e-9)


class TestMultipath:
    def test_pure_los_identity(self, small_geometry):
        pos = np.array([[2.0, 0, 0], [2.1, 0, 0]])
        cs = channel.ClusterSet(los_ratio=1.0, clusters=())
        np.testing.assert_array_equal(
            channel.multipath_bs_irs(pos, small_geometry, cs, 0.06),
            channel.nusw_los_matrix(pos, small_geometry, 0.06))

    def test_single_scatterer_rank1_unit_modulus(self, small_geometry):
        pos = np.array([[2.0, 0, 0], [2.1, 0, 0]])
        cl = channel.PathCluster(scatterer=(1.0, 1.0, 0.5), power_ratio=1.0, gain=1.0)
        cs = channel.ClusterSet(los_ratio=0.0, clusters=(cl,))
        h = channel.multipath_bs_irs(pos, small_geometry, cs, 0.06)
        np.testing.assert_allclose(np.abs(h), 1.0, atol=1e-12)
        assert np.linalg.matrix_rank(h, tol=1e-10) == 1

    def test_nlos_linearity(self, small_geometry):
        pos = np.array([[2.0, 0, 0]])
        base = channel.PathCluster((1.0, 0.5, 0.2), 0.3 + 0.1j, 0.2 - 0.4j)
        double = channel.PathCluster((1.0, 0.5, 0.2), 0.3 + 0.1j, 0.4 - 0.8j)
        los = channel.nusw_los_matrix(pos, small_geometry, 0.06)
        h1 = channel.multipath_bs_irs(
            pos, small_geometry, channel.ClusterSet(1.0, (base,)), 0.06)
        h2 = channel.multipath_bs_irs(
            pos, small_geometry, channel.ClusterSet(1.0, (double,)), 0.06)
        np.testing.assert_allclose(h2 - los, 2 * (h1 - los), rtol=1e-10)

    def test_column_locality(self, small_geometry, rng):
        """Each column depends only on the corresponding antenna position."""
        cs = channel.sample_clusters(rng, 3, [1.0, 1.0, 0.0], (2, 2, 2), 0.06,
                                     [2.0, 2.0, 0.0])
        model = channel.BsIrsModel(small_geometry, 0.06, cs)
        pos = np.array([[2.0, 0, 0], [2.2, 0, 0]])
        full = model.matrix(pos)
        np.testing.assert_allclose(full[:, 0], model.column(pos[0]), rtol=1e-12)
        np.testing.assert_allclose(full[:, 1], model.column(pos[1]), rtol=1e-12)


class TestSampleClusters:
    def test_l0_second_moment(self):
        rng = np.random.default_rng(7)
        draws = [abs(channel.sample_clusters(rng, 0, [1, 1, 0], (2, 2, 2), 0.06,
                                             [2, 2, 0]).los_ratio) ** 2
                 for _ in range(10_000)]
        assert np.mean(draws) == pytest.approx(1.0, rel=0.05)

    def test_power_ratio_sum(self):
        rng = np.random.default_rng(8)
        total = 0.0
        n = 10_000
        for _ in range(n):
            cs = channel.sample_clusters(rng, 4, [1, 1, 0], (2, 2, 2), 0.06, [2, 2, 0])
            total += abs(cs.los_ratio) ** 2
            total += sum(abs(c.power_ratio) ** 2 for c in cs.clusters)
        assert total / n == pytest.approx(1.0, rel=0.05)

    def test_determinism(self):
        a = channel.sample_clusters(substream(3, "x"), 2, [1, 1, 0], (2, 2, 2),
                                    0.06, [2, 2, 0])
        b = channel.sample_clusters(substream(3, "x"), 2, [1, 1, 0], (2, 2, 2),
                                    0.06, [2, 2, 0])
        assert a == b

    def test_scatterers_in_box(self):
        rng = np.random.default_rng(9)
        center = np.array([1.0, 2.0, 0.5])
        size = np.array([2.0, 1.0, 0.4])
        cs = channel.sample_clusters(rng, 20, center, size, 0.06, [2, 4, 1])
        for c in cs.clusters:
            assert np.all(np.abs(c.scatterer_array - center) <= size / 2 + 1e-12)

    def test_bad_box(self):
        with pytest.raises(InvalidParameterError):
            channel.sample_clusters(np.random.default_rng(0), 1, [0, 0, 0],
                                    (0.0, 1.0, 1.0), 0.06, [1, 1, 0])


class TestRicianIuChannel:
    def test_los_limit_modulus(self, small_geometry):
        rng = np.random.default_rng(5)
        lam, dist, alpha = 0.06, 40.0, 2.8
        h = channel.rician_iu_channel(rng, small_geometry, dist, [1, 0, 0],
                                      1e12, alpha, lam)
        expected = lam / (4 * np.pi) * dist ** (-alpha / 2)
        np.testing.assert_allclose(np.abs(h), expected, rtol=1e-5)

    def test_second_moment(self, small_geometry):
        rng = np.random.default_rng(6)
        lam, dist, alpha, kap = 0.06, 35.0, 2.8, 10 ** 0.3
        acc = 0.0
        n = 10_000
        for _ in range(n):
            h = channel.rician_iu_channel(rng, small_geometry, dist, [1, 0, 0],
                                          kap, alpha, lam)
            acc += float(np.mean(np.abs(h) ** 2))
        expected = (lam / (4 * np.pi)) ** 2 * dist ** (-alpha)
        assert acc / n == pytest.approx(expected, rel=0.05)

    def test_determinism(self, small_geometry):
        a = channel.rician_iu_channel(substream(1, "u"), small_geometry, 30.0,
                                      [1, 0, 0], 2.0, 2.8, 0.06)
        b = channel.rician_iu_channel(substream(1, "u"), small_geometry, 30.0,
                                      [1, 0, 0], 2.0, 2.8, 0.06)
        np.testing.assert_array_equal(a, b)

    def test_bad_distance(self, small_geometry):
        with pytest.raises(InvalidParameterError):
            channel.rician_iu_channel(np.random.default_rng(0), small_geometry,
                                      0.0, [1, 0, 0], 2.0, 2.8, 0.06)


class TestFarField:
    def test_rank_one_and_norm(self, small_geometry, rng):
        lam = 0.06
        pos = rng.uniform(7.5, 8.5, (4, 1)) * np.array([[1.0, 0, 0]])
        h = channel.far_field_bs_irs(pos, small_geometry, [1, 0, 0], [-1, 0, 0],
                                     0.5 + 0.1j, lam)
        assert np.linalg.matrix_rank(h, tol=1e-10) == 1
        v = channel.plane_wave_response(pos, [-1, 0, 0], lam)
        assert np.linalg.norm(v) ** 2 == pytest.approx(len(pos), rel=1e-12)

    def test_common_translation_is_global_phase(self, rng):
        lam = 0.06
        pos = np.cumsum(rng.uniform(0.03, 0.1, 5))[:, None] * np.array([[1.0, 0, 0]])
        dirn = np.array([0.6, 0.8, 0.0])
        v1 = channel.plane_wave_response(pos, dirn, lam)
        v2 = channel.plane_wave_response(pos + np.array([0.123, -0.05, 0.02]), dirn, lam)
        np.testing.assert_allclose(np.abs(v2), 1.0, atol=1e-12)
        ratios = v2 / v1
        np.testing.assert_allclose(ratios, ratios[0], rtol=1e-10)

    def test_non_unit_direction_rejected(self):
        with pytest.raises(InvalidParameterError):
            channel.plane_wave_response([[1, 0, 0]], [2.0, 0, 0], 0.06)


class TestCascadedRow:
    def test_scalar_case(self):
        h_iu = np.array([0.3 + 0.4j])
        h_bi = np.array([[0.2 - 0.1j]])
        row = channel.cascaded_row(h_iu, np.array([1.0 + 0j]), h_bi)
        assert row[0] == pytest.approx(np.conj(h_iu[0]) * h_bi[0, 0])

    def test_cophased_magnitude(self, small_geometry, rng):
        from irsma.su_opt import optimal_irs_phase_su
        lam = 0.06
        h_bi = channel.nusw_los_vector([2.0, 0.5, 0.1], small_geometry, lam)
        h_iu = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        phi = optimal_irs_phase_su(h_iu, h_bi)
        row = channel.cascaded_row(h_iu, phi, h_bi[:, None])
        assert np.angle(row[0]) == pytest.approx(0.0, abs=1e-10)
        assert abs(row[0]) == pytest.approx(
            float(np.sum(np.abs(h_iu) * np.abs(h_bi))), rel=1e-10)

    def test_global_phase_of_phi(self, small_geometry, rng):
        lam = 0.06
        h_bi = channel.nusw_los_matrix([[2.0, 0, 0], [2.2, 0, 0]], small_geometry, lam)
        h_iu = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        phi = np.exp(1j * rng.uniform(0, 2 * np.pi, 16))
        r1 = channel.cascaded_row(h_iu, phi, h_bi)
        r2 = channel.cascaded_row(h_iu, phi * np.exp(0.7j), h_bi)
        np.testing.assert_allclose(np.abs(r1), np.abs(r2), rtol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidParameterError):
            channel.cascaded_row(np.ones(3), np.ones(2), np.ones((2, 1)))


class TestDirectBsUser:
    def test_one_wavelength(self):
        lam = 0.06
        val = channel.direct_bs_user([lam, 0, 0], [0, 0, 0], lam)
        assert abs(val) == pytest.approx(1 / (4 * np.pi), rel=1e-12)

    def test_inverse_distance_law(self):
        lam = 0.06
        v1 = channel.direct_bs_user([1.0, 0, 0], [0, 0, 0], lam)
        v2 = channel.direct_bs_user([2.0, 0, 0], [0, 0, 0], lam)
        assert abs(v2) == pytest.approx(abs(v1) / 2, rel=1e-12)

    def test_coincident(self):
        with pytest.raises(DegenerateGeometryError):
            channel.direct_bs_user([1, 0, 0], [1, 0, 0], 0.06)


def test_dump_channel_csv_roundtrip(tmp_path, rng):
    m = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    path = tmp_path / "chan.csv"
    channel.dump_channel_csv(m, path)
    import csv
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["row", "col", "re", "im"]
    rebuilt = np.zeros((3, 2), dtype=complex)
    for r, c, re, im in rows[1:]:
        rebuilt[int(r), int(c)] = float(re) + 1j * float(im)
    np.testing.assert_array_equal(rebuilt, m)


@settings(max_examples=30, deadline=None)
@given(x=st.floats(0.5, 10), y=st.floats(-3, 3), z=st.floats(-3, 3),
       lam=st.floats(0.01, 0.3))
def test_nusw_entry_law_hypothesis(x, y, z, lam):
    g = IrsGeometry(num_y=3, num_z=2, spacing=lam / 2)
    t = np.array([x, y, z])
    h = channel.nusw_los_vector(t, g, lam)
    d = np.linalg.norm(g.element_positions() - t, axis=1)
    np.testing.assert_allclose(np.abs(h), lam / (4 * np.pi * d), rtol=1e-10)
    np.testing.assert_allclose(h / np.abs(h), np.exp(2j * np.pi * d / lam), atol=1e-9)
