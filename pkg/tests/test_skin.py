import numpy as np
import pytest

from eskin import skin

MU0 = 4e-7 * np.pi


def brute_force_sensor_field(film, geom):
    """Independent oracle: plain double loop over sensors and dipoles."""
    out = np.zeros((8, 3))
    for s in range(8):
        p = np.array([geom.sensor_positions_mm[s, 0],
                      geom.sensor_positions_mm[s, 1],
                      -geom.sensor_plane_gap_mm]) * 1e-3
        for k in range(film.positions_mm.shape[0]):
            r = p - film.positions_mm[k] * 1e-3
            d = np.linalg.norm(r)
            rhat = r / d
            m = film.moments[k]
            out[s] += (MU0 / (4 * np.pi)) * (3 * np.dot(m, rhat) * rhat - m) / d**3
    return out * 1e6


@pytest.fixture(scope="module")
def geom():
    return skin.SkinGeometry()


@pytest.fixture(scope="module")
def film(geom):
    return skin.make_film(geom)


class TestGeometry:
    def test_counts_and_footprint(self, geom):
        assert geom.sensor_positions_mm.shape == (8, 2)
        assert geom.motor_positions_mm.shape == (8, 2)
        allp = np.vstack([geom.sensor_positions_mm, geom.motor_positions_mm])
        assert (allp[:, 0] > 0).all() and (allp[:, 0] < 40).all()
        assert (allp[:, 1] > 0).all() and (allp[:, 1] < 65).all()
        assert len(np.unique(np.round(allp, 6), axis=0)) == 16

    def test_checkerboard_alternation(self, geom):
        # every sensor's nearest in-grid neighbours (same row or column)
        # are motor cells, never sensors
        cell_w, cell_h = 40 / 4, 65 / 4
        for sp in geom.sensor_positions_mm:
            for other in geom.sensor_positions_mm:
                d = np.abs(sp - other)
                same_row_adjacent = d[1] < 1e-9 and abs(d[0] - cell_w) < 1e-9
                same_col_adjacent = d[0] < 1e-9 and abs(d[1] - cell_h) < 1e-9
                assert not (same_row_adjacent or same_col_adjacent)

    def test_stack_thickness_budget(self):
        with pytest.raises(ValueError):
            skin.SkinGeometry(film_thickness_mm=3.0, elastomer_thickness_mm=4.5)


class TestDipoleField:
    def test_axial_closed_form(self):
        # on-axis field of a unit dipole: µ0*m/(2π r³)
        b = skin.dipole_field(np.array([0, 0, 1.0]), np.array([0, 0, 0.1]))
        expected = MU0 * 1.0 / (2 * np.pi * 0.1**3)
        assert abs(b[2] - expected) / expected < 1e-9
        assert abs(b[2] - 2.0e-4) / 2.0e-4 < 1e-9
        assert abs(b[0]) < 1e-18 and abs(b[1]) < 1e-18

    def test_equatorial_closed_form(self):
        b = skin.dipole_field(np.array([0, 0, 1.0]), np.array([0.1, 0, 0]))
        expected = -MU0 * 1.0 / (4 * np.pi * 0.1**3)
        assert abs(b[2] - expected) / abs(expected) < 1e-9
        assert abs(b[2] - (-1.0e-4)) / 1.0e-4 < 1e-9

    def test_zero_moment(self):
        b = skin.dipole_field(np.zeros(3), np.array([0.02, -0.01, 0.03]))
        assert np.all(b == 0)

    def test_zero_displacement_raises(self):
        with pytest.raises(skin.SingularityError):
            skin.dipole_field(np.array([0, 0, 1.0]), np.zeros(3))


class TestFilm:
    def test_surface_target_calibration(self, geom, film):
        probe = np.array([[20.0, 32.5, geom.film_thickness_mm / 2]])
        b = skin.field_at_points(film, probe)[0]
        assert abs(np.linalg.norm(b) - 2000.0) / 2000.0 < 0.01

    def test_uniform_axis_aligned_moments(self, film):
        assert np.allclose(film.moments[:, :2], 0)
        assert np.allclose(film.moments[:, 2], film.moments[0, 2])
        assert np.allclose(film.rest_positions_mm[:, 2], 0)


class TestDeform:
    def test_none_is_identity(self, film):
        out = skin.deform(film, None)
        assert np.array_equal(out.positions_mm, film.positions_mm)
        assert np.array_equal(out.moments, film.moments)

    def test_press_at_dipole_peak(self, geom, film):
        k = 42
        x, y, _ = film.rest_positions_mm[k]
        out = skin.deform(film, skin.Press((x, y), 1.2, 3.0))
        assert np.allclose(out.positions_mm[k],
                           film.rest_positions_mm[k] - [0, 0, 1.2])
        # gradient is zero at the bump peak: moment unrotated
        assert np.allclose(out.moments[k], film.moments[k], atol=1e-12)

    def test_moment_magnitudes_preserved(self, film):
        out = skin.deform(film, skin.Press((18.0, 30.0), 2.0, 5.0))
        assert np.allclose(np.linalg.norm(out.moments, axis=1),
                           np.linalg.norm(film.moments, axis=1))

    def test_slide_shifts_center(self, film):
        pressed = skin.deform(film, skin.Press((15.0, 30.0), 1.5, 4.0))
        slid = skin.deform(
            film, skin.Slide((10.0, 28.0), 1.5, 4.0, offset_mm=(5.0, 2.0)))
        assert np.allclose(pressed.positions_mm, slid.positions_mm)

    def test_invalid_deformation(self, film):
        with pytest.raises(ValueError):
            skin.deform(film, skin.Press((10, 10), -0.5, 3.0))
        with pytest.raises(ValueError):
            skin.deform(film, skin.Press((10, 10), 1.0, 0.0))

    def test_center_press_symmetric_pairs(self, geom, film):
        """Center press is invariant under the layout's 180° rotation, so
        paired sensors must agree, checked against the loop oracle."""
        out = skin.deform(film, skin.Press((20.0, 32.5), 2.5, 6.0))
        read = skin.sensor_field(out, geom)
        oracle = brute_force_sensor_field(out, geom)
        assert np.allclose(read, oracle, rtol=1e-9, atol=1e-12)
        for i, j in geom.rotation_pairs():
            # rotating 180° about z negates the in-plane components
            assert np.allclose(read[i, :2], -read[j, :2], rtol=1e-6, atol=1e-9)
            assert np.allclose(read[i, 2], read[j, 2], rtol=1e-6)


class TestSensorField:
    def test_undeformed_pair_symmetry(self, geom, film):
        read = skin.sensor_field(film, geom)
        mags = np.linalg.norm(read, axis=1)
        for i, j in geom.rotation_pairs():
            assert abs(mags[i] - mags[j]) / mags[i] < 1e-9

    def test_matches_brute_force(self, geom, film):
        out = skin.deform(film, skin.Press((12.0, 45.0), 1.8, 4.5))
        assert np.allclose(skin.sensor_field(out, geom),
                           brute_force_sensor_field(out, geom),
                           rtol=1e-9, atol=1e-12)

    def test_nearer_sensor_sees_more(self, geom, film):
        rest = skin.sensor_field(film, geom)
        # press close to sensor 2, far from sensor 3
        out = skin.deform(film, skin.Press((16.0, 25.0), 2.0, 4.0))
        delta = skin.sensor_field(out, geom) - rest
        assert np.linalg.norm(delta[2]) > np.linalg.norm(delta[3])

    def test_linearity_in_moments(self, geom, film):
        doubled = skin.deform(film, None)
        doubled.moments *= 2.0
        assert np.allclose(skin.sensor_field(doubled, geom),
                           2.0 * skin.sensor_field(film, geom), rtol=1e-12)

    def test_superposition(self, geom, film):
        a = skin.deform(film, None)
        b = skin.deform(film, None)
        rng = np.random.default_rng(7)
        a.moments = rng.normal(size=a.moments.shape) * 1e-6
        b.moments = rng.normal(size=b.moments.shape) * 1e-6
        both = skin.deform(film, None)
        both.moments = a.moments + b.moments
        lhs = skin.sensor_field(both, geom)
        rhs = skin.sensor_field(a, geom) + skin.sensor_field(b, geom)
        assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-15)

    def test_footprint_mismatch(self, film):
        other = skin.SkinGeometry(width_mm=50.0)
        with pytest.raises(skin.FootprintMismatchError):
            skin.sensor_field(film, other)

    def test_depth_monotonicity(self, geom, film):
        """|ΔB| at the nearest sensor is nondecreasing in press depth."""
        center = tuple(geom.sensor_positions_mm[5])
        rest = skin.sensor_field(film, geom)[5]
        prev = -1.0
        for depth in np.linspace(0.0, geom.elastomer_thickness_mm, 10):
            out = skin.deform(film, skin.Press(center, depth, 5.0))
            change = np.linalg.norm(skin.sensor_field(out, geom)[5] - rest)
            assert change >= prev - 1e-12
            prev = change

    def test_deterministic(self, geom, film):
        out = skin.deform(film, skin.Press((20.0, 32.5), 2.0, 5.0))
        a = skin.sensor_field(out, geom)
        b = skin.sensor_field(skin.deform(film, skin.Press((20.0, 32.5), 2.0, 5.0)), geom)
        assert np.array_equal(a, b)


class TestMotorInterference:
    def test_all_off_is_zero(self, geom):
        assert np.all(skin.motor_interference(np.zeros(8), geom) == 0)

    def test_amplitude_range_enforced(self, geom):
        with pytest.raises(ValueError):
            skin.motor_interference(np.full(8, 1.2), geom)

    def test_less_than_reference_press(self, geom, film):
        rest = skin.sensor_field(film, geom)
        depth = skin.force_to_depth(4.0)
        probe = 2
        d = skin.Press(tuple(geom.sensor_positions_mm[probe]), depth, 5.0)
        press_delta = np.max(np.abs(
            skin.sensor_field(skin.deform(film, d), geom)[probe] - rest[probe]))
        intf = np.max(skin.motor_interference(np.ones(8), geom)[probe])
        assert intf < press_delta

    def test_doubling_magnetization_halves_ratio(self, geom):
        def ratio(target_mt):
            f = skin.make_film(geom, surface_field_target_mt=target_mt)
            rest = skin.sensor_field(f, geom)
            d = skin.Press(tuple(geom.sensor_positions_mm[2]),
                           skin.force_to_depth(4.0), 5.0)
            press = np.max(np.abs(
                skin.sensor_field(skin.deform(f, d), geom)[2] - rest[2]))
            return np.max(skin.motor_interference(np.ones(8), geom)[2]) / press

        r1, r2 = ratio(2.0), ratio(4.0)
        assert abs(r2 - r1 / 2) / (r1 / 2) < 1e-6


class TestInterferenceExperiment:
    def test_three_stage_ordering(self, geom, film):
        res = skin.interference_experiment(geom, film, press_force_n=4.0)
        assert res.max_delta_ut["baseline"] <= 0.01
        assert res.max_delta_ut["motors"] < res.max_delta_ut["press"]
        assert 0 < res.motor_press_ratio < 0.5

    def test_zero_press_inverts_ordering(self, geom, film):
        res = skin.interference_experiment(geom, film, press_force_n=0.0)
        assert res.max_delta_ut["press"] <= 0.01
        assert res.max_delta_ut["motors"] > res.max_delta_ut["press"]

    def test_trace_shape(self, geom, film):
        res = skin.interference_experiment(geom, film, stage_s=1.0, rate_hz=100)
        assert res.readings_ut.shape == (300, 3)
        assert res.t_s.shape == (300,)
