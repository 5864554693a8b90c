import math

import numpy as np
import pytest

import pinchsec as ps


def one_waveguide(bob, eve, power_dbm=10.0):
    s = ps.Scene()
    s.num_waveguides = 1
    s.pas_per_waveguide = 1
    s.bobs = [np.array([bob[0], bob[1], 0.0])]
    s.eves = [np.array([eve[0], eve[1], 0.0])]
    s.power = ps.dbm_to_watt(power_dbm)
    return s


def test_units_and_wavelength():
    assert ps.dbm_to_watt(0.0) == pytest.approx(1e-3)
    assert ps.watt_to_dbm(1.0) == pytest.approx(30.0)
    assert ps.guided_wavelength(28e9, 1.0) == pytest.approx(299792458.0 / 28e9)


def test_channel_shapes_and_bound():
    s = ps.sample_scene(ps.Scene(), bobs=2, eves=3, seed=1)
    x = np.tile(np.linspace(0.5, 4.5, s.pas_per_waveguide), (s.num_waveguides, 1))
    hb, he = ps.channel_matrices(s, x)
    assert hb.shape == (2, 2)
    assert he.shape == (3, 2)
    eta = (ps.free_space_wavelength(s.carrier) / (4 * math.pi)) ** 2
    bound = math.sqrt(s.pas_per_waveguide * eta) / s.height
    assert np.abs(hb).max() <= bound * (1 + 1e-12)


def test_single_waveguide_matches_grid():
    s = one_waveguide((1.0, 0.5), (4.0, 2.5))
    r = ps.single_waveguide(s)
    assert 0.0 <= r["x_p"] <= s.side
    assert r["w_power"] + r["an_power"] <= s.power * (1 + 1e-12)
    x, sr = ps.optimal_pa_position(s, r["w_power"], r["an_power"])
    assert sr == pytest.approx(r["sr"], abs=1e-9)
    w, an = ps.optimal_power_split(s, r["x_p"])
    assert an in (0.0, s.power)


def test_lmi_example_printed_form():
    one = np.ones((1, 1), dtype=complex)
    m = ps.lmi_matrix(one, np.ones(1, dtype=complex), one, 0.5, 1.0, 0.1, printed=True)
    assert m[0, 0].real == pytest.approx(0.5)
    assert m[1, 1].real == pytest.approx(0.6)
    assert ps.min_eig(m) == pytest.approx((1.1 - math.sqrt(4.01)) / 2)


def test_short_training_run():
    s = ps.sample_scene(ps.Scene(), seed=3)
    r = ps.train(s, epochs=20, hidden=[16, 16])
    assert len(r["sr_trace"]) == 20
    assert r["positions"].shape == (2, 4)
    assert np.allclose(r["an_cov"], r["an_cov"].conj().T)
    again = ps.train(s, epochs=20, hidden=[16, 16])
    assert again["sr_trace"] == r["sr_trace"]


def test_robust_training_returns_auxiliaries():
    s = ps.sample_scene(ps.Scene(), seed=4)
    r = ps.train(s, mode="robust", epochs=10, hidden=[16, 16])
    assert r["tau"].shape == (1, 1)
    assert (r["lam"] > 0).all()
    with pytest.raises(ValueError):
        ps.train(s, mode="bogus", epochs=1)


def test_sweep_and_gradcheck():
    pts = ps.sweep("power", [0.0, 10.0], mc=2, epochs=10)
    assert [p["value"] for p in pts] == [0.0, 10.0]
    assert all(len(p["sr"]) == 2 for p in pts)
    results = ps.gradcheck()
    assert results and all(ok for _, _, _, ok in results)
