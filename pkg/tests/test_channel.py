import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from risloc import Dipole, DomainError, Wave
from risloc.channel import (
    RSSI_FLOOR_DBM,
    ChannelModel,
    LoadCodebook,
    RisConfiguration,
    Scenario,
    SingularConfigurationError,
    build_ris_array,
    coupling_matrix,
    end_to_end_channel,
    power_to_dbm,
    reflection_matrix,
    rssi_sample,
    transfer_vector,
)
from risloc.em import farfield_transfer_impedance, mutual_impedance_parallel, self_impedance
from risloc.radiomap import generate_configuration_set

import oracles

W = Wave(2.4e9)
LAM = W.wavelength
S = Scenario()


# -- array geometry ----------------------------------------------------------------

def test_single_element_at_center():
    ris = build_ris_array(1, 1, 0.1, (1.0, 2.0, 3.0), W)
    assert ris.n == 1
    assert ris.elements[0].position == (1.0, 2.0, 3.0)


def test_grid_spacing_and_count():
    s = 0.0625
    ris = build_ris_array(4, 4, s, (10.0, 0.0, 1.5), W)
    p = ris.positions()
    assert ris.n == 16
    assert np.linalg.norm(p[1] - p[0]) == pytest.approx(s, rel=1e-12)
    assert np.linalg.norm(p[5] - p[0]) == pytest.approx(s * math.sqrt(2), rel=1e-12)
    np.testing.assert_allclose(p.mean(axis=0), (10.0, 0.0, 1.5), atol=1e-12)
    # row-major: first four share a row (same z)
    assert np.all(p[:4, 2] == p[0, 2]) and np.all(np.diff(p[:4, 0]) > 0)


def test_bad_spacing():
    with pytest.raises(DomainError):
        build_ris_array(2, 2, 0.0, (0, 0, 0), W)


# -- coupling and reflection -----------------------------------------------------------

def test_coupling_n1_and_symmetry():
    one = build_ris_array(1, 1, LAM / 2, (0, 0, 0), W)
    z1 = coupling_matrix(one, W)
    assert z1.shape == (1, 1) and z1[0, 0] == self_impedance(one.elements[0], W)
    z = coupling_matrix(S.ris, W)
    assert np.array_equal(z, z.T)


def test_coupling_two_elements_half_wavelength():
    ris = build_ris_array(1, 2, LAM / 2, (0, 0, 0), W)
    z = coupling_matrix(ris, W)
    assert abs(z[0, 1] - oracles.mutual_impedance_quad(0.5)) < 1e-6
    assert abs(z[0, 1] - complex(-12.5, -29.9)) < 0.5 * math.sqrt(2)


def test_reflection_diagonal_case():
    z = coupling_matrix(S.ris, W)
    zd = np.diag(np.diag(z))
    loads = np.linspace(-200, 200, 16)
    cfg = RisConfiguration.reactive(loads, "d")
    phi = reflection_matrix(zd, cfg)
    expected = -1.0 / (np.diag(z) + 1j * loads)
    np.testing.assert_allclose(np.diag(phi), expected, rtol=1e-13)
    assert np.all(phi[~np.eye(16, dtype=bool)] == 0)


def test_reflection_n1():
    phi = reflection_matrix(np.array([[73 + 42j]]), RisConfiguration.reactive([-42.0], "n1"))
    assert abs(phi[0, 0] - (-1 / 73)) < 1e-15


def test_reflection_matches_gauss_jordan():
    rng = np.random.default_rng(7)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    a = a + a.T
    cfg = RisConfiguration.reactive(rng.uniform(-300, 300, 4), "r")
    phi = reflection_matrix(a, cfg)
    ref = -oracles.gauss_jordan_inverse(a + np.diag(cfg.loads))
    assert np.max(np.abs(phi - ref)) <= 1e-9 * np.max(np.abs(ref))


def test_reflection_residual_bound_over_configuration_sweep():
    z = coupling_matrix(S.ris, W)
    cs = generate_configuration_set(LoadCodebook.uniform(), 16, seed=3)
    assert len(cs) == 50
    for cfg in cs:
        a = z + np.diag(cfg.loads)
        phi = reflection_matrix(z, cfg)
        res = np.abs(a @ phi + np.eye(16)).sum(axis=1).max()
        assert res <= 1e-9 * np.abs(a).sum(axis=1).max()
        assert np.allclose(phi, phi.T, rtol=1e-10, atol=1e-14)


def test_singular_configuration_names_id():
    z = np.array([[1.0, 1.0], [1.0, 1.0]], dtype=complex)
    with pytest.raises(SingularConfigurationError, match="bad-one"):
        reflection_matrix(z, RisConfiguration.reactive([0.0, 0.0], "bad-one"))


def test_reflection_dimension_mismatch():
    with pytest.raises(DomainError):
        reflection_matrix(np.eye(3), RisConfiguration.reactive([1.0, 2.0], "x"))


# -- transfer vectors ---------------------------------------------------------------

def test_transfer_vector_spot_and_symmetry():
    ris = S.ris
    p = ris.positions()
    # equidistant from elements 0 and 3 (same row, mirror-symmetric in x)
    node = Dipole.half_wave((10.0, 7.0, p[0, 2]), W)
    z = transfer_vector(node, ris, W)
    assert abs(z[0]) == pytest.approx(abs(z[3]), rel=1e-13)
    for u in range(ris.n):
        r = np.linalg.norm(p[u] - np.asarray(node.position))
        ref = oracles.farfield_formula(r, 2.4e9)
        assert abs(z[u] - ref) <= 1e-12 * abs(ref)
        assert abs(z[u]) * r == pytest.approx(abs(z[0]) * np.linalg.norm(p[0] - node.position), rel=1e-12)


def test_transfer_vector_coincident():
    ris = S.ris
    with pytest.raises(DomainError):
        transfer_vector(ris.elements[2], ris, W)


# -- end-to-end channel -------------------------------------------------------------------

CFG = RisConfiguration.reactive(np.linspace(-250, 250, 16), "ramp")


def test_vlos_only_by_default():
    mu = (5.0, 8.0, 1.5)
    m = ChannelModel(S)
    z_rs = transfer_vector(Dipole.half_wave(mu, W), m.ris, W)
    ref = z_rs @ m.phi(CFG) @ m.z_ts / 50.0
    assert abs(end_to_end_channel(S, CFG, mu) - ref) <= 1e-13 * abs(ref)


def test_los_flag_adds_direct_path():
    mu = (5.0, 8.0, 1.5)
    h0 = end_to_end_channel(S, CFG, mu)
    h1 = end_to_end_channel(S.with_(los_enabled=True), CFG, mu)
    los = farfield_transfer_impedance(S.ap, Dipole.half_wave(mu, W), W) / 50.0
    assert abs(h1 - (h0 + los)) < 1e-14 * abs(h1)


def test_open_circuit_surrogate_kills_vlos():
    mu = (12.0, 9.0, 1.5)
    typical = abs(end_to_end_channel(S, CFG, mu))
    open_cfg = RisConfiguration(tuple([1e9j] * 16), "open")
    assert abs(end_to_end_channel(S, open_cfg, mu)) < 1e-6 * typical


def test_single_element_scalar_chain():
    s1 = Scenario(ris_rows=1, ris_cols=1)
    cfg = RisConfiguration.reactive([-42.0], "n1")
    mu = (3.0, 4.0, 1.5)
    el = s1.ris.elements[0]
    z_self = self_impedance(el, W)
    z_rs = farfield_transfer_impedance(Dipole.half_wave(mu, W), el, W)
    z_ts = farfield_transfer_impedance(s1.ap, el, W)
    ref = z_rs * (-1.0 / (z_self - 42j)) * z_ts / 50.0
    assert abs(end_to_end_channel(s1, cfg, mu) - ref) <= 1e-13 * abs(ref)


def test_reciprocity_swap_ap_and_mu():
    rng = np.random.default_rng(11)
    cs = generate_configuration_set(LoadCodebook.uniform(), 16, seed=0)
    for _ in range(20):
        mu = (rng.uniform(1, 19), rng.uniform(1, 19), 1.5)
        ap = (rng.uniform(1, 19), rng.uniform(1, 19), 1.5)
        cfg = cs[int(rng.integers(len(cs)))]
        h1 = end_to_end_channel(S.with_(ap_position=ap), cfg, mu)
        h2 = end_to_end_channel(S.with_(ap_position=mu), cfg, ap)
        # algebraically exact; floating point reorders the sums
        assert abs(abs(h1) - abs(h2)) <= 1e-12 * abs(h1)


def test_continuity_under_1mm_perturbation():
    rng = np.random.default_rng(5)
    m = ChannelModel(S)
    pts = np.column_stack([rng.uniform(0, 20, 100), rng.uniform(1, 20, 100), np.full(100, 1.5)])
    dirs = rng.normal(size=(100, 2))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    moved = pts.copy()
    moved[:, :2] = np.clip(pts[:, :2] + 1e-3 * dirs, 0, 20)
    h0 = np.abs(m.gains(pts, CFG))
    h1 = np.abs(m.gains(moved, CFG))
    assert np.all(np.abs(h1 - h0) < 0.05 * h0)


def test_mu_outside_room():
    with pytest.raises(DomainError):
        end_to_end_channel(S, CFG, (25.0, 3.0, 1.5))


# -- RSSI -------------------------------------------------------------------------------

def test_dbm_definition():
    s0 = S.with_(noise_sigma=0.0, p_ap=1.0)
    rng = np.random.default_rng(0)
    assert rssi_sample(s0, math.sqrt(1e-3), rng) == pytest.approx(0.0, abs=1e-12)
    assert rssi_sample(s0, 1.0, rng) == pytest.approx(30.0, abs=1e-12)


def test_zero_channel_floor():
    assert rssi_sample(S, 0.0, np.random.default_rng(0)) == RSSI_FLOOR_DBM
    assert power_to_dbm(0.0) == RSSI_FLOOR_DBM


def test_rssi_noise_statistics():
    h = 1e-3
    clean = 30 + 10 * math.log10(h * h * S.p_ap)
    x = rssi_sample(S, h, np.random.default_rng(1), size=100_000)
    assert abs(x.mean() - clean) < 0.05
    assert abs(x.std() - 3.0) < 0.05


def test_rssi_noise_free_is_pure():
    s0 = S.with_(noise_sigma=0.0)
    a = rssi_sample(s0, 3e-4, np.random.default_rng(1))
    b = rssi_sample(s0, 3e-4, np.random.default_rng(99))
    assert a == b


def test_rssi_deterministic_given_rng_state():
    a = rssi_sample(S, 1e-4, np.random.default_rng(42), size=8)
    b = rssi_sample(S, 1e-4, np.random.default_rng(42), size=8)
    assert np.array_equal(a, b)


# -- codebook / configuration types ------------------------------------------------------

def test_codebook():
    cb = LoadCodebook.uniform(200, -300, 300)
    assert cb.d == 200 and np.all(np.diff(cb.reactances) > 0)
    with pytest.raises(DomainError):
        LoadCodebook((1.0, 1.0))


@settings(max_examples=100, deadline=None)
@given(st.floats(-1000, 1000))
def test_quantize_picks_nearest(x):
    cb = LoadCodebook.uniform(200, -300, 300)
    i = int(cb.quantize(x))
    table = np.asarray(cb.reactances)
    assert abs(table[i] - x) == pytest.approx(np.min(np.abs(table - x)), abs=1e-12)


def test_scenario_validation():
    with pytest.raises(DomainError):
        Scenario(p_ap=0.0)
    with pytest.raises(DomainError):
        Scenario(noise_sigma=-1.0)
    assert Scenario().ris_spacing == pytest.approx(LAM / 2)
    assert Scenario().digest() == Scenario().digest()
    assert Scenario().digest() != Scenario(p_ap=0.2).digest()
