import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from beamtrain.channel import (
    ChannelScene,
    Region,
    Scatterer,
    derive_noise,
    los_component,
    path_gain,
    sample_scene,
    scatter_to_user,
    synthesize_channel,
)
from beamtrain.errors import ConfigError
from beamtrain.geometry import PolarPoint

LAM = 3e-3
REGION = Region((-0.8, 0.8), (6.2, 20.0))


def test_reference_gain():
    assert path_gain(LAM, 5.0) == pytest.approx(4.774648292756860e-5, rel=1e-14)


def test_los_only_norm(geom512):
    scene = ChannelScene(geom512, PolarPoint(0.0, 5.0))
    h = synthesize_channel(scene)
    assert np.linalg.norm(h) == pytest.approx(np.sqrt(512) * LAM / (20 * np.pi), rel=1e-12)


@given(theta=st.floats(-0.9, 0.9), r=st.floats(1.0, 300.0))
def test_los_norm_any_position(theta, r):
    from beamtrain.geometry import ArrayGeometry

    g = ArrayGeometry.half_wavelength(64, LAM)
    h = los_component(ChannelScene(g, PolarPoint(theta, r)))
    assert np.linalg.norm(h) == pytest.approx(np.sqrt(64) * path_gain(LAM, r), rel=1e-10)


def test_coincident_angle_collapses_cosine_law():
    u = PolarPoint(0.3, 12.0)
    s = PolarPoint(0.3, 7.5)
    assert scatter_to_user(u, s) == pytest.approx(4.5, rel=1e-12)


@given(tu=st.floats(-1, 1), tl=st.floats(-1, 1), ru=st.floats(1, 400), rl=st.floats(1, 400))
def test_cosine_law_triangle_bounds(tu, tl, ru, rl):
    r2 = scatter_to_user(PolarPoint(tu, ru), PolarPoint(tl, rl))
    assert abs(ru - rl) - 1e-9 <= r2 <= ru + rl + 1e-9


def test_physical_cosine_differs_from_printed():
    u, s = PolarPoint(0.8, 10.0), PolarPoint(-0.5, 8.0)
    assert scatter_to_user(u, s, "physical") != pytest.approx(scatter_to_user(u, s, "as_printed"))
    with pytest.raises(ConfigError):
        scatter_to_user(u, s, "other")


def test_multipath_sum_by_hand(geom64):
    user = PolarPoint(0.1, 10.0)
    sc = Scatterer(PolarPoint(-0.2, 8.0), 0.5 - 0.25j)
    scene = ChannelScene(geom64, user, (sc,))
    h = synthesize_channel(scene)
    r2 = np.sqrt(8.0**2 + 10.0**2 - 2 * 8.0 * 10.0 * np.cos(0.3))
    from beamtrain.geometry import near_field_steering

    nlos = np.sqrt(64) * LAM * sc.reflection / (4 * np.pi * 8.0 * r2) * np.exp(-2j * np.pi * (8.0 + r2) / LAM)
    expected = los_component(ChannelScene(geom64, user)) + nlos * near_field_steering(geom64, sc.position)
    assert np.allclose(h, expected, rtol=1e-12, atol=0)


def test_synthesis_deterministic(geom64, rng):
    scene = sample_scene(rng, 5, geom64, REGION)
    assert np.array_equal(synthesize_channel(scene), synthesize_channel(scene))


def test_sampling_reproducible(geom64):
    a = sample_scene(np.random.default_rng(9), 4, geom64, REGION)
    b = sample_scene(np.random.default_rng(9), 4, geom64, REGION)
    assert a == b
    assert a.n_paths == 4


def test_sampling_respects_regions(geom64, rng):
    sc_region = Region((0.1, 0.2), (30.0, 40.0))
    for _ in range(20):
        s = sample_scene(rng, 3, geom64, REGION, sc_region)
        assert -0.8 <= s.user.theta <= 0.8 and 6.2 <= s.user.range <= 20.0
        for x in s.scatterers:
            assert 0.1 <= x.position.theta <= 0.2 and 30 <= x.position.range <= 40


def test_single_path_has_no_scatterers(geom64, rng):
    assert sample_scene(rng, 1, geom64, REGION).scatterers == ()


def test_reflections_unit_variance(geom64):
    rng = np.random.default_rng(5)
    p = np.array([s.reflection for s in sample_scene(rng, 100_001, geom64, REGION).scatterers])
    assert abs(np.mean(np.abs(p) ** 2) - 1) < 1e-2
    assert abs(np.mean(p)) < 1e-2


@pytest.mark.parametrize("L", [0, -1, 2.5])
def test_bad_path_count(geom64, rng, L):
    with pytest.raises(ConfigError):
        sample_scene(rng, L, geom64, REGION)


def test_region_inside_aperture_rejected(geom512, rng):
    with pytest.raises(ConfigError):
        sample_scene(rng, 2, geom512, Region((-0.5, 0.5), (0.1, 5.0)))


def test_noise_calibration(geom512):
    ref = PolarPoint(0.0, 5.0)
    g2 = (LAM / (20 * np.pi)) ** 2
    assert derive_noise(ref, 0.0, geom512).sigma_sq == pytest.approx(g2, rel=1e-14)
    assert derive_noise(ref, 4.0, geom512).sigma_sq == pytest.approx(g2 / 10**0.4, rel=1e-14)
    ratio = derive_noise(ref, 14.0, geom512).sigma_sq / derive_noise(ref, 4.0, geom512).sigma_sq
    assert ratio == pytest.approx(0.1, rel=1e-12)
    array = derive_noise(ref, 4.0, geom512, "array").sigma_sq
    assert array == pytest.approx(512 * g2 / 10**0.4, rel=1e-14)


def test_noise_rejects_bad_input(geom512):
    with pytest.raises(ConfigError):
        derive_noise(PolarPoint(0, 5), float("inf"), geom512)
    with pytest.raises(ConfigError):
        derive_noise(PolarPoint(0, 5), 3.0, geom512, "per_watt")


def test_scene_json_round_trip(tmp_path, geom64, rng):
    scene = sample_scene(rng, 4, geom64, REGION)
    p = tmp_path / "scene.json"
    scene.save(p)
    back = ChannelScene.load(p)
    assert back == scene
    assert np.array_equal(synthesize_channel(back), synthesize_channel(scene))


def test_fresnel_model_on_grid_path_is_a_codeword(geom64):
    from beamtrain.codebook import codeword_at

    scene = ChannelScene(geom64, PolarPoint(0.25, 3.0))
    h = synthesize_channel(scene, steering="fresnel")
    w = codeword_at(geom64, 0.25, 3.0)
    assert abs(abs(np.vdot(w, h)) / np.linalg.norm(h) - 1) < 1e-14
