import json
import math

import pytest

from occ_urllc.config import (KNOWN_KEYS, ConfigError, Scenario, SystemParams, UrllcSpec, dbw_to_watts,
                              load_config, save_config, scenario_from_dict, watts_to_dbw)
from occ_urllc.link import BPSK, ModulationScheme


def test_dbw_round_trip():
    assert dbw_to_watts(0.0) == 1.0
    assert dbw_to_watts(10.0) == pytest.approx(10.0)
    assert watts_to_dbw(dbw_to_watts(5.0)) == pytest.approx(5.0)


def test_table_defaults():
    p = SystemParams()
    assert p.focal_length / p.pixel_size == pytest.approx(2000.0, rel=1e-15)
    assert p.lambertian_order == pytest.approx(1.0, rel=1e-12)   # half angle 60 deg
    assert p.lens_gain == pytest.approx(2.25, rel=1e-15)
    assert p.shot_noise_var == pytest.approx(1.834368e-15, rel=1e-12)
    assert p.thermal_noise_var == pytest.approx(5.430588082150513e-17, rel=1e-12)
    assert p.noise_var == pytest.approx(p.shot_noise_var + p.thermal_noise_var)


def test_l0_composition():
    p = SystemParams()
    expect = p.frame_rate * p.n_leds_per_row * p.w * p.led_strip_length / (6 * math.tan(math.radians(45)))
    assert p.l0 == pytest.approx(expect, rel=1e-14)
    assert p.w == 512
    assert SystemParams(w_interpretation="total_pixels").w == 512 * 512


def test_ber_gap_constant():
    assert UrllcSpec(ber_tgt=1e-4).k == pytest.approx(0.19735, abs=1e-5)
    assert UrllcSpec(ber_tgt=1e-5).k == pytest.approx(0.15146, abs=1e-5)


@pytest.mark.parametrize("field,value", [
    ("fov_deg", -1.0), ("half_angle_deg", 90.0), ("focal_length", 0.0), ("packet_size", -5.0),
])
def test_invalid_params_rejected(field, value):
    with pytest.raises(ConfigError) as exc:
        SystemParams(**{field: value})
    assert exc.value.field_name == field


@pytest.mark.parametrize("kw", [dict(ber_tgt=0.0), dict(ber_tgt=0.5), dict(tau_max=0.0), dict(p_max=-1.0),
                                dict(modulation_set=())])
def test_invalid_spec_rejected(kw):
    with pytest.raises(ConfigError):
        UrllcSpec(**kw)


def test_to_dict_round_trip():
    sc = Scenario()
    again = scenario_from_dict(sc.to_dict())
    assert again == sc
    assert set(sc.to_dict()) == set(KNOWN_KEYS)


def test_strict_and_lenient_unknown_keys():
    with pytest.raises(ConfigError):
        scenario_from_dict({"bogus": 1})
    with pytest.warns(UserWarning, match="bogus"):
        sc = scenario_from_dict({"bogus": 1, "ber_tgt": 1e-5}, strict=False)
    assert sc.spec.ber_tgt == 1e-5


def test_modulation_set_parsed():
    sc = scenario_from_dict({"modulation_set": ["BPSK", "16-QAM", 64]})
    assert sc.spec.modulation_set == (BPSK, ModulationScheme(16), ModulationScheme(64))


def test_load_and_save(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"p_max": 10.0, "alpha": 3.5}))
    sc = load_config(path)
    assert sc.spec.p_max == 10.0 and sc.distance.alpha == 3.5
    assert sc.params == SystemParams()
    out = tmp_path / "o.json"
    save_config(sc, out)
    assert load_config(out) == sc


def test_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "empty.json"
    path.write_text("")
    assert load_config(path) == Scenario()


def test_wrong_type_rejected():
    with pytest.raises(ConfigError):
        scenario_from_dict({"alpha": "three"})


def test_immutable():
    p = SystemParams()
    with pytest.raises(AttributeError):
        p.fov_deg = 10.0
