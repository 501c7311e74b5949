import json

import numpy as np
import pytest
from scipy import stats

from mbswave.linalg import dft_adjoint
from mbswave.model import (
    Scenario,
    ScenarioError,
    check_sequences,
    load_scenario,
    random_phase_init,
    scenario_from_dict,
    synthesize,
)


def test_reproduction_scenario_is_valid():
    sc = Scenario(m_bs=2, n_sub=256, blocked=tuple(range(105, 143)), eta=1.5)
    assert len(sc.blocked) == 38
    assert sc.n_active == 218
    assert sc.avg_power == pytest.approx(218 / 256**2)
    assert sc.gamma == pytest.approx(0.9 * 218 / 256)


def test_empty_mask_accepted_by_default():
    sc = Scenario(n_sub=16, blocked=())
    assert sc.avg_power == pytest.approx(1 / 16)


def test_empty_mask_rejected_when_required():
    with pytest.raises(ScenarioError, match="blocked"):
        Scenario(n_sub=16, blocked=(), require_mask=True)


def test_eta_below_one_rejected():
    with pytest.raises(ScenarioError, match="eta must be"):
        Scenario(eta=0.5)


@pytest.mark.parametrize(
    "kwargs, field",
    [
        ({"m_bs": 0}, "m_bs"),
        ({"gamma": -1.0}, "gamma"),
        ({"n_sub": 8, "blocked": tuple(range(8))}, "blocked"),
        ({"n_sub": 8, "blocked": (9,)}, "blocked"),
        ({"n_sub": 8, "blocked": (), "mainlobe_halfwidth": 8}, "mainlobe_halfwidth"),
        ({"rho_u": 0.0}, "rho_u"),
        ({"rho_v": -2.0}, "rho_v"),
        ({"max_iters": 0}, "max_iters"),
    ],
)
def test_invalid_fields_name_the_field(kwargs, field):
    with pytest.raises(ScenarioError) as info:
        Scenario(**kwargs)
    assert info.value.field_name == field


def test_unknown_key_rejected():
    with pytest.raises(ScenarioError, match="unknown"):
        scenario_from_dict({"n_sub": 16, "blocked": [], "colour": "blue"})


def test_range_form_and_overrides(tmp_path):
    path = tmp_path / "sc.json"
    path.write_text(json.dumps({"n_sub": 64, "blocked": {"start": 10, "stop": 19}}))
    sc = load_scenario(path, {"seed": 7, "eta": "2.0"})
    assert sc.blocked == tuple(range(10, 20))
    assert sc.seed == 7 and sc.eta == 2.0


def test_to_dict_round_trip():
    sc = Scenario(n_sub=32, blocked=(3, 4, 5), seed=11)
    assert scenario_from_dict(sc.to_dict()) == sc


def test_random_phase_deterministic():
    sc = Scenario(n_sub=32, blocked=(1, 2))
    np.testing.assert_array_equal(random_phase_init(sc, 5), random_phase_init(sc, 5))
    assert not np.array_equal(random_phase_init(sc, 5), random_phase_init(sc, 6))


def test_random_phase_satisfies_spectrum_constraint():
    sc = Scenario(n_sub=256)
    s = random_phase_init(sc)
    check_sequences(s, sc)
    assert np.all(s[:, list(sc.blocked)] == 0)


def test_random_phase_histogram_uniform():
    sc = Scenario(m_bs=40, n_sub=256, blocked=tuple(range(6)))
    phases = np.angle(random_phase_init(sc, 123)[:, sc.active_mask]).ravel() % (2 * np.pi)
    assert phases.size == 10_000
    counts, _ = np.histogram(phases, bins=20, range=(0, 2 * np.pi))
    assert stats.chisquare(counts).pvalue > 0.01


def test_synthesize_full_spectrum_energy():
    s = np.exp(1j * np.array([[0.1, 2.0, -1.0, 0.7]]))
    x = synthesize(s)
    assert np.linalg.norm(x) ** 2 == pytest.approx(1.0, abs=1e-12)


def test_synthesize_masked_energy():
    sc = Scenario(n_sub=256)
    x = synthesize(random_phase_init(sc))
    np.testing.assert_allclose(np.linalg.norm(x, axis=1) ** 2, 218 / 256, atol=1e-10)
    # the derived average power is the mean per-sample power
    np.testing.assert_allclose(np.mean(np.abs(x) ** 2, axis=1), sc.avg_power, atol=1e-10)


def test_single_tone_has_flat_envelope():
    s = np.zeros((1, 16), dtype=complex)
    s[0, 5] = np.exp(0.3j)
    np.testing.assert_allclose(np.abs(synthesize(s)), 1 / 16, atol=1e-15)


def test_synthesize_is_linear():
    rng = np.random.default_rng(0)
    s1 = rng.standard_normal((2, 32)) + 1j * rng.standard_normal((2, 32))
    s2 = rng.standard_normal((2, 32)) + 1j * rng.standard_normal((2, 32))
    a, b = 0.3 - 2j, 1.7j
    np.testing.assert_allclose(
        synthesize(a * s1 + b * s2), a * synthesize(s1) + b * synthesize(s2), atol=1e-10
    )
    np.testing.assert_allclose(synthesize(s1), dft_adjoint(s1))


def test_check_sequences_rejects_leakage():
    sc = Scenario(n_sub=8, blocked=(2,))
    s = random_phase_init(sc)
    s[0, 2] = 1e-3
    with pytest.raises(ValueError):
        check_sequences(s, sc)
