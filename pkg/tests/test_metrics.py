import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from beamtrain.errors import ConfigError
from beamtrain.metrics import (
    CSV_HEADER,
    NOT_REACHED,
    TrialRecord,
    ZeroVectorError,
    achievable_rate,
    captured_energy_count,
    l2_error,
    l2_error_aligned,
    mean_and_se,
    min_overhead_for_fraction,
    perfect_csi_rate,
    records_from_csv,
    records_to_csv,
)

from .conftest import crandn

finite = st.floats(-10, 10, allow_nan=False)
cvec = arrays(np.float64, 16, elements=finite).map(lambda a: a[:8] + 1j * a[8:]).filter(
    lambda v: np.linalg.norm(v) > 1e-3
)
phase = st.floats(0, 2 * np.pi)
scale = st.floats(1e-3, 1e3)


def test_l2_examples(rng):
    h = crandn(rng, 10)
    assert l2_error(h, h) == 0
    assert l2_error(h, 2 * h) == pytest.approx(0, abs=1e-15)
    assert l2_error(h, -h) == pytest.approx(2, rel=1e-15)


def test_l2_is_not_phase_aligned(rng):
    h = crandn(rng, 10)
    assert l2_error(h, 1j * h) == pytest.approx(np.sqrt(2))
    assert l2_error_aligned(h, 1j * h) == pytest.approx(0, abs=1e-14)


@given(h=cvec, g=cvec, a=scale, b=scale)
def test_l2_symmetric_scale_invariant(h, g, a, b):
    e = l2_error(h, g)
    assert 0 <= e <= 2
    assert e == pytest.approx(l2_error(g, h), abs=1e-12)
    assert e == pytest.approx(l2_error(a * h, b * g), abs=1e-12)
    assert l2_error_aligned(h, g) <= e + 1e-12


def test_zero_vectors_rejected(rng):
    h = crandn(rng, 4)
    with pytest.raises(ZeroVectorError):
        l2_error(h, np.zeros(4))
    with pytest.raises(ZeroVectorError):
        achievable_rate(h, np.zeros(4), 1.0)
    with pytest.raises(ConfigError):
        achievable_rate(h, h, 0.0)


def test_rate_examples(rng):
    h = crandn(rng, 12)
    s2 = 0.3
    assert perfect_csi_rate(h, s2) == pytest.approx(np.log2(1 + np.vdot(h, h).real / s2), rel=1e-15)
    orth = np.zeros(12, complex)
    orth[0], orth[1] = h[1].conj(), -h[0].conj()
    assert achievable_rate(h, orth, s2) == pytest.approx(0, abs=1e-15)


@given(h=cvec, g=cvec, phi=phase, c=scale, s2=st.floats(1e-3, 1e3))
def test_rate_bounded_and_scale_invariant(h, g, phi, c, s2):
    r = achievable_rate(h, g, s2)
    assert r <= perfect_csi_rate(h, s2) * (1 + 1e-12) + 1e-12
    assert achievable_rate(h, c * np.exp(1j * phi) * g, s2) == pytest.approx(r, rel=1e-12, abs=1e-14)
    assert achievable_rate(h, np.exp(1j * phi) * h, s2) == pytest.approx(perfect_csi_rate(h, s2), rel=1e-12)


def test_min_overhead_examples():
    upper = [10.0, 12.0]
    rates = {1: [1.0, 1.0], 2: [9.0, 11.0], 3: [9.95, 11.9], 4: [10.0, 12.0]}
    assert min_overhead_for_fraction(rates, upper, 0.0, 4) == 1
    assert min_overhead_for_fraction(rates, upper, 0.9, 4) == 2
    assert min_overhead_for_fraction(rates, upper, 0.99, 4) == 3
    assert min_overhead_for_fraction(rates, upper, 1.0, 4) == 4
    assert min_overhead_for_fraction(rates, upper, 1.0, 3) == NOT_REACHED
    # perfect CSI at every K clears any bar at K = 1
    assert min_overhead_for_fraction(lambda k: upper, upper, 1.0, 10) == 1


def test_min_overhead_is_lazy():
    calls = []

    def rates(k):
        calls.append(k)
        return [float(k)]

    assert min_overhead_for_fraction(rates, [10.0], 0.5, 64) == 5
    assert calls == [1, 2, 3, 4, 5]


def test_min_overhead_errors():
    with pytest.raises(ConfigError):
        min_overhead_for_fraction({1: [1.0]}, [1.0], 1.5, 3)
    with pytest.raises(ConfigError):
        min_overhead_for_fraction({1: [1.0]}, [], 0.5, 3)
    with pytest.raises(ConfigError):
        min_overhead_for_fraction({1: []}, [1.0], 0.5, 3)


def test_trial_record_validation():
    with pytest.raises(ValueError):
        TrialRecord("NF", 3, 4.0, 5, 0, 2.5, 1.0, 2.0)
    with pytest.raises(ValueError):
        TrialRecord("NF", 3, 4.0, 5, 0, 0.5, 3.0, 2.0)


def test_csv_round_trip():
    recs = [
        TrialRecord("DFT", 1, 4.0, 5, 0, 0.123456789012345678, 7.25, 9.5),
        TrialRecord("NF_LASSO", 25, 30.0, 9, 99, 1e-17, 16.000000000000004, 16.1),
    ]
    text = records_to_csv(recs)
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    assert CSV_HEADER == ("scheme", "K", "snr_db", "L", "seed", "l2_error", "rate", "rate_upper")
    assert records_from_csv(text) == recs
    assert records_to_csv(records_from_csv(text)) == text


def test_mean_and_se():
    m, se = mean_and_se([1.0, 2.0, 3.0, 4.0])
    assert m == 2.5
    assert se == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
    assert mean_and_se([5.0]) == (5.0, 0.0)


def test_captured_energy_orthonormal_basis(rng):
    q, _ = np.linalg.qr(crandn(rng, 8, 8))
    coeff = np.array([4.0, 2.0, 1.0, 0.5, 0, 0, 0, 0])
    h = q @ coeff
    total = np.sum(coeff**2)
    # energies 16, 4, 1, 0.25 of 21.25
    assert captured_energy_count(h, q, 16 / total) == 1
    assert captured_energy_count(h, q, 0.94) == 2
    assert captured_energy_count(h, q, 0.95) == 3
    assert captured_energy_count(h, q, 21 / total) == 3
    assert captured_energy_count(h, q, 1.0) == 4


def test_captured_energy_ignores_redundant_beams(rng):
    q, _ = np.linalg.qr(crandn(rng, 6, 6))
    h = q[:, 0] + 0.5 * q[:, 1]
    cols = np.column_stack([q[:, 0], q[:, 0], q[:, 1]])
    # the duplicate adds no energy, so all three beams are needed
    assert captured_energy_count(h, cols, 1.0) == 3
    assert captured_energy_count(h, cols[:, :2], 1.0) == NOT_REACHED
    with pytest.raises(ConfigError):
        captured_energy_count(h, cols, 0.0)
