import math

import numpy as np
import pytest

from pitchlab.errors import LpcUnstable
from pitchlab.estimators import (
    DEFAULT_CONFIGS,
    EstimatorConfig,
    NoteAnalysis,
    PitchEstimate,
    REGISTRY,
    acf_estimate,
    cepstrum_estimate,
    default_config,
    estimate_note,
    estimate_note_many,
    hps_estimate,
    load_estimator_configs,
    lpc_residual,
    ml_comb_estimate,
    nsdf_estimate,
    srh_pick_spectrum,
    srh_scores,
    stft_energy_estimate,
    yin_estimate,
)
from pitchlab.sigproc import AudioBuffer, Spectrogram, Spectrum

from conftest import rect_frame, saw_buffer, sine, sine_buffer

QUARTER_TONE = 2.0 ** (1.0 / 24.0) - 1.0  # about 2.93 percent


def test_default_search_ranges():
    assert default_config("acf") == EstimatorConfig(20.0, 1000.0, 1)
    assert default_config("nsdf") == EstimatorConfig(20.0, 1000.0, 1)
    assert default_config("yin") == EstimatorConfig(20.0, 1000.0, 1)
    assert default_config("hps") == EstimatorConfig(0.0, math.inf, 3)
    assert default_config("stft") == EstimatorConfig(20.0, 1000.0, 4)
    assert default_config("ml") == EstimatorConfig(20.0, 800.0, 5)
    assert default_config("cepstrum") == EstimatorConfig(20.0, 1000.0, 1)
    assert default_config("srh") == EstimatorConfig(80.0, 500.0, 5)
    with pytest.raises(KeyError):
        default_config("melodia")


def test_config_validation():
    with pytest.raises(ValueError):
        EstimatorConfig(-1.0, 100.0)
    with pytest.raises(ValueError):
        EstimatorConfig(200.0, 100.0)
    with pytest.raises(ValueError):
        EstimatorConfig(100.0, 100.0)
    with pytest.raises(ValueError):
        EstimatorConfig(20.0, 1000.0, 0)


def test_pitch_estimate_validation():
    assert PitchEstimate(None, "acf").voiced is False
    assert PitchEstimate(440.0, "acf").voiced is True
    with pytest.raises(ValueError):
        PitchEstimate(0.0, "acf")
    with pytest.raises(ValueError):
        PitchEstimate(-5.0, "acf")


def test_load_configs_partial_override(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text('{"yin": {"f_max": 600}, "ml": {"n_harmonics": 3}}')
    configs = load_estimator_configs(path)
    assert configs["yin"] == EstimatorConfig(20.0, 600.0, 1)
    assert configs["ml"] == EstimatorConfig(20.0, 800.0, 3)
    assert configs["acf"] == DEFAULT_CONFIGS["acf"]


def test_load_configs_rejects_unknown(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text('{"swipe": {"f_max": 600}}')
    with pytest.raises(ValueError):
        load_estimator_configs(path)
    path.write_text('{"yin": {"threshold": 0.1}}')
    with pytest.raises(ValueError):
        load_estimator_configs(path)


# ---------------------------------------------------------------------------
# time-domain estimators, frame level
# ---------------------------------------------------------------------------


def test_acf_exact_on_integer_period():
    # 100 Hz at 8 kHz: the period of 80 samples divides the frame exactly
    frame = rect_frame(sine(100.0, 1024, 8000), 8000)
    est = acf_estimate(frame)
    assert est.f0 == pytest.approx(100.0, abs=1e-9)


def test_acf_prefers_longest_lag_on_tie():
    # a sine has equal correlation peaks at every period multiple inside
    # the window; the longest lag (lowest frequency) must win
    frame = rect_frame(sine(400.0, 2048, 8000), 8000)
    est = acf_estimate(frame)
    assert est.f0 < 450.0


def test_yin_finds_fundamental_not_subharmonic():
    frame = rect_frame(sine(250.0, 1024, 8000), 8000)
    est = yin_estimate(frame)
    assert est.f0 == pytest.approx(250.0, rel=1e-3)


def test_yin_silence_unvoiced():
    frame = rect_frame(np.zeros(2048), 44100)
    assert yin_estimate(frame).voiced is False


def test_nsdf_interpolates_fractional_period():
    # 247 Hz at 44.1 kHz has period 178.54 samples
    frame = rect_frame(sine(247.0, 2048, 44100), 44100)
    est = nsdf_estimate(frame)
    assert est.f0 == pytest.approx(247.0, rel=2e-3)


@pytest.mark.parametrize("method", [acf_estimate, nsdf_estimate, yin_estimate])
def test_lag_methods_respect_range(method, rng):
    cfg = EstimatorConfig(150.0, 400.0)
    for _ in range(10):
        frame = rect_frame(rng.standard_normal(2048) * 0.3, 44100)
        est = method(frame, cfg)
        if est.voiced:
            assert 150.0 <= est.f0 <= 400.0


# ---------------------------------------------------------------------------
# spectral estimators, hand-built spectra
# ---------------------------------------------------------------------------


def test_hps_picks_fundamental_of_harmonic_comb():
    mags = np.zeros(64)
    mags[10], mags[20], mags[30] = 1.0, 0.5, 0.25
    est = hps_estimate(Spectrum(mags, 10.0))
    assert est.f0 == pytest.approx(100.0)


def test_hps_all_zero_unvoiced():
    assert hps_estimate(Spectrum(np.zeros(64), 10.0)).voiced is False


def test_hps_amplitude_invariant_on_scaled_spectrum():
    mags = np.zeros(128)
    mags[[7, 14, 21]] = [1.0, 0.4, 0.2]
    a = hps_estimate(Spectrum(mags, 10.0))
    b = hps_estimate(Spectrum(mags * 1000.0, 10.0))
    assert a.f0 == b.f0


def test_stft_sums_over_frames():
    row = np.zeros(128)
    row[12], row[24], row[36] = 1.0, 0.6, 0.3
    spectra = tuple(Spectrum(row, 10.0) for _ in range(3))
    est = stft_energy_estimate(Spectrogram(spectra, 512))
    assert est.f0 == pytest.approx(120.0)


def test_stft_subdivision_tie_goes_to_lowest():
    # an on-bin pure tone: candidates 10, 20 and 40 each collect exactly
    # the one nonzero magnitude, and the tie resolves to the lowest
    row = np.zeros(128)
    row[40] = 1.0
    est = stft_energy_estimate(Spectrogram((Spectrum(row, 10.0),), 512))
    assert est.f0 == pytest.approx(100.0)


def test_ml_comb_tie_goes_to_lowest():
    mags = np.zeros(128)
    mags[4], mags[8], mags[16] = 1.0, 1.0, 1.0
    est = ml_comb_estimate(Spectrum(mags, 10.0), EstimatorConfig(20.0, 800.0, 2))
    # score(4) = M[4] + M[8] = 2 and score(8) = M[8] + M[16] = 2
    assert est.f0 == pytest.approx(40.0)


def test_ml_matches_exhaustive_search(rng):
    cfg = DEFAULT_CONFIGS["ml"]
    for _ in range(50):
        n = int(rng.integers(64, 400))
        mags = rng.uniform(0.0, 1.0, n)
        bin_hz = float(rng.uniform(2.0, 12.0))
        spectrum = Spectrum(mags, bin_hz)

        nyquist = bin_hz * (n - 1)
        b_lo = max(1, math.ceil(cfg.f_min / bin_hz))
        b_hi = min(int(math.floor(min(cfg.f_max, nyquist) / bin_hz)), n - 1)
        best_b, best_score = None, -1.0
        for b in range(b_lo, b_hi + 1):
            score = sum(mags[b * h] for h in range(1, 6) if b * h < n)
            if score > best_score:
                best_b, best_score = b, score
        expected = min(max(best_b * bin_hz, cfg.f_min), cfg.f_max)

        est = ml_comb_estimate(spectrum, cfg)
        assert est.f0 == pytest.approx(expected, rel=1e-12)


def test_srh_scores_reward_harmonics():
    # peaks at bins 5..25 in steps of 5: candidate bin 5 collects all five
    mags = np.zeros(40)
    mags[[5, 10, 15, 20, 25]] = 1.0
    grid, scores = srh_scores(Spectrum(mags, 100.0))
    assert list(grid.frequencies) == [100.0, 200.0, 300.0, 400.0, 500.0]
    assert scores[4] == pytest.approx(5.0)
    assert np.all(scores[:4] <= 0.5)
    assert srh_pick_spectrum(Spectrum(mags, 100.0)) == pytest.approx(500.0)


def test_srh_interharmonic_energy_penalized():
    # energy halfway between candidate 5's harmonics drives its score
    # negative while the true comb on bins of 3 stays positive
    mags = np.zeros(40)
    mags[[8, 13, 18, 23]] = 1.0
    mags[[3, 6, 9, 12, 15]] = 1.0
    grid, scores = srh_scores(Spectrum(mags, 100.0))
    assert scores[4] == pytest.approx(-3.0)
    assert scores[2] == pytest.approx(4.0)
    assert srh_pick_spectrum(Spectrum(mags, 100.0)) == pytest.approx(300.0)


# ---------------------------------------------------------------------------
# cepstrum
# ---------------------------------------------------------------------------


def test_cepstrum_impulse_train_exact():
    # period of 100 samples at 16 kHz
    x = np.zeros(2048)
    x[::100] = 1.0
    est = cepstrum_estimate(rect_frame(x, 16000))
    assert est.f0 == pytest.approx(160.0, abs=1e-9)


def test_cepstrum_noise_stays_in_range(rng):
    frame = rect_frame(rng.uniform(-0.5, 0.5, 2048), 16000)
    est = cepstrum_estimate(frame)
    if est.voiced:
        assert 20.0 <= est.f0 <= 1000.0


def test_cepstrum_silence_unvoiced():
    assert cepstrum_estimate(rect_frame(np.zeros(2048), 16000)).voiced is False


# ---------------------------------------------------------------------------
# linear prediction
# ---------------------------------------------------------------------------


def test_lpc_order_zero_is_identity(rng):
    frame = rect_frame(rng.standard_normal(256), 8000)
    out = lpc_residual(frame, 0)
    assert np.array_equal(out.samples, frame.samples)


def test_lpc_whitens_resonant_signal(rng):
    # AR(2) process with a strong resonance; prediction should shrink it
    x = np.zeros(4096)
    e = rng.standard_normal(4096)
    for t in range(2, 4096):
        x[t] = 1.6 * x[t - 1] - 0.81 * x[t - 2] + e[t]
    frame = rect_frame(x[2048:4096], 8000)
    residual = lpc_residual(frame, 12)
    gain = np.var(frame.samples) / np.var(residual.samples)
    assert gain > 5.0


def test_lpc_gain_at_least_one_on_noise(rng):
    for _ in range(5):
        frame = rect_frame(rng.standard_normal(2048), 8000)
        residual = lpc_residual(frame, 12)
        assert np.var(frame.samples) / np.var(residual.samples) >= 0.99


def test_lpc_rejects_bad_inputs():
    with pytest.raises(ValueError):
        lpc_residual(rect_frame(np.ones(8), 8000), 8)
    with pytest.raises(LpcUnstable):
        lpc_residual(rect_frame(np.zeros(64), 8000), 12)


# ---------------------------------------------------------------------------
# note-level behavior
# ---------------------------------------------------------------------------

ALL_METHODS = sorted(REGISTRY)


def test_registry_lists_all_eight():
    assert ALL_METHODS == ["acf", "cepstrum", "hps", "ml", "nsdf", "srh", "stft", "yin"]


@pytest.mark.parametrize("method", ALL_METHODS)
def test_all_silent_note_is_unvoiced(method):
    note = AudioBuffer(np.zeros(44100 // 4), 44100)
    assert estimate_note(note, method).voiced is False


def test_unknown_method_raises():
    with pytest.raises(KeyError):
        estimate_note(sine_buffer(220.0), "pyin")


SWEEP_METHODS = ["acf", "nsdf", "yin", "hps", "stft", "ml", "srh"]


@pytest.mark.parametrize("method", SWEEP_METHODS)
def test_clean_sawtooth_sweep_within_quarter_tone(method):
    for freq in np.geomspace(110.0, 440.0, 8):
        est = estimate_note(saw_buffer(float(freq), 0.3), method)
        assert est.voiced, (method, freq)
        assert abs(est.f0 - freq) / freq <= QUARTER_TONE, (method, freq, est.f0)


@pytest.mark.parametrize("method", ALL_METHODS)
def test_amplitude_invariance(method):
    loud = estimate_note(saw_buffer(220.0, 0.3, amp=0.5), method)
    soft = estimate_note(saw_buffer(220.0, 0.3, amp=0.005), method)
    assert loud.f0 == pytest.approx(soft.f0, rel=1e-9)


@pytest.mark.parametrize("method", ALL_METHODS)
def test_estimate_is_deterministic(method):
    note = saw_buffer(330.0, 0.3)
    first = estimate_note(note, method)
    second = estimate_note(note, method)
    assert first == second


def test_note_median_over_frames():
    est = estimate_note(saw_buffer(220.0, 0.5), "yin")
    assert est.per_frame is not None
    voiced = [v for v in est.per_frame if v is not None]
    assert est.f0 == pytest.approx(float(np.median(voiced)))


def test_note_with_silent_tail_still_voiced():
    samples = np.concatenate([saw_buffer(196.0, 0.3).samples, np.zeros(22050)])
    est = estimate_note(AudioBuffer(samples, 44100), "yin")
    assert est.voiced
    assert est.f0 == pytest.approx(196.0, rel=QUARTER_TONE)


def test_estimate_note_many_matches_single_calls():
    note = saw_buffer(261.63, 0.4)
    analysis = NoteAnalysis(note)
    wanted = {name: None for name in ALL_METHODS}
    combined = estimate_note_many(analysis, wanted)
    for name in ALL_METHODS:
        assert combined[name].f0 == estimate_note(note, name).f0


def test_custom_range_clamps_note_estimate():
    cfg = EstimatorConfig(300.0, 500.0)
    est = estimate_note(saw_buffer(220.0, 0.3), "yin", cfg)
    if est.voiced:
        assert 300.0 <= est.f0 <= 500.0


@pytest.mark.parametrize("method", ALL_METHODS)
def test_noise_estimates_stay_in_configured_range(method, rng):
    cfg_kwargs = {"n_harmonics": DEFAULT_CONFIGS[method].n_harmonics}
    cfg = EstimatorConfig(100.0, 450.0, **cfg_kwargs)
    for _ in range(5):
        note = AudioBuffer(rng.uniform(-0.4, 0.4, 22050), 44100)
        est = estimate_note(note, method, cfg)
        if est.voiced:
            assert 100.0 <= est.f0 <= 450.0
