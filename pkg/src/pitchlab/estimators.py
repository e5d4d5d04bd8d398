"""Fundamental-frequency estimators.

Eight methods share one note-level contract: estimate f0 on each analysis
frame of the note, drop silent/unvoiced frames, and report the median of
the surviving frame estimates (the energy-summation method works on the
whole note directly). Frequency-domain methods window with a periodic
Hann and zero-pad frames to a long FFT for a fine candidate grid;
time-domain methods work on rectangular frames.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigOutOfRange, LpcUnstable
from .sigproc import (
    SILENCE_RMS,
    AudioBuffer,
    Frame,
    Spectrogram,
    Spectrum,
    cmnd_function,
    frame_signal,
    hann_window,
    magnitude_spectrum,
    nsdf_function,
    _overlap_energy,
    _raw_autocorr,
)

FRAME_LEN = 2048
HOP = 512
# Frames are zero-padded to this FFT length by the frequency-domain
# estimators; at 44.1 kHz the grid step is ~2.7 Hz, fine enough that bin
# quantization stays well inside a quarter tone down to 100 Hz.
N_FFT = 16384

LPC_ORDER = 12
YIN_THRESHOLD = 0.15
NSDF_PEAK_FRACTION = 0.8
_CEPSTRUM_FLOOR = 1e-10


@dataclass(frozen=True)
class EstimatorConfig:
    """Search range and harmonic count for one estimator."""

    f_min: float
    f_max: float
    n_harmonics: int = 1

    def __post_init__(self):
        if not 0 <= self.f_min < self.f_max:
            raise ValueError(f"need 0 <= f_min < f_max, got [{self.f_min}, {self.f_max}]")
        if self.n_harmonics < 1:
            raise ValueError("n_harmonics must be >= 1")


@dataclass(frozen=True)
class PitchEstimate:
    """One note-level (or frame-level) pitch decision.

    f0 is None when the estimator declares the input unvoiced. per_frame,
    when present, holds the raw frame-level estimates behind a note-level
    median (None entries mark unvoiced frames).
    """

    f0: float | None
    method_id: str
    per_frame: tuple[float | None, ...] | None = None

    def __post_init__(self):
        if self.f0 is not None and not (math.isfinite(self.f0) and self.f0 > 0):
            raise ValueError(f"voiced f0 must be positive and finite, got {self.f0}")

    @property
    def voiced(self) -> bool:
        return self.f0 is not None


@dataclass(frozen=True)
class CandidateGrid:
    """Ascending candidate frequencies, one per spectral bin or lag."""

    frequencies: np.ndarray

    def __post_init__(self):
        freqs = np.asarray(self.frequencies, dtype=np.float64)
        object.__setattr__(self, "frequencies", freqs)
        if freqs.size == 0:
            raise ValueError("a candidate grid cannot be empty")
        if np.any(freqs <= 0) or np.any(np.diff(freqs) <= 0):
            raise ValueError("candidates must be positive and strictly increasing")

    def __len__(self) -> int:
        return self.frequencies.size


# Default search ranges. The product method searches the whole spectrum
# (its top is capped by the harmonic count at use time); the residual
# -harmonics method uses a narrow band because its comb is evaluated on a
# whitened spectrum and wanders outside typical voice/melody ranges.
DEFAULT_CONFIGS: dict[str, EstimatorConfig] = {
    "acf": EstimatorConfig(20.0, 1000.0),
    "nsdf": EstimatorConfig(20.0, 1000.0),
    "yin": EstimatorConfig(20.0, 1000.0),
    "hps": EstimatorConfig(0.0, math.inf, 3),
    "stft": EstimatorConfig(20.0, 1000.0, 4),
    "ml": EstimatorConfig(20.0, 800.0, 5),
    "cepstrum": EstimatorConfig(20.0, 1000.0),
    "srh": EstimatorConfig(80.0, 500.0, 5),
}


def default_config(method: str) -> EstimatorConfig:
    try:
        return DEFAULT_CONFIGS[method]
    except KeyError:
        raise KeyError(f"unknown estimator {method!r}; known: {sorted(DEFAULT_CONFIGS)}")


def load_estimator_configs(path) -> dict[str, EstimatorConfig]:
    """Read per-method config overrides from a JSON file.

    The file maps method names to partial {f_min, f_max, n_harmonics}
    objects; unspecified fields keep their defaults.
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: expected a JSON object of method overrides")
    configs = dict(DEFAULT_CONFIGS)
    for name, fields in raw.items():
        if name not in DEFAULT_CONFIGS:
            raise ValueError(f"{path}: unknown estimator {name!r}")
        if not isinstance(fields, dict):
            raise ValueError(f"{path}: override for {name!r} must be an object")
        base = configs[name]
        allowed = {"f_min", "f_max", "n_harmonics"}
        unknown = set(fields) - allowed
        if unknown:
            raise ValueError(f"{path}: unknown fields {sorted(unknown)} for {name!r}")
        configs[name] = EstimatorConfig(
            f_min=float(fields.get("f_min", base.f_min)),
            f_max=float(fields.get("f_max", base.f_max)),
            n_harmonics=int(fields.get("n_harmonics", base.n_harmonics)),
        )
    return configs


# ---------------------------------------------------------------------------
# shared picking helpers
# ---------------------------------------------------------------------------


def _argmax_first(values: np.ndarray) -> int:
    return int(np.argmax(values))


def _argmax_last(values: np.ndarray) -> int:
    return values.size - 1 - int(np.argmax(values[::-1]))


def _argmin_last(values: np.ndarray) -> int:
    return values.size - 1 - int(np.argmin(values[::-1]))


def _parabolic_offset(y_minus: float, y_center: float, y_plus: float) -> float:
    """Vertex offset in [-1, 1] of the parabola through three samples."""
    denom = y_minus - 2.0 * y_center + y_plus
    if denom == 0.0 or not math.isfinite(denom):
        return 0.0
    offset = 0.5 * (y_minus - y_plus) / denom
    return offset if abs(offset) <= 1.0 else 0.0


def _clamp(f0: float, cfg: EstimatorConfig) -> float:
    return float(min(max(f0, cfg.f_min), cfg.f_max))


def _spectral_band(spectrum: Spectrum, cfg: EstimatorConfig, harmonic_cap: int = 1) -> np.ndarray:
    """Candidate bin indices for a spectrum under a config.

    harmonic_cap > 1 keeps every candidate's highest harmonic inside the
    spectrum (needed when all terms of a product must exist).
    """
    n_bins = len(spectrum)
    top_bin = n_bins - 1
    nyquist = spectrum.bin_hz * top_bin
    if cfg.f_min >= nyquist:
        raise ConfigOutOfRange(
            f"f_min {cfg.f_min} Hz is at or above the Nyquist frequency {nyquist} Hz"
        )
    b_lo = max(1, math.ceil(cfg.f_min / spectrum.bin_hz))
    b_hi = min(math.floor(min(cfg.f_max, nyquist) / spectrum.bin_hz), top_bin // harmonic_cap)
    if b_lo > b_hi:
        raise ConfigOutOfRange(
            f"no spectral candidates in [{cfg.f_min}, {cfg.f_max}] Hz at bin width "
            f"{spectrum.bin_hz:.4f} Hz"
        )
    return np.arange(b_lo, b_hi + 1)


def _lag_window(sample_rate: int, frame_len: int, cfg: EstimatorConfig) -> tuple[int, int]:
    """Inclusive lag bounds for a config; long lags stop at half the frame."""
    f_max_eff = min(cfg.f_max, sample_rate / 2.0)
    lo = math.ceil(sample_rate / f_max_eff)
    hi = frame_len // 2
    if cfg.f_min > 0:
        hi = min(hi, math.floor(sample_rate / cfg.f_min))
    if lo > hi:
        raise ConfigOutOfRange(
            f"no usable lags for [{cfg.f_min}, {cfg.f_max}] Hz with frame length {frame_len}"
        )
    return lo, hi


def _is_silent(rms: float) -> bool:
    return rms < SILENCE_RMS


# ---------------------------------------------------------------------------
# frequency-domain estimators
# ---------------------------------------------------------------------------


def hps_estimate(spectrum: Spectrum, cfg: EstimatorConfig | None = None) -> PitchEstimate:
    """Harmonic product of bin-decimated spectrum copies.

    Each candidate's h-th factor is the bin at exactly h times its index,
    and the product is evaluated as a sum of logs for numerical stability.
    A candidate whose comb skips over a harmonic lands on near-empty bins
    and its product collapses, which is what makes the method selective.
    All-zero spectra are unvoiced.
    """
    cfg = cfg or DEFAULT_CONFIGS["hps"]
    mags = spectrum.magnitudes
    if not np.any(mags > 0):
        return PitchEstimate(None, "hps")
    bins = _spectral_band(spectrum, cfg, harmonic_cap=cfg.n_harmonics)
    # Relative floor keeps the log finite on empty bins without breaking
    # amplitude invariance.
    floor = 1e-12 * float(np.max(mags))
    log_mags = np.log(mags + floor)
    score = log_mags[bins].copy()
    for h in range(2, cfg.n_harmonics + 1):
        score += log_mags[bins * h]
    best = bins[_argmax_first(score)]
    return PitchEstimate(_clamp(best * spectrum.bin_hz, cfg), "hps")


def stft_energy_estimate(
    spectrogram: Spectrogram, cfg: EstimatorConfig | None = None
) -> PitchEstimate:
    """Pick the frequency whose harmonics collect the most summed energy.

    Magnitudes are first summed over all frames of the note; candidates
    are then scored by the plain sum of their harmonic bins, with ties
    resolved toward the lowest candidate.
    """
    cfg = cfg or DEFAULT_CONFIGS["stft"]
    energy = spectrogram.summed_magnitudes()
    if not np.any(energy > 0):
        return PitchEstimate(None, "stft")
    ref = spectrogram.spectra[0]
    bins = _spectral_band(ref, cfg)
    n_bins = energy.size
    scores = np.zeros(bins.size, dtype=np.float64)
    for h in range(1, cfg.n_harmonics + 1):
        idx = bins * h
        valid = idx < n_bins
        scores[valid] += energy[idx[valid]]
    best = bins[_argmax_first(scores)]
    return PitchEstimate(_clamp(best * ref.bin_hz, cfg), "stft")


def ml_comb_estimate(spectrum: Spectrum, cfg: EstimatorConfig | None = None) -> PitchEstimate:
    """Comb matching: score(k) = sum_n |X(n k)|, ties to the lowest candidate."""
    cfg = cfg or DEFAULT_CONFIGS["ml"]
    mags = spectrum.magnitudes
    if not np.any(mags > 0):
        return PitchEstimate(None, "ml")
    bins = _spectral_band(spectrum, cfg)
    n_bins = mags.size
    scores = np.zeros(bins.size, dtype=np.float64)
    for h in range(1, cfg.n_harmonics + 1):
        idx = bins * h
        valid = idx < n_bins
        scores[valid] += mags[idx[valid]]
    best = bins[_argmax_first(scores)]
    return PitchEstimate(_clamp(best * spectrum.bin_hz, cfg), "ml")


def cepstrum_estimate(frame: Frame, cfg: EstimatorConfig | None = None) -> PitchEstimate:
    """Quefrency peak of the log-magnitude spectrum's inverse transform.

    The search window spans the lags for [f_min, f_max], capped at half
    the frame; ties go to the longest lag (lowest frequency).
    """
    cfg = cfg or DEFAULT_CONFIGS["cepstrum"]
    if _is_silent(frame.rms):
        return PitchEstimate(None, "cepstrum")
    spectrum = magnitude_spectrum(frame)
    ceps = np.fft.irfft(np.log(spectrum.magnitudes + _CEPSTRUM_FLOOR), n=len(frame))
    fs = frame.sample_rate
    q_lo, q_hi = _lag_window(fs, len(frame), cfg)
    window = ceps[q_lo : q_hi + 1]
    best = q_lo + _argmax_last(window)
    return PitchEstimate(_clamp(fs / best, cfg), "cepstrum")


# ---------------------------------------------------------------------------
# linear prediction and the residual-harmonics estimator
# ---------------------------------------------------------------------------


def lpc_residual(frame: Frame, order: int = LPC_ORDER) -> Frame:
    """Inverse-filter a frame by its own linear predictor.

    order 0 returns the frame unchanged. Raises LpcUnstable when the
    frame has no energy or the recursion loses positive definiteness.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    x = frame.samples
    if order == 0:
        return frame
    if order >= x.size:
        raise ValueError(f"order {order} must be smaller than the frame length {x.size}")
    r = _raw_autocorr(x, order)
    if r[0] <= 0 or not np.all(np.isfinite(r)):
        raise LpcUnstable("frame has no energy to predict")
    a = np.zeros(order + 1, dtype=np.float64)
    a[0] = 1.0
    err = r[0]
    for i in range(1, order + 1):
        acc = r[i]
        if i > 1:
            acc += np.dot(a[1:i], r[1:i][::-1])
        k = -acc / err
        a[1 : i + 1] = a[1 : i + 1] + k * a[i - 1 :: -1][:i]
        err *= 1.0 - k * k
        if err <= 0 or not math.isfinite(err):
            raise LpcUnstable("prediction error collapsed; input is degenerate")
    residual = lfilter(a, [1.0], x)
    return Frame(
        samples=residual,
        start_index=frame.start_index,
        window_kind=frame.window_kind,
        sample_rate=frame.sample_rate,
    )


def srh_scores(spectrum: Spectrum, cfg: EstimatorConfig | None = None) -> tuple[CandidateGrid, np.ndarray]:
    """Residual-harmonics scores over the candidate grid.

    score(f) = E(f) + sum_k [E(k f) - E((k - 1/2) f)] for k = 2..n, where
    E is the (residual) magnitude spectrum sampled at the nearest bin.
    Returns the grid and one score per candidate.
    """
    cfg = cfg or DEFAULT_CONFIGS["srh"]
    bins = _spectral_band(spectrum, cfg)
    mags = spectrum.magnitudes
    n_bins = mags.size

    def at(idx: np.ndarray) -> np.ndarray:
        vals = np.zeros(idx.size, dtype=np.float64)
        ok = idx < n_bins
        vals[ok] = mags[idx[ok]]
        return vals

    scores = at(bins)
    for k in range(2, cfg.n_harmonics + 1):
        scores += at(bins * k)
        half = np.floor((k - 0.5) * bins + 0.5).astype(int)
        scores -= at(half)
    return CandidateGrid(bins * spectrum.bin_hz), scores


def srh_pick_spectrum(spectrum: Spectrum, cfg: EstimatorConfig | None = None) -> float:
    """Best residual-harmonics candidate for one (residual) spectrum."""
    cfg = cfg or DEFAULT_CONFIGS["srh"]
    grid, scores = srh_scores(spectrum, cfg)
    return _clamp(float(grid.frequencies[_argmax_first(scores)]), cfg)


def srh_estimate(
    note_frames: Sequence[Frame],
    cfg: EstimatorConfig | None = None,
    n_fft: int = N_FFT,
) -> PitchEstimate:
    """Note-level estimate from per-frame LPC residual spectra.

    Each frame is whitened by a 12th-order predictor; its residual's
    magnitude spectrum is scored with srh_scores and the winner recorded.
    Silent or degenerate frames vote unvoiced; the note f0 is the median
    of the voiced votes.
    """
    cfg = cfg or DEFAULT_CONFIGS["srh"]
    votes: list[float | None] = []
    for frame in note_frames:
        if _is_silent(frame.rms):
            votes.append(None)
            continue
        try:
            residual = lpc_residual(frame, LPC_ORDER)
        except LpcUnstable:
            votes.append(None)
            continue
        pad = max(n_fft, len(frame))
        mags = np.abs(np.fft.rfft(residual.samples, n=pad))
        spectrum = Spectrum(mags, frame.sample_rate / pad)
        votes.append(srh_pick_spectrum(spectrum, cfg))
    return _median_estimate("srh", votes)


# ---------------------------------------------------------------------------
# time-domain estimators
# ---------------------------------------------------------------------------


def _acf_pick(r: np.ndarray, sample_rate: int, lo: int, hi: int, cfg: EstimatorConfig) -> float:
    lag = lo + _argmax_last(r[lo : hi + 1])
    return _clamp(sample_rate / lag, cfg)


def acf_estimate(frame: Frame, cfg: EstimatorConfig | None = None) -> PitchEstimate:
    """Autocorrelation peak inside the lag window; ties to the longest lag."""
    cfg = cfg or DEFAULT_CONFIGS["acf"]
    if _is_silent(frame.rms):
        return PitchEstimate(None, "acf")
    lo, hi = _lag_window(frame.sample_rate, len(frame), cfg)
    r = _raw_autocorr(frame.samples, hi)
    return PitchEstimate(_acf_pick(r, frame.sample_rate, lo, hi, cfg), "acf")


def _nsdf_pick(n: np.ndarray, sample_rate: int, lo: int, hi: int, cfg: EstimatorConfig) -> float:
    window = n[lo : hi + 1]
    threshold = NSDF_PEAK_FRACTION * float(np.max(window))
    tau = None
    for t in range(lo, hi + 1):
        if n[t] >= threshold and n[t] > n[t - 1] and n[t] >= n[t + 1]:
            tau = t
            break
    if tau is None:
        tau = lo + _argmax_last(window)
    offset = 0.0
    if tau >= 1 and tau + 1 < n.size:
        offset = _parabolic_offset(n[tau - 1], n[tau], n[tau + 1])
    return _clamp(sample_rate / (tau + offset), cfg)


def nsdf_estimate(frame: Frame, cfg: EstimatorConfig | None = None) -> PitchEstimate:
    """First normalized-square-difference peak within 80% of the global max.

    The winning lag is refined by parabolic interpolation before being
    converted to frequency.
    """
    cfg = cfg or DEFAULT_CONFIGS["nsdf"]
    if _is_silent(frame.rms):
        return PitchEstimate(None, "nsdf")
    lo, hi = _lag_window(frame.sample_rate, len(frame), cfg)
    n = nsdf_function(frame, min(hi + 1, len(frame) - 1)).values
    return PitchEstimate(_nsdf_pick(n, frame.sample_rate, lo, hi, cfg), "nsdf")


def _yin_pick(d: np.ndarray, sample_rate: int, lo: int, hi: int, cfg: EstimatorConfig) -> float:
    tau = None
    for t in range(lo, hi + 1):
        if d[t] < YIN_THRESHOLD:
            tau = t
            while tau + 1 <= hi and d[tau + 1] < d[tau]:
                tau += 1
            break
    if tau is None:
        tau = lo + _argmin_last(d[lo : hi + 1])
    offset = 0.0
    if tau >= 1 and tau + 1 < d.size:
        offset = _parabolic_offset(d[tau - 1], d[tau], d[tau + 1])
    return _clamp(sample_rate / (tau + offset), cfg)


def yin_estimate(frame: Frame, cfg: EstimatorConfig | None = None) -> PitchEstimate:
    """First cumulative-mean-normalized-difference dip under 0.15.

    Falls back to the window's global minimum when no dip crosses the
    threshold; the chosen lag is refined by parabolic interpolation.
    """
    cfg = cfg or DEFAULT_CONFIGS["yin"]
    if _is_silent(frame.rms):
        return PitchEstimate(None, "yin")
    lo, hi = _lag_window(frame.sample_rate, len(frame), cfg)
    d = cmnd_function(frame, min(hi + 1, len(frame) - 1)).values
    return PitchEstimate(_yin_pick(d, frame.sample_rate, lo, hi, cfg), "yin")


# ---------------------------------------------------------------------------
# note-level analysis and dispatch
# ---------------------------------------------------------------------------


class NoteAnalysis:
    """Shared per-note framing, spectra and correlations.

    Built once per note so the estimators (and the ensemble) never repeat
    FFT work. All properties are lazy.
    """

    def __init__(
        self,
        note: AudioBuffer,
        frame_len: int = FRAME_LEN,
        hop: int = HOP,
        n_fft: int = N_FFT,
    ):
        self.note = note
        self.frame_len = frame_len
        self.hop = hop
        self.n_fft = max(n_fft, frame_len)

    @property
    def sample_rate(self) -> int:
        return self.note.sample_rate

    @cached_property
    def rect_frames(self) -> list[Frame]:
        return frame_signal(self.note, self.frame_len, self.hop, "rectangular")

    @cached_property
    def frame_rms(self) -> np.ndarray:
        return np.array([f.rms for f in self.rect_frames])

    @cached_property
    def hann_frames(self) -> list[Frame]:
        window = hann_window(self.frame_len)
        return [
            Frame(f.samples * window, f.start_index, "hann", f.sample_rate)
            for f in self.rect_frames
        ]

    @cached_property
    def spectra(self) -> list[Spectrum]:
        mat = np.stack([f.samples for f in self.hann_frames])
        mags = np.abs(np.fft.rfft(mat, n=self.n_fft, axis=1))
        bin_hz = self.sample_rate / self.n_fft
        return [Spectrum(row, bin_hz) for row in mags]

    @cached_property
    def spectrogram(self) -> Spectrogram:
        return Spectrogram(tuple(self.spectra), self.hop)

    @cached_property
    def rect_corr(self) -> tuple[np.ndarray, np.ndarray]:
        """(r, m) matrices over all rectangular frames, lags 0..frame_len/2+1."""
        mat = np.stack([f.samples for f in self.rect_frames])
        max_lag = min(self.frame_len // 2 + 1, self.frame_len - 1)
        size = 1
        while size < 2 * self.frame_len:
            size *= 2
        spec = np.fft.rfft(mat, n=size, axis=1)
        r = np.fft.irfft(spec * np.conj(spec), n=size, axis=1)[:, : max_lag + 1]
        m = np.stack([_overlap_energy(f.samples, max_lag) for f in self.rect_frames])
        return r, m


def _median_estimate(method_id: str, votes: list[float | None]) -> PitchEstimate:
    voiced = [v for v in votes if v is not None]
    if not voiced:
        return PitchEstimate(None, method_id, per_frame=tuple(votes))
    return PitchEstimate(float(np.median(voiced)), method_id, per_frame=tuple(votes))


def _note_hps(analysis: NoteAnalysis, cfg: EstimatorConfig) -> PitchEstimate:
    votes = [
        None if _is_silent(rms) else hps_estimate(spec, cfg).f0
        for spec, rms in zip(analysis.spectra, analysis.frame_rms)
    ]
    return _median_estimate("hps", votes)


def _note_ml(analysis: NoteAnalysis, cfg: EstimatorConfig) -> PitchEstimate:
    votes = [
        None if _is_silent(rms) else ml_comb_estimate(spec, cfg).f0
        for spec, rms in zip(analysis.spectra, analysis.frame_rms)
    ]
    return _median_estimate("ml", votes)


def _note_stft(analysis: NoteAnalysis, cfg: EstimatorConfig) -> PitchEstimate:
    if all(_is_silent(rms) for rms in analysis.frame_rms):
        return PitchEstimate(None, "stft")
    return stft_energy_estimate(analysis.spectrogram, cfg)


def _note_cepstrum(analysis: NoteAnalysis, cfg: EstimatorConfig) -> PitchEstimate:
    votes = [
        None if _is_silent(rms) else cepstrum_estimate(frame, cfg).f0
        for frame, rms in zip(analysis.hann_frames, analysis.frame_rms)
    ]
    return _median_estimate("cepstrum", votes)


def _note_srh(analysis: NoteAnalysis, cfg: EstimatorConfig) -> PitchEstimate:
    return srh_estimate(analysis.hann_frames, cfg, n_fft=analysis.n_fft)


def _note_lag_method(
    analysis: NoteAnalysis, cfg: EstimatorConfig, method_id: str
) -> PitchEstimate:
    lo, hi = _lag_window(analysis.sample_rate, analysis.frame_len, cfg)
    r_mat, m_mat = analysis.rect_corr
    fs = analysis.sample_rate
    votes: list[float | None] = []
    for i, rms in enumerate(analysis.frame_rms):
        if _is_silent(rms):
            votes.append(None)
            continue
        r = r_mat[i]
        if method_id == "acf":
            votes.append(_acf_pick(r, fs, lo, hi, cfg))
        elif method_id == "nsdf":
            m = m_mat[i]
            with np.errstate(invalid="ignore", divide="ignore"):
                n = np.where(m > 0, 2.0 * r / m, 0.0)
            np.clip(n, -1.0, 1.0, out=n)
            votes.append(_nsdf_pick(n, fs, lo, hi, cfg))
        else:
            m = m_mat[i]
            d = np.clip(m - 2.0 * r, 0.0, None)
            dprime = np.ones_like(d)
            running = np.cumsum(d[1:])
            taus = np.arange(1, d.size, dtype=np.float64)
            with np.errstate(invalid="ignore", divide="ignore"):
                dprime[1:] = np.where(running > 0, d[1:] * taus / running, 1.0)
            votes.append(_yin_pick(dprime, fs, lo, hi, cfg))
    return _median_estimate(method_id, votes)


def _note_acf(analysis: NoteAnalysis, cfg: EstimatorConfig) -> PitchEstimate:
    return _note_lag_method(analysis, cfg, "acf")


def _note_nsdf(analysis: NoteAnalysis, cfg: EstimatorConfig) -> PitchEstimate:
    return _note_lag_method(analysis, cfg, "nsdf")


def _note_yin(analysis: NoteAnalysis, cfg: EstimatorConfig) -> PitchEstimate:
    return _note_lag_method(analysis, cfg, "yin")


@dataclass(frozen=True)
class NoteMethod:
    """Registry entry tying a method name to its note-level entry point."""

    name: str
    default_config: EstimatorConfig
    note_fn: Callable[[NoteAnalysis, EstimatorConfig], PitchEstimate]


REGISTRY: dict[str, NoteMethod] = {
    name: NoteMethod(name, DEFAULT_CONFIGS[name], fn)
    for name, fn in {
        "acf": _note_acf,
        "nsdf": _note_nsdf,
        "yin": _note_yin,
        "hps": _note_hps,
        "stft": _note_stft,
        "ml": _note_ml,
        "cepstrum": _note_cepstrum,
        "srh": _note_srh,
    }.items()
}


def estimate_note(
    note: AudioBuffer,
    method: str,
    cfg: EstimatorConfig | None = None,
) -> PitchEstimate:
    """Note-level f0 for one method name from the registry."""
    entry = REGISTRY.get(method)
    if entry is None:
        raise KeyError(f"unknown estimator {method!r}; known: {sorted(REGISTRY)}")
    analysis = NoteAnalysis(note)
    return entry.note_fn(analysis, cfg or entry.default_config)


def estimate_note_many(
    analysis: NoteAnalysis,
    wanted: Mapping[str, EstimatorConfig | None],
) -> dict[str, PitchEstimate]:
    """Run several methods on one shared analysis (FFT work done once)."""
    out: dict[str, PitchEstimate] = {}
    for name, cfg in wanted.items():
        entry = REGISTRY.get(name)
        if entry is None:
            raise KeyError(f"unknown estimator {name!r}; known: {sorted(REGISTRY)}")
        out[name] = entry.note_fn(analysis, cfg or entry.default_config)
    return out
