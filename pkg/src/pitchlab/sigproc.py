"""Core signal types and frame-level transforms.

Audio is handled as mono float64 throughout. Frames are windowed at
extraction time so downstream transforms never re-window; the window
choice is recorded on the frame itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyBuffer, LagOutOfRange, NonPowerOfTwo

WINDOW_KINDS = ("rectangular", "hann")

# Frames quieter than this RMS are treated as silence by the estimators.
SILENCE_RMS = 1e-5


def _as_float_vector(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D sample array, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class AudioBuffer:
    """A mono audio signal with its sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        object.__setattr__(self, "samples", _as_float_vector(self.samples))
        if int(self.sample_rate) <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "sample_rate", int(self.sample_rate))
        if self.samples.size and not np.all(np.isfinite(self.samples)):
            raise ValueError("audio samples must be finite")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def slice_seconds(self, start: float, stop: float) -> "AudioBuffer":
        """Return the samples between two time points as a new buffer."""
        i = max(0, int(round(start * self.sample_rate)))
        j = min(self.samples.size, int(round(stop * self.sample_rate)))
        return AudioBuffer(self.samples[i:j].copy(), self.sample_rate)


@dataclass(frozen=True)
class Frame:
    """One analysis frame, already windowed.

    start_index is the offset of the frame's first sample in the source
    signal. window_kind records which window was applied at extraction.
    """

    samples: np.ndarray
    start_index: int
    window_kind: str
    sample_rate: int

    def __post_init__(self):
        object.__setattr__(self, "samples", _as_float_vector(self.samples))
        if self.window_kind not in WINDOW_KINDS:
            raise ValueError(f"unknown window kind {self.window_kind!r}")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def rms(self) -> float:
        if self.samples.size == 0:
            return 0.0
        return float(np.sqrt(np.mean(self.samples**2)))


@dataclass(frozen=True)
class Spectrum:
    """Magnitude spectrum of a single frame (bins 0..N/2, un-normalized)."""

    magnitudes: np.ndarray
    bin_hz: float

    def __post_init__(self):
        object.__setattr__(self, "magnitudes", _as_float_vector(self.magnitudes))
        if self.bin_hz <= 0:
            raise ValueError("bin_hz must be positive")
        if self.magnitudes.size and (
            not np.all(np.isfinite(self.magnitudes)) or np.any(self.magnitudes < 0)
        ):
            raise ValueError("magnitudes must be finite and non-negative")

    def __len__(self) -> int:
        return self.magnitudes.size

    @property
    def n_fft(self) -> int:
        return 2 * (self.magnitudes.size - 1)


@dataclass(frozen=True)
class Spectrogram:
    """A run of equally spaced spectra from one signal."""

    spectra: tuple[Spectrum, ...]
    hop: int

    def __post_init__(self):
        object.__setattr__(self, "spectra", tuple(self.spectra))
        if not self.spectra:
            raise ValueError("a spectrogram needs at least one spectrum")
        if self.hop < 1:
            raise ValueError("hop must be >= 1")
        first = self.spectra[0]
        for s in self.spectra[1:]:
            if len(s) != len(first) or s.bin_hz != first.bin_hz:
                raise ValueError("all spectra must share length and bin spacing")

    def __len__(self) -> int:
        return len(self.spectra)

    @property
    def bin_hz(self) -> float:
        return self.spectra[0].bin_hz

    def summed_magnitudes(self) -> np.ndarray:
        """Per-bin magnitude totals across all frames."""
        return np.sum([s.magnitudes for s in self.spectra], axis=0)


@dataclass(frozen=True)
class CorrelationFunction:
    """Lag-indexed values produced by one of the correlation transforms.

    kind is "acf" (raw autocorrelation), "nsdf" (normalized square
    difference, values in [-1, 1]) or "yin-cmnd" (cumulative-mean
    normalized difference, value 1 at lag 0 by definition).
    """

    values: np.ndarray
    kind: str

    _KINDS = ("acf", "nsdf", "yin-cmnd")

    def __post_init__(self):
        object.__setattr__(self, "values", _as_float_vector(self.values))
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown correlation kind {self.kind!r}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("correlation values must be finite")
        if self.kind == "nsdf" and self.values.size:
            if np.max(np.abs(self.values)) > 1.0 + 1e-9:
                raise ValueError("nsdf values must lie in [-1, 1]")
        if self.kind == "yin-cmnd" and self.values.size:
            if abs(self.values[0] - 1.0) > 1e-12:
                raise ValueError("cmnd value at lag 0 must be 1")

    def __len__(self) -> int:
        return self.values.size

    @property
    def max_lag(self) -> int:
        return self.values.size - 1


# ---------------------------------------------------------------------------
# windows and framing
# ---------------------------------------------------------------------------


def hann_window(n: int) -> np.ndarray:
    """Periodic Hann window, w[k] = 0.5 * (1 - cos(2 pi k / n))."""
    k = np.arange(n, dtype=np.float64)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * k / n))


def frame_signal(
    buffer: AudioBuffer,
    frame_len: int,
    hop: int,
    window_kind: str = "rectangular",
) -> list[Frame]:
    """Split a buffer into windowed frames.

    Parameters
    ----------
    buffer : AudioBuffer
        Non-empty input signal.
    frame_len : int
        Samples per frame.
    hop : int
        Step between frame starts, at least 1.
    window_kind : str
        "rectangular" or "hann" (periodic).

    Returns
    -------
    list of Frame
        floor((len - frame_len) / hop) + 1 frames. A signal shorter than
        frame_len yields exactly one zero-padded frame.
    """
    if len(buffer) == 0:
        raise EmptyBuffer("cannot frame an empty buffer")
    if frame_len < 1:
        raise ValueError("frame_len must be >= 1")
    if hop < 1:
        raise ValueError("hop must be >= 1")
    if window_kind not in WINDOW_KINDS:
        raise ValueError(f"unknown window kind {window_kind!r}")

    x = buffer.samples
    if x.size < frame_len:
        padded = np.zeros(frame_len, dtype=np.float64)
        padded[: x.size] = x
        starts = [0]
        chunks = [padded]
    else:
        n_frames = (x.size - frame_len) // hop + 1
        starts = [i * hop for i in range(n_frames)]
        chunks = [x[s : s + frame_len] for s in starts]

    window = hann_window(frame_len) if window_kind == "hann" else None
    frames = []
    for start, chunk in zip(starts, chunks):
        samples = chunk * window if window is not None else chunk.copy()
        frames.append(
            Frame(
                samples=samples,
                start_index=start,
                window_kind=window_kind,
                sample_rate=buffer.sample_rate,
            )
        )
    return frames


# ---------------------------------------------------------------------------
# spectral and correlation transforms
# ---------------------------------------------------------------------------


def magnitude_spectrum(frame: Frame) -> Spectrum:
    """Un-normalized magnitude spectrum of one frame.

    The frame length must be a power of two no smaller than 64. Magnitudes
    are |DFT| for bins 0..N/2, so a full-scale on-bin cosine peaks at N/2.
    """
    n = len(frame)
    if n < 64 or n & (n - 1):
        raise NonPowerOfTwo(f"frame length {n} is not a power of two >= 64")
    mags = np.abs(np.fft.rfft(frame.samples))
    return Spectrum(magnitudes=mags, bin_hz=frame.sample_rate / n)


def _raw_autocorr(x: np.ndarray, max_lag: int) -> np.ndarray:
    """r(tau) = sum_t x(t) x(t+tau) for tau = 0..max_lag, via FFT."""
    n = x.size
    size = 1
    while size < 2 * n:
        size *= 2
    spec = np.fft.rfft(x, n=size)
    r = np.fft.irfft(spec * np.conj(spec), n=size)
    return r[: max_lag + 1]


def _overlap_energy(x: np.ndarray, max_lag: int) -> np.ndarray:
    """m(tau) = sum_t (x(t)^2 + x(t+tau)^2) over the overlapping region."""
    c = np.cumsum(x * x)
    total = c[-1]
    n = x.size
    taus = np.arange(max_lag + 1)
    head = c[n - 1 - taus]
    tail = total - np.concatenate(([0.0], c[: max_lag]))
    return head + tail


def _check_lag(frame: Frame, max_lag: int) -> None:
    if max_lag < 0 or max_lag >= len(frame):
        raise LagOutOfRange(
            f"max_lag {max_lag} outside [0, {len(frame) - 1}] for frame of length {len(frame)}"
        )


def autocorrelation(frame: Frame, max_lag: int) -> CorrelationFunction:
    """Raw autocorrelation r(tau) = sum_t x(t) x(t+tau), tau = 0..max_lag."""
    _check_lag(frame, max_lag)
    return CorrelationFunction(_raw_autocorr(frame.samples, max_lag), kind="acf")


def nsdf_function(frame: Frame, max_lag: int) -> CorrelationFunction:
    """Normalized square difference n(tau) = 2 r(tau) / m(tau).

    m(tau) is the summed energy of the two overlapping segments, so values
    lie in [-1, 1]; lags with an all-zero overlap are reported as 0.
    """
    _check_lag(frame, max_lag)
    r = _raw_autocorr(frame.samples, max_lag)
    m = _overlap_energy(frame.samples, max_lag)
    with np.errstate(invalid="ignore", divide="ignore"):
        n = np.where(m > 0, 2.0 * r / m, 0.0)
    # FFT round-off can leave |n| a hair above 1 on degenerate overlaps.
    np.clip(n, -1.0, 1.0, out=n)
    return CorrelationFunction(n, kind="nsdf")


def cmnd_function(frame: Frame, max_lag: int) -> CorrelationFunction:
    """Cumulative-mean normalized difference d'(tau) with d'(0) = 1.

    d(tau) is the squared difference function; each later value is d(tau)
    divided by the running mean of d(1..tau).
    """
    _check_lag(frame, max_lag)
    r = _raw_autocorr(frame.samples, max_lag)
    m = _overlap_energy(frame.samples, max_lag)
    d = m - 2.0 * r
    np.clip(d, 0.0, None, out=d)
    out = np.ones(max_lag + 1, dtype=np.float64)
    if max_lag >= 1:
        running = np.cumsum(d[1:])
        taus = np.arange(1, max_lag + 1, dtype=np.float64)
        with np.errstate(invalid="ignore", divide="ignore"):
            out[1:] = np.where(running > 0, d[1:] * taus / running, 1.0)
    return CorrelationFunction(out, kind="yin-cmnd")
