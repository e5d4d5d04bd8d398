"""Accuracy metrics, note annotations, synthetic songs and the benchmark.

The headline error metric for a song is the mean of sqrt(|f_est - f_true|)
over its notes, with unvoiced estimates scored as 0 Hz. A MIDI-domain
mean absolute error is provided as a clearly separate alternative; the
two are never mixed in one report column.
"""

from __future__ import annotations

import concurrent.futures
import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .audio_io import read_wav, write_wav
from .ensemble import EnsembleSpec, fuse_votes, run_external
from .errors import CountMismatch, InvalidAnnotation, NonPositiveFrequency
from .estimators import (
    REGISTRY,
    EstimatorConfig,
    NoteAnalysis,
    estimate_note_many,
)
from .noise import NoiseRef, Scenario, mix_at_snr
from .sigproc import AudioBuffer

logger = logging.getLogger(__name__)

TRUTH_F0_RANGE = (20.0, 4000.0)

ENSEMBLE_METHOD = "ensemble"

# Synthetic melody parameters: a seeded random walk over this MIDI range,
# one sawtooth note per step.
SONG_MIDI_RANGE = (45, 69)
SONG_NOTE_COUNT = (8, 20)
SONG_NOTE_SECONDS = (0.25, 0.5)
SONG_GAP_SECONDS = 0.02
SONG_AMPLITUDE = 0.3


def hz_to_midi(f0: float) -> float:
    """Frequency in Hz to fractional MIDI number (A4 = 440 Hz = 69)."""
    if f0 <= 0 or not math.isfinite(f0):
        raise NonPositiveFrequency(f"frequency must be positive, got {f0}")
    return 69.0 + 12.0 * math.log2(f0 / 440.0)


def midi_to_hz(midi: float) -> float:
    """Fractional MIDI number to frequency in Hz."""
    return 440.0 * 2.0 ** ((midi - 69.0) / 12.0)


def _as_f0_array(values, name: str) -> np.ndarray:
    out = np.array([0.0 if v is None else float(v) for v in values], dtype=np.float64)
    if np.any(out < 0) or not np.all(np.isfinite(out)):
        raise ValueError(f"{name} must be finite and non-negative")
    return out


def pitch_error(estimates, truths) -> float:
    """Mean of sqrt(|f_est - f_true|) in Hz over paired notes.

    Unvoiced estimates (None) are scored as 0 Hz. Raises CountMismatch
    when the sequences differ in length or are empty.
    """
    est = _as_f0_array(estimates, "estimates")
    tru = _as_f0_array(truths, "truths")
    if est.size != tru.size or est.size == 0:
        raise CountMismatch(
            f"need equally many estimates and truths (>0), got {est.size} and {tru.size}"
        )
    return float(np.mean(np.sqrt(np.abs(est - tru))))


def midi_abs_error(estimates, truths) -> float:
    """Alternative metric: mean |MIDI(est) - MIDI(truth)| over paired notes.

    This is not the headline sqrt-Hz metric; it weights errors equally
    across registers. Unvoiced estimates are scored as MIDI 0.
    """
    est = _as_f0_array(estimates, "estimates")
    tru = _as_f0_array(truths, "truths")
    if est.size != tru.size or est.size == 0:
        raise CountMismatch(
            f"need equally many estimates and truths (>0), got {est.size} and {tru.size}"
        )
    est_midi = np.array([hz_to_midi(v) if v > 0 else 0.0 for v in est])
    tru_midi = np.array([hz_to_midi(v) for v in tru])
    return float(np.mean(np.abs(est_midi - tru_midi)))


# ---------------------------------------------------------------------------
# annotations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoteSegment:
    """One note's extent in seconds plus its reference pitch, if known."""

    onset: float
    offset: float
    f0_truth: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.onset) and math.isfinite(self.offset)):
            raise InvalidAnnotation("onset and offset must be finite")
        if self.onset < 0 or self.onset >= self.offset:
            raise InvalidAnnotation(
                f"need 0 <= onset < offset, got [{self.onset}, {self.offset}]"
            )
        if self.f0_truth is not None and not (
            TRUTH_F0_RANGE[0] <= self.f0_truth <= TRUTH_F0_RANGE[1]
        ):
            raise InvalidAnnotation(
                f"reference f0 {self.f0_truth} outside {TRUTH_F0_RANGE} Hz"
            )


@dataclass(frozen=True)
class SongAnnotation:
    """A song's audio location plus its ordered, non-overlapping notes."""

    song_id: str
    audio_path: str
    notes: tuple[NoteSegment, ...]

    def __post_init__(self):
        object.__setattr__(self, "notes", tuple(self.notes))
        if not self.notes:
            raise InvalidAnnotation(f"{self.song_id}: a song needs at least one note")
        for a, b in zip(self.notes, self.notes[1:]):
            if b.onset < a.offset:
                raise InvalidAnnotation(
                    f"{self.song_id}: notes overlap or are unsorted at {b.onset:.3f}s"
                )

    def truths(self) -> list[float]:
        missing = [i for i, n in enumerate(self.notes) if n.f0_truth is None]
        if missing:
            raise InvalidAnnotation(
                f"{self.song_id}: notes {missing} lack a reference f0"
            )
        return [n.f0_truth for n in self.notes]


def read_annotation(path, song_id: str | None = None, audio_path: str | None = None) -> SongAnnotation:
    """Parse a sidecar annotation: one "onset_sec offset_sec f0_hz" per line."""
    path = Path(path)
    notes = []
    text = path.read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise InvalidAnnotation(f"{path}:{lineno}: expected 3 fields, got {len(parts)}")
        try:
            onset, offset, f0 = (float(p) for p in parts)
        except ValueError as exc:
            raise InvalidAnnotation(f"{path}:{lineno}: non-numeric field") from exc
        notes.append(NoteSegment(onset, offset, f0))
    if not notes:
        raise InvalidAnnotation(f"{path}: no notes found")
    return SongAnnotation(
        song_id=song_id or path.stem,
        audio_path=audio_path or str(path.with_suffix(".wav")),
        notes=tuple(notes),
    )


def write_annotation(path, notes: Sequence[NoteSegment]) -> None:
    lines = [f"{n.onset:.6f} {n.offset:.6f} {n.f0_truth:.6f}" for n in notes]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# synthetic songs
# ---------------------------------------------------------------------------


def synth_song(
    seed: int,
    sample_rate: int = 44100,
    min_duration_s: float | None = None,
) -> tuple[AudioBuffer, tuple[NoteSegment, ...]]:
    """A seeded sawtooth melody: a random walk over MIDI 45..69.

    8 to 20 notes by default; min_duration_s keeps adding notes until the
    song is at least that long (used for timing checks).
    """
    rng = np.random.default_rng(seed)
    lo, hi = SONG_MIDI_RANGE
    n_notes = int(rng.integers(SONG_NOTE_COUNT[0], SONG_NOTE_COUNT[1] + 1))
    midi = int(rng.integers(lo, hi + 1))
    fade = int(0.005 * sample_rate)

    chunks: list[np.ndarray] = []
    notes: list[NoteSegment] = []
    cursor = 0
    i = 0
    while True:
        if i >= n_notes and (min_duration_s is None or cursor / sample_rate >= min_duration_s):
            break
        duration = float(rng.uniform(*SONG_NOTE_SECONDS))
        n = int(round(duration * sample_rate))
        t = np.arange(n) / sample_rate
        f0 = midi_to_hz(midi)
        wave = SONG_AMPLITUDE * (2.0 * ((f0 * t) % 1.0) - 1.0)
        if fade and n > 2 * fade:
            ramp = np.linspace(0.0, 1.0, fade)
            wave[:fade] *= ramp
            wave[-fade:] *= ramp[::-1]
        notes.append(NoteSegment(cursor / sample_rate, (cursor + n) / sample_rate, f0))
        chunks.append(wave)
        gap = int(SONG_GAP_SECONDS * sample_rate)
        chunks.append(np.zeros(gap))
        cursor += n + gap
        midi = int(np.clip(midi + rng.integers(-4, 5), lo, hi))
        i += 1

    return AudioBuffer(np.concatenate(chunks), sample_rate), tuple(notes)


def materialize_songs(
    n_songs: int,
    seed: int,
    out_dir,
    sample_rate: int = 44100,
) -> list[SongAnnotation]:
    """Write n synthetic songs (WAV plus .notes sidecar) into a directory."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    songs = []
    for i in range(n_songs):
        buffer, notes = synth_song(seed + i, sample_rate)
        stem = f"song_{i:03d}"
        wav_path = out_dir / f"{stem}.wav"
        write_wav(wav_path, buffer)
        write_annotation(out_dir / f"{stem}.notes", notes)
        songs.append(SongAnnotation(stem, str(wav_path), notes))
    return songs


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BenchmarkFailure:
    song_id: str
    scenario: Scenario | None
    message: str


@dataclass(frozen=True)
class ErrorReport:
    """Benchmark results: one mean error per (method, noise, SNR) cell."""

    methods: tuple[str, ...]
    noise_ids: tuple
    snrs_db: tuple[float, ...]
    cells: Mapping
    clean: Mapping
    n_songs: int
    failures: tuple[BenchmarkFailure, ...] = ()

    def per_noise(self, method: str, noise_id) -> float:
        vals = [self.cells[(method, noise_id, snr)] for snr in self.snrs_db]
        return float(np.mean(vals))

    def noisy_average(self, method: str) -> float:
        vals = [
            self.cells[(method, nid, snr)]
            for nid in self.noise_ids
            for snr in self.snrs_db
        ]
        return float(np.mean(vals))


def _estimate_song(
    buffer: AudioBuffer,
    notes: Sequence[NoteSegment],
    base_methods: Mapping[str, EstimatorConfig | None],
    ensemble_spec: EnsembleSpec | None,
) -> dict[str, list[float | None]]:
    """Per-note estimates for every requested method over one audio take."""
    out: dict[str, list[float | None]] = {name: [] for name in base_methods}
    if ensemble_spec is not None:
        out[ENSEMBLE_METHOD] = []
    for note in notes:
        audio = buffer.slice_seconds(note.onset, note.offset)
        analysis = NoteAnalysis(audio)
        estimates = estimate_note_many(analysis, base_methods)
        for name in base_methods:
            out[name].append(estimates[name].f0)
        if ensemble_spec is not None:
            votes = [estimates[m].f0 for m in ensemble_spec.members]
            if ensemble_spec.external is not None:
                votes.append(run_external(ensemble_spec.external, audio).f0)
            out[ENSEMBLE_METHOD].append(fuse_votes(votes))
    return out


def _benchmark_task(args) -> tuple[int, str, dict[str, float] | None, str | None]:
    """One (song, scenario) evaluation; returns errors or a failure message."""
    (
        index,
        song_id,
        samples,
        sample_rate,
        notes,
        scenario,
        noise_ref,
        base_methods,
        ensemble_spec,
        wanted,
    ) = args
    try:
        t0 = time.perf_counter()
        buffer = AudioBuffer(samples, sample_rate)
        if scenario is not None:
            noise = noise_ref.resolve(sample_rate)
            buffer = mix_at_snr(buffer, noise, scenario.snr_db)
        per_method = _estimate_song(buffer, notes, base_methods, ensemble_spec)
        truths = [n.f0_truth for n in notes]
        errors = {
            name: pitch_error(per_method[name], truths)
            for name in wanted
        }
        logger.debug(
            "song %s %s: %.3f s",
            song_id,
            "clean" if scenario is None else f"{scenario.noise_id}@{scenario.snr_db:+g}dB",
            time.perf_counter() - t0,
        )
        return index, song_id, errors, None
    except Exception as exc:  # per-song failures must not abort the run
        return index, song_id, None, f"{type(exc).__name__}: {exc}"


def run_benchmark(
    songs: Sequence[SongAnnotation],
    methods: Sequence[str],
    scenarios: Sequence[Scenario],
    noise_refs: Mapping,
    *,
    ensemble_spec: EnsembleSpec | None = None,
    configs: Mapping[str, EstimatorConfig] | None = None,
    include_clean: bool = True,
    jobs: int = 1,
) -> ErrorReport:
    """Evaluate methods over songs x scenarios; failures never abort.

    methods may include "ensemble"; its members are then estimated once
    and fused, not recomputed. Results are deterministic for a fixed
    input regardless of jobs.
    """
    methods = list(methods)
    for m in methods:
        if m != ENSEMBLE_METHOD and m not in REGISTRY:
            raise KeyError(f"unknown method {m!r}")
    want_ensemble = ENSEMBLE_METHOD in methods
    spec = (ensemble_spec or EnsembleSpec()) if want_ensemble else None
    base_names = [m for m in methods if m != ENSEMBLE_METHOD]
    if spec is not None:
        base_names.extend(m for m in spec.members if m not in base_names)
    configs = configs or {}
    base_methods = {name: configs.get(name) for name in base_names}
    if spec is not None and spec.configs:
        base_methods.update(spec.configs)

    # Load songs up front; unreadable audio fails the whole song.
    loaded: list[tuple[SongAnnotation, AudioBuffer | None, str | None]] = []
    for song in songs:
        try:
            buffer = read_wav(song.audio_path)
            song.truths()
            loaded.append((song, buffer, None))
        except Exception as exc:
            loaded.append((song, None, f"{type(exc).__name__}: {exc}"))

    conditions: list[Scenario | None] = ([None] if include_clean else [])
    conditions += list(scenarios)

    tasks = []
    failures: list[BenchmarkFailure] = []
    index = 0
    for song, buffer, load_error in loaded:
        for scenario in conditions:
            if load_error is not None:
                failures.append(BenchmarkFailure(song.song_id, scenario, load_error))
                continue
            noise_ref = noise_refs[scenario.noise_id] if scenario is not None else None
            tasks.append(
                (
                    index,
                    song.song_id,
                    buffer.samples,
                    buffer.sample_rate,
                    song.notes,
                    scenario,
                    noise_ref,
                    base_methods,
                    spec,
                    tuple(methods),
                )
            )
            index += 1

    if jobs > 1 and len(tasks) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_benchmark_task, tasks, chunksize=1))
    else:
        results = [_benchmark_task(t) for t in tasks]
    results.sort(key=lambda r: r[0])

    # Aggregate means over songs, in fixed task order.
    sums: dict[tuple, float] = {}
    counts: dict[tuple, int] = {}
    task_by_index = {t[0]: t for t in tasks}
    for index, song_id, errors, message in results:
        scenario = task_by_index[index][5]
        if errors is None:
            failures.append(BenchmarkFailure(song_id, scenario, message or "unknown error"))
            continue
        for name, err in errors.items():
            key = (name, None) if scenario is None else (name, scenario.noise_id, scenario.snr_db)
            sums[key] = sums.get(key, 0.0) + err
            counts[key] = counts.get(key, 0) + 1

    cells = {}
    clean = {}
    noise_ids = list(dict.fromkeys(s.noise_id for s in scenarios))
    snrs = sorted({s.snr_db for s in scenarios})
    for name in methods:
        if include_clean and (name, None) in sums:
            clean[name] = sums[(name, None)] / counts[(name, None)]
        for s in scenarios:
            key = (name, s.noise_id, s.snr_db)
            if key in sums:
                cells[key] = sums[key] / counts[key]

    return ErrorReport(
        methods=tuple(methods),
        noise_ids=tuple(noise_ids),
        snrs_db=tuple(snrs),
        cells=cells,
        clean=clean,
        n_songs=len(songs),
        failures=tuple(failures),
    )


# ---------------------------------------------------------------------------
# report rendering
# ---------------------------------------------------------------------------


def render_long_csv(report: ErrorReport) -> str:
    """Long-form CSV: method,noise_id,snr_db,error (clean rows first)."""
    lines = ["method,noise_id,snr_db,error"]
    for m in report.methods:
        if m in report.clean:
            lines.append(f"{m},clean,,{report.clean[m]:.9g}")
    for m in report.methods:
        for nid in report.noise_ids:
            for snr in report.snrs_db:
                key = (m, nid, snr)
                if key in report.cells:
                    lines.append(f"{m},{nid},{snr:g},{report.cells[key]:.9g}")
    return "\n".join(lines) + "\n"


def parse_long_csv(text: str) -> ErrorReport:
    """Rebuild a report from its long-form CSV (for re-rendering)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "method,noise_id,snr_db,error":
        raise ValueError("not a benchmark CSV: bad header")
    methods: list[str] = []
    noise_ids: list = []
    snrs: set[float] = set()
    cells = {}
    clean = {}
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 4:
            raise ValueError(f"bad CSV row: {ln!r}")
        m, nid_raw, snr_raw, err_raw = parts
        if m not in methods:
            methods.append(m)
        err = float(err_raw)
        if nid_raw == "clean" and snr_raw == "":
            clean[m] = err
            continue
        nid = int(nid_raw) if nid_raw.isdigit() else nid_raw
        snr = float(snr_raw)
        if nid not in noise_ids:
            noise_ids.append(nid)
        snrs.add(snr)
        cells[(m, nid, snr)] = err
    return ErrorReport(
        methods=tuple(methods),
        noise_ids=tuple(noise_ids),
        snrs_db=tuple(sorted(snrs)),
        cells=cells,
        clean=clean,
        n_songs=0,
    )


def render_wide_table(report: ErrorReport) -> str:
    """Methods as rows, one column per noise source (mean over SNRs)."""
    headers = ["method"] + [str(nid) for nid in report.noise_ids]
    rows = []
    for m in report.methods:
        row = [m]
        for nid in report.noise_ids:
            try:
                row.append(f"{report.per_noise(m, nid):.2f}")
            except KeyError:
                row.append("-")
        rows.append(row)
    widths = [max(len(r[i]) for r in [headers] + rows) for i in range(len(headers))]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    out = [fmt.format(*headers)]
    out.append(fmt.format(*["-" * w for w in widths]))
    out.extend(fmt.format(*row) for row in rows)
    return "\n".join(out) + "\n"


def render_summary(report: ErrorReport) -> str:
    """Clean and noisy-average error per method."""
    headers = ["method", "clean", "noisy-average"]
    rows = []
    for m in report.methods:
        clean = f"{report.clean[m]:.2f}" if m in report.clean else "-"
        try:
            noisy = f"{report.noisy_average(m):.2f}"
        except KeyError:
            noisy = "-"
        rows.append([m, clean, noisy])
    widths = [max(len(r[i]) for r in [headers] + rows) for i in range(3)]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    out = [fmt.format(*headers), fmt.format(*["-" * w for w in widths])]
    out.extend(fmt.format(*row) for row in rows)
    return "\n".join(out) + "\n"


def render_report(report: ErrorReport, fmt: str = "text-table") -> str:
    """Render as "csv" (long form) or "text-table" (wide plus summary)."""
    if fmt == "csv":
        return render_long_csv(report)
    if fmt == "text-table":
        return render_wide_table(report) + "\n" + render_summary(report)
    raise ValueError(f"unknown report format {fmt!r}")
