"""Command line front end: estimate, mix, bench and report subcommands.

Exit codes: 0 success, 2 unreadable input or sample-rate mismatch,
3 invalid annotation, 4 benchmark with zero successful songs.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import time
from pathlib import Path

from .audio_io import read_wav, write_wav
from .ensemble import (
    DEFAULT_EXTERNAL_F_MAX,
    DEFAULT_EXTERNAL_F_MIN,
    EnsembleSpec,
    ExternalEstimator,
    ensemble_estimate,
    load_ensemble_spec,
)
from .errors import InvalidAnnotation, PitchlabError, SampleRateMismatch
from .estimators import REGISTRY, estimate_note, load_estimator_configs
from .evaluation import (
    ENSEMBLE_METHOD,
    hz_to_midi,
    materialize_songs,
    parse_long_csv,
    read_annotation,
    render_long_csv,
    render_report,
    run_benchmark,
)
from .noise import (
    DEFAULT_SNRS_DB,
    SYNTH_KINDS,
    NoiseSource,
    mix_at_snr,
    measure_snr,
    refs_from_dir,
    scenario_grid,
    synth_noise,
    synthetic_noise_refs,
)

EX_OK = 0
EX_INPUT = 2
EX_ANNOTATION = 3
EX_NO_SONGS = 4

EXTERNAL_ENV_VAR = "PITCHLAB_EXTERNAL"


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _apply_external_env(spec: EnsembleSpec) -> EnsembleSpec:
    """Let PITCHLAB_EXTERNAL override or install the external member."""
    command = os.environ.get(EXTERNAL_ENV_VAR)
    if not command:
        return spec
    base = spec.external
    external = ExternalEstimator(
        command=command,
        f_min=base.f_min if base else DEFAULT_EXTERNAL_F_MIN,
        f_max=base.f_max if base else DEFAULT_EXTERNAL_F_MAX,
        timeout_s=base.timeout_s if base else 10.0,
    )
    return dataclasses.replace(spec, external=external)


def _load_spec(path: str | None) -> EnsembleSpec:
    spec = load_ensemble_spec(path) if path else EnsembleSpec()
    return _apply_external_env(spec)


# ---------------------------------------------------------------------------
# estimate
# ---------------------------------------------------------------------------


def cmd_estimate(args) -> int:
    method = args.method
    if method != ENSEMBLE_METHOD and method not in REGISTRY:
        known = sorted(REGISTRY) + [ENSEMBLE_METHOD]
        return _fail(EX_INPUT, f"unknown method {method!r}; known: {known}")

    try:
        spec = _load_spec(args.ensemble_spec) if method == ENSEMBLE_METHOD else None
        configs = load_estimator_configs(args.config) if args.config else None
    except (OSError, ValueError, PitchlabError) as exc:
        return _fail(EX_INPUT, f"bad configuration: {exc}")

    try:
        annotation = read_annotation(args.notes, audio_path=args.audio)
    except OSError as exc:
        return _fail(EX_INPUT, f"cannot read annotation {args.notes}: {exc}")
    except InvalidAnnotation as exc:
        return _fail(EX_ANNOTATION, str(exc))

    t0 = time.perf_counter()
    try:
        buffer = read_wav(args.audio)
    except (OSError, ValueError) as exc:
        return _fail(EX_INPUT, f"cannot read audio {args.audio}: {exc}")

    for note in annotation.notes:
        try:
            audio = buffer.slice_seconds(note.onset, note.offset)
            if method == ENSEMBLE_METHOD:
                estimate = ensemble_estimate(audio, spec)
            else:
                cfg = configs[method] if configs else None
                estimate = estimate_note(audio, method, cfg)
        except (PitchlabError, ValueError) as exc:
            return _fail(
                EX_ANNOTATION,
                f"note [{note.onset:g}, {note.offset:g}] does not fit the audio: {exc}",
            )
        if estimate.voiced:
            f0_text = f"{estimate.f0:.6g}"
            midi_text = f"{hz_to_midi(estimate.f0):.6g}"
        else:
            f0_text = "0"
            midi_text = "0"
        print(f"{note.onset:.6f} {note.offset:.6f} {f0_text} {midi_text}")

    print(f"wall_time_s {time.perf_counter() - t0:.4f}", file=sys.stderr)
    return EX_OK


# ---------------------------------------------------------------------------
# mix
# ---------------------------------------------------------------------------


def _resolve_noise(noise_arg: str, n_samples: int, sample_rate: int, seed: int) -> NoiseSource:
    if noise_arg.startswith("synth:"):
        kind = noise_arg.split(":", 1)[1]
        if kind not in SYNTH_KINDS:
            raise ValueError(f"unknown synthetic noise {kind!r}; known: {list(SYNTH_KINDS)}")
        return synth_noise(kind, n_samples, sample_rate, seed)
    buffer = read_wav(noise_arg)
    return NoiseSource(noise_id=Path(noise_arg).stem, buffer=buffer, origin=noise_arg)


def cmd_mix(args) -> int:
    try:
        signal = read_wav(args.signal)
    except (OSError, ValueError) as exc:
        return _fail(EX_INPUT, f"cannot read signal {args.signal}: {exc}")
    try:
        noise = _resolve_noise(args.noise, len(signal.samples), signal.sample_rate, args.seed)
    except (OSError, ValueError) as exc:
        return _fail(EX_INPUT, f"cannot obtain noise {args.noise}: {exc}")

    try:
        mixed = mix_at_snr(signal, noise, args.snr)
    except (SampleRateMismatch, PitchlabError) as exc:
        return _fail(EX_INPUT, str(exc))

    write_wav(args.out, mixed)
    noise_component = mixed.samples - signal.samples
    achieved = measure_snr(signal.samples, noise_component)
    print(f"achieved_snr_db {achieved:.4f}")
    return EX_OK


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------


def _bench_config(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError("benchmark config must be a JSON object")
    known = {"songs", "methods", "noises", "snrs_db", "jobs", "seed", "out"}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown benchmark config keys: {sorted(unknown)}")
    return raw


def cmd_bench(args) -> int:
    try:
        config = _bench_config(args.config)
    except (OSError, ValueError) as exc:
        return _fail(EX_INPUT, f"cannot read benchmark config {args.config}: {exc}")

    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    jobs = args.jobs if args.jobs is not None else int(config.get("jobs", 1))
    out_dir = Path(args.out if args.out is not None else config.get("out", "bench_out"))

    methods = list(config.get("methods", ["hps", "stft", "ml", "srh", ENSEMBLE_METHOD]))
    for m in methods:
        if m != ENSEMBLE_METHOD and m not in REGISTRY:
            return _fail(EX_INPUT, f"unknown method {m!r} in benchmark config")

    songs_cfg = config.get("songs", {})
    if "annotations" in songs_cfg:
        try:
            songs = [read_annotation(p) for p in songs_cfg["annotations"]]
        except OSError as exc:
            return _fail(EX_INPUT, f"cannot read annotation: {exc}")
        except InvalidAnnotation as exc:
            return _fail(EX_ANNOTATION, str(exc))
    else:
        count = int(songs_cfg.get("count", 5))
        rate = int(songs_cfg.get("sample_rate", 44100))
        songs = materialize_songs(count, seed, out_dir / "songs", rate)

    noises_cfg = config.get("noises", {})
    if "dir" in noises_cfg:
        try:
            refs = refs_from_dir(noises_cfg["dir"])
        except OSError as exc:
            return _fail(EX_INPUT, f"cannot read noise directory: {exc}")
        if not refs:
            return _fail(EX_INPUT, f"no NN_name.wav noises in {noises_cfg['dir']}")
    else:
        refs = synthetic_noise_refs(seed=int(noises_cfg.get("seed", seed)))

    snrs = tuple(float(s) for s in config.get("snrs_db", DEFAULT_SNRS_DB))
    scenarios = scenario_grid(tuple(refs), snrs)

    spec = _apply_external_env(EnsembleSpec())
    report = run_benchmark(
        songs,
        methods,
        scenarios,
        refs,
        ensemble_spec=spec if ENSEMBLE_METHOD in methods else None,
        jobs=jobs,
    )

    for failure in report.failures:
        where = "clean" if failure.scenario is None else (
            f"{failure.scenario.noise_id}@{failure.scenario.snr_db:+g}dB"
        )
        print(f"warning: {failure.song_id} ({where}): {failure.message}", file=sys.stderr)

    if not report.cells and not report.clean:
        return _fail(EX_NO_SONGS, "no songs could be evaluated")

    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "results.csv"
    table_path = out_dir / "results.txt"
    csv_path.write_text(render_long_csv(report), encoding="utf-8")
    table_path.write_text(render_report(report, "text-table"), encoding="utf-8")
    print(render_report(report, "text-table"), end="")
    print(f"wrote {csv_path} and {table_path}", file=sys.stderr)
    return EX_OK


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def cmd_report(args) -> int:
    try:
        text = Path(args.csv).read_text(encoding="utf-8")
        report = parse_long_csv(text)
    except (OSError, ValueError) as exc:
        return _fail(EX_INPUT, f"cannot read results CSV {args.csv}: {exc}")
    rendered = render_report(report, args.format)
    if args.out:
        Path(args.out).write_text(rendered, encoding="utf-8")
    else:
        print(rendered, end="")
    return EX_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pitchlab",
        description="Note-level monophonic pitch estimation tools.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="estimate one pitch per annotated note")
    est.add_argument("audio", help="WAV file to analyse")
    est.add_argument("notes", help="annotation sidecar with note boundaries")
    est.add_argument("--method", default=ENSEMBLE_METHOD,
                     help="estimator name or 'ensemble' (default)")
    est.add_argument("--ensemble-spec", help="JSON ensemble description")
    est.add_argument("--config", help="JSON per-method estimator overrides")
    est.set_defaults(func=cmd_estimate)

    mix = sub.add_parser("mix", help="mix a noise into a signal at a target SNR")
    mix.add_argument("signal", help="clean WAV file")
    mix.add_argument("noise", help="noise WAV file or synth:<kind>")
    mix.add_argument("--snr", type=float, required=True, help="target SNR in dB")
    mix.add_argument("--seed", type=int, default=0, help="seed for synthetic noise")
    mix.add_argument("--out", required=True, help="output WAV path")
    mix.set_defaults(func=cmd_mix)

    bench = sub.add_parser("bench", help="run a benchmark described by a JSON config")
    bench.add_argument("config", help="benchmark JSON config file")
    bench.add_argument("--jobs", type=int, help="parallel workers (default from config)")
    bench.add_argument("--seed", type=int, help="seed override for songs and noises")
    bench.add_argument("--out", help="output directory override")
    bench.set_defaults(func=cmd_bench)

    rep = sub.add_parser("report", help="re-render a results CSV")
    rep.add_argument("csv", help="long-form results CSV")
    rep.add_argument("--format", choices=["csv", "text-table"], default="text-table")
    rep.add_argument("--out", help="write here instead of stdout")
    rep.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
