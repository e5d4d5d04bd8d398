"""Median fusion of estimator votes, with an optional external member.

The external member is any executable speaking a tiny one-shot protocol:
it receives "RATE <hz> COUNT <n>\\n" followed by the note's samples as
little-endian float32 on stdin, and must answer a single line on stdout,
either "F0 <hz>" or "UNVOICED". Timeouts and malformed replies demote
that vote to unvoiced; they never abort the ensemble.
"""

from __future__ import annotations

import json
import logging
import shlex
import subprocess
from dataclasses import dataclass, field

import numpy as np

from .estimators import (
    REGISTRY,
    EstimatorConfig,
    NoteAnalysis,
    PitchEstimate,
    estimate_note_many,
)
from .sigproc import AudioBuffer

logger = logging.getLogger(__name__)

DEFAULT_MEMBERS = ("hps", "stft", "ml", "srh")

# Declared range for an external estimator when its spec does not say.
DEFAULT_EXTERNAL_F_MIN = 33.0
DEFAULT_EXTERNAL_F_MAX = 3951.0
DEFAULT_EXTERNAL_TIMEOUT_S = 10.0

MIN_VOICED_VOTES = 2


@dataclass(frozen=True)
class ExternalEstimator:
    """Subprocess-backed estimator with its declared frequency range."""

    command: str
    f_min: float = DEFAULT_EXTERNAL_F_MIN
    f_max: float = DEFAULT_EXTERNAL_F_MAX
    timeout_s: float = DEFAULT_EXTERNAL_TIMEOUT_S

    def __post_init__(self):
        if not self.command.strip():
            raise ValueError("external command must be non-empty")
        if not 0 <= self.f_min < self.f_max:
            raise ValueError("need 0 <= f_min < f_max for the external range")
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be positive")


@dataclass(frozen=True)
class EnsembleSpec:
    """Which estimators vote, with any per-member config overrides."""

    members: tuple[str, ...] = DEFAULT_MEMBERS
    configs: dict = field(default_factory=dict)
    external: ExternalEstimator | None = None

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if len(set(self.members)) != len(self.members):
            raise ValueError("ensemble members must be unique")
        unknown = [m for m in self.members if m not in REGISTRY]
        if unknown:
            raise ValueError(f"unknown ensemble members {unknown}; known: {sorted(REGISTRY)}")
        for name in self.configs:
            if name not in self.members:
                raise ValueError(f"config override for non-member {name!r}")
        n_voters = len(self.members) + (1 if self.external else 0)
        if n_voters < MIN_VOICED_VOTES:
            raise ValueError("an ensemble needs at least two voting members")

    def member_configs(self) -> dict[str, EstimatorConfig]:
        return {
            name: self.configs.get(name) or REGISTRY[name].default_config
            for name in self.members
        }


def load_ensemble_spec(path) -> EnsembleSpec:
    """Read an ensemble description from a JSON file.

    Recognized keys: "members" (list of estimator names), "configs"
    (per-member {f_min, f_max, n_harmonics} overrides) and "external"
    ({command, f_min, f_max, timeout_s}).
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: expected a JSON object")
    unknown = set(raw) - {"members", "configs", "external"}
    if unknown:
        raise ValueError(f"{path}: unknown keys {sorted(unknown)}")
    members = tuple(raw.get("members", DEFAULT_MEMBERS))
    configs = {}
    for name, fields_ in (raw.get("configs") or {}).items():
        base = REGISTRY[name].default_config if name in REGISTRY else None
        if base is None:
            raise ValueError(f"{path}: config for unknown estimator {name!r}")
        configs[name] = EstimatorConfig(
            f_min=float(fields_.get("f_min", base.f_min)),
            f_max=float(fields_.get("f_max", base.f_max)),
            n_harmonics=int(fields_.get("n_harmonics", base.n_harmonics)),
        )
    external = None
    ext_raw = raw.get("external")
    if ext_raw:
        external = ExternalEstimator(
            command=ext_raw["command"],
            f_min=float(ext_raw.get("f_min", DEFAULT_EXTERNAL_F_MIN)),
            f_max=float(ext_raw.get("f_max", DEFAULT_EXTERNAL_F_MAX)),
            timeout_s=float(ext_raw.get("timeout_s", DEFAULT_EXTERNAL_TIMEOUT_S)),
        )
    return EnsembleSpec(members=members, configs=configs, external=external)


def run_external(estimator: ExternalEstimator, note: AudioBuffer) -> PitchEstimate:
    """One-shot subprocess round trip for a single note.

    Any failure mode (timeout, crash, malformed or out-of-range reply)
    yields an unvoiced vote with a logged warning; errors never propagate.
    """
    payload = (
        f"RATE {note.sample_rate} COUNT {len(note)}\n".encode("ascii")
        + note.samples.astype("<f4").tobytes()
    )
    argv = shlex.split(estimator.command)
    try:
        proc = subprocess.run(
            argv,
            input=payload,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            timeout=estimator.timeout_s,
        )
    except subprocess.TimeoutExpired:
        logger.warning("external estimator timed out after %.1f s: %s", estimator.timeout_s, estimator.command)
        return PitchEstimate(None, "external")
    except OSError as exc:
        logger.warning("external estimator failed to launch (%s): %s", exc, estimator.command)
        return PitchEstimate(None, "external")
    if proc.returncode != 0:
        logger.warning("external estimator exited with %d: %s", proc.returncode, estimator.command)
        return PitchEstimate(None, "external")
    reply = proc.stdout.split(b"\n", 1)[0].decode("ascii", errors="replace").strip()
    if reply == "UNVOICED":
        return PitchEstimate(None, "external")
    parts = reply.split()
    if len(parts) == 2 and parts[0] == "F0":
        try:
            f0 = float(parts[1])
        except ValueError:
            f0 = None
        if f0 is not None and np.isfinite(f0) and f0 > 0:
            if estimator.f_min <= f0 <= estimator.f_max:
                return PitchEstimate(f0, "external")
            logger.warning(
                "external estimate %.2f Hz outside declared range [%g, %g]; treating as unvoiced",
                f0,
                estimator.f_min,
                estimator.f_max,
            )
            return PitchEstimate(None, "external")
    logger.warning("malformed reply from external estimator: %r", reply)
    return PitchEstimate(None, "external")


def fuse_votes(votes) -> float | None:
    """Median of the voiced votes; None without a quorum of two.

    An even vote count yields the mean of the two middle values.
    """
    voiced = [v for v in votes if v is not None]
    if len(voiced) < MIN_VOICED_VOTES:
        return None
    return float(np.median(voiced))


def member_votes(
    analysis: NoteAnalysis,
    spec: EnsembleSpec,
    precomputed: dict[str, PitchEstimate] | None = None,
) -> dict[str, PitchEstimate]:
    """Per-member note estimates, reusing any already-computed results."""
    votes: dict[str, PitchEstimate] = {}
    wanted: dict[str, EstimatorConfig] = {}
    for name, cfg in spec.member_configs().items():
        if precomputed and name in precomputed:
            votes[name] = precomputed[name]
        else:
            wanted[name] = cfg
    if wanted:
        votes.update(estimate_note_many(analysis, wanted))
    if spec.external is not None:
        votes["external"] = run_external(spec.external, analysis.note)
    return votes


def ensemble_estimate(note: AudioBuffer, spec: EnsembleSpec | None = None) -> PitchEstimate:
    """Fused note-level estimate over the spec's members."""
    spec = spec or EnsembleSpec()
    analysis = NoteAnalysis(note)
    votes = member_votes(analysis, spec)
    ordered = [votes[name].f0 for name in spec.members]
    if spec.external is not None:
        ordered.append(votes["external"].f0)
    return PitchEstimate(fuse_votes(ordered), "ensemble")
