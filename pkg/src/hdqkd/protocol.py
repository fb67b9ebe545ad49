"""End-to-end key distribution session.

Randomness is split deterministically from the session seed::

    root = SeedSequence(seed)
    pulses, disclosure, hashing = root.spawn(3)
    batch k  -> Generator(PCG64(pulses.spawn(n_batches)[k]))

Batch k simulates pulse indices [k * batch_size, (k + 1) * batch_size). Within
a batch the draws are, in order: Alice's phases, Bob's bases, Eve's step (if
any), Bob's homodyne sample. Batches are independent, so they may be
simulated in any order or in parallel without changing the transcript.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Optional

import numpy as np
from scipy import signal

from . import attacks
from .analytics import INCONCLUSIVE, OUTCOME_NAMES, POSITIVE, ThresholdPolicy, binary_entropy
from .attacks import EveStrategy
from .detection import DEFAULT_ALPHA, FitReport, monitor
from .physics import ChannelModel, CoherentPulse, sample_quadratures

DEFAULT_SEED = 12345
DEFAULT_ABORT_BER = 0.11
TRANSCRIPT_HEADER = ("index", "alice_phase", "bob_basis", "quadrature", "outcome", "basis_correct")
_OUTCOME_CODES = {name: code for code, name in OUTCOME_NAMES.items()}


def fmt(x: float) -> str:
    return f"{x:.6g}"


def round6(x):
    """Round to 6 significant digits for emitted artifacts; NaN becomes None."""
    if x is None:
        return None
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(fmt(x))


@dataclass(frozen=True)
class PulseRecord:
    index: int
    alice_phase: int
    bob_basis: int
    quadrature: float
    outcome: str
    basis_correct: bool


@dataclass(frozen=True)
class SessionConfig:
    n_pulses: int
    pulse: CoherentPulse = field(default_factory=lambda: CoherentPulse(1.0))
    channel: ChannelModel = field(default_factory=ChannelModel)
    policy: ThresholdPolicy = field(default_factory=lambda: ThresholdPolicy(0.0))
    eve: EveStrategy = field(default_factory=EveStrategy)
    seed: int = DEFAULT_SEED
    disclosure_fraction: float = 0.1
    abort_ber: float = DEFAULT_ABORT_BER
    alpha: float = DEFAULT_ALPHA
    batch_size: int = 65536

    def __post_init__(self):
        if int(self.n_pulses) != self.n_pulses or self.n_pulses < 1:
            raise ValueError(f"n_pulses must be a positive integer, got {self.n_pulses}")
        if not 0.0 <= self.disclosure_fraction <= 1.0:
            raise ValueError("disclosure_fraction must lie in [0, 1]")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def reference_channel(self) -> ChannelModel:
        """Channel Bob calibrated against before any eavesdropping.

        Under a beamsplitting attack Eve replaced a lossy line by a lossless
        one plus her tap, so Bob's calibration already includes the tapped loss.
        """
        if self.eve.variant == attacks.BEAMSPLIT:
            return replace(self.channel, transmittance=self.channel.transmittance * (1 - self.eve.tap_fraction))
        return self.channel


@dataclass
class Transcript:
    """Column-oriented per-pulse record of a session."""

    alice_phase: np.ndarray
    bob_basis: np.ndarray
    quadrature: np.ndarray
    outcome: np.ndarray
    eve_intercepted: Optional[np.ndarray] = None
    eve_estimate: Optional[np.ndarray] = None
    eve_quadrature: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.quadrature)

    @property
    def index(self):
        return np.arange(len(self))

    @property
    def basis_correct(self):
        return (self.alice_phase % 180 == 0) == (self.bob_basis == 0)

    def records(self) -> Iterator[PulseRecord]:
        correct = self.basis_correct
        for i in range(len(self)):
            yield PulseRecord(i, int(self.alice_phase[i]), int(self.bob_basis[i]), float(self.quadrature[i]),
                              OUTCOME_NAMES[int(self.outcome[i])], bool(correct[i]))

    @classmethod
    def from_records(cls, records: Iterable[PulseRecord]) -> "Transcript":
        records = list(records)
        return cls(
            np.array([r.alice_phase for r in records], dtype=np.int16),
            np.array([r.bob_basis for r in records], dtype=np.int16),
            np.array([r.quadrature for r in records], dtype=float),
            np.array([_OUTCOME_CODES[r.outcome] for r in records], dtype=np.int8),
        )

    def to_csv(self, path):
        correct = self.basis_correct
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TRANSCRIPT_HEADER)
            for i in range(len(self)):
                writer.writerow([i, int(self.alice_phase[i]), int(self.bob_basis[i]), fmt(self.quadrature[i]),
                                 OUTCOME_NAMES[int(self.outcome[i])], "true" if correct[i] else "false"])

    @classmethod
    def from_csv(cls, path) -> "Transcript":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = tuple(next(reader, ()))
            if header != TRANSCRIPT_HEADER:
                raise ValueError(f"{path}: unexpected transcript header {header}")
            rows = list(reader)
        records = [PulseRecord(int(r[0]), int(r[1]), int(r[2]), float(r[3]), r[4], r[5] == "true") for r in rows]
        return cls.from_records(records)


@dataclass
class SessionReport:
    n_correct_basis: int
    p_d_measured: float
    ber_measured: float
    sifted_key_alice: str
    sifted_key_bob: str
    detection_reports: list[FitReport]
    final_key: str
    n_pulses: int = 0
    n_conclusive: int = 0
    n_disclosed: int = 0
    eta_d_measured: float = float("nan")
    sifted_error_rate: float = float("nan")
    aborted: bool = False

    @property
    def alarm(self) -> bool:
        return any(r.alarm for r in self.detection_reports)

    def to_dict(self) -> dict:
        """JSON-ready dict; key order is the field order above."""
        return {
            "n_correct_basis": self.n_correct_basis,
            "p_d_measured": round6(self.p_d_measured),
            "ber_measured": round6(self.ber_measured),
            "sifted_key_alice": self.sifted_key_alice,
            "sifted_key_bob": self.sifted_key_bob,
            "detection_reports": [
                {"test_name": r.test_name, "statistic": round6(r.statistic), "p_value": round6(r.p_value),
                 "alarm": r.alarm}
                for r in self.detection_reports
            ],
            "final_key": self.final_key,
            "n_pulses": self.n_pulses,
            "n_conclusive": self.n_conclusive,
            "n_disclosed": self.n_disclosed,
            "eta_d_measured": round6(self.eta_d_measured),
            "sifted_error_rate": round6(self.sifted_error_rate),
            "aborted": self.aborted,
        }

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def _bits_to_str(bits) -> str:
    return "".join("1" if b else "0" for b in bits)


def sift(transcript) -> tuple[np.ndarray, np.ndarray]:
    """Keep conclusive correct-basis pulses and map them to bits.

    Alice: phase 0 or 90 is 1, 180 or 270 is 0. Bob: positive is 1, negative 0.
    """
    if not isinstance(transcript, Transcript):
        transcript = Transcript.from_records(transcript)
    keep = transcript.basis_correct & (transcript.outcome != INCONCLUSIVE)
    alice = (transcript.alice_phase[keep] < 180).astype(np.uint8)
    bob = (transcript.outcome[keep] == POSITIVE).astype(np.uint8)
    return alice, bob


def estimate_ber(alice_bits, bob_bits, disclosure_fraction: float, rng: np.random.Generator):
    """Publicly compare a random subset and drop it from both keys.

    At least one bit is disclosed whenever the fraction and key are non-zero.

    Returns:
        (ber, remaining_alice, remaining_bob); ber is NaN when nothing was disclosed.
    """
    alice_bits = np.asarray(alice_bits, dtype=np.uint8)
    bob_bits = np.asarray(bob_bits, dtype=np.uint8)
    if alice_bits.shape != bob_bits.shape:
        raise ValueError("keys must have equal length")
    if not 0.0 <= disclosure_fraction <= 1.0:
        raise ValueError("disclosure_fraction must lie in [0, 1]")
    n = alice_bits.size
    k = min(n, max(1, math.ceil(disclosure_fraction * n))) if disclosure_fraction > 0 and n > 0 else 0
    if k == 0:
        return float("nan"), alice_bits.copy(), bob_bits.copy()
    disclosed = np.zeros(n, dtype=bool)
    disclosed[rng.choice(n, size=k, replace=False)] = True
    ber = float(np.count_nonzero(alice_bits[disclosed] != bob_bits[disclosed]) / k)
    return ber, alice_bits[~disclosed], bob_bits[~disclosed]


def _toeplitz_bits(n_bits: int, hash_seed: int) -> np.ndarray:
    # SHA-256 in counter mode keeps the matrix identical on every platform
    seed = int(hash_seed).to_bytes(16, "big", signed=False)
    n_blocks = -(-n_bits // 256)
    raw = b"".join(hashlib.sha256(seed + i.to_bytes(8, "big")).digest() for i in range(n_blocks))
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8))[:n_bits]


def privacy_amplification(key_bits, output_length: int, hash_seed: Optional[int]) -> np.ndarray:
    """Compress a key with a seeded binary Toeplitz matrix.

    The m x n matrix has entries t[i - j + n - 1] for a bit string t of length
    m + n - 1 derived from ``hash_seed``. With ``hash_seed=None`` and
    ``output_length`` equal to the key length, the key is returned unchanged.
    """
    key = np.asarray(key_bits, dtype=np.uint8)
    n = key.size
    if output_length > n:
        raise ValueError(f"output_length {output_length} exceeds key length {n}")
    if output_length < 0:
        raise ValueError("output_length must be >= 0")
    if hash_seed is None:
        if output_length != n:
            raise ValueError("hash_seed is required unless output_length equals the key length")
        return key.copy()
    if output_length == 0:
        return np.zeros(0, dtype=np.uint8)
    t = _toeplitz_bits(output_length + n - 1, hash_seed)
    if n * output_length <= 1 << 22:
        conv = np.convolve(t.astype(np.int64), key.astype(np.int64))
    else:
        conv = np.rint(signal.fftconvolve(t.astype(float), key.astype(float))).astype(np.int64)
    return (conv[n - 1:n - 1 + output_length] % 2).astype(np.uint8)


def secure_length(n_bits: int, ber: float) -> int:
    """Toy final-key length n(1 - 2 h2(e)); zero when the estimate is missing."""
    if n_bits == 0 or not math.isfinite(ber):
        return 0
    return max(0, math.floor(n_bits * (1 - 2 * binary_entropy(ber))))


def _simulate_batch(config: SessionConfig, size: int, rng: np.random.Generator) -> dict:
    alice = (rng.integers(0, 4, size) * 90).astype(np.int16)
    bob = (rng.integers(0, 2, size) * 90).astype(np.int16)
    n_sig = np.full(size, config.pulse.n_sig)
    phase = alice.astype(float)
    eve = config.eve
    out = {}
    if eve.is_intercept:
        n_sig, phase, intercepted, estimate = attacks.apply_intercept_resend(n_sig, phase, eve, rng)
        out["eve_intercepted"] = intercepted
        out["eve_estimate"] = estimate.astype(np.int16)
    elif eve.variant == attacks.BEAMSPLIT:
        eve_n = n_sig * eve.tap_fraction
        n_sig = n_sig - eve_n
        eve_basis = rng.integers(0, 2, size) * 90
        xe = sample_quadratures(eve_n, phase, eve_basis, ChannelModel.ideal(), rng)
        out["eve_intercepted"] = np.ones(size, dtype=bool)
        out["eve_estimate"] = attacks.single_basis_estimate(xe, eve_basis).astype(np.int16)
        out["eve_quadrature"] = xe
    x = sample_quadratures(n_sig, phase, bob, config.channel, rng)
    out.update(alice_phase=alice, bob_basis=bob, quadrature=x, outcome=config.policy.classify(x))
    return out


def simulate_pulses(config: SessionConfig) -> Transcript:
    root = np.random.SeedSequence(config.seed)
    pulse_ss, _, _ = root.spawn(3)
    n_batches = -(-config.n_pulses // config.batch_size)
    batches = []
    for k, child in enumerate(pulse_ss.spawn(n_batches)):
        size = min(config.batch_size, config.n_pulses - k * config.batch_size)
        batches.append(_simulate_batch(config, size, np.random.Generator(np.random.PCG64(child))))
    cols = {key: np.concatenate([b[key] for b in batches]) for key in batches[0]}
    return Transcript(**cols)


def run_session(config: SessionConfig) -> tuple[Transcript, SessionReport]:
    """Simulate, sift, estimate the error rate, monitor and hash one session."""
    transcript = simulate_pulses(config)
    _, disclosure_ss, hash_ss = np.random.SeedSequence(config.seed).spawn(3)

    correct = transcript.basis_correct
    n_correct = int(correct.sum())
    alice_bits, bob_bits = sift(transcript)
    n_conclusive = int(alice_bits.size)
    p_d = n_conclusive / n_correct if n_correct else float("nan")
    sifted_error = float(np.mean(alice_bits != bob_bits)) if n_conclusive else float("nan")

    ber, rem_alice, rem_bob = estimate_ber(alice_bits, bob_bits, config.disclosure_fraction,
                                           np.random.default_rng(disclosure_ss))

    aborted = not (math.isfinite(ber) and ber <= config.abort_ber)
    final = np.zeros(0, dtype=np.uint8)
    if not aborted and rem_alice.size:
        hash_seed = int(hash_ss.generate_state(2, dtype=np.uint64)[0])
        final = privacy_amplification(rem_alice, secure_length(rem_alice.size, ber), hash_seed)

    # Bob tests his own quadratures with his basis rotated back to LO phase 0
    x = transcript.quadrature
    ref_channel = config.reference_channel()
    reports = monitor(x[correct], x[~correct], config.pulse.n_sig, ref_channel, config.alpha)

    eta_d = p_d / config.pulse.n_sig if config.pulse.n_sig > 0 and n_correct else float("nan")
    report = SessionReport(
        n_correct_basis=n_correct,
        p_d_measured=p_d,
        ber_measured=ber,
        sifted_key_alice=_bits_to_str(rem_alice),
        sifted_key_bob=_bits_to_str(rem_bob),
        detection_reports=reports,
        final_key=_bits_to_str(final),
        n_pulses=config.n_pulses,
        n_conclusive=n_conclusive,
        n_disclosed=n_conclusive - int(rem_alice.size),
        eta_d_measured=eta_d,
        sifted_error_rate=sifted_error,
        aborted=aborted,
    )
    return transcript, report
