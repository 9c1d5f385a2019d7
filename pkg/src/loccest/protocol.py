"""Two-lab execution of the remote moment-estimation network.

A referee stands in for quantum mechanics: it holds the shared state,
computes the joint outcome distribution of the two local interferometers
once, and hands each lab its own outcome bit per run. Alice and Bob never
see the state or each other's bits except through classical messages.
After exchanging their records both compute the parity estimator of
``tr rho_AB^k`` independently, and the results must agree bit for bit.
"""

from __future__ import annotations

import json
import random
import threading
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import ProtocolError, ValidationError
from .interferometer import (ShotRecord, estimate_from_counts, joint_probs, moment_from_probs,
                             sample_outcomes)
from .spectrum import MomentVector, SpectrumEstimate, spectrum_from_moments
from .states import DensityOperator
from .transport import PartyMessage, in_memory

BATCH_SHOTS = 10_000


class LocalOutcomes:
    """Outcome bits of one lab, and nothing else."""

    def __init__(self, bits: np.ndarray):
        self._bits = np.asarray(bits, dtype=np.uint8)

    def __len__(self):
        return self._bits.size

    def bits(self, start: int, n: int) -> np.ndarray:
        return self._bits[start:start + n].copy()


class Referee:
    """Samples the correlated local outcomes of both interferometers."""

    def __init__(self, rho_ab: DensityOperator, k: int, shots: int, seed: int, workers: int = 1):
        self.table = joint_probs(rho_ab, k)
        codes = sample_outcomes(self.table, shots, seed, workers=workers)
        self._alice = LocalOutcomes(codes >> 1)
        self._bob = LocalOutcomes(codes & 1)

    def alice(self) -> LocalOutcomes:
        return self._alice

    def bob(self) -> LocalOutcomes:
        return self._bob


def _pack(bits: np.ndarray) -> str:
    return np.packbits(bits).tobytes().hex()


def _unpack(payload: dict) -> np.ndarray:
    n = int(payload["n"])
    raw = np.frombuffer(bytes.fromhex(payload["bits"]), dtype=np.uint8)
    bits = np.unpackbits(raw)[:n]
    if bits.size != n:
        raise ProtocolError("block payload shorter than announced")
    return bits


@dataclass
class Estimates:
    moment: float
    moment_std_error: float
    v_alice: float
    v_alice_std_error: float
    v_bob: float
    v_bob_std_error: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _visibility(bits: np.ndarray) -> tuple[float, float]:
    n = bits.size
    plus = int(n - bits.sum())
    mean = (2 * plus - n) / n
    var = max(0.0, (n - n * mean * mean) / (n - 1)) if n > 1 else 0.0
    return mean, float(np.sqrt(var / n))


def estimates_from_bits(a: np.ndarray, b: np.ndarray, seed: int) -> tuple[ShotRecord, Estimates]:
    codes = 2 * a.astype(np.int64) + b
    counts = np.bincount(codes, minlength=4)
    record = ShotRecord(*(int(c) for c in counts), seed=seed, shots=int(a.size))
    est = estimate_from_counts(record)
    va, sa = _visibility(a)
    vb, sb = _visibility(b)
    return record, Estimates(est.moment, est.std_error, va, sa, vb, sb)


class Party:
    """One lab: reads only its own outcomes and talks through ``endpoint``."""

    def __init__(self, name: str, outcomes: LocalOutcomes, endpoint, shots: int,
                 mode: str = "per_shot", seed: int = 0):
        self.name = name
        self.peer = "bob" if name == "alice" else "alice"
        self.outcomes = outcomes
        self.endpoint = endpoint
        self.shots = shots
        self.mode = mode
        self.seed = seed
        self.sent: list[PartyMessage] = []
        self.received: list[PartyMessage] = []
        self.mine = np.zeros(shots, dtype=np.uint8)
        self.theirs = np.zeros(shots, dtype=np.uint8)
        self.result = None

    def _blocks(self):
        size = 1 if self.mode == "per_shot" else BATCH_SHOTS
        return [(r, r * size, min(size, self.shots - r * size))
                for r in range(-(-self.shots // size))]

    def _payload(self, bits):
        if self.mode == "per_shot":
            return {"bit": int(bits[0])}
        return {"bits": _pack(bits), "n": int(bits.size), "ones": int(bits.sum())}

    def _read(self, msg: PartyMessage, start: int, n: int):
        if msg.sender != self.peer:
            raise ProtocolError(f"{self.name} got a message from {msg.sender}")
        if "bit" in msg.payload:
            if self.mode != "per_shot" or msg.payload["bit"] not in (0, 1):
                raise ProtocolError("unexpected per-shot payload")
            return np.array([msg.payload["bit"]], dtype=np.uint8)
        if self.mode == "per_shot":
            raise ProtocolError("unexpected block payload")
        bits = _unpack(msg.payload)
        if bits.size != n or int(bits.sum()) != int(msg.payload["ones"]):
            raise ProtocolError("block payload inconsistent with its summary")
        return bits

    def run(self):
        """Generator: yields ``"wait"`` while blocked on the peer, else ``None``."""
        for rnd, start, n in self._blocks():
            bits = self.outcomes.bits(start, n)
            self.mine[start:start + n] = bits
            msg = PartyMessage(rnd, self.name, self._payload(bits))
            self.endpoint.send(msg)
            self.sent.append(msg)
            yield None
            while not self.endpoint.ready():
                yield "wait"
            reply = self.endpoint.recv()
            if reply.round != rnd:
                raise ProtocolError(f"expected round {rnd}, got {reply.round}")
            self.theirs[start:start + n] = self._read(reply, start, n)
            self.received.append(reply)
        a, b = (self.mine, self.theirs) if self.name == "alice" else (self.theirs, self.mine)
        self.result = estimates_from_bits(a, b, self.seed)


def _interleave(parties, order: str):
    gens = {p.name: p.run() for p in parties}
    picker = None
    if order.startswith("random"):
        picker = random.Random(int(order.split(":", 1)[1]) if ":" in order else 0)
    live = list(gens)
    turn = 0
    waiting: set[str] = set()
    while live:
        if picker is not None:
            name = picker.choice(live)
        elif order == "bob_first":
            name = live[-1 - (turn % len(live))]
        else:
            name = live[turn % len(live)]
        turn += 1
        try:
            state = next(gens[name])
        except StopIteration:
            live.remove(name)
            waiting.clear()
            continue
        if state != "wait":
            waiting.clear()
        elif name in waiting and waiting >= set(live):
            raise ProtocolError("deadlock: every party is waiting")
        else:
            waiting.add(name)


def _threaded(parties, timeout: float = 60.0):
    errors = []

    def drive(p):
        try:
            for state in p.run():
                if state == "wait":
                    _block_until_ready(p.endpoint, timeout)
        except Exception as exc:  # surfaced below
            errors.append(exc)

    threads = [threading.Thread(target=drive, args=(p,)) for p in parties]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise errors[0]


def _block_until_ready(endpoint, timeout):
    cond = getattr(getattr(endpoint, "_in", None), "cond", None)
    if cond is not None:
        with cond:
            if not cond.wait_for(lambda: bool(endpoint._in.items), timeout):
                raise ProtocolError("timed out waiting for the peer")
        return
    pipe = getattr(endpoint, "_r", None)
    wait = getattr(pipe, "_cond", None)
    if wait is None:
        return  # a blocking file: recv() itself waits
    with wait:
        if not wait.wait_for(lambda: b"\n" in pipe._buf or pipe.closed, timeout):
            raise ProtocolError("timed out waiting for the peer")


@dataclass
class ProtocolTranscript:
    k: int
    shots: int | None
    seed: int
    mode: str
    messages: list = field(repr=False)
    alice_counts: list
    bob_counts: list
    joint_counts: ShotRecord | None
    estimates: Estimates
    probabilities: dict | None = None  # exact mode only

    def to_dict(self) -> dict:
        return {
            "k": self.k, "shots": self.shots, "seed": str(self.seed), "mode": self.mode,
            "messages": [m.to_dict() for m in self.messages],
            "alice_counts": self.alice_counts, "bob_counts": self.bob_counts,
            "joint_counts": None if self.joint_counts is None else self.joint_counts.to_dict(),
            "estimates": self.estimates.to_dict(),
            "probabilities": self.probabilities,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def export(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def from_dict(cls, d: dict) -> "ProtocolTranscript":
        joint = None if d["joint_counts"] is None else ShotRecord.from_dict(d["joint_counts"])
        return cls(int(d["k"]), d["shots"], int(d["seed"]), d["mode"],
                   [PartyMessage.from_dict(m) for m in d["messages"]],
                   list(d["alice_counts"]), list(d["bob_counts"]), joint,
                   Estimates(**d["estimates"]), d.get("probabilities"))

    def replay(self) -> tuple[ShotRecord, Estimates]:
        """Recompute counts and estimates from the message history alone."""
        if self.shots is None:
            raise ValidationError("exact-mode transcripts carry no messages")
        bits = {"alice": [], "bob": []}
        for m in self.messages:
            if "bit" in m.payload:
                bits[m.sender].append(np.array([m.payload["bit"]], dtype=np.uint8))
            else:
                bits[m.sender].append(_unpack(m.payload))
        a = np.concatenate(bits["alice"])
        b = np.concatenate(bits["bob"])
        return estimates_from_bits(a, b, self.seed)


def run_parties(alice_outcomes: LocalOutcomes, bob_outcomes: LocalOutcomes, shots: int,
                transport=None, mode: str = "per_shot", schedule: str = "round_robin",
                seed: int = 0):
    """Run Alice and Bob on given local outcome feeds; returns both parties."""
    alice_end, bob_end = transport if transport is not None else in_memory()
    alice = Party("alice", alice_outcomes, alice_end, shots, mode, seed)
    bob = Party("bob", bob_outcomes, bob_end, shots, mode, seed)
    if schedule == "threads":
        _threaded([alice, bob])
    else:
        _interleave([alice, bob], schedule)
    return alice, bob


def run_protocol(rho_ab: DensityOperator, k: int, shots: int | None, seed: int,
                 transport=None, mode: str = "per_shot", schedule: str = "round_robin",
                 workers: int = 1) -> ProtocolTranscript:
    """Simulate ``shots`` runs of the two local interferometers on ``rho^{(x)k}``.

    ``transport`` is an ``(alice_endpoint, bob_endpoint)`` pair (default
    :func:`in_memory`). ``mode`` is ``"per_shot"`` (one bit per message) or
    ``"batched"`` (packed bits per 10^4-shot block). ``schedule`` picks the
    interleaving: ``"round_robin"``, ``"bob_first"``, ``"random:<seed>"`` or
    ``"threads"``; none of them changes the transcript. ``shots=None`` skips
    sampling and reports the exact probabilities.
    """
    seed = rng.check_seed(seed)
    if shots is None:
        table = joint_probs(rho_ab, k)
        va = table.p00 + table.p01 - table.p10 - table.p11
        vb = table.p00 - table.p01 + table.p10 - table.p11
        est = Estimates(moment_from_probs(table), 0.0, va, 0.0, vb, 0.0)
        return ProtocolTranscript(int(k), None, seed, "exact", [], [], [], None, est,
                                  table.to_dict())
    if int(shots) < 1:
        raise ValidationError("shots must be at least 1")
    if mode not in ("per_shot", "batched"):
        raise ValidationError(f"unknown mode {mode!r}")
    referee = Referee(rho_ab, k, int(shots), seed, workers=workers)
    alice, bob = run_parties(referee.alice(), referee.bob(), int(shots), transport, mode,
                             schedule, seed)
    (rec_a, est_a), (rec_b, est_b) = alice.result, bob.result
    if rec_a != rec_b or est_a != est_b:
        raise ProtocolError("Alice and Bob computed different estimates")
    messages = sorted(alice.sent + bob.sent, key=lambda m: (m.round, m.sender != "alice"))
    a_ones = int(alice.mine.sum())
    b_ones = int(bob.mine.sum())
    return ProtocolTranscript(int(k), int(shots), seed, mode, messages,
                              [int(shots) - a_ones, a_ones], [int(shots) - b_ones, b_ones],
                              rec_a, est_a)


def run_spectrum_protocol(rho_ab: DensityOperator, k_max: int, shots_per_k: int | None,
                          seed: int, transport_factory=in_memory, mode: str = "batched",
                          schedule: str = "round_robin"):
    """Estimate tr rho^k for k = 2..k_max remotely and invert to a spectrum.

    The moment for order k uses the child seed ``split_seed(seed, k)``, the
    same stream as :func:`loccest.spectrum.spectrum_from_state`.
    """
    n = rho_ab.dim
    if int(k_max) < n:
        raise ValidationError(f"k_max={k_max} is below the dimension {n}")
    transcripts = []
    values, errors = [1.0], [0.0]
    for k in range(2, int(k_max) + 1):
        child = seed if shots_per_k is None else rng.split_seed(seed, k)
        tr = run_protocol(rho_ab, k, shots_per_k, child, transport_factory(), mode, schedule)
        transcripts.append(tr)
        values.append(tr.estimates.moment)
        errors.append(tr.estimates.moment_std_error)
    measurements = [(k, shots_per_k) for k in range(2, int(k_max) + 1)]
    if shots_per_k is None:
        est = spectrum_from_moments(MomentVector(np.array(values[:n])), strict=True,
                                    measurements=measurements)
    else:
        est = spectrum_from_moments(MomentVector(np.array(values), np.array(errors)),
                                    strict=False, measurements=measurements)
    return est, transcripts


__all__ = ["Referee", "LocalOutcomes", "Party", "ProtocolTranscript", "Estimates",
           "run_parties", "run_protocol", "run_spectrum_protocol", "SpectrumEstimate"]
