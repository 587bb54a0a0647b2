"""
Data models for the passive conference-key-agreement simulator
Scalar records validate their own invariants; array-valued records wrap numpy arrays
"""

import math
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


TWO_PI = 2.0 * math.pi


class NetworkTopology(BaseModel):
    """Layered balanced beam-splitter network feeding 2^s detectors"""
    s: int = Field(ge=1, le=10, description="Number of beam-splitter layers")
    n_users: int = Field(ge=1, description="Number of users attached to the input ports")

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _users_fit_ports(self):
        if self.n_users > self.n_detectors:
            raise ValueError(f"n_users={self.n_users} exceeds N_D=2^s={self.n_detectors}")
        return self

    @property
    def n_detectors(self) -> int:
        return 2 ** self.s


class SourceConfig(BaseModel):
    """Fully passive source: two random-phase pulses of u_max/2 each, phases sliced into M sectors"""
    u_max: float = Field(ge=0.0, description="Maximum output mean photon number")
    slices: int = Field(default=8, ge=2, description="Slice count M (even)")

    model_config = ConfigDict(frozen=True)

    @field_validator("slices")
    @classmethod
    def _slices_even(cls, value: int) -> int:
        if value % 2:
            raise ValueError("slice count M must be even")
        return value

    @property
    def delta(self) -> float:
        """Half slice width pi/M"""
        return math.pi / self.slices

    @property
    def slice_width(self) -> float:
        return TWO_PI / self.slices


class PulsePair(BaseModel):
    """Measured phases of the two pulses of one passive source"""
    phi1: float = Field(ge=0.0, lt=TWO_PI)
    phi2: float = Field(ge=0.0, lt=TWO_PI)

    model_config = ConfigDict(frozen=True)


class OutputSignal(BaseModel):
    """Coherent signal leaving a passive source"""
    intensity: float = Field(ge=0.0, description="Mean photon number")
    phase: float = Field(description="Radians")

    model_config = ConfigDict(frozen=True)

    @property
    def amplitude(self) -> complex:
        return math.sqrt(self.intensity) * complex(math.cos(self.phase), math.sin(self.phase))


class ChannelConfig(BaseModel):
    """Per-user lossy channels into the network, threshold detectors with dark counts"""
    loss_db: List[float] = Field(description="Per-user loss user -> central node, dB")
    p_dark: float = Field(default=1e-8, ge=0.0, lt=1.0, description="Dark-count probability per detector per round")
    topology: NetworkTopology
    source: SourceConfig
    phase_offsets: List[float] = Field(default_factory=list, description="Per-user misalignment, radians")

    model_config = ConfigDict(frozen=True)

    @field_validator("loss_db")
    @classmethod
    def _loss_non_negative(cls, value: List[float]) -> List[float]:
        if any(v < 0 for v in value):
            raise ValueError("channel loss must be >= 0 dB")
        return [float(v) for v in value]

    @model_validator(mode="after")
    def _per_user_lengths(self):
        n = self.topology.n_users
        if len(self.loss_db) != n:
            raise ValueError(f"loss_db has {len(self.loss_db)} entries for {n} users")
        if self.phase_offsets and len(self.phase_offsets) != n:
            raise ValueError(f"phase_offsets has {len(self.phase_offsets)} entries for {n} users")
        return self

    @classmethod
    def uniform(
        cls,
        loss_db: float,
        n_users: int = 4,
        s: int = 2,
        u_max: float = 0.002,
        slices: int = 8,
        p_dark: float = 1e-8,
        phase_offsets: Optional[List[float]] = None,
    ) -> "ChannelConfig":
        """Build a configuration where every user sees the same loss"""
        return cls(
            loss_db=[loss_db] * n_users,
            p_dark=p_dark,
            topology=NetworkTopology(s=s, n_users=n_users),
            source=SourceConfig(u_max=u_max, slices=slices),
            phase_offsets=list(phase_offsets or []),
        )

    @property
    def eta(self) -> np.ndarray:
        """Per-user transmittance 10^(-loss_db/10)"""
        return np.power(10.0, -np.asarray(self.loss_db, dtype=float) / 10.0)

    @property
    def offsets(self) -> np.ndarray:
        if not self.phase_offsets:
            return np.zeros(self.topology.n_users)
        return np.asarray(self.phase_offsets, dtype=float)

    @property
    def n_users(self) -> int:
        return self.topology.n_users

    @property
    def n_detectors(self) -> int:
        return self.topology.n_detectors

    @property
    def slices(self) -> int:
        return self.source.slices


class SliceCombination(BaseModel):
    """Slice indices (k_i1, k_i2) for every user, flattened as k_01, k_02, k_11, ..."""
    k: Tuple[int, ...]

    model_config = ConfigDict(frozen=True)

    @field_validator("k")
    @classmethod
    def _even_length_positive(cls, value: Tuple[int, ...]) -> Tuple[int, ...]:
        if len(value) == 0 or len(value) % 2:
            raise ValueError("a slice combination needs two indices per user")
        if any(v < 1 for v in value):
            raise ValueError("slice indices start at 1")
        return tuple(int(v) for v in value)

    @classmethod
    def canonical(cls, n_users: int) -> "SliceCombination":
        return cls(k=(1,) * (2 * n_users))

    @property
    def n_users(self) -> int:
        return len(self.k) // 2

    def pair(self, user: int) -> Tuple[int, int]:
        return self.k[2 * user], self.k[2 * user + 1]

    def check_range(self, slices: int) -> None:
        """Raise ValueError if any index lies outside 1..M"""
        if any(v > slices for v in self.k):
            raise ValueError(f"slice index above M={slices} in {self.k}")

    def rotated(self, shift: int, slices: int) -> "SliceCombination":
        """Shift every slice index by the same amount on the M-cycle"""
        return SliceCombination(k=tuple((v - 1 + shift) % slices + 1 for v in self.k))

    def flipped(self, user: int, slices: int) -> "SliceCombination":
        """Move one user's two slices by M/2, i.e. to its opposite bit"""
        half = slices // 2
        k = list(self.k)
        for idx in (2 * user, 2 * user + 1):
            k[idx] = (k[idx] - 1 + half) % slices + 1
        return SliceCombination(k=tuple(k))


class Box(BaseModel):
    """Integration domain, one [lower, upper] interval per dimension (radians)"""
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _proper_intervals(self):
        if len(self.lower) == 0 or len(self.lower) != len(self.upper):
            raise ValueError("box needs matching, non-empty lower and upper bounds")
        if any(hi <= lo for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("every box interval needs lower < upper")
        return self

    @classmethod
    def from_intervals(cls, intervals) -> "Box":
        intervals = list(intervals)
        return cls(lower=tuple(float(lo) for lo, _ in intervals), upper=tuple(float(hi) for _, hi in intervals))

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.upper, self.lower)))


class BranchCutParams(BaseModel):
    """Maximum intra-user (x) and inter-user (y) slice mismatch kept by the branch cut"""
    x: int = Field(default=2, ge=1)
    y: int = Field(default=2, ge=1)

    model_config = ConfigDict(frozen=True)

    def check_range(self, slices: int) -> None:
        if self.x >= slices or self.y >= slices:
            raise ValueError(f"x and y must be below M={slices}")


class _ArrayRecord(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


class TransferMatrix(_ArrayRecord):
    """Real N_D x N_D network matrix, entry (j, i) = (-1)^(j.i) / sqrt(N_D)"""
    entries: np.ndarray

    @field_validator("entries", mode="before")
    @classmethod
    def _as_square(cls, value) -> np.ndarray:
        arr = np.asarray(value, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("transfer matrix must be square")
        return arr

    @property
    def n_detectors(self) -> int:
        return self.entries.shape[0]


class TransitionMatrix(_ArrayRecord):
    """Local-channel photon survival law, probs[n, m] = t(m | n), lower triangular"""
    probs: np.ndarray

    @field_validator("probs", mode="before")
    @classmethod
    def _as_probabilities(cls, value) -> np.ndarray:
        arr = np.asarray(value, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("transition matrix must be square")
        if np.any(arr < -1e-12) or np.any(arr > 1 + 1e-12):
            raise ValueError("transition probabilities must lie in [0, 1]")
        return np.clip(arr, 0.0, 1.0)

    @property
    def n_max(self) -> int:
        return self.probs.shape[0] - 1

    @classmethod
    def identity(cls, n_max: int) -> "TransitionMatrix":
        return cls(probs=np.eye(n_max + 1))

    def row_sums(self) -> np.ndarray:
        return self.probs.sum(axis=1)


class YieldTensor(_ArrayRecord):
    """Single-click yields values[j, n_0, ..., n_{N-1}] for every n_i <= n_bar"""
    values: np.ndarray
    n_bar: int = Field(ge=0)

    @field_validator("values", mode="before")
    @classmethod
    def _as_array(cls, value) -> np.ndarray:
        return np.asarray(value, dtype=float)

    @model_validator(mode="after")
    def _shape_matches_cutoff(self):
        if self.values.ndim < 2 or any(d != self.n_bar + 1 for d in self.values.shape[1:]):
            raise ValueError("yield tensor axes must all have length n_bar + 1")
        if np.any(self.values < -1e-15) or np.any(self.values > 1 + 1e-12):
            raise ValueError("yields must lie in [0, 1]")
        return self

    @property
    def n_users(self) -> int:
        return self.values.ndim - 1

    @property
    def n_detectors(self) -> int:
        return self.values.shape[0]


class CoeffTable(_ArrayRecord):
    """Coefficients c[i, n, l] of the phase-error bound and the amplitudes they use"""
    c: np.ndarray
    alphas: np.ndarray


class KGObservables(_ArrayRecord):
    """Click probabilities per KG bit pattern (rows) and detector (columns)"""
    click_probs: np.ndarray
    bit_patterns: np.ndarray
    parity: np.ndarray

    @property
    def n_detectors(self) -> int:
        return self.click_probs.shape[1]


class DetectorTerm(BaseModel):
    """One detector's contribution to a combination's key rate"""
    detector: int
    pr_omega: float
    phase_error: float
    qber_max: float
    bracket: float


class KeyRateReport(BaseModel):
    """Result of one loss point"""
    loss_db: float
    rate_passive: float = Field(ge=0.0, description="Bits per round")
    rate_active_limit: float = Field(ge=0.0)
    pr_omega: List[float] = Field(default_factory=list, description="Canonical Pr(Omega_j|KG) per detector")
    phase_error: List[float] = Field(default_factory=list, description="Canonical phase error per detector")
    qber_max: List[float] = Field(default_factory=list, description="Canonical worst pair QBER per detector")
    combinations_evaluated: int = Field(default=0, ge=0)
    combinations_cut: int = Field(default=0, ge=0)
    failed_combinations: List[str] = Field(default_factory=list)
    status: str = "ok"
    wall_time_s: Optional[float] = None


class TrialStats(BaseModel):
    """Counters accumulated by the Monte Carlo oracle"""
    trials: int = Field(ge=0)
    seed: int
    single_click_counts: List[int]
    kg_accepted: int = Field(ge=0)
    kg_click_counts: List[int]
    disagreement_counts: List[List[int]]

    @model_validator(mode="after")
    def _counts_bounded(self):
        if self.kg_accepted > self.trials or any(c > self.trials for c in self.single_click_counts):
            raise ValueError("counts cannot exceed the number of trials")
        return self

    def pr_omega(self, detector: int) -> float:
        """Empirical Pr(Omega_j | KG)"""
        return self.kg_click_counts[detector] / self.kg_accepted if self.kg_accepted else 0.0

    def qber(self, detector: int, user: int) -> float:
        clicks = self.kg_click_counts[detector]
        return self.disagreement_counts[detector][user] / clicks if clicks else float("nan")


class CheckResult(BaseModel):
    """Outcome of one oracle check"""
    name: str
    deviation: float
    threshold: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.deviation <= self.threshold

    def describe(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        line = f"{status} {self.name}: deviation {self.deviation:.3e} (threshold {self.threshold:.3e})"
        return f"{line} {self.detail}".rstrip()


class RunConfig(BaseModel):
    """Everything a sweep, point evaluation or validation run needs"""
    users: int = Field(default=4, ge=1)
    layers: int = Field(default=2, ge=1, le=10)
    u_max: float = Field(default=0.002, ge=0.0)
    slices: int = Field(default=8, ge=2)
    cut_x: int = Field(default=2, ge=1)
    cut_y: int = Field(default=2, ge=1)
    p_dark: float = Field(default=1e-8, ge=0.0, lt=1.0)
    n_bar: int = Field(default=4, ge=0, le=10)
    loss_start_db: float = Field(default=0.0, ge=0.0)
    loss_stop_db: float = Field(default=35.0, ge=0.0)
    loss_step_db: float = Field(default=5.0, gt=0.0)
    rel_tol_transition: float = Field(default=1e-6, gt=0.0)
    rel_tol_click: float = Field(default=1e-4, gt=0.0)
    workers: int = Field(default=1, ge=1)
    seed: int = Field(default=12345, ge=0)
    output_path: str = "results/sweep.csv"
    mc_trials: int = Field(default=1_000_000, ge=1)
    cache_dir: str = "data/cache"
    record_timing: bool = True
    phase_offsets: List[float] = Field(default_factory=list)

    model_config = ConfigDict(extra="forbid")

    @field_validator("slices")
    @classmethod
    def _slices_even(cls, value: int) -> int:
        if value % 2:
            raise ValueError("slice count must be even")
        return value

    @model_validator(mode="after")
    def _cross_field(self):
        if self.users > 2 ** self.layers:
            raise ValueError(f"users={self.users} exceeds 2^layers={2 ** self.layers}")
        if self.cut_x >= self.slices or self.cut_y >= self.slices:
            raise ValueError("cut_x and cut_y must be below the slice count")
        if self.loss_stop_db < self.loss_start_db:
            raise ValueError("loss_stop_db must not be below loss_start_db")
        if self.phase_offsets and len(self.phase_offsets) != self.users:
            raise ValueError("phase_offsets needs one entry per user")
        return self

    def loss_points(self) -> List[float]:
        """Ascending sweep grid, stop value included"""
        count = int(math.floor((self.loss_stop_db - self.loss_start_db) / self.loss_step_db + 1e-9)) + 1
        return [round(self.loss_start_db + i * self.loss_step_db, 10) for i in range(count)]

    def channel_config(self, loss_db: float) -> ChannelConfig:
        return ChannelConfig.uniform(
            loss_db,
            n_users=self.users,
            s=self.layers,
            u_max=self.u_max,
            slices=self.slices,
            p_dark=self.p_dark,
            phase_offsets=self.phase_offsets,
        )

    def branch_cut(self) -> BranchCutParams:
        return BranchCutParams(x=self.cut_x, y=self.cut_y)
