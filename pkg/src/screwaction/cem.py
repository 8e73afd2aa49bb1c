"""Cross-entropy-method fine-tuning of a screw axis against the simulator.

The anchor axis stays fixed; only the Gaussian over the perturbation moves.
Episodes are ranked by length and then by mean wrench, over the whole
history so far, and the top ``T`` perturbations refit the Gaussian.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidArgumentError, ScrewError
from .se3 import SMALL_ANGLE, Pose, ScrewAxis, canonicalize_axis, so3_exp
from .sim import EpisodeResult, Mechanism, is_success, run_episode_arrays
from .waypoints import WaypointPlan, generate_relative_waypoints

MAX_RESAMPLE = 100


@dataclass(frozen=True)
class RewardFlags:
    use_grasp_lost: bool = True
    use_mean_wrench: bool = True


@dataclass(frozen=True)
class CemConfig:
    n_epochs: int = 5
    episodes_per_epoch: int = 5
    elite_count: int = 5
    sigma0: tuple = (0.02, 0.02, 0.02, 0.1, 0.1, 0.1)
    sigma_floor: float = 1e-4
    seed: int = 0
    stop_on_success: bool = True
    reward_flags: RewardFlags = field(default_factory=RewardFlags)

    def __post_init__(self):
        if self.n_epochs < 1 or self.episodes_per_epoch < 1:
            raise InvalidArgumentError("n_epochs and episodes_per_epoch must be >= 1")
        if not 1 <= self.elite_count <= self.n_epochs * self.episodes_per_epoch:
            raise InvalidArgumentError("elite_count must be in [1, N*E]")
        if np.any(np.asarray(self.sigma0, dtype=float) <= 0) or np.any(np.asarray(self.sigma_floor) <= 0):
            raise InvalidArgumentError("sigmas must be positive")
        object.__setattr__(self, "sigma0", tuple(float(v) for v in self.sigma0))

    def replace(self, **kw) -> CemConfig:
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(kw)
        return CemConfig(**d)

    @property
    def budget(self) -> int:
        return self.n_epochs * self.episodes_per_epoch


@dataclass(frozen=True, eq=False)
class CemSample:
    epsilon: np.ndarray
    candidate_axis: Optional[ScrewAxis]
    episode: EpisodeResult
    epoch: int
    index: int
    success: bool = False

    def to_json(self) -> dict:
        return {
            "epoch": self.epoch,
            "index": self.index,
            "epsilon": [float(v) for v in self.epsilon],
            "axis": self.candidate_axis.to_json() if self.candidate_axis is not None else None,
            "completed_waypoints": self.episode.completed_waypoints,
            "mean_wrench": self.episode.mean_wrench,
            "failure": self.episode.failure.value,
            "success": self.success,
        }


@dataclass(frozen=True, eq=False)
class OptRun:
    history: tuple
    best: CemSample
    succeeded: bool
    episodes_to_success: Optional[int]
    epochs_to_success: Optional[int]
    final_distribution: tuple  # (mean, std)

    def summary(self) -> dict:
        mean, std = self.final_distribution
        return {
            "episodes": len(self.history),
            "succeeded": self.succeeded,
            "episodes_to_success": self.episodes_to_success,
            "epochs_to_success": self.epochs_to_success,
            "best": {"epoch": self.best.epoch, "index": self.best.index},
            "final_mean": [float(v) for v in mean],
            "final_std": [float(v) for v in std],
        }


def episode_rng(seed: int, epoch: int, index: int) -> np.random.Generator:
    """Per-episode stream; independent of evaluation order."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(epoch), int(index)]))


def apply_perturbation(init_axis: ScrewAxis, epsilon) -> ScrewAxis:
    """``q + eps[:3]``, ``normalize(s_hat + eps[3:])``, canonicalised."""
    eps = np.asarray(epsilon, dtype=float)
    s = init_axis.s_hat + eps[3:6]
    n = float(np.linalg.norm(s))
    if n < SMALL_ANGLE:
        raise InvalidArgumentError("perturbed direction vanished")
    return canonicalize_axis(init_axis.replace(q=init_axis.q + eps[:3], s_hat=s / n))


def sample_candidate(init_axis: ScrewAxis, distribution, rng: np.random.Generator):
    """Draw ``eps ~ N(mean, diag(std^2))`` and the axis it produces."""
    mean, std = (np.asarray(v, dtype=float) for v in distribution)
    for _ in range(MAX_RESAMPLE):
        eps = mean + std * rng.standard_normal(mean.shape)
        if np.linalg.norm(init_axis.s_hat + eps[3:6]) >= SMALL_ANGLE:
            return eps, apply_perturbation(init_axis, eps)
    raise ScrewError(f"no valid direction after {MAX_RESAMPLE} draws")


def rank_key(sample: CemSample, flags: RewardFlags):
    ep = sample.episode
    if flags.use_grasp_lost:
        length, wrench = ep.completed_waypoints, ep.mean_wrench
    else:
        # grasp loss ignored: the episode counts as running on to its
        # force failure or completion
        length, wrench = ep.blind_completed, ep.blind_mean_wrench
    if flags.use_mean_wrench:
        return (-length, wrench, sample.epoch, sample.index)
    return (-length, sample.epoch, sample.index)


def rank_and_elite(history: Sequence[CemSample], T: int, flags: RewardFlags = RewardFlags()) -> list:
    """Top ``T`` samples by episode length (ties: mean wrench, then order).

    The returned elite is ordered by mean wrench when that signal is enabled.
    """
    if not history:
        raise InvalidArgumentError("history is empty")
    ranked = sorted(history, key=lambda s: rank_key(s, flags))
    elite = ranked[: min(T, len(ranked))]
    if flags.use_mean_wrench:
        elite.sort(key=lambda s: rank_key(s, flags)[1:])
    return elite


def fit_distribution(elite: Sequence[CemSample], sigma_floor):
    if not elite:
        raise InvalidArgumentError("elite is empty")
    E = np.array([s.epsilon for s in elite], dtype=float)
    mean = E.mean(axis=0)
    if len(E) > 1:
        std = E.std(axis=0, ddof=1)
    else:
        std = np.zeros_like(mean)
    return mean, np.maximum(std, sigma_floor)


def _run_cem(mech, config, dim, sigma0, make_candidate):
    """Shared epoch loop. ``make_candidate(mean, std, rng)`` -> (eps, axis|None, R, t)."""
    mean = np.zeros(dim)
    std = np.asarray(sigma0, dtype=float)
    flags = config.reward_flags
    history = []
    success_at = None
    for n in range(config.n_epochs):
        for e in range(config.episodes_per_epoch):
            rng = episode_rng(config.seed, n, e)
            eps, axis, Rs, ts = make_candidate(mean, std, rng)
            ep = run_episode_arrays(mech, Rs, ts)
            ok = is_success(mech, ep)
            history.append(CemSample(eps, axis, ep, n, e, ok))
            if ok and success_at is None:
                success_at = (n, len(history))
            if ok and config.stop_on_success:
                break
        if success_at is not None and config.stop_on_success:
            break
        elite = rank_and_elite(history, config.elite_count, flags)
        mean, std = fit_distribution(elite, config.sigma_floor)
    best = rank_and_elite(history, 1, flags)[0]
    return OptRun(
        history=tuple(history),
        best=best,
        succeeded=success_at is not None,
        episodes_to_success=None if success_at is None else success_at[1],
        epochs_to_success=None if success_at is None else success_at[0],
        final_distribution=(mean, std),
    )


def optimize(mech: Mechanism, init_axis: ScrewAxis, plan: WaypointPlan, config: CemConfig = CemConfig()) -> OptRun:
    """Screw-space CEM: perturb the axis, execute, rank, refit."""
    if init_axis.joint_type is not mech.true_axis.joint_type:
        raise InvalidArgumentError("initial axis and mechanism must share a joint type")
    init_axis = canonicalize_axis(init_axis)
    if len(config.sigma0) != 6:
        raise InvalidArgumentError("screw-space sigma0 needs 6 entries")

    def make(mean, std, rng):
        eps, axis = sample_candidate(init_axis, (mean, std), rng)
        wps = generate_relative_waypoints(axis, plan)
        Rs = np.array([p.rotation for p in wps])
        ts = np.array([p.translation for p in wps])
        return eps, axis, Rs, ts

    return _run_cem(mech, config, 6, config.sigma0, make)


def perturb_waypoints(Rs: np.ndarray, ts: np.ndarray, eps: np.ndarray):
    """Per-waypoint position offset ``eps[:3]`` and rotation vector ``eps[3:6]``."""
    e = eps.reshape(-1, 6)
    R_noise = np.array([so3_exp(w) for w in e[:, 3:]])
    return Rs @ R_noise, ts + e[:, :3]


def optimize_waypoint_space(
    mech: Mechanism,
    init_waypoints: Sequence[Pose],
    config: CemConfig = CemConfig(),
    noise: tuple = (0.01, 3.0),
) -> OptRun:
    """Baseline CEM over raw waypoints (6 numbers per waypoint).

    ``noise`` is ``(sigma_pos m, sigma_rot deg)``; it replaces ``config.sigma0``.
    """
    wps = list(init_waypoints)
    if len(wps) < 2:
        raise InvalidArgumentError("need at least 2 waypoints")
    R0 = np.array([p.rotation for p in wps])
    t0 = np.array([p.translation for p in wps])
    sig = np.tile([noise[0]] * 3 + [np.radians(noise[1])] * 3, len(wps))

    def make(mean, std, rng):
        eps = mean + std * rng.standard_normal(mean.shape)
        Rs, ts = perturb_waypoints(R0, t0, eps)
        return eps, None, Rs, ts

    return _run_cem(mech, config, sig.size, sig, make)


def candidate_waypoints(init_waypoints: Sequence[Pose], epsilon) -> list[Pose]:
    R0 = np.array([p.rotation for p in init_waypoints])
    t0 = np.array([p.translation for p in init_waypoints])
    Rs, ts = perturb_waypoints(R0, t0, np.asarray(epsilon, dtype=float))
    return [Pose(R, t) for R, t in zip(Rs, ts)]
