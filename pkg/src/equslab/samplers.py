"""Guided reverse-diffusion samplers: baseline and equivariant (dual-trajectory).

Both samplers evaluate the denoiser exactly once per entry of the timestep
sub-sequence. The equivariant sampler alternates the plain posterior-mean
map ``D(x_t)`` with ``T_f^{-1} D(T_f x_t)`` along a single chain.
"""

from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from .diffusion import NoiseSchedule, estimate_x0, reverse_step
from .guidance import (
    GuidanceConfig,
    apply_guidance,
    guide_gradient,
    guide_pinv,
    guide_transpose,
    noisy_weight,
    residual_norm2,
)
from .transforms import HFLIP, TransformGroup, next_transform

SCHEDULES = ("uniform", "quadratic")
#: Noise direction of each jump: the denoiser's own prediction, or re-derived from the guided estimate.
JUMPS = ("denoiser", "rederived")


def _make_strict(raw, T):
    """Nudge rounded steps into a strictly increasing list inside ``[1, T]``, keeping its length."""
    out = [int(v) for v in raw]
    prev = 0
    for i, v in enumerate(out):
        out[i] = prev = max(v, prev + 1)
    nxt = T + 1
    for i in range(len(out) - 1, -1, -1):
        out[i] = nxt = min(out[i], nxt - 1)
    return out


def make_subsequence(T: int, N: int, kind: str = "uniform") -> List[int]:
    """Strictly decreasing list of ``N`` steps from ``T`` down towards 1.

    ``uniform`` spaces steps evenly; ``quadratic`` uses ``t_i = round(T (i/N)^2)``,
    which packs steps near ``t = 1``.
    """
    T, N = int(T), int(N)
    if N < 1:
        raise ValueError("N must be >= 1")
    if N > T:
        raise ValueError(f"N={N} exceeds T={T}")
    i = np.arange(1, N + 1)
    if kind == "uniform":
        raw = np.rint(1 + (T - 1) * (i - 1) / max(N - 1, 1)) if N > 1 else np.array([T])
    elif kind == "quadratic":
        raw = np.rint(T * (i / N) ** 2)
    else:
        raise ValueError(f"unknown schedule kind {kind!r}; expected one of {SCHEDULES}")
    return _make_strict(raw, T)[::-1]


@dataclass(frozen=True)
class SamplerConfig:
    nfe: int = 25
    schedule: str = "uniform"
    eta: Optional[float] = None
    guidance: GuidanceConfig = field(default_factory=GuidanceConfig)
    equivariant: bool = False
    group: TransformGroup = field(default_factory=lambda: TransformGroup([HFLIP]))
    seed: int = 0
    sigma_y: float = 0.0
    init_pinv: bool = False
    jump: str = "denoiser"

    def __post_init__(self):
        if self.schedule not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.eta is not None and not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")
        if self.sigma_y < 0:
            raise ValueError("sigma_y must be >= 0")
        if self.jump not in JUMPS:
            raise ValueError(f"unknown jump direction {self.jump!r}; expected one of {JUMPS}")

    def resolved_eta(self, T):
        if self.eta is not None:
            return float(self.eta)
        return 1.0 if self.nfe == T else 0.0

    @property
    def method(self) -> str:
        tag = "equs" if self.equivariant else "baseline"
        return f"{tag}-{self.schedule}-{self.guidance.mode}"


@dataclass
class StepDiagnostic:
    t: int
    t_next: int
    residual: float
    residual_guided: float
    trajectory: str
    transform: str


@dataclass
class RunReport:
    x0: np.ndarray
    diagnostics: List[StepDiagnostic]
    nfe_used: int
    steps: List[int]
    config: SamplerConfig
    guidance_weight: float
    grad_evals: int = 0

    @property
    def tas_objective(self) -> float:
        """Sum over the sub-sequence of the pre-guidance residual ``||y - A x_{0|t}||^2``."""
        return float(sum(d.residual for d in self.diagnostics))


class CountingDenoiser:
    """Noise prediction plus posterior-mean estimate, counting prior evaluations."""

    def __init__(self, prior, sched):
        self.prior = prior
        self.sched = sched
        self.calls = 0

    def __call__(self, x_t, t):
        """Return ``(eps_hat, x_{0|t})`` for one evaluation."""
        self.calls += 1
        eps = self.prior.eps(x_t, t, self.sched)
        return eps, estimate_x0(x_t, eps, t, self.sched)


def _guidance_term(mode, y, A, x0t, x_t, denoise_at, gcfg):
    if mode == "pinv":
        return guide_pinv(y, A, x0t), 0
    if mode == "transpose":
        return guide_transpose(y, A, x0t), 0
    if mode == "gradient":
        grad = guide_gradient(y, A, x_t, denoise_at, h=gcfg.fd_step, force=gcfg.force)
        return -grad, 2 * x_t.size
    return np.zeros_like(x0t), 0


def _run(y, A, prior, sched: NoiseSchedule, cfg: SamplerConfig, equivariant: bool) -> RunReport:
    y = np.asarray(y, dtype=np.float64).ravel()
    steps = make_subsequence(sched.T, cfg.nfe, cfg.schedule)
    eta = cfg.resolved_eta(sched.T)
    rng = np.random.default_rng(cfg.seed)
    shape = A.in_shape

    gcfg = cfg.guidance
    weight = gcfg.weight
    if cfg.sigma_y > 0:
        weight = noisy_weight(weight, cfg.sigma_y, A.m)

    D = CountingDenoiser(prior, sched)
    ab_T = sched.alpha_bar(steps[0])
    x_t = rng.standard_normal(shape)
    if cfg.init_pinv:
        x_t = np.sqrt(ab_T) * A.pinv(y) + np.sqrt(1.0 - ab_T) * x_t

    diagnostics = []
    grad_evals = 0
    n_equi = 0
    x0_guided = x_t
    for i, t in enumerate(steps):
        t_next = steps[i + 1] if i + 1 < len(steps) else 0
        noise = rng.standard_normal(shape)
        if equivariant and i % 2 == 1:
            f = next_transform(cfg.group, n_equi)
            n_equi += 1
            eps, x0t = (f.inverse(v) for v in D(f.apply(x_t), t))
            trajectory, tname = "equivariant", f.name

            def denoise_at(z, f=f, t=t):
                return f.inverse(estimate_x0(f.apply(z), prior.eps(f.apply(z), t, sched), t, sched))
        else:
            eps, x0t = D(x_t, t)
            trajectory, tname = "standard", "identity"

            def denoise_at(z, t=t):
                return estimate_x0(z, prior.eps(z, t, sched), t, sched)

        g, extra = _guidance_term(gcfg.mode, y, A, x0t, x_t, denoise_at, gcfg)
        grad_evals += extra
        x0_guided = apply_guidance(x0t, g, weight)
        diagnostics.append(
            StepDiagnostic(
                t=t,
                t_next=t_next,
                residual=residual_norm2(y, A, x0t),
                residual_guided=residual_norm2(y, A, x0_guided),
                trajectory=trajectory,
                transform=tname,
            )
        )
        x_t = reverse_step(x_t, x0_guided, t, t_next, sched, eta, noise, eps if cfg.jump == "denoiser" else None)

    if D.calls != len(steps):
        raise RuntimeError(f"denoiser called {D.calls} times for {len(steps)} steps")
    return RunReport(
        x0=x0_guided,
        diagnostics=diagnostics,
        nfe_used=D.calls,
        steps=steps,
        config=cfg,
        guidance_weight=weight,
        grad_evals=grad_evals,
    )


def sample_baseline(y, A, prior, sched, cfg: SamplerConfig) -> RunReport:
    if cfg.equivariant:
        raise ValueError("sample_baseline called with equivariant=True")
    return _run(y, A, prior, sched, cfg, equivariant=False)


def sample_equs(y, A, prior, sched, cfg: SamplerConfig) -> RunReport:
    if not cfg.equivariant:
        raise ValueError("sample_equs called with equivariant=False")
    return _run(y, A, prior, sched, cfg, equivariant=True)


def sample(y, A, prior, sched, cfg: SamplerConfig) -> RunReport:
    """Dispatch on ``cfg.equivariant``."""
    return _run(y, A, prior, sched, cfg, equivariant=cfg.equivariant)


def with_seed(cfg: SamplerConfig, seed: int) -> SamplerConfig:
    return replace(cfg, seed=int(seed))
