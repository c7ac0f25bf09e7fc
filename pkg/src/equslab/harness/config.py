"""Experiment specifications (YAML) and their resolution into runnable objects."""

import copy
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List

import numpy as np
import yaml

from ..diffusion import build_schedule
from ..guidance import GuidanceConfig
from ..operators import TASKS
from ..priors import EpsErrorDenoiser, GaussianMixturePrior, symmetrize, toy_mixture
from ..samplers import SCHEDULES, SamplerConfig
from ..transforms import parse_group
from .pnm import read_pnm

DEFAULT_PRIOR = {
    "shape": [16, 16, 1],
    "base_components": 4,
    "variance": 1e-4,
    "seed": 1,
    "symmetrize": "flip",
    "eps_error": 0.2,
    "eps_error_seed": 2,
}

DEFAULT_SCHEDULE = {"T": 1000, "beta_start": 1e-4, "beta_end": 0.02}

#: The 2x2 ablation cross (equivariant sampling x timestep-aware schedule).
ABLATION_METHODS = [
    {"equivariant": False, "schedule": "uniform"},
    {"equivariant": True, "schedule": "uniform"},
    {"equivariant": False, "schedule": "quadratic"},
    {"equivariant": True, "schedule": "quadratic"},
]


class SpecError(ValueError):
    pass


@dataclass
class ExperimentSpec:
    name: str
    tasks: List[Dict[str, Any]]
    prior: Dict[str, Any]
    methods: List[Dict[str, Any]]
    seeds: List[int]
    nfe: List[int]
    sigma_y: List[float]
    group: str = "flip"
    schedule: Dict[str, Any] = field(default_factory=lambda: dict(DEFAULT_SCHEDULE))
    task_seed: int = 3
    output: str = "runs/out"
    save_images: bool = True

    def to_dict(self):
        return {
            "name": self.name,
            "tasks": copy.deepcopy(self.tasks),
            "prior": copy.deepcopy(self.prior),
            "methods": copy.deepcopy(self.methods),
            "seeds": list(self.seeds),
            "nfe": list(self.nfe),
            "sigma_y": list(self.sigma_y),
            "group": self.group,
            "schedule": dict(self.schedule),
            "task_seed": self.task_seed,
            "output": self.output,
            "save_images": self.save_images,
        }


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _seeds(v):
    if isinstance(v, dict):
        return list(range(int(v.get("start", 0)), int(v.get("start", 0)) + int(v["count"])))
    if isinstance(v, int):
        return list(range(v))
    return [int(s) for s in v]


def resolve_method(m):
    m = dict(m)
    m.setdefault("equivariant", False)
    m.setdefault("schedule", "uniform")
    m.setdefault("guidance", "pinv")
    m.setdefault("weight", 1.0)
    if m["schedule"] not in SCHEDULES:
        raise SpecError(f"unknown schedule {m['schedule']!r}")
    try:
        GuidanceConfig(mode=m["guidance"], weight=float(m["weight"]))
    except ValueError as exc:
        raise SpecError(str(exc)) from None
    return m


def spec_from_dict(d, base_dir=".") -> ExperimentSpec:
    d = dict(d)
    try:
        tasks = [t if isinstance(t, dict) else {"name": t} for t in _as_list(d["tasks"])]
    except KeyError:
        raise SpecError("spec needs a 'tasks' entry") from None
    for t in tasks:
        if t.get("name") not in TASKS:
            raise SpecError(f"unknown task {t.get('name')!r}; expected one of {TASKS}")
        t.setdefault("params", {})
    prior = dict(DEFAULT_PRIOR)
    prior.update(d.get("prior", {}))
    if "means" in prior:
        prior["means"] = [m if not isinstance(m, str) or os.path.isabs(m) else os.path.join(base_dir, m) for m in prior["means"]]
    methods = [resolve_method(m) for m in d.get("methods", ABLATION_METHODS)]
    names = [method_name(m) for m in methods]
    if len(set(names)) != len(names):
        raise SpecError(f"methods must be distinct, got {names}")
    seeds = _seeds(d.get("seeds", 30))
    if len(set(seeds)) != len(seeds):
        raise SpecError("seeds must be distinct")
    spec = ExperimentSpec(
        name=str(d.get("name", "experiment")),
        tasks=tasks,
        prior=prior,
        methods=methods,
        seeds=seeds,
        nfe=[int(n) for n in _as_list(d.get("nfe", 25))],
        sigma_y=[float(s) for s in _as_list(d.get("sigma_y", 0.0))],
        group=str(d.get("group", "flip")),
        schedule={**DEFAULT_SCHEDULE, **d.get("schedule", {})},
        task_seed=int(d.get("task_seed", 3)),
        output=str(d.get("output", "runs/out")),
        save_images=bool(d.get("save_images", True)),
    )
    try:
        parse_group(spec.group)
    except ValueError as exc:
        raise SpecError(str(exc)) from None
    if any(s < 0 for s in spec.sigma_y):
        raise SpecError("sigma_y values must be >= 0")
    T = int(spec.schedule["T"])
    if any(not 1 <= n <= T for n in spec.nfe):
        raise SpecError(f"every nfe must lie in [1, {T}]")
    return spec


def load_spec(path) -> ExperimentSpec:
    with open(path) as fh:
        d = yaml.safe_load(fh) or {}
    return spec_from_dict(d, base_dir=os.path.dirname(os.path.abspath(path)))


def dump_spec(spec: ExperimentSpec, path):
    with open(path, "w") as fh:
        yaml.safe_dump(spec.to_dict(), fh, sort_keys=False)


def build_prior(p):
    """Return ``(data_prior, denoiser)`` from a prior spec.

    The data prior generates ground truth; the denoiser is what the sampler
    queries (the data prior itself when ``eps_error`` is 0).
    """
    shape = tuple(int(v) for v in p["shape"])
    if "means" in p:
        means = []
        for m in p["means"]:
            arr = read_pnm(m) if isinstance(m, str) else np.asarray(m, dtype=np.float64).reshape(shape)
            if arr.shape != shape:
                raise SpecError(f"mean image {m!r} has shape {arr.shape}, expected {shape}")
            means.append(arr)
        K = len(means)
        weights = np.asarray(p.get("weights", [1.0 / K] * K), dtype=np.float64)
        variances = p["variances"] if "variances" in p else [p["variance"]] * K
        prior = GaussianMixturePrior(weights / weights.sum(), np.stack(means), variances)
    else:
        prior = toy_mixture(shape, int(p["base_components"]), float(p["variance"]), seed=int(p["seed"]))
    if p.get("symmetrize"):
        prior = symmetrize(prior, parse_group(p["symmetrize"]))
    scale = float(p.get("eps_error", 0.0))
    denoiser = EpsErrorDenoiser(prior, scale, seed=int(p.get("eps_error_seed", 0))) if scale > 0 else prior
    return prior, denoiser


def build_noise_schedule(s):
    return build_schedule(int(s["T"]), float(s["beta_start"]), float(s["beta_end"]))


def sampler_config(method, nfe, sigma_y, seed, group) -> SamplerConfig:
    return SamplerConfig(
        nfe=int(nfe),
        schedule=method["schedule"],
        eta=method.get("eta"),
        guidance=GuidanceConfig(mode=method["guidance"], weight=float(method["weight"])),
        equivariant=bool(method["equivariant"]),
        group=parse_group(group),
        seed=int(seed),
        sigma_y=float(sigma_y),
        init_pinv=bool(method.get("init_pinv", False)),
        jump=method.get("jump", "denoiser"),
    )


def method_name(m) -> str:
    tag = ("equs" if m["equivariant"] else "baseline") + ("+tas" if m["schedule"] == "quadratic" else "")
    if m["guidance"] != "pinv":
        tag += f"[{m['guidance']}]"
    if m.get("jump", "denoiser") != "denoiser":
        tag += f"[{m['jump']}]"
    if m.get("init_pinv"):
        tag += "[init-pinv]"
    if m.get("eta") is not None:
        tag += f"[eta={m['eta']}]"
    return tag
