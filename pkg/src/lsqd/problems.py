"""Manufactured solutions and the named run presets."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .assembly import ProblemSpec
from .basis import exponents
from .geometry import LevelSetDomain, octofoil_domain, square_domain
from .grid import GridConfig


@dataclass(frozen=True)
class ExactSolution:
    name: str
    value: Callable
    gradient: Callable
    laplacian: Callable
    d: int = 2


def exp_xy() -> ExactSolution:
    def u(x):
        x = np.asarray(x, dtype=float)
        return np.exp(x[..., 0] + x[..., 1])

    return ExactSolution(
        "exp_xy",
        u,
        lambda x: np.stack([u(x), u(x)], axis=-1),
        lambda x: 2.0 * u(x),
    )


def sincos7_1d() -> ExactSolution:
    def u(x):
        t = 7.0 * np.asarray(x, dtype=float)[..., 0]
        return np.sin(t) + np.cos(t)

    def du(x):
        t = 7.0 * np.asarray(x, dtype=float)[..., 0]
        return (7.0 * (np.cos(t) - np.sin(t)))[..., None]

    return ExactSolution("sincos7_1d", u, du, lambda x: -49.0 * u(x), d=1)


def polynomial(P: int, d: int = 2, seed: int = 0) -> ExactSolution:
    """Random polynomial of total degree ``P`` with O(1) coefficients."""
    exps = np.asarray(exponents(P, d))
    coef = np.random.default_rng(seed).uniform(-1.0, 1.0, len(exps))

    def terms(x, shift):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for c, e in zip(coef, exps):
            e = e - shift
            if np.any(e < 0):
                continue
            k = np.prod([np.prod(np.arange(e[m] + 1, e[m] + shift[m] + 1)) for m in range(d)])
            out = out + c * k * np.prod(x ** e, axis=-1)
        return out

    unit = np.eye(d, dtype=np.int64)
    return ExactSolution(
        f"polynomial({P})",
        lambda x: terms(x, np.zeros(d, dtype=np.int64)),
        lambda x: np.stack([terms(x, unit[m]) for m in range(d)], axis=-1),
        lambda x: sum(terms(x, 2 * unit[m]) for m in range(d)),
        d=d,
    )


# Boundary-condition families as (beta, gamma) fields of the boundary point.
def _split(left, right):
    # Dirichlet-type data on x < 0, the other condition on x >= 0
    return lambda x: left if x[0] < 0.0 else right


BC_WEIGHTS = {
    "dirichlet": (1.0, 0.0),
    "neumann": (0.0, 1.0),
    "robin": (1.0, 1.0),
    "mixed": (_split(1.0, 1.0), _split(0.0, 1.0)),
    "degenerate_robin": (_split(1.0, 1.0), _split(0.0, -1.0)),
    "helmholtz": (1.0, 0.0),
}


def manufacture(exact: ExactSolution, a: float, mu: float, bc: str) -> ProblemSpec:
    """``f = a u - mu Lap(u)`` and ``g = beta u + gamma grad(u).n`` from ``exact``."""
    try:
        beta, gamma = BC_WEIGHTS[bc]
    except KeyError:
        raise ValueError(f"unknown boundary condition {bc!r}") from None
    bf = beta if callable(beta) else (lambda x, _b=beta: _b)
    gf = gamma if callable(gamma) else (lambda x, _g=gamma: _g)

    def f(x):
        return a * exact.value(x) - mu * exact.laplacian(x)

    def g(x, n):
        x = np.asarray(x, dtype=float)
        return bf(x) * float(exact.value(x)) + gf(x) * float(exact.gradient(x) @ np.asarray(n, dtype=float))

    return ProblemSpec(a=a, mu=mu, f=f, g=g, beta=beta, gamma=gamma, exact=exact)


@dataclass(frozen=True)
class IntervalDomain:
    lo: float = 0.0
    hi: float = 1.0
    kind: str = "interval"


@dataclass
class Preset:
    name: str
    domain: object
    grid: GridConfig | None
    problem: ProblemSpec
    P_range: tuple = (2, 3, 4, 5)
    splits_range: tuple = (0, 1, 2, 3)
    bc: str = "dirichlet"
    one_d: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)


BASE_DEPTH = 4
# 2D sweeps reach errors near 1e-10 at P=5; a 1e-12 relative residual leaves
# smooth CG error modes above that level on the finest grids
SWEEP_SOLVER = dict(rel_tol=1e-14)
RANDOM_GRID = dict(split_probability=0.5, max_extra_depth=1)
BC_NAMES = ("dirichlet", "neumann", "robin", "mixed", "degenerate_robin", "helmholtz")
GRID_ALIASES = {"uniform": "uniform", "adaptive": "random", "random": "random"}
ALIASES = {
    "degenerate/robin": "degenerate_robin/octofoil/uniform",
    "degenerate/helmholtz": "helmholtz/octofoil/uniform",
}


def make_domain(kind: str) -> LevelSetDomain:
    if kind == "square":
        return square_domain()
    if kind == "octofoil":
        return octofoil_domain()
    raise ValueError(f"unknown domain {kind!r}")


def grid_config(mode: str, seed: int = 7, base_depth: int = BASE_DEPTH, splits: int = 0) -> GridConfig:
    mode = GRID_ALIASES[mode]
    extra = RANDOM_GRID if mode == "random" else {}
    return GridConfig(mode=mode, base_depth=base_depth, random_seed=seed, splits=splits, **extra)


def preset(name: str, seed: int = 7) -> Preset:
    """Resolve ``<bc>/<domain>/<grid>[/ratio<k>]``, ``demo1d`` or an alias.

    ``<grid>`` is ``uniform`` or ``adaptive`` (random non-graded tree). The
    ratio suffix sets ``a = k`` with ``mu = 1``. Helmholtz presets use
    ``a = 1, mu = -100``.
    """
    name = ALIASES.get(name, name)
    if name == "demo1d":
        exact = sincos7_1d()
        prob = manufacture(exact, a=0.0, mu=1.0, bc="dirichlet")
        return Preset(
            name, IntervalDomain(), None, prob, P_range=(2, 3, 4), splits_range=tuple(range(6)),
            one_d=dict(n0=10, seed=seed),
        )
    parts = name.split("/")
    if len(parts) not in (3, 4):
        raise ValueError(f"unknown preset {name!r}")
    bc, dom, mode = parts[:3]
    if bc not in BC_NAMES or dom not in ("square", "octofoil") or mode not in GRID_ALIASES:
        raise ValueError(f"unknown preset {name!r}")
    a, mu = 1.0, 1.0
    if bc == "helmholtz":
        mu = -100.0
    if len(parts) == 4:
        if not parts[3].startswith("ratio"):
            raise ValueError(f"unknown preset {name!r}")
        try:
            a = float(parts[3][len("ratio"):])
        except ValueError:
            raise ValueError(f"unknown preset {name!r}") from None
    prob = manufacture(exp_xy(), a=a, mu=mu, bc=bc)
    return Preset(name, make_domain(dom), grid_config(mode, seed), prob, bc=bc, solver=dict(SWEEP_SOLVER))


def preset_names() -> list[str]:
    names = [f"{bc}/{dom}/{grid}" for bc in BC_NAMES for dom in ("square", "octofoil") for grid in ("uniform", "adaptive")]
    names += [f"neumann/octofoil/{grid}/ratio{k}" for grid in ("uniform", "adaptive") for k in (1, 10, 100, 1000)]
    return names + ["demo1d"] + sorted(ALIASES)
