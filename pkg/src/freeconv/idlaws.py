"""Reference free infinitely divisible laws and a sampled divisibility check.

The one-parameter family w_a has the closed-form Cauchy transform

    G(z) = 1 / (a + (z - a + sqrt((z - a)^2 - 4)) / 2)

with the square-root branch fixed by Im z > 0  =>  Im(1/G) >= Im z; w_0 is
the standard semicircle law.  The semicircle and free Poisson families are
included as additional closed-form test laws.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import measures
from .errors import InversionDiverged, OutOfRange
from .measures import Measure
from .transforms import newton_invert, reciprocal_pair, require_upper

FAMILY_NAMES = ("semicircle", "free_poisson", "meixner_w")


@dataclass(frozen=True)
class FamilySpec:
    """Closed-form law tag: usable directly as a transform source."""

    name: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in FAMILY_NAMES:
            raise OutOfRange(f"unknown family {self.name!r}")
        p = dict(self.params)
        if self.name == "semicircle":
            p.setdefault("mean", 0.0)
            p.setdefault("variance", 1.0)
            if p["variance"] <= 0:
                raise OutOfRange("semicircle variance must be positive")
        elif self.name == "free_poisson":
            p.setdefault("rate", 1.0)
            if p["rate"] <= 0:
                raise OutOfRange("free Poisson rate must be positive")
        else:
            p.setdefault("a", 0.0)
        object.__setattr__(self, "params", p)


def semicircle(mean: float = 0.0, variance: float = 1.0) -> FamilySpec:
    return FamilySpec("semicircle", {"mean": mean, "variance": variance})


def free_poisson(rate: float) -> FamilySpec:
    return FamilySpec("free_poisson", {"rate": rate})


def meixner_w(a: float) -> FamilySpec:
    return FamilySpec("meixner_w", {"a": a})


def _edge_sqrt(z, lo, hi):
    """sqrt((z-lo)(z-hi)) with branch cut [lo, hi], asymptotic to z at infinity."""
    return np.sqrt(z - lo) * np.sqrt(z - hi)


def _meixner_pair(a: float):
    def G(z):
        z = np.asarray(z, dtype=complex)
        w = z - a
        s = _edge_sqrt(w, -2.0, 2.0)
        g = 1.0 / (a + 0.5 * (w + s))
        _assert_branch(z, g)
        return g

    def Gp(z):
        z = np.asarray(z, dtype=complex)
        w = z - a
        s = _edge_sqrt(w, -2.0, 2.0)
        F = a + 0.5 * (w + s)
        return -0.5 * (1.0 + w / s) / (F * F)

    return G, Gp


def _assert_branch(z, g):
    up = z.imag > 0
    if np.any(up):
        f = 1.0 / np.asarray(g)
        bad = up & (f.imag < np.asarray(z).imag - 1e-10)
        if np.any(bad):
            raise AssertionError("square-root branch violated Im(1/G) >= Im z")


def _semicircle_pair(mean: float, variance: float):
    sd = float(np.sqrt(variance))

    # (u - sqrt(u^2-4))/2 cancels badly for large |u|; u^2 - s^2 = 4 gives
    # the stable equivalent 2/(u + s)
    def G(z):
        u = (np.asarray(z, dtype=complex) - mean) / sd
        return 2.0 / (sd * (u + _edge_sqrt(u, -2.0, 2.0)))

    def Gp(z):
        u = (np.asarray(z, dtype=complex) - mean) / sd
        s = _edge_sqrt(u, -2.0, 2.0)
        return -2.0 * (1.0 + u / s) / (variance * (u + s) ** 2)

    return G, Gp


def _free_poisson_pair(rate: float):
    lo = (1.0 - np.sqrt(rate)) ** 2
    hi = (1.0 + np.sqrt(rate)) ** 2

    # (z+1-rate-s)/(2z) cancels for large |z|; with u = z+1-rate one has
    # u^2 - s^2 = 4z, so G = 2/(u + s) is the stable equivalent
    def G(z):
        z = np.asarray(z, dtype=complex)
        u = z + 1.0 - rate
        return 2.0 / (u + _edge_sqrt(z, lo, hi))

    def Gp(z):
        z = np.asarray(z, dtype=complex)
        s = _edge_sqrt(z, lo, hi)
        u = z + 1.0 - rate
        return -2.0 * (1.0 + (z - 1.0 - rate) / s) / (u + s) ** 2

    return G, Gp


def family_transform(spec: FamilySpec):
    """(G, G') closed-form evaluators for a family spec."""
    p = spec.params
    if spec.name == "semicircle":
        return _semicircle_pair(p["mean"], p["variance"])
    if spec.name == "free_poisson":
        return _free_poisson_pair(p["rate"])
    return _meixner_pair(p["a"])


def meixner_cauchy(a: float, z):
    """Cauchy transform of w_a with the branch assertion applied."""
    z = require_upper(z)
    G, _ = _meixner_pair(a)
    out = G(z)
    return out if np.ndim(out) else complex(out)


def family_cauchy(spec: FamilySpec, z):
    z = require_upper(z)
    G, _ = family_transform(spec)
    out = G(z)
    return out if np.ndim(out) else complex(out)


def family_measure(spec: FamilySpec, points: int = 4001) -> Measure:
    """Grid Measure realizing a family law.

    Semicircle and free Poisson use their standard closed-form densities;
    w_a is sampled from its transform just above the real axis (it has no
    simple density formula, so the transform is the source of truth).
    """
    p = spec.params
    if spec.name == "semicircle":
        sd = float(np.sqrt(p["variance"]))
        return measures.semicircle_measure(points=points, radius=2.0 * sd,
                                           mean=p["mean"])
    if spec.name == "free_poisson":
        lam = p["rate"]
        lo = (1.0 - np.sqrt(lam)) ** 2
        hi = (1.0 + np.sqrt(lam)) ** 2
        theta = np.linspace(0.0, np.pi, points)
        xs = 0.5 * (lo + hi) - 0.5 * (hi - lo) * np.cos(theta)
        with np.errstate(invalid="ignore", divide="ignore"):
            vals = np.sqrt(np.maximum((hi - xs) * (xs - lo), 0.0)) / (2 * np.pi * xs)
        vals = np.where(np.isfinite(vals), vals, 0.0)
        atoms = [(0.0, 1.0 - lam)] if lam < 1.0 else []
        return measures.from_density(xs, vals, atoms=atoms, normalize=True)
    a = p["a"]
    theta = np.linspace(0.0, np.pi, points)
    xs = a - 2.0 * np.cos(theta)
    G, _ = _meixner_pair(a)
    dens = np.maximum(-G(xs + 1e-9j).imag / np.pi, 0.0)
    atoms = []
    if abs(a) > 1.0:
        atoms.append((-1.0 / a, 1.0 - 1.0 / a**2))
    return measures.from_density(xs, dens, atoms=atoms, normalize=True)


# -- sampled infinite-divisibility verdict ----------------------------------

@dataclass(frozen=True)
class IdVerdict:
    kind: str                 # "passes" | "fails_at" | "continuation_broken"
    z: complex | None = None
    detail: str = ""

    @property
    def passes(self) -> bool:
        return self.kind == "passes"

    def __str__(self):
        if self.passes:
            return "PassesSampledCriterion"
        tag = "FailsAt" if self.kind == "fails_at" else "ContinuationBroken"
        return f"{tag}(z={self.z:.4g}) {self.detail}".rstrip()


DEFAULT_DEPTH_GRID = tuple(np.geomspace(200.0, 1.5, 120))


def is_free_id_sampled(source, depth_grid=None, width: float = 2.0,
                       x_samples: int = 9) -> IdVerdict:
    """Sampled check of the divisibility criterion: the Voiculescu transform
    must continue analytically down the sampled strip with Im phi <= 0 and
    sublinear growth at the top.  A heuristic, not a proof.

    Continuation failures are reported as verdicts: Newton divergence and
    deviations from smooth continuation mean phi is not single-valued along
    the line (a branch point inside the strip), positive Im phi means the
    continuation exists but leaves the Nevanlinna-negative class.
    """
    if depth_grid is None:
        depth_grid = DEFAULT_DEPTH_GRID
    depth = [float(y) for y in depth_grid]
    if len(depth) < 2 or any(b >= a for a, b in zip(depth, depth[1:])):
        raise ValueError("depth grid must be strictly decreasing")
    if depth[-1] < 0.05:
        raise ValueError("depth grid must stay at Im z >= 0.05")
    F, Fp = reciprocal_pair(source)
    y_top = depth[0]
    try:
        w_top = newton_invert(F, Fp, 1j * y_top, 1j * y_top)
    except InversionDiverged:
        return IdVerdict("continuation_broken", 1j * y_top, "no inverse at the top")
    if abs(w_top - 1j * y_top) / y_top >= 0.01:
        return IdVerdict("fails_at", 1j * y_top, "phi grows linearly at the top")
    for x in np.linspace(-width, width, x_samples):
        phis = []
        ys = []
        for y in depth:
            z = complex(x, y)
            seed = z + phis[-1] if phis else z
            try:
                w = newton_invert(F, Fp, z, seed)
            except InversionDiverged:
                return IdVerdict("continuation_broken", z, "Newton diverged")
            phi = w - z
            if phis:
                if abs(phi - phis[-1]) > 0.5:
                    return IdVerdict("continuation_broken", z,
                                     "inter-step jump exceeded 0.5")
                if len(phis) >= 2:
                    slope = (phis[-1] - phis[-2]) / (ys[-1] - ys[-2])
                    pred = phis[-1] + slope * (y - ys[-1])
                    if abs(phi - pred) > 0.05 * max(1.0, abs(phis[-1])):
                        return IdVerdict("continuation_broken", z,
                                         "continuation left the smooth branch")
            if phi.imag > 1e-6:
                return IdVerdict("fails_at", z,
                                 f"Im phi = {phi.imag:.3g} > 0")
            phis.append(phi)
            ys.append(y)
    return IdVerdict("passes")
