"""Probability measures on the real line.

A measure is a finite list of atoms plus a piecewise-linear density on an
explicit grid (zero outside the grid).  Instances are immutable; every
transformer returns a new object.  Mass is conserved to 1e-9 by all public
constructors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import MassNotOne, NonPositiveWeight, OrderTooLarge

MAX_MOMENT_ORDER = 64
MASS_TOL = 1e-9
ATOM_MERGE_TOL = 1e-12


def _merge_atoms(positions, weights):
    """Sort atoms and merge positions closer than ATOM_MERGE_TOL."""
    order = np.argsort(positions, kind="stable")
    positions = positions[order]
    weights = weights[order]
    out_pos, out_w = [], []
    for p, w in zip(positions, weights):
        if out_pos and p - out_pos[-1] <= ATOM_MERGE_TOL:
            out_w[-1] += w
        else:
            out_pos.append(p)
            out_w.append(w)
    return np.asarray(out_pos, dtype=float), np.asarray(out_w, dtype=float)


@dataclass(frozen=True)
class Measure:
    """Atoms plus piecewise-linear density; the universal transform input.

    Use :func:`make_atomic` / :func:`from_density` / :func:`from_json` to
    build probability measures (they enforce unit mass).  The constructor
    itself only checks structural invariants, so finite non-probability
    measures (e.g. the Nevanlinna representing measure) can reuse the type.
    """

    atom_positions: np.ndarray = field(default_factory=lambda: np.empty(0))
    atom_weights: np.ndarray = field(default_factory=lambda: np.empty(0))
    grid: np.ndarray = field(default_factory=lambda: np.empty(0))
    density: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        pos = np.asarray(self.atom_positions, dtype=float)
        wts = np.asarray(self.atom_weights, dtype=float)
        grid = np.asarray(self.grid, dtype=float)
        dens = np.asarray(self.density, dtype=float)
        if pos.shape != wts.shape or pos.ndim != 1:
            raise ValueError("atom positions/weights must be 1-d and aligned")
        if grid.shape != dens.shape or grid.ndim != 1:
            raise ValueError("grid/density must be 1-d and aligned")
        if not np.all(np.isfinite(pos)) or not np.all(np.isfinite(wts)):
            raise ValueError("atoms must be finite")
        if np.any(wts <= 0):
            raise NonPositiveWeight("atom weights must be positive")
        pos, wts = _merge_atoms(pos, wts)
        if grid.size:
            if grid.size < 2:
                raise ValueError("density grid needs at least 2 nodes")
            if np.any(np.diff(grid) <= 0):
                raise ValueError("grid must be strictly increasing")
            if np.any(dens < 0):
                raise ValueError("density values must be nonnegative")
        for name, val in (("atom_positions", pos), ("atom_weights", wts),
                          ("grid", grid), ("density", dens)):
            arr = np.ascontiguousarray(val)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    # -- elementary functionals -------------------------------------------

    def mass(self) -> float:
        total = float(self.atom_weights.sum())
        if self.grid.size:
            total += float(np.trapezoid(self.density, self.grid))
        return total

    def is_atomic(self) -> bool:
        return self.grid.size == 0

    def moment(self, k: int) -> float:
        """k-th raw moment, exact over atoms + trapezoid over the density."""
        if k < 0 or k > MAX_MOMENT_ORDER:
            raise OrderTooLarge(f"moment order {k} not in [0, {MAX_MOMENT_ORDER}]")
        total = float(np.sum(self.atom_weights * self.atom_positions**k))
        if self.grid.size:
            total += float(np.trapezoid(self.grid**k * self.density, self.grid))
        return total

    def absolute_moment(self, d: float) -> float:
        """beta_d = integral of |x|^d."""
        if d <= 0 or d > MAX_MOMENT_ORDER:
            raise OrderTooLarge(f"absolute moment order {d} not in (0, {MAX_MOMENT_ORDER}]")
        total = float(np.sum(self.atom_weights * np.abs(self.atom_positions)**d))
        if self.grid.size:
            total += float(np.trapezoid(np.abs(self.grid)**d * self.density, self.grid))
        return total

    def variance(self) -> float:
        m1 = self.moment(1)
        return self.moment(2) - m1 * m1

    def tail_mass(self, N: float) -> float:
        """Mass outside [-N, N]."""
        if N <= 0:
            raise ValueError("N must be positive")
        out = float(np.sum(self.atom_weights[np.abs(self.atom_positions) > N]))
        if self.grid.size:
            inside = _clip_density(self.grid, self.density, N)
            dens_mass = float(np.trapezoid(self.density, self.grid))
            if inside is None:
                out += dens_mass
            else:
                g_in, d_in = inside
                out += dens_mass - float(np.trapezoid(d_in, g_in))
        return min(max(out, 0.0), self.mass())

    def characteristic_function(self, t: float) -> complex:
        val = complex(np.sum(self.atom_weights * np.exp(1j * t * self.atom_positions)))
        if self.grid.size:
            val += complex(np.trapezoid(np.exp(1j * t * self.grid) * self.density, self.grid))
        return val

    # -- transformers ------------------------------------------------------

    def dilate(self, s: float) -> "Measure":
        """Pushforward x -> x/s; s = sqrt(n) gives the central-limit scaling."""
        if s <= 0:
            raise ValueError("dilation factor must be positive")
        if s == 1.0:
            return self
        return Measure(self.atom_positions / s, self.atom_weights,
                       self.grid / s, self.density * s)

    def shift(self, c: float) -> "Measure":
        """Pushforward x -> x + c."""
        return Measure(self.atom_positions + c, self.atom_weights,
                       self.grid + c, self.density)

    def truncate(self, N: float) -> "Measure":
        """Move all mass outside [-N, N] to an atom at 0 (no renormalization)."""
        if N <= 0:
            raise ValueError("truncation radius must be positive")
        keep = np.abs(self.atom_positions) <= N
        pos = self.atom_positions[keep]
        wts = self.atom_weights[keep]
        moved = float(np.sum(self.atom_weights[~keep]))
        grid, dens = self.grid, self.density
        if self.grid.size:
            dens_mass = float(np.trapezoid(self.density, self.grid))
            inside = _clip_density(self.grid, self.density, N)
            if inside is None:
                moved += dens_mass
                grid = np.empty(0)
                dens = np.empty(0)
            else:
                grid, dens = inside
                moved += dens_mass - float(np.trapezoid(dens, grid))
        if moved > 0:
            pos = np.append(pos, 0.0)
            wts = np.append(wts, moved)
        return Measure(pos, wts, grid, dens)

    # -- serialization -----------------------------------------------------

    def to_json_dict(self) -> dict:
        out = {"atoms": [[float(x), float(w)] for x, w in
                         zip(self.atom_positions, self.atom_weights)]}
        if self.grid.size:
            out["density"] = {"grid": self.grid.tolist(),
                              "values": self.density.tolist()}
        return out

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)


def _clip_density(grid, density, N):
    """Restrict a piecewise-linear density to [-N, N], interpolating at the cut.

    Returns (grid, values) or None when the support misses [-N, N] entirely.
    """
    lo, hi = -float(N), float(N)
    if grid[-1] <= lo or grid[0] >= hi:
        return None
    xs = [x for x in grid if lo < x < hi]
    if grid[0] < lo:
        xs.insert(0, lo)
    elif grid[0] >= lo:
        xs.insert(0, float(grid[0]))
    if grid[-1] > hi:
        xs.append(hi)
    elif grid[-1] <= hi:
        xs.append(float(grid[-1]))
    xs = np.unique(np.asarray(xs, dtype=float))
    if xs.size < 2:
        return None
    vals = np.interp(xs, grid, density)
    return xs, vals


def _check_probability(m: Measure) -> Measure:
    total = m.mass()
    if abs(total - 1.0) > MASS_TOL:
        raise MassNotOne(f"total mass {total!r} is not 1 within {MASS_TOL}")
    return m


def make_atomic(atoms) -> Measure:
    """Purely atomic probability measure from (position, weight) pairs."""
    if not atoms:
        raise ValueError("need at least one atom")
    pos = np.asarray([a[0] for a in atoms], dtype=float)
    wts = np.asarray([a[1] for a in atoms], dtype=float)
    if np.any(wts <= 0):
        raise NonPositiveWeight("atom weights must be positive")
    if abs(wts.sum() - 1.0) > 1e-12:
        raise MassNotOne(f"atom weights sum to {wts.sum()!r}, expected 1")
    return Measure(pos, wts)


def from_density(grid, values, atoms=(), normalize=False) -> Measure:
    """Probability measure with a piecewise-linear density (plus optional atoms).

    With normalize=True the density values are rescaled so that total mass is
    exactly 1 under the trapezoid rule; otherwise the mass must already be 1.
    """
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    pos = np.asarray([a[0] for a in atoms], dtype=float)
    wts = np.asarray([a[1] for a in atoms], dtype=float)
    if normalize:
        atom_mass = float(wts.sum()) if wts.size else 0.0
        dens_mass = float(np.trapezoid(values, grid))
        if dens_mass <= 0:
            raise MassNotOne("cannot normalize a zero density")
        values = values * ((1.0 - atom_mass) / dens_mass)
    return _check_probability(Measure(pos, wts, grid, values))


def from_json_dict(data: dict) -> Measure:
    if "family" in data and data["family"]:
        from . import idlaws  # family resolution lives there

        spec = idlaws.FamilySpec(data["family"]["name"],
                                 dict(data["family"].get("params", {})))
        return idlaws.family_measure(spec)
    atoms = [(float(x), float(w)) for x, w in data.get("atoms", [])]
    dens = data.get("density") or {}
    grid = dens.get("grid", [])
    values = dens.get("values", [])
    if grid:
        return from_density(grid, values, atoms=atoms)
    return make_atomic(atoms)


def load(path) -> Measure:
    with open(path) as fh:
        return from_json_dict(json.load(fh))


# -- functional aliases ----------------------------------------------------

def moment(m: Measure, k: int) -> float:
    return m.moment(k)


def absolute_moment(m: Measure, d: float) -> float:
    return m.absolute_moment(d)


def truncate(m: Measure, N: float) -> Measure:
    return m.truncate(N)


def characteristic_function(m: Measure, t: float) -> complex:
    return m.characteristic_function(t)


def dilate(m: Measure, s: float) -> Measure:
    return m.dilate(s)


def tail_mass(m: Measure, N: float) -> float:
    return m.tail_mass(N)


def moment_vector(m: Measure, K: int) -> list[float]:
    """Moments m_1..m_K of a measure, with a Hankel positivity sanity check."""
    if K < 1 or K > MAX_MOMENT_ORDER:
        raise OrderTooLarge(f"order {K} not in [1, {MAX_MOMENT_ORDER}]")
    ms = [m.moment(k) for k in range(0, K + 1)]
    half = K // 2
    hankel = np.array([[ms[i + j] for j in range(half + 1)] for i in range(half + 1)])
    min_eig = float(np.linalg.eigvalsh(hankel)[0])
    scale = max(1.0, float(np.abs(hankel).max()))
    if min_eig < -1e-9 * scale:
        raise ValueError(f"moment Hankel matrix not PSD (min eig {min_eig})")
    return ms[1:]


def semicircle_measure(points: int = 2001, radius: float = 2.0,
                       mean: float = 0.0, spacing: str = "cos") -> Measure:
    """Grid measure for the semicircle law of variance (radius/2)^2.

    Cosine node spacing clusters points at the square-root edges, where a
    uniform grid loses most of its trapezoid accuracy.
    """
    if spacing == "cos":
        theta = np.linspace(0.0, np.pi, points)
        xs = -radius * np.cos(theta)
    elif spacing == "uniform":
        xs = np.linspace(-radius, radius, points)
    else:
        raise ValueError(f"unknown spacing {spacing!r}")
    vals = 2.0 / (np.pi * radius**2) * np.sqrt(np.maximum(radius**2 - xs**2, 0.0))
    return from_density(xs + mean, vals, normalize=True)


def bernoulli_measure() -> Measure:
    """Symmetric two-point law at +-1."""
    return make_atomic([(-1.0, 0.5), (1.0, 0.5)])
