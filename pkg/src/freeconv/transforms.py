"""Cauchy / reciprocal Cauchy / Voiculescu transforms.

Evaluation sources are either a :class:`~freeconv.measures.Measure` (atom sums
plus segment-exact integrals of the piecewise-linear density) or a closed-form
family spec from :mod:`freeconv.idlaws`.  All evaluators are vectorized over
complex arrays with positive imaginary part.
"""

from __future__ import annotations

import numpy as np

from .errors import (CauchyVanishes, InversionDiverged, NotCentered,
                     NotUpperHalfPlane)
from .measures import Measure

HALF_PLANE_TOL = 1e-10

# The closed-form segment integral suffers catastrophic cancellation when the
# segment is much shorter than its distance to z (steep narrow segments make
# c and d huge while the log is tiny).  Far segments are integrated with
# Gauss-Legendre instead, which is exact to machine precision in that regime.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(6)
_FAR_RATIO = 0.1


def require_upper(z):
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag <= 0):
        raise NotUpperHalfPlane("evaluation point must have Im z > 0")
    return z


def _density_segments(m: Measure):
    t0, t1 = m.grid[:-1], m.grid[1:]
    v0, v1 = m.density[:-1], m.density[1:]
    keep = (v0 != 0) | (v1 != 0)
    t0, t1, v0, v1 = t0[keep], t1[keep], v0[keep], v1[keep]
    d = (v1 - v0) / (t1 - t0)
    c = v0 - d * t0
    return t0, t1, c, d


def measure_cauchy(m: Measure, z):
    """G(z) = integral of 1/(z-t); exact per atom and per linear segment."""
    z = np.asarray(z, dtype=complex)
    zz = z[..., None]
    val = np.zeros(z.shape, dtype=complex)
    if m.atom_positions.size:
        val += np.sum(m.atom_weights / (zz - m.atom_positions), axis=-1)
    if m.grid.size:
        t0, t1, c, d = _density_segments(m)
        if t0.size:
            # int (c+dt)/(z-t) dt = (c+dz) log((z-t0)/(z-t1)) - d (t1-t0)
            tm = 0.5 * (t0 + t1)
            half = 0.5 * (t1 - t0)
            with np.errstate(invalid="ignore"):
                L = np.log((zz - t0) / (zz - t1))
            exact = (c + d * zz) * L - d * (t1 - t0)
            quad = np.zeros_like(exact)
            for u, wgt in zip(_GL_NODES, _GL_WEIGHTS):
                tk = tm + half * u
                quad += wgt * (c + d * tk) / (zz - tk)
            quad *= half
            far = 2.0 * half < _FAR_RATIO * np.abs(zz - tm)
            val += np.sum(np.where(far, quad, exact), axis=-1)
    return val if val.shape else complex(val)


def measure_cauchy_prime(m: Measure, z):
    z = np.asarray(z, dtype=complex)
    zz = z[..., None]
    val = np.zeros(z.shape, dtype=complex)
    if m.atom_positions.size:
        val -= np.sum(m.atom_weights / (zz - m.atom_positions) ** 2, axis=-1)
    if m.grid.size:
        t0, t1, c, d = _density_segments(m)
        if t0.size:
            tm = 0.5 * (t0 + t1)
            half = 0.5 * (t1 - t0)
            with np.errstate(invalid="ignore"):
                L = np.log((zz - t0) / (zz - t1))
            exact = d * L + (c + d * zz) * (1.0 / (zz - t0) - 1.0 / (zz - t1))
            quad = np.zeros_like(exact)
            for u, wgt in zip(_GL_NODES, _GL_WEIGHTS):
                tk = tm + half * u
                quad -= wgt * (c + d * tk) / (zz - tk) ** 2
            quad *= half
            far = 2.0 * half < _FAR_RATIO * np.abs(zz - tm)
            val += np.sum(np.where(far, quad, exact), axis=-1)
    return val if val.shape else complex(val)


def as_evaluator(source):
    """Normalize a transform source to a (G, G') pair of callables.

    Accepts a Measure, an idlaws.FamilySpec, or an explicit (G, G') pair.
    """
    if isinstance(source, Measure):
        return (lambda z: measure_cauchy(source, z),
                lambda z: measure_cauchy_prime(source, z))
    if isinstance(source, tuple) and len(source) == 2 and callable(source[0]):
        return source
    from . import idlaws

    if isinstance(source, idlaws.FamilySpec):
        return idlaws.family_transform(source)
    raise TypeError(f"cannot interpret {source!r} as a transform source")


def cauchy(source, z):
    """Cauchy transform at z in the upper half plane."""
    z = require_upper(z)
    G, _ = as_evaluator(source)
    return G(z)


def reciprocal_cauchy(source, z):
    """F(z) = 1/G(z); maps the upper half plane into itself with Im F >= Im z."""
    z = require_upper(z)
    G, _ = as_evaluator(source)
    g = np.asarray(G(z))
    if np.any(g == 0):
        raise CauchyVanishes("Cauchy transform vanished in the upper half plane")
    f = 1.0 / g
    if np.any(f.imag < z.imag - 1e-8):
        raise CauchyVanishes("reciprocal transform left the Nevanlinna class; "
                             "source is not a probability measure")
    return f if f.shape else complex(f)


def reciprocal_pair(source):
    """(F, F') callables for a source, built from (G, G')."""
    G, Gp = as_evaluator(source)

    def F(z):
        return 1.0 / G(z)

    def Fp(z):
        g = G(z)
        return -Gp(z) / (g * g)

    return F, Fp


def c1_index(source) -> float:
    """c1 = Im(1/G(i)) - 1; zero exactly for a single Dirac atom."""
    f = reciprocal_cauchy(source, 1j)
    return float(np.imag(f)) - 1.0


def newton_invert(F, Fp, target: complex, seed: complex,
                  tol: float = 1e-10, max_iter: int = 200) -> complex:
    """Solve F(w) = target for w in the upper half plane by damped Newton.

    Divergence is reported, never silently replaced by a fallback value.
    """
    w = complex(seed)
    if w.imag <= 0:
        w = complex(w.real, 1e-3)
    scale = max(1.0, abs(target))
    r = F(w) - target
    for _ in range(max_iter):
        if abs(r) < tol * scale:
            return w
        dF = Fp(w)
        if dF == 0:
            raise InversionDiverged("Newton derivative vanished", last_iterate=w)
        step = r / dF
        lam = 1.0
        for _ in range(60):
            w_new = w - lam * step
            if w_new.imag > 0:
                r_new = F(w_new) - target
                if abs(r_new) < abs(r):
                    break
            lam *= 0.5
        else:
            raise InversionDiverged("Newton step stalled", last_iterate=w)
        w, r = w_new, r_new
    if abs(r) < tol * scale:
        return w
    raise InversionDiverged(f"Newton did not converge (residual {abs(r):.3e})",
                            last_iterate=w)


def voiculescu_from(F, Fp, z: complex, seed=None) -> complex:
    """phi(z) = F^(-1)(z) - z via verified Newton inversion of F."""
    z = complex(z)
    if z.imag <= 0:
        raise NotUpperHalfPlane("evaluation point must have Im z > 0")
    w = newton_invert(F, Fp, z, z if seed is None else seed)
    return w - z


def voiculescu(source, z: complex) -> complex:
    """Voiculescu transform of a measure at an admissible point z."""
    F, Fp = reciprocal_pair(source)
    phi = voiculescu_from(F, Fp, z)
    if phi.imag > 1e-8:
        raise InversionDiverged(
            f"inverse landed off the Voiculescu branch (Im phi = {phi.imag:.3e})",
            last_iterate=phi + z)
    return phi


def nevanlinna_sigma(m: Measure, grid_points: int = 2001,
                     eta_schedule=(0.04, 0.02, 0.01)) -> Measure:
    """Representing measure sigma of F(z) = z + int sigma(du)/(u-z).

    Total mass equals the variance m_2 (the input must be centered).  For
    purely atomic inputs sigma is computed exactly from the partial-fraction
    structure of F; otherwise by Stieltjes inversion of z - F(z).
    """
    if abs(m.moment(1)) > 1e-9:
        raise NotCentered("nevanlinna_sigma requires a centered measure")
    if m.is_atomic():
        return _atomic_sigma(m)
    lo = float(m.grid[0]) if m.grid.size else 0.0
    hi = float(m.grid[-1]) if m.grid.size else 0.0
    if m.atom_positions.size:
        lo = min(lo, float(m.atom_positions.min()))
        hi = max(hi, float(m.atom_positions.max()))
    xs = np.linspace(lo - 1.0, hi + 1.0, grid_points)
    eta1, eta2 = eta_schedule[-2], eta_schedule[-1]
    F, _ = reciprocal_pair(m)

    def dens_at(eta):
        z = xs + 1j * eta
        g = z - F(z)          # Cauchy transform of sigma
        return np.maximum(-g.imag / np.pi, 0.0)

    d1, d2 = dens_at(eta1), dens_at(eta2)
    dens = np.maximum((eta1 * d2 - eta2 * d1) / (eta1 - eta2), 0.0)
    return Measure(grid=xs, density=dens)


def _atomic_sigma(m: Measure) -> Measure:
    pos, wts = m.atom_positions, m.atom_weights
    if pos.size == 1:
        return Measure()
    # G = P/Q with Q = prod (z - x_i); sigma sits at the zeros of P
    Q = np.poly(pos)
    P = np.zeros(pos.size, dtype=float)
    for i in range(pos.size):
        P = P + wts[i] * np.poly(np.delete(pos, i))
    roots = np.roots(P)
    roots = np.sort(roots.real)
    Pp = np.polyder(P)
    weights = -np.polyval(Q, roots) / np.polyval(Pp, roots)
    keep = weights > 0
    return Measure(atom_positions=roots[keep], atom_weights=weights[keep])
