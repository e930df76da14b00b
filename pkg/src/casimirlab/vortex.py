"""The 2D vortex hierarchy: one, two and three advected fields.

Level 1 is Eulerian vortex dynamics: state omega, operator J1 = [omega, .],
Hamiltonian

    H_E(omega) = -1/2 int omega lap^{-1}(omega) d^2x,

whose flow is d(omega)/dt + V . grad(omega) = 0 with the velocity
V = (dy(phi), -dx(phi)) of the stream function phi = -lap^{-1} omega.

Level 2 appends a flux function psi (operator rows [omega,.] [psi,.] ;
[psi,.] 0).  With

    H_RMHD(omega, psi) = -1/2 int [ omega lap^{-1}(omega) + psi lap(psi) ] d^2x

this is the standard reduced-MHD pair: omega is driven by [psi, -lap(psi)]
(the Lorentz force of the current -lap psi) and psi is advected.  If the
Hamiltonian does not involve psi, psi is a phantom: it is advected by the
flow but the omega dynamics is unchanged bit for bit, because its back
reaction enters only through the bracket with an exactly zero gradient.

Level 3 appends a second advected field psi2, with the analogous operator.

Casimir families (profile functions are user-supplied smooth maps with
analytic derivatives):

    generalized enstrophy   int f(omega)          level 1
    cross helicity          int omega g(psi)      level 2
    flux integral           int f(psi)            levels 2, 3
    flux-pair integral      int h(psi * psi2)     level 3
    second-flux integral    int f(psi2)           level 3

Sign convention: grad H_E = -lap^{-1}(omega) = phi, so the level-1 flow is
[omega, phi] = -V . grad(omega).  This is pinned by the shear-equilibrium
and Lorentz-drive tests; every other sign in the module follows from it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .field_core import (
    Field2D,
    Grid2D,
    bracket2d,
    integrate,
    invert_laplacian,
    l2norm,
    laplacian,
    random_band_limited_2d,
)
from .poisson import Functional, PoissonOperator, State, StateError, hamiltonian_rhs

_KINDS = {1: "vortex1", 2: "vortex2", 3: "vortex3"}


def state_i(omega: Field2D) -> State:
    return State("vortex1", (omega,))


def state_ii(omega: Field2D, psi: Field2D) -> State:
    return State("vortex2", (omega, psi))


def state_iii(omega: Field2D, psi: Field2D, psi2: Field2D) -> State:
    return State("vortex3", (omega, psi, psi2))


def stream_function(omega: Field2D) -> Field2D:
    """phi with omega = -lap(phi), zero-mean gauge."""
    return invert_laplacian(-omega)


# ---------------------------------------------------------------------------
# Poisson operators
# ---------------------------------------------------------------------------


def apply_j1(omega: Field2D, g_omega: Field2D) -> Field2D:
    return bracket2d(omega, g_omega)


def apply_j2(z: State, g: State) -> State:
    omega, psi = z.parts
    g_omega, g_psi = g.parts
    out1 = bracket2d(omega, g_omega) + bracket2d(psi, g_psi)
    out2 = bracket2d(psi, g_omega)
    return State("vortex2", (out1, out2))


def apply_j3(z: State, g: State) -> State:
    omega, psi, psi2 = z.parts
    g_omega, g_psi, g_psi2 = g.parts
    out1 = bracket2d(omega, g_omega) + bracket2d(psi, g_psi) + bracket2d(psi2, g_psi2)
    out2 = bracket2d(psi, g_omega)
    out3 = bracket2d(psi2, g_omega)
    return State("vortex3", (out1, out2, out3))


def vortex_operator(level: int) -> PoissonOperator:
    if level == 1:
        return PoissonOperator(
            "J1", "vortex1", lambda z, g: State("vortex1", (apply_j1(z.parts[0], g.parts[0]),))
        )
    if level == 2:
        return PoissonOperator("J2", "vortex2", apply_j2)
    if level == 3:
        return PoissonOperator("J3", "vortex3", apply_j3)
    raise ValueError(f"unknown hierarchy level {level}")


# ---------------------------------------------------------------------------
# Hamiltonians
# ---------------------------------------------------------------------------


def euler_energy(level: int = 1) -> Functional:
    """H_E = -1/2 int omega lap^{-1}(omega); gradient (-lap^{-1} omega, 0, ...).

    On levels 2 and 3 the extra gradient components are exact zero fields,
    which is what makes the extra fields phantoms under this Hamiltonian.
    """
    kind = _KINDS[level]

    def value(z: State) -> float:
        omega = z.parts[0]
        return -0.5 * integrate(omega * invert_laplacian(omega))

    def gradient(z: State) -> State:
        omega = z.parts[0]
        g1 = -1.0 * invert_laplacian(omega)
        zero = Field2D.zeros(omega.grid)
        return State(kind, (g1,) + (zero,) * (level - 1))

    return Functional("euler_energy", value, gradient)


def rmhd_energy(level: int = 2) -> Functional:
    """H_RMHD = -1/2 int [omega lap^{-1}(omega) + psi lap(psi)]."""
    if level not in (2, 3):
        raise ValueError("rmhd_energy needs a flux function (level 2 or 3)")
    kind = _KINDS[level]

    def value(z: State) -> float:
        omega, psi = z.parts[0], z.parts[1]
        return -0.5 * (
            integrate(omega * invert_laplacian(omega)) + integrate(psi * laplacian(psi))
        )

    def gradient(z: State) -> State:
        omega, psi = z.parts[0], z.parts[1]
        g = (-1.0 * invert_laplacian(omega), -1.0 * laplacian(psi))
        if level == 3:
            g = g + (Field2D.zeros(omega.grid),)
        return State(kind, g)

    return Functional("rmhd_energy", value, gradient)


def vortex_rhs(level: int, H: Functional) -> Callable[[State], State]:
    """dz/dt = J(z) grad H(z) for the requested hierarchy level."""
    return hamiltonian_rhs(vortex_operator(level), H)


# ---------------------------------------------------------------------------
# Casimir catalog
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Profile:
    """Scalar profile s -> f(s) with analytic derivative."""

    label: str
    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]


PROFILES = {
    "identity": Profile("identity", lambda s: s, lambda s: np.ones_like(s)),
    "square": Profile("square", lambda s: s**2, lambda s: 2.0 * s),
    "cube": Profile("cube", lambda s: s**3, lambda s: 3.0 * s**2),
    "quartic": Profile("quartic", lambda s: s**4, lambda s: 4.0 * s**3),
    "sin": Profile("sin", np.sin, np.cos),
    "cosh": Profile("cosh", np.cosh, np.sinh),
}


def poly_profile(coeffs, label: str | None = None) -> Profile:
    """Polynomial profile sum c_k s^k with analytic derivative."""
    c = np.asarray(coeffs, dtype=float)
    dc = c[1:] * np.arange(1, c.size)
    lab = label or "poly" + "[" + ",".join(f"{v:g}" for v in c) + "]"
    return Profile(
        lab,
        lambda s: np.polynomial.polynomial.polyval(s, c),
        lambda s: np.polynomial.polynomial.polyval(s, dc),
    )


# family -> (default level, minimum level at which it is a Casimir)
CASIMIR_FAMILIES = {
    "enstrophy": 1,
    "cross_helicity": 2,
    "flux": 2,
    "flux_pair": 3,
    "flux2": 3,
}


@dataclass(frozen=True)
class CasimirSpec:
    """A Casimir family plus its profile; level may widen where legal.

    'enstrophy' on level >= 2 and 'flux' on level 3 are valid functionals
    but not Casimirs there; they are used exactly that way by the
    non-conservation witnesses.
    """

    family: str
    profile: Profile
    level: int | None = None


def _apply(profile: Profile, f: Field2D) -> Field2D:
    return Field2D(f.grid, profile.f(f.values))


def _apply_d(profile: Profile, f: Field2D) -> Field2D:
    return Field2D(f.grid, profile.df(f.values))


def make_casimir(spec: CasimirSpec) -> Functional:
    if spec.family not in CASIMIR_FAMILIES:
        raise ValueError(f"unknown Casimir family {spec.family!r}")
    level = spec.level if spec.level is not None else CASIMIR_FAMILIES[spec.family]
    if level < CASIMIR_FAMILIES[spec.family]:
        raise ValueError(f"{spec.family} needs at least level {CASIMIR_FAMILIES[spec.family]}")
    kind = _KINDS[level]
    p = spec.profile
    label = f"{spec.family}[{p.label}]"

    def zero_like(z):
        return Field2D.zeros(z.parts[0].grid)

    if spec.family == "enstrophy":

        def value(z: State) -> float:
            return integrate(_apply(p, z.parts[0]))

        def gradient(z: State) -> State:
            g = (_apply_d(p, z.parts[0]),) + (zero_like(z),) * (level - 1)
            return State(kind, g)

    elif spec.family == "cross_helicity":

        def value(z: State) -> float:
            omega, psi = z.parts[0], z.parts[1]
            return integrate(omega * _apply(p, psi))

        def gradient(z: State) -> State:
            omega, psi = z.parts[0], z.parts[1]
            g = (_apply(p, psi), omega * _apply_d(p, psi))
            if level == 3:
                g = g + (zero_like(z),)
            return State(kind, g)

    elif spec.family == "flux":

        def value(z: State) -> float:
            return integrate(_apply(p, z.parts[1]))

        def gradient(z: State) -> State:
            g = (zero_like(z), _apply_d(p, z.parts[1]))
            if level == 3:
                g = g + (zero_like(z),)
            return State(kind, g)

    elif spec.family == "flux_pair":

        def value(z: State) -> float:
            psi, psi2 = z.parts[1], z.parts[2]
            return integrate(Field2D(psi.grid, p.f(psi.values * psi2.values)))

        def gradient(z: State) -> State:
            psi, psi2 = z.parts[1], z.parts[2]
            dh = p.df(psi.values * psi2.values)
            return State(
                kind,
                (
                    zero_like(z),
                    Field2D(psi.grid, psi2.values * dh),
                    Field2D(psi.grid, psi.values * dh),
                ),
            )

    else:  # flux2

        def value(z: State) -> float:
            return integrate(_apply(p, z.parts[2]))

        def gradient(z: State) -> State:
            return State(kind, (zero_like(z), zero_like(z), _apply_d(p, z.parts[2])))

    return Functional(label, value, gradient)


# ---------------------------------------------------------------------------
# kernel states and singular-leaf diagnostics
# ---------------------------------------------------------------------------


def make_kernel_state(zeta: Field2D, xi: Profile, eta: Profile) -> State:
    """Level-2 state (omega, psi) = (xi(zeta), eta(zeta)).

    Both fields are functions of one scalar, so [omega, psi] vanishes by the
    chain rule; for nonmonotonic xi no enstrophy profile can reproduce the
    cross-helicity gradient g(psi), which is the Casimir-deficit situation.
    """
    return state_ii(_apply(xi, zeta), _apply(eta, zeta))


def singular_leaf_indicator(psi: Field2D, tol: float = 1e-20) -> tuple[float, bool]:
    """(||psi||^2, on-leaf flag): membership in the single leaf psi = 0.

    The exterior Casimir is the hard step Y(||psi||^2); its only leaf exists
    at the singularity, so the indicator is a strict threshold, not a
    smoothed step.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    n2 = integrate(psi * psi)
    return n2, n2 < tol


def interior_casimir_residual(omega: Field2D, profile: Profile) -> float:
    """Norm of J2 applied at (omega, psi=0) to the gradient (f'(omega), 0).

    Vanishes identically: the generalized enstrophy is a Casimir of the
    subsystem living on the singular leaf, though not of the full level-2
    dynamics.
    """
    z = state_ii(omega, Field2D.zeros(omega.grid))
    g = State("vortex2", (_apply_d(profile, omega), Field2D.zeros(omega.grid)))
    out = apply_j2(z, g)
    return math.hypot(l2norm(out.parts[0]), l2norm(out.parts[1]))


def function_dependence_witness(
    omega: Field2D, psi: Field2D, psi_gap: float = 0.1, omega_tol: float = 1e-9
) -> dict | None:
    """Two grid points with (nearly) equal omega but psi apart by > psi_gap.

    Existence shows psi is not a function of omega, so no profile f(omega)
    has gradient g(psi).  Returns None when no such pair exists.
    """
    if omega.grid != psi.grid:
        raise StateError("witness needs one shared grid")
    w = omega.values.ravel()
    p = psi.values.ravel()
    order = np.argsort(w, kind="stable")
    ws, ps = w[order], p[order]
    close = np.abs(np.diff(ws)) <= omega_tol
    apart = np.abs(np.diff(ps)) > psi_gap
    hits = np.nonzero(close & apart)[0]
    if hits.size == 0:
        return None
    i = int(hits[np.argmax(np.abs(ps[hits + 1] - ps[hits]))])
    return {
        "omega_diff": float(abs(ws[i + 1] - ws[i])),
        "psi_diff": float(abs(ps[i + 1] - ps[i])),
        "flat_indices": (int(order[i]), int(order[i + 1])),
    }


# ---------------------------------------------------------------------------
# seeded initial data
# ---------------------------------------------------------------------------


def random_vortex_state(
    level: int, grid: Grid2D, kmax: int, rng: np.random.Generator, amplitude: float = 1.0
) -> State:
    parts = tuple(
        random_band_limited_2d(grid, kmax, rng, amplitude) for _ in range(level)
    )
    return State(_KINDS[level], parts)


def field_from_modes(grid: Grid2D, modes) -> Field2D:
    """Sum of cosine modes; each mode is (kx, ky, amplitude, phase)."""
    X, Y = grid.meshgrid()
    v = np.zeros(grid.shape)
    for kx, ky, amp, phase in modes:
        v += amp * np.cos(kx * X + ky * Y + phase)
    return Field2D(grid, v)
