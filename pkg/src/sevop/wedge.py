"""Diffusion in a space-time wedge, flattened and solved mode by mode.

The model problem is heat flow on the expanding strip 0 < y < t with
Dirichlet data g on y = 0 and flux data h on the moving top.  Flattening
eta = y/t produces, per Fourier mode xi in the periodicized x variable,
the singular one-dimensional family

    A_xi(t) = -xi^2 + (1/t^2) d_yy + (y/t) d_y,

i.e. B = -xi^2, C(t) = d_yy + t y d_y, k = 2, with a Dirichlet row at y = 0
and a one-sided second-order Neumann closure at y = 1.  The boundary data
are absorbed by the explicit multiplier lifts

    R_D(t): cosh(t|xi|(1-y)) / cosh(t|xi|),
    R_N(t): sinh(t|xi| y) / (t|xi| cosh(t|xi|)),

whose hyperbolic ratios are evaluated in shifted-exponential form so that
t|xi| of several hundred stays finite.  The remaining forcing is

    f = [(y/t) d_y - d_t] (R_D g + t R_N h),

evaluated from the closed-form mode expression (the (1-y)sinh term enters
with the sign that the finite-difference oracle d/dt, d/dy of the lifts
confirms).  Each mode is then a singular Cauchy problem solved by the
evolution-operator machinery, and the field is synthesized over modes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from sevop.cauchy import ConvolutionOperator, GridFunction, holder_norm, solve_scp
from sevop.errors import InterpolationOutOfRange
from sevop.evolution import EvolutionGrid, construct_ode, construct_volterra
from sevop.family import SingularFamily
from sevop.linops import DenseOperator

Z_SERIES_CUTOFF = 1e-4


def _safe_ratios(z: float, y: np.ndarray):
    """Overflow-safe cosh(z(1-y))/cosh z, sinh(z(1-y))/cosh z, sinh(zy)/cosh z,
    tanh z for z >= 0."""
    y = np.asarray(y, dtype=float)
    em2z = np.exp(-2.0 * z)
    eyz = np.exp(-z * y)
    ez1y = np.exp(-2.0 * z * (1.0 - y))
    denom = 1.0 + em2z
    cosh_ratio = eyz * (1.0 + ez1y) / denom
    sinh_ratio = eyz * (1.0 - ez1y) / denom
    sinh_y = np.exp(-z * (1.0 - y)) * (1.0 - np.exp(-2.0 * z * y)) / denom
    tanh_z = (1.0 - em2z) / denom
    return cosh_ratio, sinh_ratio, sinh_y, tanh_z


def lift_dirichlet(g_mode: complex, xi: float, t: float, y_grid: np.ndarray) -> np.ndarray:
    """Mode values of the Dirichlet lift R_D(t) g: g_mode cosh(z(1-y))/cosh(z)."""
    if t <= 0:
        raise ValueError("t must be positive")
    y = np.asarray(y_grid, dtype=float)
    z = t * abs(xi)
    if z == 0.0:
        return g_mode * np.ones_like(y)
    cosh_ratio, _, _, _ = _safe_ratios(z, y)
    return g_mode * cosh_ratio


def lift_neumann(h_mode: complex, xi: float, t: float, y_grid: np.ndarray) -> np.ndarray:
    """Mode values of the Neumann lift R_N(t) h: h_mode sinh(z y)/(z cosh z).

    The xi -> 0 limit is h_mode * y; t * (this lift) has y-derivative
    t * h_mode at y = 1, which is the flux boundary condition.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    y = np.asarray(y_grid, dtype=float)
    z = t * abs(xi)
    if z < Z_SERIES_CUTOFF:
        # sinh(zy)/(z cosh z) = y (1 + z^2 (y^2/6 - 1/2) + O(z^4))
        return h_mode * y * (1.0 + z * z * (y * y / 6.0 - 0.5))
    _, _, sinh_y, _ = _safe_ratios(z, y)
    return h_mode * sinh_y / z


def rhs_modes(g_mode: complex, h_mode: complex, xi: float, t: float, y_grid: np.ndarray) -> np.ndarray:
    """Mode values of f = [(y/t) d_y - d_t](R_D g + t R_N h).

    Term by term (z = t|xi|):

        |xi| g [tanh(z) cosh(z(1-y)) - (1-y) sinh(z(1-y))] / cosh(z)
      - h [y cosh(zy) - tanh(z) sinh(zy)] / cosh(z)
      - |xi| g y sinh(z(1-y)) / cosh(z)
      + h y cosh(zy) / cosh(z),

    all ratios in overflow-safe form.  The sign of the (1-y)sinh term is
    fixed by the requirement f(y=0) = 0, which the finite-difference oracle
    on the lifts confirms.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    y = np.asarray(y_grid, dtype=float)
    z = t * abs(xi)
    if z == 0.0:
        return np.zeros_like(y) * (g_mode + h_mode)
    cosh_1y, sinh_1y, sinh_yy, tanh_z = _safe_ratios(z, y)
    # cosh(zy)/cosh z in safe form
    cosh_yy = np.exp(-z * (1.0 - y)) * (1.0 + np.exp(-2.0 * z * y)) / (1.0 + np.exp(-2.0 * z))
    a = abs(xi)
    term_g1 = a * g_mode * (tanh_z * cosh_1y - (1.0 - y) * sinh_1y)
    term_h1 = -h_mode * (y * cosh_yy - tanh_z * sinh_yy)
    term_g2 = -a * g_mode * y * sinh_1y
    term_h2 = h_mode * y * cosh_yy
    return term_g1 + term_h1 + term_g2 + term_h2


def difference_operators(n_y: int):
    """Second-order d_yy and d_y on the homogenized unknowns v_1..v_{n_y-1}.

    y_j = j/n_y; v_0 = 0 is eliminated (Dirichlet) and v_{n_y} by the
    one-sided second-order Neumann closure v' (1) = 0, i.e.
    v_{n_y} = (4 v_{n_y-1} - v_{n_y-2})/3.
    """
    if n_y < 8:
        raise ValueError("n_y must be at least 8")
    h = 1.0 / n_y
    m = n_y - 1
    D2 = np.zeros((m, m))
    D1 = np.zeros((m, m))
    for r in range(m):
        j = r + 1
        if r > 0:
            D2[r, r - 1] = 1.0 / h ** 2
            D1[r, r - 1] = -1.0 / (2 * h)
        D2[r, r] = -2.0 / h ** 2
        if r < m - 1:
            D2[r, r + 1] = 1.0 / h ** 2
            D1[r, r + 1] = 1.0 / (2 * h)
    # Neumann closure in the last row: v_{n_y} = (4 v_{m} - v_{m-1})/3
    D2[m - 1, m - 1] += 4.0 / (3.0 * h ** 2)
    D2[m - 1, m - 2] += -1.0 / (3.0 * h ** 2)
    D1[m - 1, m - 1] += 4.0 / (6.0 * h)
    D1[m - 1, m - 2] += -1.0 / (6.0 * h)
    y_int = (np.arange(m) + 1) * h
    return D2, D1, y_int


@dataclass(frozen=True)
class ModeOperatorFamily:
    """Per-mode singular family -xi^2 + (d_yy + t y d_y)/t^2 with its grid."""

    xi: float
    y_grid: np.ndarray
    family: SingularFamily


def assemble_mode_family(xi: float, n_y: int, T: float = 1.0) -> ModeOperatorFamily:
    """Build the discretized mode family for frequency xi on n_y intervals."""
    D2, D1, y_int = difference_operators(n_y)
    m = n_y - 1
    B = DenseOperator(-xi ** 2 * np.eye(m), label=f"-xi^2 (xi={xi:.3g})")
    C0 = DenseOperator(D2, label="d_yy")
    C1 = DenseOperator(np.diag(y_int) @ D1, label="y d_y")
    fam = SingularFamily(B=B, C_coeffs=(C0, C1), k=2.0, T=T, kind="wedge-mode", label=f"mode{xi:.3g}")
    return ModeOperatorFamily(xi=float(xi), y_grid=np.concatenate([[0.0], y_int, [1.0]]), family=fam)


def extend_to_boundary(v_int: np.ndarray) -> np.ndarray:
    """Append the eliminated boundary values: v(0) = 0, v(1) by the closure."""
    v_int = np.atleast_2d(v_int)
    v0 = np.zeros((v_int.shape[0], 1), dtype=v_int.dtype)
    v1 = ((4.0 * v_int[:, -1] - v_int[:, -2]) / 3.0)[:, None]
    return np.concatenate([v0, v_int, v1], axis=1)


@dataclass
class WedgeProblem:
    """Problem data for the flattened wedge on [-L, L) x [0, 1] x (t_min, T].

    g_coeffs / h_coeffs are complex mode coefficients for m = 0..n_modes
    (negative modes by conjugate symmetry, so the data are real).
    """

    L: float = np.pi
    n_modes: int = 3
    n_y: int = 16
    T: float = 1.0
    t_min: float = 1e-2
    n_t: int = 40
    n_x: int | None = None
    alpha: float = 0.5
    g_coeffs: Sequence[complex] = field(default_factory=lambda: [1.0])
    h_coeffs: Sequence[complex] = field(default_factory=lambda: [0.0])
    method: str = "volterra"
    # probe times get locally uniform +-delta neighbors in the mesh, so the
    # time part of the finite-difference residual is negligible there
    probe_times: Sequence[float] = ()
    probe_delta: float = 2e-3

    def __post_init__(self):
        if self.n_y < 8:
            raise ValueError("n_y must be at least 8")
        if self.t_min <= 0:
            raise ValueError("t_min must be positive")
        g = np.zeros(self.n_modes + 1, dtype=complex)
        h = np.zeros(self.n_modes + 1, dtype=complex)
        g[: len(list(self.g_coeffs))] = np.asarray(list(self.g_coeffs), dtype=complex)
        h[: len(list(self.h_coeffs))] = np.asarray(list(self.h_coeffs), dtype=complex)
        if abs(g[0].imag) > 0 or abs(h[0].imag) > 0:
            raise ValueError("mode-0 coefficients must be real for real data")
        self.g_coeffs = g
        self.h_coeffs = h
        if self.n_x is None:
            self.n_x = max(4 * self.n_modes + 4, 16)

    def xi(self, m: int) -> float:
        return np.pi * m / self.L

    def x_grid(self) -> np.ndarray:
        return -self.L + 2 * self.L * np.arange(self.n_x) / self.n_x

    def g_values(self, x: np.ndarray) -> np.ndarray:
        return _synth_profile(self.g_coeffs, self.L, x)

    def h_values(self, x: np.ndarray) -> np.ndarray:
        return _synth_profile(self.h_coeffs, self.L, x)

    def to_json_dict(self) -> dict:
        return {
            "L": self.L,
            "n_modes": self.n_modes,
            "n_y": self.n_y,
            "T": self.T,
            "t_min": self.t_min,
            "n_t": self.n_t,
            "n_x": self.n_x,
            "alpha": self.alpha,
            "g_coeffs": [[c.real, c.imag] for c in self.g_coeffs],
            "h_coeffs": [[c.real, c.imag] for c in self.h_coeffs],
            "method": self.method,
        }

    @staticmethod
    def from_json_dict(d: dict) -> "WedgeProblem":
        def coeffs(key):
            raw = d.get(key, [0.0])
            return [complex(c[0], c[1]) if isinstance(c, (list, tuple)) else complex(c) for c in raw]

        return WedgeProblem(
            L=float(d.get("L", np.pi)),
            n_modes=int(d.get("n_modes", 3)),
            n_y=int(d.get("n_y", 16)),
            T=float(d.get("T", 1.0)),
            t_min=float(d.get("t_min", 1e-2)),
            n_t=int(d.get("n_t", 40)),
            n_x=d.get("n_x"),
            alpha=float(d.get("alpha", 0.5)),
            g_coeffs=coeffs("g_coeffs"),
            h_coeffs=coeffs("h_coeffs"),
            method=d.get("method", "volterra"),
        )


def _synth_profile(coeffs: np.ndarray, L: float, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.full_like(x, coeffs[0].real)
    for m in range(1, len(coeffs)):
        out = out + 2.0 * (coeffs[m] * np.exp(1j * np.pi * m * x / L)).real
    return out


@dataclass
class WedgeField:
    """Solution field on the flattened tensor grid, plus per-mode data."""

    problem: WedgeProblem
    t_mesh: np.ndarray
    x_grid: np.ndarray
    y_grid: np.ndarray
    u: np.ndarray  # (n_t, n_x, n_y+1), real
    modes: dict
    regularity: dict


def _time_mesh(problem: WedgeProblem) -> np.ndarray:
    r = problem.T / problem.t_min
    mesh = problem.t_min * r ** (np.arange(problem.n_t + 1) / problem.n_t)
    if len(list(problem.probe_times)):
        d = problem.probe_delta * problem.T
        probes = np.concatenate([[t - d, t, t + d] for t in problem.probe_times])
        mesh = np.unique(np.concatenate([mesh, probes]))
        mesh = mesh[(mesh >= problem.t_min) & (mesh <= problem.T)]
        # drop base nodes that nearly collide with probe nodes
        keep = np.concatenate([[True], np.diff(mesh) > 0.05 * d])
        mesh = mesh[keep]
    return mesh


def _scaled_mode_grid(base: EvolutionGrid, fam: SingularFamily, xi: float) -> EvolutionGrid:
    """Exact mode reduction: -xi^2 I commutes with everything, so
    U_xi(t, s) = e^{-xi^2 (t-s)} U_0(t, s)."""
    mesh = base.mesh
    with np.errstate(under="ignore"):
        blocks = {
            (i, j): np.exp(-xi ** 2 * (mesh[i] - mesh[j])) * U for (i, j), U in base.blocks.items()
        }
    return EvolutionGrid(mesh=mesh, blocks=blocks, method=base.method, family_ref=fam)


def solve_wedge(problem: WedgeProblem, theta: float = 0.2, clock_cap: float = 16.0, progress: Callable[[str], None] | None = None) -> WedgeField:
    """Solve the flattened wedge problem end to end.

    Per mode: build the singular family, the evolution grid (volterra by
    default, ode as the oracle alternative), the forcing from the lift
    formula, then v by variation of constants; the mode field is
    v + R_D g + t R_N h, and the x field is synthesized over modes.
    The x part -xi^2 of each mode generator is a multiple of the identity,
    so one base construction at xi = 0 yields every mode grid exactly via
    U_xi = e^{-xi^2 (t-s)} U_0.  Per-mode weighted Hoelder norms of u' and
    A u (the scale the solution theory lives in) are recorded.
    """
    mesh = _time_mesh(problem)
    x = problem.x_grid()
    modes: dict = {}
    alpha = problem.alpha
    n_t = mesh.size
    u = np.zeros((n_t, x.size, problem.n_y + 1))
    regularity = {}
    base_mode = assemble_mode_family(0.0, problem.n_y, T=problem.T)
    if problem.method == "ode":
        base_grid = construct_ode(base_mode.family, mesh, tol=1e-10)
    else:
        base_grid = construct_volterra(base_mode.family, mesh, theta=theta, clock_cap=clock_cap)
    if progress:
        progress(f"base grid built ({problem.method})")
    for m in range(problem.n_modes + 1):
        xi = problem.xi(m)
        gm, hm = problem.g_coeffs[m], problem.h_coeffs[m]
        mode = assemble_mode_family(xi, problem.n_y, T=problem.T)
        fam = mode.family
        y_int = mode.y_grid[1:-1]
        grid = _scaled_mode_grid(base_grid, fam, xi)

        def f_fn(t, gm=gm, hm=hm, xi=xi):
            return rhs_modes(gm, hm, xi, t, y_int)

        fgrid = GridFunction.from_callable(mesh, f_fn)
        v = solve_scp(fam, grid, fgrid)
        v_full = extend_to_boundary(v.values)
        lift = np.stack(
            [lift_dirichlet(gm, xi, float(t), mode.y_grid) + t * lift_neumann(hm, xi, float(t), mode.y_grid) for t in mesh]
        )
        u_mode = v_full + lift

        # regularity diagnostics in the (alpha, beta=alpha) scale
        Au = np.stack([fam.eval_entries(t) @ v.values[i] for i, t in enumerate(mesh)])
        du = Au + fgrid.values
        regularity[m] = {
            "xi": xi,
            "norm_Au": holder_norm(GridFunction(mesh, Au), alpha, alpha).norm,
            "norm_du": holder_norm(GridFunction(mesh, du), alpha, alpha).norm,
            "norm_f": holder_norm(fgrid, alpha, alpha).norm,
        }
        modes[m] = {"f": fgrid, "v": v, "u_mode": u_mode, "xi": xi}
        phase = np.exp(1j * xi * x)
        if m == 0:
            u += u_mode.real[:, None, :]
        else:
            u += 2.0 * (phase[None, :, None] * u_mode[:, None, :]).real
        if progress:
            progress(f"mode {m}: solved")
    imag_max = max(np.abs(modes[m]["u_mode"].imag).max() if problem.n_modes else 0.0 for m in modes)
    return WedgeField(
        problem=problem,
        t_mesh=mesh,
        x_grid=x,
        y_grid=np.linspace(0.0, 1.0, problem.n_y + 1),
        u=u,
        modes=modes,
        regularity={"per_mode": regularity, "mode0_imag_max": float(imag_max)},
    )


def residual_check(field: WedgeField, problem: WedgeProblem | None = None) -> dict:
    """Finite-difference residual of the flattened system on the tensor grid.

    Interior: u_t - u_xx - u_yy/t^2 - (y/t) u_y with second-order nonuniform
    differences in t and centered differences in (x, y).  Boundaries: the
    Dirichlet error at y = 0 and the one-sided flux error at y = 1.
    """
    p = problem or field.problem
    t, x, y = field.t_mesh, field.x_grid, field.y_grid
    u = field.u
    hx = x[1] - x[0]
    hy = y[1] - y[0]
    # time derivative on interior time nodes (nonuniform centered)
    dt0 = (t[1:-1] - t[:-2])[:, None, None]
    dt1 = (t[2:] - t[1:-1])[:, None, None]
    du = (
        -dt1 / (dt0 * (dt0 + dt1)) * u[:-2]
        + (dt1 - dt0) / (dt0 * dt1) * u[1:-1]
        + dt0 / (dt1 * (dt0 + dt1)) * u[2:]
    )
    uxx = (np.roll(u, 1, axis=1) - 2 * u + np.roll(u, -1, axis=1)) / hx ** 2
    uyy = (u[:, :, :-2] - 2 * u[:, :, 1:-1] + u[:, :, 2:]) / hy ** 2
    uy = (u[:, :, 2:] - u[:, :, :-2]) / (2 * hy)
    tt = t[1:-1][:, None, None]
    yy = y[1:-1][None, None, :]
    resid = du[:, :, 1:-1] - uxx[1:-1][:, :, 1:-1] - uyy[1:-1] / tt ** 2 - (yy / tt) * uy[1:-1]
    gx = p.g_values(x)
    hxv = p.h_values(x)
    dirichlet_err = float(np.abs(u[:, :, 0] - gx[None, :]).max())
    # one-sided second-order derivative at y = 1
    dy1 = (3 * u[:, :, -1] - 4 * u[:, :, -2] + u[:, :, -3]) / (2 * hy)
    flux_err = float(np.abs(dy1 - t[:, None] * hxv[None, :]).max())
    out = {
        "interior_max": float(np.abs(resid).max()),
        "interior_rms": float(np.sqrt(np.mean(resid ** 2))),
        "dirichlet_err": dirichlet_err,
        "flux_err": flux_err,
    }
    if len(list(p.probe_times)):
        sel = [int(np.argmin(np.abs(t[1:-1] - tp))) for tp in p.probe_times]
        out["probe_max"] = float(np.abs(resid[sel]).max())
    return out


def pull_back(field: WedgeField, samples: np.ndarray | None = None, rel_step: float = 1e-3) -> dict:
    """Map the flattened field back to wedge coordinates and check the
    original equation.

    Points (t, x, y) with 0 <= y <= t are evaluated as u(t, x, y/t); the
    residual of u_t - u_xx - u_yy = 0 is formed by centered differences in
    the original variables (steps proportional to rel_step), and the flux
    d_y u at the top boundary y = t is compared against h.
    """
    from scipy.interpolate import RegularGridInterpolator

    p = field.problem
    interp = RegularGridInterpolator(
        (field.t_mesh, np.concatenate([field.x_grid, [field.x_grid[0] + 2 * p.L]]), field.y_grid),
        np.concatenate([field.u, field.u[:, :1, :]], axis=1),
        method="cubic" if field.t_mesh.size >= 4 else "linear",
        bounds_error=True,
    )
    t_lo, t_hi = field.t_mesh[0], field.t_mesh[-1]

    def u_orig(t, x, y):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        eta = y / t
        if np.any(eta < -1e-12) or np.any(eta > 1.0 + 1e-12) or np.any(t < t_lo) or np.any(t > t_hi):
            raise InterpolationOutOfRange("sample outside the computed wedge")
        xw = ((x + p.L) % (2 * p.L)) - p.L
        pts = np.stack([t, xw, np.clip(eta, 0.0, 1.0)], axis=-1)
        return interp(pts)

    if samples is None:
        rng = np.random.default_rng(0)
        ts = rng.uniform(0.45 * (t_lo + t_hi), 0.9 * t_hi, 40)
        xs = rng.uniform(-p.L, p.L, 40)
        ys = rng.uniform(0.15, 0.85, 40) * ts
        samples = np.stack([ts, xs, ys], axis=1)

    worst = 0.0
    for (t0, x0, y0) in samples:
        ht = rel_step * t0
        hx = rel_step * p.L
        hy = rel_step * t0
        if y0 - hy < 0 or (y0 + hy) / (t0 - ht) > 1.0:
            continue
        ut = (u_orig(t0 + ht, x0, y0) - u_orig(t0 - ht, x0, y0)) / (2 * ht)
        uxx = (u_orig(t0, x0 + hx, y0) - 2 * u_orig(t0, x0, y0) + u_orig(t0, x0 - hx, y0)) / hx ** 2
        uyy = (u_orig(t0, x0, y0 + hy) - 2 * u_orig(t0, x0, y0) + u_orig(t0, x0, y0 - hy)) / hy ** 2
        worst = max(worst, float(abs(ut - uxx - uyy)))

    # flux at the moving top y = t (one-sided in y)
    flux_worst = 0.0
    xs = np.linspace(-p.L, p.L, 17)[:-1]
    t0 = 0.7 * t_hi
    hy = rel_step * t0
    for x0 in xs:
        dy = (3 * u_orig(t0, x0, t0) - 4 * u_orig(t0, x0, t0 - hy) + u_orig(t0, x0, t0 - 2 * hy)) / (2 * hy)
        flux_worst = max(flux_worst, float(abs(dy - p.h_values(np.array([x0]))[0])))
    # Dirichlet at y = 0
    dir_worst = float(
        np.abs(u_orig(np.full_like(xs, t0), xs, np.zeros_like(xs)) - p.g_values(xs)).max()
    )
    return {
        "interior_residual_max": worst,
        "flux_err": flux_worst,
        "dirichlet_err": dir_worst,
        "n_samples": int(len(samples)),
    }
