"""Time stepping (implicit Euler / BDF2), Picard-Newton nonlinear solves,
sparse direct linear algebra and pressure gauge handling."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .forms import (
    Parts,
    apply_strong_constraints,
    assemble_jacobian,
    assemble_residual,
    strong_constraints,
    workspace,
)
from .mesh import BCTag, Mesh

__all__ = [
    "TimeScheme",
    "SolveConfig",
    "NewtonDivergenceError",
    "SingularSystemError",
    "solve_linear",
    "apply_gauge",
    "newton_solve",
    "step",
    "transient_run",
    "solve_stationary",
    "needs_pressure_gauge",
]


@dataclass(frozen=True)
class TimeScheme:
    kind: str = "bdf2"   # "be" | "bdf2"
    d_t: float = np.inf

    def __post_init__(self):
        if self.kind not in ("be", "bdf2"):
            raise ValueError(f"unknown time scheme {self.kind!r}")


@dataclass
class SolveConfig:
    newton_tol: float = 1e-8
    newton_max: int = 25
    linear_tol: float = 1e-10
    gauge: str = "none"           # none | zero_mean_pressure
    line_search: bool = True
    verbose: bool = False


class NewtonDivergenceError(RuntimeError):
    def __init__(self, msg, residual_history):
        super().__init__(f"{msg}; residual history {residual_history}")
        self.residual_history = residual_history


class SingularSystemError(RuntimeError):
    pass


def solve_linear(A, b, scfg: SolveConfig):
    """Sparse direct solve with a residual check."""
    with warnings.catch_warnings():
        warnings.simplefilter("error", spla.MatrixRankWarning)
        try:
            x = spla.spsolve(A.tocsc(), b)
        except spla.MatrixRankWarning as exc:
            raise SingularSystemError(
                "singular linear system; if the mesh has no outflow or "
                "characteristic boundary, set gauge=zero_mean_pressure"
            ) from exc
    if not np.all(np.isfinite(x)):
        raise SingularSystemError(
            "linear solve produced non-finite values; if the mesh has no "
            "outflow or characteristic boundary, set gauge=zero_mean_pressure")
    nb = np.linalg.norm(b)
    if nb > 0:
        rel = np.linalg.norm(A @ x - b) / nb
        if rel > max(scfg.linear_tol, 1e-8):
            raise SingularSystemError(
                f"linear solve did not converge: rel residual {rel:.2e}; if the "
                "mesh has no outflow or characteristic boundary, set "
                "gauge=zero_mean_pressure")
    return x


def pressure_mass_vector(mesh: Mesh):
    """m with m_i = int N_i dx on pressure dofs, 0 on velocity dofs."""
    ws = workspace(mesh)
    mloc = np.einsum("mq,qa->ma", ws.wdet, ws.N)
    m = np.zeros(3 * mesh.n_nodes)
    np.add.at(m, 3 * mesh.cells + 2, mloc)
    return m


def needs_pressure_gauge(mesh: Mesh, cfg) -> bool:
    """True when no boundary term anchors the pressure constant."""
    tags = mesh.tags_present()
    if BCTag.CHARACTERISTIC in tags or BCTag.OUTFLOW in tags:
        return False
    return True


def apply_gauge(u, mesh: Mesh):
    """Shift pressure to zero mean; velocity untouched."""
    m = pressure_mass_vector(mesh)
    area = mesh.cell_areas().sum()
    shift = (m @ u) / area
    out = u.copy()
    out.reshape(-1, 3)[:, 2] -= shift
    return out


def newton_solve(u0, mesh, cfg, data, scfg: SolveConfig, *, t=0.0, history=None,
                 constraints=None, r_scale=None):
    """Newton iteration with Picard-frozen coefficients re-evaluated per iterate.

    Convergence: |R| <= newton_tol * max(|R(u0)|, r_scale).  r_scale anchors
    warm starts to a problem-sized residual (stationary drivers pass |R(0)|).
    Returns (u, info dict).  Raises NewtonDivergenceError / SingularSystemError.
    """
    u = u0.copy()
    gauge = scfg.gauge == "zero_mean_pressure"
    m = pressure_mass_vector(mesh) if gauge else None

    def residual_raw(uu):
        return assemble_residual(uu, mesh, cfg, data, t=t, history=history)

    def constrained_norm(R_raw, uu):
        if constraints is None:
            return np.linalg.norm(R_raw)
        Rc, _ = apply_strong_constraints(R_raw, None, uu, constraints)
        return np.linalg.norm(Rc)

    hist = []
    R = residual_raw(u)
    r0 = constrained_norm(R, u)
    hist.append(r0)
    if not np.isfinite(r0):
        raise NewtonDivergenceError("non-finite initial residual", hist)
    target = scfg.newton_tol * max(r0, r_scale or 0.0)
    # absolute floor: zero data from zero state converges immediately
    floor = 1e-14 * max(1.0, np.linalg.norm(u))
    if r0 <= max(floor, target if r_scale else 0.0):
        return u, {"iterations": 0, "residuals": hist}

    prev_du = None
    for it in range(scfg.newton_max):
        J = assemble_jacobian(u, mesh, cfg, data, t=t, history=history)
        Rs = R
        if constraints is not None:
            Rs, J = apply_strong_constraints(R, J, u, constraints)
        if it <= 2 and r_scale is not None and np.linalg.norm(u) > 0:
            # backward-error scale: cancellation-free magnitude of J u
            Jabs = J.copy()
            Jabs.data = np.abs(Jabs.data)
            op_scale = float(np.linalg.norm(Jabs @ np.abs(u)))
            target = max(target, scfg.newton_tol * op_scale)
        if gauge:
            K = sp.bmat([[J, m[:, None]], [m[None, :], None]], format="csc")
            rhs = np.concatenate([-Rs, [-(m @ u)]])
            sol = solve_linear(K, rhs, scfg)
            du = sol[:-1]
        else:
            du = solve_linear(J, -Rs, scfg)
        # Aitken extrapolation of the slow linear mode left by the Picard
        # freezing: successive updates aligned with contraction ratio r are
        # amplified towards the fixed point by 1/(1-r)
        if prev_du is not None:
            npv = np.linalg.norm(prev_du)
            nd = np.linalg.norm(du)
            if npv > 0 and nd > 0:
                cos = float(du @ prev_du) / (nd * npv)
                r_est = nd / npv
                if cos > 0.8 and 0.3 < r_est < 0.98:
                    du = du / (1.0 - min(cos * r_est, 0.95))
        prev_du = du
        # backtracking line search on the constrained residual norm
        lam, rn = 1.0, None
        for _ in range(9 if scfg.line_search else 1):
            u_try = u + lam * du
            R_try = residual_raw(u_try)
            rn = constrained_norm(R_try, u_try)
            if np.isfinite(rn) and rn <= (1.0 - 1e-4 * lam) * hist[-1]:
                break
            lam *= 0.5
        else:
            u_try = u + lam * du
            R_try = residual_raw(u_try)
            rn = constrained_norm(R_try, u_try)
        u, R = u_try, R_try
        hist.append(rn)
        if scfg.verbose:
            print(f"  newton {it + 1}: |R| = {rn:.3e}")
        if not np.isfinite(rn):
            raise NewtonDivergenceError("residual diverged", hist)
        if rn <= target or rn <= floor:
            return u, {"iterations": it + 1, "residuals": hist}
    raise NewtonDivergenceError(
        f"no convergence in {scfg.newton_max} iterations", hist)


def step(history, t_new, mesh, cfg, data, scfg: SolveConfig, constraints=None):
    """One implicit step; history = [u^n] (BE) or [u^n, u^{n-1}] (BDF2)."""
    u, info = newton_solve(history[0], mesh, cfg, data, scfg, t=t_new,
                           history=history, constraints=constraints)
    if scfg.gauge == "zero_mean_pressure":
        u = apply_gauge(u, mesh)
    return u, info


def transient_run(u0, mesh, cfg, data, scheme: TimeScheme, scfg: SolveConfig,
                  t_end, t0=0.0, callback=None, constraints=None):
    """March to t_end; BDF2 starts with one implicit-Euler step."""
    cfg = cfg.with_(d_t=scheme.d_t)
    u = u0.copy()
    prev = None
    t = t0
    nstep = 0
    while t < t_end - 1e-12 * max(1.0, t_end):
        t = min(t + scheme.d_t, t_end)
        if scheme.kind == "bdf2" and prev is not None:
            hist = [u, prev]
        else:
            hist = [u]
        u_new, info = step(hist, t, mesh, cfg, data, scfg, constraints=constraints)
        prev, u = u, u_new
        nstep += 1
        if callback is not None:
            callback(t, u, prev, info)
    return u


def march_to_steady(mesh, cfg, data, scfg: SolveConfig, d_t, u0=None, t=0.0,
                    max_steps=400, state_tol=1e-7, constraints=None):
    """Backward-Euler marching until the state stops changing.

    Robust fallback for stationary states that plain Newton cannot reach
    (each implicit step is mass-dominated and well-conditioned).
    """
    cfg_dt = cfg.with_(d_t=d_t)
    u = np.zeros(3 * mesh.n_nodes) if u0 is None else u0.copy()
    for n in range(max_steps):
        u_new, info = step([u], t, mesh, cfg_dt, data, scfg, constraints=constraints)
        delta = np.linalg.norm(u_new - u)
        scale = max(np.linalg.norm(u_new), 1e-30)
        u = u_new
        if delta <= state_tol * scale:
            return u, {"steps": n + 1, "state_change": delta / scale}
    return u, {"steps": max_steps, "state_change": delta / scale}


def solve_stationary(mesh, cfg, data, scfg: SolveConfig, u0=None, t=0.0,
                     constraints=None, continuation_dt0=None, continuation_steps=10):
    """Stationary solve with pseudo-time continuation.

    Newton from u0 is attempted first; on divergence, backward-Euler steps
    with geometrically growing d_t precede a final stationary Newton.

    cfg.d_t only feeds theta here (the mass term is off since history=None);
    with d_t=inf the c_dt term drops entirely.
    """
    cfg_st = cfg
    u = np.zeros(3 * mesh.n_nodes) if u0 is None else u0.copy()
    # residual scale of the problem: data terms evaluated at the zero state
    R0 = assemble_residual(np.zeros_like(u), mesh, cfg_st, data, t=t)
    r_scale = float(np.linalg.norm(R0))
    if not np.isfinite(r_scale):  # theta degenerates at u=0 for stationary Euler
        r_scale = 0.0
    try:
        u_st, info = newton_solve(u, mesh, cfg_st, data, scfg, t=t,
                                  constraints=constraints, r_scale=r_scale)
        if scfg.gauge == "zero_mean_pressure":
            u_st = apply_gauge(u_st, mesh)
        return u_st, info
    except NewtonDivergenceError:
        pass
    dt = continuation_dt0
    if dt is None:
        dt = 0.05 * float(np.median(mesh.d_K)) * mesh.n_cells ** 0.25
    total_iters = 0
    for k in range(continuation_steps):
        cfg_dt = cfg.with_(d_t=dt)
        try:
            u, info = step([u], t, mesh, cfg_dt, data, scfg, constraints=constraints)
            total_iters += info["iterations"]
        except NewtonDivergenceError:
            dt *= 0.25
            continue
        dt *= 2.0
    u_st, info = newton_solve(u, mesh, cfg_st, data, scfg, t=t,
                              constraints=constraints, r_scale=r_scale)
    if scfg.gauge == "zero_mean_pressure":
        u_st = apply_gauge(u_st, mesh)
    info = dict(info)
    info["continuation_iterations"] = total_iters
    return u_st, info
