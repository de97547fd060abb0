"""Post-processing: power-law and saturation fits, estimate-sharpness ratios,
and audits of the a priori bounds satisfied by every computed flow."""

from dataclasses import dataclass

import numpy as np

from .functionals import enstrophy, lq_norm, simpson_integral
from .spectral import SpectralGrid


@dataclass
class PowerLawFit:
    """y = prefactor * x**exponent, fitted by least squares in log-log space."""

    prefactor: float
    prefactor_stderr: float
    exponent: float
    exponent_stderr: float
    r_squared: float

    def predict(self, x):
        return self.prefactor * np.asarray(x, dtype=float) ** self.exponent


@dataclass
class SaturationFit:
    """y(T) = psi_inf - alpha * exp(-beta*T), fitted by damped Gauss-Newton."""

    psi_inf: float
    psi_stderr: float
    alpha: float
    alpha_stderr: float
    beta: float
    beta_stderr: float
    residual_norm: float
    converged: bool

    def predict(self, t):
        return self.psi_inf - self.alpha * np.exp(-self.beta * np.asarray(t, dtype=float))


def fit_power_law(points) -> PowerLawFit:
    """Least-squares line through (log x, log y); exact on exact power laws."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise ValueError("power-law fit needs at least 2 (x, y) pairs")
    x, y = pts[:, 0], pts[:, 1]
    if np.any(x <= 0.0) or np.any(y <= 0.0):
        raise ValueError("power-law fit requires strictly positive data")
    lx, ly = np.log(x), np.log(y)
    m = lx.size
    design = np.column_stack([np.ones(m), lx])
    coef, *_ = np.linalg.lstsq(design, ly, rcond=None)
    resid = ly - design @ coef
    ssr = float(resid @ resid)
    sst = float(np.sum((ly - ly.mean()) ** 2))
    r_sq = 1.0 if sst == 0.0 else 1.0 - ssr / sst
    if m > 2:
        sigma_sq = ssr / (m - 2)
        cov = sigma_sq * np.linalg.inv(design.T @ design)
        se_int, se_slope = np.sqrt(np.diag(cov))
    else:
        se_int = se_slope = 0.0
    prefactor = float(np.exp(coef[0]))
    return PowerLawFit(
        prefactor=prefactor,
        prefactor_stderr=prefactor * se_int,
        exponent=float(coef[1]),
        exponent_stderr=float(se_slope),
        r_squared=float(r_sq),
    )


def fit_saturation(points, max_iterations: int = 200, tol: float = 1e-12) -> SaturationFit:
    """Nonlinear least squares for the saturation model psi - alpha*exp(-beta*T).

    Levenberg-damped Gauss-Newton from the heuristic start psi = max y,
    alpha = psi - min y, beta = 1/median T.  Non-convergence is flagged, not
    raised.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise ValueError("saturation fit needs at least 3 (T, y) pairs")
    t, y = pts[:, 0], pts[:, 1]

    psi = float(np.max(y))
    alpha = max(psi - float(np.min(y)), 1e-8 * max(abs(psi), 1.0))
    beta = 1.0 / float(np.median(t))
    theta = np.array([psi, alpha, beta])

    def residuals(th):
        return (th[0] - th[1] * np.exp(-th[2] * t)) - y

    lam = 1e-3
    r = residuals(theta)
    cost = float(r @ r)
    converged = False
    for _ in range(max_iterations):
        expo = np.exp(-theta[2] * t)
        jac = np.column_stack([np.ones_like(t), -expo, theta[1] * t * expo])
        jtj = jac.T @ jac
        jtr = jac.T @ r
        step_ok = False
        for _ in range(40):
            try:
                delta = np.linalg.solve(jtj + lam * np.diag(np.diag(jtj) + 1e-30), -jtr)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = theta + delta
            r_trial = residuals(trial)
            cost_trial = float(r_trial @ r_trial)
            if cost_trial <= cost:
                step_ok = True
                break
            lam *= 10.0
        if not step_ok:
            break
        theta, r = trial, r_trial
        lam = max(lam * 0.3, 1e-12)
        if cost - cost_trial <= tol * max(cost, 1e-300) and float(np.abs(delta).max()) <= 1e-10 * (
            1.0 + float(np.abs(theta).max())
        ):
            cost = cost_trial
            converged = True
            break
        cost = cost_trial

    m = t.size
    stderr = np.zeros(3)
    if m > 3:
        expo = np.exp(-theta[2] * t)
        jac = np.column_stack([np.ones_like(t), -expo, theta[1] * t * expo])
        sigma_sq = cost / (m - 3)
        try:
            cov = sigma_sq * np.linalg.inv(jac.T @ jac)
            stderr = np.sqrt(np.maximum(np.diag(cov), 0.0))
        except np.linalg.LinAlgError:
            stderr = np.full(3, np.inf)
    if theta[2] <= 0.0:
        converged = False
    return SaturationFit(
        psi_inf=float(theta[0]),
        psi_stderr=float(stderr[0]),
        alpha=float(theta[1]),
        alpha_stderr=float(stderr[1]),
        beta=float(theta[2]),
        beta_stderr=float(stderr[2]),
        residual_norm=float(np.sqrt(cost)),
        converged=converged,
    )


def xi_ratio(traj, initial_energy: float) -> float:
    """Time integral of ||u||_{L4}^{8/3} divided by the dissipated energy
    2*K0 - ||u(T)||_{L2}^2."""
    times = traj.times_array()
    l4 = traj.l4_norms()
    numerator = simpson_integral(l4 ** (8.0 / 3.0), times[1] - times[0])
    final_l2_sq = 2.0 * traj.energies()[-1]
    denominator = 2.0 * initial_energy - final_l2_sq
    if denominator <= 0.0:
        raise ValueError("no dissipation occurred: denominator is nonpositive")
    return float(numerator / denominator)


def theta_limit(grid: SpectralGrid, u0hat: np.ndarray, nu: float) -> float:
    """Zero-horizon limit of the dissipation-normalized ratio, from the
    initial data alone.

    The denominator is the instantaneous decay rate of ||u||_{L2}^2, i.e.
    2*nu*||grad u||_{L2}^2, which equals 4*nu*E for the half-inclusive
    enstrophy convention used by :func:`nsmax.functionals.enstrophy`.
    """
    ens = enstrophy(grid, u0hat)
    if ens <= 0.0:
        raise ValueError("initial data has zero enstrophy: ratio undefined")
    return float(lq_norm(grid, u0hat, 4.0) ** (8.0 / 3.0) / (4.0 * nu * ens))


def enstrophy_growth_bound(e: np.ndarray, nu: float) -> np.ndarray:
    """Pointwise upper bound 27/(8 pi^4 nu^3) * E^3 on dE/dt."""
    return 27.0 / (8.0 * np.pi**4 * nu**3) * np.asarray(e, dtype=float) ** 3


def enstrophy_envelope(e0: float, t: np.ndarray, nu: float) -> np.ndarray:
    """Finite-time envelope E0 / sqrt(1 - 27/(4 pi^4 nu^3) E0^2 t); inf past
    its blow-up time."""
    t = np.asarray(t, dtype=float)
    arg = 1.0 - 27.0 / (4.0 * np.pi**4 * nu**3) * e0**2 * t
    out = np.full_like(t, np.inf)
    ok = arg > 0.0
    out[ok] = e0 / np.sqrt(arg[ok])
    return out


@dataclass
class EnstrophyAudit:
    times: np.ndarray
    enstrophy: np.ndarray
    growth_rate: np.ndarray
    growth_bound: np.ndarray
    margin: np.ndarray
    envelope: np.ndarray
    within_envelope: bool
    max_enstrophy: float

    @property
    def min_margin(self) -> float:
        return float(self.margin.min())


def audit_enstrophy_series(times, e_values, nu: float) -> EnstrophyAudit:
    """Check the differential and finite-time enstrophy bounds on a sampled
    E(t) series; dE/dt uses centered differences, one-sided at the ends."""
    t = np.asarray(times, dtype=float)
    e = np.asarray(e_values, dtype=float)
    if t.size < 2:
        raise ValueError("audit needs at least 2 samples")
    dedt = np.gradient(e, t)
    bound = enstrophy_growth_bound(e, nu)
    envelope = enstrophy_envelope(e[0], t - t[0], nu)
    return EnstrophyAudit(
        times=t,
        enstrophy=e,
        growth_rate=dedt,
        growth_bound=bound,
        margin=bound - dedt,
        envelope=envelope,
        within_envelope=bool(np.all(e <= envelope * (1.0 + 1e-12))),
        max_enstrophy=float(e.max()),
    )


def audit_enstrophy_bounds(traj, nu: float) -> EnstrophyAudit:
    return audit_enstrophy_series(traj.times_array(), traj.enstrophies(), nu)


def audit_gn_inequality(grid: SpectralGrid, uhat: np.ndarray, p: float) -> float:
    """Empirical interpolation-inequality constant
    ||u||_{L^p} / (||grad u||_{L2}^alpha ||u||_{L2}^{1-alpha}) with
    alpha = 3(p-2)/(2p), valid for 2 <= p <= 6."""
    if not 2.0 <= p <= 6.0:
        raise ValueError(f"exponent p must lie in [2, 6], got {p}")
    l2 = lq_norm(grid, uhat, 2.0)
    if l2 == 0.0:
        raise ValueError("zero field has no interpolation ratio")
    lp = lq_norm(grid, uhat, p)
    alpha = 3.0 * (p - 2.0) / (2.0 * p)
    if alpha == 0.0:
        return float(lp / l2)
    grad_sq = float(
        np.sum(grid.parseval_weight * (2.0 * np.pi) ** 2 * grid.k_sq * np.abs(uhat) ** 2)
    )
    return float(lp / (grad_sq ** (alpha / 2.0) * l2 ** (1.0 - alpha)))


@dataclass
class BlowupReport:
    flagged: bool
    fit: SaturationFit
    integral_values: np.ndarray
    horizons: np.ndarray
    detail: str


def lps_blowup_monitor(horizon_objective_pairs) -> BlowupReport:
    """Heuristic unbounded-growth flag for a family of (T, max objective).

    Works with the un-normalized time integrals y = T * objective.  The data
    is flagged when it accelerates with T (convex growth), or when the
    largest sample exceeds the saturation fit's asymptote by three standard
    errors, or when the saturation fit degenerates.
    """
    pts = np.asarray(list(horizon_objective_pairs), dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise ValueError("monitor needs (T, objective) pairs")
    best = {}
    for t_val, obj in pts:
        best[t_val] = max(best.get(t_val, -np.inf), obj)
    if len(best) < 2:
        raise ValueError("monitor needs at least 2 horizons")
    t = np.array(sorted(best))
    y = t * np.array([best[ti] for ti in t])

    slopes = np.diff(y) / np.diff(t)
    accelerating = slopes.size >= 2 and bool(np.median(np.diff(slopes)) > 0.0)

    if t.size >= 3:
        fit = fit_saturation(np.column_stack([t, y]))
        exceeds = bool(y[-1] > fit.psi_inf + 3.0 * fit.psi_stderr)
        degenerate = not fit.converged
    else:
        fit = SaturationFit(*([np.nan] * 6), residual_norm=np.nan, converged=False)
        exceeds = False
        degenerate = False

    flagged = accelerating or exceeds or degenerate
    detail = (
        f"accelerating={accelerating} exceeds_asymptote={exceeds} degenerate_fit={degenerate}"
    )
    return BlowupReport(flagged=flagged, fit=fit, integral_values=y, horizons=t, detail=detail)
