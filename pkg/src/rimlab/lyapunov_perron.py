"""Spectral-gap certificate and the backward fixed-point construction.

The graph of the invariant manifold over the first n modes is obtained as
the fixed point of an integral operator acting on trajectories defined on
a backward window.  On the space of histories xi(t), t <= 0, weighted by
e^{mu t} in the D(A^alpha) norm, the operator

    (T xi)(t) = e^{-At} x
                - int_t^0      e^{-A(t-s)} P [F(xi(s) + z(s)) + g(s + tau)] ds
                + int_{-T_b}^t e^{-A(t-s)} Q [F(xi(s) + z(s)) + g(s + tau)] ds

contracts with the certified factor k whenever the spectral gap condition

    lambda_{n+1} - lambda_n >= (2 L / k) (lambda_{n+1}^a + lambda_n^a
                               + c_a (lambda_{n+1} - lambda_n)^a)

holds, where c_a = a^a Gamma(1-a) for a > 0 and c_0 = 0.  The decay weight
is mu = lambda_n + (2 L / k) lambda_n^a, strictly between the two
eigenvalues when L > 0, and the tracking contraction factor is
delta = k + k/(2 - 2k), below one exactly when k < 1/2.

Discretisation: both integrals use the kernel-exact cell rule shared with
the time integrator (nonlinearity frozen at left nodes, forcing cells in
closed form), so a fixed point of the discrete operator is exactly a
discrete flow trajectory; the infinite past is truncated at -T_b, whose
tail is exponentially small in (lambda_{n+1} - mu) T_b.  Both recursions
are first-order filters and are evaluated per mode.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .dynamics import Nonlinearity
from .errors import (
    CertificateError,
    ContractionViolationError,
    DimensionMismatchError,
    DomainError,
    GridAlignmentError,
    ParameterError,
    ValidationError,
)
from .forcing import ForcingSignal, cell_convolution, shift_forcing, temperedness_integral
from .randomness import OUProcess
from .spectral import Spectrum

__all__ = [
    "c_alpha_constant",
    "GapCertificate",
    "gap_margin",
    "check_gap",
    "scan_gap",
    "backward_horizon",
    "BackwardTrajectory",
    "LPContext",
    "lp_apply",
    "solve_fixed_point",
    "manifold_point",
    "tilde_manifold_point",
    "ManifoldChart",
    "build_chart",
]

# Tolerated excess over the certified Lipschitz bound of the chart map.
LIPSCHITZ_SLACK = 0.05


def c_alpha_constant(alpha: float) -> float:
    """The singular-kernel constant alpha^alpha * Gamma(1 - alpha); zero at 0."""
    if not (0.0 <= alpha < 1.0):
        raise DomainError("constant defined for alpha in [0, 1)")
    if alpha == 0.0:
        return 0.0
    return alpha**alpha * math.gamma(1.0 - alpha)


@dataclass(frozen=True)
class GapCertificate:
    """Witness that the gap condition holds at index n, plus derived constants."""

    n: int
    lipschitz: float
    k: float
    alpha: float
    c_alpha: float
    mu: float
    delta: float
    lambda_n: float
    lambda_np1: float
    margin: float

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "lipschitz": self.lipschitz,
            "k": self.k,
            "alpha": self.alpha,
            "c_alpha": self.c_alpha,
            "mu": self.mu,
            "delta": self.delta,
            "lambda_n": self.lambda_n,
            "lambda_np1": self.lambda_np1,
            "margin": self.margin,
        }


def _gap_parts(s: Spectrum, lipschitz: float, k: float, n: int):
    if not (0.0 < k < 1.0):
        raise ParameterError(f"contraction parameter k={k} must lie in (0, 1)")
    if lipschitz < 0.0:
        raise ParameterError("Lipschitz constant must be nonnegative")
    if not (1 <= n < s.size):
        raise ParameterError(f"gap index n={n} must satisfy 1 <= n < {s.size}")
    lam_n = float(s.lambdas[n - 1])
    lam_np1 = float(s.lambdas[n])
    gap = lam_np1 - lam_n
    ca = c_alpha_constant(s.alpha)
    required = (2.0 * lipschitz / k) * (
        lam_np1**s.alpha + lam_n**s.alpha + ca * gap**s.alpha
    )
    return lam_n, lam_np1, gap, ca, required


def gap_margin(s: Spectrum, lipschitz: float, k: float, n: int) -> float:
    """Gap minus the required separation; nonnegative means the index passes."""
    _, _, gap, _, required = _gap_parts(s, lipschitz, k, n)
    return gap - required


def check_gap(s: Spectrum, lipschitz: float, k: float, n: int) -> GapCertificate:
    """Validate the gap condition at index n and derive (mu, delta, c_alpha)."""
    lam_n, lam_np1, gap, ca, required = _gap_parts(s, lipschitz, k, n)
    margin = gap - required
    if gap <= 0.0:
        raise CertificateError(f"no spectral gap at n={n}: repeated eigenvalue", margin)
    if margin < 0.0:
        raise CertificateError(
            f"gap condition fails at n={n}: gap {gap:g} < required {required:g} "
            f"(margin {margin:g})",
            margin,
        )
    mu = lam_n + (2.0 * lipschitz / k) * lam_n**s.alpha
    if mu > lam_np1:
        raise CertificateError(f"decay weight mu={mu:g} escapes ({lam_n:g}, {lam_np1:g})", margin)
    delta = k + k / (2.0 - 2.0 * k)
    return GapCertificate(
        n=n,
        lipschitz=lipschitz,
        k=k,
        alpha=s.alpha,
        c_alpha=ca,
        mu=mu,
        delta=delta,
        lambda_n=lam_n,
        lambda_np1=lam_np1,
        margin=margin,
    )


def scan_gap(s: Spectrum, lipschitz: float, k: float) -> list[dict]:
    """Evaluate the gap condition at every admissible index."""
    rows = []
    for n in range(1, s.size):
        lam_n, lam_np1, gap, _, required = _gap_parts(s, lipschitz, k, n)
        margin = gap - required
        passed = margin >= 0.0 and gap > 0.0
        row = {
            "n": n,
            "gap": gap,
            "required": required,
            "margin": margin,
            "passed": bool(passed),
        }
        if passed:
            cert = check_gap(s, lipschitz, k, n)
            row["mu"] = cert.mu
            row["delta"] = cert.delta
        rows.append(row)
    return rows


def backward_horizon(cert: GapCertificate, tol: float) -> float:
    """Horizon making both truncation tails at most tol/10.

    The dropped far-past tail of the off-graph integral decays like
    e^{-(lambda_{n+1} - mu) T}; when the nonlinearity is active the
    resolved-mode integrand additionally carries e^{-(mu - lambda_n) T}.
    """
    if tol <= 0.0:
        raise ParameterError("tolerance must be positive")
    target = math.log(10.0 / tol)
    t1 = target / (cert.lambda_np1 - cert.mu)
    t2 = target / (cert.mu - cert.lambda_n) if cert.lipschitz > 0.0 else 0.0
    return max(t1, t2)


@dataclass(frozen=True)
class BackwardTrajectory:
    """Candidate history on the backward window, weighted by e^{mu t}."""

    times: np.ndarray
    values: np.ndarray
    mu: float
    spectrum: Spectrum = field(repr=False)

    def s_norm(self) -> float:
        return weighted_sup_norm(self.times, self.values, self.mu, self.spectrum)

    @property
    def final(self) -> np.ndarray:
        """Value at time 0 (the graph point x + m(x))."""
        return self.values[-1]


def weighted_sup_norm(times, values, mu: float, s: Spectrum) -> float:
    """max over nodes of e^{mu t} ||A^alpha v(t)||."""
    wts = s.weights_alpha()
    norms = np.linalg.norm(values * wts, axis=-1)
    return float(np.max(np.exp(mu * np.asarray(times)) * norms))


class LPContext:
    """Precomputed discretisation of the backward fixed-point operator.

    Bundles the problem data (spectrum, certificate, nonlinearity, forcing
    translated by tau, OU driver) with everything that does not change
    between operator applications: the node set, the OU window, the exact
    forcing cells and the per-mode filter coefficients.
    """

    def __init__(
        self,
        spectrum: Spectrum,
        cert: GapCertificate,
        nonlinearity: Nonlinearity,
        forcing: ForcingSignal,
        ou: OUProcess,
        tau: float = 0.0,
        t_back: float | None = None,
        tol: float = 1e-6,
        seed: int | None = None,
        debug_selfmap: bool = False,
    ):
        if cert.n >= spectrum.size:
            raise DimensionMismatchError("certificate index exceeds the truncation")
        self.spectrum = spectrum
        self.cert = cert
        self.nonlinearity = nonlinearity
        self.forcing = forcing
        self.ou = ou
        self.tau = float(tau)
        self.tol = float(tol)
        self.seed = seed
        self.debug_selfmap = debug_selfmap

        self.h = ou.grid.h
        if t_back is None:
            t_back = backward_horizon(cert, tol)
        self.n_cells = max(int(math.ceil(t_back / self.h - 1e-9)), 2)
        self.t_back = self.n_cells * self.h
        if cert.lambda_n * self.t_back > 500.0:
            raise ParameterError(
                "backward horizon too long for the resolved modes "
                f"(lambda_n * t_back = {cert.lambda_n * self.t_back:g} > 500)"
            )
        lo = ou.grid.offset(-self.t_back)
        hi = ou.grid.offset(0.0)
        self.times = np.arange(ou.grid.index(-self.t_back), 1) * self.h
        self.z = ou.values[lo : hi + 1]

        lam = spectrum.lambdas
        self.damp = np.exp(-lam * self.h)
        self.grow = np.exp(lam * self.h)
        self.w1 = -np.expm1(-lam * self.h) / lam
        self.p_mask = np.zeros(spectrum.size, dtype=bool)
        self.p_mask[: cert.n] = True
        self.q_mask = ~self.p_mask
        self.wts_alpha = spectrum.weights_alpha()
        self.wmu = np.exp(cert.mu * self.times)
        self.gcells = cell_convolution(
            shift_forcing(forcing, self.tau), spectrum, self.times[:-1], self.h
        )
        # Per-P-mode backward flow e^{-lambda t} on the window (t <= 0).
        self.p_flow = np.exp(-np.outer(self.times, lam[self.p_mask]))
        self.ratio_slack = 5.0 * self.h * cert.lambda_np1
        self.z_s_norm = weighted_sup_norm(self.times, self.z, cert.mu, spectrum)
        self.g_past_integral = temperedness_integral(forcing, spectrum, tau=self.tau)

    # ---- helpers --------------------------------------------------------

    def s_norm(self, values: np.ndarray) -> float:
        norms = np.linalg.norm(values * self.wts_alpha, axis=-1)
        return float(np.max(self.wmu * norms))

    def initial_guess(self, x: np.ndarray) -> BackwardTrajectory:
        """Backward linear flow of the base point (exact for F=0, g=0)."""
        x = self.spectrum.check_state(x)
        values = np.zeros((self.times.size, self.spectrum.size))
        values[:, self.p_mask] = self.p_flow * x[self.p_mask]
        return BackwardTrajectory(self.times, values, self.cert.mu, self.spectrum)

    def project_p(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros_like(np.asarray(v, dtype=float))
        out[..., self.p_mask] = np.asarray(v, dtype=float)[..., self.p_mask]
        return out

    def project_q(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros_like(np.asarray(v, dtype=float))
        out[..., self.q_mask] = np.asarray(v, dtype=float)[..., self.q_mask]
        return out

    def norm_alpha(self, v: np.ndarray) -> float:
        return float(np.linalg.norm(np.asarray(v, dtype=float) * self.wts_alpha, axis=-1))

    def z_at_zero(self) -> np.ndarray:
        return self.z[-1]


def lp_apply(xi: BackwardTrajectory, x: np.ndarray, ctx: LPContext) -> BackwardTrajectory:
    """One application of the backward integral operator at every node."""
    if xi.values.shape != (ctx.times.size, ctx.spectrum.size):
        raise GridAlignmentError("trajectory nodes do not match the context window")
    x = ctx.spectrum.check_state(x)
    fw = ctx.nonlinearity.apply(xi.values + ctx.z, ctx.spectrum)
    u = ctx.w1 * fw[:-1] + ctx.gcells  # per-cell increments, shape (M, N)
    m = u.shape[0]
    out = np.zeros_like(xi.values)
    for j in np.nonzero(ctx.q_mask)[0]:
        out[1:, j] = lfilter([1.0], [1.0, -ctx.damp[j]], u[:, j])
    for col, j in enumerate(np.nonzero(ctx.p_mask)[0]):
        a = ctx.grow[j]
        rev = lfilter([a], [1.0, -a], u[::-1, j])
        tail = np.zeros(m + 1)
        tail[:m] = rev[::-1]
        out[:, j] = ctx.p_flow[:, col] * x[j] - tail
    result = BackwardTrajectory(ctx.times, out, ctx.cert.mu, ctx.spectrum)
    if ctx.debug_selfmap:
        _check_selfmap_bound(xi, x, result, ctx)
    return result


def _check_selfmap_bound(xi, x, result, ctx):
    lhs = result.s_norm()
    shifted = BackwardTrajectory(ctx.times, xi.values + ctx.z, ctx.cert.mu, ctx.spectrum)
    rhs = (
        ctx.cert.k * shifted.s_norm()
        + ctx.norm_alpha(ctx.project_p(x))
        + ctx.g_past_integral
    )
    slack = 1.0 + 10.0 * ctx.h * ctx.cert.lambda_np1
    if lhs > rhs * slack + 1e-12:
        raise ValidationError(
            f"self-map bound violated: {lhs:g} > {rhs:g} (slack factor {slack:g})"
        )


def solve_fixed_point(
    x: np.ndarray, ctx: LPContext, tol: float | None = None
) -> tuple[BackwardTrajectory, int]:
    """Picard iteration of the backward operator to S-norm accuracy tol.

    Stops when consecutive iterates differ by at most (1-k) tol, which
    bounds the distance to the fixed point by tol.  Raises
    ContractionViolationError when measured ratios exceed the certified
    factor beyond the quadrature slack, or when the a-priori iteration cap
    is exceeded.
    """
    tol = ctx.tol if tol is None else float(tol)
    if tol <= 0.0:
        raise ParameterError("tolerance must be positive")
    k = ctx.cert.k
    thresh = (1.0 - k) * tol
    xi = ctx.initial_guess(x)
    cap = None
    d_prev = None
    iterations = 0
    while True:
        xi_new = lp_apply(xi, x, ctx)
        iterations += 1
        d = ctx.s_norm(xi_new.values - xi.values)
        if d <= thresh:
            return xi_new, iterations
        if cap is None:
            # budget from the slack-adjusted ratio, so a contraction running
            # exactly at the quadrature allowance is not misreported
            rate = min(k + ctx.ratio_slack, 0.999)
            cap = math.ceil(math.log(thresh / d) / math.log(rate)) + 1
        if d_prev is not None:
            ratio = d / d_prev
            if ratio >= 1.0:
                raise ContractionViolationError(
                    f"iterate distances stopped decreasing (ratio {ratio:g}); "
                    f"certified k={k:g} is empirically exceeded"
                )
            if ratio > k + ctx.ratio_slack:
                raise ContractionViolationError(
                    f"measured contraction ratio {ratio:g} exceeds "
                    f"k + slack = {k + ctx.ratio_slack:g}"
                )
        if iterations > cap:
            raise ContractionViolationError(
                f"fixed point not reached within the {cap}-iteration budget"
            )
        d_prev = d
        xi = xi_new


def solve_with_residual(x: np.ndarray, ctx: LPContext, tol: float | None = None):
    """Fixed point plus its measured operator residual (one extra apply)."""
    xi, iterations = solve_fixed_point(x, ctx, tol)
    residual = ctx.s_norm(lp_apply(xi, x, ctx).values - xi.values)
    return xi, iterations, residual


def manifold_point(x: np.ndarray, ctx: LPContext, tol: float | None = None) -> np.ndarray:
    """Off-graph part of the fixed point at time zero: the graph value m(x)."""
    xi, _ = solve_fixed_point(x, ctx, tol)
    return ctx.project_q(xi.final)


def tilde_manifold_point(x: np.ndarray, ctx: LPContext, tol: float | None = None) -> np.ndarray:
    """Graph value of the original-variable manifold, offset by the OU state."""
    z0 = ctx.z_at_zero()
    base = ctx.project_p(np.asarray(x, dtype=float) - z0)
    return ctx.project_q(z0) + manifold_point(base, ctx, tol)


@dataclass(frozen=True)
class ManifoldChart:
    """Sampled graph of the manifold over a grid of resolved-mode points."""

    tau: float
    seed: int | None
    x_grid: np.ndarray
    values: np.ndarray
    residuals: np.ndarray
    lipschitz: float
    cert: GapCertificate
    tol: float
    t_back: float

    def __post_init__(self):
        if np.any(self.residuals > self.tol * (1.0 + 1e-9)):
            raise ValidationError(
                f"chart residual {float(np.max(self.residuals)):g} exceeds tol {self.tol:g}"
            )
        bound = 1.0 / (1.0 - self.cert.k) + LIPSCHITZ_SLACK
        if self.lipschitz > bound:
            raise ValidationError(
                f"empirical chart Lipschitz constant {self.lipschitz:g} exceeds {bound:g}"
            )

    @property
    def points(self) -> np.ndarray:
        """Full graph points x + m(x)."""
        return self.x_grid + self.values


def build_chart(
    x_grid: np.ndarray,
    ctx: LPContext,
    tol: float | None = None,
    threads: int = 1,
) -> ManifoldChart:
    """Evaluate the graph map over a grid of base points.

    Records per-point fixed-point residuals and the empirical Lipschitz
    constant over all grid pairs.
    """
    x_grid = np.atleast_2d(np.asarray(x_grid, dtype=float))
    if x_grid.shape[0] < 1:
        raise DomainError("chart grid must contain at least one point")
    x_grid = np.array([ctx.project_p(x) for x in x_grid])

    def one(x):
        xi, _, residual = solve_with_residual(x, ctx, tol)
        return ctx.project_q(xi.final), residual

    if threads > 1 and x_grid.shape[0] > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, x_grid))
    else:
        results = [one(x) for x in x_grid]
    values = np.array([r[0] for r in results])
    residuals = np.array([r[1] for r in results])

    lip = 0.0
    k_pts = x_grid.shape[0]
    for i in range(k_pts):
        for j in range(i + 1, k_pts):
            dx = ctx.norm_alpha(x_grid[i] - x_grid[j])
            if dx > 1e-14:
                lip = max(lip, ctx.norm_alpha(values[i] - values[j]) / dx)

    return ManifoldChart(
        tau=ctx.tau,
        seed=ctx.seed,
        x_grid=x_grid,
        values=values,
        residuals=residuals,
        lipschitz=lip,
        cert=ctx.cert,
        tol=ctx.tol if tol is None else float(tol),
        t_back=ctx.t_back,
    )
