"""Numerical certification of the convergence guarantees on quadratics.

The guarantees are stated for class losses that are strongly convex with
Lipschitz gradients and share a minimizer. The family certified here is
L_i(theta) = (a_i/2) ||theta - theta*||^2 + b_i, for which the strong
convexity and Lipschitz constants are both a_i exactly, the minimizer is
shared by construction, and the stationary mixing vector is b / sum(b).
That removes every estimated quantity from the checks: contraction factor,
gradient-norm sandwich and step comparisons are all evaluated in closed
form and compared with tight tolerances.

One ambiguity is preserved from the source material: the step-comparison
precondition subtracts a vector of per-class loss gaps from a scalar
distance. The certifier evaluates it under the documented scalar
interpretation (sum of the per-class gaps) and reports it as information
only; the unambiguous step-distance comparison is what sweeps record.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSize, StepDiverged, ZeroTotalLoss
from .mix import MixingState, mixing_fixed_point, normalize_losses, update_mixing

DIVERGENCE_GUARD = 1e12
ENVELOPE_RTOL = 1e-12


@dataclass(frozen=True)
class QuadraticInstance:
    """k strongly convex quadratic class losses with a shared minimizer."""

    curvatures: np.ndarray  # a_i > 0; both convexity and Lipschitz constants
    offsets: np.ndarray  # b_i > 0; the class losses at the minimizer
    theta_star: np.ndarray
    alpha_tilde: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.curvatures, dtype=np.float64)
        b = np.asarray(self.offsets, dtype=np.float64)
        ts = np.asarray(self.theta_star, dtype=np.float64)
        at = np.asarray(self.alpha_tilde, dtype=np.float64)
        if a.shape != b.shape or a.shape != at.shape:
            raise InvalidSize("curvatures, offsets and alpha_tilde must share length k")
        if (a <= 0).any() or (b <= 0).any():
            raise InvalidSize("curvatures and offsets must be strictly positive")
        if (at < 0).any() or abs(at.sum() - 1.0) > 1e-12:
            raise InvalidSize("alpha_tilde must lie on the simplex")
        for name, arr in (("curvatures", a), ("offsets", b), ("theta_star", ts)):
            if not np.isfinite(arr).all():
                raise InvalidSize(f"{name} must be finite")
        object.__setattr__(self, "curvatures", a)
        object.__setattr__(self, "offsets", b)
        object.__setattr__(self, "theta_star", ts)
        object.__setattr__(self, "alpha_tilde", at)

    @property
    def k(self) -> int:
        return self.curvatures.shape[0]

    @property
    def dim(self) -> int:
        return self.theta_star.shape[0]

    @property
    def mu_star(self) -> float:
        return float(self.curvatures.min())

    @property
    def l_star(self) -> float:
        return float(self.curvatures.max())

    @property
    def alpha_star(self) -> np.ndarray:
        """The stationary mixing vector: losses at the optimum, normalized."""
        return mixing_fixed_point(self.offsets)

    def class_losses(self, theta: np.ndarray) -> np.ndarray:
        diff = theta - self.theta_star
        return self.offsets + 0.5 * self.curvatures * float(diff @ diff)

    def grad(self, theta: np.ndarray, alpha: np.ndarray) -> np.ndarray:
        return float(alpha @ self.curvatures) * (theta - self.theta_star)


def contraction_factor(inst: QuadraticInstance, eta: float) -> float:
    """rho = max(|1 - eta*mu*|, |1 - eta*L*|), the per-step geometric rate."""
    return max(abs(1.0 - eta * inst.mu_star), abs(1.0 - eta * inst.l_star))


@dataclass(frozen=True)
class Prop2Record:
    """One adaptive-vs-fixed step comparison."""

    distance_adaptive: float
    distance_fixed: float
    adaptive_not_worse: bool
    condition_value: float  # scalar-interpretation product; informational
    beta: float | None  # mixing-rate bound when its denominator is positive


@dataclass(frozen=True)
class TheoryReport:
    rho: float
    steps: int
    final_theta_distance: float
    final_alpha_distance: float
    envelope_violations: int
    alpha_contraction_violations: int
    prop2_records: tuple[Prop2Record, ...] = field(default_factory=tuple)


def run_prop1(
    inst: QuadraticInstance,
    eta: float,
    gamma: float,
    steps: int,
    theta0: np.ndarray | None = None,
) -> TheoryReport:
    """Iterate the coupled (theta, alpha) dynamics and check contraction.

    Per step, from the current state: theta moves by a gradient step under
    the current alpha; alpha moves toward the normalized current class
    losses. The geometric envelope is checked per iteration as
    ||theta' - theta*|| <= rho * ||theta - theta*|| within 1e-12 relative,
    and the alpha update is checked to contract toward the normalized
    losses at rate exactly (1 - gamma).
    """
    if not 0.0 < eta < 2.0 / inst.l_star:
        raise InvalidSize(f"eta must lie in (0, {2.0 / inst.l_star}) for contraction")
    if not 0.0 < gamma < 1.0:
        raise InvalidSize("gamma must lie in (0, 1)")
    if steps < 1:
        raise InvalidSize("steps must be >= 1")
    theta = (
        inst.theta_star + 1.0 if theta0 is None else np.asarray(theta0, dtype=np.float64)
    )
    if theta.shape != inst.theta_star.shape:
        raise InvalidSize("theta0 dimension mismatch")
    rho = contraction_factor(inst, eta)
    state = MixingState(inst.alpha_tilde, gamma)
    envelope_violations = 0
    alpha_violations = 0
    dist = float(np.linalg.norm(theta - inst.theta_star))
    for _ in range(steps):
        losses = inst.class_losses(theta)
        normalized = normalize_losses(losses)
        theta = theta - eta * inst.grad(theta, state.alpha)
        if np.linalg.norm(theta) > DIVERGENCE_GUARD:
            raise StepDiverged(f"||theta|| exceeded {DIVERGENCE_GUARD:.0e}")
        new_dist = float(np.linalg.norm(theta - inst.theta_star))
        if new_dist > rho * dist * (1.0 + ENVELOPE_RTOL):
            envelope_violations += 1
        dist = new_dist
        new_state = update_mixing(state, losses)
        if normalized is not None:
            before = np.abs(state.alpha - normalized).max()
            after = np.abs(new_state.alpha - normalized).max()
            # absolute cushion: the update's simplex-drift absorption moves
            # up to ~k ulps of 1.0 into one component
            if after > (1.0 - gamma) * before * (1.0 + ENVELOPE_RTOL) + 1e-13:
                alpha_violations += 1
        state = new_state
    return TheoryReport(
        rho=rho,
        steps=steps,
        final_theta_distance=dist,
        final_alpha_distance=float(np.abs(state.alpha - inst.alpha_star).max()),
        envelope_violations=envelope_violations,
        alpha_contraction_violations=alpha_violations,
    )


def check_corollary1(inst: QuadraticInstance, theta: np.ndarray, alpha: np.ndarray):
    """The gradient-norm sandwich (mu*/2)·d <= ||grad|| <= L*·d.

    Returns (lower_ok, upper_ok, (lower_margin, upper_margin)); margins are
    the signed slack of each inequality.
    """
    d = float(np.linalg.norm(theta - inst.theta_star))
    g = float(np.linalg.norm(inst.grad(theta, alpha)))
    lower = 0.5 * inst.mu_star * d
    upper = inst.l_star * d
    return g >= lower, g <= upper, (g - lower, upper - g)


def check_prop2_step(
    inst: QuadraticInstance,
    theta: np.ndarray,
    eta: float,
    gamma: float,
    prev_losses: np.ndarray,
) -> Prop2Record:
    """Compare one gradient step under adaptive vs fixed mixing.

    The adaptive alpha is one mixing update away from alpha_tilde, driven
    by prev_losses. Both post-step distances to the minimizer are computed
    by the literal vector update. condition_value and beta follow the
    documented scalar interpretation and a derived local Lipschitz bound
    L_alpha = L* * ||theta - theta*||; they are informational only.
    """
    theta = np.asarray(theta, dtype=np.float64)
    alpha_fixed = inst.alpha_tilde
    alpha_adaptive = update_mixing(MixingState(alpha_fixed, gamma), prev_losses).alpha

    step_adaptive = theta - eta * inst.grad(theta, alpha_adaptive)
    step_fixed = theta - eta * inst.grad(theta, alpha_fixed)
    d_adaptive = float(np.linalg.norm(step_adaptive - inst.theta_star))
    d_fixed = float(np.linalg.norm(step_fixed - inst.theta_star))

    dist = float(np.linalg.norm(theta - inst.theta_star))
    gaps = inst.class_losses(theta) - inst.offsets  # per-class loss above optimum
    bracket1 = (0.5 * inst.mu_star - inst.l_star) * dist**2 + float(alpha_fixed @ gaps)
    bracket2 = dist - float(gaps.sum())
    condition_value = bracket1 * bracket2

    normalized_prev = normalize_losses(prev_losses)
    beta = None
    if normalized_prev is not None:
        drive = float(np.linalg.norm(normalized_prev - alpha_fixed))
        l_alpha = inst.l_star * dist
        denom = eta * l_alpha * inst.l_star * drive * bracket2
        if denom > 0.0:
            beta = bracket1 / denom

    return Prop2Record(
        distance_adaptive=d_adaptive,
        distance_fixed=d_fixed,
        adaptive_not_worse=d_adaptive <= d_fixed,
        condition_value=condition_value,
        beta=beta,
    )


def random_instance(
    rng: np.random.Generator,
    k_range: tuple[int, int] = (2, 6),
    dim_range: tuple[int, int] = (2, 8),
    aligned: bool = False,
) -> QuadraticInstance:
    """Draw a random certification instance.

    aligned=True sorts curvatures ascending and ties offsets to them so the
    hardest class (largest loss at any theta) is also the highest-curvature
    class, with uniform alpha_tilde; this is the regime where an adaptive
    step provably cannot lose for eta <= 1/L*.
    """
    k = int(rng.integers(k_range[0], k_range[1] + 1))
    m = int(rng.integers(dim_range[0], dim_range[1] + 1))
    a = rng.uniform(0.1, 5.0, size=k)
    if aligned:
        a = np.sort(a)
        b = a / a.sum()
        alpha = np.full(k, 1.0 / k)
    else:
        b = rng.uniform(0.1, 2.0, size=k)
        alpha = rng.dirichlet(np.ones(k))
    alpha = alpha / alpha.sum()
    return QuadraticInstance(a, b, rng.normal(size=m), alpha)


def corollary_sweep(n_draws: int, seed: int) -> tuple[int, tuple[float, float]]:
    """Random (instance, theta, alpha) draws through the gradient-norm
    sandwich. Returns (violations, smallest observed margins).

    Draws are processed in chunks sharing (k, dim) so the sweep vectorizes;
    every chunk's first draw is additionally routed through check_corollary1
    to pin the vectorized arithmetic to the reference implementation.
    """
    rng = np.random.default_rng(seed)
    chunk = 250
    violations = 0
    min_lower = np.inf
    min_upper = np.inf
    done = 0
    while done < n_draws:
        n = min(chunk, n_draws - done)
        k = int(rng.integers(2, 7))
        m = int(rng.integers(2, 9))
        a = rng.uniform(0.1, 5.0, size=(n, k))
        theta_star = rng.normal(size=(n, m))
        offset = rng.normal(size=(n, m)) * rng.uniform(0.1, 10.0, size=(n, 1))
        alpha = rng.dirichlet(np.ones(k), size=n)
        c = (alpha * a).sum(axis=1)
        dist = np.linalg.norm(offset, axis=1)
        grad_norm = np.linalg.norm(c[:, None] * offset, axis=1)
        lower = 0.5 * a.min(axis=1) * dist
        upper = a.max(axis=1) * dist
        violations += int(((grad_norm < lower) | (grad_norm > upper)).sum())
        min_lower = min(min_lower, float((grad_norm - lower).min()))
        min_upper = min(min_upper, float((upper - grad_norm).min()))
        inst = QuadraticInstance(
            a[0], np.full(k, 0.5), theta_star[0], alpha[0] / alpha[0].sum()
        )
        lo_ok, up_ok, (ml, mu) = check_corollary1(inst, theta_star[0] + offset[0], alpha[0])
        if not (lo_ok and up_ok):
            violations += 1
        min_lower = min(min_lower, ml)
        min_upper = min(min_upper, mu)
        done += n
    return violations, (float(min_lower), float(min_upper))


def prop2_sweep(
    n_instances: int,
    seed: int,
    gamma: float,
    eta: float | None = None,
    aligned: bool = False,
) -> dict:
    """Randomized step comparisons, one previous classical step deep.

    For each instance, theta^{t-1} is drawn at random, prev_losses are its
    class losses, and theta^t is one fixed-mixing gradient step later --
    the standing assumption of the comparison. eta=None draws a safe step
    size per instance (below 1/L* when aligned, below 2/L* otherwise).
    Returns a summary dict with the records attached.
    """
    rng = np.random.default_rng(seed)
    records = []
    for _ in range(n_instances):
        inst = random_instance(rng, aligned=aligned)
        cap = (1.0 if aligned else 2.0) / inst.l_star
        step = eta if eta is not None else float(rng.uniform(0.1, 0.9) * cap)
        theta_prev = inst.theta_star + rng.normal(size=inst.dim) * rng.uniform(0.5, 5.0)
        prev_losses = inst.class_losses(theta_prev)
        theta = theta_prev - step * inst.grad(theta_prev, inst.alpha_tilde)
        records.append(check_prop2_step(inst, theta, step, gamma, prev_losses))
    n = len(records)
    betas = [r.beta for r in records if r.beta is not None]
    return {
        "n_instances": n,
        "gamma": gamma,
        "aligned": aligned,
        "hold_fraction": sum(r.adaptive_not_worse for r in records) / n,
        "condition_positive_fraction": sum(r.condition_value > 0 for r in records) / n,
        "beta_computable_fraction": len(betas) / n,
        "records": records,
    }


def report_to_dict(report: TheoryReport) -> dict:
    """JSON-ready view of a TheoryReport."""
    return {
        "rho": report.rho,
        "steps": report.steps,
        "final_theta_distance": report.final_theta_distance,
        "final_alpha_distance": report.final_alpha_distance,
        "envelope_violations": report.envelope_violations,
        "alpha_contraction_violations": report.alpha_contraction_violations,
        "prop2_records": [
            {
                "distance_adaptive": r.distance_adaptive,
                "distance_fixed": r.distance_fixed,
                "adaptive_not_worse": r.adaptive_not_worse,
                "condition_value": r.condition_value,
                "beta": r.beta,
            }
            for r in report.prop2_records
        ],
    }
