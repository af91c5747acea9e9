"""Multi-user sum-rate machinery: rates, the regularized-ZF family and its
far-field closed forms, weighted-MMSE precoding with a power bisection,
conjugate-gradient optimization of the reflection phases on the unit-modulus
manifold, and the discrete sequential position search."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError, SingularMatrixError, DegenerateRetractionError
from .su_opt import SamplingGrid, graph_position_select  # noqa: F401 (re-export convenience)

_TINY = 1e-300
_LN2 = np.log(2.0)


def user_rate(h_rows: np.ndarray, w: np.ndarray, k: int, noise_power: float) -> float:
    """log2(1 + SINR) of user k for stacked cascaded rows (K, N) and W (N, K)."""
    h_rows = np.atleast_2d(np.asarray(h_rows))
    w = np.atleast_2d(np.asarray(w))
    if h_rows.shape[1] != w.shape[0]:
        raise InvalidParameterError("precoder row count does not match antenna count")
    gains = np.abs(h_rows[k] @ w) ** 2
    interference = float(np.sum(gains) - gains[k])
    return float(np.log2(1 + gains[k] / (interference + noise_power)))


def sum_rate(h_rows: np.ndarray, w: np.ndarray, noise_power: float) -> float:
    h_rows = np.atleast_2d(np.asarray(h_rows))
    return float(sum(user_rate(h_rows, w, k, noise_power) for k in range(h_rows.shape[0])))


def rzf(h_rows: np.ndarray, reg: float, powers) -> np.ndarray:
    """Regularized-ZF precoding matrix (N, K); columns carry power p_k.

    reg = 0 is ZF (requires invertible Gram), reg = noise power is MMSE, and
    reg -> infinity approaches the matched-filter direction.
    """
    h_rows = np.atleast_2d(np.asarray(h_rows))
    powers = np.asarray(powers, dtype=float)
    if reg < 0:
        raise InvalidParameterError("regularizer must be >= 0")
    gram = h_rows @ h_rows.conj().T
    a = gram + reg * np.eye(h_rows.shape[0])
    if reg == 0 and np.linalg.cond(gram) > 1e12:
        raise SingularMatrixError("channel Gram matrix is singular; ZF undefined")
    directions = h_rows.conj().T @ np.linalg.inv(a)
    norms = np.linalg.norm(directions, axis=0)
    if np.any(norms == 0):
        raise SingularMatrixError("zero precoding direction")
    return directions / norms * np.sqrt(powers)


def rzf_rate_far_field(q, powers, num_mas: int, noise_power: float) -> np.ndarray:
    """Per-user rates under rank-1 far-field cascades q_k v^H; independent of
    the antenna positions."""
    q = np.asarray(q)
    powers = np.asarray(powers, dtype=float)
    qsq = np.abs(q) ** 2
    other = np.sum(powers) - powers
    return np.log2(1 + num_mas * powers * qsq / (num_mas * qsq * other + noise_power))


def mrt_rate_no_irs(path_gains, responses, powers, noise_power: float) -> np.ndarray:
    """Per-user matched-filter rates for direct far-field LoS channels.

    `responses` is (N, K) with per-user unit-modulus columns; the correlation
    |v_k^H v_i|^2 / N^2 couples users, so these rates do depend on positions.
    """
    beta = np.asarray(path_gains)
    v = np.atleast_2d(np.asarray(responses))
    powers = np.asarray(powers, dtype=float)
    n = v.shape[0]
    corr = np.abs(v.conj().T @ v) ** 2 / n ** 2  # (K, K)
    rates = []
    for k in range(len(beta)):
        interf = float(np.sum(powers * corr[k]) - powers[k] * corr[k, k])
        sig = powers[k] * np.abs(beta[k]) ** 2
        rates.append(np.log2(1 + sig / (np.abs(beta[k]) ** 2 * interf + noise_power)))
    return np.asarray(rates)


def _wmmse_precoder(h_rows, chi, kappa, mu):
    n = h_rows.shape[1]
    a = mu * np.eye(n, dtype=complex)
    a += (h_rows.conj().T * (np.abs(chi) ** 2 * kappa)) @ h_rows
    rhs = h_rows.conj().T * (chi * kappa)
    if mu == 0:
        # a can be rank-deficient (K < N, or a user weight driven to zero);
        # the system stays consistent, so take the minimum-norm solution
        return np.linalg.pinv(a, hermitian=True) @ rhs
    return np.linalg.solve(a, rhs)


def wmmse(h_rows: np.ndarray, w_init: np.ndarray, power: float, noise_power: float,
          tol: float = 1e-6, max_iter: int = 200) -> tuple[np.ndarray, list[float]]:
    """Weighted-MMSE precoding via alternating closed-form updates.

    The dual variable of the power constraint is found by bisection (zero if
    the unconstrained precoder is already feasible). Returns the final W and
    the sum-rate trace, which is non-decreasing.
    """
    h_rows = np.atleast_2d(np.asarray(h_rows))
    if not np.all(np.isfinite(h_rows)):
        raise InvalidParameterError("non-finite channel entries")
    w = np.asarray(w_init, dtype=complex).copy()
    trace = [sum_rate(h_rows, w, noise_power)]
    for _ in range(max_iter):
        hw = h_rows @ w  # (K, K): hw[k, i] = h_k^H w_i
        totals = np.sum(np.abs(hw) ** 2, axis=1) + noise_power
        chi = np.diag(hw) / totals
        kappa = 1.0 / np.real(1.0 - chi.conj() * np.diag(hw))

        def total_power(mu):
            return float(np.sum(np.abs(_wmmse_precoder(h_rows, chi, kappa, mu)) ** 2))

        if total_power(0.0) <= power * (1 + 1e-9):
            mu = 0.0
        else:
            hi = 1.0
            while total_power(hi) > power:
                hi *= 2.0
            lo = 0.0
            for _ in range(200):
                mu = 0.5 * (lo + hi)
                p = total_power(mu)
                if abs(p - power) <= 1e-6 * power:
                    break
                if p > power:
                    lo = mu
                else:
                    hi = mu
            else:
                mu = hi
        w_new = _wmmse_precoder(h_rows, chi, kappa, mu)
        rate = sum_rate(h_rows, w_new, noise_power)
        if rate < trace[-1]:
            # finite bisection tolerance at the fixed point; keep the monotone iterate
            break
        w = w_new
        trace.append(rate)
        if trace[-1] - trace[-2] <= tol * max(abs(trace[-2]), _TINY):
            break
    return w, trace


# ---------------------------------------------------------------------------
# Reflection optimization on the unit-modulus manifold


def interaction_vectors(h_iu: np.ndarray, h_bi: np.ndarray, w: np.ndarray) -> np.ndarray:
    """r[k, i, :] = diag(h_iu_k^H) H w_i, the per-element cascade of precoder i
    seen by user k."""
    h_iu = np.atleast_2d(np.asarray(h_iu))
    hw = np.asarray(h_bi) @ np.asarray(w)  # (M, K)
    return h_iu.conj()[:, None, :] * hw.T[None, :, :]


def neg_sum_rate(phi: np.ndarray, r: np.ndarray, noise_power: float) -> float:
    """Objective minimized on the manifold: negative sum rate in nats.

    The effective link of precoder i at user k is sum_m phi_m r[k,i,m], which
    matches the cascade h_iu^H diag(phi) H w exactly.
    """
    z = np.einsum("m,kim->ki", phi, r)
    p = np.abs(z) ** 2
    total = np.sum(p, axis=1) + noise_power
    interf = total - np.diagonal(p)
    return float(-np.sum(np.log(total) - np.log(interf)))


def euclidean_grad_f2(phi: np.ndarray, r: np.ndarray, noise_power: float) -> np.ndarray:
    """Euclidean (Wirtinger, x2 convention) gradient of `neg_sum_rate`.

    With this scaling the directional derivative along a perturbation d is
    Re{d^H grad}, which is what the finite-difference tests check.
    """
    z = np.einsum("m,kim->ki", phi, r)
    p = np.abs(z) ** 2
    total = np.sum(p, axis=1) + noise_power
    interf = total - np.diagonal(p)
    # d|phi^T r|^2 / d phi* = conj(r) (r^T phi) = conj(r) * z
    per_term = np.conj(r) * z[:, :, None]  # (K, K, M)
    sum_all = np.sum(per_term, axis=1)
    sum_int = sum_all - per_term[np.arange(r.shape[0]), np.arange(r.shape[0])]
    grad = -np.sum(sum_all / total[:, None] - sum_int / interf[:, None], axis=0)
    return 2.0 * grad


def riemannian_project(grad: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Orthogonal projection onto the tangent space at phi."""
    return grad - np.real(grad * np.conj(phi)) * phi


def vector_transport(eta: np.ndarray, phi_next: np.ndarray) -> np.ndarray:
    """Carry a tangent vector to the tangent space at phi_next."""
    return eta - np.real(eta * np.conj(phi_next)) * phi_next


def retract(v: np.ndarray) -> np.ndarray:
    """Entrywise normalization back onto the unit-modulus set."""
    mags = np.abs(v)
    if np.any(mags == 0):
        raise DegenerateRetractionError("zero entry cannot be normalized")
    return v / mags


def _retract_step(phi, step, eta):
    v = phi + step * eta
    mags = np.abs(v)
    zero = mags == 0
    if np.any(zero):
        # measure-zero event: keep the previous phase for the dead entries
        v = np.where(zero, phi, v)
        mags = np.where(zero, 1.0, mags)
    return v / mags


@dataclass
class ManifoldTrace:
    objective: list[float] = field(default_factory=list)
    grad_norm: list[float] = field(default_factory=list)


def manifold_cg(h_iu, h_bi, w, phi_init, noise_power: float, *,
                grad_tol: float = 1e-6, max_iter: int = 500,
                armijo_c: float = 1e-4, backtrack: float = 0.5,
                max_backtracks: int = 30) -> tuple[np.ndarray, ManifoldTrace]:
    """Polak-Ribiere conjugate gradient on the unit-modulus manifold with an
    Armijo line search. The objective (negative sum rate) never increases on
    accepted steps."""
    r = interaction_vectors(h_iu, h_bi, w)
    phi = np.asarray(phi_init, dtype=complex).copy()
    phi = phi / np.abs(phi)

    f = neg_sum_rate(phi, r, noise_power)
    grad = riemannian_project(euclidean_grad_f2(phi, r, noise_power), phi)
    eta = -grad
    trace = ManifoldTrace([f], [float(np.linalg.norm(grad))])

    for _ in range(max_iter):
        gnorm = np.linalg.norm(grad)
        if gnorm <= grad_tol:
            break
        slope = float(np.real(np.vdot(grad, eta)))
        if slope >= 0:  # not a descent direction: restart
            eta = -grad
            slope = -float(gnorm ** 2)
        step = 1.0
        accepted = False
        for _ in range(max_backtracks):
            cand = _retract_step(phi, step, eta)
            f_cand = neg_sum_rate(cand, r, noise_power)
            if f_cand <= f + armijo_c * step * slope:
                accepted = True
                break
            step *= backtrack
        if not accepted:
            break
        phi_new = cand
        grad_new = riemannian_project(euclidean_grad_f2(phi_new, r, noise_power), phi_new)
        grad_prev = vector_transport(grad, phi_new)
        tau = float(np.real(np.vdot(grad_new, grad_new - grad_prev))) / max(gnorm ** 2, _TINY)
        tau = max(0.0, tau)
        eta = -grad_new + tau * vector_transport(eta, phi_new)
        phi, grad, f = phi_new, grad_new, f_cand
        trace.objective.append(f)
        trace.grad_norm.append(float(np.linalg.norm(grad)))
    return phi, trace


# ---------------------------------------------------------------------------
# Discrete position search and the outer alternating loop


def sequential_position_search(cascade_table: np.ndarray, points: np.ndarray,
                               w: np.ndarray, min_spacing: float,
                               init_indices, noise_power: float,
                               sweeps: int = 1) -> list[int]:
    """One-at-a-time grid search of the antenna positions.

    `cascade_table` is (K, L): the cascaded channel seen by each user from an
    antenna at each grid point (for the current reflection). Each antenna in
    turn is moved to the feasible point maximizing the sum rate; an empty
    feasible set keeps the current position. The sum rate never decreases.
    """
    cascade_table = np.atleast_2d(np.asarray(cascade_table))
    points = np.asarray(points)
    indices = list(init_indices)
    num_mas = len(indices)
    for _ in range(sweeps):
        for n in range(num_mas):
            others = [indices[m] for m in range(num_mas) if m != n]
            if others:
                dists = np.linalg.norm(points[:, None, :] - points[others][None, :, :], axis=2)
                feasible = np.where(np.all(dists >= min_spacing - 1e-12, axis=1))[0]
            else:
                feasible = np.arange(len(points))
            if len(feasible) == 0:
                continue
            best_idx = indices[n]
            best_rate = -np.inf
            h = cascade_table[:, indices].copy()
            for cand in feasible:
                h[:, n] = cascade_table[:, cand]
                rate = sum_rate(h, w, noise_power)
                if rate > best_rate + 1e-15:
                    best_rate, best_idx = rate, int(cand)
            indices[n] = best_idx
    return indices


@dataclass
class MuSolution:
    """Outcome of the multi-user alternating loop."""

    w: np.ndarray
    phi: np.ndarray
    positions: np.ndarray
    indices: list[int]
    sum_rate: float
    trace: list[float] = field(default_factory=list)
    iterations: int = 0


def ao_multi_user(h_iu, bs_irs, grid: SamplingGrid, phi_init, init_indices,
                  power: float, noise_power: float, *, min_spacing: float,
                  w_init=None, tol: float = 1e-3, max_outer: int = 50,
                  optimize_phi: bool = True, optimize_positions: bool = True,
                  cg_kwargs: dict | None = None,
                  wmmse_kwargs: dict | None = None) -> MuSolution:
    """Alternate precoding (WMMSE), reflection (manifold CG) and positions
    (sequential grid search); the sum-rate trace is non-decreasing."""
    h_iu = np.atleast_2d(np.asarray(h_iu))
    num_users = h_iu.shape[0]
    phi = np.asarray(phi_init, dtype=complex).copy()
    indices = list(init_indices)
    grid_columns = bs_irs.matrix(grid.points)  # (M, L)
    cg_kwargs = cg_kwargs or {}
    wmmse_kwargs = wmmse_kwargs or {}

    def cascades(phi_cur):
        return (h_iu.conj() * phi_cur) @ grid_columns  # (K, L)

    table = cascades(phi)
    if w_init is None:
        h = table[:, indices]
        dirs = h.conj().T
        norms = np.linalg.norm(dirs, axis=0)
        norms[norms == 0] = 1.0
        w = dirs / norms * np.sqrt(power / num_users)
    else:
        w = np.asarray(w_init, dtype=complex).copy()

    trace = [sum_rate(table[:, indices], w, noise_power)]
    iterations = 0
    for _ in range(max_outer):
        iterations += 1
        h = table[:, indices]
        w, _ = wmmse(h, w, power, noise_power, **wmmse_kwargs)
        if optimize_phi:
            phi, _ = manifold_cg(h_iu, grid_columns[:, indices], w, phi,
                                 noise_power, **cg_kwargs)
            table = cascades(phi)
        if optimize_positions:
            indices = sequential_position_search(table, grid.points, w, min_spacing,
                                                 indices, noise_power)
        rate = sum_rate(table[:, indices], w, noise_power)
        trace.append(rate)
        if abs(trace[-1] - trace[-2]) <= tol * max(abs(trace[-2]), _TINY):
            break
    return MuSolution(w=w, phi=phi, positions=grid.points[indices], indices=indices,
                      sum_rate=trace[-1], trace=trace, iterations=iterations)
