"""Total variation, its subgradient, and projections onto TV-defined sets.

TV here is the anisotropic sum of absolute neighbor differences with
boundary-crossing terms omitted.  Two convex sets are handled: the epigraph
{(w, z) : lam*TV(w) <= z}, projected onto by iterated supporting-hyperplane
projections of the lifted input point, and the ball {w : TV(w) <= epsilon},
projected onto by subgradient (Polyak) steps.

The inner value+subgradient kernel is compiled when the extension built, with
a vectorized numpy fallback; ``KERNEL_BACKEND`` names the one in use.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import nnls

from .errors import InvalidArgumentError
from .spectral import validate_image

try:
    from . import _tvkernels as _kern
except ImportError:  # extension not built on this install
    from . import _tvkernels_np as _kern

KERNEL_BACKEND = _kern.BACKEND

__all__ = [
    "KERNEL_BACKEND",
    "EpigraphProjectionResult",
    "tv",
    "tv_subgradient",
    "tv_and_subgradient",
    "project_epigraph",
    "project_tv_ball",
]


def tv(img):
    """Anisotropic total variation of a 2D image."""
    return tv_and_subgradient(img)[0]


def tv_subgradient(img):
    """A subgradient of tv at img, with sign(0) contributing 0.

    Each difference term |x[a] - x[b]| adds sign(x[a] - x[b]) at a and the
    negative at b, so the entries always sum to zero.
    """
    return tv_and_subgradient(img)[1]


def tv_and_subgradient(img):
    """Both at once; one pass over the image."""
    arr = np.ascontiguousarray(validate_image(img))
    return _kern.tv_and_subgradient(arr)


@dataclass(frozen=True)
class EpigraphProjectionResult:
    """Outcome of the epigraph projection.

    ``z`` is the projected point's own TV (the lifted coordinate on the
    boundary); ``residual`` is the distance from the returned lifted point to
    the supporting hyperplane at the projected image, a convergence
    diagnostic that is 0 for an exact boundary point.
    """

    projected: np.ndarray
    z: float
    iterations_used: int
    residual: float


class _PivotLimit(Exception):
    pass


def _solve_psd(G, b):
    try:
        return cho_solve(cho_factor(G, lower=True, check_finite=False), b, check_finite=False)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(G, b, rcond=None)[0]


def _nnls_grow(gram, atb, k, passive, mu, grad_tol):
    """Lawson-Hanson on the normal equations of an accumulating column set.

    Warm-started: ``passive`` and ``mu`` carry the previous optimum, so after
    one more column is appended the solve usually settles in a few pivots
    instead of restarting from scratch.  Mutates ``passive`` and ``mu`` in
    place.  Raises _PivotLimit on (degenerate, rare) cycling so the caller can
    fall back to a cold solve.
    """
    budget = 3 * k + 30
    while True:
        while True:
            idx = np.flatnonzero(passive[:k])
            if idx.size == 0:
                mu[:k] = 0.0
                break
            s = _solve_psd(gram[np.ix_(idx, idx)], atb[idx])
            if np.all(s > 0.0):
                mu[:k] = 0.0
                mu[idx] = s
                break
            budget -= 1
            if budget < 0:
                raise _PivotLimit
            cur = mu[idx]
            denom = cur - s
            with np.errstate(divide="ignore", invalid="ignore"):
                raw = np.where(denom > 0.0, cur / denom, 0.0)
            ratios = np.where(s <= 0.0, raw, np.inf)
            alpha = float(ratios.min())
            cur = cur + alpha * (s - cur)
            cur[ratios <= alpha + 1e-12 * (alpha + 1.0)] = 0.0
            mu[idx] = cur
            passive[idx[cur <= 0.0]] = False
        grad = atb[:k] - gram[:k, :k] @ mu[:k]
        grad[passive[:k]] = -np.inf
        j = int(np.argmax(grad))
        if grad[j] <= grad_tol:
            return
        budget -= 1
        if budget < 0:
            raise _PivotLimit
        passive[j] = True


def project_epigraph(v, lam=1.0, max_iters=100, tol=1e-5):
    """Project the lifted point [v, 0] onto {(w, z) : lam*TV(w) <= z}.

    Solves min_w ||v - w||^2 + lam^2 TV(w)^2, whose minimizer is the image
    part of that lifted projection.  TV is positively homogeneous, so the
    epigraph is a closed convex cone and every supporting hyperplane passes
    through the lifted origin (Euler's relation gives <g, w> = TV(w) for any
    subgradient g).  Each iteration linearizes lam*TV at the current lifted
    iterate and re-projects [v, 0] orthogonally onto the intersection of all
    supporting hyperplanes collected so far; with the zero offsets that
    projection is a small nonnegative least-squares problem over the cut
    normals.  TV being polyhedral, the loop typically terminates finitely at
    the exact projection, once every active cut has been discovered.

    Stops when the lifted iterate is feasible within tol (its z coordinate
    covers lam*TV of its image part) or barely moved.  On truncation the
    best-objective iterate seen is returned (the input itself is candidate
    zero, so objective(projected) <= objective(v) and TV(projected) <= TV(v)
    hold unconditionally).
    """
    v = validate_image(v)
    if lam <= 0:
        raise InvalidArgumentError("lam must be > 0")
    if tol <= 0:
        raise InvalidArgumentError("tol must be > 0")
    if max_iters < 1:
        raise InvalidArgumentError("max_iters must be >= 1")

    n = v.size
    x0 = np.concatenate([v.ravel(), [0.0]])
    cap = min(max_iters, 64)
    cuts = np.empty((n + 1, cap), order="F")
    gram = np.empty((cap, cap))
    atb = np.empty(cap)
    mu = np.zeros(cap)
    passive = np.zeros(cap, dtype=bool)
    grad_tol = 1e-11 * (1.0 + float(np.linalg.norm(x0)))
    x = x0.copy()

    t_w, g_w = tv_and_subgradient(v)
    best_w, best_t, best_g = v, t_w, g_w
    best_z_lift, best_obj = 0.0, (lam * t_w) ** 2
    iterations = 0

    for k in range(max_iters):
        viol = lam * t_w - x[n]
        if viol <= tol:
            break
        if k == cap:
            cap = min(max_iters, 2 * cap)
            cuts = np.asfortranarray(np.hstack([cuts, np.empty((n + 1, cap - k))]))
            grown = np.empty((cap, cap))
            grown[:k, :k] = gram[:k, :k]
            gram = grown
            atb = np.resize(atb, cap)
            mu = np.resize(mu, cap)
            mu[k:] = 0.0
            passive = np.resize(passive, cap)
            passive[k:] = False
        cuts[:n, k] = lam * g_w.ravel()
        cuts[n, k] = -1.0
        c = cuts[:, k]
        if k:
            gram[k, :k] = c @ cuts[:, :k]
            gram[:k, k] = gram[k, :k]
        gram[k, k] = float(c @ c)
        atb[k] = float(c @ x0)
        grad_tol = max(grad_tol, 1e-11 * np.sqrt(gram[k, k]))
        try:
            _nnls_grow(gram, atb, k + 1, passive, mu, grad_tol)
        except _PivotLimit:
            cold, _ = nnls(cuts[:, : k + 1], x0)
            mu[: k + 1] = cold
            passive[: k + 1] = cold > 0.0
        x_next = x0 - cuts[:, : k + 1] @ mu[: k + 1]
        moved = float(np.linalg.norm(x_next - x))
        x = x_next
        iterations = k + 1

        w = x[:n].reshape(v.shape)
        t_w, g_w = tv_and_subgradient(w)
        obj = float(np.sum((v - w) ** 2)) + (lam * t_w) ** 2
        if obj < best_obj:
            best_w, best_t, best_g = w, t_w, g_w
            best_z_lift, best_obj = float(x[n]), obj
        if moved < tol:
            break

    residual = abs(lam * best_t - best_z_lift) / np.sqrt(
        lam * lam * float(np.sum(best_g * best_g)) + 1.0
    )
    return EpigraphProjectionResult(
        projected=best_w.copy(),
        z=best_t,
        iterations_used=iterations,
        residual=residual,
    )


def project_tv_ball(v, epsilon, max_iters=100, tol=1e-5):
    """Nearest image with TV <= epsilon, by subgradient projection steps.

    Each step projects onto the halfspace {u : TV(w) + <g, u - w> <= epsilon}
    which contains the ball, so iterates approach it monotonically and never
    overshoot below epsilon.  Returns v unchanged when already inside.  The
    epigraph projection exists to remove exactly this epsilon choice.
    """
    v = validate_image(v)
    if epsilon < 0:
        raise InvalidArgumentError("epsilon must be >= 0")
    if tol <= 0:
        raise InvalidArgumentError("tol must be > 0")
    if max_iters < 1:
        raise InvalidArgumentError("max_iters must be >= 1")

    w = v
    for _ in range(max_iters):
        t_w, g = tv_and_subgradient(w)
        if t_w <= epsilon + tol:
            break
        gnorm2 = float(np.sum(g * g))
        if gnorm2 == 0.0:
            break  # constant image: TV is 0, already <= epsilon
        w = w - ((t_w - epsilon) / gnorm2) * g
    return w if w is not v else v.copy()
