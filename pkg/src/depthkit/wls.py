"""Edge-preserving weighted-least-squares refinement of disparity maps.

Minimizes

    sum_p w_p (u_p - g_p)^2 + lam * sum_p (a_x,p (Dx u)_p^2 + a_y,p (Dy u)_p^2)

with data weight w_p = 1 on valid disparities and 0 on holes (the smoothness
term inpaints them), and guide affinities a = 1 / (|grad guide|^alpha + eps).
Guide gradients are forward differences measured in 8-bit intensity levels.
The minimizer solves the sparse SPD system (W + lam * L) u = W g where
L = Dx^T Ax Dx + Dy^T Ay Dy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .depthmap import DISP_SCALE, DisparityMap


class WlsSolveError(RuntimeError):
    """The linear solve did not reach the requested relative residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class WlsParams:
    lam: float = 8000.0
    alpha: float = 1.3
    eps: float = 1e-4
    solver_tol: float = 1e-6
    max_iters: int = 2000
    solver: str = "direct"

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.alpha <= 0 or self.eps <= 0:
            raise ValueError("alpha and eps must be > 0")
        if self.solver not in ("direct", "cg"):
            raise ValueError(f"solver must be 'direct' or 'cg', got {self.solver!r}")


def guide_affinities(guide: np.ndarray, alpha: float, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Horizontal (H, W-1) and vertical (H-1, W) affinities from a [0, 1] guide."""
    g = np.asarray(guide, dtype=np.float64) * 255.0
    gx = np.abs(np.diff(g, axis=1))
    gy = np.abs(np.diff(g, axis=0))
    return 1.0 / (gx**alpha + eps), 1.0 / (gy**alpha + eps)


def _difference_ops(H: int, W: int):
    """Forward-difference operators on row-major flattened (H, W) images."""
    dx1 = sp.diags([-np.ones(W - 1), np.ones(W - 1)], [0, 1], shape=(W - 1, W))
    dy1 = sp.diags([-np.ones(H - 1), np.ones(H - 1)], [0, 1], shape=(H - 1, H))
    Dx = sp.kron(sp.identity(H), dx1, format="csr")
    Dy = sp.kron(dy1, sp.identity(W), format="csr")
    return Dx, Dy


def weighted_laplacian(ax: np.ndarray, ay: np.ndarray) -> sp.csr_matrix:
    H = ax.shape[0]
    W = ay.shape[1]
    Dx, Dy = _difference_ops(H, W)
    return (Dx.T @ sp.diags(ax.ravel()) @ Dx + Dy.T @ sp.diags(ay.ravel()) @ Dy).tocsr()


def wls_loss(u, g, data_weight, ax, ay, lam) -> float:
    u = np.asarray(u, dtype=float)
    return float(
        np.sum(data_weight * (u - g) ** 2)
        + lam * (np.sum(ax * np.diff(u, axis=1) ** 2) + np.sum(ay * np.diff(u, axis=0) ** 2))
    )


def wls_system(g, data_weight, ax, ay, lam):
    """Return (matrix, rhs) of the normal equations."""
    L = weighted_laplacian(ax, ay)
    w = np.asarray(data_weight, dtype=float).ravel()
    A = (sp.diags(w) + lam * L).tocsc()
    return A, w * np.asarray(g, dtype=float).ravel()


def relative_residual(A, u, b) -> float:
    nb = np.linalg.norm(b)
    r = np.linalg.norm(A @ u.ravel() - b)
    return float(r / nb) if nb > 0 else float(r)


def wls_solve(
    g: np.ndarray,
    data_weight: np.ndarray,
    ax: np.ndarray,
    ay: np.ndarray,
    lam: float,
    tol: float = 1e-6,
    max_iters: int = 2000,
    solver: str = "direct",
) -> np.ndarray:
    """Minimize the WLS loss for explicit weights; returns u with g's shape."""
    g = np.asarray(g, dtype=float)
    if lam == 0:
        return g.copy()
    A, b = wls_system(g, data_weight, ax, ay, lam)
    if solver == "direct":
        u = spla.spsolve(A, b)
    else:
        diag = A.diagonal()
        precond = sp.diags(1.0 / diag)
        u, info = spla.cg(A, b, x0=g.ravel(), rtol=tol, atol=0.0, maxiter=max_iters, M=precond)
        if info != 0:
            raise WlsSolveError(f"CG stopped after {max_iters} iterations", relative_residual(A, u, b))
    res = relative_residual(A, u, b)
    if not res <= tol:
        raise WlsSolveError("solve missed the residual target", res)
    return u.reshape(g.shape)


def wls_filter(g: DisparityMap, guide: np.ndarray, params: WlsParams) -> DisparityMap:
    """Refine a disparity map with the guide image's edges; output stays 1/16 px fixed point.

    Holes in ``g`` get data weight 0 and are filled by the smoothness term.
    """
    guide = np.asarray(guide, dtype=np.float64)
    if guide.shape != g.shape:
        raise ValueError(f"guide {guide.shape} and disparity {g.shape} differ in size")
    if params.lam == 0:
        return DisparityMap(g.raw.copy(), g.min_disparity, g.num_disparities)
    valid = g.valid
    if not valid.any():
        return DisparityMap(g.raw.copy(), g.min_disparity, g.num_disparities)

    values = np.where(valid, g.raw.astype(np.float64) / DISP_SCALE, 0.0)
    ax, ay = guide_affinities(guide, params.alpha, params.eps)
    u = wls_solve(values, valid.astype(float), ax, ay, params.lam, params.solver_tol, params.max_iters, params.solver)
    return DisparityMap.from_float(u, g.min_disparity, g.num_disparities)
