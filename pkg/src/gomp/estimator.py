"""Off-grid frequency estimation.

A simultaneous (multi-snapshot) OMP stage selects on-grid starting
frequencies, and a first-order Taylor refinement then walks each frequency
off the grid: linearize the steering vector around the current estimate,
solve a small least-squares problem for the real step delta, move, refit
the waveform, and keep the update only if the squared residual does not
grow. The accepted-residual history is therefore non-increasing by
construction. For several sources the refinement cycles over them, each
time subtracting the current contributions of all other sources.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .array_model import Dictionary, steering_gradient, steering_vector

_PINV_RTOL = 1e-12


@dataclass(frozen=True)
class GompConfig:
    """Refinement budgets: i_max inner steps per pass, j_max outer passes."""

    i_max: int = 10
    j_max: int = 5

    def __post_init__(self) -> None:
        if self.i_max < 1:
            raise ValueError(f"i_max must be >= 1, got {self.i_max}")
        if self.j_max < 1:
            raise ValueError(f"j_max must be >= 1, got {self.j_max}")


@dataclass(frozen=True)
class EstimationResult:
    """Estimated frequencies and waveforms plus refinement diagnostics.

    residual_history concatenates the accepted squared-residual values of
    every single-source refinement in execution order; histories keeps the
    per-refinement segments (each one non-increasing).
    """

    nu_hat: np.ndarray
    X_hat: np.ndarray
    residual_history: np.ndarray
    histories: tuple
    initial_grid_indices: np.ndarray | None = None

    def __post_init__(self) -> None:
        nu = np.atleast_1d(np.asarray(self.nu_hat, dtype=float))
        x = np.atleast_2d(np.asarray(self.X_hat, dtype=complex))
        if not np.all(np.isfinite(nu)):
            raise ValueError("estimated frequencies must be finite")
        nu.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "nu_hat", nu)
        object.__setattr__(self, "X_hat", x)


def _solve_pinv(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Least-squares solve a^+ b via SVD, reporting rank deficiency.

    Singular values below _PINV_RTOL times the largest are treated as a
    rank deficiency and raised, never silently truncated.
    """
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    if s[0] == 0 or s[-1] <= _PINV_RTOL * s[0]:
        raise np.linalg.LinAlgError(
            f"rank-deficient least-squares system (singular values {s.min():.3e}..{s.max():.3e})"
        )
    return vh.conj().T @ ((u.conj().T @ b) / s[:, None] if b.ndim == 2 else (u.conj().T @ b) / s)


def _phi_matrix(phi) -> np.ndarray:
    return np.asarray(getattr(phi, "phi", phi), dtype=complex)


def omp(y: np.ndarray, psi, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Simultaneous OMP over L snapshots.

    Greedily selects k dictionary columns: each round scores every column p
    by ||psi_p^H R||_2 / ||psi_p||_2 against the current residual matrix R,
    picks the best unselected column, refits all selected coefficients
    jointly by least squares, and updates R.

    Parameters
    ----------
    y : (N, L) complex array
        Measurement snapshots.
    psi : SensingMatrix or (N, P) complex array
        Sensing matrix whose columns are candidate responses.
    k : int
        Number of columns to select, at most N.

    Returns
    -------
    indices : (k,) int array of selected grid indices, in selection order.
    coefficients : (k, L) complex array of joint least-squares waveforms.
    """
    mat = np.asarray(getattr(psi, "psi", psi), dtype=complex)
    y = np.atleast_2d(np.asarray(y, dtype=complex))
    n, p = mat.shape
    if y.shape[0] != n:
        raise ValueError(f"measurements have {y.shape[0]} rows but sensing matrix has {n}")
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= K <= N, got K={k}, N={n}")
    if k > p:
        raise ValueError(f"cannot select K={k} columns from P={p}")
    if not np.any(y):
        raise ValueError("measurement matrix is zero; OMP has nothing to select")
    col_norms = np.linalg.norm(mat, axis=0)
    if np.any(col_norms == 0):
        raise ValueError("sensing matrix has a zero column")
    residual = y
    chosen: list[int] = []
    coeffs = np.zeros((0, y.shape[1]), dtype=complex)
    for _ in range(k):
        scores = np.linalg.norm(mat.conj().T @ residual, axis=1) / col_norms
        scores[chosen] = -1.0
        chosen.append(int(np.argmax(scores)))
        coeffs = _solve_pinv(mat[:, chosen], y)
        residual = y - mat[:, chosen] @ coeffs
    return np.array(chosen), coeffs


def ls_signal(y: np.ndarray, phi, nu: float) -> np.ndarray:
    """Waveform minimizing ||Y - Phi a(nu) x^T||_F for a fixed frequency."""
    phi_mat = _phi_matrix(phi)
    y = np.atleast_2d(np.asarray(y, dtype=complex))
    v = phi_mat @ steering_vector(nu, phi_mat.shape[1])
    denom = np.real(v.conj() @ v)
    if denom == 0:
        raise ValueError("Phi a(nu) is zero; waveform is unidentifiable")
    return (v.conj() @ y) / denom


def residual_cost(y: np.ndarray, phi, nu: float, x: np.ndarray) -> float:
    """Squared Frobenius residual ||Y - Phi a(nu) x^T||_F^2."""
    phi_mat = _phi_matrix(phi)
    y = np.atleast_2d(np.asarray(y, dtype=complex))
    v = phi_mat @ steering_vector(nu, phi_mat.shape[1])
    return float(np.linalg.norm(y - np.outer(v, np.asarray(x, dtype=complex))) ** 2)


def delta_step(y: np.ndarray, phi, nu_ring: float, x: np.ndarray) -> float:
    """Real frequency correction from the linearized steering model.

    Vectorizes Y column-major and solves, in the least-squares sense,
    y ~ (x kron Phi a(nu)) + (x kron Phi g(nu)) * delta for real delta,
    where g is the steering gradient. Exact to first order in the offset.
    """
    phi_mat = _phi_matrix(phi)
    y = np.atleast_2d(np.asarray(y, dtype=complex))
    x = np.asarray(x, dtype=complex)
    m = phi_mat.shape[1]
    va = phi_mat @ steering_vector(nu_ring, m)
    vg = phi_mat @ steering_gradient(nu_ring, m)
    kg = np.kron(x, vg)
    denom = np.real(kg.conj() @ kg)
    if denom == 0:
        raise ValueError("x kron Phi g(nu) is zero; delta is unidentifiable")
    resid = y.reshape(-1, order="F") - np.kron(x, va)
    return float(np.real(kg.conj() @ resid) / denom)


def refine_single(
    y: np.ndarray, phi, nu0: float, x0: np.ndarray, cfg: GompConfig
) -> tuple[float, np.ndarray, np.ndarray]:
    """One single-source refinement pass.

    Repeats delta step, frequency update, waveform refit for up to
    cfg.i_max iterations. An update that strictly increases the squared
    residual is rejected and ends the pass, returning the previous pair;
    ties are accepted. Returns (nu_hat, x_hat, history) where history is
    the non-increasing sequence of accepted residual values, starting with
    the residual of (nu0, x0).
    """
    nu = float(nu0)
    x = np.asarray(x0, dtype=complex)
    eps = residual_cost(y, phi, nu, x)
    history = [eps]
    for _ in range(cfg.i_max):
        delta = delta_step(y, phi, nu, x)
        nu_new = nu + delta
        x_new = ls_signal(y, phi, nu_new)
        eps_new = residual_cost(y, phi, nu_new, x_new)
        if eps_new > eps:
            break
        nu, x, eps = nu_new, x_new, eps_new
        history.append(eps)
    return nu, x, np.array(history)


def refine_multi(
    y: np.ndarray,
    phi,
    nu0_vec: np.ndarray,
    x0: np.ndarray,
    cfg: GompConfig,
    grid_indices: np.ndarray | None = None,
) -> EstimationResult:
    """Cyclic multi-source refinement.

    Runs cfg.j_max outer passes. Within a pass, source k is refined against
    Y minus the contributions of sources already updated this pass
    (indices below k) and sources still carrying last pass's parameters
    (indices above k). All passes run to completion; only the inner
    single-source refinements may stop early.
    """
    phi_mat = _phi_matrix(phi)
    y = np.atleast_2d(np.asarray(y, dtype=complex))
    nu_old = np.atleast_1d(np.asarray(nu0_vec, dtype=float)).copy()
    x_old = np.atleast_2d(np.asarray(x0, dtype=complex)).copy()
    k_total = nu_old.size
    if x_old.shape[0] != k_total:
        raise ValueError(f"X0 has {x_old.shape[0]} rows but nu0 has {k_total} entries")
    m = phi_mat.shape[1]
    histories: list[np.ndarray] = []
    for _ in range(cfg.j_max):
        nu_new = np.zeros(k_total)
        x_new = np.zeros_like(x_old)
        for k in range(k_total):
            y_k = y
            for kk in range(k):
                v = phi_mat @ steering_vector(nu_new[kk], m)
                y_k = y_k - np.outer(v, x_new[kk])
            for kk in range(k + 1, k_total):
                v = phi_mat @ steering_vector(nu_old[kk], m)
                y_k = y_k - np.outer(v, x_old[kk])
            nu_new[k], x_new[k], hist = refine_single(y_k, phi_mat, nu_old[k], x_old[k], cfg)
            histories.append(hist)
        nu_old, x_old = nu_new, x_new
    return EstimationResult(
        nu_hat=nu_old,
        X_hat=x_old,
        residual_history=np.concatenate(histories),
        histories=tuple(histories),
        initial_grid_indices=None if grid_indices is None else np.asarray(grid_indices, dtype=int),
    )


def estimate(y: np.ndarray, phi, dictionary: Dictionary, k: int, cfg: GompConfig) -> EstimationResult:
    """End-to-end estimation: OMP on-grid start, then cyclic refinement.

    ``phi`` may be a ProjectionMatrix or a plain N-by-M complex array; the
    sensing matrix is formed internally from the dictionary.
    """
    phi_mat = _phi_matrix(phi)
    psi = phi_mat @ dictionary.A_ring
    indices, x0 = omp(y, psi, k)
    return refine_multi(y, phi_mat, dictionary.grid[indices], x0, cfg, grid_indices=indices)
