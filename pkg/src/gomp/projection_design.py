"""Constant-modulus projection matrix design.

Mutual-coherence diagnostics for sensing matrices Psi = Phi @ A_ring and a
projected gradient-descent designer that keeps every entry of Phi on the
unit circle. The objective embeds the unit-column-norm constraint directly:
with Q = Phi @ A_ring and D = diag(1/||q_p||),

    eta(Phi) = || D Q^H Q D - I ||_F^2,

and the descent direction applies an entry-wise soft threshold (shrinking)
to the Gram error so that updates concentrate on the worst column pairs.
DFT-row and random-phase baselines are included for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .array_model import Dictionary

_CM_TOL = 1e-9


def _as_matrix(phi) -> np.ndarray:
    """Accept a ProjectionMatrix or a plain complex matrix."""
    return np.asarray(getattr(phi, "phi", phi), dtype=complex)


@dataclass(frozen=True)
class ProjectionMatrix:
    """N-by-M analog combiner with unit-modulus (phase-only) entries."""

    phi: np.ndarray

    def __post_init__(self) -> None:
        phi = np.atleast_2d(np.asarray(self.phi, dtype=complex))
        if np.max(np.abs(np.abs(phi) - 1.0)) > _CM_TOL:
            raise ValueError("every projection entry must have unit modulus")
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)

    @property
    def N(self) -> int:
        return self.phi.shape[0]

    @property
    def M(self) -> int:
        return self.phi.shape[1]


@dataclass(frozen=True)
class SensingMatrix:
    """Psi = Phi @ A_ring together with its factors."""

    psi: np.ndarray
    source_phi: ProjectionMatrix
    dictionary_ref: Dictionary

    def __post_init__(self) -> None:
        psi = np.atleast_2d(np.asarray(self.psi, dtype=complex))
        n, p = psi.shape
        if p < n:
            raise ValueError(f"sensing matrix needs P >= N, got N={n}, P={p}")
        psi.setflags(write=False)
        object.__setattr__(self, "psi", psi)

    @property
    def N(self) -> int:
        return self.psi.shape[0]

    @property
    def P(self) -> int:
        return self.psi.shape[1]


def sensing_matrix(phi: ProjectionMatrix, dictionary: Dictionary) -> SensingMatrix:
    """Form Psi = Phi @ A_ring."""
    if phi.M != dictionary.M:
        raise ValueError(f"projection has {phi.M} columns but dictionary has {dictionary.M} rows")
    return SensingMatrix(psi=phi.phi @ dictionary.A_ring, source_phi=phi, dictionary_ref=dictionary)


@dataclass(frozen=True)
class DesignConfig:
    """Gradient-descent designer settings.

    t_max is the iteration budget; step_size is the initial step, which the
    designer halves (up to 20 times per iteration) whenever the trial step
    increases eta before re-projection, and doubles after an iteration that
    needed no halving. alpha >= 1 relaxes the shrinkage threshold
    alpha * welch_bound; alpha = inf disables shrinking entirely (the raw
    Gram error is used), which reproduces the plain constant-modulus
    extension of the unit-norm-embedded descent. seed drives the random
    initialization fallback.
    """

    t_max: int = 200
    step_size: float = 0.05
    alpha: float = 1.0
    seed: int = 0
    init: str = "svd"

    def __post_init__(self) -> None:
        if self.t_max < 0:
            raise ValueError(f"t_max must be nonnegative, got {self.t_max}")
        if not self.step_size > 0:
            raise ValueError(f"step_size must be positive, got {self.step_size}")
        if not self.alpha >= 1:
            raise ValueError(f"alpha >= 1 required, got {self.alpha}")
        if self.init not in ("svd", "random"):
            raise ValueError(f"init must be 'svd' or 'random', got {self.init!r}")


@dataclass(frozen=True)
class DesignTrace:
    """Per-iteration record of a design run.

    coherence_per_iter[0] and objective_per_iter[0] describe the starting
    point; entry t describes the iterate after update t. final_phi is the
    iterate with the lowest recorded coherence, not necessarily the last.
    """

    coherence_per_iter: np.ndarray
    objective_per_iter: np.ndarray
    final_phi: ProjectionMatrix
    step_per_iter: np.ndarray
    alpha: float
    best_iter: int

    def __post_init__(self) -> None:
        mu = np.asarray(self.coherence_per_iter, dtype=float)
        if mu.size and (mu.min() < 0 or mu.max() > 1):
            raise ValueError("coherence values must lie in [0, 1]")

    @property
    def initial_coherence(self) -> float:
        return float(self.coherence_per_iter[0])

    @property
    def final_coherence(self) -> float:
        return float(self.coherence_per_iter[self.best_iter])


def mutual_coherence(psi) -> float:
    """Largest normalized column cross-correlation of Psi, in [0, 1].

    max over i != j of |psi_i^H psi_j| / (||psi_i|| ||psi_j||).
    """
    mat = np.asarray(getattr(psi, "psi", psi), dtype=complex)
    if mat.ndim != 2 or mat.shape[1] < 2:
        raise ValueError("mutual coherence needs a matrix with at least two columns")
    norms = np.linalg.norm(mat, axis=0)
    if np.any(norms == 0):
        raise ValueError("mutual coherence is undefined for a zero column")
    gram = np.abs(mat.conj().T @ mat) / np.outer(norms, norms)
    np.fill_diagonal(gram, 0.0)
    return float(min(gram.max(), 1.0))


def welch_bound(n: int, p: int) -> float:
    """Lower bound sqrt((P - N) / (N (P - 1))) on the coherence of any
    N-by-P unit-norm frame."""
    if n < 1 or p < 2:
        raise ValueError(f"need N >= 1 and P >= 2, got N={n}, P={p}")
    if p < n:
        raise ValueError(f"Welch bound requires P >= N, got N={n}, P={p}")
    return math.sqrt((p - n) / (n * (p - 1)))


def column_normalizer(q: np.ndarray) -> np.ndarray:
    """Diagonal matrix D with D_pp = 1 / ||q_p||, so Q @ D has unit columns."""
    q = np.asarray(q, dtype=complex)
    norms = np.linalg.norm(q, axis=0)
    if np.any(norms == 0):
        raise ValueError("cannot normalize a zero column")
    return np.diag(1.0 / norms)


def gram_error(q: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Normalized Gram residual E = D Q^H Q D - I.

    Hermitian with (numerically) zero diagonal when D holds the reciprocal
    column norms of Q.
    """
    q = np.asarray(q, dtype=complex)
    d = np.asarray(d)
    diag = np.diagonal(d) if d.ndim == 2 else d
    p = q.shape[1]
    if diag.shape[0] != p:
        raise ValueError(f"normalizer has {diag.shape[0]} entries but Q has {p} columns")
    return (q.conj().T @ q) * np.outer(diag, diag) - np.eye(p)


def shrink_error(e: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    """Entry-wise complex soft threshold of E at alpha * beta.

    Entries with modulus below the threshold become zero; the rest shrink
    toward zero by the threshold while keeping their phase. Hermitian
    inputs stay Hermitian.
    """
    if not alpha >= 1:
        raise ValueError(f"alpha >= 1 required, got {alpha}")
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    e = np.asarray(e, dtype=complex)
    mag = np.abs(e)
    thr = alpha * beta
    with np.errstate(invalid="ignore"):
        scale = np.where(mag < thr, 0.0, 1.0 - thr / np.where(mag > 0, mag, 1.0))
    return e * scale


def objective_eta(phi, dictionary: Dictionary) -> float:
    """Squared Frobenius norm of the normalized Gram residual of Phi @ A_ring.

    Accepts a ProjectionMatrix or any complex matrix (the design line search
    evaluates points off the constant-modulus manifold).
    """
    q = _as_matrix(phi) @ dictionary.A_ring
    norms = np.linalg.norm(q, axis=0)
    if np.any(norms == 0):
        raise ValueError("objective is undefined when Phi @ A_ring has a zero column")
    e = gram_error(q, 1.0 / norms)
    return float(np.linalg.norm(e) ** 2)


def gradient_eta(phi, dictionary: Dictionary, e_used: np.ndarray) -> np.ndarray:
    """Descent direction of eta with respect to Phi.

    4 Q D E D A^H - 2 Phi A R A^H with R = diag(C), C = 2 E D Q^H Q D^3,
    evaluated with E replaced by ``e_used`` (the raw Gram error or its
    shrunk version) in both occurrences. With the raw error this equals
    twice the conjugate Wirtinger gradient, so the directional derivative
    of eta along Delta is exactly Re <G, Delta>.
    """
    phi_mat = _as_matrix(phi)
    a = dictionary.A_ring
    q = phi_mat @ a
    norms = np.linalg.norm(q, axis=0)
    if np.any(norms == 0):
        raise ValueError("gradient is undefined when Phi @ A_ring has a zero column")
    d = 1.0 / norms
    e_used = np.asarray(e_used, dtype=complex)
    s = q.conj().T @ q
    c = 2.0 * e_used @ (s * np.outer(d, d**3))
    r = np.real(np.diagonal(c))
    term1 = 4.0 * ((q * d) @ (e_used * d)) @ a.conj().T
    term2 = 2.0 * (q @ (r[:, None] * a.conj().T))
    return term1 - term2


def cm_project(z: np.ndarray) -> np.ndarray:
    """Entry-wise projection z / |z| onto the unit circle; zeros map to 1."""
    z = np.asarray(z, dtype=complex)
    mag = np.abs(z)
    out = np.where(mag == 0, 1.0 + 0.0j, z / np.where(mag == 0, 1.0, mag))
    return out


def dft_projection(n: int, m: int) -> ProjectionMatrix:
    """N rows of the M-point DFT matrix taken at stride M / N."""
    if n < 1 or m < 1:
        raise ValueError("dimensions must be positive")
    if m % n != 0:
        raise ValueError(f"M must be divisible by N, got N={n}, M={m}")
    stride = m // n
    rows = np.arange(0, m, stride)
    w = np.exp(-2j * np.pi * np.outer(rows, np.arange(m)) / m)
    return ProjectionMatrix(phi=w)


def random_cm_projection(n: int, m: int, seed: int) -> ProjectionMatrix:
    """Independent uniform phases, deterministic per seed."""
    rng = np.random.default_rng(seed)
    return ProjectionMatrix(phi=np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, (n, m))))


def svd_projection(dictionary: Dictionary, n: int) -> ProjectionMatrix:
    """Dictionary-aware start: the N principal left-singular-vector rows of
    A_ring, pushed onto the unit circle entry-wise."""
    if n < 1 or n > dictionary.M:
        raise ValueError(f"need 1 <= N <= M, got N={n}, M={dictionary.M}")
    u = np.linalg.svd(dictionary.A_ring, full_matrices=False)[0]
    return ProjectionMatrix(phi=cm_project(u[:, :n].conj().T))


def initial_projection(dictionary: Dictionary, n: int, cfg: DesignConfig) -> ProjectionMatrix:
    """Starting point for the designer per cfg.init.

    The SVD start falls back to random phases when it leaves Phi @ A_ring
    with a (near-)zero column or fully parallel columns, which happens for
    degenerate dictionaries where the singular basis is arbitrary.
    """
    if cfg.init == "random":
        return random_cm_projection(n, dictionary.M, cfg.seed)
    phi = svd_projection(dictionary, n)
    q = phi.phi @ dictionary.A_ring
    norms = np.linalg.norm(q, axis=0)
    if norms.min() <= 1e-9 * norms.max() or mutual_coherence(q) > 1.0 - 1e-9:
        return random_cm_projection(n, dictionary.M, cfg.seed)
    return phi


def design(
    dictionary: Dictionary,
    cfg: DesignConfig,
    phi0: ProjectionMatrix,
    embed_unit_norm: bool = True,
) -> DesignTrace:
    """Projected gradient descent on eta with shrunk Gram error.

    Each iteration computes the Gram error E of the current iterate,
    shrinks it at alpha * welch_bound (skipped when alpha is infinite),
    steps along the resulting descent direction with a backtracking line
    search on eta evaluated before re-projection, and projects back onto
    the constant-modulus manifold. Coherence and eta are recorded at the
    start and after every iteration; the returned matrix is the best
    iterate by coherence.

    With embed_unit_norm=False the column normalization is treated as a
    constant within each step (only the first gradient term is used and
    columns are renormalized implicitly on the next iteration), which
    reproduces the baseline that imposes unit norms after each update
    instead of inside the objective.
    """
    a = dictionary.A_ring
    n = phi0.N
    p = dictionary.P
    beta = welch_bound(n, p)
    eye = np.eye(p)
    shrink = math.isfinite(cfg.alpha)

    def stats(phi_mat: np.ndarray):
        q = phi_mat @ a
        norms = np.linalg.norm(q, axis=0)
        if np.any(norms == 0):
            raise ValueError("design encountered a zero column in Phi @ A_ring")
        d = 1.0 / norms
        s = q.conj().T @ q
        e = s * np.outer(d, d) - eye
        return q, d, s, e

    def eta_of(phi_mat: np.ndarray) -> float:
        return float(np.linalg.norm(stats(phi_mat)[3]) ** 2)

    phi = np.array(phi0.phi)
    q, d, s, e = stats(phi)
    mu = float(min(np.max(np.abs(e)), 1.0))
    eta = float(np.linalg.norm(e) ** 2)
    mus = [mu]
    etas = [eta]
    steps = []
    best_mu, best_phi, best_iter = mu, phi.copy(), 0
    base = cfg.step_size
    for t in range(1, cfg.t_max + 1):
        e_used = shrink_error(e, cfg.alpha, beta) if shrink else e
        grad = 4.0 * ((q * d) @ (e_used * d)) @ a.conj().T
        if embed_unit_norm:
            c = 2.0 * e_used @ (s * np.outer(d, d**3))
            r = np.real(np.diagonal(c))
            grad = grad - 2.0 * (q @ (r[:, None] * a.conj().T))
        step = base
        halvings = 0
        while halvings < 20 and eta_of(phi - step * grad) > eta:
            step *= 0.5
            halvings += 1
        phi = cm_project(phi - step * grad)
        base = min(step * 2.0, 1e9) if halvings == 0 else step
        steps.append(step)
        q, d, s, e = stats(phi)
        mu = float(min(np.max(np.abs(e)), 1.0))
        eta = float(np.linalg.norm(e) ** 2)
        mus.append(mu)
        etas.append(eta)
        if mu < best_mu:
            best_mu, best_phi, best_iter = mu, phi.copy(), t
    return DesignTrace(
        coherence_per_iter=np.array(mus),
        objective_per_iter=np.array(etas),
        final_phi=ProjectionMatrix(phi=best_phi),
        step_per_iter=np.array(steps),
        alpha=cfg.alpha,
        best_iter=best_iter,
    )


def design_with_alpha_sweep(
    dictionary: Dictionary,
    cfg: DesignConfig,
    phi0: ProjectionMatrix,
    alphas: tuple = (1.0, 1.5, 2.0, 3.0, 5.0),
    embed_unit_norm: bool = True,
) -> DesignTrace:
    """Run the designer for each shrinkage relaxation candidate and keep the
    trace reaching the lowest coherence. Candidates run independently from
    the same start, so ties resolve to the earlier candidate."""
    if not alphas:
        raise ValueError("need at least one alpha candidate")
    best: DesignTrace | None = None
    for alpha in alphas:
        trace = design(dictionary, replace(cfg, alpha=alpha), phi0, embed_unit_norm=embed_unit_norm)
        if best is None or trace.final_coherence < best.final_coherence:
            best = trace
    return best
