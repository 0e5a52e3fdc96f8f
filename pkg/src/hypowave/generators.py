"""Damped first-order generators, their pencils, spectra and kernel projector.

Three evolution families share the same skeleton: given a nonnegative
selfadjoint stiffness block A and a damping block BB* (multiplication by b),

    wave        dU/dt = [[0, I], [-A,   -BB*]] U     on  H1 x L2,
    plate       dU/dt = [[0, I], [-A^2, -BB*]] U     on  H2 x L2,
    schrodinger du/dt = (iA - BB*) u                 on  L2.

The energy Gram forms attached to each generator define the norm in which
resolvents and energies are measured: blockdiag(A + I, I) for the wave norm,
blockdiag(A, I) for the wave seminorm (A^2 for plates), identity for
Schrodinger.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .operators import HermitianOperator


class EigensolverError(RuntimeError):
    """Dense eigensolver failure, annotated with the offending dimension."""

    def __init__(self, dimension: int, message: str = ""):
        self.dimension = dimension
        super().__init__(message or f"eigensolver failed at dimension {dimension}")


@dataclass(frozen=True, eq=False)
class DampedGenerator:
    """First-order generator matrix with its energy Gram forms.

    For wave/plate kinds the phase space is (u, v) with v = du/dt stacked as a
    single vector of length 2N; for schrodinger it is u of length N.
    """

    kind: str
    stiffness: HermitianOperator
    damping: HermitianOperator
    matrix: np.ndarray
    gram_norm: np.ndarray
    gram_semi: np.ndarray
    quad_weight: float

    def __post_init__(self):
        object.__setattr__(self, "_cache", {})

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def state_dim(self) -> int:
        return self.stiffness.dimension

    def damping_sup(self) -> float:
        """Operator norm of the damping block (discrete stand-in for |b|_inf)."""
        if "bsup" not in self._cache:
            self._cache["bsup"] = float(
                np.linalg.eigvalsh(self.damping.matrix).max(initial=0.0)
            )
        return self._cache["bsup"]

    def energy_factor(self, metric: str) -> np.ndarray:
        """Upper-triangular F with W = F^H F for the requested Gram form,
        computed once per generator."""
        key = ("factor", metric)
        if key not in self._cache:
            W = {"norm": self.gram_norm, "seminorm": self.gram_semi}[metric]
            low = np.linalg.cholesky(W)
            self._cache[key] = low.conj().T
        return self._cache[key]

    def memo(self, key, builder):
        """Per-generator cache for derived immutable arrays."""
        if key not in self._cache:
            self._cache[key] = builder()
        return self._cache[key]


def _check_dims(A: HermitianOperator, b: HermitianOperator):
    if A.dimension != b.dimension:
        raise ValueError(
            f"stiffness dimension {A.dimension} does not match damping dimension {b.dimension}"
        )


def _first_order_blocks(stiff2: np.ndarray, bmat: np.ndarray) -> np.ndarray:
    N = stiff2.shape[0]
    Z = np.zeros((N, N))
    eye = np.eye(N)
    if np.iscomplexobj(bmat) or np.iscomplexobj(stiff2):
        return np.block([[Z, eye], [-stiff2, -bmat]]).astype(complex)
    return np.block([[Z, eye], [-stiff2, -bmat]])


def damped_wave_generator(A: HermitianOperator, b: HermitianOperator) -> DampedGenerator:
    _check_dims(A, b)
    S = A.matrix
    eye = np.eye(A.dimension)
    return DampedGenerator(
        kind="wave",
        stiffness=A,
        damping=b,
        matrix=_first_order_blocks(S, b.matrix),
        gram_norm=scipy.linalg.block_diag(S + eye, eye),
        gram_semi=scipy.linalg.block_diag(S, eye),
        quad_weight=A.quad_weight,
    )


def plate_generator(A: HermitianOperator, b: HermitianOperator) -> DampedGenerator:
    """Wave-type generator built from A^2 in the stiffness block."""
    _check_dims(A, b)
    S2 = A.matrix @ A.matrix
    S2 = 0.5 * (S2 + S2.conj().T)
    eye = np.eye(A.dimension)
    return DampedGenerator(
        kind="plate",
        stiffness=A,
        damping=b,
        matrix=_first_order_blocks(S2, b.matrix),
        gram_norm=scipy.linalg.block_diag(S2 + eye, eye),
        gram_semi=scipy.linalg.block_diag(S2, eye),
        quad_weight=A.quad_weight,
    )


def schrodinger_generator(A: HermitianOperator, b: HermitianOperator) -> DampedGenerator:
    _check_dims(A, b)
    eye = np.eye(A.dimension)
    return DampedGenerator(
        kind="schrodinger",
        stiffness=A,
        damping=b,
        matrix=1j * A.matrix - b.matrix,
        gram_norm=eye,
        gram_semi=eye,
        quad_weight=A.quad_weight,
    )


def effective_stiffness(gen: DampedGenerator) -> np.ndarray:
    """The block actually driving the dynamics: A for waves, A^2 for plates."""
    if gen.kind == "wave":
        return gen.stiffness.matrix
    if gen.kind == "plate":
        return -gen.matrix[gen.state_dim :, : gen.state_dim]
    return gen.stiffness.matrix


def quadratic_pencil(A: HermitianOperator, b: HermitianOperator, z: complex) -> np.ndarray:
    """P(z) = A + z^2 I + z BB*, singular exactly at the wave eigenvalues."""
    _check_dims(A, b)
    return A.matrix + (z * z) * np.eye(A.dimension) + z * b.matrix


def shifted_schrodinger_pencil(A: HermitianOperator, b: HermitianOperator, lam: float) -> np.ndarray:
    """Q_lam = A - lam + i BB*, vanishing sigma_min iff i*lam is an eigenvalue
    of the damped Schrodinger generator."""
    _check_dims(A, b)
    return A.matrix - lam * np.eye(A.dimension) + 1j * b.matrix


@dataclass(eq=False)
class SpectrumReport:
    """Eigenvalues of a damped generator with residuals and localization flags.

    ``residuals`` are certified relative upper bounds on
    sigma_min(pencil(z)) / |pencil(z)| computed from the eigenvectors (or the
    exact SVD ratio when requested).  ``flags`` classify each eigenvalue
    against the admissible spectral region as inside / boundary / outside.
    ``pairing`` gives, for each eigenvalue, the index of its complex-conjugate
    partner (-1 when none is found within tolerance).
    """

    kind: str
    eigenvalues: np.ndarray
    residuals: np.ndarray
    flags: list[str]
    pairing: np.ndarray
    clusters: list[tuple[complex, int]]
    damping_norm: float

    def is_conjugate_symmetric(self, tol: float = 1e-9) -> bool:
        return bool(np.all(self.pairing >= 0))

    def violations(self) -> list[complex]:
        return [complex(z) for z, f in zip(self.eigenvalues, self.flags) if f == "outside"]

    def to_csv(self, path) -> None:
        lines = ["re,im,residual,flag"]
        for z, r, f in zip(self.eigenvalues, self.residuals, self.flags):
            lines.append(f"{float(z.real)!r},{float(z.imag)!r},{float(r)!r},{f}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def _localization_flag(kind: str, z: complex, bnorm: float, tol: float, real_tol: float) -> str:
    if kind in ("wave", "plate"):
        if abs(z.imag) <= real_tol:
            viol = max(z.real, -bnorm - z.real)
        else:
            viol = max(z.real, (-0.5 * bnorm) - z.real)
    else:
        viol = max(z.real, -bnorm - z.real, -z.imag)
    if viol > tol:
        return "outside"
    if viol >= -tol:
        return "boundary"
    return "inside"


def _conjugate_pairing(eigs: np.ndarray, tol: float) -> np.ndarray:
    n = len(eigs)
    pairing = np.full(n, -1, dtype=int)
    taken = np.zeros(n, dtype=bool)
    order = np.argsort(np.abs(eigs.imag))
    for i in order:
        if taken[i]:
            continue
        target = np.conj(eigs[i])
        d = np.abs(eigs - target)
        d[taken] = np.inf
        j = int(np.argmin(d))
        if d[j] <= tol * (1.0 + abs(eigs[i])):
            pairing[i] = j
            pairing[j] = i
            taken[i] = True
            taken[j] = True
    return pairing


def _cluster(eigs: np.ndarray, radius: float) -> list[tuple[complex, int]]:
    clusters: list[tuple[complex, int]] = []
    remaining = sorted(eigs.tolist(), key=lambda z: (z.real, z.imag))
    while remaining:
        z0 = remaining.pop(0)
        members = [z0]
        rest = []
        for z in remaining:
            if abs(z - z0) <= radius * (1.0 + abs(z0)):
                members.append(z)
            else:
                rest.append(z)
        remaining = rest
        clusters.append((complex(np.mean(members)), len(members)))
    return clusters


def spectrum(
    gen: DampedGenerator,
    *,
    exact_residuals: bool = False,
    localization_tol: float = 1e-8,
    pairing_tol: float = 1e-9,
    cluster_radius: float = 1e-7,
    dim_cap: int = 6000,
) -> SpectrumReport:
    """Dense non-Hermitian eigensolve of the generator, validated per
    eigenvalue against the associated pencil."""
    if gen.dim > dim_cap:
        raise ValueError(f"generator dimension {gen.dim} exceeds cap {dim_cap}")
    try:
        eigs, vecs = scipy.linalg.eig(gen.matrix)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure path
        raise EigensolverError(gen.dim, str(exc)) from exc

    order = np.lexsort((eigs.real, eigs.imag))
    eigs = eigs[order]
    vecs = vecs[:, order]

    N = gen.state_dim
    bmat = gen.damping.matrix
    stiff2 = effective_stiffness(gen)
    residuals = np.empty(len(eigs))
    for i, z in enumerate(eigs):
        if gen.kind in ("wave", "plate"):
            pencil = stiff2 + (z * z) * np.eye(N) + z * bmat
            u = vecs[:N, i]
        else:
            pencil = gen.matrix - z * np.eye(N)
            u = vecs[:, i]
        if exact_residuals:
            sv = scipy.linalg.svdvals(pencil)
            residuals[i] = sv[-1] / sv[0] if sv[0] > 0 else 0.0
        else:
            # |P u| / (max column norm * |u|) certifies sigma_min/|P| from above
            colmax = np.sqrt((np.abs(pencil) ** 2).sum(axis=0)).max()
            if colmax == 0.0:
                residuals[i] = 0.0
            else:
                residuals[i] = np.linalg.norm(pencil @ u) / (colmax * np.linalg.norm(u))

    bnorm = gen.damping_sup()
    real_tol = max(localization_tol, 1e-12)
    flags = [_localization_flag(gen.kind, z, bnorm, localization_tol, real_tol) for z in eigs]
    pairing = (
        _conjugate_pairing(eigs, pairing_tol)
        if gen.kind in ("wave", "plate")
        else np.full(len(eigs), -1, dtype=int)
    )
    clusters = _cluster(eigs, cluster_radius)
    return SpectrumReport(
        kind=gen.kind,
        eigenvalues=eigs,
        residuals=residuals,
        flags=flags,
        pairing=pairing,
        clusters=clusters,
        damping_norm=bnorm,
    )


@dataclass(eq=False)
class KernelProjector:
    """Spectral projector onto ker(generator) in the energy metric."""

    right_basis: np.ndarray
    left_basis: np.ndarray
    projector: np.ndarray
    rank: int


def kernel_projector(gen: DampedGenerator, zero_tol: float = 1e-10) -> KernelProjector:
    """Projector onto ker of a wave/plate generator.

    The right kernel is ker(A) x {0}; the left kernel is computed in the
    energy metric W, i.e. solutions of A^T W w = 0.  Coercive stiffness gives
    rank 0 and a zero projector.
    """
    if gen.kind not in ("wave", "plate"):
        raise ValueError("kernel projector is defined for wave and plate generators")
    N = gen.state_dim
    stiff2 = effective_stiffness(gen)
    w, V = np.linalg.eigh(stiff2)
    scale = max(abs(w[0]), abs(w[-1]), 1e-300)
    kernel_cols = V[:, np.abs(w) <= zero_tol * scale]
    rank = kernel_cols.shape[1]
    dim = gen.dim
    if rank == 0:
        zero = np.zeros((dim, dim))
        return KernelProjector(
            right_basis=np.zeros((dim, 0)), left_basis=np.zeros((dim, 0)), projector=zero, rank=0
        )

    R = np.vstack([kernel_cols, np.zeros((N, rank))])
    # Euclidean left kernel of the generator matrix, mapped back through W
    U, s, Vh = np.linalg.svd(gen.matrix.T.conj())
    left_euclid = Vh[np.abs(s) <= zero_tol * max(s[0], 1e-300), :].conj().T
    if left_euclid.shape[1] != rank:
        raise ValueError(
            f"left kernel dimension {left_euclid.shape[1]} does not match right kernel {rank}"
        )
    W = gen.gram_norm
    left = np.linalg.solve(W, left_euclid)
    normalizer = left.conj().T @ W @ R
    cond = np.linalg.cond(normalizer)
    if not np.isfinite(cond) or cond > 1e12:
        raise ValueError(f"kernel normalization is near singular (cond={cond:.3e})")
    projector = R @ np.linalg.solve(normalizer, left.conj().T @ W)
    return KernelProjector(right_basis=R, left_basis=left, projector=projector, rank=rank)
