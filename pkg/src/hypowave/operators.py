"""Quadrature-weighted discretizations of Grushin-type operators and damping.

The geometry is the strip [-1, 1] x (R/Z).  The x1 direction carries a uniform
interior grid with eliminated homogeneous Dirichlet boundary rows; the x2
direction is represented spectrally by Fourier modes n with angular factors
omega_n = 2*pi*n.  The Grushin operator -(d_x1^2 + |x1|^(2(k-1)) d_x2^2)
becomes, per Fourier mode, the Sturm-Liouville block

    L_n = -d_x1^2 + omega_n^2 |x1|^(2(k-1))

discretized with second-order centered differences.  All discrete L2 pairings
use the weight h per x1 node and Parseval weight 1 per mode, so that
<u, v>_h = h * sum_i u_i conj(v_i) approximates the integral over (-1, 1).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

SYMMETRY_RTOL = 1e-12


@dataclass(frozen=True)
class Grid1D:
    """Uniform interior grid on (-1, 1) with Dirichlet endpoints eliminated."""

    n_interior: int
    spacing: float
    nodes: np.ndarray = field(repr=False)

    @classmethod
    def make(cls, n_interior: int) -> "Grid1D":
        if n_interior < 2:
            raise ValueError(f"need at least 2 interior nodes, got {n_interior}")
        h = 2.0 / (n_interior + 1)
        nodes = -1.0 + h * np.arange(1, n_interior + 1)
        return cls(n_interior=n_interior, spacing=h, nodes=nodes)

    def __post_init__(self):
        if self.n_interior < 2:
            raise ValueError("n_interior must be >= 2")
        x = np.asarray(self.nodes)
        if len(x) != self.n_interior or np.any(np.diff(x) <= 0):
            raise ValueError("nodes must be strictly increasing with one node per interior point")
        if x[0] <= -1 + 1e-15 - self.spacing or x[-1] >= 1:
            raise ValueError("nodes must lie in (-1, 1)")


@dataclass(frozen=True)
class FourierModeSet:
    """Symmetric set of x2 Fourier frequencies n in {-M, ..., M}."""

    max_frequency: int

    def __post_init__(self):
        if self.max_frequency < 0:
            raise ValueError("max_frequency must be >= 0")

    @property
    def frequencies(self) -> np.ndarray:
        M = self.max_frequency
        return np.arange(-M, M + 1)

    @property
    def omegas(self) -> np.ndarray:
        return 2.0 * np.pi * self.frequencies

    def __len__(self) -> int:
        return 2 * self.max_frequency + 1


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """A dense Hermitian matrix together with its L2 quadrature weight.

    ``quad_weight`` is the x1 node weight h (1.0 for purely spectral
    operators); inner products read <u, v> = quad_weight * u . conj(v).
    ``k`` records the homogeneity power of the potential and ``mode`` the
    Fourier mode (an integer, or "full" for block operators over a mode set).
    """

    matrix: np.ndarray
    quad_weight: float
    k: float | None = None
    mode: int | str | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("matrix must be square")
        if not (np.all(np.isfinite(m.real)) and np.all(np.isfinite(m.imag))):
            raise ValueError("operator assembly produced non-finite entries")
        scale = np.abs(m).max() or 1.0
        if np.abs(m - m.conj().T).max() > SYMMETRY_RTOL * scale:
            raise ValueError("matrix is not Hermitian to machine precision")
        if self.quad_weight <= 0:
            raise ValueError("quad_weight must be positive")

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def inner(self, u: np.ndarray, v: np.ndarray) -> complex:
        return self.quad_weight * np.vdot(v, u)

    def norm(self, u: np.ndarray) -> float:
        return math.sqrt(self.quad_weight) * np.linalg.norm(u)

    def export(self, path) -> None:
        """Write the operator as plain text: a 'dim quad_weight' header, then
        one 'row col value' triplet per nonzero (re and im columns if complex)."""
        m = self.matrix
        lines = [f"{self.dimension} {float(self.quad_weight)!r}"]
        rows, cols = np.nonzero(m)
        for i, j in zip(rows.tolist(), cols.tolist()):
            v = m[i, j]
            if np.iscomplexobj(m):
                lines.append(f"{i} {j} {float(v.real)!r} {float(v.imag)!r}")
            else:
                lines.append(f"{i} {j} {float(v)!r}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


@dataclass(frozen=True, eq=False)
class DampingProfile:
    """Nonnegative damping function b, in one of three separable forms.

    constant      -- b = beta everywhere
    separable_x1  -- b = b(x1), stored as samples on the Grid1D nodes
    separable_x2  -- b = indicator of the arc (a, b) in R/Z, realized through
                     its Fourier coefficients
    """

    variant: str
    sup_norm: float
    beta: float = 0.0
    x1_values: np.ndarray | None = None
    interval: tuple[float, float] | None = None

    def __post_init__(self):
        if self.variant not in ("constant", "separable_x1", "separable_x2"):
            raise ValueError(f"unknown damping variant {self.variant!r}")
        if self.variant == "constant" and self.beta < 0:
            raise ValueError("constant damping level must be nonnegative")
        if self.variant == "separable_x1":
            v = np.asarray(self.x1_values, dtype=float)
            if np.any(v < 0):
                raise ValueError("damping samples must be nonnegative")
            if self.sup_norm < v.max(initial=0.0) - 1e-15:
                raise ValueError("sup_norm must dominate every sample")
        if self.variant == "separable_x2":
            a, b = self.interval
            if not (0.0 <= a < b <= 1.0):
                raise ValueError("x2 indicator interval must satisfy 0 <= a < b <= 1")

    @classmethod
    def constant(cls, beta: float) -> "DampingProfile":
        return cls(variant="constant", sup_norm=float(beta), beta=float(beta))

    @classmethod
    def from_x1_samples(cls, values) -> "DampingProfile":
        v = np.asarray(values, dtype=float)
        return cls(variant="separable_x1", sup_norm=float(v.max(initial=0.0)), x1_values=v)

    @classmethod
    def x1_indicator(cls, grid: Grid1D, threshold: float = 0.5) -> "DampingProfile":
        """b(x1) = 1 where |x1| >= threshold, sampled on the grid nodes."""
        return cls.from_x1_samples((np.abs(grid.nodes) >= threshold).astype(float))

    @classmethod
    def x2_indicator(cls, a: float, b: float) -> "DampingProfile":
        return cls(variant="separable_x2", sup_norm=1.0, interval=(float(a), float(b)))

    def fourier_coefficient(self, j: int) -> complex:
        """Fourier coefficient c_j of the x2 indicator, c_0 = measure of the arc."""
        if self.variant != "separable_x2":
            raise ValueError("fourier coefficients are defined for separable_x2 profiles")
        a, b = self.interval
        if j == 0:
            return complex(b - a)
        two_pi_ij = 2j * math.pi * j
        return (cmath.exp(-two_pi_ij * a) - cmath.exp(-two_pi_ij * b)) / two_pi_ij


def assemble_grushin_mode(n: int, k: float, grid: Grid1D) -> HermitianOperator:
    """Finite-difference block -d_x1^2 + omega_n^2 |x1|^(2(k-1)) with
    eliminated Dirichlet rows.  Symmetric and positive definite."""
    if k < 1:
        raise ValueError(f"homogeneity power k must be >= 1, got {k}")
    if grid.n_interior < 2:
        raise ValueError("grid too small")
    h = grid.spacing
    x = grid.nodes
    omega = 2.0 * math.pi * n
    potential = omega**2 * np.abs(x) ** (2.0 * (k - 1.0))
    if not np.all(np.isfinite(potential)):
        raise ValueError("potential evaluation produced non-finite values")
    N = grid.n_interior
    L = np.zeros((N, N))
    main = 2.0 / h**2 + potential
    L[np.arange(N), np.arange(N)] = main
    L[np.arange(N - 1), np.arange(1, N)] = -1.0 / h**2
    L[np.arange(1, N), np.arange(N - 1)] = -1.0 / h**2
    return HermitianOperator(matrix=L, quad_weight=h, k=k, mode=n)


def assemble_grushin_full(
    k: float, grid: Grid1D, modes: FourierModeSet, dim_cap: int = 40_000
) -> HermitianOperator:
    """Block-diagonal operator over the mode set, ordered (mode, node)
    lexicographically with modes ascending from -M to M."""
    dim = grid.n_interior * len(modes)
    if dim > dim_cap:
        raise ValueError(f"assembled dimension {dim} exceeds cap {dim_cap}")
    blocks = [assemble_grushin_mode(int(n), k, grid).matrix for n in modes.frequencies]
    return HermitianOperator(
        matrix=scipy.linalg.block_diag(*blocks), quad_weight=grid.spacing, k=k, mode="full"
    )


def assemble_flat_laplacian(
    modes: FourierModeSet, modes_2: FourierModeSet | None = None
) -> HermitianOperator:
    """Spectral Laplacian on the torus R/Z (or on a product of two circles).

    Diagonal in the Fourier basis with exactly known eigenvalues omega_n^2;
    the k = 1 elliptic baseline.
    """
    w2 = modes.omegas**2
    if modes_2 is not None:
        w2 = (w2[:, None] + modes_2.omegas[None, :] ** 2).ravel()
    return HermitianOperator(matrix=np.diag(w2), quad_weight=1.0, k=1.0, mode="full")


def assemble_damping(
    profile: DampingProfile,
    grid: Grid1D | None = None,
    modes: FourierModeSet | None = None,
) -> HermitianOperator:
    """Multiplication operator by b in the (mode, node) coordinates.

    separable_x1 profiles are block-diagonal (diag of the samples per mode),
    separable_x2 profiles are block-Toeplitz in the mode index with symbol the
    Fourier coefficients of b, identity in x1.  The result is Hermitian PSD
    with norm <= sup_norm.
    """
    n_nodes = grid.n_interior if grid is not None else 1
    n_modes = len(modes) if modes is not None else 1
    weight = grid.spacing if grid is not None else 1.0

    if profile.variant == "constant":
        if grid is None and modes is None:
            raise ValueError("constant damping needs a grid or a mode set to fix the dimension")
        mat = profile.beta * np.eye(n_nodes * n_modes)
    elif profile.variant == "separable_x1":
        if grid is None:
            raise ValueError("separable_x1 damping requires the x1 grid")
        v = np.asarray(profile.x1_values, dtype=float)
        if len(v) != grid.n_interior:
            raise ValueError("sample count does not match the grid")
        mat = np.kron(np.eye(n_modes), np.diag(v))
    else:  # separable_x2
        if modes is None:
            raise ValueError("separable_x2 damping requires the mode set")
        freqs = modes.frequencies
        symbol = np.array(
            [[profile.fourier_coefficient(int(m - n)) for n in freqs] for m in freqs]
        )
        mat = np.kron(symbol, np.eye(n_nodes))
    return HermitianOperator(matrix=mat, quad_weight=weight, k=None, mode="full")
