"""Dense finite-dimensional quantum linear algebra.

States and observables are thin immutable wrappers around complex numpy
arrays. Every constructor validates its invariants, so a ``DensityMatrix``
in hand is always Hermitian, unit-trace and positive semidefinite within the
stated tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, EigenSolverError, ValidationError

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
IDEMPOTENT_TOL = 1e-10
EIGEN_RESIDUAL_TOL = 1e-10
IMAG_TOL = 1e-10

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


def as_matrix(a) -> np.ndarray:
    """Return a read-only 2-D complex copy of ``a`` after checking finiteness."""
    m = np.array(getattr(a, "matrix", a), dtype=complex)
    if m.ndim != 2 or m.size == 0:
        raise ValidationError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix has non-finite entries")
    m.setflags(write=False)
    return m


def _square(m: np.ndarray) -> None:
    if m.shape[0] != m.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}")


def hermiticity_error(m: np.ndarray) -> float:
    return float(np.abs(m - m.conj().T).max())


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix.

    The tolerances are keyword-only so integrators can relax them for drift;
    the defaults are the strict construction tolerances.
    """

    matrix: np.ndarray
    herm_tol: float = field(default=HERMITIAN_TOL, kw_only=True, repr=False)
    trace_tol: float = field(default=TRACE_TOL, kw_only=True, repr=False)
    psd_tol: float = field(default=PSD_TOL, kw_only=True, repr=False)

    def __post_init__(self):
        m = as_matrix(self.matrix)
        _square(m)
        herm = hermiticity_error(m)
        if herm > self.herm_tol:
            raise ValidationError(f"density matrix is not Hermitian (max |M - M^H| = {herm:.3e})")
        tr = np.trace(m)
        if abs(tr - 1) > self.trace_tol:
            raise ValidationError(f"density matrix trace is {tr.real:.15g}, expected 1")
        lam_min = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])
        if lam_min < -self.psd_tol:
            raise ValidationError(f"density matrix has negative eigenvalue {lam_min:.3e}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def purity(self) -> float:
        return purity(self.matrix)

    @classmethod
    def from_pure(cls, psi) -> DensityMatrix:
        psi = np.asarray(psi, dtype=complex).ravel()
        norm = np.linalg.norm(psi)
        if norm == 0:
            raise ValidationError("zero state vector")
        psi = psi / norm
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> DensityMatrix:
        return cls(np.eye(dim, dtype=complex) / dim)


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    matrix: np.ndarray
    units: str = ""

    def __post_init__(self):
        m = as_matrix(self.matrix)
        _square(m)
        herm = hermiticity_error(m)
        if herm > HERMITIAN_TOL * max(1.0, float(np.abs(m).max())):
            raise ValidationError(f"operator is not Hermitian (max |M - M^H| = {herm:.3e})")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __neg__(self) -> HermitianOperator:
        return HermitianOperator(-self.matrix, self.units)


@dataclass(frozen=True, eq=False)
class Projector:
    """Orthogonal projector. ``empty`` flags a projector built from an empty window."""

    op: HermitianOperator
    empty: bool = False

    def __post_init__(self):
        p = self.op.matrix
        err = float(np.abs(p @ p - p).max())
        if err > IDEMPOTENT_TOL:
            raise ValidationError(f"projector is not idempotent (max |P^2 - P| = {err:.3e})")

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix

    @property
    def dim(self) -> int:
        return self.op.dim

    @property
    def rank(self) -> int:
        return int(round(np.trace(self.matrix).real))


@dataclass(frozen=True, eq=False)
class EnergySpectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def gaps(self) -> np.ndarray:
        """Matrix of Bohr frequencies ``omega[m, n] = E_m - E_n`` (hbar = 1)."""
        e = self.eigenvalues
        return e[:, None] - e[None, :]

    def to_eigenbasis(self, a) -> np.ndarray:
        v = self.eigenvectors
        return v.conj().T @ as_matrix(a) @ v

    def from_eigenbasis(self, a) -> np.ndarray:
        v = self.eigenvectors
        return v @ np.asarray(a) @ v.conj().T


def tensor(a, b):
    """Kronecker product. Preserves the wrapper type when both operands share it."""
    m = np.kron(as_matrix(a), as_matrix(b))
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(m)
    if isinstance(a, HermitianOperator) and isinstance(b, HermitianOperator):
        units = a.units if a.units == b.units else f"{a.units}*{b.units}".strip("*")
        return HermitianOperator(m, units)
    return m


def partial_trace(rho, dims, keep="A") -> DensityMatrix:
    """Trace out one factor of a bipartite state on ``A (x) B``.

    ``keep`` is ``"A"`` or ``"B"`` (or the index 0 / 1).
    """
    m = as_matrix(rho)
    d_a, d_b = (int(d) for d in dims)
    if d_a < 1 or d_b < 1 or m.shape != (d_a * d_b, d_a * d_b):
        raise DimensionError(
            f"incompatible factorization: matrix of shape {m.shape} vs dims {d_a}x{d_b}"
        )
    t = m.reshape(d_a, d_b, d_a, d_b)
    if keep in ("A", 0):
        out = np.einsum("ijkj->ik", t)
    elif keep in ("B", 1):
        out = np.einsum("ijil->jl", t)
    else:
        raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")
    if isinstance(rho, DensityMatrix):
        return DensityMatrix(out, herm_tol=rho.herm_tol, trace_tol=rho.trace_tol, psd_tol=rho.psd_tol)
    return DensityMatrix(out)


def expectation(obs, rho) -> float:
    """Re Tr(O rho); the imaginary part must vanish to ``IMAG_TOL``."""
    o, r = as_matrix(obs), as_matrix(rho)
    if o.shape != r.shape:
        raise DimensionError(f"observable {o.shape} and state {r.shape} differ in dimension")
    val = np.einsum("ij,ji->", o, r)
    assert abs(val.imag) <= IMAG_TOL * max(1.0, abs(val.real)), f"Tr(O rho) has imaginary part {val.imag:.3e}"
    return float(val.real)


def eigendecompose(h) -> EnergySpectrum:
    m = as_matrix(h)
    _square(m)
    try:
        evals, evecs = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"eigen-solver did not converge: {exc}", float("nan")) from exc
    scale = max(1.0, float(np.abs(m).max()))
    residual = float(np.abs(m @ evecs - evecs * evals).max()) / scale
    ortho = float(np.abs(evecs.conj().T @ evecs - np.eye(m.shape[0])).max())
    if residual > EIGEN_RESIDUAL_TOL or ortho > EIGEN_RESIDUAL_TOL:
        raise EigenSolverError("eigendecomposition failed accuracy check", max(residual, ortho))
    evals.setflags(write=False)
    evecs.setflags(write=False)
    return EnergySpectrum(evals, evecs)


def trace_distance(a, b) -> float:
    ma, mb = as_matrix(a), as_matrix(b)
    if ma.shape != mb.shape:
        raise DimensionError(f"states of shape {ma.shape} and {mb.shape} differ in dimension")
    diff = ma - mb
    return float(0.5 * np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))).sum())


def purity(rho) -> float:
    m = as_matrix(rho)
    return float(np.einsum("ij,ji->", m, m).real)


def commutator(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    return a @ b - b @ a


def dephase(rho, spectrum: EnergySpectrum) -> DensityMatrix:
    """Zero the off-diagonal elements of ``rho`` in the basis of ``spectrum``."""
    r = spectrum.to_eigenbasis(rho)
    return DensityMatrix(spectrum.from_eigenbasis(np.diag(np.diag(r))))


def coherence_l1(rho, spectrum: EnergySpectrum) -> float:
    """Sum of the moduli of the off-diagonal elements in the energy basis."""
    r = np.abs(spectrum.to_eigenbasis(rho))
    return float(r.sum() - np.trace(r))


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> HermitianOperator:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return HermitianOperator(scale * 0.5 * (a + a.conj().T))


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Ginibre-ensemble density matrix of the given rank (full rank by default)."""
    k = dim if rank is None else rank
    g = rng.normal(size=(dim, k)) + 1j * rng.normal(size=(dim, k))
    m = g @ g.conj().T
    m = 0.5 * (m + m.conj().T)
    return DensityMatrix(m / np.trace(m).real)
