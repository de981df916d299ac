"""Dense complex linear algebra for small multi-qubit registers.

Matrices are plain complex numpy arrays of dimension 2, 4 or 8 and are treated
as immutable values: every function returns a fresh array and never mutates its
arguments. Composition, addition and scaling use the native operators
(``a @ b``, ``a + b``, ``z * a``); :func:`dagger` and :func:`trace_real` cover
the remaining everyday plumbing.

Register convention used package-wide: multi-qubit operators are ordered
measurement (x) ancilla (x) system, so ``kron(m_op, kron(a_op, s_op))``.
Two-qubit helpers keep the same relative order (control first).
"""

from __future__ import annotations

import numpy as np

DEFAULT_TOL = 1e-10

ALLOWED_DIMS = (2, 4, 8)


class InvalidAxis(ValueError):
    """Rotation axis is not a unit 3-vector."""


class DimError(ValueError):
    """Operands have incompatible or unsupported dimensions."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


ID2 = _frozen(np.eye(2, dtype=complex))
SIGMA_X = _frozen(np.array([[0, 1], [1, 0]], dtype=complex))
SIGMA_Y = _frozen(np.array([[0, -1j], [1j, 0]], dtype=complex))
SIGMA_Z = _frozen(np.array([[1, 0], [0, -1]], dtype=complex))

X_AXIS = _frozen(np.array([1.0, 0.0, 0.0]))
Y_AXIS = _frozen(np.array([0.0, 1.0, 0.0]))
Z_AXIS = _frozen(np.array([0.0, 0.0, 1.0]))


def as_unit_vector(axis, tol: float = 1e-12) -> np.ndarray:
    """Validate a 3-vector as a unit vector and return it as float ndarray."""
    v = np.asarray(axis, dtype=float)
    if v.shape != (3,):
        raise InvalidAxis(f"axis must be a 3-vector, got shape {v.shape}")
    if abs(np.dot(v, v) - 1.0) > tol:
        raise InvalidAxis(f"axis must have unit norm, got |v| = {np.linalg.norm(v)!r}")
    return v


def pauli(axis) -> np.ndarray:
    """Pauli matrix along a unit axis: ax*sigma_x + ay*sigma_y + az*sigma_z."""
    v = as_unit_vector(axis)
    return v[0] * SIGMA_X + v[1] * SIGMA_Y + v[2] * SIGMA_Z


def rot(axis, angle: float) -> np.ndarray:
    """SU(2) rotation exp(-i * pauli(axis) * angle / 2).

    Closed form cos(angle/2) * 1 - i sin(angle/2) * pauli(axis); the
    eigendecomposition route :func:`expm_hermitian_generator` is the
    independent cross-check used by the tests.
    """
    if not np.isfinite(angle):
        raise ValueError(f"rotation angle must be finite, got {angle!r}")
    half = 0.5 * angle
    return np.cos(half) * ID2 - 1j * np.sin(half) * pauli(axis)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with the package's register-dimension guard (4 or 8)."""
    a = np.asarray(a)
    b = np.asarray(b)
    out_dim = a.shape[0] * b.shape[0]
    if a.shape != (a.shape[0],) * 2 or b.shape != (b.shape[0],) * 2:
        raise DimError(f"kron needs square matrices, got {a.shape} and {b.shape}")
    if out_dim not in (4, 8):
        raise DimError(f"kron result dimension {out_dim} outside supported register sizes")
    return np.kron(a, b)


def dagger(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return np.asarray(a).conj().T


def trace_real(a: np.ndarray) -> float:
    """Real part of the trace (results that are real by symmetry)."""
    return float(np.trace(a).real)


def expm_hermitian_generator(h: np.ndarray) -> np.ndarray:
    """Exact exp(-i h) for hermitian h, via eigendecomposition.

    Serves as the oracle for :func:`rot` and for hamiltonian evolution checks;
    callers fold any scale factor into h.
    """
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h):
        raise ValueError("generator must be hermitian")
    vals, vecs = np.linalg.eigh(h)
    return (vecs * np.exp(-1j * vals)) @ vecs.conj().T


def dist_upto_phase(a: np.ndarray, b: np.ndarray) -> float:
    """Distance 1 - |tr(a^dag b)| / dim between same-dimension unitaries.

    Zero iff a and b agree up to a global phase; insensitive to that phase.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return 1.0 - abs(np.trace(dagger(a) @ b)) / a.shape[0]


def is_unitary(a: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    a = np.asarray(a)
    return bool(np.allclose(dagger(a) @ a, np.eye(a.shape[0]), atol=tol))


def is_hermitian(a: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    a = np.asarray(a)
    return bool(np.allclose(a, dagger(a), atol=tol))


def is_density_matrix(a: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    """Hermitian, unit trace, eigenvalues >= -tol."""
    a = np.asarray(a)
    if not is_hermitian(a, tol):
        return False
    if abs(np.trace(a).real - 1.0) > tol:
        return False
    return bool(np.linalg.eigvalsh(a).min() >= -tol)
