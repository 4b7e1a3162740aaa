"""Dense complex linear algebra used by the precoding and codebook machinery.

Only the small set of kernels the simulator needs: Hermitian transpose,
validated products, Gram-matrix inversion via Cholesky, and the right
pseudo-inverse that zero-forcing precoding is built on.
"""

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, lapack

RCOND_THRESHOLD = 1e-12


class SingularMatrixError(ValueError):
    """Gram matrix is numerically singular (or not positive definite).

    Carries the estimated reciprocal condition number in ``rcond``
    (0.0 when the Cholesky factorization itself failed).
    """

    def __init__(self, rcond: float):
        self.rcond = float(rcond)
        super().__init__(
            f"Gram matrix numerically singular: reciprocal condition estimate "
            f"{self.rcond:.3e} below threshold {RCOND_THRESHOLD:.0e}"
        )


def complex_matrix(obj) -> np.ndarray:
    """Coerce to a 2-D complex array, rejecting empty or non-finite input."""
    a = np.asarray(obj, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D array, got ndim={a.ndim}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"matrix dimensions must be >= 1, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def complex_vector(obj) -> np.ndarray:
    """Coerce to a 1-D complex array, rejecting empty or non-finite input."""
    v = np.asarray(obj, dtype=complex)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D array, got ndim={v.ndim}")
    if v.shape[0] < 1:
        raise ValueError("vector length must be >= 1")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    return v


def hermitian(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return np.asarray(a, dtype=complex).conj().T


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Complex matrix product with an explicit shape check."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape[-1] != b.shape[0]:
        raise ValueError(f"shape mismatch: {a.shape} @ {b.shape}")
    return a @ b


def gram_inverse(h: np.ndarray) -> np.ndarray:
    """Inverse of the Gram matrix ``h^H h`` of a tall full-rank matrix.

    Uses a Cholesky factorization (the Gram matrix is Hermitian positive
    definite for full column rank) plus a LAPACK 1-norm reciprocal-condition
    estimate. Raises :class:`SingularMatrixError` instead of returning
    garbage when the estimate falls below ``RCOND_THRESHOLD``.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] < h.shape[1]:
        raise ValueError(f"expected a tall matrix (rows >= cols), got {h.shape}")
    a = h.conj().T @ h
    anorm = np.linalg.norm(a, 1)
    try:
        c, low = cho_factor(a, lower=False)
    except LinAlgError:
        raise SingularMatrixError(0.0) from None
    rcond, info = lapack.zpocon(c, anorm, uplo=b"U")
    if info != 0 or not np.isfinite(rcond) or rcond < RCOND_THRESHOLD:
        raise SingularMatrixError(rcond)
    k = h.shape[1]
    return cho_solve((c, low), np.eye(k, dtype=complex))


def zf_pseudo_inverse(h: np.ndarray) -> np.ndarray:
    """Right pseudo-inverse ``h (h^H h)^{-1}``.

    Satisfies ``h^H @ result == I`` to numerical tolerance; this is the
    zero-forcing precoder direction matrix before per-column power scaling.
    """
    h = np.asarray(h, dtype=complex)
    return h @ gram_inverse(h)
