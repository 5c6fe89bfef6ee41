"""Small dense matrix routines: induced norms, logarithmic norms, spectra.

Matrices are plain ``numpy`` float arrays. :func:`as_mat` is the single
validation gate; every public routine passes its inputs through it.

The logarithmic norm uses the standard one-sided derivative

    mu_p(A) = lim_{h -> 0+} (||I + h A||_p - 1) / h,

evaluated through its closed forms for p in {1, 2, inf}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DimensionError, PreconditionError

P_VALUES = (1, 2, np.inf)
MAX_DIM = 16
SYM_TOL = 1e-10
NSD_TOL = 1e-10


def as_mat(a, *, square: bool = False) -> np.ndarray:
    """Return ``a`` as a finite 2-D float array.

    Raises
    ------
    DimensionError
        If ``a`` is not 2-D, is empty, or is not square when ``square`` is set.
    ValueError
        If any entry is NaN or infinite.
    """
    m = np.array(a, dtype=float)
    if m.ndim != 2 or m.size == 0:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    return m


def _check_p(p):
    if p in ("inf", "Inf", "INF"):
        p = np.inf
    if p not in P_VALUES:
        raise ValueError(f"p must be one of 1, 2, inf; got {p!r}")
    return p


def parse_p(p):
    """Normalize a p-norm selector (1, 2, inf or the strings '1', '2', 'inf')."""
    if isinstance(p, str):
        p = {"1": 1, "2": 2, "inf": np.inf}.get(p.lower(), p)
    return _check_p(p)


def induced_norm(a, p=2) -> float:
    """Matrix norm induced by the vector p-norm.

    p=1 is the largest absolute column sum, p=inf the largest absolute row
    sum and p=2 the largest singular value, taken as sqrt(lambda_max(A^T A)).
    """
    a = as_mat(a, square=True)
    p = _check_p(p)
    if p == 1:
        return float(np.abs(a).sum(axis=0).max())
    if p == np.inf:
        return float(np.abs(a).sum(axis=1).max())
    top = np.linalg.eigvalsh(a.T @ a)[-1]
    return float(np.sqrt(max(top, 0.0)))


def sym_part(a) -> np.ndarray:
    """Symmetric part (A + A^T) / 2, exactly symmetric."""
    a = as_mat(a, square=True)
    s = 0.5 * (a + a.T)
    # a + a.T is already bitwise symmetric; mirror anyway to guard subclasses
    return np.triu(s) + np.triu(s, 1).T


def log_norm(a, p=2) -> float:
    """Logarithmic norm mu_p(A) for p in {1, 2, inf}.

    Closed forms: column-wise (p=1) and row-wise (p=inf) diagonal-plus-off-
    diagonal-absolute sums, and the top eigenvalue of the symmetric part
    for p=2.
    """
    a = as_mat(a, square=True)
    p = _check_p(p)
    if p == 2:
        return float(np.linalg.eigvalsh(sym_part(a))[-1])
    d = np.diag(a)
    off = np.abs(a) - np.diag(np.abs(d))
    if p == 1:
        return float((d + off.sum(axis=0)).max())
    return float((d + off.sum(axis=1)).max())


@dataclass(frozen=True)
class EigSet:
    """Eigenvalues of a real square matrix, sorted by descending real part."""

    values: np.ndarray

    @property
    def max_real(self) -> float:
        return float(self.values.real.max())

    @property
    def min_real(self) -> float:
        return float(self.values.real.min())

    def __len__(self) -> int:
        return len(self.values)


def _sort_spectrum(w: np.ndarray) -> np.ndarray:
    # descending real part; conjugate pairs ordered +imag first
    order = np.lexsort((-w.imag, -w.real))
    return w[order]


def eig(a) -> EigSet:
    """All eigenvalues of a real square matrix of dimension <= 16.

    Backed by LAPACK's Hessenberg reduction plus shifted QR (``dgeev``).
    Eigenvalues whose imaginary part is negligible against the matrix scale
    are returned as exactly real.
    """
    a = as_mat(a, square=True)
    n = a.shape[0]
    if n > MAX_DIM:
        raise PreconditionError(f"eig supports dimension <= {MAX_DIM}, got {n}")
    try:
        w = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigenvalue iteration did not converge: {exc}",
                               best=np.diag(a).astype(complex)) from exc
    w = np.asarray(w, dtype=complex)
    scale = max(np.abs(w).max(), 1.0)
    w = np.where(np.abs(w.imag) <= 1e-14 * scale, w.real + 0j, w)
    return EigSet(_sort_spectrum(w))


def eigvalsh(s) -> np.ndarray:
    """Ascending eigenvalues of a symmetric matrix (symmetry checked to 1e-10)."""
    s = as_mat(s, square=True)
    require_symmetric(s)
    return np.linalg.eigvalsh(sym_part(s))


def require_symmetric(s, tol: float = SYM_TOL, name: str = "matrix") -> None:
    s = np.asarray(s, dtype=float)
    scale = max(1.0, float(np.abs(s).max()))
    if np.abs(s - s.T).max() > tol * scale:
        raise PreconditionError(f"{name} is not symmetric within {tol:g}")


def is_nsd(s, tol: float = NSD_TOL) -> bool:
    """True when every eigenvalue of the symmetric matrix ``s`` is <= tol."""
    return bool(eigvalsh(s)[-1] <= tol)


def weyl_check(a, b, tol: float = NSD_TOL) -> bool:
    """Check the eigenvalue consequence of a negative semidefinite sum.

    Returns True iff ``A + B <= 0`` implies
    ``lambda_min(A) + lambda_max(B) <= tol``. When ``A + B`` is not
    negative semidefinite the implication holds vacuously.
    """
    a = as_mat(a, square=True)
    b = as_mat(b, square=True)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    require_symmetric(a, name="A")
    require_symmetric(b, name="B")
    if not is_nsd(a + b, tol):
        return True
    return bool(eigvalsh(a)[0] + eigvalsh(b)[-1] <= tol)
