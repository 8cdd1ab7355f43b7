"""Dense kernel built around the bilinear c-product.

For complex symmetric operators the natural pairing of two vectors is
``(u|v) = sum_n u_n v_n`` with no complex conjugation.  Everything here works
on plain :class:`numpy.ndarray` objects; a vector is a 1-D complex array and a
matrix a square 2-D array.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ContractViolation, Defective, DimensionError, SelfOrthogonal

# |(v|v)| below this fraction of sum |v_n|^2 counts as self-orthogonal.
SELF_ORTHOGONAL_RTOL = 1e-8
# Relative eigenvalue gap under which a 2x2 matrix is treated as degenerate.
DEGENERATE_RTOL = 1e-12


def c_product(u, v) -> complex:
    """Bilinear c-product ``(u|v) = sum_n u_n v_n``.

    Symmetric in its arguments and linear (not antilinear) in both.
    """
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape or u.ndim != 1:
        raise DimensionError(f"c_product needs equal-length vectors, got {u.shape} and {v.shape}")
    return complex(np.sum(u * v))


def c_matrix_element(u, a, v) -> complex:
    """``(u|A|v) = u^T A v``."""
    return complex(np.asarray(u) @ np.asarray(a) @ np.asarray(v))


def principal_sqrt(z: complex) -> complex:
    """Principal square root with the tie rule used for c-normalization.

    The result has non-negative real part; on the imaginary axis the root with
    positive imaginary part is returned (``sqrt(-4 - 0j) == 2j``, not ``-2j``).
    """
    r = complex(np.sqrt(complex(z)))
    if r.real == 0.0 and r.imag < 0.0:
        r = -r
    return r


def self_overlap_ratio(v) -> float:
    """``|(v|v)| / sum |v_n|^2``; 1 for real vectors, 0 for self-orthogonal ones."""
    v = np.asarray(v)
    norm2 = float(np.sum(np.abs(v) ** 2))
    if norm2 == 0.0:
        raise SelfOrthogonal("zero vector")
    return abs(complex(np.sum(v * v))) / norm2


def is_self_orthogonal(v, rtol: float = SELF_ORTHOGONAL_RTOL) -> bool:
    return self_overlap_ratio(v) < rtol


def c_normalize(v, rtol: float = SELF_ORTHOGONAL_RTOL) -> np.ndarray:
    """Rescale ``v`` so that ``(w|w) = 1``.

    Raises
    ------
    SelfOrthogonal
        If ``|(v|v)| < rtol * sum |v_n|^2``.  Such a vector belongs to an
        exceptional point and has to be paired with a complement vector instead.
    """
    v = np.asarray(v, dtype=complex)
    if is_self_orthogonal(v, rtol):
        raise SelfOrthogonal(f"|(v|v)|/|v|^2 = {self_overlap_ratio(v):.3e} below {rtol:g}")
    return v / principal_sqrt(complex(np.sum(v * v)))


def _check_real_symmetric(h: np.ndarray, atol: float) -> np.ndarray:
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {h.shape}")
    scale = max(1.0, float(np.max(np.abs(h)))) if h.size else 1.0
    if np.iscomplexobj(h):
        if np.max(np.abs(h.imag), initial=0.0) > atol * scale:
            raise ContractViolation("matrix has a non-negligible imaginary part")
        h = h.real
    if np.max(np.abs(h - h.T), initial=0.0) > atol * scale:
        raise ContractViolation("matrix is not symmetric")
    return np.asarray(h, dtype=float)


def hermitian_eigensolve(h, atol: float = 1e-12):
    """Eigen-decomposition of a real symmetric matrix.

    Returns
    -------
    values : ndarray, shape (N,)
        Ascending eigenvalues.
    vectors : ndarray, shape (N, N)
        Real orthonormal eigenvectors stored as *rows*, ``vectors[k]`` belongs
        to ``values[k]``.
    """
    h = _check_real_symmetric(np.asarray(h), atol)
    values, vecs = np.linalg.eigh(0.5 * (h + h.T))
    return values, np.ascontiguousarray(vecs.T)


def degenerate_groups(values, tol: float) -> list[list[int]]:
    """Group indices of sorted ``values`` whose neighbours differ by at most ``tol``."""
    groups: list[list[int]] = []
    for k, e in enumerate(values):
        if groups and abs(e - values[groups[-1][-1]]) <= tol:
            groups[-1].append(k)
        else:
            groups.append([k])
    return groups


def rotate_degenerate(values, vectors, perturbation, tol: float):
    """Fix the basis inside degenerate eigenspaces.

    Within each group of eigenvalues closer than ``tol`` the eigenvectors are
    rotated so that they diagonalize ``perturbation`` (real symmetric).  At an
    exact level crossing this picks out the two straight-line eigenvectors.

    Returns rotated ``(values, vectors, slopes)`` where ``slopes[k]`` is
    ``v_k^T perturbation v_k`` (Hellmann-Feynman derivative).
    """
    values = np.array(values, dtype=float)
    vectors = np.array(vectors, dtype=float)
    p = np.asarray(perturbation).real
    for group in degenerate_groups(values, tol):
        if len(group) < 2:
            continue
        sub = vectors[group]
        proj = sub @ p @ sub.T
        w, u = np.linalg.eigh(0.5 * (proj + proj.T))
        vectors[group] = u.T @ sub
    slopes = np.einsum("kn,nm,km->k", vectors, p, vectors)
    return values, vectors, slopes


def diag_2x2(m):
    """Closed-form eigenpairs of a 2x2 complex matrix.

    Eigenvectors are c-normalized unless self-orthogonal.  The pair whose
    vector leans more on the first basis direction comes first; ties put the
    eigenvalue with larger real part first.

    Raises
    ------
    Defective
        When the two eigenvalues coincide (relative gap below 1e-12) but the
        matrix is not a multiple of the identity.
    """
    m = np.asarray(m, dtype=complex)
    if m.shape != (2, 2):
        raise DimensionError(f"diag_2x2 needs a 2x2 matrix, got {m.shape}")
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    scale = max(float(np.max(np.abs(m))), np.finfo(float).tiny)
    half_tr = 0.5 * (a + d)
    disc = principal_sqrt(0.25 * (a - d) ** 2 + b * c)
    if abs(disc) <= DEGENERATE_RTOL * scale:
        if max(abs(b), abs(c), abs(a - d)) <= DEGENERATE_RTOL * scale:
            return np.array([a, d]), np.eye(2, dtype=complex)
        raise Defective(f"2x2 matrix is a Jordan block (discriminant {abs(disc):.3e})")
    vals = [half_tr + disc, half_tr - disc]
    vecs = []
    for mu in vals:
        cand1 = np.array([b, mu - a])
        cand2 = np.array([mu - d, c])
        w = cand1 if np.linalg.norm(cand1) >= np.linalg.norm(cand2) else cand2
        w = w / np.linalg.norm(w)
        if not is_self_orthogonal(w):
            w = c_normalize(w)
        k = int(np.argmax(np.abs(w)))
        if w[k].real < 0.0 or (w[k].real == 0.0 and w[k].imag < 0.0):
            w = -w
        vecs.append(w)
    lead = [abs(w[0]) for w in vecs]
    if lead[1] > lead[0] + 1e-12:
        vals.reverse()
        vecs.reverse()
    elif abs(lead[1] - lead[0]) <= 1e-12 and vals[1].real > vals[0].real:
        vals.reverse()
        vecs.reverse()
    return np.array(vals), np.array(vecs)
