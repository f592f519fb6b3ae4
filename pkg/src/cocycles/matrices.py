"""
Matrices Module

Closed-form helpers for real 2x2 matrices of determinant one (Mat2): spectral
norms, singular directions, adjugate inverses, projective action on angles,
and log-scale accumulation of long products.

All functions accept stacks of shape (..., 2, 2) unless stated otherwise.
Products are ordered as cocycle products: for factors M_0, ..., M_{n-1}
(applied in that order) the product is M_{n-1} ... M_1 M_0.
"""

import logging

import numpy as np

from src.utils.configuration import default_value

logger = logging.getLogger("matrices")

IDENTITY = np.eye(2)


def mat2(a, b, c, d):
    """Build the matrix [[a, b], [c, d]]."""
    return np.array([[a, b], [c, d]], dtype=float)


def determinant(m):
    m = np.asarray(m, dtype=float)
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


def normalize_determinant(m, det_tol=None, labels=None):
    """
    Validate Mat2 entries, renormalizing by 1/sqrt(det) where |det - 1| > det_tol.

    Args:
        m (array-like): matrix or stack of shape (..., 2, 2)
        det_tol (float, optional): Determinant tolerance. Defaults to config 'cocycle.det_tol'.
        labels (sequence, optional): Names of the stack entries used in error messages. Defaults to None.

    Returns:
        tuple: (entries with unit determinant, boolean mask of renormalized entries)

    Raises:
        ValueError: If an entry is not 2x2, not finite, or has det <= 0
    """
    det_tol = default_value('cocycle.det_tol') if det_tol is None else det_tol
    m = np.array(m, dtype=float)
    if m.ndim < 2 or m.shape[-2:] != (2, 2):
        raise ValueError(f"Expected 2x2 matrices, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("Matrix entries must be finite")
    dets = np.asarray(determinant(m))
    if np.any(dets <= 0.0):
        worst = np.unravel_index(int(np.argmin(dets)), dets.shape) if dets.ndim else ()
        name = labels[worst[0]] if labels is not None and worst else "matrix"
        raise ValueError(f"Entry '{name}' has nonpositive determinant {float(np.min(dets)):.3e}")
    off = np.abs(dets - 1.0) > det_tol
    if np.any(off):
        logger.warning(f"Renormalized {int(np.count_nonzero(off))} entries to unit determinant")
        m = np.where(off[..., None, None], m / np.sqrt(dets)[..., None, None], m)
    return m, off


def singular_values(m):
    """
    Closed-form singular values (sigma_max, sigma_min) of 2x2 matrices.
    """
    m = np.asarray(m, dtype=float)
    a, b, c, d = m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1]
    s1 = np.hypot(a + d, b - c)
    s2 = np.hypot(a - d, b + c)
    return 0.5 * (s1 + s2), 0.5 * np.abs(s1 - s2)


def spectral_norm(m):
    return singular_values(m)[0]


def log_norm(m):
    return np.log(spectral_norm(m))


def inverse(m):
    """Adjugate inverse; exact for unit determinant."""
    m = np.asarray(m, dtype=float)
    inv = np.empty_like(m)
    inv[..., 0, 0] = m[..., 1, 1]
    inv[..., 0, 1] = -m[..., 0, 1]
    inv[..., 1, 0] = -m[..., 1, 0]
    inv[..., 1, 1] = m[..., 0, 0]
    return inv


def rotation(theta):
    return mat2(np.cos(theta), -np.sin(theta), np.sin(theta), np.cos(theta))


def schrodinger_matrix(g):
    """The matrix [[g, -1], [1, 0]] (unit determinant for every real g)."""
    g = np.asarray(g, dtype=float)
    out = np.zeros(g.shape + (2, 2))
    out[..., 0, 0] = g
    out[..., 0, 1] = -1.0
    out[..., 1, 0] = 1.0
    return out


def _identity_like(batch_shape):
    return np.broadcast_to(IDENTITY, tuple(batch_shape) + (2, 2)).copy()


# ----------------------------------------------------------------------
# Products
# ----------------------------------------------------------------------
def reduce_product(factors):
    """
    Product of a sequence of factors by pairwise reduction in log scale.

    Args:
        factors (ndarray): shape (..., n, 2, 2), factor k applied k-th

    Returns:
        tuple: (normalized product (..., 2, 2), log scale (...)) with
        product = exp(log scale) * normalized product
    """
    mats = np.asarray(factors, dtype=float)
    batch = mats.shape[:-3]
    n = mats.shape[-3]
    logs = np.zeros(batch + (n,))
    if n == 0:
        return _identity_like(batch), np.zeros(batch)
    while mats.shape[-3] > 1:
        if mats.shape[-3] % 2:
            pad = _identity_like(batch)[..., None, :, :]
            mats = np.concatenate([mats, pad], axis=-3)
            logs = np.concatenate([logs, np.zeros(batch + (1,))], axis=-1)
        mats = mats[..., 1::2, :, :] @ mats[..., 0::2, :, :]
        logs = logs[..., 0::2] + logs[..., 1::2]
        norms = spectral_norm(mats)
        mats = mats / norms[..., None, None]
        logs = logs + np.log(norms)
    return mats[..., 0, :, :], logs[..., 0]


def product_log_norm(factors):
    """log ||M_{n-1} ... M_0|| without overflow."""
    normalized, scale = reduce_product(factors)
    return scale + log_norm(normalized)


def accumulate(factors, renorm_interval=None, checkpoints=()):
    """
    Running products A_k = M_{k-1} ... M_0 for k = 1..n in one pass.

    The running product is renormalized by its norm every `renorm_interval`
    steps and the log of the norm is accumulated separately.

    Args:
        factors (ndarray): shape (..., n, 2, 2)
        renorm_interval (int, optional): Steps between renormalizations. Defaults to config 'cocycle.renorm_interval'.
        checkpoints (iterable of int, optional): k values whose (normalized product,
            log scale) pair is returned. Defaults to ().

    Returns:
        tuple: (log norms of shape (..., n), dict k -> (normalized product, log scale))
    """
    mats = np.asarray(factors, dtype=float)
    batch = mats.shape[:-3]
    n = mats.shape[-3]
    renorm_interval = default_value('cocycle.renorm_interval') if renorm_interval is None else renorm_interval
    wanted = set(int(k) for k in checkpoints)
    product = _identity_like(batch)
    scale = np.zeros(batch)
    log_norms = np.empty(batch + (n,))
    snapshots = {}
    for k in range(n):
        product = mats[..., k, :, :] @ product
        norms = spectral_norm(product)
        log_norms[..., k] = scale + np.log(norms)
        if (k + 1) % renorm_interval == 0 or (k + 1) in wanted:
            product = product / norms[..., None, None]
            scale = scale + np.log(norms)
        if (k + 1) in wanted:
            snapshots[k + 1] = (product.copy(), scale.copy())
    return log_norms, snapshots


# ----------------------------------------------------------------------
# Projective action
# ----------------------------------------------------------------------
def wrap_angle(theta):
    """Reduce projective angles to [-pi/2, pi/2)."""
    return (np.asarray(theta, dtype=float) + np.pi / 2) % np.pi - np.pi / 2


def angle_of(v):
    v = np.asarray(v, dtype=float)
    return wrap_angle(np.arctan2(v[..., 1], v[..., 0]))


def unit(theta):
    theta = np.asarray(theta, dtype=float)
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def act(m, theta):
    """Projective image angle of direction theta under m (broadcasting)."""
    v = unit(theta)
    image = np.einsum("...ij,...j->...i", np.asarray(m, dtype=float), v)
    return angle_of(image)


def stretch(m, theta):
    """||m u(theta)|| for the unit vector at angle theta."""
    v = unit(theta)
    image = np.einsum("...ij,...j->...i", np.asarray(m, dtype=float), v)
    return np.hypot(image[..., 0], image[..., 1])


def right_singular_angle(m):
    """Angle of the most expanded input direction (major axis of m^T m)."""
    m = np.asarray(m, dtype=float)
    a, b, c, d = m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1]
    p = a * a + c * c
    q = a * b + c * d
    r = b * b + d * d
    return wrap_angle(0.5 * np.arctan2(2.0 * q, p - r))


def left_singular_angle(m):
    """Angle of the most expanded output direction (major axis of m m^T)."""
    m = np.asarray(m, dtype=float)
    a, b, c, d = m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1]
    p = a * a + b * b
    q = a * c + b * d
    r = c * c + d * d
    return wrap_angle(0.5 * np.arctan2(2.0 * q, p - r))


def angular_distance(alpha, beta):
    """Distance between projective angles (in [0, pi/2])."""
    return np.abs(wrap_angle(np.asarray(alpha) - np.asarray(beta)))
