"""Dense third-order tensor kernels.

Tensors are plain ``numpy.ndarray`` objects of shape ``(I1, I2, I3)``. Modes
are numbered 1, 2, 3 as in the usual multilinear notation. The mode-n
unfolding places mode-n fibers as columns, with the lowest remaining mode
index varying fastest, so that

    unfold(G x1 B1 x2 B2 x3 B3, 1) == B1 @ unfold(G, 1) @ kron(B3, B2).T
"""

import numpy as np

from .errors import ArgumentError, NumericError, UndefinedMetricError

__all__ = [
    "as_tensor",
    "unfold",
    "fold",
    "mode_n_product",
    "multi_mode_product",
    "khatri_rao",
    "lstsq",
    "explained_variance",
]


def as_tensor(t):
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 3:
        raise ArgumentError(f"expected a 3rd-order tensor, got ndim={t.ndim}")
    if min(t.shape) < 1:
        raise ArgumentError(f"tensor dimensions must be positive, got {t.shape}")
    return t


def _check_mode(mode):
    if mode not in (1, 2, 3):
        raise ArgumentError(f"mode must be 1, 2 or 3, got {mode!r}")
    return mode - 1


def unfold(t, mode):
    """Mode-``mode`` unfolding of a 3rd-order tensor.

    Parameters
    ----------
    t : array_like, shape (I1, I2, I3)
    mode : {1, 2, 3}

    Returns
    -------
    ndarray, shape (I_mode, prod of the other two dims)
    """
    t = as_tensor(t)
    axis = _check_mode(mode)
    return np.reshape(np.moveaxis(t, axis, 0), (t.shape[axis], -1), order="F")


def fold(m, mode, dims):
    """Inverse of :func:`unfold` for a tensor of shape ``dims``."""
    axis = _check_mode(mode)
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3:
        raise ArgumentError(f"dims must have length 3, got {dims}")
    m = np.asarray(m, dtype=np.float64)
    rest = [d for i, d in enumerate(dims) if i != axis]
    if m.shape != (dims[axis], rest[0] * rest[1]):
        raise ArgumentError(f"matrix of shape {m.shape} cannot fold into {dims} along mode {mode}")
    t = np.reshape(m, [dims[axis]] + rest, order="F")
    return np.moveaxis(t, 0, axis)


def mode_n_product(t, m, mode):
    """Multiply tensor ``t`` by matrix ``m`` along ``mode``.

    ``m`` must have as many columns as ``t`` has entries along ``mode``; the
    result has ``m.shape[0]`` entries there.
    """
    t = as_tensor(t)
    axis = _check_mode(mode)
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] != t.shape[axis]:
        raise ArgumentError(
            f"matrix of shape {m.shape} does not match tensor dim {t.shape[axis]} on mode {mode}"
        )
    dims = list(t.shape)
    dims[axis] = m.shape[0]
    return fold(m @ unfold(t, mode), mode, dims)


def multi_mode_product(core, factors):
    """Full Tucker reconstruction ``core x1 B1 x2 B2 x3 B3``."""
    b1, b2, b3 = factors
    core = as_tensor(core)
    out = b1 @ unfold(core, 1) @ np.kron(b3, b2).T
    return fold(out, 1, (b1.shape[0], b2.shape[0], b3.shape[0]))


def khatri_rao(a, b):
    """Column-wise Kronecker product of two matrices with equal column count."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ArgumentError("khatri_rao expects two matrices")
    if a.shape[1] != b.shape[1]:
        raise ArgumentError(f"column counts differ: {a.shape[1]} vs {b.shape[1]}")
    return np.einsum("ir,jr->ijr", a, b).reshape(a.shape[0] * b.shape[0], a.shape[1])


def lstsq(a, y):
    """Minimum-norm least-squares solution ``X`` of ``a @ X ~= y``.

    Uses an SVD with singular values below ``eps * max(a.shape) * s_max``
    treated as zero, so rank-deficient systems are handled.
    """
    a = np.asarray(a, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if a.ndim != 2:
        raise ArgumentError("lstsq expects a matrix")
    if y.shape[0] != a.shape[0]:
        raise ArgumentError(f"row mismatch: a has {a.shape[0]} rows, y has {y.shape[0]}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(y))):
        raise NumericError("lstsq input contains non-finite entries")
    x, *_ = np.linalg.lstsq(a, y, rcond=None)
    return x


def explained_variance(x, xhat):
    """Fraction of the squared Frobenius norm of ``x`` captured by ``xhat``."""
    x = np.asarray(x, dtype=np.float64)
    xhat = np.asarray(xhat, dtype=np.float64)
    if x.shape != xhat.shape:
        raise ArgumentError(f"shape mismatch: {x.shape} vs {xhat.shape}")
    total = np.sum(x * x)
    if total == 0.0:
        raise UndefinedMetricError("explained variance is undefined for an all-zero tensor")
    resid = x - xhat
    return float(1.0 - np.sum(resid * resid) / total)
