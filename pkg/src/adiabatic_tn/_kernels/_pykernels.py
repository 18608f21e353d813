"""Reference numpy implementation of the TEBD two-site update."""

from __future__ import annotations

import numpy as np

from ..linalg import svd


def truncation_rank(s: np.ndarray, cutoff: float, max_bond: int) -> tuple[int, float, bool]:
    """Number of singular values to keep.

    Values are dropped smallest-first while the accumulated discarded
    fraction of the squared weight stays at or below ``cutoff``; the result
    is then capped at ``max_bond``. Returns ``(rank, discarded, saturated)``
    where ``saturated`` flags that the cap forced a discard above ``cutoff``.
    """
    w = s * s
    total = w.sum()
    if total <= 0.0:
        return 1, 0.0, False
    # tail[k] = weight discarded when keeping k values
    tail = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]]) / total
    keep = int(np.argmax(tail <= cutoff))
    keep = max(keep, 1)
    saturated = False
    if keep > max_bond:
        keep = max_bond
        saturated = tail[keep] > cutoff
    return keep, float(tail[keep]), bool(saturated)


def two_site_update(
    a: np.ndarray,
    b: np.ndarray,
    gate: np.ndarray,
    cutoff: float,
    max_bond: int,
    absorb_right: bool,
) -> tuple[np.ndarray, np.ndarray, float, bool]:
    """Apply ``gate`` to the bond between ``a`` and ``b`` and re-split by SVD.

    ``a`` has shape (l, d1, m), ``b`` has shape (m, d2, r) and ``gate`` acts
    on the combined (d1 * d2) physical index. The singular values are
    absorbed into the right tensor when ``absorb_right`` (orthogonality
    centre moves right) and into the left one otherwise. The kept weight is
    rescaled so the norm of the two-site block is unchanged.
    """
    l, d1, _ = a.shape
    _, d2, r = b.shape
    theta = np.tensordot(a, b, axes=(2, 0)).reshape(l, d1 * d2, r)
    theta = np.einsum("pq,lqr->lpr", gate, theta).reshape(l * d1, d2 * r)
    u, s, vh = svd(theta)
    keep, discarded, saturated = truncation_rank(s, cutoff, max_bond)
    norm_all = np.sqrt(np.sum(s * s))
    s = s[:keep]
    norm_kept = np.sqrt(np.sum(s * s))
    if norm_kept > 0.0:
        s = s * (norm_all / norm_kept)
    u = u[:, :keep]
    vh = vh[:keep]
    if absorb_right:
        vh = s[:, None] * vh
    else:
        u = u * s
    return u.reshape(l, d1, keep), vh.reshape(keep, d2, r), discarded, saturated
