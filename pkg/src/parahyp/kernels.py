"""Image-series heat kernels of the unit strip.

``gbar`` is the Dirichlet Green's function of ``u_y = u_xx`` on
``0 < x < 1``, built by the method of images; ``N`` is its companion with
the reflected images added instead of subtracted. Both keep the images at
distance ``|x -+ xi + 2n| <= 2K``, which covers ``n = -K+1..K-1`` in full
and pairs every image with its mirror. All evaluators broadcast over numpy
arrays.

Two elementary identities are used throughout:

    d/dxi N(x, y, xi, eta) = -d/dx Gbar(x, y, xi, eta)
    d/dxi Gbar(x, y, xi, eta) = -d/dx N(x, y, xi, eta)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erf

__all__ = [
    "KernelConfig",
    "KernelDomainError",
    "eval_gbar",
    "eval_n",
    "eval_gbar_dx",
    "eval_gbar_dxi",
    "n_scaled",
    "n_xi_integral",
    "gbar_dx_moment_weights",
    "truncation_bound",
]

SQRT_PI = np.sqrt(np.pi)


class KernelDomainError(ValueError):
    """Kernel requested at a time separation below ``s_min``."""


@dataclass(frozen=True)
class KernelConfig:
    K: int = 8
    s_min: float = 1e-14

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ValueError(f"K must be a positive integer, got {self.K!r}")
        if not self.s_min > 0:
            raise ValueError("s_min must be positive")

    @property
    def images(self) -> np.ndarray:
        """Image indices that can contribute for ``x, xi`` in ``[0, 1]``."""
        return np.arange(-self.K - 1, self.K + 2, dtype=float)


def _separation(y, eta, cfg: KernelConfig) -> np.ndarray:
    s = np.asarray(y, dtype=float) - np.asarray(eta, dtype=float)
    if np.any(s < cfg.s_min):
        raise KernelDomainError(
            f"time separation y-eta={np.min(s):.3g} below s_min={cfg.s_min:g}"
        )
    return s


def _ordered_sum(terms: np.ndarray) -> np.ndarray:
    """Sum over axis 0 sequentially in order of increasing magnitude.

    Equal multisets of terms then give bit-identical sums, so image pairs
    that cancel mathematically cancel exactly, and images far below the
    rounding level of the result leave it unchanged.
    """
    order = np.argsort(np.abs(terms), axis=0, kind="stable")
    terms = np.take_along_axis(terms, order, axis=0)
    total = np.zeros(terms.shape[1:])
    for row in terms:
        total = total + row
    return total


def _image_sums(x, xi, s, cfg: KernelConfig, weight):
    """``sum_n [weight(x-xi+2n) , weight(x+xi+2n)]`` as a pair of arrays."""
    x, xi, s = np.broadcast_arrays(
        np.asarray(x, dtype=float), np.asarray(xi, dtype=float), s
    )
    # (x + 2n) first: then x = 0, x = 1 and x = xi = 1/2 give exactly opposite arguments
    n = np.arange(-cfg.K - 1, cfg.K + 2, dtype=float)
    shifted = x + 2.0 * n.reshape((-1,) + (1,) * x.ndim)
    return tuple(_ordered_sum(_window(shifted + sign * xi, s, cfg.K, weight)) for sign in (-1.0, 1.0))


def _window(z, s, K, weight):
    """``weight(z, s)`` for images with ``|z| <= 2K``, zero beyond.

    Truncating by distance rather than by index keeps the mirror partner of
    every retained image, on both edges of the strip.
    """
    return np.where(np.abs(z) <= 2.0 * K, weight(z, s), 0.0)


def _gauss(z, s):
    return np.exp(-(z * z) / (4.0 * s))


def _gauss_dz(z, s):
    return -z / (2.0 * s) * np.exp(-(z * z) / (4.0 * s))


def eval_gbar(x, y, xi, eta, cfg: KernelConfig = KernelConfig()):
    """Dirichlet Green's function of the strip, truncated image series."""
    s = _separation(y, eta, cfg)
    d, m = _image_sums(x, xi, s, cfg, _gauss)
    return (d - m) / (2.0 * np.sqrt(np.pi * s))


def eval_n(x, y, xi, eta, cfg: KernelConfig = KernelConfig()):
    """Companion kernel with ``+`` between the image families."""
    s = _separation(y, eta, cfg)
    d, m = _image_sums(x, xi, s, cfg, _gauss)
    return (d + m) / (2.0 * np.sqrt(np.pi * s))


def eval_gbar_dx(x, y, xi, eta, cfg: KernelConfig = KernelConfig()):
    """Derivative of :func:`eval_gbar` in its first argument ``x``."""
    s = _separation(y, eta, cfg)
    d, m = _image_sums(x, xi, s, cfg, _gauss_dz)
    return (d - m) / (2.0 * np.sqrt(np.pi * s))


def eval_gbar_dxi(x, y, xi, eta, cfg: KernelConfig = KernelConfig()):
    """Derivative of :func:`eval_gbar` in ``xi``, via the ``x <-> xi`` symmetry."""
    return eval_gbar_dx(xi, y, x, eta, cfg)


def n_scaled(x, xi, s, cfg: KernelConfig = KernelConfig()):
    """``sqrt(s) * N(x, eta+s, xi, eta)``, extended continuously to ``s = 0``.

    This is the smooth factor left after pulling ``s^(-1/2)`` out of the
    kernel. At ``s = 0`` only images landing exactly on ``x`` survive.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise KernelDomainError("negative time separation")
    safe = np.where(s > 0, s, 1.0)
    d, m = _image_sums(x, xi, safe, cfg, _gauss)
    val = (d + m) / (2.0 * SQRT_PI)
    if np.any(s == 0):
        shape = val.shape
        n2 = 2.0 * cfg.images.reshape((-1,) + (1,) * len(shape))
        xb, xib = np.broadcast_arrays(np.asarray(x, float), np.asarray(xi, float))
        xb = np.broadcast_to(xb, shape)
        xib = np.broadcast_to(xib, shape)
        hits = (np.isclose(xb - xib + n2, 0.0, atol=1e-15).sum(axis=0)
                + np.isclose(xb + xib + n2, 0.0, atol=1e-15).sum(axis=0))
        val = np.where(s == 0, hits / (2.0 * SQRT_PI), val)
    return val


def n_xi_integral(x, y, a, b, eta=0.0, cfg: KernelConfig = KernelConfig()):
    """``∫_a^b N(x, y, xi, eta) dxi`` in closed form (sums of ``erf``)."""
    s = _separation(y, eta, cfg)
    r = 2.0 * np.sqrt(s)
    x, a, b, r = np.broadcast_arrays(
        np.asarray(x, float), np.asarray(a, float), np.asarray(b, float), r
    )
    n2 = 2.0 * cfg.images.reshape((-1,) + (1,) * x.ndim)
    direct = erf((b - x - n2) / r) - erf((a - x - n2) / r)
    mirror = erf((b + x + n2) / r) - erf((a + x + n2) / r)
    return 0.5 * (direct + mirror).sum(axis=0)


def gbar_dx_moment_weights(x0: float, y, nodes: np.ndarray, cfg: KernelConfig = KernelConfig()):
    """Weights for ``∫_0^1 tau(xi) Gbar_x(x0, y, xi, 0) dxi`` with ``tau`` piecewise linear.

    Returns an array of shape ``y.shape + (len(nodes),)``; contracting it with
    nodal values of ``tau`` gives the integral of the interpolant exactly
    (up to series truncation). Uses ``Gbar_x = -N_xi`` and one integration by
    parts, so only boundary values of ``N`` and its cell integrals appear.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    nodes = np.asarray(nodes, dtype=float)
    h = np.diff(nodes)
    cell = n_xi_integral(x0, y[:, None], nodes[None, :-1], nodes[None, 1:], 0.0, cfg)
    slope_w = cell / h  # weight of each cell's slope
    w = np.zeros((y.size, nodes.size))
    w[:, :-1] -= slope_w
    w[:, 1:] += slope_w
    w[:, 0] += eval_n(x0, y, nodes[0], 0.0, cfg)
    w[:, -1] -= eval_n(x0, y, nodes[-1], 0.0, cfg)
    return w


def truncation_bound(K: int, s: float) -> float:
    """Upper bound on the dropped tail ``|n| > K`` of either image series.

    Every dropped image has ``|x ± xi + 2n| > 2K``, with at most two such
    sequences per family, and consecutive terms shrink by at least
    ``exp(-(2K+1)/s)``. Valid for ``0 < s <= 1``; increasing in ``s``
    there and decreasing in ``K``.
    """
    if K < 1 or not s > 0:
        raise ValueError("need K >= 1 and s > 0")
    ratio = np.exp(-(2 * K + 1) / s)
    return float(4.0 * np.exp(-K * K / s) / ((1.0 - ratio) * 2.0 * np.sqrt(np.pi * s)))
