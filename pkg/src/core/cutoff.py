"""
Cutoff Module
Smootherstep cutoff on the enlarged cube [-1, 2]^3 that equals 1 on the unit cube
"""

import logging
from typing import Dict, Tuple

import numpy as np

logger = logging.getLogger(__name__)

ENLARGED_CUBE = (-1.0, 2.0)


def smootherstep(t: np.ndarray, order: int = 0) -> np.ndarray:
    """
    S(t) = 6t^5 - 15t^4 + 10t^3 clamped to 0 below t = 0 and 1 above t = 1, or its derivatives

    Args:
        t: sample points
        order: 0, 1 or 2
    """
    t = np.asarray(t, dtype=float)
    inside = (t > 0.0) & (t < 1.0)
    s = np.clip(t, 0.0, 1.0)
    if order == 0:
        return s ** 3 * (s * (6.0 * s - 15.0) + 10.0)
    if order == 1:
        return np.where(inside, 30.0 * s ** 2 * (s - 1.0) ** 2, 0.0)
    if order == 2:
        return np.where(inside, 60.0 * s * (s - 1.0) * (2.0 * s - 1.0), 0.0)
    raise ValueError(f"smootherstep derivative order must be 0, 1 or 2, got {order}")


def profile(t: np.ndarray, order: int = 0) -> np.ndarray:
    """One-dimensional factor phi(t) = S(t + 1) S(2 - t) and its derivatives"""
    rising = [smootherstep(t + 1.0, k) for k in range(order + 1)]
    falling = [smootherstep(2.0 - t, k) * (-1.0) ** k for k in range(order + 1)]
    if order == 0:
        return rising[0] * falling[0]
    if order == 1:
        return rising[1] * falling[0] + rising[0] * falling[1]
    return rising[2] * falling[0] + 2.0 * rising[1] * falling[1] + rising[0] * falling[2]


class CutoffFunction:
    """chi(x) = phi(x1) phi(x2) phi(x3), C^2 with chi = 1 on [0,1]^3 and chi = 0 on the boundary of [-1,2]^3"""

    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def value(self, x1: np.ndarray, x2: np.ndarray, x3: np.ndarray) -> np.ndarray:
        return profile(x1) * profile(x2) * profile(x3)

    def gradient(self, x1: np.ndarray, x2: np.ndarray, x3: np.ndarray) -> np.ndarray:
        p = [profile(x) for x in (x1, x2, x3)]
        dp = [profile(x, 1) for x in (x1, x2, x3)]
        return np.stack([dp[0] * p[1] * p[2], p[0] * dp[1] * p[2], p[0] * p[1] * dp[2]])

    def hessian(self, x1: np.ndarray, x2: np.ndarray, x3: np.ndarray) -> np.ndarray:
        coords = (x1, x2, x3)
        p = [profile(x) for x in coords]
        dp = [profile(x, 1) for x in coords]
        d2p = [profile(x, 2) for x in coords]
        shape = np.broadcast(x1, x2, x3).shape
        result = np.empty((3, 3) + shape)
        for i in range(3):
            for j in range(i, 3):
                factors = []
                for axis in range(3):
                    if i == j == axis:
                        factors.append(d2p[axis])
                    elif axis in (i, j):
                        factors.append(dp[axis])
                    else:
                        factors.append(p[axis])
                result[i, j] = factors[0] * factors[1] * factors[2]
                result[j, i] = result[i, j]
        return result

    def laplacian(self, x1: np.ndarray, x2: np.ndarray, x3: np.ndarray) -> np.ndarray:
        p = [profile(x) for x in (x1, x2, x3)]
        d2p = [profile(x, 2) for x in (x1, x2, x3)]
        return d2p[0] * p[1] * p[2] + p[0] * d2p[1] * p[2] + p[0] * p[1] * d2p[2]

    def sampled_maxima(self, sample_n: int) -> Dict[str, float]:
        """
        Maxima of the derivative magnitudes over a sample_n^3 tensor grid on [-1, 2]^3

        Separable quantities are maximized through their one-dimensional factors; the
        Laplacian and the Frobenius norms are swept one x1 slice at a time.

        Returns:
            Dict with second_pure, first, second_mixed, laplacian, gradient_norm, hessian_norm
        """
        t = np.linspace(ENLARGED_CUBE[0], ENLARGED_CUBE[1], sample_n)
        p, dp, d2p = profile(t), profile(t, 1), profile(t, 2)
        p_max = float(np.max(np.abs(p)))
        maxima = {
            'second_pure': float(np.max(np.abs(d2p))) * p_max ** 2,
            'first': float(np.max(np.abs(dp))) * p_max ** 2,
            'second_mixed': float(np.max(np.abs(dp))) ** 2 * p_max,
        }

        pp = np.outer(p, p)
        lap_tail = np.outer(d2p, p) + np.outer(p, d2p)
        grad_tail = np.outer(dp, p) ** 2 + np.outer(p, dp) ** 2
        mixed = np.outer(dp, dp)
        diag_tail = np.outer(d2p, p) ** 2 + np.outer(p, d2p) ** 2
        laplacian, gradient_norm, hessian_norm = 0.0, 0.0, 0.0
        for a in range(sample_n):
            laplacian = max(laplacian, float(np.max(np.abs(d2p[a] * pp + p[a] * lap_tail))))
            gradient_sq = (dp[a] * pp) ** 2 + p[a] ** 2 * grad_tail
            gradient_norm = max(gradient_norm, float(np.sqrt(np.max(gradient_sq))))
            # off-diagonal entries appear twice in the Frobenius sum
            hessian_sq = ((d2p[a] * pp) ** 2 + p[a] ** 2 * diag_tail
                          + 2.0 * (dp[a] * np.outer(dp, p)) ** 2 + 2.0 * (dp[a] * np.outer(p, dp)) ** 2
                          + 2.0 * (p[a] * mixed) ** 2)
            hessian_norm = max(hessian_norm, float(np.sqrt(np.max(hessian_sq))))
        maxima.update(laplacian=laplacian, gradient_norm=gradient_norm, hessian_norm=hessian_norm)
        self.logger.debug(f"Cutoff derivative maxima on {sample_n}^3 samples: {maxima}")
        return maxima

    @staticmethod
    def smootherstep_extrema() -> Tuple[float, float]:
        """Closed-form (max |S'|, max |S''|) on [0, 1]: 15/8 at t = 1/2 and 10/sqrt(3) at t = (3 -/+ sqrt(3))/6"""
        return 15.0 / 8.0, 10.0 / np.sqrt(3.0)
