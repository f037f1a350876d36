"""
Projection onto the column space of the series design

M a = Q_r Q_r' a from a column-pivoted QR of P; M is never formed. Columns
whose pivot falls below the relative tolerance are dropped, which is the
"remove the redundant regressors" generalized inverse.
"""
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from ..models.data import DesignMatrix
from ..utils.config import get_config


class SeriesProjector:
    """Rank-revealing orthogonal decomposition of a design matrix"""

    def __init__(self, p: np.ndarray, tolerance: Optional[float] = None):
        """
        Factor a design matrix

        Args:
            p: n x K design
            tolerance: Relative pivot tolerance (defaults to the configured value)
        """
        self.p = np.asarray(p, dtype=float)
        self.n, self.k = self.p.shape
        self.tolerance = get_config().PIVOT_TOLERANCE if tolerance is None else tolerance

        if self.k == 0:
            self.q = np.zeros((self.n, 0))
            self.r = np.zeros((0, 0))
            self.pivot = np.zeros(0, dtype=int)
            self.rank = 0
            return

        q, r, pivot = linalg.qr(self.p, mode="economic", pivoting=True)
        diag = np.abs(np.diag(r))
        # |R_00| is the largest column norm under pivoting
        threshold = self.tolerance * diag[0] if diag.size and diag[0] > 0 else 0.0
        rank = int(np.sum(diag > threshold)) if diag.size and diag[0] > 0 else 0

        self.q = q[:, :rank]
        self.r = r[:rank, :rank]
        self.pivot = pivot
        self.rank = rank

    @property
    def dropped_columns(self) -> np.ndarray:
        """Original indices of columns treated as redundant"""
        return np.sort(self.pivot[self.rank:])

    def project(self, a: np.ndarray) -> np.ndarray:
        """M a"""
        a = np.asarray(a, dtype=float)
        return self.q @ (self.q.T @ a)

    def annihilate(self, a: np.ndarray) -> np.ndarray:
        """(I - M) a"""
        a = np.asarray(a, dtype=float)
        return a - self.project(a)

    def solve(self, b: np.ndarray) -> np.ndarray:
        """
        Basic least-squares coefficients (P'P)^- P' b

        Redundant columns receive zero coefficients.
        """
        b = np.asarray(b, dtype=float)
        coef = np.zeros((self.k,) + b.shape[1:])
        if self.rank:
            coef[self.pivot[:self.rank]] = linalg.solve_triangular(self.r, self.q.T @ b)
        return coef

    def leverage(self) -> np.ndarray:
        """Diagonal of the hat matrix"""
        return np.einsum("ij,ij->i", self.q, self.q)


def project(P, a: np.ndarray, tolerance: Optional[float] = None) -> Tuple[np.ndarray, int]:
    """
    Project columns of a onto the column space of P

    Args:
        P: DesignMatrix or n x K array
        a: n x m (or length-n) array
        tolerance: Relative pivot tolerance

    Returns:
        (M a, effective rank of P)
    """
    matrix = P.p if isinstance(P, DesignMatrix) else P
    projector = SeriesProjector(matrix, tolerance=tolerance)
    return projector.project(a), projector.rank


def joint_least_squares(y: np.ndarray, w: np.ndarray, p: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    One-shot least squares of y on [W, P]

    Returns:
        (gamma, alpha)
    """
    w = np.asarray(w, dtype=float).reshape(len(y), -1)
    coef, _, _, _ = linalg.lstsq(np.hstack([w, p]), y)
    return coef[:w.shape[1]], coef[w.shape[1]:]
