"""Non-redundant correlation-inducing precoder ``W = P^(1/2)``.

``P`` has unit diagonal and every off-diagonal entry equal to ``p``, i.e.
``P = (1 - p) I + p 11^T``.  Its eigenvalues are ``1 - p`` (multiplicity
``N - 1``) and ``1 + (N - 1) p`` along the all-ones vector, so the square
root and its inverse keep the same identity-plus-rank-one form and can be
applied in O(N).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class PrecoderMatrix:
    """``W = a I + b 11^T`` and ``W^-1 = a_inv I + b_inv 11^T``."""

    n: int
    p: float
    a: float
    b: float
    a_inv: float
    b_inv: float

    def precode(self, d):
        d = np.asarray(d, dtype=np.complex128)
        self._check(d)
        return self.a * d + self.b * d.sum(axis=-1, keepdims=True)

    def deprecode(self, z):
        z = np.asarray(z, dtype=np.complex128)
        self._check(z)
        return self.a_inv * z + self.b_inv * z.sum(axis=-1, keepdims=True)

    def _check(self, v):
        if v.shape[-1] != self.n:
            raise ValueError(f"vector length {v.shape[-1]} != precoder size {self.n}")

    def matrix(self) -> np.ndarray:
        """Dense ``W``; for tests and exact-statistics work only."""
        return self.a * np.eye(self.n) + self.b * np.ones((self.n, self.n))

    def inverse_matrix(self) -> np.ndarray:
        return self.a_inv * np.eye(self.n) + self.b_inv * np.ones((self.n, self.n))

    def correlation(self) -> np.ndarray:
        """``P = W W``: unit diagonal, ``p`` off the diagonal."""
        return (1 - self.p) * np.eye(self.n) + self.p * np.ones((self.n, self.n))

    @property
    def is_identity(self) -> bool:
        return self.p == 0.0


def build_precoder(n: int, p: float) -> PrecoderMatrix:
    if not 0.0 <= p < 1.0:
        raise ConfigurationError(f"precoding constant must lie in [0, 1), got {p}")
    if n < 1:
        raise ConfigurationError(f"precoder size must be positive, got {n}")
    small = np.sqrt(1.0 - p)
    big = np.sqrt(1.0 + (n - 1) * p)
    return PrecoderMatrix(
        n=n,
        p=float(p),
        a=small,
        b=(big - small) / n,
        a_inv=1.0 / small,
        b_inv=(1.0 / big - 1.0 / small) / n,
    )
