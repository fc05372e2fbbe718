"""Gaussian beliefs and central moments of polynomial maps of Gaussian deviations."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Sequence, Tuple, Union

import numpy as np

from kofx.core.exceptions import ContractViolation, UnsupportedOrderError
from kofx.models.moments import CentralMomentDocument, Tensor
from kofx.moments.isserlis import DEFAULT_ORDER_CAP, IsserlisTable, check_covariance, check_real
from kofx.poly.polynomial import MultiIndex, Polynomial

logger = logging.getLogger(__name__)

SUPPORTED_ORDERS = (2, 3, 4)
@dataclass(frozen=True, eq=False)
class GaussianBelief:
    """``x ~ N(mean, covariance)``."""

    mean: Any
    covariance: Any

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=float).ravel()
        cov = check_covariance(self.covariance, mean.size)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @classmethod
    def isotropic(cls, mean: Sequence[float], sigma: float) -> GaussianBelief:
        mean_arr = np.asarray(mean, dtype=float)
        return cls(mean_arr, sigma**2 * np.eye(mean_arr.size))

    @property
    def dim(self) -> int:
        return int(self.mean.size)

    def sample(self, rng: np.random.Generator, size: int) -> Any:
        """Draws of shape (size, d)."""
        return rng.multivariate_normal(self.mean, self.covariance, size=size, method="eigh")


def _symmetric_tensor(dim: int, order: int, value: Callable[[Tuple[int, ...]], float]) -> Any:
    tensor = np.zeros((dim,) * order)
    for combo in itertools.combinations_with_replacement(range(dim), order):
        v = value(combo)
        for perm in set(itertools.permutations(combo)):
            tensor[perm] = v
    return tensor


@dataclass(frozen=True, eq=False)
class CentralMomentSet:
    """Mean and central moments up to ``order``."""

    order: int
    mean: Any
    covariance: Any
    skewness: Union[Any, None] = None
    kurtosis: Union[Any, None] = None

    def __post_init__(self) -> None:
        if self.order not in SUPPORTED_ORDERS:
            raise UnsupportedOrderError(self.order)
        if (self.skewness is None) != (self.order < 3) or (self.kurtosis is None) != (self.order < 4):
            raise ContractViolation(f"Tensors present do not match order {self.order}")

    @property
    def dim(self) -> int:
        return int(np.asarray(self.mean).size)

    def sigma_summary(self) -> Dict[str, Any]:
        """Per-axis sigma, signed cube root of S_iii and fourth root of K_iiii."""
        idx = np.arange(self.dim)
        summary: Dict[str, Any] = {
            "mean": np.asarray(self.mean, dtype=float),
            "sigma": np.sqrt(np.clip(np.diag(self.covariance), 0.0, None)),
        }
        if self.skewness is not None:
            summary["sigma_skew"] = np.cbrt(self.skewness[idx, idx, idx])
        if self.kurtosis is not None:
            summary["sigma_kurt"] = np.abs(self.kurtosis[idx, idx, idx, idx]) ** 0.25
        return summary

    def to_document(self, t: Union[float, None] = None) -> CentralMomentDocument:
        return CentralMomentDocument(
            t=t,
            order=self.order,
            mean=Tensor.from_array(self.mean),
            covariance=Tensor.from_array(self.covariance),
            skewness=None if self.skewness is None else Tensor.from_array(self.skewness),
            kurtosis=None if self.kurtosis is None else Tensor.from_array(self.kurtosis),
        )

    @classmethod
    def from_document(cls, document: CentralMomentDocument) -> CentralMomentSet:
        return cls(
            order=document.order,
            mean=document.mean.to_array(),
            covariance=document.covariance.to_array(),
            skewness=None if document.skewness is None else document.skewness.to_array(),
            kurtosis=None if document.kurtosis is None else document.kurtosis.to_array(),
        )


def gaussian_kurtosis(covariance: Any) -> Any:
    """Fourth central moments of a Gaussian: ``P_ij P_lm + P_il P_jm + P_im P_jl``."""
    P = np.asarray(covariance, dtype=float)
    return (
        np.einsum("ij,lm->ijlm", P, P)
        + np.einsum("il,jm->ijlm", P, P)
        + np.einsum("im,jl->ijlm", P, P)
    )


def gaussian_moment_set(belief: GaussianBelief, psi: int = 4) -> CentralMomentSet:
    """Moments of the belief itself (zero skewness, Isserlis kurtosis)."""
    if psi not in SUPPORTED_ORDERS:
        raise UnsupportedOrderError(psi)
    d = belief.dim
    return CentralMomentSet(
        order=psi,
        mean=belief.mean.copy(),
        covariance=belief.covariance.copy(),
        skewness=np.zeros((d, d, d)) if psi >= 3 else None,
        kurtosis=gaussian_kurtosis(belief.covariance) if psi >= 4 else None,
    )


class MomentEngine:
    """Expectations of products of polynomials in ``dx ~ N(0, covariance)``.

    Products are reduced to quadratic forms against a Gram matrix of monomial
    expectations ``G[a, b] = E[dx^(a + b)]``, so no product beyond pairs is ever
    expanded.
    """

    def __init__(self, covariance: Any, cap: int = DEFAULT_ORDER_CAP) -> None:
        self.table = IsserlisTable(covariance, cap)
        self.dim = self.table.dim

    def _check(self, polys: Sequence[Polynomial]) -> None:
        for p in polys:
            if p.dim != self.dim:
                raise ContractViolation(f"Polynomial has {p.dim} variables, expected {self.dim}")
            check_real(p)

    @staticmethod
    def _support(polys: Sequence[Polynomial]) -> List[MultiIndex]:
        return sorted({k for p in polys for k in p.terms})

    @staticmethod
    def _coefficients(polys: Sequence[Polynomial], support: Sequence[MultiIndex]) -> Any:
        return np.array([p.coefficient_vector(support).real for p in polys]).reshape(
            len(polys), len(support)
        )

    def gram(self, rows: Sequence[MultiIndex], cols: Sequence[MultiIndex]) -> Any:
        G = np.zeros((len(rows), len(cols)))
        for r, a in enumerate(rows):
            deg_a = sum(a)
            for c, b in enumerate(cols):
                if (deg_a + sum(b)) % 2:
                    continue
                G[r, c] = self.table.moment(tuple(x + y for x, y in zip(a, b)))
        return G

    def means(self, polys: Sequence[Polynomial]) -> Any:
        self._check(polys)
        support = self._support(polys)
        moments = np.array([self.table.moment(k) for k in support])
        return self._coefficients(polys, support) @ moments

    def centered(self, polys: Sequence[Polynomial]) -> List[Polynomial]:
        means = self.means(polys)
        return [p.real_part() - float(m) for p, m in zip(polys, means)]

    def cross_covariance(self, left: Sequence[Polynomial], right: Sequence[Polynomial]) -> Any:
        """``E[a b^T]`` for already-centered vectors ``a`` and ``b``."""
        self._check(left)
        self._check(right)
        rows, cols = self._support(left), self._support(right)
        return self._coefficients(left, rows) @ self.gram(rows, cols) @ self._coefficients(right, cols).T

    def _pair_products(self, centered: Sequence[Polynomial]) -> Tuple[Dict[Tuple[int, int], int], List[Polynomial]]:
        pairs: Dict[Tuple[int, int], int] = {}
        products: List[Polynomial] = []
        for i, j in itertools.combinations_with_replacement(range(len(centered)), 2):
            pairs[(i, j)] = len(products)
            products.append(centered[i] * centered[j])
        return pairs, products

    def third_moments(self, centered: Sequence[Polynomial]) -> Any:
        self._check(centered)
        pairs, products = self._pair_products(centered)
        table = self.cross_covariance(products, centered)
        return _symmetric_tensor(len(centered), 3, lambda c: table[pairs[(c[0], c[1])], c[2]])

    def fourth_moments(self, centered: Sequence[Polynomial]) -> Any:
        self._check(centered)
        pairs, products = self._pair_products(centered)
        table = self.cross_covariance(products, products)
        return _symmetric_tensor(
            len(centered), 4, lambda c: table[pairs[(c[0], c[1])], pairs[(c[2], c[3])]]
        )


def propagate_moments(
    flow: Sequence[Polynomial],
    belief: GaussianBelief,
    psi: int = 4,
    cap: int = DEFAULT_ORDER_CAP,
) -> CentralMomentSet:
    """Central moments of ``flow(dx)`` for ``dx ~ N(0, belief.covariance)``.

    ``flow`` must already be centered at ``belief.mean``.
    """
    if psi not in SUPPORTED_ORDERS:
        raise UnsupportedOrderError(psi)
    flow = list(flow)
    if not flow:
        raise ContractViolation("Flow must contain at least one polynomial")
    if any(p.dim != belief.dim for p in flow):
        raise ContractViolation(f"Flow polynomials must have {belief.dim} variables")

    engine = MomentEngine(belief.covariance, cap)
    mean = engine.means(flow)
    centered = engine.centered(flow)
    cov = engine.cross_covariance(centered, centered)
    cov = 0.5 * (cov + cov.T)
    skewness = engine.third_moments(centered) if psi >= 3 else None
    kurtosis = engine.fourth_moments(centered) if psi >= 4 else None
    logger.debug(f"Propagated moments to order {psi} using {len(engine.table)} Isserlis entries")
    return CentralMomentSet(psi, mean, cov, skewness, kurtosis)
