"""Discrete random-variable families driving the stochastic Runge-Kutta methods.

Per integration step the methods consume a fresh draw of independent discrete
variables ``eta_0..eta_m`` (symmetric signs) and ``theta_1..theta_m``, from
which the matrix entries ``Theta[p][q]`` are derived in closed form:

* Ito calculus: ``theta_p`` takes values ``+-sqrt(2 +- sqrt(3))`` (a four-point
  law with the first five Gaussian moments) and ``Theta[p][p] = -3 theta_p +
  theta_p^3``.
* Stratonovich calculus: ``theta_p`` takes values ``+-sqrt(3), 0`` and
  ``Theta[p][p] = theta_p``.

For ``c in (0, 1/2)``: ``Theta[0][p] = theta_p + eta_p sqrt(1/(2c) - 1)`` and
``Theta[p][0] = 1 - eta_p theta_p sqrt(2c/(1-2c))``; the ``c = 1/2`` variant
instead uses ``Theta[0][p] = theta_p`` and ``Theta[p][0] = 1`` and needs ``m+1``
scalar variables per step instead of ``2m+1`` (and only ``m`` when ``m = 1``,
since ``eta_0`` enters only the mixed entries ``Theta[p][q]``, p != q >= 1).

The sample space is finite, so every moment is available exactly through
:func:`enumerate_atoms` / :func:`moment`; the expectation checks elsewhere use
tolerance 1e-12 because the support points involve ``sqrt(3)`` arithmetic.

Families and atom tables are immutable and shareable; :func:`sample_draw`
requires exclusive access to its generator stream.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

ITO = "ito"
STRATONOVICH = "stratonovich"
CALCULI = (ITO, STRATONOVICH)

__all__ = [
    "ITO",
    "STRATONOVICH",
    "CALCULI",
    "RvFamily",
    "NoiseDraw",
    "AtomTable",
    "FamilyError",
    "CapacityError",
    "sample_draw",
    "enumerate_atoms",
    "moment",
    "draws_from_uniforms",
]

MAX_ATOM_NOISES = 3

_SQRT3 = math.sqrt(3.0)

# Ito four-point law for theta_p
_ITO_SUPPORT = (
    math.sqrt(2.0 + _SQRT3),
    -math.sqrt(2.0 + _SQRT3),
    math.sqrt(2.0 - _SQRT3),
    -math.sqrt(2.0 - _SQRT3),
)
_ITO_PROBS = (
    (3.0 - _SQRT3) / 12.0,
    (3.0 - _SQRT3) / 12.0,
    (3.0 + _SQRT3) / 12.0,
    (3.0 + _SQRT3) / 12.0,
)

# Stratonovich three-point law for theta_p
_STRAT_SUPPORT = (_SQRT3, -_SQRT3, 0.0)
_STRAT_PROBS = (1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0)


class FamilyError(ValueError):
    """Invalid family parameters (c out of range, variant mismatch)."""


class CapacityError(ValueError):
    """Exact enumeration requested beyond the supported noise count."""


@dataclass(frozen=True)
class RvFamily:
    """One of the method random-variable families: calculus, c, and the c=1/2 variant."""

    calculus: str
    c: float
    half_variant: bool

    def __post_init__(self):
        if self.calculus not in CALCULI:
            raise FamilyError(f"unknown calculus {self.calculus!r}")
        if not 0.0 < self.c <= 0.5:
            raise FamilyError(f"c must lie in (0, 1/2], got {self.c}")
        if self.half_variant != (self.c == 0.5):
            raise FamilyError("half_variant is required exactly when c = 1/2")

    @classmethod
    def make(cls, calculus: str, c: float) -> "RvFamily":
        return cls(calculus, float(c), float(c) == 0.5)

    @property
    def theta_support(self):
        if self.calculus == ITO:
            return _ITO_SUPPORT, _ITO_PROBS
        return _STRAT_SUPPORT, _STRAT_PROBS

    def rv_count(self, m: int) -> int:
        """Scalar random variables consumed per step (the N_r of the effort metric).

        theta_p for every noise, eta_p per noise unless the c=1/2 variant, and
        eta_0 only when there are mixed entries, i.e. m > 1.
        """
        n = m
        if not self.half_variant:
            n += m
        if m > 1:
            n += 1
        return n

    def uniforms_per_step(self, m: int) -> int:
        return self.rv_count(m)


@dataclass(frozen=True)
class NoiseDraw:
    """One step's realization: ``theta[0..m]`` with theta[0]=1 and the Theta matrix."""

    m: int
    calculus: str
    theta: np.ndarray
    Theta: np.ndarray


@dataclass(frozen=True)
class AtomTable:
    """The full finite sample space of a family: (probability, draw) atoms."""

    m: int
    family: RvFamily
    atoms: tuple


def _assemble(family: RvFamily, m: int, eta: np.ndarray, theta_raw: np.ndarray):
    """Build (theta, Theta) arrays from sign and theta variables.

    ``eta`` has shape (..., m+1) and ``theta_raw`` (..., m); the results are
    (..., m+1) and (..., m+1, m+1).
    """
    batch = eta.shape[:-1]
    theta = np.ones(batch + (m + 1,))
    theta[..., 1:] = theta_raw
    Theta = np.zeros(batch + (m + 1, m + 1))
    Theta[..., 0, 0] = 1.0
    if family.half_variant:
        Theta[..., 0, 1:] = theta_raw
        Theta[..., 1:, 0] = 1.0
    else:
        c = family.c
        a = math.sqrt(1.0 / (2.0 * c) - 1.0)
        b = math.sqrt(2.0 * c / (1.0 - 2.0 * c))
        Theta[..., 0, 1:] = theta_raw + a * eta[..., 1:]
        Theta[..., 1:, 0] = 1.0 - b * eta[..., 1:] * theta_raw
    if family.calculus == ITO:
        diag = -3.0 * theta_raw + theta_raw**3
    else:
        diag = theta_raw
    for p in range(1, m + 1):
        Theta[..., p, p] = diag[..., p - 1]
    if m > 1:
        plus = 1.0 + eta[..., 0]
        minus = 1.0 - eta[..., 0]
        for p in range(1, m + 1):
            for q in range(1, m + 1):
                if q > p:
                    Theta[..., p, q] = theta_raw[..., q - 1] * plus
                elif q < p:
                    Theta[..., p, q] = theta_raw[..., q - 1] * minus
    return theta, Theta


def _theta_from_uniform(family: RvFamily, u: np.ndarray) -> np.ndarray:
    support, probs = family.theta_support
    edges = np.cumsum(probs)
    out = np.full(u.shape, support[-1])
    for value, edge in zip(reversed(support[:-1]), reversed(edges[:-1])):
        out = np.where(u < edge, value, out)
    return out


def draws_from_uniforms(family: RvFamily, m: int, u: np.ndarray):
    """Map uniforms of shape (..., rv_count(m)) to batched (theta, Theta) arrays.

    Column layout: eta_0 first (only when m > 1), then theta_1..theta_m, then
    eta_1..eta_m (only without the c=1/2 variant).  One uniform is consumed
    per scalar random variable, so stream usage per step equals ``rv_count``.
    """
    k = family.uniforms_per_step(m)
    u = np.asarray(u)
    if u.shape[-1] != k:
        raise ValueError(f"expected {k} uniforms per draw, got {u.shape[-1]}")
    batch = u.shape[:-1]
    eta = np.ones(batch + (m + 1,))
    col = 0
    if m > 1:
        eta[..., 0] = np.where(u[..., col] < 0.5, 1.0, -1.0)
        col += 1
    theta_raw = _theta_from_uniform(family, u[..., col : col + m])
    col += m
    if not family.half_variant:
        eta[..., 1:] = np.where(u[..., col : col + m] < 0.5, 1.0, -1.0)
    return _assemble(family, m, eta, theta_raw)


def sample_draw(family: RvFamily, m: int, rng: np.random.Generator) -> NoiseDraw:
    """Sample one step's draw; consumes exactly ``rv_count(m)`` uniforms from rng."""
    if m < 1:
        raise ValueError("need at least one noise")
    u = rng.random(family.uniforms_per_step(m))
    theta, Theta = draws_from_uniforms(family, m, u)
    theta.setflags(write=False)
    Theta.setflags(write=False)
    return NoiseDraw(m=m, calculus=family.calculus, theta=theta, Theta=Theta)


_ATOM_CACHE: dict = {}


def enumerate_atoms(family: RvFamily, m: int) -> AtomTable:
    """Every joint outcome of (eta_0..eta_m, theta_1..theta_m) with its probability."""
    if m < 1:
        raise ValueError("need at least one noise")
    if m > MAX_ATOM_NOISES:
        raise CapacityError(f"atom enumeration supports m <= {MAX_ATOM_NOISES}")
    key = (family.calculus, family.c, family.half_variant, m)
    cached = _ATOM_CACHE.get(key)
    if cached is not None:
        return cached
    support, probs = family.theta_support
    atoms = []
    eta_prob = 0.5 ** (m + 1)
    for etas in itertools.product((1.0, -1.0), repeat=m + 1):
        for idx in itertools.product(range(len(support)), repeat=m):
            prob = eta_prob
            for i in idx:
                prob *= probs[i]
            eta = np.array(etas)
            theta_raw = np.array([support[i] for i in idx])
            theta, Theta = _assemble(family, m, eta, theta_raw)
            theta.setflags(write=False)
            Theta.setflags(write=False)
            atoms.append((prob, NoiseDraw(m=m, calculus=family.calculus, theta=theta, Theta=Theta)))
    table = AtomTable(m=m, family=family, atoms=tuple(atoms))
    _ATOM_CACHE[key] = table
    return table


def _factor_value(draw: NoiseDraw, factor) -> float:
    kind = factor[0]
    if kind == "theta":
        (_, p) = factor
        return float(draw.theta[p])
    if kind == "Theta":
        (_, p, q) = factor
        return float(draw.Theta[p, q])
    raise ValueError(f"unknown factor kind {factor!r}")


def moment(family: RvFamily, m: int, monomial: Iterable) -> float:
    """Exact expectation of a monomial in the theta / Theta variables.

    ``monomial`` is an iterable of ``(factor, exponent)`` pairs with factor
    ``("theta", p)`` or ``("Theta", p, q)``; indices must not exceed ``m``.
    """
    monomial = list(monomial)
    for factor, _ in monomial:
        indices = factor[1:]
        if any(not 0 <= i <= m for i in indices):
            raise ValueError(f"factor {factor!r} references a noise index beyond m={m}")
    table = enumerate_atoms(family, m)
    total = 0.0
    for prob, draw in table.atoms:
        value = prob
        for factor, exponent in monomial:
            value *= _factor_value(draw, factor) ** exponent
            if value == 0.0:
                break
        total += value
    return total
