"""One-step and whole-path execution of the stochastic Runge-Kutta methods.

The step computes the stage values

    H_i^0 = x + h sum_j A0[i,j] f^0(H_j^0) + sqrt(h) sum_{j,q} B0[i,j] Theta[0][q] f^q(H_j^q)
    H_i^p = x + h Theta[p][0] sum_j A1[i,j] f^0(H_j^0)
              + sqrt(h) sum_{j,q} B1[i,j] Theta[p][q] f^q(H_j^q)

(for Stratonovich the diagonal q = p contribution uses Bhat1 instead of B1)
and the update

    x' = x + h sum_i alpha_i f^0(H_i^0) + sqrt(h) sum_{i,p} beta_i theta_p f^p(H_i^p).

Stages are evaluated in the topological order induced by the nonzero
coefficient entries when one exists (drift and stochastic stages may
interleave); otherwise the full stage vector is solved by fixed-point
iteration with tolerance ``1e-13 * (1 + |x|)`` in the max norm and an
iteration cap of 200.  Each diffusion value f^q(H_j^q) is computed once per
(j, q) and reused everywhere it appears, which is what makes the optimal
per-step evaluation counts attainable.

States are 1-D arrays of length d; everything also runs vectorized over a
leading batch axis (states of shape (n, d)), which the Monte Carlo harness
uses.  ``step`` is a pure function of its arguments: identical inputs give
bit-identical outputs.  Vector fields must accept batched states (n, d) and
return arrays of the same shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import randvars
from .randvars import ITO, STRATONOVICH, NoiseDraw, RvFamily
from .tableau import MethodTableau, stage_evaluation_order

__all__ = [
    "SdeProblem",
    "StepError",
    "ImplicitSolveError",
    "NonFiniteStateError",
    "step",
    "integrate_path",
    "integrate_paths",
    "family_for_method",
    "LangevinState",
    "langevin_postprocessed_step",
    "langevin_chain",
    "FIXED_POINT_TOL",
    "FIXED_POINT_MAXITER",
]

FIXED_POINT_TOL = 1e-13
FIXED_POINT_MAXITER = 200


class StepError(RuntimeError):
    pass


class ImplicitSolveError(StepError):
    """Fixed-point iteration for the implicit stages failed to converge."""


class NonFiniteStateError(StepError):
    """A step produced a non-finite state; carries the step context."""

    def __init__(self, message, *, h=None, method=None, where=None):
        super().__init__(message)
        self.h = h
        self.method = method
        self.where = where


class SdeProblem:
    """An SDE ``dX = f^0 dt + sum_p f^p dW^p`` with instrumented field evaluations.

    ``fields[p]`` maps states of shape (n, d) to arrays of the same shape;
    ``eval_counts[p]`` counts the calls made to field p (one per call,
    regardless of batch width).
    """

    def __init__(self, d: int, m: int, calculus: str, fields: Sequence[Callable], label: str = ""):
        if len(fields) != m + 1:
            raise ValueError(f"need m+1 = {m + 1} fields, got {len(fields)}")
        self.d = int(d)
        self.m = int(m)
        self.calculus = calculus
        self.fields = tuple(fields)
        self.label = label
        self.eval_counts = np.zeros(m + 1, dtype=np.int64)

    def eval_field(self, p: int, x: np.ndarray) -> np.ndarray:
        self.eval_counts[p] += 1
        return self.fields[p](x)

    def reset_counts(self) -> None:
        self.eval_counts[:] = 0

    @property
    def drift_evals(self) -> int:
        return int(self.eval_counts[0])

    @property
    def diffusion_evals(self) -> np.ndarray:
        return self.eval_counts[1:].copy()


def family_for_method(t: MethodTableau) -> RvFamily:
    return RvFamily.make(t.calculus, t.c)


def _nonzero_cols(row: np.ndarray):
    return [j for j in range(row.shape[0]) if row[j] != 0.0]


def _stage_terms(problem, t, xb, h, theta, Theta):
    """Evaluate all stage field values; returns (F0 list, Fst list).

    F0[i] is f^0 at drift stage i, shape (n, d); Fst[j] stacks f^q at
    stochastic stage j over q, shape (n, m, d).
    """
    s1, s2, m = t.s1, t.s2, problem.m
    sqh = math.sqrt(h)
    strato = t.calculus == STRATONOVICH
    Th0q = Theta[:, 0, 1:]            # (n, m)
    Thp0 = Theta[:, 1:, 0]            # (n, m)
    Thpq = Theta[:, 1:, 1:]           # (n, m, m)
    if strato:
        Th_off = Thpq.copy()
        idx = np.arange(m)
        Th_diag = Thpq[:, idx, idx]   # (n, m)
        Th_off[:, idx, idx] = 0.0

    F0 = [None] * s1
    Fst = [None] * s2
    U = [None] * s2                    # sum_q Theta[0][q] f^q(H_j^q), (n, d)
    V = [None] * s2                    # (n, m, d): row p is sum over q entering H_i^p

    def mix(j):
        U[j] = np.einsum("nq,nqd->nd", Th0q, Fst[j])
        if strato:
            V[j] = np.einsum("npq,nqd->npd", Th_off, Fst[j])
        else:
            V[j] = np.einsum("npq,nqd->npd", Thpq, Fst[j])

    def drift_value(i):
        acc = xb.copy()
        for j in _nonzero_cols(t.A0[i]):
            acc += (h * t.A0[i, j]) * F0[j]
        for j in _nonzero_cols(t.B0[i]):
            acc += (sqh * t.B0[i, j]) * U[j]
        return acc

    def stoch_values(i):
        acc = np.broadcast_to(xb[:, None, :], (xb.shape[0], m, xb.shape[1])).copy()
        cols = _nonzero_cols(t.A1[i])
        if cols:
            da = sum(t.A1[i, j] * F0[j] for j in cols)
            acc += h * Thp0[:, :, None] * da[:, None, :]
        for j in _nonzero_cols(t.B1[i]):
            acc += (sqh * t.B1[i, j]) * V[j]
        if strato:
            for j in _nonzero_cols(t.Bhat1[i]):
                acc += (sqh * t.Bhat1[i, j]) * (Th_diag[:, :, None] * Fst[j])
        return acc

    order = stage_evaluation_order(t)
    if order is not None:
        for kind, i in order:
            if kind == "drift":
                F0[i] = problem.eval_field(0, drift_value(i))
            else:
                H = stoch_values(i)
                Fst[i] = np.stack(
                    [problem.eval_field(p, H[:, p - 1, :]) for p in range(1, m + 1)], axis=1
                )
                mix(i)
        return F0, Fst

    # implicit: fixed-point iteration on the full stage vector
    n, d = xb.shape
    H0 = np.broadcast_to(xb, (s1, n, d)).copy()
    Hs = np.broadcast_to(xb[:, None, :], (s2, n, m, d)).copy()
    tol = FIXED_POINT_TOL * (1.0 + float(np.max(np.abs(xb))))
    for _ in range(FIXED_POINT_MAXITER):
        for i in range(s1):
            F0[i] = problem.eval_field(0, H0[i])
        for j in range(s2):
            Fst[j] = np.stack(
                [problem.eval_field(p, Hs[j][:, p - 1, :]) for p in range(1, m + 1)], axis=1
            )
            mix(j)
        H0_new = np.stack([drift_value(i) for i in range(s1)])
        Hs_new = np.stack([stoch_values(i) for i in range(s2)])
        delta = 0.0
        if H0_new.size:
            delta = max(delta, float(np.max(np.abs(H0_new - H0))))
        if Hs_new.size:
            delta = max(delta, float(np.max(np.abs(Hs_new - Hs))))
        H0, Hs = H0_new, Hs_new
        if delta <= tol:
            return F0, Fst
    raise ImplicitSolveError(
        f"stage fixed point for {t.name} did not reach {tol:.3g} within "
        f"{FIXED_POINT_MAXITER} iterations (h={h})"
    )


def _apply_step(problem, t, xb, h, theta, Theta):
    F0, Fst = _stage_terms(problem, t, xb, h, theta, Theta)
    out = xb.copy()
    for i in range(t.s1):
        if t.alpha[i] != 0.0:
            out += (h * t.alpha[i]) * F0[i]
    sqh = math.sqrt(h)
    th = theta[:, 1:]
    for j in range(t.s2):
        if t.beta[j] != 0.0:
            out += (sqh * t.beta[j]) * np.einsum("np,npd->nd", th, Fst[j])
    return out


def _check_step_args(problem: SdeProblem, t: MethodTableau, h: float, draw: Optional[NoiseDraw]):
    if h <= 0.0:
        raise ValueError(f"step size must be positive, got {h}")
    if problem.calculus != t.calculus:
        raise ValueError(
            f"calculus mismatch: problem is {problem.calculus}, method {t.name} is {t.calculus}"
        )
    if draw is not None:
        if draw.m != problem.m:
            raise ValueError(f"draw has m={draw.m}, problem has m={problem.m}")
        if draw.calculus != t.calculus:
            raise ValueError(
                f"draw is from a {draw.calculus} family, method {t.name} is {t.calculus}"
            )


def step(problem: SdeProblem, t: MethodTableau, x, h: float, draw: NoiseDraw) -> np.ndarray:
    """One method step from state ``x`` using the given per-step draw."""
    _check_step_args(problem, t, h, draw)
    x = np.asarray(x, dtype=float)
    xb = x.reshape(1, problem.d)
    out = _apply_step(problem, t, xb, h, draw.theta[None, :], draw.Theta[None, :, :])
    if not np.all(np.isfinite(out)):
        raise NonFiniteStateError(
            f"non-finite state after one {t.name} step (h={h})", h=h, method=t.name
        )
    return out.reshape(x.shape)


def integrate_path(
    problem: SdeProblem,
    t: MethodTableau,
    x0,
    h: float,
    n_steps: int,
    rng: np.random.Generator,
    family: Optional[RvFamily] = None,
) -> np.ndarray:
    """n-fold composition of :func:`step` with a fresh draw per step."""
    family = family or family_for_method(t)
    x = np.asarray(x0, dtype=float)
    for k in range(n_steps):
        draw = randvars.sample_draw(family, problem.m, rng)
        try:
            x = step(problem, t, x, h, draw)
        except NonFiniteStateError as exc:
            raise NonFiniteStateError(
                f"non-finite state at step {k + 1}/{n_steps} of {t.name} (h={h})",
                h=h,
                method=t.name,
                where=k,
            ) from exc
    return x


def integrate_paths(
    problem: SdeProblem,
    t: MethodTableau,
    x0,
    h: float,
    n_steps: int,
    n_paths: int,
    rng: np.random.Generator,
    family: Optional[RvFamily] = None,
) -> np.ndarray:
    """Vectorized batch of independent paths sharing one generator stream.

    The random variables are pre-drawn path-major (path 0 consumes its whole
    per-step sequence first, then path 1, ...), so a batch is bit-identical to
    stepping the paths one after another with the same generator.
    """
    _check_step_args(problem, t, h, None)
    family = family or family_for_method(t)
    m = problem.m
    k = family.uniforms_per_step(m)
    u = rng.random((n_paths, n_steps, k))
    x = np.broadcast_to(np.asarray(x0, dtype=float), (n_paths, problem.d)).copy()
    for s in range(n_steps):
        theta, Theta = randvars.draws_from_uniforms(family, m, u[:, s, :])
        x = _apply_step(problem, t, x, h, theta, Theta)
        if not np.all(np.isfinite(x)):
            bad = int(np.flatnonzero(~np.isfinite(x).all(axis=1))[0])
            raise NonFiniteStateError(
                f"non-finite state at step {s + 1}/{n_steps} of {t.name} "
                f"(h={h}, first bad path {bad})",
                h=h,
                method=t.name,
                where=(s, bad),
            )
    return x


# ---------------------------------------------------------------------------
# postprocessed integrator for invariant-measure sampling


@dataclass
class LangevinState:
    """Chain state (x, postprocessed xbar of the previous step, cached F(xbar))."""

    x: np.ndarray
    xbar: np.ndarray
    f_xbar: Optional[np.ndarray] = None


def langevin_postprocessed_step(
    F: Callable,
    D: Callable,
    state: LangevinState,
    h: float,
    draw: NoiseDraw,
) -> LangevinState:
    """One step of the postprocessed invariant-measure scheme.

        H      = x + (h/4) F(xbar_prev)
        xbar   = x + sqrt(h/2) sum_p D[:,p](H) theta_p
        x_next = x + h F(xbar)
                   + sqrt(2h) sum_p D[:,p](H + sqrt(h/2) sum_q D[:,q](H) Theta[p][q]) theta_p

    ``F`` maps (n, d) -> (n, d) and ``D`` maps (n, d) -> (n, d, m).  With the
    cached ``F(xbar)`` threaded through the state, each step costs one F
    evaluation and m+1 D evaluations (the shared D(H) plus one p-shifted
    evaluation per noise column, i.e. two evaluations per column).  The draw
    only uses theta_p and the mixed Theta[p][q], so the Ito c=1/2 family is
    used throughout.
    """
    x = np.atleast_2d(np.asarray(state.x, dtype=float))
    xbar_prev = np.atleast_2d(np.asarray(state.xbar, dtype=float))
    squeeze = np.asarray(state.x).ndim == 1

    f_prev = state.f_xbar
    if f_prev is None:
        f_prev = F(xbar_prev)
    f_prev = np.atleast_2d(f_prev)

    theta = np.atleast_2d(draw.theta)[:, 1:]          # (n, m)
    Theta = draw.Theta[None, 1:, 1:] if draw.Theta.ndim == 2 else draw.Theta[:, 1:, 1:]
    m = theta.shape[1]

    H = x + (h / 4.0) * f_prev
    DH = D(H)                                          # (n, d, m)
    root_half_h = math.sqrt(h / 2.0)
    xbar = x + root_half_h * np.einsum("ndp,np->nd", DH, theta)
    f_cur = F(xbar)

    inner = H[:, None, :] + root_half_h * np.einsum("ndq,npq->npd", DH, Theta)
    cols = np.stack([D(inner[:, p, :])[:, :, p] for p in range(m)], axis=2)  # (n, d, m)
    x_next = x + h * f_cur + math.sqrt(2.0 * h) * np.einsum("ndp,np->nd", cols, theta)

    if not (np.all(np.isfinite(x_next)) and np.all(np.isfinite(xbar))):
        raise NonFiniteStateError("non-finite state in postprocessed step", h=h)
    if squeeze:
        return LangevinState(x_next[0], xbar[0], f_cur[0])
    return LangevinState(x_next, xbar, f_cur)


def langevin_chain(
    F: Callable,
    D: Callable,
    x0,
    m: int,
    h: float,
    n_steps: int,
    rng: np.random.Generator,
    n_chains: int = 1,
    observer: Optional[Callable] = None,
) -> LangevinState:
    """Run the postprocessed chain for ``n_steps`` steps over ``n_chains``
    parallel replicas; calls ``observer(step_index, xbar)`` after each step.

    Randomness is pre-drawn chain-major per block of steps, so results are a
    pure function of (seed, parameters).
    """
    family = RvFamily.make(ITO, 0.5)
    d = np.asarray(x0, dtype=float).shape[-1] if np.asarray(x0).ndim else 1
    x = np.broadcast_to(np.asarray(x0, dtype=float), (n_chains, d)).copy()
    state = LangevinState(x, x.copy(), None)
    k = family.uniforms_per_step(m)
    block = max(1, min(n_steps, int(2e6 // max(1, n_chains * k))))
    done = 0
    while done < n_steps:
        todo = min(block, n_steps - done)
        u = rng.random((n_chains, todo, k))
        for s in range(todo):
            theta, Theta = randvars.draws_from_uniforms(family, m, u[:, s, :])
            draw = NoiseDraw(m=m, calculus=ITO, theta=theta, Theta=Theta)
            state = langevin_postprocessed_step(F, D, state, h, draw)
            if observer is not None:
                observer(done + s, state.xbar)
        done += todo
    return state
