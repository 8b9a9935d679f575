"""Magnetic geodesics in left-trivialised exponential coordinates.

The state is ``(W, V)``: the base point ``exp(W)`` and the velocity ``V`` with
``gamma' = exp(W) V``.  The equations of motion are

    V' = F V + ad_transpose(V, V)
    W' = V + 1/2 [W, V]

All routines broadcast over leading axes, so a batch of initial conditions
is integrated in one pass.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IntegrationDiverged, InvalidInputError, MismatchedForceError
from .magnetic import LorentzForce
from .nilalgebra import MetricNilpotentAlgebra

DIVERGENCE_CAP = 1e12
METHODS = ("rk4", "rk4_refined")


@dataclass(frozen=True)
class PhaseState:
    """Base point ``W`` (exponential coordinates) and left-trivialised velocity ``V``."""

    W: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float)
        V = np.asarray(self.V, dtype=float)
        if W.shape != V.shape or W.ndim == 0:
            raise InvalidInputError(f"W and V shapes differ: {W.shape} vs {V.shape}")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(V))):
            raise InvalidInputError("phase state has non-finite entries")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "V", V)

    @property
    def dim(self) -> int:
        return self.W.shape[-1]


@dataclass
class Trajectory:
    """Recorded samples of an integration.

    ``W`` and ``V`` have shape ``(len(times),) + batch + (n,)``; each entry of
    ``samples`` has shape ``(len(times),) + batch``.
    """

    times: np.ndarray
    W: np.ndarray
    V: np.ndarray
    samples: dict = field(default_factory=dict)
    step: float = 0.0
    method: str = "rk4"
    error_estimate: float | None = None

    def state(self, index: int) -> PhaseState:
        return PhaseState(self.W[index], self.V[index])

    def drift(self, name: str) -> np.ndarray:
        """Per-trajectory relative drift of a recorded integral (see :func:`relative_drift`)."""
        return relative_drift(self.samples[name])


def relative_drift(values) -> np.ndarray:
    """``max_t |psi(t) - psi(0)| / max(1, |psi(0)|)`` along axis 0."""
    values = np.asarray(values, dtype=float)
    ref = values[0]
    return np.max(np.abs(values - ref), axis=0) / np.maximum(1.0, np.abs(ref))


def _force_parts(force, algebra):
    if isinstance(force, LorentzForce):
        return force.matrix, force.algebra
    if algebra is None:
        raise InvalidInputError("a raw force matrix needs an explicit algebra")
    if force is None:
        return np.zeros((algebra.dim, algebra.dim)), algebra
    return np.asarray(force, dtype=float), algebra


def velocity_rhs(V, force, algebra: MetricNilpotentAlgebra | None = None):
    """``V' = F V + ad_transpose(V, V)``.

    ``force`` is a LorentzForce, or a raw ``(..., n, n)`` matrix stack (one
    force per batch entry) together with ``algebra``.
    """
    F, algebra = _force_parts(force, algebra)
    V = np.asarray(V, dtype=float)
    algebra._check(V)
    if F.ndim == 2:
        fv = V @ F.T
    else:
        fv = np.einsum("...ij,...j->...i", F, V)
    return fv + algebra.ad_transpose(V, V)


def position_rhs(W, V, algebra: MetricNilpotentAlgebra):
    """``W' = V + 1/2 [W, V]``, the derivative of ``exp(W) exp(sV)`` at ``s = 0``."""
    V = np.asarray(V, dtype=float)
    return V + 0.5 * algebra.bracket(W, V)


def _rk4_run(W, V, F, algebra, h, nsteps, record_every, t0=0.0):
    def rhs(w, v):
        return position_rhs(w, v, algebra), velocity_rhs(v, F, algebra)

    n_rec = nsteps // record_every + 1
    Ws = np.empty((n_rec,) + W.shape)
    Vs = np.empty((n_rec,) + V.shape)
    times = np.empty(n_rec)
    Ws[0], Vs[0], times[0] = W, V, t0
    rec = 1
    for step in range(1, nsteps + 1):
        k1w, k1v = rhs(W, V)
        k2w, k2v = rhs(W + 0.5 * h * k1w, V + 0.5 * h * k1v)
        k3w, k3v = rhs(W + 0.5 * h * k2w, V + 0.5 * h * k2v)
        k4w, k4v = rhs(W + h * k3w, V + h * k3v)
        W_new = W + (h / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
        V_new = V + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        if not (np.max(np.abs(W_new)) < DIVERGENCE_CAP and np.max(np.abs(V_new)) < DIVERGENCE_CAP):
            raise IntegrationDiverged(t0 + (step - 1) * h)
        W, V = W_new, V_new
        if step % record_every == 0:
            Ws[rec], Vs[rec], times[rec] = W, V, t0 + step * h
            rec += 1
    return times, Ws, Vs


def _step_count(t_end, step):
    if not (np.isfinite(step) and step > 0):
        raise InvalidInputError(f"step must be positive, got {step!r}")
    if not (np.isfinite(t_end) and t_end > 0):
        raise InvalidInputError(f"t_end must be positive, got {t_end!r}")
    return max(1, math.ceil(t_end / step - 1e-9))


def integrate(
    state0: PhaseState,
    force: LorentzForce,
    t_end: float,
    step: float,
    method: str = "rk4",
    integrals=(),
    record_every: int = 1,
) -> Trajectory:
    """Fixed-step classical RK4 on the coupled ``(W, V)`` system.

    The effective step is ``t_end / N`` with ``N = ceil(t_end / step)``.
    ``rk4_refined`` additionally reruns at a tenth of the step and returns
    the refined samples, with ``error_estimate`` set to the largest state
    difference between the two runs at the recorded times.
    """
    if method not in METHODS:
        raise InvalidInputError(f"unknown method {method!r}; expected one of {METHODS}")
    if int(record_every) != record_every or record_every < 1:
        raise InvalidInputError("record_every must be a positive integer")
    algebra = force.algebra
    if state0.dim != algebra.dim:
        raise InvalidInputError(f"state has dimension {state0.dim}, algebra {algebra.dim}")
    for integral in integrals:
        check = getattr(integral, "check_force", None)
        if check is not None:
            check(force)
    nsteps = _step_count(t_end, step)
    h = t_end / nsteps
    times, Ws, Vs = _rk4_run(state0.W, state0.V, force.matrix, algebra, h, nsteps, record_every)
    error = None
    if method == "rk4_refined":
        _, Wf, Vf = _rk4_run(
            state0.W, state0.V, force.matrix, algebra, h / 10, nsteps * 10, record_every * 10
        )
        error = float(max(np.max(np.abs(Wf - Ws)), np.max(np.abs(Vf - Vs))))
        Ws, Vs = Wf, Vf
    samples = {integral.name: integral(Ws, Vs) for integral in integrals}
    return Trajectory(times, Ws, Vs, samples, step=h, method=method, error_estimate=error)


def rk4_batch(W0, V0, forces, algebra, t_end, step, record_every=1):
    """Integrate a batch where each entry has its own force matrix.

    ``forces`` has shape ``batch + (n, n)`` matching ``W0``/``V0``'s batch
    shape.  Returns ``(times, W, V)`` like :func:`integrate`.
    """
    nsteps = _step_count(t_end, step)
    h = t_end / nsteps
    W0 = np.asarray(W0, dtype=float)
    V0 = np.asarray(V0, dtype=float)
    return _rk4_run(W0, V0, np.asarray(forces, dtype=float), algebra, h, nsteps, record_every)


# -- chart oracle -------------------------------------------------------------
# The same curves seen in the global chart W -> exp(W) with the pulled-back
# metric, using only brackets and the inner product (no Koszul formula).


def chart_metric(W, algebra: MetricNilpotentAlgebra):
    """Metric coefficients ``g_W = L^T G L`` with ``L = I - 1/2 ad_W``."""
    L = np.eye(algebra.dim) - 0.5 * algebra.ad_matrix(W)
    return np.swapaxes(L, -1, -2) @ algebra.gram @ L


def chart_christoffel(W, algebra: MetricNilpotentAlgebra):
    """Christoffel symbols ``Gamma[..., k, i, j]`` of the chart metric."""
    n = algebra.dim
    L = np.eye(n) - 0.5 * algebra.ad_matrix(W)
    G = algebra.gram
    ad_e = algebra.ad_matrix(np.eye(n))  # (m, n, n): ad_{e_m}
    # dg[..., m, i, j] = d g_ij / d W_m
    dL = -0.5 * ad_e
    t1 = np.einsum("mki,kl,...lj->...mij", dL, G, L)
    dg = t1 + np.swapaxes(t1, -1, -2)
    ginv = np.linalg.inv(np.swapaxes(L, -1, -2) @ G @ L)
    # lower[..., l, i, j] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
    lower = 0.5 * (
        np.einsum("...ijl->...lij", dg) + np.einsum("...jil->...lij", dg) - dg
    )
    return np.einsum("...kl,...lij->...kij", ginv, lower)


def chart_velocity(W, V, algebra):
    """Coordinate velocity ``dW/dt`` of the left-trivialised velocity ``V``."""
    return position_rhs(W, V, algebra)


def acceleration_residual(state: PhaseState, force: LorentzForce, width: float = 1e-4) -> float:
    """Finite-difference covariant acceleration minus ``F gamma'``, measured in the metric.

    The curve through ``state`` is sampled at ``t = +-width`` by single RK4
    sub-steps of the integrator, differentiated by centred differences in the
    exponential chart and inserted into the chart's geodesic operator
    ``W'' + Gamma(W', W')``.  For a correct equation of motion this equals the
    chart components of ``F gamma'``.
    """
    algebra = force.algebra
    W, V = state.W, state.V
    _, Wp, _ = _rk4_run(W, V, force.matrix, algebra, width, 1, 1)
    _, Wm, _ = _rk4_run(W, V, force.matrix, algebra, -width, 1, 1)
    w_plus, w_minus = Wp[-1], Wm[-1]
    wdot = (w_plus - w_minus) / (2 * width)
    wddot = (w_plus - 2 * W + w_minus) / width**2
    gamma = chart_christoffel(W, algebra)
    accel = wddot + np.einsum("...kij,...i,...j->...k", gamma, wdot, wdot)
    lorentz = chart_velocity(W, force.apply(V), algebra)
    diff = accel - lorentz
    g = chart_metric(W, algebra)
    return np.sqrt(np.einsum("...i,...ij,...j->...", diff, g, diff))


def integrate_chart_geodesic(state0: PhaseState, algebra, t_end: float, step: float):
    """RK4 on ``W'' = -Gamma(W', W')`` in the exponential chart.

    Returns ``(times, W, V)`` with ``V`` converted back to the left
    trivialisation, for comparison with :func:`integrate` at ``F = 0``.
    """
    nsteps = _step_count(t_end, step)
    h = t_end / nsteps

    def rhs(w, u):
        gamma = chart_christoffel(w, algebra)
        return u, -np.einsum("...kij,...i,...j->...k", gamma, u, u)

    W = state0.W.copy()
    U = chart_velocity(state0.W, state0.V, algebra)
    Ws, Us = [W], [U]
    for _ in range(nsteps):
        k1w, k1u = rhs(W, U)
        k2w, k2u = rhs(W + 0.5 * h * k1w, U + 0.5 * h * k1u)
        k3w, k3u = rhs(W + 0.5 * h * k2w, U + 0.5 * h * k2u)
        k4w, k4u = rhs(W + h * k3w, U + h * k3u)
        W = W + (h / 6.0) * (k1w + 2 * k2w + 2 * k3w + k4w)
        U = U + (h / 6.0) * (k1u + 2 * k2u + 2 * k3u + k4u)
        Ws.append(W)
        Us.append(U)
    Ws = np.array(Ws)
    Us = np.array(Us)
    Vs = Us - 0.5 * algebra.bracket(Ws, Us)
    return np.linspace(0.0, nsteps * h, nsteps + 1), Ws, Vs


# -- output ------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(traj: Trajectory, path, index=()) -> None:
    """Wide CSV: ``t, W1..Wn, V1..Vn, <integral names>`` for one trajectory.

    ``index`` selects the batch entry when the trajectory is batched.
    """
    index = tuple(np.atleast_1d(index)) if index != () else ()
    n = traj.W.shape[-1]
    names = list(traj.samples)
    header = ["t"] + [f"W{i + 1}" for i in range(n)] + [f"V{i + 1}" for i in range(n)] + names
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r, t in enumerate(traj.times):
            row = [_fmt(t)]
            row += [_fmt(x) for x in traj.W[(r,) + index]]
            row += [_fmt(x) for x in traj.V[(r,) + index]]
            row += [_fmt(traj.samples[name][(r,) + index]) for name in names]
            writer.writerow(row)


def write_long_csv(traj: Trajectory, path, index=()) -> None:
    """Tidy CSV ``t, name, value`` of the recorded integrals, for external plotting."""
    index = tuple(np.atleast_1d(index)) if index != () else ()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "name", "value"])
        for r, t in enumerate(traj.times):
            for name, vals in traj.samples.items():
                writer.writerow([_fmt(t), name, _fmt(vals[(r,) + index])])
