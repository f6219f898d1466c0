"""Line-attractor network models of the oculomotor velocity-to-position
integrator, with rank-two cerebellar feedback as the perturbation.

The base matrix is block triangular,

    M = alpha * [[T, 0], [W, -I]],

with T an N x N tridiagonal lateral-connection matrix tuned so the top
eigenvalue of alpha*T is a chosen slow rate, W the two vestibular->Purkinje
readout rows, and the feedback entering as rho_i f_i g_i^T with
f_i = -alpha [u_i; 0; 0] and g_i the Purkinje coordinate picks (so rho_i > 0
is inhibitory feedback).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .kernel import eig_dense
from .lowrank import AKDecomposition, LowRankProblem, perturbed_matrix
from . import presets as _presets


class DivergentGainError(ArithmeticError):
    """Dominant left/right eigenvectors are orthogonal: gain is not defined."""


@dataclass(frozen=True)
class NetworkSpec:
    N: int
    alpha: float  # 1/seconds
    lambda1_target: float  # 1/seconds
    u1: np.ndarray
    u2: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    b: np.ndarray

    def __init__(self, N, alpha, lambda1_target, u1, u2, w1, w2, b):
        if N < 2:
            raise ValueError("need at least two vestibular units")
        if not 0.0 < lambda1_target < alpha:
            raise ValueError("lambda1_target must lie in (0, alpha)")
        arrs = {}
        for name, v in [("u1", u1), ("u2", u2), ("w1", w1), ("w2", w2), ("b", b)]:
            v = np.asarray(v, float)
            want = N + 2 if name == "b" else N
            if v.shape != (want,):
                raise ValueError(f"{name} must have length {want}")
            arrs[name] = v
        for name in ("u1", "u2"):
            v = arrs[name]
            if not (np.sum(v == 1.0) == 1 and np.sum(v == 0.0) == N - 1):
                raise ValueError(f"{name} must be a canonical basis vector")
        object.__setattr__(self, "N", int(N))
        object.__setattr__(self, "alpha", float(alpha))
        object.__setattr__(self, "lambda1_target", float(lambda1_target))
        for name, v in arrs.items():
            object.__setattr__(self, name, v)

    @property
    def beta(self) -> float:
        return beta_for(self.N, self.alpha, self.lambda1_target)


def beta_for(N: int, alpha: float, lambda1_target: float) -> float:
    return (1.0 - lambda1_target / alpha) / (1.0 + 2.0 * np.cos(np.pi / (N + 1)))


def build_T(N: int, alpha: float, lambda1_target: float):
    """Tridiagonal lateral-connection matrix and its gain parameter beta.

    T has -1 + beta on the diagonal and beta off it; lambda1_target is the
    slow decay rate (reciprocal time constant) of the uncoupled subnetwork,
    so beta is set to put the top eigenvalue of alpha*T at -lambda1_target.
    """
    if N < 2:
        raise ValueError("need at least two vestibular units")
    if not 0.0 < lambda1_target < alpha:
        raise ValueError("lambda1_target must lie in (0, alpha)")
    beta = beta_for(N, alpha, lambda1_target)
    T = np.diag(np.full(N, -1.0 + beta))
    T += np.diag(np.full(N - 1, beta), 1) + np.diag(np.full(N - 1, beta), -1)
    return T, beta


def _ag_spec(w1, w2) -> NetworkSpec:
    N = _presets.AG_N
    e = np.eye(N)
    b = np.concatenate([np.ones(N), np.zeros(2)])
    return NetworkSpec(
        N, _presets.AG_ALPHA, _presets.AG_LAMBDA1, e[0], e[2], w1, w2, b
    )


def preset_spec(name: str) -> NetworkSpec:
    """Built-in network parameter sets.

    'ag_normal' supports smooth gain adjustment; 'ag_in' models the miswired
    (congenital nystagmus) readout that drives the circuit oscillatory.
    """
    if name == "ag_normal":
        return _ag_spec([-1, 1, -1, 0, -1, 0], [1, -1, 1, 1, 0, 0])
    if name == "ag_in":
        return _ag_spec([-1, 1, 0, 0, -1, 0], [1, -1, 0, 0, 1, 0])
    raise ValueError(f"unknown network preset {name!r}")


def build_network(spec: NetworkSpec | None = None, preset: str = "custom") -> LowRankProblem:
    """Assemble the (N+2)-dimensional perturbation problem.

    The preset 'example1' returns the four-dimensional benchmark instead of
    a network; 'ag_normal'/'ag_in' use their built-in specs; 'custom'
    requires an explicit NetworkSpec.
    """
    if preset == "example1":
        return _presets.example1()
    if preset != "custom":
        spec = preset_spec(preset)
    if spec is None:
        raise ValueError("custom network needs an explicit NetworkSpec")
    N, alpha = spec.N, spec.alpha
    T, _ = build_T(N, alpha, spec.lambda1_target)
    M = np.zeros((N + 2, N + 2))
    M[:N, :N] = T
    M[N, :N] = spec.w1
    M[N + 1, :N] = spec.w2
    M[N, N] = -1.0
    M[N + 1, N + 1] = -1.0
    M *= alpha
    f1 = -alpha * np.concatenate([spec.u1, [0.0, 0.0]])
    f2 = -alpha * np.concatenate([spec.u2, [0.0, 0.0]])
    g1 = np.zeros(N + 2)
    g1[N] = 1.0
    g2 = np.zeros(N + 2)
    g2[N + 1] = 1.0
    return LowRankProblem(M, f1, g1, f2, g2)


def constant_tau_rho1(
    dec: AKDecomposition,
    lam: float,
    rho2: float,
    problem: LowRankProblem | None = None,
) -> float:
    """rho1 keeping lambda an eigenvalue at the given rho2 (fixed time constant).

    When the underlying problem is supplied the result is polished by Newton
    steps on the exact determinant, removing the interpolation noise of the
    decomposition (it matters close to the envelope tangency, where the
    eigenvalue's sensitivity to rho1 blows up).
    """
    den = dec.P1(lam) + rho2 * dec.Q(lam)
    scale = max(abs(dec.D(lam)), abs(dec.P1(lam)), 1.0)
    if abs(den) <= 1e-12 * scale:
        raise ZeroDivisionError("constant-eigenvalue curve has an asymptote here")
    r1 = -(dec.D(lam) + rho2 * dec.P2(lam)) / den
    if problem is not None:
        eye = np.eye(problem.n)
        for _ in range(3):
            det = np.linalg.det(perturbed_matrix(problem, r1, rho2) - lam * eye)
            r1 = r1 - det / den
    return float(r1)


def gain(
    p: LowRankProblem,
    rho1: float,
    rho2: float,
    b,
    separation: float = 1e-6,
) -> float:
    """Predicted amplification of the slow mode for input pattern b.

    gamma = <b,e1><f1,b> / (<f1,e1> ||b||^2) with e1/f1 the unit right/left
    eigenvectors of the dominant (largest real part) eigenvalue.
    """
    b = np.asarray(b, float)
    A = perturbed_matrix(p, rho1, rho2)
    s = eig_dense(A, vectors=True)
    order = np.argsort(-s.values.real)
    i1 = order[0]
    lam1 = s.values[i1]
    if abs(s.values[order[1]].real - lam1.real) <= separation * max(1.0, abs(lam1)):
        # dominant eigenvalue not separated; a complex pair may legitimately
        # lead, in which case gain is defined through the pair's real part
        if abs(np.conj(s.values[order[1]]) - lam1) > separation * max(1.0, abs(lam1)):
            raise DivergentGainError("dominant eigenvalue is not simple")
    e1 = s.right[:, i1]
    f1 = s.left[:, i1]
    e1 = e1 / np.linalg.norm(e1)
    f1 = f1 / np.linalg.norm(f1)
    inner = np.vdot(f1, e1)
    if abs(inner) < 1e-10:
        raise DivergentGainError(
            "left and right dominant eigenvectors are orthogonal"
        )
    if inner.real < 0:
        f1 = -f1
        inner = -inner
    g = (b @ e1) * (f1 @ b) / (inner * (b @ b))
    if abs(g.imag) > 1e-8 * max(1.0, abs(g)):
        raise DivergentGainError("gain came out complex; dominant mode is a pair")
    return float(g.real)


def impulse_response(
    p: LowRankProblem,
    rho1: float,
    rho2: float,
    b,
    t_end: float,
    dt: float | None = None,
):
    """Free decay from v(0) = b; returns (t, <b, v(t)>).

    Classical fixed-step fourth-order integration, realized by iterating the
    one-step degree-4 Taylor matrix of exp(dt A) (identical update to the
    four-stage Runge-Kutta scheme for a linear autonomous system).
    """
    b = np.asarray(b, float)
    A = perturbed_matrix(p, rho1, rho2)
    rad = float(np.max(np.abs(eig_dense(A).values)))
    cap = 0.1 / max(rad, 1e-300)
    if dt is None:
        dt = 0.5 * cap
    if dt > cap:
        raise ValueError(f"dt={dt} exceeds stability cap 0.1/spectral radius = {cap}")
    nsteps = int(np.ceil(t_end / dt))
    H = dt * A
    R = np.eye(len(b)) + H @ (
        np.eye(len(b)) + H @ (np.eye(len(b)) / 2.0 + H @ (np.eye(len(b)) / 6.0 + H / 24.0))
    )
    ts = np.arange(nsteps + 1) * dt
    out = np.empty(nsteps + 1)
    v = b.copy()
    for i in range(nsteps + 1):
        out[i] = b @ v
        if i < nsteps:
            v = R @ v
    return ts, out


def measured_gain(series, b) -> float:
    """Peak response normalized by the input pattern energy."""
    series = np.asarray(series, float)
    if series.size == 0:
        raise ValueError("empty response series")
    b = np.asarray(b, float)
    return float(np.max(np.abs(series)) / (b @ b))
