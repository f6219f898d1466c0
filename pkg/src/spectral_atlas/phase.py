"""Classification of the (rho1, rho2) plane by spectral configuration.

Each parameter point gets a label (n_real, n_rhp, dominant): the number of
real eigenvalues, the number in the open right half plane, and the character
of the rightmost eigenvalue.  Census of the labels over a grid reproduces the
region decomposition cut out by the envelope, Hopf, and zero curves.
"""

from __future__ import annotations

import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .kernel import eig_dense
from .lowrank import AKDecomposition, LowRankProblem, perturbed_matrix

# Census tuples (n_real, n_rhp) of the named regions of the four-dimensional
# benchmark's stability diagram.  The letters track all four eigenvalues:
#   A four real stable; B two real + stable pair; C two stable pairs;
#   D one unstable pair + one stable pair; E unstable pair + two real stable;
#   F one real unstable + three real stable; G one real unstable, one real
#   stable, one stable pair; 'strip' two real unstable + two real stable
#   (a sliver between E and F, visible only at fine resolution).
# Region D does not intersect the window [-12,2]^2 commonly used for this
# diagram; its closest approach is near rho2 ~ 3.1.
EXAMPLE1_REGIONS = {
    "A": (4, 0),
    "B": (2, 0),
    "C": (0, 0),
    "D": (0, 2),
    "E": (2, 2),
    "F": (4, 1),
    "G": (2, 1),
    "strip": (4, 2),
}

DOMINANT_KINDS = (
    "real_stable",
    "real_unstable",
    "complex_stable",
    "complex_unstable",
    "marginal",
)


@dataclass(frozen=True)
class RegionLabel:
    n_real: int
    n_rhp: int
    dominant: str

    def __post_init__(self):
        if self.dominant not in DOMINANT_KINDS:
            raise ValueError(f"unknown dominant kind {self.dominant!r}")

    @property
    def census(self) -> tuple[int, int]:
        return (self.n_real, self.n_rhp)


def classify_point(
    problem: LowRankProblem, rho1: float, rho2: float, tol_factor: float = 1e-7
) -> RegionLabel:
    """Spectral label of one parameter point.

    Reality and half-plane membership are decided relative to the spectral
    radius; the count of non-real eigenvalues is forced even so conjugate
    pairs straddling the tolerance cannot produce an odd defect.
    """
    ev = eig_dense(perturbed_matrix(problem, rho1, rho2)).values
    tol = tol_factor * max(1.0, float(np.max(np.abs(ev))))
    n = len(ev)
    n_real = int(np.sum(np.abs(ev.imag) <= tol))
    if (n - n_real) % 2 == 1:
        n_real += 1  # odd complex count is a tolerance artifact
    n_rhp = int(np.sum(ev.real > tol))
    top = ev[np.argmax(ev.real)]
    if abs(top.real) <= tol:
        dominant = "marginal"
    else:
        kind = "real" if abs(top.imag) <= tol else "complex"
        side = "unstable" if top.real > 0 else "stable"
        dominant = f"{kind}_{side}"
    return RegionLabel(n_real, n_rhp, dominant)


@dataclass
class PhaseGrid:
    rho1_values: np.ndarray
    rho2_values: np.ndarray
    n_real: np.ndarray  # shape (len(rho1), len(rho2))
    n_rhp: np.ndarray
    dominant: np.ndarray  # same shape, dtype object (strings)

    def label(self, i: int, j: int) -> RegionLabel:
        return RegionLabel(
            int(self.n_real[i, j]), int(self.n_rhp[i, j]), str(self.dominant[i, j])
        )

    def census_classes(self) -> set[tuple[int, int]]:
        return {
            (int(a), int(b))
            for a, b in zip(self.n_real.ravel(), self.n_rhp.ravel())
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("rho1,rho2,n_real,n_rhp,dominant\n")
        for i, r1 in enumerate(self.rho1_values):
            for j, r2 in enumerate(self.rho2_values):
                buf.write(
                    f"{r1!r},{r2!r},{self.n_real[i, j]},{self.n_rhp[i, j]},"
                    f"{self.dominant[i, j]}\n"
                )
        return buf.getvalue()


def _thread_count() -> int:
    env = os.environ.get("SPECTRAL_ATLAS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return min(8, os.cpu_count() or 1)


def phase_grid(
    problem: LowRankProblem,
    rho1_values,
    rho2_values,
    tol_factor: float = 1e-7,
) -> PhaseGrid:
    """Classify every point of a rectangular parameter grid.

    Rows are processed in a thread pool; SPECTRAL_ATLAS_THREADS caps the
    worker count (LAPACK releases the interpreter lock during eigensolves).
    """
    r1s = np.asarray(rho1_values, float)
    r2s = np.asarray(rho2_values, float)
    n_real = np.zeros((r1s.size, r2s.size), dtype=int)
    n_rhp = np.zeros_like(n_real)
    dominant = np.empty(n_real.shape, dtype=object)

    def do_row(i):
        for j, r2 in enumerate(r2s):
            lab = classify_point(problem, r1s[i], r2, tol_factor)
            n_real[i, j] = lab.n_real
            n_rhp[i, j] = lab.n_rhp
            dominant[i, j] = lab.dominant

    with ThreadPoolExecutor(max_workers=_thread_count()) as pool:
        list(pool.map(do_row, range(r1s.size)))
    return PhaseGrid(r1s, r2s, n_real, n_rhp, dominant)


def local_splitting(
    dec: AKDecomposition,
    lam0: float,
    rho1: float,
    rho2: float,
    eps: float = 1e-9,
    probe_radius: float = 1e-3,
    double_radius: float | None = None,
) -> str:
    """How a (near-)double eigenvalue splits at a parameter point.

    Expands F(lam0 + delta) = c0 + c1 delta + c2 delta^2 and reads the
    discriminant c1^2 - 4 c2 c0.  On a curve or at an organizing point the
    discriminant itself vanishes; then 16 nearby parameter directions are
    probed and the splitting is declared 'real_pair' or 'complex_pair' only
    if all probes agree.
    """
    F = dec.charpoly(rho1, rho2)
    scale = max(F.norm, 1.0)
    c0, c1, c2 = F(lam0), F.deriv()(lam0), 0.5 * F.deriv(2)(lam0)
    if abs(c2) <= 1e-12 * scale:
        raise ValueError("no quadratic term: lambda0 is not a double-root candidate")
    # near-double precondition: both roots of the local quadratic model sit
    # within a small window around lambda0
    if double_radius is None:
        double_radius = 0.1 * (1.0 + abs(lam0))
    rts = np.roots([c2, c1, c0])
    if np.max(np.abs(rts)) > double_radius:
        raise ValueError(
            "lambda0 is not a near-double eigenvalue at this parameter point"
        )
    disc = c1 * c1 - 4.0 * c2 * c0
    if abs(disc) > eps * scale**2:
        return "real_pair" if disc > 0 else "complex_pair"

    signs = []
    for th in np.linspace(0.0, 2.0 * np.pi, 16, endpoint=False):
        r1 = rho1 + probe_radius * np.cos(th)
        r2 = rho2 + probe_radius * np.sin(th)
        Fp = dec.charpoly(r1, r2)
        d0, d1, d2 = Fp(lam0), Fp.deriv()(lam0), 0.5 * Fp.deriv(2)(lam0)
        signs.append(np.sign(d1 * d1 - 4.0 * d2 * d0))
    if all(s > 0 for s in signs):
        return "real_pair"
    if all(s < 0 for s in signs):
        return "complex_pair"
    raise ValueError(
        "splitting is direction dependent at this point (curve or cusp); "
        "no single label applies"
    )
