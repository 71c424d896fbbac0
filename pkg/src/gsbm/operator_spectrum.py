"""Spectra of the population integral operator behind the weighted adjacency.

The operator acts on L2 of the attribute measure as
Tf(x) = integral K(x, y) f(y) P(dy) with the weighted kernel
K(x, y) = sum_l W(l) B(x, y) mu_{x,y}(l). Its spectrum is what the
normalized graph spectrum converges to, so it serves as the oracle for the
spectral pipeline.

Two routes are provided and kept independent on purpose:

* ``fourier_spectrum`` — closed forms for translation-invariant kernels on
  the unit interval: eigenvalues are q0 and q_k / 2 (each twice) where q_k
  are the cosine coefficients of the weighted kernel, with eigenfunctions
  1, sqrt(2) cos(2 pi k x), sqrt(2) sin(2 pi k x).
* ``nystrom_spectrum`` — direct discretization: a midpoint-rule grid
  matrix for the unit interval, or the exact similarity-transformed class
  matrix for a finite attribute set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .model import (
    BlockKernel,
    FiniteSet,
    FourierKernel,
    KernelSpec,
    TWO_LABEL_2G,
    UnitInterval,
)
from .spectral import WeighingFunction, h_epsilon

_KIND_CONST, _KIND_COS, _KIND_SIN = 0, 1, 2


@dataclass
class OperatorSpectrum:
    """Eigenvalues sorted by decreasing magnitude plus evaluable eigenfunctions.

    ``total_energy`` is the exact sum of *all* squared eigenvalues when a
    closed form is available (Fourier case, or a complete finite-set
    spectrum); tail sums are then exact. Grid spectra keep every computed
    eigenvalue and report tails as partial sums (``tail_is_exact`` False).
    """

    eigenvalues: np.ndarray
    phi: Callable[[int, np.ndarray], np.ndarray]
    source: str
    total_energy: Optional[float] = None

    def __post_init__(self):
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=float)
        mags = np.abs(self.eigenvalues)
        if np.any(mags[:-1] < mags[1:] - 1e-12):
            raise ValueError("eigenvalues not sorted by decreasing magnitude")
        self.eigenvalues.flags.writeable = False

    @property
    def tail_is_exact(self) -> bool:
        return self.total_energy is not None

    def eigenfunction(self, k: int) -> Callable[[np.ndarray], np.ndarray]:
        return lambda x: self.phi(k, x)


# ---------------------------------------------------------------------------
# Effective weighted kernels
# ---------------------------------------------------------------------------

def effective_kernel_fn(kernel: KernelSpec, weighing: Optional[WeighingFunction]):
    """K(x, y) = sum_l W(l) B mu(l) as a vectorized callable."""
    if isinstance(kernel, BlockKernel):
        if weighing is None:
            w = np.ones(kernel.n_labels)
        else:
            w = weighing.weights
        mat = kernel.edge_prob * (kernel.label_dist @ w)

        def k_block(x, y):
            return mat[np.asarray(x, dtype=int), np.asarray(y, dtype=int)]

        return k_block

    if kernel.label_rule is None:
        w = 1.0 if weighing is None else float(weighing.weights[0])

        def k_plain(x, y):
            return w * kernel.g(np.asarray(x) - np.asarray(y))

        return k_plain

    if kernel.label_rule == TWO_LABEL_2G:
        if weighing is None:
            raise ValueError("labeled kernel needs a weighing function")
        wp, wm = float(weighing.weights[0]), float(weighing.weights[1])
        c2, c1 = 2.0 * (wp - wm), wm

        def k_labeled(x, y):
            g = kernel.g(np.asarray(x) - np.asarray(y))
            return c2 * g * g + c1 * g

        return k_labeled

    raise ValueError(f"unsupported label rule {kernel.label_rule!r}")


def _effective_cosine_coefficients(kernel: FourierKernel,
                                   weighing: Optional[WeighingFunction],
                                   n_harmonics: int):
    """(q0, qk, total_energy) of the weighted kernel as a function of x - y.

    Exact in every supported case: built-in forms use closed-form series
    and moments; explicit finite coefficient lists use Parseval and, for
    the labeled rule, exact series convolution for g^2.
    """
    ks = np.arange(1, n_harmonics + 1, dtype=float)

    if kernel.label_rule is None:
        w = 1.0 if weighing is None else float(weighing.weights[0])
        if kernel.form == "triangle":
            q0 = w * 0.25
            qk = w * ((-1.0) ** ks - 1.0) / (np.pi**2 * ks**2)
            total = w * w / 12.0
        elif kernel.form == "band":
            q0 = w * 0.5
            qk = w * 2.0 * np.sin(np.pi * ks / 2.0) / (np.pi * ks)
            total = w * w / 2.0
        else:
            q0 = w * kernel.g0
            qk = np.zeros(n_harmonics)
            m = min(n_harmonics, kernel.gk.size)
            qk[:m] = w * kernel.gk[:m]
            total = q0 * q0 + float(np.sum(qk**2)) / 2.0
        return q0, qk, total

    if kernel.label_rule != TWO_LABEL_2G:
        raise ValueError(f"unsupported label rule {kernel.label_rule!r}")
    if weighing is None:
        raise ValueError("labeled kernel needs a weighing function")
    wp, wm = float(weighing.weights[0]), float(weighing.weights[1])
    c2, c1 = 2.0 * (wp - wm), wm  # K = c2 g^2 + c1 g

    if kernel.form == "triangle":
        # g = |x|: g^2 = x^2 with cosine series 1/12 + sum (-1)^k/(pi^2 k^2) cos.
        q0 = c2 / 12.0 + c1 * 0.25
        sq_k = (-1.0) ** ks / (np.pi**2 * ks**2)
        g_k = ((-1.0) ** ks - 1.0) / (np.pi**2 * ks**2)
        qk = c2 * sq_k + c1 * g_k
        # integral of (c2 x^2 + c1 |x|)^2 over [-1/2, 1/2]
        total = c2 * c2 / 80.0 + c1 * c2 / 16.0 + c1 * c1 / 12.0
        return q0, qk, total
    if kernel.form is None:
        # Finite series: square it exactly by convolving exponential-form
        # coefficients, then read the cosine coefficients back off.
        kmax = kernel.gk.size
        expo = np.zeros(2 * kmax + 1)
        expo[kmax] = kernel.g0
        for k in range(1, kmax + 1):
            expo[kmax + k] = expo[kmax - k] = kernel.gk[k - 1] / 2.0
        sq = np.convolve(expo, expo)  # exponential coefficients of g^2
        center = 2 * kmax
        sq0 = sq[center]
        sq_cos = 2.0 * sq[center + 1:]
        q0 = c2 * sq0 + c1 * kernel.g0
        qk = np.zeros(max(n_harmonics, 2 * kmax))
        qk[: sq_cos.size] += c2 * sq_cos
        qk[:kmax] += c1 * kernel.gk
        total = q0 * q0 + float(np.sum(qk**2)) / 2.0
        return q0, qk, total
    raise ValueError(
        f"no closed-form square for kernel form {kernel.form!r} with labels; "
        "use nystrom_spectrum"
    )


# ---------------------------------------------------------------------------
# Spectra
# ---------------------------------------------------------------------------

def fourier_spectrum(
    kernel: KernelSpec,
    weighing: Optional[WeighingFunction] = None,
    n_harmonics: int = 256,
) -> OperatorSpectrum:
    """Closed-form spectrum for translation-invariant kernels.

    Eigenvalues are q0 (eigenfunction 1) and q_k / 2 with multiplicity two
    (eigenfunctions sqrt(2) cos(2 pi k x), sqrt(2) sin(2 pi k x)), sorted by
    decreasing magnitude; degenerate pairs keep the (cosine, sine) order.
    Non-translation-invariant kernels are rejected; use nystrom_spectrum.
    """
    if not isinstance(kernel, FourierKernel):
        raise ValueError("kernel is not translation-invariant; use nystrom_spectrum")
    q0, qk, total = _effective_cosine_coefficients(kernel, weighing, n_harmonics)

    lams = [q0]
    kinds = [_KIND_CONST]
    harms = [0]
    for k, q in enumerate(qk, start=1):
        lams.extend((q / 2.0, q / 2.0))
        kinds.extend((_KIND_COS, _KIND_SIN))
        harms.extend((k, k))
    lams = np.array(lams)
    kinds = np.array(kinds)
    harms = np.array(harms)

    keep = np.abs(lams) > 1e-15
    lams, kinds, harms = lams[keep], kinds[keep], harms[keep]
    order = np.lexsort((kinds, harms, -lams, -np.abs(lams)))
    lams, kinds, harms = lams[order], kinds[order], harms[order]

    def phi(k: int, x):
        x = np.asarray(x, dtype=float)
        if kinds[k] == _KIND_CONST:
            return np.ones_like(x)
        angle = 2.0 * np.pi * harms[k] * x
        if kinds[k] == _KIND_COS:
            return math.sqrt(2.0) * np.cos(angle)
        return math.sqrt(2.0) * np.sin(angle)

    return OperatorSpectrum(eigenvalues=lams, phi=phi, source="fourier", total_energy=total)


def nystrom_spectrum(
    space,
    kernel: KernelSpec,
    weighing: Optional[WeighingFunction] = None,
    m: int = 2000,
) -> OperatorSpectrum:
    """Discretization oracle for the operator spectrum.

    Unit interval: eigendecomposition of the m x m midpoint-rule matrix
    K(x_a, x_b) / m, with eigenfunctions extended off the grid by the
    interpolation formula. Finite set: exact eigenvalues of
    diag(P)^{1/2} K diag(P)^{1/2} (the m argument is ignored).
    """
    kfn = effective_kernel_fn(kernel, weighing)

    if isinstance(space, FiniteSet):
        p = space.weight_array()
        classes = np.arange(space.r)
        kmat = np.asarray(kfn(classes[:, None], classes[None, :]), dtype=float)
        root = np.sqrt(p)
        sym = root[:, None] * kmat * root[None, :]
        vals, vecs = np.linalg.eigh(sym)
        order = np.lexsort((-vals, -np.abs(vals)))
        vals = vals[order]
        vecs = vecs[:, order]
        safe = np.where(p > 0, root, 1.0)
        table = vecs / safe[:, None]  # phi_k(class c) = u_k(c) / sqrt(P(c))
        table[p == 0, :] = 0.0

        def phi_finite(k: int, x):
            return table[np.asarray(x, dtype=int), k]

        total = float(np.sum(vals**2))
        return OperatorSpectrum(eigenvalues=vals, phi=phi_finite, source="finite-exact",
                                total_energy=total)

    if not isinstance(space, UnitInterval):
        raise ValueError(f"unsupported attribute space {space!r}")
    if isinstance(kernel, BlockKernel):
        raise ValueError("BlockKernel requires a FiniteSet attribute space")
    if m < 16:
        raise ValueError("quadrature size m must be at least 16")
    grid = (np.arange(m) + 0.5) / m
    kmat = np.asarray(kfn(grid[:, None], grid[None, :]), dtype=float)
    vals, vecs = np.linalg.eigh(kmat / m)
    order = np.lexsort((-vals, -np.abs(vals)))
    vals = vals[order]
    vecs = vecs[:, order]
    grid_phi = math.sqrt(m) * vecs  # orthonormal under the 1/m quadrature weight

    def phi_grid(k: int, x):
        scalar_in = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lam = vals[k]
        denom = lam if abs(lam) > 1e-300 else 1e-300
        out = (kfn(x[:, None], grid[None, :]) @ grid_phi[:, k]) / (m * denom)
        return out[0] if scalar_in else out

    return OperatorSpectrum(eigenvalues=vals, phi=phi_grid, source="nystrom-grid")


# ---------------------------------------------------------------------------
# Derived quantities
# ---------------------------------------------------------------------------

def ideal_embedding(spectrum: OperatorSpectrum, attributes: np.ndarray, r: int) -> np.ndarray:
    """Population embedding f_i = (lambda_k / lambda_1 * phi_k(sigma_i))_{k<=r}.

    This is what the sqrt(n)-scaled spectral embedding converges to;
    comparisons against it should align degenerate eigenvalue blocks by an
    orthogonal transform rather than matching coordinates one by one.
    """
    if r > spectrum.eigenvalues.size:
        raise ValueError(f"r={r} exceeds available eigenvalues ({spectrum.eigenvalues.size})")
    attributes = np.asarray(attributes)
    lam1 = spectrum.eigenvalues[0]
    f = np.empty((attributes.size, r))
    for k in range(r):
        f[:, k] = (spectrum.eigenvalues[k] / lam1) * spectrum.phi(k, attributes)
    return f


def tail_epsilon_r(spectrum: OperatorSpectrum, r: int) -> float:
    """Tail energy sum_{k > r} lambda_k^2.

    Exact when the spectrum carries a closed-form total energy; otherwise
    the partial sum over the stored eigenvalues (see ``tail_is_exact``).
    """
    if r < 0:
        raise ValueError("r must be nonnegative")
    lam = spectrum.eigenvalues
    if spectrum.total_energy is not None:
        head = float(np.sum(lam[: min(r, lam.size)] ** 2))
        return max(spectrum.total_energy - head, 0.0)
    return float(np.sum(lam[r:] ** 2))


def kernel_distance_sq(spectrum: OperatorSpectrum, x, y, r: Optional[int] = None) -> np.ndarray:
    """d_r^2(x, y) = sum_{k <= r} lambda_k^2 (phi_k(x) - phi_k(y))^2.

    With r = None every stored eigenvalue is used, approximating the full
    kernel distance d^2(x, y) = integral |K(x, .) - K(y, .)|^2 dP.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    kmax = spectrum.eigenvalues.size if r is None else min(r, spectrum.eigenvalues.size)
    out = np.zeros(np.broadcast(x, y).shape)
    for k in range(kmax):
        lam = spectrum.eigenvalues[k]
        out += lam * lam * (spectrum.phi(k, x) - spectrum.phi(k, y)) ** 2
    return out


def eta_diagnostic(
    spectrum: OperatorSpectrum,
    eps: float,
    psi: Callable[[float], float],
    sigma_i: float,
    r: int,
    quad_m: int = 2000,
) -> float:
    """Optional error-bound diagnostic; requires a caller-supplied modulus.

    Evaluates 2 psi(2 |lambda_1| eps) +
    sqrt(eps_r) / (|lambda_1|^2 eps^2 * mean_x h_{|lambda_1| eps}(d(sigma_i, x)))
    with the distance truncated at the stored spectrum. Purely diagnostic:
    the modulus of continuity psi is not observable from data.
    """
    lam1 = abs(float(spectrum.eigenvalues[0]))
    grid = (np.arange(quad_m) + 0.5) / quad_m
    d = np.sqrt(kernel_distance_sq(spectrum, np.full(quad_m, sigma_i), grid))
    local_mass = float(np.mean(h_epsilon(d, lam1 * eps)))
    if local_mass == 0.0:
        return math.inf
    tail = tail_epsilon_r(spectrum, r)
    return 2.0 * psi(2.0 * lam1 * eps) + math.sqrt(tail) / (lam1**2 * eps**2 * local_mass)
