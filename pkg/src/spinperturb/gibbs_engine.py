"""Gibbs states from exact spectra: log-partition functions, thermal and
Duhamel two-point expectations, and finite-difference derivatives of log Z.

Quantum Hamiltonians are diagonalized once per Gibbs specification; diagonal
(classical) models bypass matrices entirely and work on configuration tables.
All exponentials are evaluated after a global max-shift so large beta is safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy.special import logsumexp

from .errors import NumericalFailureError
from .spin_algebra import HermitianOperator, commutator

# Relative eigenvalue-gap threshold below which the Duhamel kernel switches
# to its exact degenerate limit.
DEGENERACY_RTOL = 1e-12

# Default central-difference steps for derivatives of log Z by order.
DEFAULT_FD_STEPS = {1: 1e-4, 2: 1e-4, 3: 1e-2, 4: 1e-2}

_IMAG_RESIDUE_TOL = 1e-9


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ascending eigenvalues and orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True)
class ClassicalTable:
    """Diagonal model: one energy per configuration.

    Observables of such a model are plain real vectors of the same length;
    operator products reduce to entrywise products.
    """

    energies: np.ndarray

    def __post_init__(self) -> None:
        e = np.ascontiguousarray(self.energies, dtype=np.float64)
        if e.ndim != 1:
            raise ValueError("classical energy table must be one-dimensional")
        object.__setattr__(self, "energies", e)

    @property
    def dim(self) -> int:
        return self.energies.shape[0]


Hamiltonian = Union[HermitianOperator, ClassicalTable]
Observable = Union[HermitianOperator, np.ndarray]


def decompose(h: HermitianOperator) -> SpectralDecomposition:
    """Full eigensystem of a Hermitian operator (ascending eigenvalues)."""
    try:
        evals, evecs = np.linalg.eigh(h.entries)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"eigendecomposition failed: {exc}") from exc
    return SpectralDecomposition(eigenvalues=evals, eigenvectors=evecs)


@dataclass
class GibbsSpec:
    """Inverse temperature plus Hamiltonian, with a write-once spectral cache."""

    beta: float
    hamiltonian: Hamiltonian
    _spectral: SpectralDecomposition | None = field(default=None, init=False, repr=False)

    def __post_init__(self) -> None:
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")

    @property
    def is_classical(self) -> bool:
        return isinstance(self.hamiltonian, ClassicalTable)

    def spectral(self) -> SpectralDecomposition:
        if self.is_classical:
            raise TypeError("classical tables carry their spectrum directly")
        if self._spectral is None:
            self._spectral = decompose(self.hamiltonian)
        return self._spectral

    def energy_levels(self) -> np.ndarray:
        if self.is_classical:
            return self.hamiltonian.energies
        return self.spectral().eigenvalues


def log_partition(spec: GibbsSpec) -> float:
    """log Tr e^{-beta H}, overflow-safe via max-shift."""
    return float(logsumexp(-spec.beta * spec.energy_levels()))


def _boltzmann_weights(spec: GibbsSpec) -> tuple[np.ndarray, float]:
    """Shifted weights exp(-beta (E - E_min)) and their sum."""
    a = spec.beta * spec.energy_levels()
    w = np.exp(-(a - a.min()))
    return w, float(w.sum())


def _classical_observable(spec: GibbsSpec, a: Observable) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] != spec.hamiltonian.dim:
        raise ValueError("classical observable must be a vector matching the table")
    return arr


def _rotated(spec: GibbsSpec, a: Observable) -> np.ndarray:
    """Observable in the Hamiltonian eigenbasis, U^dag A U."""
    m = a.entries if isinstance(a, HermitianOperator) else np.asarray(a, dtype=np.complex128)
    u = spec.spectral().eigenvectors
    if m.shape != u.shape:
        raise ValueError(f"dimension mismatch: observable {m.shape} vs space {u.shape}")
    return u.conj().T @ m @ u


def _check_real(value: complex, context: str) -> float:
    scale = max(1.0, abs(value.real))
    if abs(value.imag) > _IMAG_RESIDUE_TOL * scale:
        raise NumericalFailureError(
            f"{context}: imaginary residue {value.imag:.3e} exceeds tolerance"
        )
    return float(value.real)


def gibbs_expectation(spec: GibbsSpec, a: Observable) -> float:
    """Tr(A e^{-beta H}) / Z."""
    if spec.is_classical:
        arr = _classical_observable(spec, a)
        w, z = _boltzmann_weights(spec)
        return float(np.dot(w, arr) / z)
    at = _rotated(spec, a)
    w, z = _boltzmann_weights(spec)
    val = complex(np.dot(w, np.diagonal(at)) / z)
    return _check_real(val, "gibbs_expectation")


def _duhamel_kernel(spec: GibbsSpec) -> tuple[np.ndarray, float]:
    """Shifted kernel K~(E_m, E_n) and shifted partition sum.

    With a_m = beta (E_m - E_min), the kernel is the divided difference

        K~_mn = (e^{-a_m} - e^{-a_n}) / (a_n - a_m)
              = e^{-min(a_m, a_n)} * (-expm1(-|a_n - a_m|)) / |a_n - a_m|,

    which is free of cancellation; the degenerate limit is e^{-a_m}.
    """
    evals = spec.energy_levels()
    a = spec.beta * (evals - evals.min())
    spread = float(evals.max() - evals.min())
    gap_tol = spec.beta * DEGENERACY_RTOL * max(1.0, spread)

    diff = np.abs(a[None, :] - a[:, None])
    amin = np.minimum(a[:, None], a[None, :])
    degenerate = diff <= gap_tol
    safe = np.where(degenerate, 1.0, diff)
    kernel = np.where(
        degenerate,
        np.exp(-0.5 * (a[:, None] + a[None, :])),
        np.exp(-amin) * (-np.expm1(-safe)) / safe,
    )
    return kernel, float(np.exp(-a).sum())


def duhamel(spec: GibbsSpec, a: Observable, b: Observable) -> float:
    """Duhamel (imaginary-time averaged) two-point product (A, B).

    Equals the second mixed derivative of Z under linear source couplings,
    divided by beta^2 Z; reduces to <AB> when everything commutes.
    """
    if spec.is_classical:
        va = _classical_observable(spec, a)
        vb = _classical_observable(spec, b)
        w, z = _boltzmann_weights(spec)
        return float(np.dot(w, va * vb) / z)
    at = _rotated(spec, a)
    bt = _rotated(spec, b)
    kernel, z = _duhamel_kernel(spec)
    val = complex(np.sum(at * bt.T * kernel) / z)
    return _check_real(val, "duhamel")


def truncated_duhamel(spec: GibbsSpec, a: Observable, b: Observable) -> float:
    """Connected Duhamel product (A; B) = (A, B) - <A><B>."""
    return duhamel(spec, a, b) - gibbs_expectation(spec, a) * gibbs_expectation(spec, b)


def _central_stencil(order: int) -> np.ndarray:
    """Coefficients on offsets -k..k differentiating exactly through degree 2k."""
    k = order
    offsets = np.arange(-k, k + 1, dtype=np.float64)
    powers = np.vander(offsets, 2 * k + 1, increasing=True).T
    rhs = np.zeros(2 * k + 1)
    rhs[k] = float(math.factorial(k))
    return np.linalg.solve(powers, rhs)


def logZ_derivative(
    spec_builder: Callable[[float], GibbsSpec],
    order: int,
    at: float,
    step: float | None = None,
) -> float:
    """Central finite-difference d^k log Z / d lambda^k on a (2k+1)-point stencil.

    For a coupling N lambda h in the exponent this equals (beta N)^k times the
    order-k connected Duhamel product of h.
    """
    if not 1 <= order <= 4:
        raise ValueError(f"derivative order must be in 1..4, got {order}")
    if step is None:
        step = DEFAULT_FD_STEPS[order]
    if not step > 0:
        raise ValueError("step must be positive")
    coeffs = _central_stencil(order)
    offsets = np.arange(-order, order + 1)
    total = 0.0
    for c, j in zip(coeffs, offsets):
        if c == 0.0:
            continue
        value = log_partition(spec_builder(at + j * step))
        if not np.isfinite(value):
            raise NumericalFailureError(
                f"non-finite log Z at lambda = {at + j * step}"
            )
        total += c * value
    return total / step ** order


@dataclass(frozen=True)
class HarrisBounds:
    """Terms of the Bogolyubov-type sandwich around <O^2>.

    lower <= mid and mid <= lower + commutator_term, i.e.
    (O, O) <= <O^2> <= (O, O) + (beta/12) <[O, [H, O]]>.
    """

    lower: float
    mid: float
    commutator_term: float

    @property
    def upper(self) -> float:
        return self.lower + self.commutator_term

    @property
    def min_slack(self) -> float:
        return min(self.mid - self.lower, self.upper - self.mid)


def harris_check(spec: GibbsSpec, o: Observable) -> HarrisBounds:
    """Evaluate the three terms of the Duhamel/Gibbs sandwich for O."""
    if spec.is_classical:
        v = _classical_observable(spec, o)
        mid = gibbs_expectation(spec, v * v)
        return HarrisBounds(lower=mid, mid=mid, commutator_term=0.0)
    om = o.entries if isinstance(o, HermitianOperator) else np.asarray(o, dtype=np.complex128)
    hm = spec.hamiltonian.entries
    lower = duhamel(spec, om, om)
    mid = gibbs_expectation(spec, om @ om)
    double_comm = commutator(om, commutator(hm, om))
    comm_expect = gibbs_expectation(spec, double_comm)
    return HarrisBounds(lower=lower, mid=mid, commutator_term=spec.beta / 12.0 * comm_expect)
