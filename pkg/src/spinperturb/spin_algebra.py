"""Spin matrices and dense operator algebra on tensor-product Hilbert spaces.

Conventions: the local basis is the S^z eigenbasis with m descending
(index 0 is m = +S), and site 0 is the leftmost Kronecker factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, NumericalFailureError

DEFAULT_DIM_CAP = 4096

# Hermiticity tolerance, relative to the largest entry.
_HERMITICITY_RTOL = 1e-12


def _is_half_integer(s: float) -> bool:
    two_s = 2.0 * s
    return two_s > 0 and abs(two_s - round(two_s)) < 1e-12


@dataclass(frozen=True)
class LocalSpin:
    """Spin-S matrices sx, sy, sz on a single (2S+1)-dimensional site."""

    spin_magnitude: float
    dim: int
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=np.complex128)


def local_spin(s: float) -> LocalSpin:
    """Build the standard spin-S matrices in the S^z eigenbasis, m descending.

    Raises ValueError unless 2S is a positive integer.
    """
    if not _is_half_integer(s):
        raise ValueError(f"spin magnitude must be a positive half-integer, got {s}")
    dim = round(2 * s) + 1
    m = s - np.arange(dim)  # m = S, S-1, ..., -S
    sz = np.diag(m).astype(np.complex128)
    # S+ |m> = sqrt(S(S+1) - m(m+1)) |m+1>; with m descending, S+ is superdiagonal.
    raise_amp = np.sqrt(s * (s + 1) - m[1:] * (m[1:] + 1))
    sp = np.zeros((dim, dim), dtype=np.complex128)
    sp[np.arange(dim - 1), np.arange(1, dim)] = raise_amp
    sm = sp.conj().T
    sx = (sp + sm) / 2
    sy = (sp - sm) / 2j
    return LocalSpin(spin_magnitude=s, dim=dim, sx=sx, sy=sy, sz=sz)


@dataclass(frozen=True)
class HilbertSpace:
    """Tensor product of `sites` identical spin-S factors, with a dimension cap."""

    sites: int
    spin_magnitude: float
    dim_cap: int = DEFAULT_DIM_CAP
    local: LocalSpin = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.sites < 1:
            raise ValueError("need at least one site")
        loc = local_spin(self.spin_magnitude)
        if loc.dim ** self.sites > self.dim_cap:
            raise CapacityError(
                f"total dimension {loc.dim}^{self.sites} exceeds cap {self.dim_cap}"
            )
        object.__setattr__(self, "local", loc)

    @property
    def site_dim(self) -> int:
        return self.local.dim

    @property
    def total_dim(self) -> int:
        return self.site_dim ** self.sites


@dataclass(frozen=True)
class HermitianOperator:
    """Dense complex square matrix, validated Hermitian at construction."""

    dim: int
    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = np.ascontiguousarray(self.entries, dtype=np.complex128)
        if entries.shape != (self.dim, self.dim):
            raise ValueError(f"expected shape {(self.dim, self.dim)}, got {entries.shape}")
        scale = max(1.0, float(np.abs(entries).max()) if entries.size else 0.0)
        dev = float(np.abs(entries - entries.conj().T).max())
        if dev > _HERMITICITY_RTOL * scale:
            raise ValueError(f"matrix is not Hermitian: max |M - M^dag| = {dev:.3e}")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "HermitianOperator":
        m = np.asarray(m)
        return cls(dim=m.shape[0], entries=m)


def embed_product(space: HilbertSpace, site_ops: dict[int, np.ndarray]) -> HermitianOperator:
    """Kronecker-embed a product of single-site operators acting at distinct sites.

    Sites not listed carry the identity; an empty mapping gives the identity
    operator on the full space.
    """
    d = space.site_dim
    eye = np.eye(d, dtype=np.complex128)
    out = np.ones((1, 1), dtype=np.complex128)
    for site in range(space.sites):
        factor = site_ops.get(site, eye)
        factor = np.asarray(factor, dtype=np.complex128)
        if factor.shape != (d, d):
            raise ValueError(f"local operator at site {site} must be {d}x{d}")
        out = np.kron(out, factor)
    for site in site_ops:
        if not 0 <= site < space.sites:
            raise ValueError(f"site {site} out of range for {space.sites} sites")
    return HermitianOperator.from_matrix(out)


def embed(space: HilbertSpace, site: int, local: np.ndarray) -> HermitianOperator:
    """Embed one single-site operator: id x ... x local x ... x id."""
    if not 0 <= site < space.sites:
        raise ValueError(f"site {site} out of range for {space.sites} sites")
    return embed_product(space, {site: local})


def commutator(a: HermitianOperator | np.ndarray, b: HermitianOperator | np.ndarray) -> np.ndarray:
    """AB - BA as a plain matrix (anti-Hermitian for Hermitian inputs)."""
    am = a.entries if isinstance(a, HermitianOperator) else np.asarray(a)
    bm = b.entries if isinstance(b, HermitianOperator) else np.asarray(b)
    if am.shape != bm.shape:
        raise ValueError(f"dimension mismatch: {am.shape} vs {bm.shape}")
    return am @ bm - bm @ am


def operator_norm(a: HermitianOperator | np.ndarray) -> float:
    """Spectral norm of a Hermitian operator: largest |eigenvalue|."""
    m = a.entries if isinstance(a, HermitianOperator) else np.asarray(a)
    if m.ndim == 1:
        # Diagonal operators stored as tables.
        return float(np.abs(m).max())
    try:
        evals = np.linalg.eigvalsh(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"eigensolver failed: {exc}") from exc
    return float(np.abs(evals).max())


def matrix_norm_max(m: np.ndarray) -> float:
    """Largest entry magnitude; cheap norm used in commutator checks."""
    return float(np.abs(m).max())
