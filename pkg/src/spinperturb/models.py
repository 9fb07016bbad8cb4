"""Model builders: replicated random-energy tables, an antiferromagnetic
Heisenberg chain, and a replicated disordered short-range quantum chain,
plus the common perturbation assembly H = H0 - (N lambda + N^alpha mu g) h.

Classical configuration encoding: bit i of an integer index is the spin at
site i, replicas occupy contiguous bit blocks with replica 1 in the low bits.
Quantum tensor factors put site 0 leftmost and replica 1 first.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .disorder import DisorderStream
from .errors import CapacityError
from .gibbs_engine import ClassicalTable, GibbsSpec
from .spin_algebra import (
    DEFAULT_DIM_CAP,
    HermitianOperator,
    HilbertSpace,
    embed_product,
    local_spin,
    operator_norm,
)

# Classical tables are capped by total configuration bits (n * N).
TABLE_BIT_CAP = 28

_NORM_SLACK = 1e-10

ObservableRep = Union[HermitianOperator, np.ndarray]


@dataclass(frozen=True)
class ModelInstance:
    """One assembled model family member with a frozen disorder sample.

    `h` is the perturbation density (bounded by `C_h`); it is None for a
    single-replica random-energy model, which carries no overlap observable.
    """

    family: str
    N: int
    n: int
    H0: Union[HermitianOperator, ClassicalTable]
    h: ObservableRep | None
    C_h: float
    disorder_ref: tuple[int, int] | None

    def __post_init__(self) -> None:
        if self.h is not None:
            hn = operator_norm(
                self.h if isinstance(self.h, HermitianOperator) else np.asarray(self.h)
            )
            if hn > self.C_h + _NORM_SLACK:
                raise ValueError(
                    f"perturbation norm {hn} exceeds stated bound {self.C_h}"
                )
        if self.family == "HEISENBERG" and self.disorder_ref is not None:
            raise ValueError("the Heisenberg family carries no disorder")

    @property
    def is_classical(self) -> bool:
        return isinstance(self.H0, ClassicalTable)


@dataclass(frozen=True)
class PerturbationParams:
    """Deterministic strength lambda plus a realized random strength mu g."""

    lam: float = 0.0
    mu: float = 0.0
    alpha: float = 0.5
    g: float = 0.0

    def __post_init__(self) -> None:
        if self.mu != 0.0 and not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1) when mu != 0, got {self.alpha}")


def build_rem(N: int, n: int, disorder: DisorderStream | None) -> ModelInstance:
    """Replicated random-energy model as a classical configuration table.

    Each of the 2^N configurations draws one standard Gaussian J; a replica
    contributes energy -sqrt(N) J. For n >= 2 the overlap indicator of
    replicas 1 and 2 is attached as the perturbation observable.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if not 1 <= n <= 3:
        raise ValueError(f"replica count must be in 1..3, got {n}")
    if n * N > TABLE_BIT_CAP:
        raise CapacityError(f"{n}x{N} configuration bits exceed the cap of {TABLE_BIT_CAP}")
    if disorder is None:
        raise ValueError("the random-energy model requires a disorder stream")

    couplings = disorder.normal(2 ** N)
    single = -np.sqrt(float(N)) * couplings
    energies = single
    for _ in range(n - 1):
        # New replica in the high bits: index = sigma_new * 2^(bits so far) + rest.
        energies = np.add.outer(single, energies).ravel()

    h = None
    if n >= 2:
        overlap = np.eye(2 ** N, dtype=np.float64).ravel()
        if n > 2:
            h = np.tile(overlap, 2 ** ((n - 2) * N))
        else:
            h = overlap

    return ModelInstance(
        family="REM",
        N=N,
        n=n,
        H0=ClassicalTable(energies=energies),
        h=h,
        C_h=1.0,
        disorder_ref=(disorder.master_seed, disorder.sample_index),
    )


def _chain_bonds(L: int, coupling: Sequence[float]) -> list[tuple[int, int, float]]:
    """Open-chain bonds (i, i+r, J_r) for each distance r with J_r > 0."""
    bonds = []
    for r, j in enumerate(coupling, start=1):
        if j < 0:
            raise ValueError(f"couplings must be nonnegative, got {j} at distance {r}")
        if j == 0.0:
            continue
        if r % 2 == 0:
            raise ValueError(
                f"distance-{r} coupling connects one sublattice to itself; "
                "only even-to-odd bonds are bipartite"
            )
        for i in range(L - r):
            bonds.append((i, i + r, float(j)))
    return bonds


def build_heisenberg(
    L: int,
    coupling: Sequence[float] = (1.0,),
    S: float = 0.5,
    dim_cap: int = DEFAULT_DIM_CAP,
) -> ModelInstance:
    """Antiferromagnetic Heisenberg chain with staggered magnetization density.

    Open boundaries; the even/odd sites form the two sublattices. The
    perturbation h = (1/L)(sum_even S^z - sum_odd S^z) is bounded by S.
    """
    if L < 2 or L % 2 != 0:
        raise ValueError(f"chain length must be even and >= 2, got {L}")
    space = HilbertSpace(sites=L, spin_magnitude=S, dim_cap=dim_cap)
    loc = space.local
    dim = space.total_dim

    h0 = np.zeros((dim, dim), dtype=np.complex128)
    for i, j, jr in _chain_bonds(L, coupling):
        for op in (loc.sx, loc.sy, loc.sz):
            h0 += jr * embed_product(space, {i: op, j: op}).entries

    stagger = np.zeros((dim, dim), dtype=np.complex128)
    for i in range(L):
        sign = 1.0 if i % 2 == 0 else -1.0
        stagger += sign * embed_product(space, {i: loc.sz}).entries
    stagger /= L

    return ModelInstance(
        family="HEISENBERG",
        N=L,
        n=1,
        H0=HermitianOperator.from_matrix(h0),
        h=HermitianOperator.from_matrix(stagger),
        C_h=S,
        disorder_ref=None,
    )


def build_ea(
    L: int,
    K: tuple[float, float, float],
    disorder: DisorderStream,
    base_set: Sequence[int] = (0, 1),
    n: int = 2,
    S: float = 0.5,
    dim_cap: int = DEFAULT_DIM_CAP,
) -> ModelInstance:
    """Two replicas of a disordered short-range chain sharing one coupling draw.

    Interaction ranges are the translates of `base_set` that fit in the chain;
    each range X draws one Gaussian J_X entering as -J_X K^p prod_{j in X} S_j^p
    in every replica. The perturbation is the site-averaged z-overlap of
    replicas 1 and 2, bounded by S^2.
    """
    if L < 2:
        raise ValueError(f"chain length must be >= 2, got {L}")
    if n != 2:
        raise ValueError("only the two-replica model is supported")
    if len(base_set) not in (1, 2):
        raise ValueError("base set must contain 1 or 2 site offsets")
    if any(k <= 0 for k in K):
        raise ValueError(f"anisotropy constants must be positive, got {K}")
    offsets = sorted(set(int(v) for v in base_set))
    if len(offsets) != len(base_set):
        raise ValueError("base set offsets must be distinct")
    if offsets[0] != 0:
        raise ValueError("base set should be given relative to its first site (offset 0)")

    space = HilbertSpace(sites=n * L, spin_magnitude=S, dim_cap=dim_cap)
    loc = space.local
    dim = space.total_dim

    ranges = [tuple(v + o for o in offsets) for v in range(L - offsets[-1])]
    couplings = disorder.normal(len(ranges))

    h0 = np.zeros((dim, dim), dtype=np.complex128)
    for j_x, sites in zip(couplings, ranges):
        for kp, op in zip(K, (loc.sx, loc.sy, loc.sz)):
            for a in range(n):
                placed = {site + a * L: op for site in sites}
                h0 -= j_x * kp * embed_product(space, placed).entries

    overlap = np.zeros((dim, dim), dtype=np.complex128)
    for i in range(L):
        overlap += embed_product(space, {i: loc.sz, i + L: loc.sz}).entries
    overlap /= L

    return ModelInstance(
        family="EA",
        N=L,
        n=n,
        H0=HermitianOperator.from_matrix(h0),
        h=HermitianOperator.from_matrix(overlap),
        C_h=S * S,
        disorder_ref=(disorder.master_seed, disorder.sample_index),
    )


def replica_swap_permutation(L: int, n: int, site_dim: int) -> np.ndarray:
    """Permutation matrix exchanging the site blocks of replicas 1 and 2."""
    if n != 2:
        raise ValueError("swap is defined for two replicas")
    sites = n * L
    dim = site_dim ** sites
    idx = np.arange(dim)
    digits = []
    rest = idx
    for _ in range(sites):  # site 0 is the most significant digit
        digits.append(rest % site_dim)
        rest = rest // site_dim
    digits = digits[::-1]
    swapped = digits[L:] + digits[:L]
    new_idx = np.zeros(dim, dtype=np.int64)
    for d in swapped:
        new_idx = new_idx * site_dim + d
    perm = np.zeros((dim, dim))
    perm[new_idx, idx] = 1.0
    return perm


@dataclass(frozen=True)
class PerturbedFamily:
    """Lambda-parametrized Gibbs family H(lambda) = H0 - (N lambda + N^alpha mu g) h."""

    model: ModelInstance
    params: PerturbationParams

    def coefficient(self, lam: float | None = None) -> float:
        lam = self.params.lam if lam is None else lam
        random_part = self.model.N ** self.params.alpha * self.params.mu * self.params.g
        return self.model.N * lam + random_part

    def hamiltonian_at(self, lam: float | None = None):
        c = self.coefficient(lam)
        model = self.model
        if c == 0.0 or model.h is None:
            return model.H0
        if model.is_classical:
            return ClassicalTable(energies=model.H0.energies - c * np.asarray(model.h))
        return HermitianOperator.from_matrix(model.H0.entries - c * model.h.entries)

    def spec(self, beta: float, lam: float | None = None) -> GibbsSpec:
        return GibbsSpec(beta=beta, hamiltonian=self.hamiltonian_at(lam))

    def spec_builder(self, beta: float) -> Callable[[float], GibbsSpec]:
        return lambda lam: self.spec(beta, lam)

    def observable(self) -> ObservableRep:
        if self.model.h is None:
            raise ValueError("this model instance has no perturbation observable")
        return self.model.h


def assemble(model: ModelInstance, params: PerturbationParams) -> PerturbedFamily:
    """Attach perturbation parameters to a model instance."""
    if model.h is None and (params.lam != 0.0 or params.mu != 0.0):
        raise ValueError("cannot perturb a model without a perturbation observable")
    return PerturbedFamily(model=model, params=params)
