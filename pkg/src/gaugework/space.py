"""Composite Hilbert space and the operator kernel used by every other module.

The space is the fermion Fock space of ``2 * num_sites`` modes (two spinor
components per site) tensored with one truncated boson ladder per link.

Ordering convention
-------------------
* fermion mode ``j = 2 * site + spinor`` (site-major, spinor-minor);
* fermion basis index: binary occupation string, mode 0 most significant;
* boson basis index: mixed radix ``n_max``, link 0 most significant;
* composite index ``= fermion_index * boson_dim + boson_index``.

Fermion operators are dressed with a Jordan-Wigner string of parity factors
on all lower-numbered modes, so the anticommutation relations hold exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import product

import numpy as np
import scipy.sparse as sp

DEFAULT_DIM_CAP = 2**20
# dense eigensolvers and exponentials refuse anything larger than this
DENSE_DIM_CAP = 4096

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10


class DimensionCapExceeded(ValueError):
    """Raised when a configuration would produce a space above the cap."""

    def __init__(self, required: int, cap: int, what: str = "Hilbert space"):
        self.required = required
        self.cap = cap
        super().__init__(f"{what} dimension {required} exceeds cap {cap}")


@dataclass(frozen=True)
class LatticeConfig:
    """Physical and discretization parameters of the lattice model.

    Lattice spacing is 1 and hbar = c = 1, so every coupling is dimensionless.
    In ``dimension=2`` the sites form a periodic ``extent[0] x extent[1]``
    rectangle; when ``extent`` is omitted the most square factorization of
    ``num_sites`` is used.
    """

    num_sites: int
    n_max: int
    dimension: int = 1
    mass: float = 0.0
    charge: float = 1.0
    beta: float = 1.0
    extent: tuple[int, int] | None = None
    dim_cap: int = DEFAULT_DIM_CAP

    def __post_init__(self):
        if int(self.num_sites) < 1:
            raise ValueError("num_sites must be a positive integer")
        if int(self.n_max) < 1:
            raise ValueError("n_max must be a positive integer")
        if self.dimension not in (1, 2):
            raise ValueError("dimension must be 1 or 2")
        if self.mass < 0:
            raise ValueError("mass must be non-negative")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.dimension == 2:
            ext = self.extent or _square_factor(self.num_sites)
            if ext[0] * ext[1] != self.num_sites:
                raise ValueError(f"extent {ext} does not tile {self.num_sites} sites")
            object.__setattr__(self, "extent", (int(ext[0]), int(ext[1])))
        elif self.extent is not None:
            raise ValueError("extent is only meaningful in dimension 2")

    @property
    def num_fermion_modes(self) -> int:
        return 2 * self.num_sites

    @property
    def num_links(self) -> int:
        return self.dimension * self.num_sites

    @property
    def num_plaquettes(self) -> int:
        return self.num_sites if self.dimension == 2 else 0

    @property
    def total_dim(self) -> int:
        return 2**self.num_fermion_modes * self.n_max**self.num_links


def _square_factor(n: int) -> tuple[int, int]:
    a = int(np.sqrt(n))
    while n % a:
        a -= 1
    return (n // a, a)


@dataclass(frozen=True)
class Link:
    """Oriented link ``tail -> head`` along lattice direction ``direction``."""

    index: int
    tail: int
    head: int
    direction: int


@dataclass(frozen=True)
class SpaceDescriptor:
    config: LatticeConfig
    fermion_dim: int
    boson_dim: int
    links: tuple[Link, ...]
    # each plaquette is a tuple of (link index, orientation sign)
    plaquettes: tuple[tuple[tuple[int, int], ...], ...]

    @property
    def dim(self) -> int:
        return self.fermion_dim * self.boson_dim

    @property
    def num_modes(self) -> int:
        return self.config.num_fermion_modes

    @property
    def num_sites(self) -> int:
        return self.config.num_sites

    @property
    def n_max(self) -> int:
        return self.config.n_max

    def mode(self, site: int, spinor: int) -> int:
        if not (0 <= site < self.num_sites and spinor in (0, 1)):
            raise KeyError(f"no fermion mode at site={site}, spinor={spinor}")
        return 2 * site + spinor

    def index(self, occupations, levels) -> int:
        """Composite index of an occupation string and per-link boson levels."""
        occupations = tuple(int(o) for o in occupations)
        levels = tuple(int(n) for n in levels)
        if len(occupations) != self.num_modes or len(levels) != len(self.links):
            raise ValueError("occupation/level tuple has the wrong length")
        if any(o not in (0, 1) for o in occupations):
            raise ValueError("fermion occupations must be 0 or 1")
        if any(not 0 <= n < self.n_max for n in levels):
            raise ValueError("boson level out of range")
        f = 0
        for o in occupations:
            f = 2 * f + o
        b = 0
        for n in levels:
            b = self.n_max * b + n
        return f * self.boson_dim + b

    def unpack(self, index: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        if not 0 <= index < self.dim:
            raise IndexError(index)
        f, b = divmod(int(index), self.boson_dim)
        occ = tuple((f >> (self.num_modes - 1 - j)) & 1 for j in range(self.num_modes))
        levels = []
        for _ in self.links:
            b, r = divmod(b, self.n_max)
            levels.append(r)
        return occ, tuple(reversed(levels))

    @cached_property
    def occupation_table(self) -> np.ndarray:
        """``(dim, num_modes)`` array of fermion occupations per basis state."""
        f = np.arange(self.fermion_dim)
        bits = (f[:, None] >> (self.num_modes - 1 - np.arange(self.num_modes))) & 1
        return np.repeat(bits, self.boson_dim, axis=0)

    @cached_property
    def level_table(self) -> np.ndarray:
        """``(dim, num_links)`` array of boson levels per basis state."""
        b = np.arange(self.boson_dim)
        L = len(self.links)
        cols = [(b // self.n_max ** (L - 1 - l)) % self.n_max for l in range(L)]
        lev = np.stack(cols, axis=1) if cols else np.zeros((self.boson_dim, 0), int)
        return np.tile(lev, (self.fermion_dim, 1))


def build_space(config: LatticeConfig) -> SpaceDescriptor:
    """Lay out index maps for ``config`` after checking the dimension cap."""
    required = config.total_dim
    if required > config.dim_cap:
        raise DimensionCapExceeded(required, config.dim_cap)
    n = config.num_sites
    links: list[Link] = []
    plaquettes: list[tuple[tuple[int, int], ...]] = []
    if config.dimension == 1:
        for x in range(n):
            links.append(Link(x, x, (x + 1) % n, 0))
    else:
        lx, ly = config.extent

        def site(ix, iy):
            return (ix % lx) + lx * (iy % ly)

        for s in range(n):
            ix, iy = s % lx, s // lx
            links.append(Link(2 * s, s, site(ix + 1, iy), 0))
            links.append(Link(2 * s + 1, s, site(ix, iy + 1), 1))
        for s in range(n):
            ix, iy = s % lx, s // lx
            # counter-clockwise boundary: +x(s), +y(s+x), -x(s+y), -y(s)
            plaquettes.append(
                (
                    (2 * s, 1),
                    (2 * site(ix + 1, iy) + 1, 1),
                    (2 * site(ix, iy + 1), -1),
                    (2 * s + 1, -1),
                )
            )
    return SpaceDescriptor(
        config=config,
        fermion_dim=2**config.num_fermion_modes,
        boson_dim=config.n_max**config.num_links,
        links=tuple(links),
        plaquettes=tuple(plaquettes),
    )


class QOperator:
    """Square operator on the composite space, dense or scipy-sparse.

    Instances are treated as immutable: dense storage is marked read-only
    and arithmetic always returns new objects. The structural flags
    ``is_hermitian``/``is_unitary``/``is_identity`` are verified lazily
    against the tolerances fixed in this module.
    """

    def __init__(self, matrix):
        if sp.issparse(matrix):
            matrix = sp.csr_matrix(matrix, dtype=complex)
        else:
            matrix = np.asarray(matrix, dtype=complex)
            if matrix.flags.writeable and matrix.flags.owndata:
                matrix.setflags(write=False)
            elif matrix.flags.writeable:
                matrix = matrix.copy()
                matrix.setflags(write=False)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"operator must be square, got shape {matrix.shape}")
        self.matrix = matrix

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def dense(self) -> np.ndarray:
        if self.is_sparse:
            return self.matrix.toarray()
        return self.matrix

    def sparse(self) -> sp.csr_matrix:
        return self.matrix if self.is_sparse else sp.csr_matrix(self.matrix)

    def todense(self) -> "QOperator":
        return self if not self.is_sparse else QOperator(self.matrix.toarray())

    @property
    def dag(self) -> "QOperator":
        out = QOperator(self.matrix.conj().T)
        # an undirected sparsity pattern is shared with the adjoint
        if "_block_labels" in self.__dict__:
            out.__dict__["_block_labels"] = self.__dict__["_block_labels"]
        return out

    @classmethod
    def identity(cls, dim: int, sparse: bool = True) -> "QOperator":
        return cls(sp.identity(dim, dtype=complex, format="csr") if sparse else np.eye(dim))

    @classmethod
    def zeros(cls, dim: int) -> "QOperator":
        return cls(sp.csr_matrix((dim, dim), dtype=complex))

    def _other(self, other):
        if not isinstance(other, QOperator):
            return NotImplemented
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return other.matrix

    @staticmethod
    def _wrap(m):
        # sparse + dense yields np.matrix; normalize
        if isinstance(m, np.matrix):
            m = np.asarray(m)
        return QOperator(m)

    def __add__(self, other):
        m = self._other(other)
        if m is NotImplemented:
            return m
        return self._wrap(self.matrix + m)

    def __sub__(self, other):
        m = self._other(other)
        if m is NotImplemented:
            return m
        return self._wrap(self.matrix - m)

    def __matmul__(self, other):
        m = self._other(other)
        if m is NotImplemented:
            return m
        return self._wrap(self.matrix @ m)

    def __mul__(self, scalar):
        if isinstance(scalar, QOperator):
            return NotImplemented
        return QOperator(self.matrix * complex(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return QOperator(-self.matrix)

    def __truediv__(self, scalar):
        return QOperator(self.matrix / complex(scalar))

    def trace(self) -> complex:
        return complex(self.matrix.diagonal().sum())

    def max_abs(self) -> float:
        m = self.matrix
        if sp.issparse(m):
            return float(abs(m).max()) if m.nnz else 0.0
        return float(np.abs(m).max()) if m.size else 0.0

    @cached_property
    def is_hermitian(self) -> bool:
        return (self - self.dag).max_abs() <= HERMITIAN_TOL

    @cached_property
    def is_unitary(self) -> bool:
        from .linalg import product

        gram = product(self.dag, self) if self.dim > 256 else self.dag @ self
        return (gram - QOperator.identity(self.dim)).max_abs() <= UNITARY_TOL

    @cached_property
    def is_identity(self) -> bool:
        return (self - QOperator.identity(self.dim)).max_abs() <= HERMITIAN_TOL

    def __repr__(self):
        kind = "sparse" if self.is_sparse else "dense"
        return f"QOperator(dim={self.dim}, {kind})"


def as_qop(x) -> QOperator:
    return x if isinstance(x, QOperator) else QOperator(x)


_SIGMA_Z = sp.csr_matrix(np.diag([1.0, -1.0]))
_LOWER = np.array([[0.0, 1.0], [0.0, 0.0]])


def fermion_lowering() -> np.ndarray:
    """Local 2x2 annihilator ``|0><1|`` in the (empty, occupied) basis."""
    return _LOWER.copy()


def ladder_lowering(n_max: int) -> np.ndarray:
    """Truncated boson annihilator on levels ``0 .. n_max-1``."""
    return np.diag(np.sqrt(np.arange(1, n_max, dtype=float)), k=1)


def _kron_all(factors) -> sp.csr_matrix:
    out = sp.identity(1, dtype=complex, format="csr")
    for f in factors:
        out = sp.kron(out, f, format="csr")
    return out


def embed(space: SpaceDescriptor, local, *, mode: int | None = None, link: int | None = None) -> QOperator:
    """Place a single-slot operator into the composite space.

    Exactly one of ``mode`` (fermion mode index) or ``link`` must be given.
    Parity-odd fermion operators (purely off-diagonal in the occupation
    basis) receive the Jordan-Wigner string; parity-even ones are placed
    plainly. Operators of mixed parity are rejected.
    """
    local = np.asarray(local.dense() if isinstance(local, QOperator) else local, dtype=complex)
    if (mode is None) == (link is None):
        raise ValueError("give exactly one of mode= or link=")
    M = space.num_modes
    L = len(space.links)
    n = space.n_max
    if mode is not None:
        if not 0 <= mode < M:
            raise KeyError(f"unknown fermion mode {mode}")
        if local.shape != (2, 2):
            raise ValueError(f"fermion slot needs a 2x2 operator, got {local.shape}")
        even = np.diag(np.diag(local))
        odd = local - even
        if np.any(even) and np.any(odd):
            raise ValueError("fermion operator must have definite parity")
        string = _SIGMA_Z if np.any(odd) else sp.identity(2, format="csr")
        factors = [string] * mode + [sp.csr_matrix(local)] + [sp.identity(2)] * (M - mode - 1)
        factors.append(sp.identity(space.boson_dim, format="csr"))
    else:
        if not 0 <= link < L:
            raise KeyError(f"unknown link {link}")
        if local.shape != (n, n):
            raise ValueError(f"link slot needs a {n}x{n} operator, got {local.shape}")
        factors = [sp.identity(space.fermion_dim, format="csr")]
        factors += [sp.identity(n)] * link + [sp.csr_matrix(local)] + [sp.identity(n)] * (L - link - 1)
    return QOperator(_kron_all(factors))


def op_norm(op: QOperator) -> float:
    """Largest singular value."""
    m = op.matrix
    if sp.issparse(m):
        m = m.copy()
        m.eliminate_zeros()
        if m.nnz == 0:
            return 0.0
    elif not np.any(m):
        return 0.0
    from .linalg import block_norm

    return block_norm(QOperator(m) if m is not op.matrix else op)


def defect(a: QOperator, b: QOperator) -> float:
    """``op_norm(a - b)``; exactly zero for identical operators."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if a is b:
        return 0.0
    return op_norm(a - b)


def commutator(a: QOperator, b: QOperator) -> QOperator:
    return a @ b - b @ a


def anticommutator(a: QOperator, b: QOperator) -> QOperator:
    return a @ b + b @ a


def basis_tuples(space: SpaceDescriptor):
    """Iterate every (occupations, levels) pair in composite-index order."""
    occs = product((0, 1), repeat=space.num_modes)
    for occ in occs:
        for lev in product(range(space.n_max), repeat=len(space.links)):
            yield occ, lev
