"""Dense kernels that exploit exact block structure.

Every physical operator in this model commutes with the total fermion
number, so its matrix splits into blocks with *exact* zeros between them.
Products, sums and spectral functions preserve those zeros, which lets the
expensive eigensolves and matrix products run block by block. The block
partition is read off the nonzero pattern (connected components), so no
symmetry needs to be declared by the caller. Labels are cached on each
:class:`QOperator` and propagated to results, so the pattern scan happens
once per independently built operator.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .space import DENSE_DIM_CAP, DimensionCapExceeded, QOperator

_LABELS = "_block_labels"
_EIGH = "_eigh"


def pattern_labels(m) -> np.ndarray:
    """Connected-component label of every index in the nonzero pattern of ``m``."""
    n = m.shape[0]
    if sp.issparse(m):
        p = sp.csr_matrix(m, copy=True)
        p.eliminate_zeros()
        rows, cols = p.nonzero()
    else:
        rows, cols = np.nonzero(m)
    g = sp.csr_matrix((np.ones(rows.size, np.int8), (rows, cols)), shape=(n, n))
    return connected_components(g, directed=False)[1]


def labels(op) -> np.ndarray:
    if isinstance(op, QOperator):
        cached = op.__dict__.get(_LABELS)
        if cached is None:
            cached = pattern_labels(op.matrix)
            op.__dict__[_LABELS] = cached
        return cached
    return pattern_labels(op)


def merge_labels(*labelings) -> np.ndarray:
    """Finest partition that is coarser than every given labeling."""
    if len(labelings) == 1:
        return labelings[0]
    n = labelings[0].size
    idx = np.arange(n)
    rows, cols = [], []
    for lab in labelings:
        _, first = np.unique(lab, return_index=True)
        rows.append(idx)
        cols.append(first[lab])
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    g = sp.csr_matrix((np.ones(r.size, np.int8), (r, c)), shape=(n, n))
    return connected_components(g, directed=False)[1]


def split(lab: np.ndarray) -> list[np.ndarray]:
    order = np.argsort(lab, kind="stable")
    bounds = np.flatnonzero(np.diff(lab[order])) + 1
    return np.split(order, bounds)


# blocks smaller than this are merged; any union of blocks is still invariant
MIN_BLOCK = 64


def coarsen(blocks: list[np.ndarray], min_size: int = MIN_BLOCK) -> list[np.ndarray]:
    """Merge consecutive small blocks so per-block overhead stays bounded."""
    out, pending, size = [], [], 0
    for idx in blocks:
        if idx.size >= min_size:
            out.append(idx)
            continue
        pending.append(idx)
        size += idx.size
        if size >= min_size:
            out.append(np.concatenate(pending))
            pending, size = [], 0
    if pending:
        out.append(np.concatenate(pending))
    return out


def block_partition(*mats) -> list[np.ndarray]:
    """Index sets of the common block-diagonal structure of ``mats``."""
    return split(merge_labels(*[labels(m) for m in mats]))


def _require_dense_ok(dim: int):
    if dim > DENSE_DIM_CAP:
        raise DimensionCapExceeded(dim, DENSE_DIM_CAP, what="dense operator")


def _blocks_of(m, blocks):
    """Dense diagonal blocks of ``m`` for a list of index sets."""
    if sp.issparse(m) and m.shape[0] <= 2048:
        m = m.toarray()
    if not sp.issparse(m):
        for idx in blocks:
            yield m[np.ix_(idx, idx)]
        return
    order = np.concatenate(blocks)
    perm = sp.csr_matrix(m)[order][:, order].tocsr()
    start = 0
    for idx in blocks:
        stop = start + idx.size
        yield perm[start:stop, start:stop].toarray()
        start = stop


def with_labels(mat, lab) -> QOperator:
    out = QOperator(mat)
    out.__dict__[_LABELS] = lab
    return out


def blockwise(fn, *ops) -> QOperator:
    """Apply ``fn`` to matching diagonal blocks of ``ops`` and reassemble.

    ``fn`` receives dense sub-blocks and must return one square dense block.
    Only valid for functions built from sums, products and spectral maps,
    which cannot create entries between blocks.
    """
    ops = [o if isinstance(o, QOperator) else QOperator(o) for o in ops]
    n = ops[0].dim
    _require_dense_ok(n)
    lab = merge_labels(*[labels(o) for o in ops])
    blocks = coarsen(split(lab))
    mats = [o.matrix for o in ops]
    if len(blocks) == 1:
        return with_labels(fn(*[o.dense() for o in ops]), lab)
    out = np.zeros((n, n), dtype=complex)
    for idx, subs in zip(blocks, zip(*[_blocks_of(m, blocks) for m in mats])):
        out[np.ix_(idx, idx)] = fn(*subs)
    return with_labels(out, lab)


def eigh(h) -> tuple[np.ndarray, list[tuple[np.ndarray, np.ndarray, np.ndarray]]]:
    """Blockwise eigendecomposition of a hermitian operator (cached).

    Returns all eigenvalues (ascending) and the per-block
    ``(indices, eigenvalues, eigenvectors)`` triples.
    """
    op = h if isinstance(h, QOperator) else QOperator(h)
    cached = op.__dict__.get(_EIGH)
    if cached is not None:
        return cached
    _require_dense_ok(op.dim)
    parts = []
    blocks = coarsen(split(labels(op)))
    for idx, sub in zip(blocks, _blocks_of(op.matrix, blocks)):
        w, v = np.linalg.eigh(0.5 * (sub + sub.conj().T))
        parts.append((idx, w, v))
    evals = np.sort(np.concatenate([w for _, w, _ in parts]))
    op.__dict__[_EIGH] = (evals, parts)
    return evals, parts


def eigvalsh(h) -> np.ndarray:
    op = h if isinstance(h, QOperator) else QOperator(h)
    cached = op.__dict__.get(_EIGH)
    if cached is not None:
        return cached[0]
    _require_dense_ok(op.dim)
    vals = []
    blocks = coarsen(split(labels(op)))
    for sub in _blocks_of(op.matrix, blocks):
        vals.append(np.linalg.eigvalsh(0.5 * (sub + sub.conj().T)))
    return np.sort(np.concatenate(vals))


def spectral_map(h, f) -> QOperator:
    """``f(H)`` for hermitian ``H`` via its (blockwise) eigendecomposition."""
    op = h if isinstance(h, QOperator) else QOperator(h)
    n = op.dim
    _, parts = eigh(op)
    out = np.zeros((n, n), dtype=complex)
    for idx, w, v in parts:
        out[np.ix_(idx, idx)] = (v * f(w)) @ v.conj().T
    return with_labels(out, labels(op))


def expm_hermitian(k, t: complex) -> QOperator:
    """``exp(t * K)`` for hermitian ``K``; ``t = -1j * tau`` gives a propagator."""
    return spectral_map(k, lambda w: np.exp(t * w))


def conjugate(u: QOperator, x: QOperator) -> QOperator:
    """``U^dagger X U``, blockwise when the patterns allow it."""
    return blockwise(lambda a, b: a.conj().T @ b @ a, u, x)


def product(*ops: QOperator) -> QOperator:
    def f(*blocks):
        out = blocks[0]
        for b in blocks[1:]:
            out = out @ b
        return out

    return blockwise(f, *ops)


def trace_product(a, b) -> complex:
    """``tr[A B]`` without forming the product."""
    a = a.matrix if isinstance(a, QOperator) else a
    b = b.matrix if isinstance(b, QOperator) else b
    if sp.issparse(a) and sp.issparse(b):
        return complex(a.multiply(b.T).sum())
    if sp.issparse(a):
        a, b = b, a
    if sp.issparse(b):
        return complex(b.multiply(np.asarray(a).T).sum())
    return complex(np.einsum("ij,ji->", a, b))


def block_norm(op: QOperator) -> float:
    """Operator norm as the largest blockwise singular value.

    Uses the top eigenvalue of ``B^dag B`` per block, which is accurate to
    relative machine precision for the largest singular value and much
    cheaper than a full SVD.
    """
    best = 0.0
    blocks = coarsen(split(labels(op)))
    for sub in _blocks_of(op.matrix, blocks):
        if not np.any(sub):
            continue
        k = sub.shape[0]
        gram = sub.conj().T @ sub
        top = scipy.linalg.eigvalsh(gram, subset_by_index=[k - 1, k - 1])[0]
        best = max(best, float(np.sqrt(max(top, 0.0))))
    return best
