"""Small helpers for dense object arrays of exact scalars.

Zero entries are stored as the python int 0 wherever possible so that the
sparse contraction below can skip them cheaply.
"""
from __future__ import annotations

from collections import defaultdict
from fractions import Fraction
from itertools import product

import numpy as np


def is_zero(x) -> bool:
    if isinstance(x, (int, Fraction)):
        return x == 0
    z = getattr(x, "is_zero", None)
    if z is not None:
        return z()
    return not x


def d(x, name):
    """Partial derivative of a scalar; python numbers differentiate to 0."""
    if hasattr(x, "diff"):
        r = x.diff(name)
        return 0 if is_zero(r) else r
    return 0


def clean(arr):
    """Replace zero scalars by the int 0 (in place) and return the array."""
    flat = arr.reshape(-1)
    for i, x in enumerate(flat):
        if not isinstance(x, int) and is_zero(x):
            flat[i] = 0
    return arr


def zeros(shape):
    a = np.empty(shape, dtype=object)
    a.fill(0)
    return a


def asobj(arr):
    a = np.array(arr, dtype=object)
    return clean(a)


def grad(arr, coords):
    """Array of partial derivatives, derivative index first."""
    out = zeros((len(coords),) + arr.shape)
    for c, name in enumerate(coords):
        for idx in np.ndindex(arr.shape):
            out[(c,) + idx] = d(arr[idx], name)
    return out


def amap(fn, arr):
    out = zeros(arr.shape)
    for idx in np.ndindex(arr.shape):
        x = arr[idx]
        out[idx] = fn(x)
    return clean(out)


def all_zero(arr) -> bool:
    return all(is_zero(x) for x in np.asarray(arr, dtype=object).reshape(-1))


def _sparse(arr, letters):
    """Nonzero entries of arr honouring repeated letters (diagonals)."""
    out = {}
    pos = {}
    for i, l in enumerate(letters):
        pos.setdefault(l, []).append(i)
    uniq = "".join(dict.fromkeys(letters))
    for idx in np.ndindex(arr.shape):
        ok = True
        for l, ps in pos.items():
            if len(ps) > 1 and any(idx[p] != idx[ps[0]] for p in ps[1:]):
                ok = False
                break
        if not ok:
            continue
        x = arr[idx]
        if is_zero(x):
            continue
        key = tuple(idx[pos[l][0]] for l in uniq)
        out[key] = x
    return uniq, out


def einsum(spec: str, *ops, dim: int | None = None):
    """Sparse einsum over object arrays of exact scalars."""
    ins, out_letters = spec.replace(" ", "").split("->")
    terms = ins.split(",")
    if len(terms) != len(ops):
        raise ValueError("operand count mismatch")
    ops = [np.asarray(o, dtype=object) for o in ops]
    if dim is None:
        dim = ops[0].shape[0] if ops[0].ndim else 1
    sparse = [_sparse(o, t) for o, t in zip(ops, terms)]
    cur_letters, cur = sparse[0]
    for k in range(1, len(sparse)):
        letters, entries = sparse[k]
        shared = [l for l in letters if l in cur_letters]
        sh_cur = [cur_letters.index(l) for l in shared]
        sh_new = [letters.index(l) for l in shared]
        extra = [i for i, l in enumerate(letters) if l not in cur_letters]
        new_letters = cur_letters + "".join(letters[i] for i in extra)
        later = set(out_letters)
        for t in sparse[k + 1:]:
            later |= set(t[0])
        keep = [i for i, l in enumerate(new_letters) if l in later]
        kept_letters = "".join(new_letters[i] for i in keep)
        group = defaultdict(list)
        for idx, v in entries.items():
            group[tuple(idx[i] for i in sh_new)].append((tuple(idx[i] for i in extra), v))
        acc: dict = {}
        for idx, v in cur.items():
            key = tuple(idx[i] for i in sh_cur)
            for ext, w in group.get(key, ()):
                full = idx + ext
                kk = tuple(full[i] for i in keep)
                p = v * w
                if kk in acc:
                    acc[kk] = acc[kk] + p
                else:
                    acc[kk] = p
        cur_letters = kept_letters
        cur = {i: v for i, v in acc.items() if not is_zero(v)}
    # final projection to the output letters
    if len(sparse) == 1:
        keep = [cur_letters.index(l) for l in out_letters]
        acc = {}
        for idx, v in cur.items():
            kk = tuple(idx[i] for i in keep)
            acc[kk] = acc[kk] + v if kk in acc else v
        cur = acc
    else:
        perm = [cur_letters.index(l) for l in out_letters]
        cur = {tuple(idx[i] for i in perm): v for idx, v in cur.items()}
    if not out_letters:
        total = cur.get((), 0)
        return 0 if is_zero(total) else total
    res = zeros((dim,) * len(out_letters))
    for idx, v in cur.items():
        if not is_zero(v):
            res[idx] = v
    return res


def outer(a, b):
    a = np.asarray(a, dtype=object)
    b = np.asarray(b, dtype=object)
    res = zeros(a.shape + b.shape)
    for i in np.ndindex(a.shape):
        if is_zero(a[i]):
            continue
        for j in np.ndindex(b.shape):
            if is_zero(b[j]):
                continue
            res[i + j] = a[i] * b[j]
    return res


def scal(c, arr):
    """c * arr with zero skipping."""
    arr = np.asarray(arr, dtype=object)
    res = zeros(arr.shape)
    if is_zero(c):
        return res
    for i in np.ndindex(arr.shape):
        if not is_zero(arr[i]):
            res[i] = c * arr[i]
    return clean(res)


def add(*arrs):
    res = zeros(np.asarray(arrs[0]).shape)
    for a in arrs:
        a = np.asarray(a, dtype=object)
        for i in np.ndindex(a.shape):
            x = a[i]
            if is_zero(x):
                continue
            res[i] = x if isinstance(res[i], int) and res[i] == 0 else res[i] + x
    return clean(res)


def sub(a, b):
    return add(a, scal(-1, b))


def identity(n):
    res = zeros((n, n))
    for i in range(n):
        res[i, i] = 1
    return res


def solve_inverse(mat, is_unit=None):
    """Gauss-Jordan inverse of a square object matrix over a field-like scalar."""
    from ..errors import DegenerateMetric

    n = mat.shape[0]
    A = [[mat[i, j] for j in range(n)] + [1 if i == j else 0 for j in range(n)] for i in range(n)]
    unit = is_unit or (lambda x: not is_zero(x))
    for col in range(n):
        piv = None
        for r in range(col, n):
            if unit(A[r][col]):
                piv = r
                break
        if piv is None:
            raise DegenerateMetric("matrix is singular (no usable pivot)")
        A[col], A[piv] = A[piv], A[col]
        p = A[col][col]
        inv = Fraction(1, p) if isinstance(p, int) else 1 / p
        A[col] = [0 if is_zero(x) else x * inv for x in A[col]]
        for r in range(n):
            if r == col or is_zero(A[r][col]):
                continue
            f = A[r][col]
            A[r] = [x if is_zero(y) else x - f * y for x, y in zip(A[r], A[col])]
    res = zeros((n, n))
    for i in range(n):
        for j in range(n):
            res[i, j] = A[i][n + j]
    return clean(res)


def determinant(mat, is_unit=None):
    from ..errors import DegenerateMetric

    n = mat.shape[0]
    A = [[mat[i, j] for j in range(n)] for i in range(n)]
    unit = is_unit or (lambda x: not is_zero(x))
    det = 1
    for col in range(n):
        piv = None
        for r in range(col, n):
            if unit(A[r][col]):
                piv = r
                break
        if piv is None:
            if all(is_zero(A[r][col]) for r in range(col, n)):
                return 0
            raise DegenerateMetric("no usable pivot for determinant")
        if piv != col:
            A[col], A[piv] = A[piv], A[col]
            det = -det
        p = A[col][col]
        det = det * p
        for r in range(col + 1, n):
            if is_zero(A[r][col]):
                continue
            f = Fraction(A[r][col], p) if isinstance(p, int) and isinstance(A[r][col], int) else A[r][col] / p
            A[r] = [x if is_zero(y) else x - f * y for x, y in zip(A[r], A[col])]
    return det


def index_tuples(n, rank):
    return product(range(n), repeat=rank)
