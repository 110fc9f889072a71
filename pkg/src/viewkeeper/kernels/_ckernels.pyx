# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled versions of the kernels in ``_pykernels``; identical semantics."""

from cpython.list cimport PyList_Append
from cpython.tuple cimport PyTuple_New, PyTuple_SET_ITEM
from cpython.ref cimport Py_INCREF


cdef inline tuple _pick(tuple row, tuple idx):
    cdef Py_ssize_t k, n = len(idx)
    cdef tuple out = PyTuple_New(n)
    cdef object v
    for k in range(n):
        v = row[<Py_ssize_t>idx[k]]
        Py_INCREF(v)
        PyTuple_SET_ITEM(out, k, v)
    return out


def key_set(rows, idx):
    cdef tuple tidx = tuple(idx)
    cdef set out = set()
    cdef tuple row
    cdef Py_ssize_t i
    if len(tidx) == 1:
        i = tidx[0]
        for row in rows:
            out.add(row[i])
    else:
        for row in rows:
            out.add(_pick(row, tidx))
    return out


def project_distinct(rows, idx):
    cdef tuple tidx = tuple(idx)
    cdef set out = set()
    cdef tuple row
    for row in rows:
        out.add(_pick(row, tidx))
    return out


def semijoin(rows, idx, set keys):
    cdef tuple tidx = tuple(idx)
    cdef list out = []
    cdef tuple row
    cdef Py_ssize_t i
    if len(tidx) == 1:
        i = tidx[0]
        for row in rows:
            if row[i] in keys:
                PyList_Append(out, row)
    else:
        for row in rows:
            if _pick(row, tidx) in keys:
                PyList_Append(out, row)
    return out


def hash_join(left, left_idx, right, right_idx):
    cdef tuple lidx = tuple(left_idx)
    cdef tuple ridx = tuple(right_idx)
    cdef dict table = {}
    cdef list out = []
    cdef list bucket
    cdef tuple l, r
    cdef object key
    cdef bint single = len(ridx) == 1
    cdef Py_ssize_t i = lidx[0], j = ridx[0]
    for r in right:
        key = r[j] if single else _pick(r, ridx)
        bucket = table.get(key)
        if bucket is None:
            table[key] = [r]
        else:
            PyList_Append(bucket, r)
    for l in left:
        key = l[i] if single else _pick(l, lidx)
        bucket = table.get(key)
        if bucket is not None:
            for r in bucket:
                PyList_Append(out, l + r)
    return out


def filter_equal(rows, pairs):
    cdef list out = []
    cdef tuple row
    cdef tuple flat = tuple(pairs)
    cdef Py_ssize_t k, n = len(flat)
    cdef bint keep
    for row in rows:
        keep = True
        for k in range(n):
            a, b = flat[k]
            if row[a] != row[b]:
                keep = False
                break
        if keep:
            PyList_Append(out, row)
    return out
