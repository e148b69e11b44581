# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled contour kernel: 8-connected labeling + Moore boundary tracing.

Mirrors _contour_py exactly; parity is enforced by tests.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef int[8] DR = [0, -1, -1, -1, 0, 1, 1, 1]
cdef int[8] DC = [-1, -1, 0, 1, 1, 1, 0, -1]


cdef inline int off_index(int dr, int dc):
    cdef int i
    for i in range(8):
        if DR[i] == dr and DC[i] == dc:
            return i
    return -1


def extract_contours_raw(mask):
    """Same contract as the pure-Python kernel: list of (N,2) int32 (row,col)."""
    cdef cnp.ndarray[cnp.uint8_t, ndim=2, mode="c"] m = \
        np.ascontiguousarray(np.asarray(mask) != 0, dtype=np.uint8)
    cdef int h = m.shape[0]
    cdef int w = m.shape[1]
    cdef cnp.ndarray[cnp.int32_t, ndim=2, mode="c"] labels = \
        np.zeros((h, w), dtype=np.int32)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] stack = np.empty(h * w, dtype=np.int64)
    cdef int r, c, rr, cc, i, top, lab = 0
    cdef long idx

    starts = []
    for r in range(h):
        for c in range(w):
            if m[r, c] and labels[r, c] == 0:
                lab += 1
                starts.append((r, c))
                top = 0
                stack[top] = r * w + c
                top += 1
                labels[r, c] = lab
                while top > 0:
                    top -= 1
                    idx = stack[top]
                    rr = <int>(idx // w)
                    cc = <int>(idx % w)
                    for i in range(8):
                        if 0 <= rr + DR[i] < h and 0 <= cc + DC[i] < w:
                            if m[rr + DR[i], cc + DC[i]] and labels[rr + DR[i], cc + DC[i]] == 0:
                                labels[rr + DR[i], cc + DC[i]] = lab
                                stack[top] = (rr + DR[i]) * w + (cc + DC[i])
                                top += 1

    out = []
    for i in range(lab):
        out.append(_trace(labels, i + 1, starts[i][0], starts[i][1], h, w))
    return out


cdef _trace(cnp.ndarray[cnp.int32_t, ndim=2, mode="c"] labels,
            int lab, int sr, int sc, int h, int w):
    cdef int cr = sr, cc = sc, br = sr, bc = sc - 1
    cdef int nr = 0, nc = 0, nbr = 0, nbc = 0
    cdef int bi, i, j, k, found
    cdef cnp.ndarray[cnp.uint8_t, ndim=1, mode="c"] state_seen = \
        np.zeros(h * w, dtype=np.uint8)

    found = 0
    for i in range(8):
        nr = sr + DR[i]
        nc = sc + DC[i]
        if 0 <= nr < h and 0 <= nc < w and labels[nr, nc] == lab:
            found = 1
            break
    if not found:
        return np.array([[sr, sc]], dtype=np.int32)

    points = [(sr, sc)]
    # state key: pixel index with a per-direction bit for the backtrack offset
    bi = off_index(br - cr, bc - cc)
    state_seen[cr * w + cc] |= <cnp.uint8_t>(1 << bi)
    while True:
        bi = off_index(br - cr, bc - cc)
        for k in range(1, 9):
            i = (bi + k) % 8
            nr = cr + DR[i]
            nc = cc + DC[i]
            if 0 <= nr < h and 0 <= nc < w and labels[nr, nc] == lab:
                j = (bi + k - 1) % 8
                nbr = cr + DR[j]
                nbc = cc + DC[j]
                break
        bi = off_index(nbr - nr, nbc - nc)
        if state_seen[nr * w + nc] & (1 << bi):
            break
        state_seen[nr * w + nc] |= <cnp.uint8_t>(1 << bi)
        points.append((nr, nc))
        cr, cc, br, bc = nr, nc, nbr, nbc
    return np.array(points, dtype=np.int32)
