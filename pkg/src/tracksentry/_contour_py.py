"""Pure-Python contour kernel: 8-connected labeling + Moore boundary tracing.

Fallback used when the compiled extension is unavailable. Must produce
byte-identical output to the Cython kernel (enforced by tests).
"""

import numpy as np
from scipy import ndimage

_EIGHT = np.ones((3, 3), dtype=np.int32)

# clockwise neighbor offsets starting at West
_OFFS = ((0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1))
_OFF_INDEX = {o: i for i, o in enumerate(_OFFS)}


def extract_contours_raw(mask):
    """Trace the outer boundary of each 8-connected foreground component.

    Returns a list of (N, 2) int32 arrays of (row, col) pixel coordinates,
    ordered by topmost-leftmost start pixel. Consecutive points are
    8-neighbors; the polygon is implicitly closed.
    """
    mask = np.ascontiguousarray(mask)
    labels, n = ndimage.label(mask != 0, structure=_EIGHT)
    if n == 0:
        return []
    flat = labels.ravel()
    pos = np.flatnonzero(flat)
    labs, first = np.unique(flat[pos], return_index=True)
    starts = pos[first]
    order = np.argsort(starts, kind="stable")
    w = labels.shape[1]
    out = []
    for k in order:
        sr, sc = divmod(int(starts[k]), w)
        out.append(_trace(labels, int(labs[k]), sr, sc))
    return out


def _trace(labels, lab, sr, sc):
    h, w = labels.shape

    def fg(r, c):
        return 0 <= r < h and 0 <= c < w and labels[r, c] == lab

    points = [(sr, sc)]
    if not any(fg(sr + dr, sc + dc) for dr, dc in _OFFS):
        return np.array(points, dtype=np.int32)

    cur = (sr, sc)
    back = (sr, sc - 1)  # West of the row-major first pixel is background
    seen = {(cur, back)}
    while True:
        bi = _OFF_INDEX[(back[0] - cur[0], back[1] - cur[1])]
        for k in range(1, 9):
            i = (bi + k) % 8
            nb = (cur[0] + _OFFS[i][0], cur[1] + _OFFS[i][1])
            if fg(*nb):
                j = (bi + k - 1) % 8
                new_back = (cur[0] + _OFFS[j][0], cur[1] + _OFFS[j][1])
                break
        state = (nb, new_back)
        if state in seen:
            break
        seen.add(state)
        points.append(nb)
        cur, back = nb, new_back
    return np.array(points, dtype=np.int32)
