"""Binary PGM (P5) / PPM (P6) readers and writers.

Masks: P5 maxval 255, nonzero = foreground. RGB frames: P6 maxval 255.
Depth frames: P5 maxval 65535, big-endian, values in millimeters.
"""

import numpy as np

from .errors import ParseError


def _read_header(f, magic):
    got = f.read(2)
    if got != magic:
        raise ParseError(f"expected {magic.decode()} file, got {got!r}")
    fields = []
    while len(fields) < 3:
        line = f.readline()
        if not line:
            raise ParseError("truncated PNM header")
        body = line.split(b"#", 1)[0]
        fields.extend(body.split())
    width, height, maxval = (int(x) for x in fields[:3])
    return width, height, maxval


def read_pgm(path):
    """Read a P5 file into a uint8 or uint16 (maxval > 255) array."""
    with open(path, "rb") as f:
        w, h, maxval = _read_header(f, b"P5")
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
        data = np.frombuffer(f.read(w * h * dtype.itemsize), dtype=dtype)
    if data.size != w * h:
        raise ParseError(f"{path}: truncated pixel data")
    out = data.reshape(h, w)
    return out.astype(np.uint16) if maxval > 255 else out.copy()


def write_pgm(path, img):
    img = np.asarray(img)
    if img.dtype == np.uint8:
        maxval, payload = 255, img.tobytes()
    else:
        maxval, payload = 65535, img.astype(">u2").tobytes()
    with open(path, "wb") as f:
        f.write(f"P5\n{img.shape[1]} {img.shape[0]}\n{maxval}\n".encode())
        f.write(payload)


def read_ppm(path):
    """Read a P6 file into an (H, W, 3) uint8 array."""
    with open(path, "rb") as f:
        w, h, maxval = _read_header(f, b"P6")
        if maxval > 255:
            raise ParseError(f"{path}: 16-bit PPM not supported")
        data = np.frombuffer(f.read(w * h * 3), dtype=np.uint8)
    if data.size != w * h * 3:
        raise ParseError(f"{path}: truncated pixel data")
    return data.reshape(h, w, 3).copy()


def write_ppm(path, img):
    img = np.ascontiguousarray(img, dtype=np.uint8)
    with open(path, "wb") as f:
        f.write(f"P6\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        f.write(img.tobytes())
