"""Synthetic generators and file formats.

Three formats are supported: binary PPM (P6) and PGM (P5) images with
maxval 255, and a raw little-endian tensor container.  The container layout
is a 30-byte header (magic ``TNS3``, a version byte, a scalar-kind byte
where 0 means real float64, then m, n, p as unsigned 64-bit integers)
followed by float64 payload in slice-major order, column-major within each
slice.

Readers reject malformed input with :class:`FormatError` rather than
truncating or guessing; operating-system failures surface as ``OSError``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "FormatError",
    "PolyDecaySpec",
    "poly_decay",
    "add_noise",
    "read_tns",
    "write_tns",
    "read_ppm",
    "write_ppm",
    "read_pgm",
    "write_pgm",
    "read_pgm_stack",
]

TNS_MAGIC = b"TNS3"
TNS_VERSION = 1
TNS_REAL64 = 0
_TNS_HEADER = struct.Struct("<4sBBQQQ")


class FormatError(ValueError):
    """Raised when a file's content does not match its declared format."""


@dataclass(frozen=True)
class PolyDecaySpec:
    """Square-slice diagonal test tensor with polynomially decaying tubes.

    Slice j (1-based) has min(r, j) leading ones on the diagonal followed
    by 2**-exponent, 3**-exponent, ... down the remaining entries.
    """

    n: int
    p_tubes: int
    r: int = 10
    exponent: float = 1.0

    def __post_init__(self):
        if self.n < 1 or self.p_tubes < 1:
            raise ValueError("dimensions must be >= 1")
        if self.r < 1:
            raise ValueError("plateau length r must be >= 1")
        if self.exponent <= 0:
            raise ValueError("decay exponent must be positive")


def poly_decay(spec):
    """Materialize a :class:`PolyDecaySpec` as an (n, n, p) tensor."""
    n, p = spec.n, spec.p_tubes
    a = np.zeros((n, n, p))
    diag = np.arange(n)
    for j in range(1, p + 1):
        plateau = min(spec.r, j)
        d = np.ones(n)
        if plateau < n:
            d[plateau:] = np.arange(2, n - plateau + 2, dtype=float) ** -spec.exponent
        a[diag, diag, j - 1] = d
    return a


def add_noise(a, sigma, rng):
    """Additive white Gaussian noise with standard deviation ``sigma``."""
    a = np.asarray(a)
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return a.copy()
    return a + sigma * rng.standard_normal(a.shape)


def write_tns(path, a):
    """Write a real tensor to the raw container format."""
    a = np.asarray(a)
    if a.ndim != 3:
        raise ValueError(f"expected 3 axes, got shape {a.shape}")
    if np.iscomplexobj(a):
        raise ValueError("the container format only stores real tensors")
    m, n, p = a.shape
    header = _TNS_HEADER.pack(TNS_MAGIC, TNS_VERSION, TNS_REAL64, m, n, p)
    payload = np.ascontiguousarray(a.transpose(2, 1, 0), dtype="<f8").tobytes()
    Path(path).write_bytes(header + payload)


def read_tns(path):
    """Read a tensor from the raw container format."""
    data = Path(path).read_bytes()
    if len(data) < _TNS_HEADER.size:
        raise FormatError(f"{path}: header truncated")
    magic, version, kind, m, n, p = _TNS_HEADER.unpack_from(data)
    if magic != TNS_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != TNS_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if kind != TNS_REAL64:
        raise FormatError(f"{path}: unsupported scalar kind {kind}")
    if min(m, n, p) < 1:
        raise FormatError(f"{path}: degenerate dimensions {(m, n, p)}")
    expected = _TNS_HEADER.size + 8 * m * n * p
    if len(data) != expected:
        raise FormatError(
            f"{path}: payload is {len(data) - _TNS_HEADER.size} bytes, "
            f"expected {expected - _TNS_HEADER.size}"
        )
    flat = np.frombuffer(data, dtype="<f8", offset=_TNS_HEADER.size)
    return flat.reshape(p, n, m).transpose(2, 1, 0).astype(np.float64)


def _parse_netpbm_header(data, magic, path):
    if not data.startswith(magic):
        raise FormatError(f"{path}: bad magic, expected {magic.decode()}")
    pos = len(magic)
    fields = []
    while len(fields) < 3:
        # skip whitespace and comment lines between header fields
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        token = data[start:pos]
        if not token.isdigit():
            raise FormatError(f"{path}: malformed header token {token!r}")
        fields.append(int(token))
    if pos >= len(data):
        raise FormatError(f"{path}: header ends before payload")
    pos += 1  # the single whitespace byte that terminates the header
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise FormatError(f"{path}: degenerate image size {width}x{height}")
    if maxval != 255:
        raise FormatError(f"{path}: unsupported maxval {maxval}")
    return width, height, pos


def read_ppm(path):
    """Read a binary P6 image as an (m, n, 3) tensor with values 0..255."""
    data = Path(path).read_bytes()
    width, height, pos = _parse_netpbm_header(data, b"P6", path)
    need = 3 * width * height
    if len(data) - pos != need:
        raise FormatError(f"{path}: payload is {len(data) - pos} bytes, expected {need}")
    pix = np.frombuffer(data, dtype=np.uint8, offset=pos)
    return pix.reshape(height, width, 3).astype(np.float64)


def _quantize(a):
    return np.floor(np.clip(a, 0.0, 255.0) + 0.5).astype(np.uint8)


def write_ppm(path, a):
    """Write an (m, n, 3) tensor as binary P6, clamping and rounding."""
    a = np.asarray(a)
    if a.ndim != 3 or a.shape[2] != 3:
        raise ValueError(f"expected (m, n, 3), got {a.shape}")
    m, n = a.shape[:2]
    header = f"P6\n{n} {m}\n255\n".encode()
    Path(path).write_bytes(header + _quantize(a).tobytes())


def read_pgm(path):
    """Read a binary P5 image as an (m, n) array with values 0..255."""
    data = Path(path).read_bytes()
    width, height, pos = _parse_netpbm_header(data, b"P5", path)
    need = width * height
    if len(data) - pos != need:
        raise FormatError(f"{path}: payload is {len(data) - pos} bytes, expected {need}")
    pix = np.frombuffer(data, dtype=np.uint8, offset=pos)
    return pix.reshape(height, width).astype(np.float64)


def write_pgm(path, a):
    """Write an (m, n) array or (m, n, 1) tensor as binary P5."""
    a = np.asarray(a)
    if a.ndim == 3 and a.shape[2] == 1:
        a = a[:, :, 0]
    if a.ndim != 2:
        raise ValueError(f"expected (m, n) or (m, n, 1), got {a.shape}")
    m, n = a.shape
    header = f"P5\n{n} {m}\n255\n".encode()
    Path(path).write_bytes(header + _quantize(a).tobytes())


def read_pgm_stack(paths):
    """Read same-sized P5 frames into an (m, n, frames) tensor."""
    paths = list(paths)
    if not paths:
        raise ValueError("need at least one frame")
    frames = [read_pgm(p) for p in paths]
    shape = frames[0].shape
    for p, f in zip(paths, frames):
        if f.shape != shape:
            raise FormatError(f"{p}: frame size {f.shape} differs from {shape}")
    return np.stack(frames, axis=2)
