"""Random sketching maps and the tensor operator sets built from them.

Three matrix sketch kernels are provided (dense Gaussian, subsampled
randomized Hadamard, count sketch), each one a map that compresses the
column dimension: ``sketch(M, s) ~ M @ S`` with S of width s and
``E[S S^T] = I`` for the Gaussian and Hadamard kinds, and
``E norm(M S)^2 = norm(M)^2`` for all three.

An operator set holds the four tensor operators used by the two-sided
methods: row maps of width k for the range and co-range, and row maps of
width s for the core sketch.  In pure mode only the first frontal slice is
random and the rest are zero; in data-aware mode the maps are sketched
transposes of the data's first frontal slice.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SeedStream",
    "fwht",
    "gaussian_projection",
    "srht",
    "count_sketch",
    "OperatorSet",
    "make_operator_set",
    "compute_sketches",
]

OPERATOR_KINDS = ("gaussian", "srht", "count")
OPERATOR_MODES = ("pure", "data-aware")


def _encode_id(x):
    if isinstance(x, (int, np.integer)):
        return int(x)
    digest = hashlib.blake2b(str(x).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class SeedStream:
    """Deterministic substream factory over a single master seed.

    Substreams are identified by a tuple of ints and/or strings; the same
    master seed and identifiers always reproduce the same generator, on any
    platform, regardless of how many other substreams were drawn.
    """

    master: int

    def _sequence(self, ids):
        entropy = [int(self.master)] + [_encode_id(x) for x in ids]
        return np.random.SeedSequence(entropy)

    def substream(self, *ids):
        """A fresh numpy Generator for the given identifiers."""
        return np.random.default_rng(self._sequence(ids))

    def label(self, *ids):
        """A stable 64-bit integer naming the substream (for reports)."""
        lo, hi = self._sequence(ids).generate_state(2, np.uint32)
        return int(hi) << 32 | int(lo)


def _next_pow2(n):
    m = 1
    while m < n:
        m *= 2
    return m


def fwht(x):
    """Walsh-Hadamard transform along the last axis, Sylvester ordering.

    The last axis length must be a power of two.  Unnormalized: applying
    twice multiplies by the axis length.  Runs in O(n log n) per vector via
    in-place butterflies on a copy.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    if n & (n - 1) or n == 0:
        raise ValueError(f"axis length must be a power of two, got {n}")
    y = x.copy()
    h = 1
    while h < n:
        z = y.reshape(y.shape[:-1] + (n // (2 * h), 2, h))
        top = z[..., 0, :] + z[..., 1, :]
        bot = z[..., 0, :] - z[..., 1, :]
        y = np.stack((top, bot), axis=-2).reshape(y.shape)
        h *= 2
    return y


def gaussian_projection(m, s, rng):
    """Compress columns with a scaled dense Gaussian map: M @ G / sqrt(s)."""
    m = np.asarray(m)
    if m.ndim != 2:
        raise ValueError("expected a matrix")
    if s < 1:
        raise ValueError("sketch width must be >= 1")
    g = rng.standard_normal((m.shape[1], s))
    return m @ (g / np.sqrt(s))


def _srht_signs_and_cols(dim, width, rng):
    """Draw order shared by the matrix path and the explicit-map path."""
    padded = _next_pow2(dim)
    if width > padded:
        raise ValueError(f"sketch width {width} exceeds padded dimension {padded}")
    signs = rng.integers(0, 2, size=padded) * 2.0 - 1.0
    cols = rng.choice(padded, size=width, replace=False)
    return padded, signs, cols


def srht(m, s, rng):
    """Subsampled randomized Hadamard sketch of the columns of ``m``.

    Zero-pads the column dimension to the next power of two, flips column
    signs, applies the fast Walsh-Hadamard transform to every row, samples
    s columns without replacement and scales by 1/sqrt(s).
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("expected a matrix")
    n = m.shape[1]
    if not 1 <= s <= n:
        raise ValueError(f"sketch width must be in [1, {n}], got {s}")
    padded, signs, cols = _srht_signs_and_cols(n, s, rng)
    md = np.zeros((m.shape[0], padded))
    md[:, :n] = m * signs[:n]
    h = fwht(md)
    return h[:, cols] / np.sqrt(s)


def count_sketch(m, s, rng):
    """Streaming count sketch: each column lands in one signed bucket."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("expected a matrix")
    if s < 1:
        raise ValueError("sketch width must be >= 1")
    n = m.shape[1]
    buckets = rng.integers(0, s, size=n)
    signs = rng.integers(0, 2, size=n) * 2.0 - 1.0
    out_t = np.zeros((s, m.shape[0]))
    np.add.at(out_t, buckets, (m * signs).T)
    return out_t.T


def _gaussian_map_t(dim, width, rng):
    """Transposed Gaussian map, shape (width, dim)."""
    return rng.standard_normal((dim, width)).T / np.sqrt(width)


def _srht_map_t(dim, width, rng):
    """Transposed Hadamard map, shape (width, dim), built one column of H
    per sampled index so the full Hadamard matrix is never materialized."""
    padded, signs, cols = _srht_signs_and_cols(dim, width, rng)
    basis = np.zeros((width, padded))
    basis[np.arange(width), cols] = 1.0
    hrows = fwht(basis)  # row r is H[cols[r], :] == H[:, cols[r]]
    return hrows[:, :dim] * signs[:dim] / np.sqrt(width)


def _count_map_t(dim, width, rng):
    """Transposed count-sketch map, shape (width, dim): one signed entry
    per column."""
    buckets = rng.integers(0, width, size=dim)
    signs = rng.integers(0, 2, size=dim) * 2.0 - 1.0
    out = np.zeros((width, dim))
    out[buckets, np.arange(dim)] = signs
    return out


_MAP_BUILDERS = {
    "gaussian": _gaussian_map_t,
    "srht": _srht_map_t,
    "count": _count_map_t,
}

_DATA_SKETCHES = {
    "gaussian": gaussian_projection,
    "srht": srht,
    "count": count_sketch,
}


@dataclass(frozen=True, eq=False)
class OperatorSet:
    """The four sketching operators for one method invocation.

    ``left_map`` (k, m, p) and ``right_map`` (k, n, p) capture co-range and
    range; ``core_left`` (s, m, p) and ``core_right`` (s, n, p) feed the
    small core sketch.  ``seed`` is an optional label for reports.
    """

    kind: str
    mode: str
    left_map: np.ndarray
    right_map: np.ndarray
    core_left: np.ndarray
    core_right: np.ndarray
    seed: int | None = None

    @property
    def k(self):
        return self.left_map.shape[0]

    @property
    def s(self):
        return self.core_left.shape[0]


def make_operator_set(kind, mode, m, n, p, k, s, rng, a=None, seed=None):
    """Draw the four operators for an (m, n, p) input.

    Pure mode puts independent random maps in the first frontal slice and
    zeros elsewhere, except the count kind which fills all p slices with
    independent draws.  Data-aware mode sketches the transpose of the first
    frontal slice of ``a`` instead.
    """
    if kind not in OPERATOR_KINDS:
        raise ValueError(f"unknown operator kind {kind!r}")
    if mode not in OPERATOR_MODES:
        raise ValueError(f"unknown operator mode {mode!r}")
    if not 1 <= k <= min(m, n):
        raise ValueError(f"k must be in [1, {min(m, n)}], got {k}")
    if s < k:
        raise ValueError(f"core width s={s} must be at least k={k}")
    if s < 2 * k + 1:
        warnings.warn(
            f"s={s} is below 2k+1={2 * k + 1}; error guarantees need the larger width",
            stacklevel=2,
        )

    slots = (("left", m, k), ("right", n, k), ("core_left", m, s), ("core_right", n, s))
    built = {}
    if mode == "pure":
        maker = _MAP_BUILDERS[kind]
        for name, dim, width in slots:
            t = np.zeros((width, dim, p))
            if kind == "count":
                for i in range(p):
                    t[:, :, i] = maker(dim, width, rng)
            else:
                t[:, :, 0] = maker(dim, width, rng)
            built[name] = t
    else:
        if a is None:
            raise ValueError("data-aware mode needs the input tensor")
        a = np.asarray(a)
        if a.shape != (m, n, p):
            raise ValueError(f"input shape {a.shape} does not match ({m}, {n}, {p})")
        first = a[:, :, 0]
        sketcher = _DATA_SKETCHES[kind]
        for name, dim, width in slots:
            source = first if dim == m else np.conj(first).T
            t = np.zeros((width, dim, p))
            if kind == "count":
                for i in range(p):
                    t[:, :, i] = sketcher(source, width, rng).T
            else:
                t[:, :, 0] = sketcher(source, width, rng).T
            built[name] = t

    return OperatorSet(
        kind=kind,
        mode=mode,
        left_map=built["left"],
        right_map=built["right"],
        core_left=built["core_left"],
        core_right=built["core_right"],
        seed=seed,
    )


def compute_sketches(transform, a, ops):
    """Co-range, range and core sketches of ``a`` in one transformed pass.

    Returns spatial-domain tensors ``(x, y, z)`` with x = left_map * a of
    shape (k, n, p), y = a * right_map^H of shape (m, k, p), and
    z = core_left * a * core_right^H of shape (s, s, p).
    """
    from . import tensor_core as tc

    a = transform._check(a)
    m, n, p = a.shape
    if ops.left_map.shape != (ops.k, m, p) or ops.right_map.shape != (ops.k, n, p):
        raise ValueError("operator shapes do not match the input tensor")
    ab = tc._stack(transform.forward(a))
    lb = tc._stack(transform.forward(ops.left_map))
    rb = tc._stack(transform.forward(ops.right_map))
    clb = tc._stack(transform.forward(ops.core_left))
    crb = tc._stack(transform.forward(ops.core_right))
    x = transform.inverse(tc._unstack(lb @ ab))
    y = transform.inverse(tc._unstack(ab @ tc._hstack(rb)))
    z = transform.inverse(tc._unstack(clb @ ab @ tc._hstack(crb)))
    if transform.complex_domain and not np.iscomplexobj(a):
        x, y, z = (tc._maybe_real(t) for t in (x, y, z))
    return x, y, z
