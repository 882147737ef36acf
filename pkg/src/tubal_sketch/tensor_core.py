"""Dense third-order tensor algebra under invertible mode-3 transforms.

A third-order tensor is a numpy array of shape ``(m, n, p)``: frontal slice
``k`` is the m-by-n matrix ``a[:, :, k]`` and tube ``(i, j)`` is the length-p
vector ``a[i, j, :]``.  A :class:`Transform` pushes every tube through an
invertible p-by-p matrix; products, transposes, factorizations and ranks are
defined slicewise in the transformed domain and mapped back through the
inverse transform.

All supported transforms are scaled isometries, ``L^H L = rho * I``, which is
what ties transformed-domain Frobenius norms to spatial ones:
``norm(a)^2 == sum_k norm(transformed slice k)^2 / rho``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

__all__ = [
    "Transform",
    "TSVDFactors",
    "make_dft",
    "make_dct",
    "make_identity",
    "make_u_transform",
    "frob_norm",
    "lprod",
    "tprod_circ",
    "conj_transpose",
    "identity_tensor",
    "tsvd",
    "slice_singular_values",
    "singular_values",
    "tubal_rank",
    "tail_energy",
]

# Relative threshold below which a numerically-real array is collapsed to
# its real part after an inverse DFT.
_IMAG_TOL = 1e-10


def _check_tensor(a, name="tensor"):
    a = np.asarray(a)
    if a.ndim != 3:
        raise ValueError(f"{name} must have 3 axes, got shape {a.shape}")
    return a


def _stack(a):
    """(m, n, p) tensor -> (p, m, n) slice stack for batched linalg."""
    return np.moveaxis(a, 2, 0)


def _unstack(s):
    """(p, m, n) slice stack -> (m, n, p) tensor."""
    return np.moveaxis(s, 0, 2)


def _hstack(s):
    """Conjugate-transpose every slice of a (p, a, b) stack."""
    return np.conj(np.swapaxes(s, -1, -2))


def _maybe_real(z, tol=_IMAG_TOL):
    """Drop an imaginary part that is pure roundoff, else keep it."""
    if not np.iscomplexobj(z):
        return z
    scale = max(1.0, float(np.max(np.abs(z.real))) if z.size else 0.0)
    if z.size == 0 or float(np.max(np.abs(z.imag))) <= tol * scale:
        return np.ascontiguousarray(z.real)
    return z


@dataclass(frozen=True, eq=False)
class Transform:
    """Invertible mode-3 transform applied tube-wise.

    Attributes
    ----------
    kind : str
        One of ``"dft"``, ``"dct"``, ``"u"``, ``"identity"``.
    matrix : ndarray
        The p-by-p transform matrix L (rows map tubes forward).
    rho : float
        Norm scale constant with ``L^H L = rho * I``.
    """

    kind: str
    matrix: np.ndarray
    rho: float

    @property
    def size(self):
        return self.matrix.shape[0]

    @property
    def complex_domain(self):
        return self.kind == "dft"

    def _check(self, a):
        a = _check_tensor(a)
        if a.shape[2] != self.size:
            raise ValueError(
                f"tube length {a.shape[2]} does not match transform size {self.size}"
            )
        return a

    def forward(self, a):
        """Apply L along the tube axis; returns a same-shape tensor."""
        a = self._check(a)
        if self.kind == "identity":
            return a
        if self.kind == "dft":
            return np.fft.fft(a, axis=2)
        if self.kind == "dct":
            return scipy.fft.dct(a, type=2, axis=2, norm="ortho")
        # data-driven orthogonal transform: plain matrix application
        return a @ self.matrix.T

    def inverse(self, abar):
        """Apply L^{-1} along the tube axis."""
        abar = self._check(abar)
        if self.kind == "identity":
            return abar
        if self.kind == "dft":
            return np.fft.ifft(abar, axis=2)
        if self.kind == "dct":
            return scipy.fft.idct(abar, type=2, axis=2, norm="ortho")
        return abar @ np.conj(self.matrix)


def make_dft(p):
    """Unnormalized discrete Fourier transform of length p (rho = p)."""
    if p < 1:
        raise ValueError("transform size must be >= 1")
    idx = np.arange(p)
    mat = np.exp(-2j * np.pi * np.outer(idx, idx) / p)
    return Transform(kind="dft", matrix=mat, rho=float(p))


def make_dct(p):
    """Orthonormal type-II discrete cosine transform of length p (rho = 1)."""
    if p < 1:
        raise ValueError("transform size must be >= 1")
    i = np.arange(p)[:, None]
    j = np.arange(p)[None, :]
    mat = np.sqrt(2.0 / p) * np.cos(np.pi * i * (2 * j + 1) / (2 * p))
    mat[0, :] /= np.sqrt(2.0)
    return Transform(kind="dct", matrix=mat, rho=1.0)


def make_identity(p):
    """Identity transform (slicewise algebra with no tube mixing)."""
    if p < 1:
        raise ValueError("transform size must be >= 1")
    return Transform(kind="identity", matrix=np.eye(p), rho=1.0)


def make_u_transform(a):
    """Data-driven orthogonal transform from the mode-3 row space of ``a``.

    Rows of the transform are the left singular vectors (conjugated) of the
    p-by-mn mode-3 unfolding, so the transformed tensor concentrates tube
    energy in its leading slices.  rho = 1.
    """
    a = _check_tensor(a)
    if frob_norm(a) == 0.0:
        raise ValueError("cannot derive a transform from the zero tensor")
    m, n, p = a.shape
    # column k of the (mn, p) reshape is slice k in column-major vec order
    unfold = a.reshape(m * n, p, order="F").T
    u = np.linalg.svd(unfold, full_matrices=True)[0]
    return Transform(kind="u", matrix=np.conj(u).T, rho=1.0)


def frob_norm(a):
    """Frobenius norm of a tensor (or any array)."""
    return float(np.linalg.norm(np.ravel(a)))


def lprod(transform, x, y):
    """Tensor-tensor product: slicewise matmul in the transformed domain.

    ``x`` is (m, n, p) and ``y`` is (n, n2, p); the result is (m, n2, p),
    computed as L^{-1}[ L[x] matmul L[y] ] slice by slice.  Real operands
    under a real transform give a real result; under the DFT the roundoff
    imaginary part is checked and dropped.
    """
    x = transform._check(x)
    y = transform._check(y)
    if x.shape[1] != y.shape[0]:
        raise ValueError(f"inner dimensions differ: {x.shape} vs {y.shape}")
    xb = _stack(transform.forward(x))
    yb = _stack(transform.forward(y))
    z = transform.inverse(_unstack(xb @ yb))
    if transform.complex_domain and not (np.iscomplexobj(x) or np.iscomplexobj(y)):
        z = _maybe_real(z)
        if np.iscomplexobj(z):
            raise ValueError("imaginary residue too large for a real product")
    return z


def tprod_circ(x, y):
    """Reference t-product through the explicit block-circulant matrix.

    Slow path kept as an independent oracle for :func:`lprod` under the DFT:
    unfolds ``x`` into its block-circulant matrix, multiplies by the stacked
    slices of ``y`` and folds the result back.
    """
    x = _check_tensor(x, "x")
    y = _check_tensor(y, "y")
    m, n, p = x.shape
    if y.shape[0] != n or y.shape[2] != p:
        raise ValueError(f"shapes {x.shape} and {y.shape} do not conform")
    n2 = y.shape[1]
    circ = np.zeros((m * p, n * p), dtype=np.result_type(x, y))
    for i in range(p):
        for j in range(p):
            circ[i * m:(i + 1) * m, j * n:(j + 1) * n] = x[:, :, (i - j) % p]
    stacked = np.concatenate([y[:, :, k] for k in range(p)], axis=0)
    prod = circ @ stacked
    out = np.empty((m, n2, p), dtype=prod.dtype)
    for k in range(p):
        out[:, :, k] = prod[k * m:(k + 1) * m, :]
    return out


def conj_transpose(transform, a):
    """Tensor conjugate transpose: slicewise conjugate transpose in the
    transformed domain, mapped back."""
    a = transform._check(a)
    ab = _stack(transform.forward(a))
    out = transform.inverse(_unstack(_hstack(ab)))
    if transform.complex_domain and not np.iscomplexobj(a):
        out = _maybe_real(out)
    return out


def identity_tensor(transform, n):
    """The neutral element for ``lprod`` with n-by-n slices."""
    if n < 1:
        raise ValueError("n must be >= 1")
    p = transform.size
    ibar = np.repeat(np.eye(n)[:, :, None], p, axis=2)
    return _maybe_real(transform.inverse(ibar))


@dataclass(frozen=True, eq=False)
class TSVDFactors:
    """Full tensor SVD: ``a == u * s * conj_transpose(v)`` under ``transform``.

    ``u`` is (m, r, p), ``s`` is (r, r, p) and f-diagonal, ``v`` is (n, r, p),
    with r = min(m, n).  All three live in the spatial domain.
    """

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray
    transform: Transform


def tsvd(transform, a):
    """Tensor SVD via one matrix SVD per transformed slice."""
    a = transform._check(a)
    m, n, p = a.shape
    ub, sv, vhb = np.linalg.svd(_stack(transform.forward(a)), full_matrices=False)
    r = min(m, n)
    sb = np.zeros((p, r, r), dtype=sv.dtype)
    sb[:, np.arange(r), np.arange(r)] = sv
    u = _maybe_real(transform.inverse(_unstack(ub)))
    s = _maybe_real(transform.inverse(_unstack(sb.astype(ub.dtype))))
    v = _maybe_real(transform.inverse(_unstack(_hstack(vhb))))
    return TSVDFactors(u=u, s=s, v=v, transform=transform)


def slice_singular_values(transform, a):
    """Per-slice singular values in the transformed domain, shape (p, r)."""
    a = transform._check(a)
    return np.linalg.svd(_stack(transform.forward(a)), compute_uv=False)


def singular_values(transform, a):
    """Tensor singular values, nonincreasing, length min(m, n).

    Entry i aggregates the i-th singular value of every transformed slice:
    ``sigma_i = sqrt(sum_k svals[k, i]^2 / rho)``, which equals the root of
    the squared diagonal tube of the spatial f-diagonal middle factor.
    """
    sv = slice_singular_values(transform, a)
    return np.sqrt(np.sum(sv * sv, axis=0) / transform.rho)


def tubal_rank(transform, a, tol=1e-10):
    """Number of tensor singular values above ``tol`` times the largest."""
    sv = singular_values(transform, a)
    if sv.size == 0 or sv[0] <= 0.0:
        return 0
    return int(np.count_nonzero(sv > tol * sv[0]))


def tail_energy(transform, a, j):
    """Sum of squared tensor singular values from index j on (1-based).

    This is the squared error of the best approximation of tubal rank j - 1,
    and also equals ``sum_i tail_j(slice i)^2 / rho`` over transformed
    slices.  ``j = min(m, n) + 1`` gives 0.
    """
    a = transform._check(a)
    r = min(a.shape[0], a.shape[1])
    j = int(j)
    if not 1 <= j <= r + 1:
        raise ValueError(f"tail index must be in [1, {r + 1}], got {j}")
    sigma = singular_values(transform, a)
    return float(np.sum(sigma[j - 1:] ** 2))
