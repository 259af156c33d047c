"""Dense float64 helpers and a counter-addressed Gaussian source.

Matrices and vectors are plain ``numpy.ndarray`` objects (float64, 2-D and
1-D).  The helpers here add the shape and finiteness checks that the rest of
the package relies on.

Gaussian draws
--------------
``GaussSource(seed, stream)`` keys a Philox-4x64-10 counter generator with the
128-bit key ``(seed, stream)``.  Raw output ``r`` (a uint64) sits at counter
block ``r // 4``, lane ``r % 4``.  Uniforms are ``(raw >> 11) * 2**-53`` in
[0, 1).  Normal ``j`` is produced by the Box-Muller transform of the uniform
pair ``(u1, u2) = (uniform[2*(j//2)], uniform[2*(j//2)+1])``::

    R = sqrt(-2 log(1 - u1)),  theta = 2 pi u2
    z[2p] = R cos(theta),      z[2p+1] = R sin(theta)

so draw ``j`` of a stream is a fixed function of ``(seed, stream, j)`` and
nothing else.
"""

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError

RNG_IDENTITY = "philox4x64-10/key=(seed,stream)/u53=(raw>>11)*2^-53/box-muller(cos,sin)"

_MASK64 = (1 << 64) - 1


def as_mat(a, name="matrix"):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ParameterError(f"{name} has non-finite entries")
    return a


def as_vec(v, name="vector"):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ParameterError(f"{name} has non-finite entries")
    return v


def matvec(A, v):
    """Return ``A @ v``."""
    A = np.asarray(A, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if A.ndim != 2 or v.ndim != 1 or A.shape[1] != v.shape[0]:
        raise ShapeError(f"matvec: cannot apply {A.shape} to {v.shape}")
    return A @ v


def matvec_t(A, v):
    """Return ``A.T @ v``."""
    A = np.asarray(A, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if A.ndim != 2 or v.ndim != 1 or A.shape[0] != v.shape[0]:
        raise ShapeError(f"matvec_t: cannot apply {A.shape}^T to {v.shape}")
    return A.T @ v


def sq_norm(v):
    v = np.asarray(v, dtype=np.float64)
    return float(v @ v) if v.ndim == 1 else float(np.sum(v * v))


def stream_id(*parts):
    """Hash a tuple of small integers / strings into a 64-bit stream id."""
    h = hashlib.blake2b(digest_size=8, person=b"noisycopies")
    for p in parts:
        if isinstance(p, str):
            b = p.encode()
            h.update(b"s" + struct.pack("<Q", len(b)) + b)
        else:
            h.update(b"i" + int(p).to_bytes(16, "little", signed=True))
    return struct.unpack("<Q", h.digest())[0]


@dataclass(frozen=True)
class GaussSource:
    seed: int
    stream: int = 0

    def _uniforms(self, start, count):
        block, lane = divmod(start, 4)
        nblocks = (lane + count + 3) // 4
        bg = np.random.Philox(key=[self.seed & _MASK64, self.stream & _MASK64], counter=block)
        raw = bg.random_raw(nblocks * 4)[lane:lane + count]
        return (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normals(self, count, offset=0):
        """Standard normals with draw indices ``offset .. offset+count-1``."""
        if count < 0 or offset < 0:
            raise ParameterError("count and offset must be non-negative")
        if count == 0:
            return np.zeros(0)
        first_pair = offset // 2
        skip = offset % 2
        npairs = (skip + count + 1) // 2
        u = self._uniforms(2 * first_pair, 2 * npairs)
        radius = np.sqrt(-2.0 * np.log1p(-u[0::2]))
        theta = 2.0 * np.pi * u[1::2]
        z = np.empty(2 * npairs)
        z[0::2] = radius * np.cos(theta)
        z[1::2] = radius * np.sin(theta)
        return z[skip:skip + count]

    def child(self, *parts):
        """Source on the stream hashed from this stream id and ``parts``."""
        return GaussSource(self.seed, stream_id(self.stream, *parts))


def gauss_array(src, shape, sd=1.0, offset=0):
    if sd < 0:
        raise ParameterError(f"sd must be >= 0, got {sd}")
    shape = tuple(int(s) for s in np.atleast_1d(shape))
    size = int(np.prod(shape)) if shape else 1
    if sd == 0:
        return np.zeros(shape)
    return sd * src.normals(size, offset).reshape(shape)


def gauss_mat(src, rows, cols, sd=1.0, offset=0):
    """``rows x cols`` matrix of i.i.d. N(0, sd^2) draws, filled row-major."""
    return gauss_array(src, (rows, cols), sd, offset)
