"""Test-problem generators and image utilities.

Includes the 2D convection-diffusion discretization, classic first-kind
Fredholm discretizations (foxgood / gravity / phillips), the banded
motion-blur operator, PSNR and binary PGM I/O.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import SparseMatrix, spmv
from .operators import LinearOperator

__all__ = [
    "Problem", "GrayImage", "convdiff2d", "foxgood", "gravity", "phillips",
    "mblur", "image_blur_operator", "psnr", "read_pgm", "write_pgm",
    "synthetic_image",
]


@dataclass
class Problem:
    """A generated linear (least-squares) problem with optional truth."""
    matrix: object           # SparseMatrix, dense ndarray or LinearOperator
    rhs_clean: np.ndarray
    truth: np.ndarray = None
    name: str = ""
    params: dict = field(default_factory=dict)

    @property
    def n(self):
        if isinstance(self.matrix, np.ndarray):
            return self.matrix.shape[1]
        return self.matrix.ncols


def convdiff2d(l, case="I", seed=0, convection_scale=1.0):
    """Central-difference discretization of
    -laplace(u) + a u_x + b u_y = f on the unit square, Dirichlet boundary.

    Mesh size h = 1/l, lexicographic unknowns, matrix size (l-1)^2.  The
    stencil is kept in its h^2-scaled form (diagonal 4, neighbor couplings
    -1 -+ coef*h/2), the convention under which the usual shift choices
    for this family (e.g. the midpoint shift ~4) live.
    Case I:  a = x sin(x+y),  b = y cos(x y)
    Case II: a = 5 y exp(x y), b = 5 x exp(x+y)
    The right-hand side corresponds to a uniform random solution vector
    drawn from `seed`.  convection_scale = 0 gives the pure Laplacian
    (used in tests).
    """
    if l < 3:
        raise ValueError("l must be at least 3")
    if case not in ("I", "II"):
        raise ValueError(f"unknown case {case!r}")
    nside = l - 1
    h = 1.0 / l
    idx = np.arange(1, l, dtype=np.float64)
    X, Y = np.meshgrid(idx * h, idx * h, indexing="xy")
    # grid node (x_i, y_j) at flat position (j-1)*(l-1) + (i-1)
    x = X.ravel()
    y = Y.ravel()
    if case == "I":
        a = x * np.sin(x + y)
        bcoef = y * np.cos(x * y)
    else:
        a = 5.0 * y * np.exp(x * y)
        bcoef = 5.0 * x * np.exp(x + y)
    a = convection_scale * a
    bcoef = convection_scale * bcoef

    n = nside * nside
    p = np.arange(n, dtype=np.int64)
    col_i = p % nside
    row_j = p // nside

    rows = [p]
    cols = [p]
    vals = [np.full(n, 4.0)]

    def couple(mask, offset, val):
        rows.append(p[mask])
        cols.append(p[mask] + offset)
        vals.append(val[mask])

    couple(col_i < nside - 1, 1, -1.0 + a * h / 2.0)   # east
    couple(col_i > 0, -1, -1.0 - a * h / 2.0)          # west
    couple(row_j < nside - 1, nside, -1.0 + bcoef * h / 2.0)  # north
    couple(row_j > 0, -nside, -1.0 - bcoef * h / 2.0)  # south

    A = SparseMatrix.from_coo(n, n, np.concatenate(rows),
                              np.concatenate(cols), np.concatenate(vals))
    truth = np.random.default_rng(seed).random(n)
    return Problem(A, rhs_clean=spmv(A, truth), truth=truth,
                   name=f"convdiff-{case}", params={"l": l, "case": case})


def foxgood(n):
    """Midpoint discretization of the severely ill-posed first-kind kernel
    sqrt(s^2 + t^2) on [0,1]^2; truth f(t) = t, clean rhs = A @ truth."""
    if n < 4:
        raise ValueError("n must be at least 4")
    h = 1.0 / n
    s = h * (np.arange(1, n + 1) - 0.5)
    A = h * np.sqrt(s[:, None] ** 2 + s[None, :] ** 2)
    truth = s.copy()
    return Problem(A, rhs_clean=A @ truth, truth=truth, name="foxgood",
                   params={"n": n})


def gravity(n, depth=0.25):
    """Midpoint discretization of the 1D gravity surveying kernel
    d (d^2 + (s-t)^2)^(-3/2); truth sin(pi t) + 0.5 sin(2 pi t)."""
    if n < 4:
        raise ValueError("n must be at least 4")
    h = 1.0 / n
    t = h * (np.arange(1, n + 1) - 0.5)
    A = h * depth / (depth ** 2 + (t[:, None] - t[None, :]) ** 2) ** 1.5
    truth = np.sin(np.pi * t) + 0.5 * np.sin(2.0 * np.pi * t)
    return Problem(A, rhs_clean=A @ truth, truth=truth, name="gravity",
                   params={"n": n, "depth": depth})


_PHILLIPS_C = math.pi / 3.0


def _phillips_f2(x):
    """Twice-integrated kernel profile, linear outside the support."""
    cap = 4.5 + 1.0 / _PHILLIPS_C ** 2
    x = np.asarray(x, dtype=np.float64)
    out = np.where(
        np.abs(x) <= 3.0,
        0.5 * x ** 2 - np.cos(_PHILLIPS_C * np.minimum(np.abs(x), 3.0)) / _PHILLIPS_C ** 2,
        cap + 3.0 * (np.abs(x) - 3.0))
    return out


def _phillips_f1(x):
    """Integrated kernel profile, constant outside the support."""
    xc = np.clip(x, -3.0, 3.0)
    return xc + np.sin(_PHILLIPS_C * xc) / _PHILLIPS_C


def phillips(n):
    """Galerkin (orthonormal box functions) discretization of the classic
    piecewise-cosine first-kind kernel on [-6, 6]; banded symmetric
    Toeplitz with half-bandwidth n/4.  n must be a multiple of 4."""
    if n < 4 or n % 4 != 0:
        raise ValueError("n must be a positive multiple of 4")
    h = 12.0 / n
    band = n // 4
    offsets = h * np.arange(band + 1)
    first = (_phillips_f2(offsets + h) - 2.0 * _phillips_f2(offsets)
             + _phillips_f2(offsets - h)) / h

    diag_idx = np.arange(n, dtype=np.int64)
    rows = [diag_idx]
    cols = [diag_idx]
    vals = [np.full(n, first[0])]
    for k in range(1, band + 1):
        r = np.arange(n - k, dtype=np.int64)
        rows.extend([r, r + k])
        cols.extend([r + k, r])
        vals.extend([np.full(n - k, first[k])] * 2)
    A = SparseMatrix.from_coo(n, n, np.concatenate(rows),
                              np.concatenate(cols), np.concatenate(vals))

    edges = -6.0 + h * np.arange(n + 1)
    truth = (_phillips_f1(edges[1:]) - _phillips_f1(edges[:-1])) / math.sqrt(h)
    return Problem(A, rhs_clean=spmv(A, truth), truth=truth, name="phillips",
                   params={"n": n})


def mblur(n, bandw):
    """Banded Toeplitz 1D motion-blur matrix: 2*bandw - 1 equal weights
    1/(2*bandw - 1), truncated at the boundary without renormalization."""
    if not 1 <= bandw <= n:
        raise ValueError("bandw must be between 1 and n")
    w = 1.0 / (2 * bandw - 1)
    diag_idx = np.arange(n, dtype=np.int64)
    rows = [diag_idx]
    cols = [diag_idx]
    vals = [np.full(n, w)]
    for k in range(1, bandw):
        r = np.arange(n - k, dtype=np.int64)
        rows.extend([r, r + k])
        cols.extend([r + k, r])
        vals.extend([np.full(n - k, w)] * 2)
    return SparseMatrix.from_coo(n, n, np.concatenate(rows),
                                 np.concatenate(cols), np.concatenate(vals))


def image_blur_operator(height, width, bandw):
    """Motion blur along image rows (the x axis), as an operator on
    row-major flattened images."""
    T = mblur(width, bandw).to_dense()

    def fwd(v):
        return (v.reshape(height, width) @ T).ravel()

    # T is symmetric, so the transpose action reuses it
    return LinearOperator(height * width, height * width, fwd, fwd,
                          name=f"mblur(bandw={bandw})")


@dataclass
class GrayImage:
    """Grayscale image with pixels in [0, 1], clamped on construction."""
    pixels: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pixels, dtype=np.float64)
        if p.ndim != 2:
            raise ValueError("pixels must be a 2-D array")
        self.pixels = np.clip(p, 0.0, 1.0)

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]

    def to_vector(self):
        return self.pixels.ravel().copy()

    @classmethod
    def from_vector(cls, v, height, width):
        return cls(np.asarray(v, dtype=np.float64).reshape(height, width))


def psnr(x, ref):
    """Peak signal-to-noise ratio in dB (peak 1.0); +inf for identical
    images."""
    if (x.height, x.width) != (ref.height, ref.width):
        raise ValueError("image dimensions differ")
    mse = float(np.mean((x.pixels - ref.pixels) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def synthetic_image(size=64):
    """Deterministic piecewise test image: gradient background, bright
    square, disk and a dark stripe."""
    g = np.linspace(0.2, 0.5, size)[None, :] * np.ones((size, 1))
    img = g.copy()
    q = size // 4
    img[q:2 * q, q:3 * q] = 0.9
    yy, xx = np.mgrid[0:size, 0:size]
    disk = (yy - 0.68 * size) ** 2 + (xx - 0.4 * size) ** 2 <= (0.16 * size) ** 2
    img[disk] = 0.75
    img[int(0.8 * size):int(0.88 * size), :] = 0.05
    return GrayImage(img)


def read_pgm(path):
    """Read a binary (P5) PGM with maxval 255; pixels mapped to [0,1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated PGM header")
        tokens.append(data[start:pos])
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary (P5) PGM file")
    width, height, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise ValueError(f"{path}: only maxval 255 is supported")
    pos += 1  # single whitespace after maxval
    payload = data[pos:pos + width * height]
    if len(payload) < width * height:
        raise ValueError(f"{path}: truncated PGM payload")
    pix = np.frombuffer(payload, dtype=np.uint8).astype(np.float64) / 255.0
    return GrayImage(pix.reshape(height, width))


def write_pgm(path, img):
    """Write a binary (P5) PGM with maxval 255 (8-bit quantization)."""
    q = np.rint(img.pixels * 255.0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.width} {img.height}\n255\n".encode("ascii"))
        fh.write(q.tobytes())
