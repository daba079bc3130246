"""Linear Neumann Poisson solver on the strip T^2 x (0,1).

The problem, per horizontal Fourier mode k:

    u_k'' - (2*pi*|k|)^2 u_k = f_k,   u_k'(0) = 0,   u_k'(1) = g_k,

is solved as the sum of two pieces mirroring the classical splitting:

* the forcing part, with homogeneous Neumann data, by second-order
  central differences with ghost-node closure (one tridiagonal system
  per mode, solved for all modes at once by a vectorised Thomas sweep);
* the boundary-data part of the k != 0 modes in closed form,

      u_k(x3) = g_k cosh(2*pi*|k| x3) / (2*pi*|k| sinh(2*pi*|k|)),

  evaluated in overflow-safe ratio form, so the Neumann response carries
  no vertical discretisation error.

The k = 0 mode is solvable only when trapz(f_0) = g_0 (the compatibility
condition); its one-dimensional null space is fixed by enforcing zero
trapezoid mean, matching the zero-mean normalisation of the BVP.
"""

import struct
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .fields import (
    SQRT2,
    SpectralField2D,
    TorusGrid,
    c0alpha_proxy,
    c1alpha_proxy,
    gradient_physical,
    hessian_physical,
    random_band_limited,
    sampled_seminorm,
)

STRIP_MAGIC = b"SSG3"
ZERO_MEAN_TOL = 1e-12


@dataclass(frozen=True)
class StripGrid:
    """T^2 x (0,1) with n3 uniform vertical levels x3_j = j/(n3-1)."""

    horizontal: TorusGrid
    n3: int

    def __post_init__(self):
        if self.n3 < 9 or self.n3 % 2 == 0:
            raise ValueError(f"n3 must be odd and >= 9, got {self.n3}")

    @cached_property
    def x3(self):
        return np.arange(self.n3) / (self.n3 - 1)

    @property
    def h3(self):
        return 1.0 / (self.n3 - 1)

    @cached_property
    def trapz_weights(self):
        w = np.full(self.n3, self.h3)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    @property
    def shape(self):
        return (self.n3, self.horizontal.n1, self.horizontal.n2)


@dataclass(frozen=True)
class StripField3D:
    """Per-mode vertical profiles u_k(x3_j), horizontal-spectral per level."""

    grid: StripGrid
    data: np.ndarray  # complex (n3, n1, n2)
    mean_zero: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.data.shape != self.grid.shape:
            raise ValueError(
                f"data shape {self.data.shape} does not match grid {self.grid.shape}"
            )
        if self.mean_zero and abs(self.volume_mean()) > ZERO_MEAN_TOL:
            raise ValueError(
                f"mean_zero field has volume mean {self.volume_mean():.3e}"
            )

    @classmethod
    def zero(cls, grid, mean_zero=True):
        return cls(grid, np.zeros(grid.shape, dtype=complex), mean_zero=mean_zero)

    @classmethod
    def from_physical(cls, grid, phys):
        phys = np.asarray(phys, dtype=float)
        if phys.shape != grid.shape:
            raise ValueError(f"array shape {phys.shape} does not match {grid.shape}")
        n1, n2 = grid.horizontal.shape
        coeffs = np.fft.fft2(phys, axes=(1, 2)) / (n1 * n2)
        return cls(grid, _hermitianize_levels(coeffs))

    def to_physical(self):
        n1, n2 = self.grid.horizontal.shape
        return np.fft.ifft2(self.data * (n1 * n2), axes=(1, 2)).real

    def level(self, j):
        return SpectralField2D(self.grid.horizontal, self.data[j].copy())

    def volume_mean(self):
        # exact horizontal DC mode, trapezoid rule vertically
        return float(np.real(self.grid.trapz_weights @ self.data[:, 0, 0]))

    def inf_norm(self):
        return float(np.max(np.abs(self.to_physical())))

    def _with(self, data, mean_zero=False):
        return StripField3D(self.grid, data, mean_zero=mean_zero)

    def __add__(self, other):
        self._check(other)
        return self._with(self.data + other.data)

    def __sub__(self, other):
        self._check(other)
        return self._with(self.data - other.data)

    def __mul__(self, scalar):
        return self._with(self.data * float(scalar))

    __rmul__ = __mul__

    def _check(self, other):
        if self.grid != other.grid:
            raise ValueError("strip fields live on different grids")


def _hermitianize_levels(coeffs):
    flipped = np.conj(np.roll(coeffs[:, ::-1, ::-1], (1, 1), axis=(1, 2)))
    return 0.5 * (coeffs + flipped)


def check_compatibility(f, g):
    """Signed defect integral(f over strip) - integral(g over torus)."""
    if f.grid.horizontal != g.grid:
        raise ValueError("strip and boundary fields live on different grids")
    return f.volume_mean() - g.mean


class CompatibilityError(ValueError):
    """Raised when the Neumann data violates the solvability condition."""

    def __init__(self, defect, tol):
        self.defect = defect
        self.tol = tol
        super().__init__(
            f"incompatible Neumann problem: defect {defect:.6e} exceeds tolerance {tol:.1e}"
        )


def harmonic_extension(g, grid):
    """Closed-form solution of the Laplace problem with Neumann data g on
    the upper boundary, zero on the lower, zero mean.

    Exact at the vertical nodes (no discretisation error); requires g to
    have zero mean since the series omits k = (0,0).
    """
    if g.grid != grid.horizontal:
        raise ValueError("boundary data does not match the strip's horizontal grid")
    if abs(g.mean) > ZERO_MEAN_TOL:
        raise ValueError(f"harmonic extension needs zero-mean data, mean={g.mean:.3e}")
    a = 2.0 * np.pi * np.sqrt(g.grid.ksq)  # (n1, n2)
    a_safe = np.where(a == 0.0, 1.0, a)
    x3 = grid.x3[:, None, None]
    # cosh(a*x3)/sinh(a) = exp(-a(1-x3)) (1+exp(-2a*x3)) / (1-exp(-2a))
    ratio = (
        np.exp(-a_safe * (1.0 - x3))
        * (1.0 + np.exp(-2.0 * a_safe * x3))
        / (1.0 - np.exp(-2.0 * a_safe))
    )
    profile = np.where(a == 0.0, 0.0, ratio / a_safe)
    data = profile * g.coeffs[None, :, :]
    data[:, 0, 0] = 0.0
    return StripField3D(grid, data, mean_zero=True)


def _thomas(lower, diag, upper, rhs):
    """Solve tridiagonal systems stacked along trailing axes.

    lower/diag/upper: (n,) + tail arrays (lower[0] and upper[-1] unused);
    rhs: (n,) + tail. Sequential in the vertical index, vectorised across
    all systems; fixed evaluation order keeps results deterministic.
    """
    n = rhs.shape[0]
    cp = np.empty_like(diag, dtype=complex)
    dp = np.empty_like(rhs, dtype=complex)
    cp[0] = upper[0] / diag[0]
    dp[0] = rhs[0] / diag[0]
    for i in range(1, n):
        denom = diag[i] - lower[i] * cp[i - 1]
        cp[i] = upper[i] / denom if i < n - 1 else 0.0
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / denom
    out = np.empty_like(dp)
    out[-1] = dp[-1]
    for i in range(n - 2, -1, -1):
        out[i] = dp[i] - cp[i] * out[i + 1]
    return out


def _neumann_fd_solve(grid, f_hat, top_hat):
    """Second-order ghost-node FD solve of u'' - lam^2 u = f per mode.

    Neumann data: 0 at the bottom, top_hat at the top. The k = (0,0) mode
    (lam = 0) is singular; its right-hand side is projected onto the
    solvable space and the trapezoid mean of the profile is set to zero.
    Used with top_hat = 0 for k != 0 inside solve_poisson (the boundary
    response is carried by the closed form); nonzero top_hat exercises the
    inhomogeneous closure (cross-validation and the k = 0 mode).
    """
    n3 = grid.n3
    h = grid.h3
    n1, n2 = grid.horizontal.shape
    lam_sq = 4.0 * np.pi**2 * grid.horizontal.ksq

    lower = np.full((n3, 1, 1), 1.0 / h**2) * np.ones((1, n1, n2))
    upper = lower.copy()
    upper[0] = 2.0 / h**2
    lower[-1] = 2.0 / h**2
    diag = -2.0 / h**2 - lam_sq[None, :, :] * np.ones((n3, 1, 1))

    rhs = f_hat.astype(complex).copy()
    rhs[-1] -= (2.0 / h) * top_hat

    # dummy nonsingular diagonal at the k=0 mode; that column is replaced
    # by the projected singular solve below
    diag[:, 0, 0] = -2.0 / h**2 - 1.0
    u = _thomas(lower, diag, upper, rhs)
    u[:, 0, 0] = _solve_zero_mode(grid, f_hat[:, 0, 0], top_hat[0, 0])
    return u


def _solve_zero_mode(grid, f0, g0):
    """u'' = f with u'(0)=0, u'(1)=g0, trapezoid mean zero."""
    n3 = grid.n3
    h = grid.h3
    # symmetrised singular system: project the RHS onto range(A), pin u_0,
    # solve the reduced tridiagonal, then remove the trapezoid mean
    b = f0.astype(complex).copy()
    b[0] *= 0.5
    b[-1] *= 0.5
    b[-1] -= g0 / h
    b -= np.sum(b) / n3

    m = n3 - 1
    lower = np.full(m, 1.0 / h**2, dtype=complex)
    diag = np.full(m, -2.0 / h**2, dtype=complex)
    upper = np.full(m, 1.0 / h**2, dtype=complex)
    diag[-1] = -1.0 / h**2
    u_red = _thomas(lower, diag, upper, b[1:])

    u = np.empty(n3, dtype=complex)
    u[0] = 0.0
    u[1:] = u_red
    u -= grid.trapz_weights @ u
    return u


def solve_poisson(f, g, compat_tol=1e-10):
    """Solve Laplace(u) = f on the strip, du/dx3 = 0 below, = g above,
    zero mean. Raises CompatibilityError when trapz-integral(f) != mean(g)
    beyond compat_tol.
    """
    if f.grid.horizontal != g.grid:
        raise ValueError("strip and boundary fields live on different grids")
    defect = check_compatibility(f, g)
    if abs(defect) > compat_tol:
        raise CompatibilityError(defect, compat_tol)

    grid = f.grid
    top = np.zeros(g.grid.shape, dtype=complex)
    top[0, 0] = g.coeffs[0, 0]
    u = _neumann_fd_solve(grid, f.data, top)

    g_rest = SpectralField2D(g.grid, g.coeffs - top)
    w = harmonic_extension(g_rest, grid)
    data = u + w.data
    return StripField3D(grid, data, mean_zero=True)


def dirichlet_trace(u, which="upper"):
    """Restriction to the upper (x3=1) or lower (x3=0) boundary plane."""
    levels = {"upper": u.grid.n3 - 1, "lower": 0}
    if which not in levels:
        raise ValueError(f"which must be 'upper' or 'lower', got {which!r}")
    return u.level(levels[which])


# --- discrete norm proxies on strip fields (level-wise horizontal) ---


def strip_c0alpha_proxy(u, alpha, pair_budget=None, seed=0):
    """max over levels of the horizontal sup + [.]_alpha proxy."""
    return max(
        c0alpha_proxy(u.level(j), alpha, pair_budget, seed) for j in range(u.grid.n3)
    )


def strip_c2alpha_proxy(u, alpha, pair_budget=None, seed=0):
    """max over levels of max(sup,|grad|,|hess|) + [D^2 .]_alpha proxy."""
    grid2 = u.grid.horizontal
    if pair_budget is None:
        pair_budget = grid2.n1 * grid2.n2
    best = 0.0
    for j in range(u.grid.n3):
        lev = u.level(j)
        phys = lev.to_physical()
        g1, g2 = gradient_physical(lev)
        f11, f12, f22 = hessian_physical(lev)
        hess_sup = float(np.max(np.sqrt((f11**2 + 2 * f12**2 + f22**2) / 2.0)))
        sem = sampled_seminorm(
            np.stack([f11, SQRT2 * f12, f22]),
            alpha,
            grid2,
            pair_budget,
            seed,
            normalizer=SQRT2,
        )
        val = max(np.max(np.abs(phys)), np.max(np.hypot(g1, g2)), hess_sup) + sem
        best = max(best, val)
    return best


def random_strip_field(grid, band, seed, amplitude=1.0, zero_mean=True):
    """Random smooth strip field: band-limited horizontal modes carried by
    low-order cosine profiles in x3. Deterministic in the seed."""
    rng = np.random.default_rng(seed)
    data = np.zeros(grid.shape, dtype=complex)
    x3 = grid.x3
    for m in range(4):
        profile = np.cos(m * np.pi * x3)[:, None, None]
        layer = random_band_limited(
            grid.horizontal, band, rng.integers(0, 2**31), zero_mean=False
        )
        data += profile * layer.coeffs[None, :, :]
    out = StripField3D(grid, data)
    if zero_mean:
        data = out.data.copy()
        data[:, 0, 0] -= out.volume_mean()
        out = StripField3D(grid, data, mean_zero=True)
    peak = out.inf_norm()
    if peak > 0:
        out = (amplitude / peak) * out
    return StripField3D(out.grid, out.data, mean_zero=zero_mean and True)


def estimate_stability_constant(
    grid, samples=64, seed=0, alpha=0.5, pair_budget=None, band=None
):
    """Empirical elliptic stability ratio over a randomized suite.

    Returns (ctilde_emp, ratios) with ctilde_emp the maximum observed
    ||u||_{C^{2,alpha} proxy} / (||f||_{C^{0,alpha}} + ||g||_{C^{1,alpha}}),
    sampled over forcing-only, boundary-only, and mixed problems.
    """
    if band is None:
        band = (min(grid.horizontal.n1, grid.horizontal.n2) - 1) // 3
        band = min(band, 10)
    rng = np.random.default_rng(seed)
    ratios = []
    for i in range(samples):
        kind = i % 3
        f = StripField3D.zero(grid)
        g = SpectralField2D.zero(grid.horizontal)
        if kind in (0, 2):
            f = random_strip_field(grid, band, rng.integers(0, 2**31))
        if kind in (1, 2):
            g = random_band_limited(grid.horizontal, band, rng.integers(0, 2**31))
        u = solve_poisson(f, g)
        denom = strip_c0alpha_proxy(f, alpha, pair_budget, seed) + c1alpha_proxy(
            g, alpha, pair_budget, seed
        )
        if denom == 0:
            continue
        num = strip_c2alpha_proxy(u, alpha, pair_budget, seed)
        ratios.append(num / denom)
    ratios = np.array(ratios)
    return float(np.max(ratios)), ratios


def save_strip(path, u):
    """Write a strip snapshot: magic SSG3, n1, n2, n3, then per-level
    spectral blocks (interleaved re/im float64) in ascending level order."""
    n1, n2 = u.grid.horizontal.shape
    header = struct.pack("<4sIII", STRIP_MAGIC, n1, n2, u.grid.n3)
    data = np.ascontiguousarray(u.data, dtype=complex)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.view(np.float64).astype("<f8").tobytes())


def load_strip(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    head = struct.calcsize("<4sIII")
    magic, n1, n2, n3 = struct.unpack("<4sIII", raw[:head])
    if magic != STRIP_MAGIC:
        raise ValueError(f"not a strip snapshot (magic {magic!r})")
    grid = StripGrid(TorusGrid(n1, n2), n3)
    flat = np.frombuffer(raw, dtype="<f8", offset=head)
    data = flat.view(np.complex128).reshape(n3, n1, n2)
    return StripField3D(grid, data.copy())
