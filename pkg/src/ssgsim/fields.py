"""Spectral fields on the unit torus [0,1)^2.

Conventions used throughout the package:

* collocation points x_i = i/n on each axis (unit torus, 1-periodic),
* Fourier basis e^{2*pi*i k.x} with integer wavevectors k in numpy fft
  layout, coefficients normalised so that coeff[0,0] is the field mean,
* all fields are real in physical space; spectral data is kept
  Hermitian-symmetric (coeff(-k) = conj(coeff(k))),
* quadratic products are dealiased with the 2/3 rule: modes with
  |k_i| > (n_i-1)//3 are dropped, so products of two dealiased fields
  are alias-free on the retained band.

Discrete Hoelder-norm proxies: sup and grad_sup are exact grid maxima;
the alpha-seminorm of the gradient is estimated from all nearest-neighbour
pairs plus a seeded batch of random pairs (a deterministic lower bound of
the all-pairs value, monotone in the pair budget).
"""

import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np

SNAPSHOT_MAGIC = b"SSGF"
SNAPSHOT_VERSION = 1
KIND_PHYSICAL = 0
KIND_SPECTRAL = 1


@dataclass(frozen=True)
class TorusGrid:
    """Uniform collocation grid on [0,1)^2 with n1 x n2 points."""

    n1: int
    n2: int

    def __post_init__(self):
        for n in (self.n1, self.n2):
            if n % 2 or n < 8:
                raise ValueError(f"grid size must be even and >= 8, got {n}")

    @cached_property
    def x1(self):
        return np.arange(self.n1) / self.n1

    @cached_property
    def x2(self):
        return np.arange(self.n2) / self.n2

    @cached_property
    def mesh(self):
        return np.meshgrid(self.x1, self.x2, indexing="ij")

    @cached_property
    def k1(self):
        # integer wavenumbers, fft layout, broadcastable along axis 0
        return np.fft.fftfreq(self.n1, 1.0 / self.n1).reshape(-1, 1)

    @cached_property
    def k2(self):
        return np.fft.fftfreq(self.n2, 1.0 / self.n2).reshape(1, -1)

    @cached_property
    def ksq(self):
        return self.k1**2 + self.k2**2

    @cached_property
    def dealias_mask(self):
        # keep |k_i| <= (n_i-1)//3 so pairwise products cannot alias back
        # into the retained band
        b1 = (self.n1 - 1) // 3
        b2 = (self.n2 - 1) // 3
        return (np.abs(self.k1) <= b1) & (np.abs(self.k2) <= b2)

    @property
    def spacing(self):
        return (1.0 / self.n1, 1.0 / self.n2)

    @property
    def shape(self):
        return (self.n1, self.n2)


def _hermitianize(coeffs):
    """Project onto Hermitian-symmetric (real-field) coefficients."""
    flipped = np.conj(np.roll(coeffs[::-1, ::-1], (1, 1), axis=(0, 1)))
    return 0.5 * (coeffs + flipped)


@dataclass(frozen=True)
class SpectralField2D:
    """Real scalar field on a TorusGrid, stored as Fourier coefficients.

    coeffs has fft2 layout and is normalised by 1/(n1*n2): coeffs[0,0] is
    the mean and cos(2*pi*x1) has coefficients 1/2 at k=(+1,0),(-1,0).
    """

    grid: TorusGrid
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != self.grid.shape:
            raise ValueError(
                f"coefficient shape {self.coeffs.shape} does not match grid {self.grid.shape}"
            )

    @classmethod
    def zero(cls, grid):
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    def to_physical(self):
        # Hermitian symmetry is maintained by construction; the imaginary
        # residue of the inverse transform is pure rounding noise.
        return np.fft.ifft2(self.coeffs * (self.grid.n1 * self.grid.n2)).real

    @property
    def mean(self):
        return float(self.coeffs[0, 0].real)

    def l2_norm(self):
        # Parseval on the unit torus: ||f||_L2^2 = sum_k |c_k|^2
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def inf_norm(self):
        return float(np.max(np.abs(self.to_physical())))

    def _with(self, coeffs):
        return SpectralField2D(self.grid, coeffs)

    def __add__(self, other):
        self._check_match(other)
        return self._with(self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check_match(other)
        return self._with(self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return self._with(self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return self._with(-self.coeffs)

    def _check_match(self, other):
        if self.grid != other.grid:
            raise ValueError("fields live on different grids")

    def hermitian_defect(self):
        """Max deviation from coeff(-k) = conj(coeff(k)); diagnostic."""
        return float(np.max(np.abs(self.coeffs - _hermitianize(self.coeffs))))


def to_spectral(field, grid=None):
    """Transform a physical 2D real array to a SpectralField2D."""
    field = np.asarray(field, dtype=float)
    if field.ndim != 2:
        raise ValueError(f"expected a 2D array, got ndim={field.ndim}")
    if grid is None:
        grid = TorusGrid(*field.shape)
    elif field.shape != grid.shape:
        raise ValueError(f"array shape {field.shape} does not match grid {grid.shape}")
    coeffs = np.fft.fft2(field) / (grid.n1 * grid.n2)
    return SpectralField2D(grid, _hermitianize(coeffs))


def from_coeffs(grid, coeffs, hermitianize=True):
    """Build a field from raw coefficients (fft layout, normalised)."""
    coeffs = np.asarray(coeffs, dtype=complex)
    if hermitianize:
        coeffs = _hermitianize(coeffs)
    return SpectralField2D(grid, coeffs)


def _derivative_multiplier(grid, direction, order):
    if order not in (1, 2):
        raise ValueError(f"unsupported derivative order {order}")
    if direction not in (1, 2):
        raise ValueError(f"direction must be 1 or 2, got {direction}")
    k = grid.k1 if direction == 1 else grid.k2
    mult = (2j * np.pi * k) ** order
    if order % 2:
        # the unpaired Nyquist mode has no Hermitian partner under an
        # odd (imaginary) multiplier; it must be zeroed
        n = grid.n1 if direction == 1 else grid.n2
        mult = np.where(np.abs(k) == n // 2, 0.0, mult)
    return mult


def spectral_derivative(f, direction, order=1):
    """Differentiate along axis `direction` (1 or 2), order 1 or 2."""
    return f._with(f.coeffs * _derivative_multiplier(f.grid, direction, order))


def mixed_derivative(f):
    """d^2 f / dx1 dx2 (single multiplier path, so d12 == d21 bitwise)."""
    m = _derivative_multiplier(f.grid, 1, 1) * _derivative_multiplier(f.grid, 2, 1)
    return f._with(f.coeffs * m)


def perp_gradient(psi):
    """Rotated gradient (-d/dx2, d/dx1); divergence-free by construction."""
    w1 = -spectral_derivative(psi, 2, 1)
    w2 = spectral_derivative(psi, 1, 1)
    return w1, w2


def divergence(w1, w2):
    return spectral_derivative(w1, 1, 1) + spectral_derivative(w2, 2, 1)


def dealias(f):
    """Zero all modes outside the 2/3 band."""
    return f._with(np.where(f.grid.dealias_mask, f.coeffs, 0.0))


def gradient_physical(f):
    """(df/dx1, df/dx2) as physical arrays."""
    return (
        spectral_derivative(f, 1, 1).to_physical(),
        spectral_derivative(f, 2, 1).to_physical(),
    )


def hessian_physical(f):
    """(f11, f12, f22) as physical arrays."""
    return (
        spectral_derivative(f, 1, 2).to_physical(),
        mixed_derivative(f).to_physical(),
        spectral_derivative(f, 2, 2).to_physical(),
    )


def upsample_physical(f, factor):
    """Evaluate f on a factor-refined grid by spectral zero padding.

    Exact for band-limited data. For even n the Nyquist coefficient is
    split between +n/2 and -n/2 to keep the refined samples real.
    """
    if factor == 1:
        return f.to_physical()
    if factor < 1 or int(factor) != factor:
        raise ValueError(f"refinement factor must be a positive integer, got {factor}")
    n1, n2 = f.grid.shape
    m1, m2 = factor * n1, factor * n2
    half1, half2 = n1 // 2, n2 // 2
    k1 = np.fft.fftfreq(n1, 1.0 / n1).astype(int)
    k2 = np.fft.fftfreq(n2, 1.0 / n2).astype(int)

    # embed along axis 0, splitting the Nyquist row between +-n1/2
    tmp = np.zeros((m1, n2), dtype=complex)
    keep = k1 != -half1
    tmp[k1[keep], :] = f.coeffs[keep, :]
    tmp[half1, :] = 0.5 * f.coeffs[half1, :]
    tmp[-half1, :] += 0.5 * f.coeffs[half1, :]

    # embed along axis 1 the same way
    big = np.zeros((m1, m2), dtype=complex)
    keep = k2 != -half2
    big[:, k2[keep]] = tmp[:, keep]
    big[:, half2] = 0.5 * tmp[:, half2]
    big[:, -half2] += 0.5 * tmp[:, half2]
    return np.fft.ifft2(big * (m1 * m2)).real


@dataclass(frozen=True)
class DiscreteNorms:
    """Discrete C^{1,alpha} norm proxy of a field.

    holder_seminorm estimates [grad f]_alpha over sampled grid pairs; the
    scalar proxy max(sup, grad_sup) + holder_seminorm mirrors the Hoelder
    norm convention used by the estimates this package checks.
    """

    sup: float
    grad_sup: float
    holder_seminorm: float
    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0,1), got {self.alpha}")
        for name in ("sup", "grad_sup", "holder_seminorm"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def c1alpha(self):
        return max(self.sup, self.grad_sup) + self.holder_seminorm


def sample_pairs(grid, pair_budget, seed):
    """Seeded random grid-point pairs as flat indices, shape (budget, 2).

    Drawn sequentially from one generator so a larger budget extends the
    smaller one (estimates are monotone in the budget).
    """
    rng = np.random.default_rng(seed)
    npts = grid.n1 * grid.n2
    return rng.integers(0, npts, size=(int(pair_budget), 2))


def _pair_distances(grid, pairs):
    i_a, j_a = np.divmod(pairs[:, 0], grid.n2)
    i_b, j_b = np.divmod(pairs[:, 1], grid.n2)
    d1 = np.abs(i_a - i_b) / grid.n1
    d2 = np.abs(j_a - j_b) / grid.n2
    d1 = np.minimum(d1, 1.0 - d1)
    d2 = np.minimum(d2, 1.0 - d2)
    return np.hypot(d1, d2)


def sampled_seminorm(components, alpha, grid, pair_budget, seed, normalizer=1.0):
    """Lower bound on sup |g(x)-g(y)| / dist(x,y)^alpha over grid pairs.

    components: array (ncomp, n1, n2) of the (vector/matrix) field entries;
    differences are measured in the Euclidean norm of the stacked entries
    divided by `normalizer`. Uses all nearest-neighbour pairs plus
    `pair_budget` seeded random pairs.
    """
    comps = np.asarray(components, dtype=float)
    if comps.ndim == 2:
        comps = comps[None, :, :]
    h1, h2 = grid.spacing

    best = 0.0
    for axis, h in ((1, h1), (2, h2)):
        diff = comps - np.roll(comps, 1, axis=axis)
        mag = np.sqrt(np.sum(diff**2, axis=0)) / normalizer
        best = max(best, float(np.max(mag)) / h**alpha)

    pairs = sample_pairs(grid, pair_budget, seed)
    dist = _pair_distances(grid, pairs)
    flat = comps.reshape(comps.shape[0], -1)
    delta = flat[:, pairs[:, 0]] - flat[:, pairs[:, 1]]
    mag = np.sqrt(np.sum(delta**2, axis=0)) / normalizer
    ok = dist > 0
    if np.any(ok):
        best = max(best, float(np.max(mag[ok] / dist[ok] ** alpha)))
    return best


def discrete_holder_norms(f, alpha, pair_budget=None, seed=0):
    """Discrete C^{1,alpha} norms of f (sup, grad sup, [grad f]_alpha)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0,1), got {alpha}")
    npts = f.grid.n1 * f.grid.n2
    if pair_budget is None:
        pair_budget = npts
    if pair_budget < npts:
        raise ValueError(f"pair_budget must be >= n1*n2 = {npts}, got {pair_budget}")
    phys = f.to_physical()
    g1, g2 = gradient_physical(f)
    sem = sampled_seminorm(np.stack([g1, g2]), alpha, f.grid, pair_budget, seed)
    return DiscreteNorms(
        sup=float(np.max(np.abs(phys))),
        grad_sup=float(np.max(np.hypot(g1, g2))),
        holder_seminorm=sem,
        alpha=alpha,
    )


def c1alpha_proxy(f, alpha, pair_budget=None, seed=0):
    return discrete_holder_norms(f, alpha, pair_budget, seed).c1alpha


def c0alpha_proxy(f, alpha, pair_budget=None, seed=0):
    """sup + [f]_alpha with the sampled-pair seminorm."""
    if pair_budget is None:
        pair_budget = f.grid.n1 * f.grid.n2
    phys = f.to_physical()
    sem = sampled_seminorm(phys[None], alpha, f.grid, pair_budget, seed)
    return float(np.max(np.abs(phys))) + sem


# Matrix fields (Hessians, flow-map Jacobians) use the Frobenius norm
# normalised so |identity| = 1.
SQRT2 = float(np.sqrt(2.0))


def c2alpha_proxy(f, alpha, pair_budget=None, seed=0):
    """max(sup, grad sup, hessian sup) + [D^2 f]_alpha proxy."""
    if pair_budget is None:
        pair_budget = f.grid.n1 * f.grid.n2
    phys = f.to_physical()
    g1, g2 = gradient_physical(f)
    f11, f12, f22 = hessian_physical(f)
    hess_sup = float(np.max(np.sqrt((f11**2 + 2 * f12**2 + f22**2) / 2.0)))
    comps = np.stack([f11, SQRT2 * f12, f22])
    sem = sampled_seminorm(comps, alpha, f.grid, pair_budget, seed, normalizer=SQRT2)
    sup = float(np.max(np.abs(phys)))
    grad_sup = float(np.max(np.hypot(g1, g2)))
    return max(sup, grad_sup, hess_sup) + sem


def random_band_limited(grid, band, seed, amplitude=1.0, zero_mean=True):
    """Random real field with modes in 0 < max(|k1|,|k2|) <= band.

    Scaled so the physical max-norm equals `amplitude`. Deterministic in
    the seed and independent of the grid size for fixed band (the same
    mode dictionary is used), so refinement studies can share data.
    """
    rng = np.random.default_rng(seed)
    coeffs = np.zeros(grid.shape, dtype=complex)
    for k1 in range(-band, band + 1):
        for k2 in range(-band, band + 1):
            if k1 == 0 and k2 == 0:
                continue
            re, im = rng.standard_normal(2)
            coeffs[k1 % grid.n1, k2 % grid.n2] = re + 1j * im
    if not zero_mean:
        coeffs[0, 0] = rng.standard_normal()
    field = SpectralField2D(grid, _hermitianize(coeffs))
    peak = field.inf_norm()
    if peak > 0:
        field = field * (amplitude / peak)
    return field


def save_field(path, field, kind="spectral"):
    """Write a field snapshot (magic SSGF, version, n1, n2, kind byte)."""
    kinds = {"physical": KIND_PHYSICAL, "spectral": KIND_SPECTRAL}
    if kind not in kinds:
        raise ValueError(f"kind must be 'physical' or 'spectral', got {kind!r}")
    header = struct.pack(
        "<4sIIIB", SNAPSHOT_MAGIC, SNAPSHOT_VERSION, field.grid.n1, field.grid.n2, kinds[kind]
    )
    if kind == "physical":
        payload = np.ascontiguousarray(field.to_physical(), dtype="<f8").tobytes()
    else:
        c = np.ascontiguousarray(field.coeffs, dtype=complex)
        payload = c.view(np.float64).astype("<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def load_field(path):
    """Read a snapshot written by save_field; returns a SpectralField2D."""
    with open(path, "rb") as fh:
        raw = fh.read()
    head = struct.calcsize("<4sIIIB")
    magic, version, n1, n2, kind = struct.unpack("<4sIIIB", raw[:head])
    if magic != SNAPSHOT_MAGIC:
        raise ValueError(f"not a field snapshot (magic {magic!r})")
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    grid = TorusGrid(n1, n2)
    if kind == KIND_PHYSICAL:
        data = np.frombuffer(raw, dtype="<f8", offset=head).reshape(n1, n2)
        return to_spectral(data, grid)
    if kind == KIND_SPECTRAL:
        flat = np.frombuffer(raw, dtype="<f8", offset=head)
        coeffs = flat.view(np.complex128).reshape(n1, n2)
        return SpectralField2D(grid, coeffs.copy())
    raise ValueError(f"unknown snapshot kind byte {kind}")
