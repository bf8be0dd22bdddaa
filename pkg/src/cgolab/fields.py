"""Periodic grids of graded forms with FFT-diagonal exterior calculus.

Conventions used throughout:

* The box is [0, L)^3 sampled on an n^3 lattice, n a power of two.
* Spectral coefficients are Fourier-series coefficients: ``coeffs =
  fftn(values) / n^3``, so a constant field has its value at xi = 0.
* Discrete integrals carry the quadrature weight (L/n)^3; with the
  convention above the discrete Parseval identity
  ``(L/n)^3 sum_x <f, conj g> = L^3 sum_xi <f_hat, conj g_hat>``
  holds exactly, and all norms approximate their continuum versions.
* Weighted norms built from the conjugated Helmholtz symbol
  ``p(xi) = |xi|^2 - 2i <zeta, xi>`` clamp |p| from below by a floor and
  exclude the xi = 0 mode: the homogeneous weight is singular there and
  a periodic surrogate has no sensible analogue (the resolvent likewise
  annihilates that mode and reports it as clamped).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import fft as sfft

from . import algebra
from .algebra import GradedForm

_FFT_WORKERS = 1

_BIN_MAGIC = b"CGOF"
_BIN_VERSION = 1


def set_fft_workers(n: int) -> None:
    """Number of threads handed to the FFT backend (process-wide)."""
    global _FFT_WORKERS
    _FFT_WORKERS = max(1, int(n))


def seeded_rng(*key) -> np.random.Generator:
    """Counter-based generator keyed by integers; safe to derive
    independent deterministic streams for parallel work."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(list(key))))


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid: n points per axis on a box of side length L."""

    n: int
    length: float

    def __post_init__(self):
        if self.n < 8 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"grid.n must be a power of two >= 8, got {self.n}")
        if not self.length > 0:
            raise ValueError(f"grid.length must be positive, got {self.length}")

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def cell_volume(self) -> float:
        return (self.length / self.n) ** 3

    @property
    def volume(self) -> float:
        return self.length**3

    @cached_property
    def freq_index(self) -> np.ndarray:
        """Integer frequency indices in FFT order, shape (3, n, n, n)."""
        k = np.rint(np.fft.fftfreq(self.n) * self.n).astype(int)
        kx, ky, kz = np.meshgrid(k, k, k, indexing="ij")
        return np.stack([kx, ky, kz])

    @cached_property
    def xi(self) -> np.ndarray:
        """Frequency covectors (2 pi / L) * integer lattice, shape (3, n, n, n)."""
        return (2.0 * np.pi / self.length) * self.freq_index.astype(float)

    @cached_property
    def xi_sq(self) -> np.ndarray:
        return np.sum(self.xi**2, axis=0)

    @cached_property
    def xi_op(self) -> np.ndarray:
        """Derivative-symbol covectors: xi with the Nyquist rows zeroed.

        The index -n/2 has no +n/2 partner on the lattice, so keeping it
        in an odd-order symbol breaks the exact skew-adjointness of the
        discrete derivative; zeroing it restores xi(-k) = -xi(k) for
        every mode.  All differential operators, symbols and weighted
        norms use this covector so the operator identities hold exactly
        on arbitrary grid functions.
        """
        out = self.xi.copy()
        out[self.freq_index == -(self.n // 2)] = 0.0
        return out

    @cached_property
    def xi_op_sq(self) -> np.ndarray:
        return np.sum(self.xi_op**2, axis=0)

    @cached_property
    def x(self) -> np.ndarray:
        """Physical coordinates, shape (3, n, n, n)."""
        t = np.arange(self.n) * self.spacing
        X, Y, Z = np.meshgrid(t, t, t, indexing="ij")
        return np.stack([X, Y, Z])

    def on_lattice(self, covector, tol=1e-9) -> bool:
        """Whether a constant real covector sits on the frequency lattice."""
        idx = np.asarray(covector) * self.length / (2.0 * np.pi)
        return bool(np.all(np.abs(idx - np.rint(idx)) <= tol))


class FormField:
    """Grid of graded forms: complex values of shape (8, n, n, n)."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values: np.ndarray, check: bool = True):
        values = np.asarray(values, dtype=complex)
        expected = (8, grid.n, grid.n, grid.n)
        if values.shape != expected:
            raise ValueError(f"field values must have shape {expected}, got {values.shape}")
        if check and not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        self.grid = grid
        self.values = values

    @classmethod
    def zero(cls, grid: Grid) -> "FormField":
        return cls(grid, np.zeros((8, grid.n, grid.n, grid.n), dtype=complex), check=False)

    @classmethod
    def constant(cls, grid: Grid, form: GradedForm) -> "FormField":
        values = np.broadcast_to(
            form.data.reshape(8, 1, 1, 1), (8, grid.n, grid.n, grid.n)
        ).copy()
        return cls(grid, values, check=False)

    @classmethod
    def from_scalar(cls, grid: Grid, samples: np.ndarray) -> "FormField":
        values = np.zeros((8, grid.n, grid.n, grid.n), dtype=complex)
        values[0] = samples
        return cls(grid, values)

    def grade(self, l: int) -> "FormField":
        return FormField(self.grid, algebra.grade_select(self.values, l), check=False)

    def select(self, grades) -> "FormField":
        return FormField(self.grid, algebra.grade_select(self.values, grades), check=False)

    def alternate(self, offset: int = 0) -> "FormField":
        return FormField(self.grid, algebra.alternate(self.values, offset), check=False)

    def scaled(self, factor) -> "FormField":
        """Multiply by a complex scalar or a pointwise scalar field."""
        return FormField(self.grid, self.values * factor, check=False)

    def wedge(self, other: "FormField") -> "FormField":
        return FormField(self.grid, algebra.wedge(self.values, other.values), check=False)

    def vee(self, other: "FormField") -> "FormField":
        return FormField(self.grid, algebra.vee(self.values, other.values), check=False)

    def hodge(self) -> "FormField":
        return FormField(self.grid, algebra.hodge(self.values), check=False)

    def inner(self, other: "FormField") -> np.ndarray:
        return algebra.inner(self.values, other.values)

    def max_abs(self) -> float:
        return float(np.max(algebra.form_abs(self.values)))

    def __add__(self, other):
        return FormField(self.grid, self.values + other.values, check=False)

    def __sub__(self, other):
        return FormField(self.grid, self.values - other.values, check=False)

    def __neg__(self):
        return FormField(self.grid, -self.values, check=False)


class SpectralField:
    """Frequency-side twin of FormField; coeffs are Fourier-series coefficients."""

    __slots__ = ("grid", "coeffs")

    def __init__(self, grid: Grid, coeffs: np.ndarray, check: bool = True):
        coeffs = np.asarray(coeffs, dtype=complex)
        expected = (8, grid.n, grid.n, grid.n)
        if coeffs.shape != expected:
            raise ValueError(f"coeffs must have shape {expected}, got {coeffs.shape}")
        if check and not np.all(np.isfinite(coeffs)):
            raise ValueError("spectral coefficients must be finite")
        self.grid = grid
        self.coeffs = coeffs


def fft_forward(f: FormField) -> SpectralField:
    n3 = f.grid.n**3
    coeffs = sfft.fftn(f.values, axes=(1, 2, 3), workers=_FFT_WORKERS) / n3
    return SpectralField(f.grid, coeffs, check=False)


def fft_inverse(F: SpectralField) -> FormField:
    n3 = F.grid.n**3
    values = sfft.ifftn(F.coeffs * n3, axes=(1, 2, 3), workers=_FFT_WORKERS)
    return FormField(F.grid, values, check=False)


# ---------------------------------------------------------------------------
# exterior calculus as Fourier multipliers
# ---------------------------------------------------------------------------

def _spectral_covector(grid: Grid, zeta) -> np.ndarray:
    """Combined symbol covector i*xi + zeta, shape (3, n, n, n)."""
    c = 1j * grid.xi_op
    if zeta is not None:
        c = c + np.asarray(zeta, dtype=complex).reshape(3, 1, 1, 1)
    return c


def ext_deriv(f: FormField, zeta=None) -> FormField:
    """Exterior derivative; with zeta the conjugated version d + zeta^."""
    c = _spectral_covector(f.grid, zeta)
    F = fft_forward(f)
    out = algebra.wedge_cov(c, F.coeffs)
    return fft_inverse(SpectralField(f.grid, out, check=False))


def coderiv(f: FormField, zeta=None) -> FormField:
    """Codifferential; with zeta the conjugated version with (-1)^l zeta v."""
    c = _spectral_covector(f.grid, zeta)
    F = fft_forward(f)
    out = algebra.vee_cov(c, algebra.alternate(F.coeffs))
    return fft_inverse(SpectralField(f.grid, out, check=False))


def d_plus_delta(f: FormField, zeta=None) -> FormField:
    """(d + delta) in one transform pair; conjugated when zeta is given."""
    c = _spectral_covector(f.grid, zeta)
    F = fft_forward(f)
    out = algebra.wedge_cov(c, F.coeffs) + algebra.vee_cov(c, algebra.alternate(F.coeffs))
    return fft_inverse(SpectralField(f.grid, out, check=False))


def laplacian_symbol(grid: Grid, zeta=None) -> np.ndarray:
    """Symbol of the conjugated Hodge Laplacian: |xi|^2 - 2i<z,xi> - <z,z>."""
    if zeta is None:
        return grid.xi_op_sq.astype(complex)
    z = np.asarray(zeta, dtype=complex)
    zdot = np.einsum("j,j...->...", z, grid.xi_op)
    return grid.xi_op_sq - 2j * zdot - np.dot(z, z)


def conj_laplacian(f: FormField, zeta=None) -> FormField:
    """Apply the (conjugated) Hodge Laplacian spectrally to every blade."""
    m = laplacian_symbol(f.grid, zeta)
    F = fft_forward(f)
    return fft_inverse(SpectralField(f.grid, F.coeffs * m, check=False))


def helmholtz_symbol(grid: Grid, zeta) -> np.ndarray:
    """p(xi) = |xi|^2 - 2i <zeta, xi> on the frequency lattice."""
    z = np.asarray(zeta, dtype=complex)
    zdot = np.einsum("j,j...->...", z, grid.xi_op)
    return grid.xi_op_sq - 2j * zdot


def default_floor(grid: Grid) -> float:
    """Default clamp floor for |p|: well below one lattice frequency square."""
    return 1e-8 * (2.0 * np.pi / grid.length) ** 2


@dataclass(frozen=True)
class ClampReport:
    """Bookkeeping for frequencies where |p| fell below the clamp floor."""

    total: int
    clamped: int
    floor: float
    threshold: float

    @property
    def fraction(self) -> float:
        return self.clamped / self.total

    @property
    def exceeded(self) -> bool:
        return self.fraction > self.threshold


def _clamped_abs_symbol(grid: Grid, zeta, floor: float):
    p = helmholtz_symbol(grid, zeta)
    absp = np.abs(p)
    mask = absp < floor
    return p, np.maximum(absp, floor), mask


def bourgain_weight(grid: Grid, zeta, b: float, floor: float | None = None) -> np.ndarray:
    """Norm weight |p|^(2b) on the unclamped sublattice.

    Modes with |p| < floor carry weight zero: they are exactly the modes
    the resolvent annihilates, so norms, resolvent and solver all live
    on the same sublattice.  The clamp set always contains xi = 0, and
    for the paired conjugation geometries also xi = -rho, where the
    symbol vanishes identically.
    """
    if floor is None:
        floor = default_floor(grid)
    _, absp, mask = _clamped_abs_symbol(grid, zeta, floor)
    w = absp ** (2.0 * b)
    w[mask] = 0.0
    return w


def bourgain_norm(f, zeta, b: float, floor: float | None = None) -> float:
    """Weighted-l2 norm over the nonzero frequency lattice, all grades."""
    if b not in (0.5, -0.5):
        raise ValueError(f"b must be +1/2 or -1/2, got {b}")
    F = f if isinstance(f, SpectralField) else fft_forward(f)
    w = bourgain_weight(F.grid, zeta, b, floor)
    total = np.sum(w * np.sum(np.abs(F.coeffs) ** 2, axis=0))
    return float(np.sqrt(F.grid.volume * total))


def resolvent(
    f,
    zeta,
    k: float,
    floor: float | None = None,
    clamp_threshold: float = 1e-3,
    spectral_out: bool = False,
):
    """Invert the shifted conjugated Laplacian by dividing by the symbol p.

    Requires <zeta, zeta> = -k^2, which makes p the symbol of the
    operator being inverted.  Frequencies with |p| below ``floor`` are
    annihilated and counted in the report: the symbol vanishes exactly
    at xi = 0 (and at xi = -rho for the paired conjugation covectors),
    so the inverse is defined on the complementary sublattice, where it
    is an exact two-sided inverse.
    """
    assert_admissible(zeta, k)
    grid = f.grid
    if floor is None:
        floor = default_floor(grid)
    F = f if isinstance(f, SpectralField) else fft_forward(f)
    p, _, mask = _clamped_abs_symbol(grid, zeta, floor)
    out = F.coeffs / np.where(mask, 1.0, p)
    out[:, mask] = 0.0
    report = ClampReport(
        total=grid.n**3, clamped=int(np.sum(mask)), floor=floor, threshold=clamp_threshold
    )
    result = SpectralField(grid, out, check=False)
    return (result if spectral_out else fft_inverse(result)), report


def resolvent_operator_norm(grid: Grid, zeta, floor: float | None = None) -> float:
    """Diagonal operator norm of the resolvent between the +-1/2 spaces:
    weight^(1/2) |p|^(-1) weight^(1/2) maximized over the active modes."""
    if floor is None:
        floor = default_floor(grid)
    p, absp, mask = _clamped_abs_symbol(grid, zeta, floor)
    ratio = np.where(mask, 0.0, absp / np.where(mask, 1.0, np.abs(p)))
    return float(np.max(ratio))


def assert_admissible(zeta, k: float, tol: float = 1e-10) -> None:
    z = np.asarray(zeta, dtype=complex)
    defect = abs(np.dot(z, z) + k**2)
    scale = max(k**2, float(np.sum(np.abs(z) ** 2)), 1.0)
    if defect > tol * scale:
        raise ValueError(f"<zeta,zeta> = {np.dot(z, z)} is not -k^2 = {-k**2}")


# ---------------------------------------------------------------------------
# plain Sobolev norms and pairings
# ---------------------------------------------------------------------------

def quadrature_pairing(f: FormField, g: FormField) -> complex:
    """Bilinear integral (L/n)^3 sum_x <f, g>; no conjugation."""
    return complex(f.grid.cell_volume * np.sum(f.inner(g)))


def hermitian_pairing(f: FormField, g: FormField) -> complex:
    """Sesquilinear L^2 pairing (conjugates the second argument)."""
    return complex(f.grid.cell_volume * np.sum(f.values * np.conj(g.values)))


def spectral_pairing(f, g) -> complex:
    """Frequency-side sesquilinear pairing L^3 sum_xi <f_hat, conj g_hat>."""
    F = f if isinstance(f, SpectralField) else fft_forward(f)
    G = g if isinstance(g, SpectralField) else fft_forward(g)
    return complex(F.grid.volume * np.sum(F.coeffs * np.conj(G.coeffs)))


def l2_norm(f) -> float:
    F = f if isinstance(f, SpectralField) else fft_forward(f)
    return float(np.sqrt(F.grid.volume * np.sum(np.abs(F.coeffs) ** 2)))


def sobolev_norms(f: FormField) -> tuple[float, float]:
    """(L^2 norm, H^-1 norm); the H^-1 weight is (1 + |xi|^2)^(-1)."""
    F = fft_forward(f)
    density = np.sum(np.abs(F.coeffs) ** 2, axis=0)
    l2 = F.grid.volume * np.sum(density)
    hm1 = F.grid.volume * np.sum(density / (1.0 + F.grid.xi_op_sq))
    return float(np.sqrt(l2)), float(np.sqrt(hm1))


def mollify(f: FormField, h: float) -> FormField:
    """Low-pass by the Gaussian multiplier exp(-(h |xi|)^2 / 2)."""
    if not h > 0:
        raise ValueError(f"mollification scale must be positive, got {h}")
    F = fft_forward(f)
    m = np.exp(-0.5 * (h**2) * f.grid.xi_sq)
    return fft_inverse(SpectralField(f.grid, F.coeffs * m, check=False))


# ---------------------------------------------------------------------------
# symmetric tensor fields
# ---------------------------------------------------------------------------

def sym_product_field(u: FormField, v: FormField) -> np.ndarray:
    """Pointwise symmetric product of the grade-1 parts, shape (6, n, n, n)."""
    return algebra.sym_product_components(u.values[1:4], v.values[1:4])


def sym_coderiv(grid: Grid, tensor: np.ndarray) -> FormField:
    """Formal adjoint symmetric derivative of a symmetric 2-tensor field.

    Coordinate form: component k of the output is -sum_j d_j (t_jk + t_kj).
    """
    if tensor.shape != (6, grid.n, grid.n, grid.n):
        raise ValueError("tensor field must have shape (6, n, n, n)")
    that = sfft.fftn(tensor, axes=(1, 2, 3), workers=_FFT_WORKERS)
    full = np.empty((3, 3) + tensor.shape[1:], dtype=complex)
    for idx, (j, k) in enumerate(algebra.SYM_PAIRS):
        full[j, k] = that[idx]
        full[k, j] = that[idx]
    out_hat = -2.0 * np.einsum("j...,jk...->k...", 1j * grid.xi_op, full)
    out = sfft.ifftn(out_hat, axes=(1, 2, 3), workers=_FFT_WORKERS)
    values = np.zeros((8, grid.n, grid.n, grid.n), dtype=complex)
    values[1:4] = out
    return FormField(grid, values, check=False)


# ---------------------------------------------------------------------------
# utilities
# ---------------------------------------------------------------------------

def plane_wave_scalar(grid: Grid, kvec) -> np.ndarray:
    """exp(i k.x) sampled on the grid, shape (n, n, n)."""
    phase = np.einsum("j,j...->...", np.asarray(kvec, dtype=float), grid.x)
    return np.exp(1j * phase)


def random_band_limited(
    grid: Grid,
    rng: np.random.Generator,
    band: int,
    grades=(0, 1, 2, 3),
    zero_mean: bool = False,
) -> FormField:
    """Random field with spectrum confined to max_i |k_i| <= band."""
    n = grid.n
    coeffs = np.zeros((8, n, n, n), dtype=complex)
    mask = np.all(np.abs(grid.freq_index) <= band, axis=0)
    nsel = int(np.sum(mask))
    for blade in np.nonzero(np.isin(algebra.GRADES, grades))[0]:
        coeffs[blade][mask] = rng.standard_normal(nsel) + 1j * rng.standard_normal(nsel)
    if zero_mean:
        coeffs[:, 0, 0, 0] = 0.0
    return fft_inverse(SpectralField(grid, coeffs, check=False))


def lowpass_scalar(grid: Grid, samples: np.ndarray, fraction: float = 2.0 / 3.0) -> np.ndarray:
    """Sharp low-pass of a scalar field at ``fraction`` of the Nyquist index."""
    cutoff = fraction * (grid.n // 2)
    keep = np.all(np.abs(grid.freq_index) <= cutoff, axis=0)
    shat = sfft.fftn(np.asarray(samples, dtype=complex), workers=_FFT_WORKERS)
    return sfft.ifftn(shat * keep, workers=_FFT_WORKERS)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def save_field_bin(f: FormField, path) -> None:
    """Flat binary snapshot: magic, version, n, L, then 8 row-major
    complex-double components, little-endian."""
    header = _BIN_MAGIC + struct.pack("<IIdI", _BIN_VERSION, f.grid.n, f.grid.length, 8)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(f.values, dtype="<c16").tobytes())


def load_field_bin(path) -> FormField:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _BIN_MAGIC:
            raise ValueError(f"not a field snapshot: bad magic {magic!r}")
        version, n, length, ncomp = struct.unpack("<IIdI", fh.read(20))
        if version != _BIN_VERSION or ncomp != 8:
            raise ValueError(f"unsupported snapshot layout (version {version}, {ncomp} comps)")
        data = np.frombuffer(fh.read(), dtype="<c16").reshape(8, n, n, n)
    return FormField(Grid(n, length), data.astype(complex))


def field_to_json(f: FormField) -> dict:
    if f.grid.n > 16:
        raise ValueError("JSON snapshots are limited to grids with n <= 16")
    return {
        "n": f.grid.n,
        "length": f.grid.length,
        "blades": [
            {"re": comp.real.ravel().tolist(), "im": comp.imag.ravel().tolist()}
            for comp in f.values
        ],
    }


def field_from_json(doc: dict) -> FormField:
    n = int(doc["n"])
    grid = Grid(n, float(doc["length"]))
    values = np.zeros((8, n, n, n), dtype=complex)
    for i, blade in enumerate(doc["blades"]):
        values[i] = (np.asarray(blade["re"]) + 1j * np.asarray(blade["im"])).reshape(n, n, n)
    return FormField(grid, values)


def save_field_json(f: FormField, path) -> None:
    with open(path, "w") as fh:
        json.dump(field_to_json(f), fh)


def load_field_json(path) -> FormField:
    with open(path) as fh:
        return field_from_json(json.load(fh))
