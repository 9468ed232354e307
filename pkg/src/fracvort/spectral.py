"""Fourier-space scalar fields on the 2-torus [0, 2pi)^2.

Conventions, fixed once and used everywhere:
  * coefficients are stored in numpy fft2 layout, forward transform carries
    1/N^2:  coeffs = fft2(physical) / N^2, so coeffs[k] is the amplitude of
    exp(i k.x);
  * the pairing <f, e^{ik.x}> = integral of f * exp(-i k.x) over the torus
    equals (2pi)^2 * coeffs[k];
  * Sobolev weight (1 + |k|^2)^{2 alpha}, defined for fields with mean; on
    mean-zero fields this is equivalent to the |k|^{4 alpha} weight.

Products are dealiased by the 2/3 rule: both factors and the result are
truncated to modes with max(|k1|, |k2|) <= N/3, so the discrete product
agrees with the continuous one for band-limited fields.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "FourierField",
    "SobolevIndex",
    "sobolev_norm",
    "heat_semigroup",
    "biot_savart",
    "advect",
    "transport",
    "check_divergence_free",
    "pair",
    "pair_real",
    "laplacian",
    "gradient",
    "write_fld1",
    "read_fld1",
    "write_physical_csv",
]

TWO_PI = 2.0 * np.pi
_ALPHA_MAX = 8.0

_grid_cache: dict[tuple[str, int], np.ndarray] = {}
_weight_cache: dict[tuple[int, float], np.ndarray] = {}


@dataclass(frozen=True)
class SobolevIndex:
    """Regularity index alpha of the scale H^{2 alpha}(T^2)."""

    alpha: float

    def __post_init__(self):
        if abs(self.alpha) > _ALPHA_MAX:
            raise ValueError(
                f"|alpha| <= {_ALPHA_MAX} required to keep (1+|k|^2)^(2a) representable"
            )


def _alpha_value(alpha) -> float:
    return alpha.alpha if isinstance(alpha, SobolevIndex) else float(alpha)


def _wavenumbers(n: int) -> np.ndarray:
    key = ("k", n)
    if key not in _grid_cache:
        _grid_cache[key] = np.fft.fftfreq(n, d=1.0 / n)
    return _grid_cache[key]


def _ksq(n: int) -> np.ndarray:
    key = ("ksq", n)
    if key not in _grid_cache:
        k = _wavenumbers(n)
        _grid_cache[key] = k[:, None] ** 2 + k[None, :] ** 2
    return _grid_cache[key]


def _dealias_mask(n: int) -> np.ndarray:
    key = ("mask", n)
    if key not in _grid_cache:
        k = np.abs(_wavenumbers(n))
        cut = n / 3.0
        _grid_cache[key] = (k[:, None] <= cut) & (k[None, :] <= cut)
    return _grid_cache[key]


def sobolev_weight(n: int, alpha: float) -> np.ndarray:
    key = (n, round(alpha, 12))
    if key not in _weight_cache:
        _weight_cache[key] = (1.0 + _ksq(n)) ** (2 * alpha)
    return _weight_cache[key]


def coeff_norm(c: np.ndarray, alpha: float) -> float:
    """Sobolev norm of a raw coefficient array (0-d arrays fall back to abs)."""
    c = np.asarray(c)
    if c.ndim == 0:
        return float(abs(c))
    return float(np.sqrt(np.sum(sobolev_weight(c.shape[-1], alpha) * np.abs(c) ** 2)))


class FourierField:
    """Real scalar field on T^2 held as Hermitian-symmetric coefficients."""

    __slots__ = ("n", "coeffs")

    def __init__(self, coeffs: np.ndarray, *, check: bool = False):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.ndim != 2 or coeffs.shape[0] != coeffs.shape[1]:
            raise ValueError("coeffs must be a square 2-D array")
        n = coeffs.shape[0]
        if n < 8 or n % 2:
            raise ValueError(f"grid size must be even and >= 8, got {n}")
        if check:
            phys = np.fft.ifft2(coeffs) * n * n
            if np.max(np.abs(phys.imag)) > 1e-10 * max(1.0, np.max(np.abs(phys.real))):
                raise ValueError("coefficients are not Hermitian-symmetric")
        self.n = n
        self.coeffs = coeffs

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_physical(cls, values: np.ndarray) -> "FourierField":
        values = np.asarray(values, dtype=float)
        n = values.shape[0]
        return cls(np.fft.fft2(values) / (n * n))

    @classmethod
    def from_function(cls, f, n: int) -> "FourierField":
        x = np.arange(n) * TWO_PI / n
        xx, yy = np.meshgrid(x, x, indexing="ij")
        return cls.from_physical(f(xx, yy))

    @classmethod
    def zero(cls, n: int) -> "FourierField":
        return cls(np.zeros((n, n), dtype=complex))

    @classmethod
    def single_mode(
        cls,
        n: int,
        mode: tuple[int, int],
        amplitude: complex = 1.0,
        *,
        real: bool = True,
    ) -> "FourierField":
        """Single Fourier mode.  With real=True (default) the conjugate mode
        is added so the field is amplitude*e^{ik.x} + c.c.; real=False keeps
        the bare complex exponential (useful for pairing tests)."""
        c = np.zeros((n, n), dtype=complex)
        k1, k2 = mode
        c[k1 % n, k2 % n] = amplitude
        if real:
            c[(-k1) % n, (-k2) % n] += np.conj(amplitude)
        return cls(c)

    # -- basic ops ----------------------------------------------------------

    def to_physical(self) -> np.ndarray:
        return (np.fft.ifft2(self.coeffs) * self.n * self.n).real

    def mean_mode(self) -> complex:
        return complex(self.coeffs[0, 0])

    def mean_zeroed(self) -> "FourierField":
        c = self.coeffs.copy()
        c[0, 0] = 0.0
        return FourierField(c)

    def copy(self) -> "FourierField":
        return FourierField(self.coeffs.copy())

    def __add__(self, other: "FourierField") -> "FourierField":
        self._same_grid(other)
        return FourierField(self.coeffs + other.coeffs)

    def __sub__(self, other: "FourierField") -> "FourierField":
        self._same_grid(other)
        return FourierField(self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "FourierField":
        return FourierField(self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "FourierField":
        return FourierField(-self.coeffs)

    def _same_grid(self, other: "FourierField") -> None:
        if self.n != other.n:
            raise ValueError(f"grid mismatch: {self.n} vs {other.n}")


def sobolev_norm(f: FourierField, alpha: SobolevIndex | float) -> float:
    """(sum_k (1+|k|^2)^{2 alpha} |f_k|^2)^{1/2}; alpha=0 is the l2 norm of
    the coefficients (physical L2 up to the fixed (2pi)^2 convention)."""
    a = _alpha_value(alpha)
    w = (1.0 + _ksq(f.n)) ** (2 * a)
    return float(np.sqrt(np.sum(w * np.abs(f.coeffs) ** 2)))


def heat_semigroup(f: FourierField, t: float) -> FourierField:
    """S_t f: multiply mode k by exp(-t |k|^2)."""
    if t < 0:
        raise ValueError("semigroup time must be nonnegative")
    if t == 0:
        return f.copy()
    return FourierField(f.coeffs * np.exp(-t * _ksq(f.n)))


def laplacian(f: FourierField) -> FourierField:
    return FourierField(-_ksq(f.n) * f.coeffs)


def gradient(f: FourierField) -> tuple[FourierField, FourierField]:
    k = _wavenumbers(f.n)
    return (
        FourierField(1j * k[:, None] * f.coeffs),
        FourierField(1j * k[None, :] * f.coeffs),
    )


def biot_savart(omega: FourierField, *, mean_tol: float = 1e-10) -> tuple[FourierField, FourierField]:
    """Velocity u with curl u = omega and div u = 0, from the stream function
    psi solving Laplace(psi) = omega: psi_k = -omega_k / |k|^2 and
    u = (-d2 psi, d1 psi)."""
    if abs(omega.mean_mode()) > mean_tol:
        raise ValueError("biot_savart requires a mean-zero vorticity field")
    n = omega.n
    ksq = _ksq(n)
    ksq_safe = ksq.copy()
    ksq_safe[0, 0] = 1.0
    psi = -omega.coeffs / ksq_safe
    psi[0, 0] = 0.0
    k = _wavenumbers(n)
    u1 = FourierField(-1j * k[None, :] * psi)
    u2 = FourierField(1j * k[:, None] * psi)
    return u1, u2


def check_divergence_free(u: tuple[FourierField, FourierField], tol: float = 1e-8) -> None:
    u1, u2 = u
    k = _wavenumbers(u1.n)
    div = 1j * k[:, None] * u1.coeffs + 1j * k[None, :] * u2.coeffs
    worst = float(np.max(np.abs(div)))
    if worst > tol:
        raise ValueError(f"velocity field is not divergence-free (max |div| = {worst:.3e})")


def advect(u: tuple[FourierField, FourierField], omega: FourierField) -> FourierField:
    """u . grad(omega), pseudo-spectral with 2/3-rule dealiasing."""
    u1, u2 = u
    u1._same_grid(omega)
    u2._same_grid(omega)
    n = omega.n
    mask = _dealias_mask(n)
    k = _wavenumbers(n)
    wx = np.fft.ifft2(mask * 1j * k[:, None] * omega.coeffs).real * n * n
    wy = np.fft.ifft2(mask * 1j * k[None, :] * omega.coeffs).real * n * n
    u1p = np.fft.ifft2(mask * u1.coeffs).real * n * n
    u2p = np.fft.ifft2(mask * u2.coeffs).real * n * n
    prod = np.fft.fft2(u1p * wx + u2p * wy) / (n * n)
    return FourierField(mask * prod)


def transport(xi: tuple[FourierField, FourierField], omega: FourierField) -> FourierField:
    """xi . grad(omega) for a fixed divergence-free field xi (same kernel as
    advect; the divergence-free check belongs at configuration time)."""
    return advect(xi, omega)


def pair(f: FourierField, mode: tuple[int, int]) -> complex:
    """<f, e^{ik.x}> = integral f e^{-ik.x} dx = (2pi)^2 f_k."""
    k1, k2 = mode
    half = f.n // 2
    if not (-half < k1 <= half and -half < k2 <= half):
        raise ValueError(f"mode {mode} outside the resolved band of N={f.n}")
    return TWO_PI**2 * complex(f.coeffs[k1 % f.n, k2 % f.n])


def pair_real(f: FourierField, mode: tuple[int, int]) -> tuple[float, float]:
    z = pair(f, mode)
    return z.real, z.imag


# ---------------------------------------------------------------------------
# snapshot format: FLD1 binary and physical-space CSV
# ---------------------------------------------------------------------------

_FLD1_HEADER = struct.Struct("<4sI")


def write_fld1(f: FourierField, file: str | Path) -> None:
    with open(file, "wb") as fh:
        fh.write(_FLD1_HEADER.pack(b"FLD1", f.n))
        flat = np.ascontiguousarray(f.coeffs, dtype="<c16")
        fh.write(flat.tobytes())


def read_fld1(file: str | Path) -> FourierField:
    with open(file, "rb") as fh:
        magic, n = _FLD1_HEADER.unpack(fh.read(_FLD1_HEADER.size))
        if magic != b"FLD1":
            raise ValueError(f"bad magic {magic!r}, expected FLD1")
        data = np.frombuffer(fh.read(), dtype="<c16").copy()
    if data.size != n * n:
        raise ValueError("truncated FLD1 file")
    return FourierField(data.reshape(n, n))


def write_physical_csv(f: FourierField, file: str | Path) -> None:
    phys = f.to_physical()
    x = np.arange(f.n) * TWO_PI / f.n
    with open(file, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x1", "x2", "value"])
        for i in range(f.n):
            for j in range(f.n):
                writer.writerow([repr(x[i]), repr(x[j]), repr(phys[i, j])])
