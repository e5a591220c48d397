"""Rotation-invariant spherical-harmonics shape signature.

Occupied voxel centers are binned into concentric shells about the grid
center; each shell is treated as a discrete measure of unit point masses and
decomposed against orthonormal complex spherical harmonics. The signature
row for shell r is the per-degree power sqrt(sum_m |a_lm|^2), which is
invariant under any rotation that maps the point set to itself.

Convention: complex harmonics with the Condon-Shortley phase folded into the
associated Legendre recurrence ((-1)^m on the diagonal term). Per-degree
power is independent of this choice.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .errors import CorruptIndex, DomainError, ShapeMismatch
from .voxelize import VoxelGrid

DEFAULT_SHELLS = 16
DEFAULT_FREQ = 16

FSIG_MAGIC = b"FSIG"
FSIG_VERSION = 1


@dataclass(frozen=True)
class SphSignature:
    """n_shells x n_freq matrix of non-negative per-degree harmonic power."""

    power: np.ndarray

    def __post_init__(self):
        p = np.ascontiguousarray(self.power, dtype=np.float64)
        if p.ndim != 2:
            raise ValueError(f"power must be 2-D, got shape {p.shape}")
        object.__setattr__(self, "power", p)

    @property
    def n_shells(self) -> int:
        return self.power.shape[0]

    @property
    def n_freq(self) -> int:
        return self.power.shape[1]

    @property
    def dims(self) -> tuple:
        return self.power.shape

    def norm(self) -> float:
        return float(np.linalg.norm(self.power))


@dataclass
class ShellSamples:
    """Spherical coordinates of the occupied voxel centers binned to one shell."""

    shell_index: int
    theta: np.ndarray = field(default_factory=lambda: np.empty(0))
    phi: np.ndarray = field(default_factory=lambda: np.empty(0))
    weight: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __len__(self):
        return len(self.theta)


def bin_shells(grid: VoxelGrid, n_shells: int = DEFAULT_SHELLS) -> List[ShellSamples]:
    """Assign occupied voxel centers to concentric shells of width (R/2)/n_shells.

    Centers at radius >= R/2 (rasterization slack) land in the outermost shell.
    """
    if n_shells < 1:
        raise ValueError("n_shells must be >= 1")
    r = grid.resolution
    delta = (r / 2.0) / n_shells
    centers = grid.occupied_centers() - grid.center
    dist = np.linalg.norm(centers, axis=1)
    idx = np.minimum((dist / delta).astype(np.int64), n_shells - 1)

    with np.errstate(invalid="ignore", divide="ignore"):
        cos_theta = np.where(dist > 0, centers[:, 2] / np.maximum(dist, 1e-300), 1.0)
    theta = np.arccos(np.clip(cos_theta, -1.0, 1.0))
    phi = np.mod(np.arctan2(centers[:, 1], centers[:, 0]), 2.0 * np.pi)

    shells = []
    for s in range(n_shells):
        mask = idx == s
        shells.append(ShellSamples(s, theta[mask], phi[mask], np.ones(int(mask.sum()))))
    return shells


def assoc_legendre(l: int, m: int, x) -> np.ndarray:
    """Associated Legendre P_l^m with the Condon-Shortley phase, by the stable
    diagonal-then-upward recurrence. Accepts scalars or arrays in [-1, 1]."""
    if l < 0 or m < 0 or m > l:
        raise DomainError(f"require 0 <= m <= l, got l={l}, m={m}")
    x = np.asarray(x, dtype=np.float64)
    if np.any(np.abs(x) > 1.0 + 1e-12):
        raise DomainError("argument outside [-1, 1]")
    x = np.clip(x, -1.0, 1.0)
    # diagonal: P_m^m = (-1)^m (2m-1)!! (1-x^2)^{m/2}
    pmm = np.ones_like(x)
    if m > 0:
        somx2 = np.sqrt((1.0 - x) * (1.0 + x))
        fact = 1.0
        for _ in range(m):
            pmm = -pmm * fact * somx2
            fact += 2.0
    if l == m:
        return pmm
    # one step up: P_{m+1}^m = x (2m+1) P_m^m
    pmmp1 = x * (2 * m + 1) * pmm
    if l == m + 1:
        return pmmp1
    # upward in degree: (l-m) P_l^m = x (2l-1) P_{l-1}^m - (l+m-1) P_{l-2}^m
    for ll in range(m + 2, l + 1):
        pmm, pmmp1 = pmmp1, (x * (2 * ll - 1) * pmmp1 - (ll + m - 1) * pmm) / (ll - m)
    return pmmp1


def _sh_norm(l: int, m: int) -> float:
    """Orthonormalization constant sqrt((2l+1)(l-m)! / (4 pi (l+m)!))."""
    return math.sqrt((2 * l + 1) * math.factorial(l - m)
                     / (4.0 * math.pi * math.factorial(l + m)))


def _batched_power(cos_theta: np.ndarray, phi: np.ndarray, weight: np.ndarray,
                   shell_ids: np.ndarray, n_shells: int, n_freq: int) -> np.ndarray:
    """Per-shell per-degree power for all shells at once.

    Shares the Legendre recurrence across degrees: for each order m the
    diagonal term is advanced once, then swept upward in l, with per-shell
    complex sums done by bincount.
    """
    power_sq = np.zeros((n_shells, n_freq))
    if len(cos_theta) == 0:
        return power_sq
    x = cos_theta
    somx2 = np.sqrt((1.0 - x) * (1.0 + x))
    pmm = np.ones_like(x)
    fact = 1.0
    for m in range(n_freq):
        if m > 0:
            pmm = -pmm * fact * somx2
            fact += 2.0
        phase = np.exp(-1j * m * phi)
        mult = 1.0 if m == 0 else 2.0  # |a_{l,-m}| = |a_{l,m}| for real weights
        p_prev, p_cur = None, pmm
        for l in range(m, n_freq):
            if l == m + 1:
                p_prev, p_cur = p_cur, x * (2 * m + 1) * pmm
            elif l > m + 1:
                p_prev, p_cur = p_cur, (x * (2 * l - 1) * p_cur
                                        - (l + m - 1) * p_prev) / (l - m)
            c = weight * p_cur * _sh_norm(l, m) * phase
            sr = np.bincount(shell_ids, weights=c.real, minlength=n_shells)
            si = np.bincount(shell_ids, weights=c.imag, minlength=n_shells)
            power_sq[:, l] += mult * (sr * sr + si * si)
    return power_sq


def sh_coefficients(shell: ShellSamples, n_freq: int = DEFAULT_FREQ) -> list:
    """Complex coefficients a_{l,m} = sum_i w_i conj(Y_l^m(theta_i, phi_i)),
    returned as a list of length-(l+1) arrays for m = 0..l."""
    if n_freq < 1:
        raise ValueError("n_freq must be >= 1")
    coeffs = []
    if len(shell) == 0:
        return [np.zeros(l + 1, dtype=np.complex128) for l in range(n_freq)]
    cos_theta = np.cos(shell.theta)
    for l in range(n_freq):
        row = np.empty(l + 1, dtype=np.complex128)
        for m in range(l + 1):
            plm = assoc_legendre(l, m, cos_theta)
            ylm = _sh_norm(l, m) * plm * np.exp(1j * m * shell.phi)
            row[m] = np.sum(shell.weight * np.conj(ylm))
        coeffs.append(row)
    return coeffs


def sh_decompose(shell: ShellSamples, n_freq: int = DEFAULT_FREQ) -> np.ndarray:
    """Per-degree power vector: power[l] = sqrt(sum_{m=-l..l} |a_{l,m}|^2).

    Weights are real, so |a_{l,-m}| = |a_{l,m}| and only m >= 0 is computed.
    """
    if n_freq < 1:
        raise ValueError("n_freq must be >= 1")
    sq = _batched_power(np.cos(shell.theta), shell.phi, shell.weight,
                        np.zeros(len(shell), dtype=np.int64), 1, n_freq)
    return np.sqrt(sq[0])


def signature(grid: VoxelGrid, n_shells: int = DEFAULT_SHELLS,
              n_freq: int = DEFAULT_FREQ) -> SphSignature:
    """Full shape signature: per-shell per-degree harmonic power."""
    shells = bin_shells(grid, n_shells)
    cos_theta = np.concatenate([np.cos(s.theta) for s in shells])
    phi = np.concatenate([s.phi for s in shells])
    weight = np.concatenate([s.weight for s in shells])
    ids = np.concatenate([np.full(len(s), s.shell_index, dtype=np.int64)
                          for s in shells])
    return SphSignature(np.sqrt(_batched_power(cos_theta, phi, weight, ids,
                                               n_shells, n_freq)))


def distance(a: SphSignature, b: SphSignature) -> float:
    """L2 (Frobenius) distance between two signatures."""
    if a.dims != b.dims:
        raise ShapeMismatch(f"signature dims {a.dims} vs {b.dims}")
    return float(np.linalg.norm(a.power - b.power))


def dump_signature(sig: SphSignature, part_id: int = 0) -> bytes:
    """FSIG file: magic + u16 version + u16 n_shells + u16 n_freq + u32 part_id
    + row-major little-endian f64 values."""
    header = FSIG_MAGIC + struct.pack("<HHHI", FSIG_VERSION, sig.n_shells,
                                      sig.n_freq, part_id)
    return header + sig.power.astype("<f8").tobytes()


def load_signature(data: bytes):
    """Parse an FSIG file; returns (SphSignature, part_id)."""
    if data[:4] != FSIG_MAGIC:
        raise CorruptIndex("bad FSIG magic")
    if len(data) < 14:
        raise CorruptIndex("truncated FSIG header")
    version, n_shells, n_freq, part_id = struct.unpack_from("<HHHI", data, 4)
    if version != FSIG_VERSION:
        raise CorruptIndex(f"unsupported FSIG version {version}")
    body = data[14:]
    expect = n_shells * n_freq * 8
    if len(body) != expect:
        raise CorruptIndex(f"FSIG body is {len(body)} bytes, expected {expect}")
    power = np.frombuffer(body, dtype="<f8").reshape(n_shells, n_freq)
    return SphSignature(power.copy()), part_id
