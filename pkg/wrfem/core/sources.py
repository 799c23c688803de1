"""
Applied magnetic fields: circular current loop and patch excitations.
"""
import logging
import math
from typing import Tuple

import numpy as np
from scipy.special import ellipe, ellipk

from wrfem.core.errors import SamplingError
from wrfem.core.weakforms import MU0

logger = logging.getLogger(__name__)


def loop_field(r_c: float, current: float, z: np.ndarray, r: np.ndarray,
               z_loop: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Magnetostatic field of a circular filament loop on the z axis.

    Args:
        r_c (float): Loop radius in m.
        current (float): Loop current in A.
        z (np.ndarray): Axial positions in m.
        r (np.ndarray): Radial positions in m (>= 0).
        z_loop (float): Axial position of the loop plane.

    Returns:
        Tuple[np.ndarray, np.ndarray]: (B_r, B_z) in T.

    Raises:
        SamplingError: If any point lies on the filament.
    """
    z = np.asarray(z, dtype=float) - z_loop
    r = np.abs(np.asarray(r, dtype=float))
    z, r = np.broadcast_arrays(z, r)
    alpha2 = (r_c - r) ** 2 + z ** 2
    if np.any(alpha2 <= (1e-12 * r_c) ** 2):
        raise SamplingError("Loop field evaluated on the filament")
    beta2 = (r_c + r) ** 2 + z ** 2
    beta = np.sqrt(beta2)
    m = 4.0 * r_c * r / beta2
    k_int = ellipk(m)
    e_int = ellipe(m)
    c = MU0 * current / (2.0 * math.pi)
    rho2 = r ** 2 + z ** 2
    b_z = c / beta * (k_int + (r_c ** 2 - rho2) / alpha2 * e_int)
    b_r = np.zeros_like(b_z)
    off_axis = r > 0
    b_r[off_axis] = (c * z[off_axis] / (r[off_axis] * beta[off_axis])
                     * (-k_int[off_axis] + (r_c ** 2 + rho2[off_axis]) / alpha2[off_axis] * e_int[off_axis]))
    return b_r, b_z


def loop_field_filament(r_c: float, current: float, z: np.ndarray, r: np.ndarray,
                        z_loop: float = 0.0, n_segments: int = 10000) -> Tuple[np.ndarray, np.ndarray]:
    """
    Loop field by midpoint Biot-Savart quadrature over the filament.

    The integrand is smooth and periodic in the loop angle, so the midpoint
    rule converges geometrically away from the filament.

    Args:
        r_c (float): Loop radius in m.
        current (float): Loop current in A.
        z (np.ndarray): Axial positions in m.
        r (np.ndarray): Radial positions in m, taken in the x-z plane.
        z_loop (float): Axial position of the loop plane.
        n_segments (int): Quadrature intervals.

    Returns:
        Tuple[np.ndarray, np.ndarray]: (B_r, B_z) in T.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float)) - z_loop
    r = np.atleast_1d(np.asarray(r, dtype=float))
    z, r = np.broadcast_arrays(z, r)
    theta = 2.0 * math.pi * (np.arange(n_segments) + 0.5) / n_segments
    src = np.stack([r_c * np.cos(theta), r_c * np.sin(theta), np.zeros(n_segments)], axis=1)
    dl = (2.0 * math.pi * r_c / n_segments) * np.stack(
        [-np.sin(theta), np.cos(theta), np.zeros(n_segments)], axis=1)
    pts = np.stack([r.ravel(), np.zeros(r.size), z.ravel()], axis=1)
    sep = pts[:, None, :] - src[None, :, :]
    dist3 = np.linalg.norm(sep, axis=2) ** 3
    if np.any(dist3 == 0):
        raise SamplingError("Loop field evaluated on the filament")
    db = np.cross(dl[None, :, :], sep) / dist3[:, :, None]
    field = MU0 * current / (4.0 * math.pi) * db.sum(axis=1)
    return field[:, 0].reshape(r.shape), field[:, 2].reshape(r.shape)


def loop_field_cartesian(r_c: float, current: float, points: np.ndarray,
                         z_loop: float = 0.0) -> np.ndarray:
    """
    Loop field at Cartesian points.

    Args:
        r_c (float): Loop radius in m.
        current (float): Loop current in A.
        points (np.ndarray): (P, 3) positions (x, y, z).
        z_loop (float): Axial position of the loop plane.

    Returns:
        np.ndarray: (P, 3) flux density (B_x, B_y, B_z).
    """
    points = np.atleast_2d(points)
    rho = np.hypot(points[:, 0], points[:, 1])
    b_r, b_z = loop_field(r_c, current, points[:, 2], rho, z_loop)
    cos_t = np.divide(points[:, 0], rho, out=np.zeros_like(rho), where=rho > 0)
    sin_t = np.divide(points[:, 1], rho, out=np.zeros_like(rho), where=rho > 0)
    return np.stack([b_r * cos_t, b_r * sin_t, b_z], axis=1)


def patch_field(amplitude: float, z_lo: float, z_hi: float, z: np.ndarray) -> np.ndarray:
    """
    Piecewise-constant applied field: `amplitude` on [z_lo, z_hi], zero elsewhere.

    Args:
        amplitude (float): Field value inside the patch in T.
        z_lo (float): Patch start.
        z_hi (float): Patch end.
        z (np.ndarray): Positions.

    Returns:
        np.ndarray: Field values.
    """
    z = np.asarray(z, dtype=float)
    return np.where((z >= z_lo) & (z <= z_hi), amplitude, 0.0)
