"""Fourier utilities on the periodic [0, 2pi)^2 chart grid.

All routines act on arrays whose last two axes are the (theta, phi) grid;
any leading axes are treated as a batch.  Grids must have even length so
the Nyquist mode is unambiguous: first derivatives annihilate it (the
trigonometric interpolant of the cosine Nyquist mode has zero derivative
at the nodes).
"""

from __future__ import annotations

import numpy as np


def grid_1d(n):
    """Equispaced nodes on [0, 2pi), endpoint excluded."""
    return 2.0 * np.pi * np.arange(n) / n


def check_even(n, name="grid size"):
    if n < 8 or n % 2 != 0:
        raise ValueError(f"{name} must be an even integer >= 8, got {n}")


def deriv(values, axis):
    """Spectral first derivative along `axis` (period 2pi, Nyquist zeroed)."""
    axis = axis % values.ndim
    n = values.shape[axis]
    k = np.arange(n // 2 + 1, dtype=float)
    k[-1] = 0.0
    shape = [1] * values.ndim
    shape[axis] = n // 2 + 1
    fh = np.fft.rfft(values, axis=axis)
    fh *= 1j * k.reshape(shape)
    return np.fft.irfft(fh, n=n, axis=axis)


def deriv_theta(values):
    return deriv(values, -2)


def deriv_phi(values):
    return deriv(values, -1)


def fourier_wavenumbers(n_theta, n_phi):
    """Integer wavenumber grids (k1, k2) in fft layout, shape (n_theta, n_phi)."""
    k1 = np.fft.fftfreq(n_theta, d=1.0 / n_theta)
    k2 = np.fft.fftfreq(n_phi, d=1.0 / n_phi)
    return np.meshgrid(k1, k2, indexing="ij")


def derivative_wavenumbers(n_theta, n_phi):
    """Wavenumber grids matching `deriv`: the Nyquist entries are zeroed."""
    k1 = np.fft.fftfreq(n_theta, d=1.0 / n_theta)
    k2 = np.fft.fftfreq(n_phi, d=1.0 / n_phi)
    k1[n_theta // 2] = 0.0
    k2[n_phi // 2] = 0.0
    return np.meshgrid(k1, k2, indexing="ij")


def dealias_mask(n_theta, n_phi):
    """Boolean 2/3-rule mask in fft layout (True = keep)."""
    k1, k2 = fourier_wavenumbers(n_theta, n_phi)
    return (np.abs(k1) <= n_theta / 3.0) & (np.abs(k2) <= n_phi / 3.0)


def dealias(values, mask=None):
    """Apply the 2/3-rule truncation to the last two axes."""
    n_theta, n_phi = values.shape[-2:]
    if mask is None:
        mask = dealias_mask(n_theta, n_phi)
    fh = np.fft.fft2(values, axes=(-2, -1))
    fh *= mask
    return np.fft.ifft2(fh, axes=(-2, -1)).real


def _resample_axis(values, m, axis):
    """Trigonometric upsampling n -> m (m >= n) along one axis."""
    axis = axis % values.ndim
    n = values.shape[axis]
    if m == n:
        return values
    if m < n:
        raise ValueError("only upsampling is supported")
    fh = np.fft.fft(values, axis=axis)
    shape = list(values.shape)
    shape[axis] = m
    out = np.zeros(shape, dtype=complex)
    src = np.moveaxis(fh, axis, 0)
    dst = np.moveaxis(out, axis, 0)
    half = n // 2
    dst[:half] = src[:half]
    dst[m - half + 1:] = src[half + 1:]
    # even-n Nyquist coefficient splits between +n/2 and -n/2 in the finer grid
    dst[half] = 0.5 * src[half]
    dst[m - half] = 0.5 * src[half]
    out *= m / n
    return np.fft.ifft(out, axis=axis).real


def resample(values, n_theta, n_phi):
    """Resample the trig interpolant onto a finer even grid."""
    out = _resample_axis(values, n_theta, -2)
    return _resample_axis(out, n_phi, -1)


def real_fourier_scalars(n_theta, n_phi):
    """Nyquist-free real Fourier basis of scalar grid functions.

    Returns an array of shape ((n_theta-1)*(n_phi-1), n_theta, n_phi) whose
    rows are cos/sin(k1*theta + k2*phi) for |k1| <= n_theta/2 - 1,
    0 <= k2 <= n_phi/2 - 1 (one representative per conjugate pair).  The
    Nyquist lines are excluded: the grid cannot distinguish their gradients
    from zero, which would otherwise pollute kernel detection downstream.
    """
    check_even(n_theta)
    check_even(n_phi)
    theta = grid_1d(n_theta)
    phi = grid_1d(n_phi)
    k1_max = n_theta // 2 - 1
    k2_max = n_phi // 2 - 1
    modes = []
    for k2 in range(k2_max + 1):
        k1_range = range(0, k1_max + 1) if k2 == 0 else range(-k1_max, k1_max + 1)
        for k1 in k1_range:
            modes.append((k1, k2))
    count = (n_theta - 1) * (n_phi - 1)
    out = np.empty((count, n_theta, n_phi))
    row = 0
    for k1, k2 in modes:
        phase = np.add.outer(k1 * theta, k2 * phi)
        out[row] = np.cos(phase)
        row += 1
        if (k1, k2) != (0, 0):
            out[row] = np.sin(phase)
            row += 1
    assert row == count
    return out
