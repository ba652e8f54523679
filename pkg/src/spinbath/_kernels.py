"""Hot numeric kernels: Lindblad right-hand side and fixed-step RK4 chunks.

Both kernels are compiled with ``numba.njit(cache=True)`` when numba is
importable and the environment variable ``SPINBATH_DISABLE_NUMBA`` is not
set to 1/true/yes; otherwise the same bodies run as plain numpy.  The
undecorated twins ``lindblad_rhs_numpy`` / ``rk4_chunk_numpy`` are always
available so tests and benchmarks can compare the two paths in-process.

All array arguments must be C-contiguous complex128: ``rho`` (n, n),
``jumps``/``jdags`` stacked (k, n, n), ``ksum`` = sum_k A_k^dag A_k (n, n),
``ham`` (n, n, pass zeros with has_ham=False when absent).
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "HAVE_NUMBA",
    "USING_NUMBA",
    "lindblad_rhs",
    "lindblad_rhs_numpy",
    "rk4_chunk",
    "rk4_chunk_numpy",
]

_DISABLED = os.environ.get("SPINBATH_DISABLE_NUMBA", "").strip().lower() in (
    "1",
    "true",
    "yes",
)

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    HAVE_NUMBA = False

USING_NUMBA = HAVE_NUMBA and not _DISABLED


def _lindblad_rhs(rho, jumps, jdags, ksum, ham, has_ham):
    # drho/dt = -i[H, rho] + sum_k A_k rho A_k^dag - (1/2){ksum, rho}
    out = -0.5 * (ksum @ rho + rho @ ksum)
    for k in range(jumps.shape[0]):
        out += jumps[k] @ rho @ jdags[k]
    if has_ham:
        out += -1j * (ham @ rho - rho @ ham)
    return out


def _rk4_chunk(rho, jumps, jdags, ksum, ham, has_ham, h, nsteps):
    # Classic RK4 with per-step Hermitization and trace renormalization.
    def rhs(r):
        out = -0.5 * (ksum @ r + r @ ksum)
        for k in range(jumps.shape[0]):
            out += jumps[k] @ r @ jdags[k]
        if has_ham:
            out += -1j * (ham @ r - r @ ham)
        return out

    n = rho.shape[0]
    for _ in range(nsteps):
        k1 = rhs(rho)
        k2 = rhs(rho + (0.5 * h) * k1)
        k3 = rhs(rho + (0.5 * h) * k2)
        k4 = rhs(rho + h * k3)
        rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        tr = 0.0
        for i in range(n):
            tr += rho[i, i].real
        rho = rho / tr
    return rho


lindblad_rhs_numpy = _lindblad_rhs
rk4_chunk_numpy = _rk4_chunk

if USING_NUMBA:
    lindblad_rhs = numba.njit(cache=True)(_lindblad_rhs)
    rk4_chunk = numba.njit(cache=True)(_rk4_chunk)
else:
    lindblad_rhs = _lindblad_rhs
    rk4_chunk = _rk4_chunk
