"""Seeded generators of test operators with known structure."""

from __future__ import annotations

import numpy as np

from . import numkit


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary (QR of a complex Ginibre matrix, phase-fixed)."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_matrix(d: int, rng: np.random.Generator, rows: int | None = None) -> np.ndarray:
    rows = d if rows is None else rows
    return rng.standard_normal((rows, d)) + 1j * rng.standard_normal((rows, d))


def random_contraction(d: int, rng: np.random.Generator, norm: float = 1.0) -> np.ndarray:
    """Random matrix rescaled to operator norm exactly ``norm``."""
    m = random_matrix(d, rng)
    return m * (norm / np.linalg.norm(m, 2))


def unimodular_diagonal(k: int, rng: np.random.Generator) -> np.ndarray:
    return np.diag(np.exp(2j * np.pi * rng.random(k)))


def block_conjugate(blocks, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """``W (B_1 + ... + B_m) W*`` for a random unitary ``W``; returns it and ``W``."""
    d = sum(b.shape[0] for b in blocks)
    inner = np.zeros((d, d), dtype=complex)
    pos = 0
    for b in blocks:
        k = b.shape[0]
        inner[pos:pos + k, pos:pos + k] = b
        pos += k
    w = random_unitary(d, rng)
    return w @ inner @ numkit.adjoint(w), w


def foguel_case(rng: np.random.Generator, dim_u: int, dim_k: int, k_norm: float = 0.8):
    """``T = W (U + K) W*`` with ``U`` diagonal unimodular and ``||K|| = k_norm``.

    Returns ``(T, basis of W(C^dim_u + 0))``.
    """
    u = unimodular_diagonal(dim_u, rng)
    k = random_contraction(dim_k, rng, k_norm)
    t, w = block_conjugate([u, k], rng)
    return t, w[:, :dim_u]


def nilpotent_jordan(d: int) -> np.ndarray:
    return np.eye(d, k=1, dtype=complex)


def contraction_battery(count: int, seed: int, max_dim: int = 16):
    """Mixed battery of contractions: unitary blocks, strict parts, Jordan blocks."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        d = int(rng.integers(1, max_dim + 1))
        kind = i % 4
        if kind == 0:
            out.append(random_contraction(d, rng, float(rng.uniform(0.3, 1.0))))
        elif kind == 1 and d >= 2:
            du = int(rng.integers(1, d))
            out.append(foguel_case(rng, du, d - du, float(rng.uniform(0.1, 0.9)))[0])
        elif kind == 2:
            out.append(random_unitary(d, rng))
        else:
            out.append(0.9 * nilpotent_jordan(d) if d > 1 else np.array([[0.5 + 0j]]))
    return out
