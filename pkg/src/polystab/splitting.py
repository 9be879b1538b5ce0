"""Splittings of finite-dimensional contractions.

* ``foguel_split``: unitary part ``H_u`` and completely non-unitary part ``H_0``.
* ``jdlg_split``: reversible part ``H_r`` (span of unimodular eigenvectors)
  and stable part ``H_s``.
* ``three_way_split``: ``H_r``, ``H_us`` and ``H_0``.

Structured countable-dimensional operators (shifts, diagonal unitaries) get
declared splits with no numerical content; their classification is a known
fact and is corroborated empirically elsewhere.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import numkit
from .operators import (BilateralShift, Dense, DiagonalUnitary, DirectSum,
                        Operator, UnilateralShift)
from .orbitlab import cesaro

DEFAULT_TOL = 1e-8
EVIDENCE_NOTE = (
    "stable-part membership is supported by finite-horizon Cesaro evidence; "
    "no finite computation certifies a weak accumulation point"
)


class SplitWarning(UserWarning):
    """Eigenvalues sit close to the unimodularity threshold."""


@dataclass(eq=False)
class SplitResult:
    """Labelled orthonormal bases (columns) of the parts of a splitting.

    ``descriptive`` results carry no bases: ``dims`` holds ``"all"`` or 0 and
    ``notes`` states the known classification.
    """

    parts: dict
    tol: float
    ambient_dim: object
    descriptive: bool = False
    warnings: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    evidence: dict = field(default_factory=dict)

    @property
    def dims(self) -> dict:
        if self.descriptive:
            return dict(self.parts)
        return {k: int(v.shape[1]) for k, v in self.parts.items()}

    def basis(self, label: str) -> np.ndarray:
        return self.parts[label]

    def projector(self, label: str) -> np.ndarray:
        b = self.parts[label]
        return b @ numkit.adjoint(b)

    def diagnostics(self, t: np.ndarray) -> dict:
        """Orthogonality and invariance residuals with respect to ``t``."""
        if self.descriptive:
            return {}
        allb = np.hstack(list(self.parts.values()))
        k = allb.shape[1]
        ortho = float(np.abs(numkit.adjoint(allb) @ allb - np.eye(k)).max()) if k else 0.0
        inv = {}
        for label, b in self.parts.items():
            if b.shape[1] == 0:
                inv[label] = 0.0
                continue
            tb = t @ b
            inv[label] = float(np.linalg.norm(tb - b @ (numkit.adjoint(b) @ tb), axis=0).max())
        return {"orthonormality": ortho, "invariance": inv, "dim_total": k}

    def to_json(self, t: np.ndarray | None = None) -> str:
        doc = {
            "schema": "polystab.split/1",
            "tol": self.tol,
            "ambient_dim": self.ambient_dim,
            "descriptive": self.descriptive,
            "dims": self.dims,
            "warnings": self.warnings,
            "notes": self.notes,
            "evidence": self.evidence,
        }
        if not self.descriptive:
            doc["bases"] = {
                k: [[[z.real, z.imag] for z in row] for row in v] for k, v in self.parts.items()
            }
            if t is not None:
                doc["diagnostics"] = self.diagnostics(t)
        return json.dumps(doc, sort_keys=True)


def _matrix(t) -> np.ndarray:
    if isinstance(t, Dense):
        return t.matrix
    if isinstance(t, Operator):
        raise TypeError(f"numerical splitting needs a dense operator, got {t.kind}")
    return numkit.as_matrix(t)


def _check_contraction(m: np.ndarray, tol: float) -> None:
    if m.shape[0] != m.shape[1]:
        raise ValueError("splitting needs a square matrix")
    if m.shape[0] > numkit.MAX_EIGEN_DIM:
        raise ValueError(f"dimension capped at {numkit.MAX_EIGEN_DIM}")
    nrm = numkit.op_norm(m)
    if nrm > 1.0 + max(tol, 1e-9):
        raise ValueError(f"operator norm {nrm:.6g} exceeds 1: not a contraction")


def _complement(basis: np.ndarray, d: int) -> np.ndarray:
    if basis.shape[1] == 0:
        return np.eye(d, dtype=complex)
    if basis.shape[1] == d:
        return np.zeros((d, 0), dtype=complex)
    q, _ = np.linalg.qr(np.hstack([basis, np.eye(d, dtype=complex)]))
    # columns beyond the basis span the orthogonal complement
    return q[:, basis.shape[1]:d]


def unitary_part(m: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of ``{h : ||T^n h|| = ||h|| = ||T*^n h||, n >= 1}``.

    The candidate space is cut down power by power (``ker(T*^n T^n - I)`` and
    ``ker(T^n T*^n - I)``, by stacking) and the loop stops once the space is
    invariant under ``T`` and ``T*`` with ``T`` unitary on it; at most
    ``d`` powers are needed.
    """
    d = m.shape[0]
    ident = np.eye(d, dtype=complex)
    basis = ident.copy()
    tn = ident.copy()
    for _ in range(d):
        if basis.shape[1] == 0:
            break
        tn = m @ tn
        stacked = np.vstack([
            (numkit.adjoint(tn) @ tn - ident) @ basis,
            (tn @ numkit.adjoint(tn) - ident) @ basis,
        ])
        coords = numkit.kernel_basis(stacked, tol, atol=tol)
        if not coords:
            basis = np.zeros((d, 0), dtype=complex)
            break
        basis = numkit.orthonormalize([basis @ c for c in coords])
        if _acts_unitarily(m, basis, tol):
            break
    return basis


def _acts_unitarily(m: np.ndarray, basis: np.ndarray, tol: float) -> bool:
    if basis.shape[1] == 0:
        return True
    proj = basis @ numkit.adjoint(basis)
    slack = 10.0 * tol
    tb, sb = m @ basis, numkit.adjoint(m) @ basis
    invariant = (np.linalg.norm(tb - proj @ tb, 2) <= slack
                 and np.linalg.norm(sb - proj @ sb, 2) <= slack)
    if not invariant:
        return False
    comp = numkit.adjoint(basis) @ tb
    k = comp.shape[0]
    return bool(np.linalg.norm(numkit.adjoint(comp) @ comp - np.eye(k), 2) <= slack)


def foguel_split(t, tol: float = DEFAULT_TOL) -> SplitResult:
    """Unitary / completely non-unitary splitting ``H = H_u + H_0``."""
    m = _matrix(t)
    _check_contraction(m, tol)
    d = m.shape[0]
    hu = unitary_part(m, tol)
    return SplitResult({"H_u": hu, "H_0": _complement(hu, d)}, tol, d)


def _unimodular_eigenspace(m: np.ndarray, tol: float) -> tuple[np.ndarray, list, np.ndarray]:
    pairs = numkit.eigen(m)
    lams = np.array([lam for lam, _ in pairs])
    mods = np.abs(lams)
    flags = []
    near = (mods >= 1.0 - 100.0 * tol) & (mods <= 1.0 - 0.01 * tol)
    if np.any(near):
        flags.append(
            f"{int(near.sum())} eigenvalue(s) with modulus within 100*tol of the "
            "unimodularity threshold; the split is tolerance-sensitive"
        )
    uni = lams[mods >= 1.0 - tol]
    if uni.size == 0:
        return np.zeros((m.shape[0], 0), dtype=complex), flags, lams
    # cluster equal eigenvalues and take each eigenspace as a kernel
    clusters: list[list[complex]] = []
    for lam in uni:
        for cl in clusters:
            if abs(cl[0] - lam) <= max(1e3 * tol, 1e-7):
                cl.append(lam)
                break
        else:
            clusters.append([lam])
    vecs = []
    ident = np.eye(m.shape[0])
    for cl in clusters:
        centre = complex(np.mean(cl))
        kern = numkit.kernel_basis(m - centre * ident, numkit.DEFAULT_KERNEL_TOL,
                                   atol=numkit.DEFAULT_KERNEL_TOL)
        if len(kern) != len(cl):
            flags.append(
                f"eigenvalue {centre:.6g} has algebraic multiplicity {len(cl)} but "
                f"numerical eigenspace dimension {len(kern)}"
            )
        vecs.extend(kern)
    return numkit.orthonormalize(vecs), flags, lams


def _stability_evidence(m: np.ndarray, hs: np.ndarray, horizon: int, samples: int,
                        seed: int) -> dict:
    if hs.shape[1] == 0 or samples == 0:
        return {"horizon": horizon, "cesaro": [], "note": EVIDENCE_NOTE}
    rng = np.random.default_rng(seed)
    d = m.shape[0]
    out = []
    for _ in range(samples):
        c = rng.standard_normal(hs.shape[1]) + 1j * rng.standard_normal(hs.shape[1])
        h = hs @ c
        h /= np.linalg.norm(h)
        g = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        g /= np.linalg.norm(g)
        y = np.empty(horizon)
        v = h
        for n in range(horizon):
            v = m @ v
            y[n] = abs(np.vdot(g, v))
        out.append(float(cesaro(y)[-1]))
    return {"horizon": horizon, "cesaro": out, "note": EVIDENCE_NOTE}


def jdlg_split(t, tol: float = DEFAULT_TOL, horizon: int = 2000, samples: int = 5,
               seed: int = 0) -> SplitResult:
    """Reversible / stable splitting ``H = H_r + H_s``.

    ``H_r`` is spanned by eigenvectors with ``|lambda| >= 1 - tol``. For
    ``samples`` random unit vectors ``h`` in ``H_s`` and random unit ``g`` the
    Cesaro mean of ``|<g, T^n h>|`` at ``horizon`` is recorded as evidence.
    """
    m = _matrix(t)
    _check_contraction(m, tol)
    d = m.shape[0]
    hr, flags, _ = _unimodular_eigenspace(m, tol)
    hs = _complement(hr, d)
    for f in flags:
        warnings.warn(f, SplitWarning, stacklevel=2)
    res = SplitResult({"H_r": hr, "H_s": hs}, tol, d, warnings=flags, notes=[EVIDENCE_NOTE])
    res.evidence = _stability_evidence(m, hs, horizon, samples, seed)
    return res


DESCRIPTIVE = {
    "bilateral_shift": (
        {"H_r": 0, "H_us": "all", "H_0": 0},
        "unitary with no eigenvalues on l2(Z): the whole space is unitary and almost weakly stable",
    ),
    "unilateral_shift": (
        {"H_r": 0, "H_us": 0, "H_0": "all"},
        "completely non-unitary isometry: T and T* are weakly stable on the whole space",
    ),
    "diag_unitary": (
        {"H_r": "all", "H_us": 0, "H_0": 0},
        "diagonal unitary: the standard basis consists of unimodular eigenvectors",
    ),
}


def _descriptive(op: Operator, tol: float) -> SplitResult:
    if isinstance(op, (BilateralShift, UnilateralShift)) and abs(op.weight) != 1:
        if abs(op.weight) < 1:
            return SplitResult({"H_r": 0, "H_us": 0, "H_0": "all"}, tol, op.dim, descriptive=True,
                               notes=["shift with weight of modulus < 1 is a strict contraction"])
        raise ValueError("shift weight of modulus > 1 is not a contraction")
    dims, note = DESCRIPTIVE[op.kind]
    return SplitResult(dict(dims), tol, op.dim, descriptive=True, notes=[note])


def three_way_split(t, tol: float = DEFAULT_TOL) -> SplitResult:
    """Splitting ``H = H_r + H_us + H_0``.

    For dense operators ``H_us`` is computed and is always trivial: a unitary
    on a finite-dimensional space has an eigenbasis. Shift and diagonal
    unitary operators receive the declared split of their kind.
    """
    if isinstance(t, (BilateralShift, UnilateralShift, DiagonalUnitary)):
        return _descriptive(t, tol)
    if isinstance(t, DirectSum):
        blocks = [three_way_split(b, tol) for b in t.blocks]
        return SplitResult({"blocks": [b.dims for b in blocks]}, tol, t.dim, descriptive=True,
                           notes=["direct sum: parts are the direct sums of the block parts"])
    m = _matrix(t)
    _check_contraction(m, tol)
    d = m.shape[0]
    hu = unitary_part(m, tol)
    h0 = _complement(hu, d)
    if hu.shape[1]:
        restricted = numkit.adjoint(hu) @ m @ hu
        coords, flags, _ = _unimodular_eigenspace(restricted, tol)
        hr = hu @ coords if coords.shape[1] else np.zeros((d, 0), dtype=complex)
    else:
        hr, flags = np.zeros((d, 0), dtype=complex), []
    hus_dim = hu.shape[1] - hr.shape[1]
    if hus_dim != 0:
        raise AssertionError(
            f"finite-dimensional unitary part has a {hus_dim}-dimensional eigenvector-free remainder"
        )
    hus = np.zeros((d, 0), dtype=complex)
    return SplitResult({"H_r": hr, "H_us": hus, "H_0": h0}, tol, d, warnings=flags,
                       notes=["H_us is trivial in finite dimensions"])
