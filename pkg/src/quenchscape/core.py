"""Dense state-vector kernel.

States are 1-D complex arrays of length ``2**n``; operators are dense
``(2**n, 2**n)`` arrays. Qubit 1 is the most significant bit of the basis
index, so ``|0...0>`` is index 0 and ``|10>`` is index 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

HERMITIAN_ATOL = 1e-12
NORM_ATOL = 1e-10


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


def n_qubits_of(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or (1 << n) != dim:
        raise ValidationError(f"dimension {dim} is not a power of two")
    return n


def as_state(amplitudes, *, check_norm: bool = True) -> np.ndarray:
    """Validate and return a state vector as a complex128 array."""
    psi = np.asarray(amplitudes, dtype=np.complex128)
    if psi.ndim != 1:
        raise ValidationError(f"state must be 1-D, got shape {psi.shape}")
    n_qubits_of(psi.shape[0])
    if check_norm:
        norm = np.linalg.norm(psi)
        if abs(norm - 1.0) > NORM_ATOL:
            raise ValidationError(f"state is not normalized (norm={norm!r})")
    return psi


def basis_state(n: int, index: int = 0) -> np.ndarray:
    psi = np.zeros(1 << n, dtype=np.complex128)
    psi[index] = 1.0
    return psi


def haar_random_states(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` Haar-random pure states as rows of a ``(count, 2**n)`` array."""
    shape = (count, 1 << n)
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _check_hermitian(H: np.ndarray, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValidationError(f"operator must be square, got shape {H.shape}")
    scale = max(1.0, float(np.abs(H).max(initial=0.0)))
    if not np.allclose(H, H.conj().T, rtol=0.0, atol=atol * scale):
        raise ValidationError("operator is not Hermitian")
    return H


@dataclass(frozen=True)
class Spectrum:
    """Eigendecomposition ``H = V diag(eigenvalues) V^dagger``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.conj().T


def diagonalize(H) -> Spectrum:
    """Full Hermitian eigendecomposition with ascending eigenvalues.

    Real symmetric input stays real, which roughly halves the LAPACK cost
    for the Ising Hamiltonians used throughout.
    """
    H = _check_hermitian(H)
    if np.iscomplexobj(H) and not np.any(H.imag):
        H = H.real
    w, v = np.linalg.eigh(H)
    w.setflags(write=False)
    v.setflags(write=False)
    return Spectrum(w, v)


def evolve(spec: Spectrum, t: float, psi) -> np.ndarray:
    """Apply ``exp(-i H t)`` to ``psi`` through the spectral decomposition."""
    psi = np.asarray(psi, dtype=np.complex128)
    if psi.shape[-1] != spec.dim:
        raise ValidationError(f"state dim {psi.shape[-1]} != operator dim {spec.dim}")
    if not np.isfinite(t):
        raise ValidationError("evolution time must be finite")
    V = spec.eigenvectors
    coeffs = V.conj().T @ psi
    coeffs *= np.exp(-1j * t * spec.eigenvalues)
    return V @ coeffs


def expectation(psi, O) -> float:
    """Real expectation value <psi|O|psi> of a Hermitian operator."""
    psi = np.asarray(psi, dtype=np.complex128)
    O = np.asarray(O)
    if O.shape != (psi.shape[0], psi.shape[0]):
        raise ValidationError(f"operator shape {O.shape} does not match state dim {psi.shape[0]}")
    value = np.vdot(psi, O @ psi)
    scale = max(1.0, abs(value.real))
    if abs(value.imag) > 1e-10 * scale:
        raise ValidationError(f"expectation has imaginary part {value.imag!r}; operator not Hermitian?")
    return float(value.real)


def diagonal_expectation(psi, diag) -> float:
    """Expectation of a diagonal operator given only its diagonal."""
    return float(np.dot(np.abs(psi) ** 2, np.asarray(diag).real))


def fidelity(psi, phi) -> float:
    psi = np.asarray(psi)
    phi = np.asarray(phi)
    if psi.shape != phi.shape:
        raise ValidationError(f"shape mismatch {psi.shape} vs {phi.shape}")
    return float(min(1.0, abs(np.vdot(phi, psi)) ** 2))


@dataclass(frozen=True)
class DensityMatrix:
    entries: np.ndarray

    def __post_init__(self):
        rho = self.entries
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValidationError(f"density matrix must be square, got {rho.shape}")
        if not np.allclose(rho, rho.conj().T, rtol=0.0, atol=1e-12):
            raise ValidationError("density matrix is not Hermitian")
        tr = np.trace(rho).real
        if abs(tr - 1.0) > NORM_ATOL:
            raise ValidationError(f"density matrix trace is {tr!r}")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)


def _subsystem_axes(n: int, subsystem: Iterable[int]) -> list[int]:
    keep = sorted(set(int(q) for q in subsystem))
    if not keep:
        raise ValidationError("subsystem must be non-empty")
    if len(keep) >= n:
        raise ValidationError("subsystem must be a proper subset of the qubits")
    if keep[0] < 1 or keep[-1] > n:
        raise ValidationError(f"qubit indices must lie in 1..{n}")
    return [q - 1 for q in keep]


def reduced_density(psi, subsystem: Iterable[int]) -> DensityMatrix:
    """Partial trace onto ``subsystem`` (1-based qubit labels)."""
    psi = np.asarray(psi, dtype=np.complex128)
    n = n_qubits_of(psi.shape[0])
    keep = _subsystem_axes(n, subsystem)
    rest = [q for q in range(n) if q not in keep]
    tensor = psi.reshape((2,) * n).transpose(keep + rest)
    mat = tensor.reshape(1 << len(keep), -1)
    rho = mat @ mat.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho)


def schmidt_values(psi, cut: int) -> np.ndarray:
    """Squared Schmidt coefficients across the cut after the first ``cut`` qubits."""
    psi = np.asarray(psi, dtype=np.complex128)
    n = n_qubits_of(psi.shape[0])
    if not 0 < cut < n:
        raise ValidationError(f"cut must lie strictly between 0 and {n}")
    s = np.linalg.svd(psi.reshape(1 << cut, -1), compute_uv=False)
    return s**2


def entropy_from_probs(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0.0]
    return float(-np.sum(p * np.log(p)))


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """Entropy in nats, clipping round-off negatives to zero."""
    lam = np.clip(rho.eigenvalues(), 0.0, None)
    return entropy_from_probs(lam)


def half_chain_entropy(psi, cut: int | None = None) -> float:
    """Entanglement entropy (nats) between the first ``cut`` qubits and the rest."""
    n = n_qubits_of(np.shape(psi)[0])
    if cut is None:
        cut = n // 2
    return entropy_from_probs(schmidt_values(psi, cut))
