"""Fourth-order blind source separation (JADE).

Estimates cross-cumulants of whitened data, extracts the dominant
eigenmatrices of the cumulant tensor, and finds the unitary separator
that jointly diagonalizes them by complex Jacobi rotations.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import ingest
from .errors import ParameterError
from .modelsep import UnmixingMatrix
from .scenario import SlowTimeSeries

JACOBI_THRESHOLD = 1e-8
MAX_SWEEPS = 100
WHITENESS_TOL = 0.05


@dataclass
class CumulantSet:
    """Reduced cumulant matrices and the eigenmatrix basis they came from."""

    matrices: list[np.ndarray]  # eigenvalue-scaled, Hermitian
    basis: list[np.ndarray]  # unit-norm eigenmatrices of the cumulant tensor
    eigenvalues: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        for m in self.matrices:
            if np.abs(m - m.conj().T).max() > 1e-10 * max(np.abs(m).max(), 1.0):
                raise ParameterError("cumulant matrices must be Hermitian")


@dataclass
class JointDiagResult:
    """Unitary joint diagonalizer with convergence diagnostics."""

    u: np.ndarray  # unitary, columns are the recovered directions
    off_diag_norm: float
    sweeps: int
    converged: bool = True
    objective_trace: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        n = self.u.shape[0]
        if np.abs(self.u.conj().T @ self.u - np.eye(n)).max() > 1e-10:
            raise ParameterError("diagonalizer is not unitary")


def _samples(z) -> np.ndarray:
    return z.samples if isinstance(z, SlowTimeSeries) else np.atleast_2d(np.asarray(z, dtype=complex))


def _check_whitened(samples: np.ndarray) -> None:
    n = samples.shape[1]
    r = samples @ samples.conj().T / n
    if np.abs(r - np.eye(r.shape[0])).max() > WHITENESS_TOL:
        warnings.warn(
            "input does not look whitened (covariance deviates from identity)",
            stacklevel=3,
        )


def fourth_cumulant(z, i: int, j: int, k: int, l: int) -> complex:
    """Sample fourth cross-cumulant cum(z_i, z_j*, z_k, z_l*).

    Expectations are replaced by time averages; the second and fourth
    arguments are conjugated, the standard convention for complex data.
    For whitened independent sources the cumulant vanishes unless all four
    indices coincide.
    """
    samples = _samples(z)
    _check_whitened(samples)
    n = samples.shape[1]
    zi, zj, zk, zl = samples[i], samples[j], samples[k], samples[l]
    m4 = np.mean(zi * zj.conj() * zk * zl.conj())
    r_ij = np.mean(zi * zj.conj())
    r_kl = np.mean(zk * zl.conj())
    r_il = np.mean(zi * zl.conj())
    r_kj = np.mean(zk * zj.conj())
    p_ik = np.mean(zi * zk)
    p_jl = np.mean(zj * zl)
    return complex(m4 - r_ij * r_kl - r_il * r_kj - p_ik * np.conj(p_jl))


def _cumulant_tensor(samples: np.ndarray) -> np.ndarray:
    n_samples = samples.shape[1]
    r = samples @ samples.conj().T / n_samples
    p = samples @ samples.T / n_samples
    t4 = np.einsum(
        "it,jt,kt,lt->ijkl", samples, samples.conj(), samples, samples.conj(),
        optimize=True,
    ) / n_samples
    t4 -= np.einsum("ij,kl->ijkl", r, r)
    t4 -= np.einsum("il,kj->ijkl", r, r)
    t4 -= np.einsum("ik,jl->ijkl", p, p.conj())
    return t4


def cumulant_matrices(z, count: int) -> CumulantSet:
    """Dominant eigenmatrices of the cumulant tensor, scaled by eigenvalue.

    The tensor is unfolded into a Hermitian m^2 x m^2 matrix whose
    eigenvectors, reshaped to m x m, are the eigenmatrices; the ``count``
    largest-|eigenvalue| ones are returned. For data that follow the
    unitary mixing model they are simultaneously diagonalizable.
    """
    samples = _samples(z)
    m = samples.shape[0]
    if not 1 <= count <= m * m:
        raise ParameterError(f"count must be in [1, {m * m}]")
    _check_whitened(samples)
    t4 = _cumulant_tensor(samples)
    # big[(i,j),(k,l)] = cum(z_i, z_j*, z_l, z_k*) is Hermitian
    big = t4.transpose(0, 1, 3, 2).reshape(m * m, m * m)
    big = 0.5 * (big + big.conj().T)
    eigvals, eigvecs = np.linalg.eigh(big)
    order = np.argsort(-np.abs(eigvals))[:count]
    matrices, basis = [], []
    for idx in order:
        e = eigvecs[:, idx].reshape(m, m)
        # an eigenmatrix is Hermitian up to a unit phasor; rotate it back
        phase = np.trace(e @ e)
        if abs(phase) > 1e-12:
            e = e * np.exp(-0.5j * np.angle(phase))
        e = 0.5 * (e + e.conj().T)
        norm = np.linalg.norm(e)
        if norm > 0:
            e = e / norm
        basis.append(e)
        matrices.append(eigvals[idx] * e)
    return CumulantSet(matrices=matrices, basis=basis, eigenvalues=eigvals[order])


def joint_diagonalize(cumulants) -> JointDiagResult:
    """Jointly diagonalize a set of matrices by complex Jacobi rotations.

    Sweeps over all index pairs applying the closed-form Givens rotation
    that maximizes the summed squared diagonal magnitudes. Stops when the
    largest rotation sine in a sweep falls below 1e-8 or after 100 sweeps
    (a warning flag is set in the latter case).
    """
    mats = cumulants.matrices if isinstance(cumulants, CumulantSet) else list(cumulants)
    if len(mats) == 0:
        raise ParameterError("need at least one matrix")
    a = np.stack([np.asarray(m, dtype=complex) for m in mats])
    n = a.shape[1]
    if a.shape[1] != a.shape[2]:
        raise ParameterError("matrices must be square")
    u = np.eye(n, dtype=complex)
    trace = [float(np.sum(np.abs(np.diagonal(a, axis1=1, axis2=2)) ** 2))]
    sweeps = 0
    converged = n < 2
    while not converged and sweeps < MAX_SWEEPS:
        largest = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                g = np.stack(
                    [
                        a[:, p, p] - a[:, q, q],
                        a[:, p, q] + a[:, q, p],
                        1j * (a[:, q, p] - a[:, p, q]),
                    ]
                )
                gram = np.real(g @ g.conj().T)
                _, vecs = np.linalg.eigh(gram)
                axis = vecs[:, -1]
                if axis[0] < 0:
                    axis = -axis
                c = np.sqrt(0.5 + axis[0] / 2.0)
                s = 0.5 * (axis[1] - 1j * axis[2]) / c
                largest = max(largest, abs(s))
                if abs(s) > JACOBI_THRESHOLD:
                    rot = np.array([[c, -np.conj(s)], [s, c]])
                    a[:, [p, q], :] = np.einsum(
                        "ij,kjl->kil", rot.conj().T, a[:, [p, q], :]
                    )
                    a[:, :, [p, q]] = a[:, :, [p, q]] @ rot
                    u[:, [p, q]] = u[:, [p, q]] @ rot
        sweeps += 1
        trace.append(float(np.sum(np.abs(np.diagonal(a, axis1=1, axis2=2)) ** 2)))
        converged = largest <= JACOBI_THRESHOLD
    if not converged:
        warnings.warn("joint diagonalization did not converge in 100 sweeps", stacklevel=2)
    off = a.copy()
    for m in off:
        np.fill_diagonal(m, 0.0)
    return JointDiagResult(
        u=u,
        off_diag_norm=float(np.linalg.norm(off)),
        sweeps=sweeps,
        converged=converged,
        objective_trace=np.array(trace),
    )


def jade_separate(
    x: SlowTimeSeries, n_sources: int
) -> tuple[UnmixingMatrix, SlowTimeSeries]:
    """Separate ``n_sources`` components from a DC-removed array signal.

    Whitens onto the dominant ``n_sources``-dimensional subspace, jointly
    diagonalizes the dominant cumulant eigenmatrices, and composes the
    unitary with the whitening transform: W = U^H V, s_hat = W x.
    """
    if n_sources < 1 or n_sources > x.n_channels:
        raise ParameterError("n_sources must be in [1, n_channels]")
    if x.n_samples < 10 * x.n_channels**2:
        warnings.warn("few samples for fourth-order statistics", stacklevel=2)
    z, v = ingest.whiten(x, n_components=n_sources)
    cumulants = cumulant_matrices(z, count=n_sources)
    diag = joint_diagonalize(cumulants)
    w = diag.u.conj().T @ v
    s_hat = w @ x.samples
    return UnmixingMatrix(w), SlowTimeSeries(s_hat, rate=x.rate, start_time=x.start_time)
