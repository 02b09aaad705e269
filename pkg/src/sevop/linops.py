"""Dense stand-ins for sectorial operators.

A genuinely unbounded generator is represented, after discretization, by a
square complex matrix.  This module provides resolvents with conditioning
guards, spectral bounds, and a sampling-based certificate that the resolvent
estimate ``||lambda (lambda - A)^{-1}|| <= M`` holds on a sector

    Sigma_theta = { lambda != 0 : |arg lambda| < theta },

which is the property that makes the contour-integral semigroup of
:mod:`sevop.semigroup` well defined.  Certification is empirical: it reports
a supremum over samples, never a proof.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from sevop.errors import EigenFailure, NearSingular

# Beyond this condition estimate a resolvent value is numerically meaningless.
COND_CAP = 1e12
# Default cap on the empirical sector constant for a pass verdict.
M_CAP = 1e6


@dataclass(frozen=True)
class DenseOperator:
    """Square complex matrix standing in for an unbounded generator.

    Entries are stored read-only; all operations return new objects.
    """

    entries: np.ndarray
    label: str = ""

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError(f"entries must be a square matrix, got shape {a.shape}")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def is_real(self) -> bool:
        return bool(np.all(self.entries.imag == 0.0))

    def norm(self) -> float:
        """Operator 2-norm (largest singular value)."""
        return float(np.linalg.norm(self.entries, 2))

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.entries @ np.asarray(x, dtype=complex)

    def __matmul__(self, other: "DenseOperator") -> "DenseOperator":
        return DenseOperator(self.entries @ other.entries, label=f"({self.label}@{other.label})")

    def __add__(self, other: "DenseOperator") -> "DenseOperator":
        return DenseOperator(self.entries + other.entries, label=self.label)

    def __sub__(self, other: "DenseOperator") -> "DenseOperator":
        return DenseOperator(self.entries - other.entries, label=self.label)

    def scaled(self, c: complex) -> "DenseOperator":
        return DenseOperator(c * self.entries, label=self.label)

    def inverse(self) -> "DenseOperator":
        return DenseOperator(np.linalg.inv(self.entries), label=f"{self.label}^-1")

    @staticmethod
    def identity(dim: int) -> "DenseOperator":
        return DenseOperator(np.eye(dim, dtype=complex), label="I")

    @staticmethod
    def diagonal(diag: Sequence[complex], label: str = "") -> "DenseOperator":
        return DenseOperator(np.diag(np.asarray(diag, dtype=complex)), label=label)

    def to_json_dict(self) -> dict:
        return {
            "dim": self.dim,
            "re": self.entries.real.tolist(),
            "im": self.entries.imag.tolist(),
            "label": self.label,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @staticmethod
    def from_json_dict(d: dict) -> "DenseOperator":
        re = np.asarray(d["re"], dtype=float)
        im = np.asarray(d.get("im", np.zeros_like(re)), dtype=float)
        a = re + 1j * im
        if a.shape != (d["dim"], d["dim"]):
            raise ValueError(f"matrix shape {a.shape} does not match dim {d['dim']}")
        return DenseOperator(a, label=d.get("label", ""))

    @staticmethod
    def from_json(s: str) -> "DenseOperator":
        return DenseOperator.from_json_dict(json.loads(s))


@dataclass(frozen=True)
class SectorCertificate:
    """Empirical record of a resolvent estimate on a sampled sector."""

    theta: float
    M_est: float
    sample_count: int
    passed: bool
    worst_lambda: complex
    M_cap: float = M_CAP

    def to_json_dict(self) -> dict:
        return {
            "theta": self.theta,
            "M_est": self.M_est,
            "sample_count": self.sample_count,
            "pass": self.passed,
            "worst_lambda": [self.worst_lambda.real, self.worst_lambda.imag],
            "M_cap": self.M_cap,
        }


def resolvent(A: DenseOperator, lam: complex) -> DenseOperator:
    """Return (lam*I - A)^{-1}.

    Raises NearSingular when the shifted matrix has condition estimate above
    COND_CAP, i.e. lam is numerically indistinguishable from spectrum.
    """
    shifted = lam * np.eye(A.dim) - A.entries
    cond = np.linalg.cond(shifted)
    if not np.isfinite(cond) or cond > COND_CAP:
        raise NearSingular(lam, cond)
    R = np.linalg.solve(shifted, np.eye(A.dim, dtype=complex))
    return DenseOperator(R, label=f"R({lam:.3g};{A.label})")


def resolvent_stack(A: DenseOperator, lams: np.ndarray) -> np.ndarray:
    """(K, n, n) stack of resolvents (lam_k*I - A)^{-1}; no conditioning guard.

    Vectorized workhorse for quadrature; callers that need the guard use
    :func:`resolvent`.
    """
    lams = np.asarray(lams, dtype=complex).ravel()
    n = A.dim
    shifted = lams[:, None, None] * np.eye(n) - A.entries[None, :, :]
    return np.linalg.solve(shifted, np.broadcast_to(np.eye(n, dtype=complex), (lams.size, n, n)))


def spectral_bound(A: DenseOperator) -> float:
    """max Re(lambda) over the spectrum; a negative value -omega certifies
    exponential decay of e^{tA} at rate omega at matrix scale."""
    try:
        ev = np.linalg.eigvals(A.entries)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK rarely fails at this scale
        raise EigenFailure(str(exc)) from exc
    return float(ev.real.max())


def certify_sectorial(
    A: DenseOperator,
    theta: float,
    radii: Sequence[float] | None = None,
    rays: int = 33,
    M_cap: float = M_CAP,
) -> SectorCertificate:
    """Sample ||lambda (lambda - A)^{-1}|| over the sector of half-angle theta.

    Samples lambda = r e^{i phi} for r in `radii` (default: 20 points per
    decade, logarithmic over [1e-3, 1e3]) and `rays` angles with |phi| <=
    theta.  The certificate passes iff every sampled resolvent solve stays
    well conditioned and the empirical supremum M_est is below `M_cap`.
    Analyticity of the associated semigroup additionally requires
    theta > pi/2, which is part of the pass condition.
    """
    if not 0.0 < theta < np.pi:
        raise ValueError(f"theta must lie in (0, pi), got {theta}")
    if radii is None:
        radii = np.logspace(-3.0, 3.0, 121)
    radii = np.asarray(radii, dtype=float)
    if radii.size == 0:
        raise ValueError("radii must be nonempty")
    phis = np.linspace(-theta, theta, rays)
    lam = (radii[:, None] * np.exp(1j * phis[None, :])).ravel()

    M_est = 0.0
    worst = complex(lam[0])
    ok = True
    n = A.dim
    eye = np.eye(n)
    shifted = lam[:, None, None] * eye - A.entries[None, :, :]
    # Guard: a sample on top of an eigenvalue makes the solve meaningless.
    conds = np.linalg.cond(shifted)
    bad = ~np.isfinite(conds) | (conds > COND_CAP)
    if bad.any():
        ok = False
        worst = complex(lam[np.argmax(np.where(np.isfinite(conds), conds, np.inf))])
    good = ~bad
    if good.any():
        R = np.linalg.solve(shifted[good], np.broadcast_to(eye.astype(complex), (int(good.sum()), n, n)))
        norms = np.abs(lam[good]) * np.linalg.norm(R, ord=2, axis=(1, 2))
        k = int(np.argmax(norms))
        M_est = float(norms[k])
        if ok:
            worst = complex(lam[good][k])
    passed = ok and np.isfinite(M_est) and M_est <= M_cap and theta > np.pi / 2
    return SectorCertificate(
        theta=float(theta),
        M_est=M_est,
        sample_count=int(lam.size),
        passed=bool(passed),
        worst_lambda=worst,
        M_cap=float(M_cap),
    )


def random_stable_operator(
    rng: np.random.Generator,
    dim: int,
    spectral_interval: tuple[float, float] = (-3.0, -0.2),
    imag_ratio: float = 0.3,
    label: str = "random",
) -> DenseOperator:
    """Random diagonalizable stable matrix with controlled spectral sector.

    Eigenvalues -a +- i*b with a in -spectral_interval and |b| <= imag_ratio*a,
    so the spectrum stays inside |arg(lambda)| >= pi - arctan(imag_ratio);
    the similarity transform is kept moderately conditioned.
    """
    lo, hi = spectral_interval
    re = rng.uniform(lo, hi, size=dim)
    lam = re.astype(complex)
    # pair up complex-conjugate eigenvalues on a real similarity
    i = 0
    blocks = []
    while i < dim:
        if i + 1 < dim and rng.random() < 0.5:
            a = -re[i]
            b = rng.uniform(0.0, imag_ratio * a)
            blocks.append(np.array([[-a, b], [-b, -a]]))
            lam[i] = -a + 1j * b
            lam[i + 1] = -a - 1j * b
            i += 2
        else:
            blocks.append(np.array([[re[i]]]))
            i += 1
    D = np.zeros((dim, dim))
    j = 0
    for blk in blocks:
        m = blk.shape[0]
        D[j : j + m, j : j + m] = blk
        j += m
    V = np.eye(dim) + 0.3 * rng.standard_normal((dim, dim)) / np.sqrt(dim)
    M = V @ D @ np.linalg.inv(V)
    return DenseOperator(M.astype(complex), label=label)
