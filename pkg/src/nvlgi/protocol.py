"""Measurement semantics and Leggett-Garg correlators at the ideal level.

Implements the two state-update conventions for a degenerate dichotomic
measurement (Luders: project with the summed eigenspace projector;
von Neumann: project with each rank-1 projector and sum), the three-time
protocol that assembles K3, general n-time strings, the closed-form
correlators for the qutrit protocol, macrorealist bounds by enumeration,
and the search for the violation-maximising rotation angle.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    basis_projector,
    basis_state,
    evolve,
    rotation_unitary,
)

PROJECTOR_TOL = 1e-10
BRANCH_PROB_FLOOR = 1e-14


class UpdateRule(enum.Enum):
    LUDERS = "luders"
    VON_NEUMANN = "von-neumann"


class InvalidSchemeError(ValueError):
    """Projector set violates the measurement-scheme invariants."""


@dataclass(frozen=True)
class MeasurementScheme:
    """Projective measurement with outcomes grouped into dichotomic values.

    ``projectors`` maps labels to rank->=1 projectors; ``outcome_of_label``
    assigns each label +1 or -1; ``update_rule`` selects how the
    post-measurement state is formed for degenerate outcomes.
    """

    projectors: tuple[tuple[str, np.ndarray], ...]
    outcome_of_label: dict[str, int]
    update_rule: UpdateRule

    @property
    def dim(self) -> int:
        return self.projectors[0][1].shape[0]

    def labels_for(self, outcome: int) -> list[str]:
        return [lab for lab, v in self.outcome_of_label.items() if v == outcome]

    def projector_of(self, label: str) -> np.ndarray:
        for lab, p in self.projectors:
            if lab == label:
                return p
        raise KeyError(label)

    def validate(self) -> None:
        if getattr(self, "_validated", False):
            return
        total = np.zeros((self.dim, self.dim), dtype=complex)
        mats = [p for _, p in self.projectors]
        for lab, p in self.projectors:
            if np.abs(p - p.conj().T).max() > PROJECTOR_TOL:
                raise InvalidSchemeError(f"projector {lab!r} not Hermitian")
            if np.abs(p @ p - p).max() > PROJECTOR_TOL:
                raise InvalidSchemeError(f"projector {lab!r} not idempotent")
            if lab not in self.outcome_of_label:
                raise InvalidSchemeError(f"label {lab!r} has no outcome assignment")
            if self.outcome_of_label[lab] not in (+1, -1):
                raise InvalidSchemeError(f"outcome for {lab!r} must be +1 or -1")
            total += p
        for i, a in enumerate(mats):
            for b in mats[i + 1 :]:
                if np.abs(a @ b).max() > PROJECTOR_TOL:
                    raise InvalidSchemeError("projectors not mutually orthogonal")
        if np.abs(total - np.eye(self.dim)).max() > PROJECTOR_TOL:
            raise InvalidSchemeError("projectors do not sum to identity")
        object.__setattr__(self, "_validated", True)

    def outcome_projectors(self, outcome: int) -> list[np.ndarray]:
        """Projectors grouped into one dichotomic outcome, cached."""
        cache = getattr(self, "_grouped", None)
        if cache is None:
            cache = {
                v: [self.projector_of(lab) for lab in self.labels_for(v)]
                for v in (+1, -1)
            }
            object.__setattr__(self, "_grouped", cache)
        return cache[outcome]


@dataclass(frozen=True)
class MeasurementBranch:
    """One dichotomic outcome of a measurement.

    ``post_state`` is None for zero-probability branches.
    """

    outcome: int
    probability: float
    post_state: np.ndarray | None


@dataclass(frozen=True)
class CorrelatorSet:
    """The three correlators of the reduced three-time LG function."""

    q2_mean: float
    q2q3_mean: float
    q3_mean: float

    @property
    def k3(self) -> float:
        return self.q2_mean + self.q2q3_mean - self.q3_mean


@dataclass(frozen=True)
class LgString:
    """n-time LG string: sequential correlators plus the closing term."""

    n: int
    terms: tuple[float, ...] = field(default=())

    @property
    def value(self) -> float:
        return float(sum(self.terms))


def standard_qutrit_scheme(rule: UpdateRule) -> MeasurementScheme:
    """Rank-1 projectors onto (|+1>, |0>, |-1>) with outcomes (+1, +1, -1)."""
    labels = ("+1", "0", "-1")
    scheme = MeasurementScheme(
        projectors=tuple((lab, basis_projector(i, 3)) for i, lab in enumerate(labels)),
        outcome_of_label={"+1": +1, "0": +1, "-1": -1},
        update_rule=rule,
    )
    scheme.validate()
    return scheme


def standard_qubit_scheme(rule: UpdateRule) -> MeasurementScheme:
    """Dichotomic rank-1 projectors on a qubit; Luders and von Neumann coincide."""
    scheme = MeasurementScheme(
        projectors=(("up", basis_projector(0, 2)), ("down", basis_projector(1, 2))),
        outcome_of_label={"up": +1, "down": -1},
        update_rule=rule,
    )
    scheme.validate()
    return scheme


def measure(rho: np.ndarray, scheme: MeasurementScheme) -> list[MeasurementBranch]:
    """Measure rho, returning one branch per dichotomic outcome.

    Von Neumann: the post state for outcome v is the normalised sum of the
    per-projector updates over the labels grouped into v (intra-outcome
    coherence is destroyed). Luders: the summed projector is applied once
    (coherence inside the outcome eigenspace survives).
    """
    scheme.validate()
    branches = []
    for outcome in (+1, -1):
        projs = scheme.outcome_projectors(outcome)
        if not projs:
            branches.append(MeasurementBranch(outcome, 0.0, None))
            continue
        if scheme.update_rule is UpdateRule.VON_NEUMANN:
            post = sum(p @ rho @ p for p in projs)
        else:
            block = sum(projs)
            post = block @ rho @ block
        prob = float(np.trace(post).real)
        if prob > BRANCH_PROB_FLOOR:
            branches.append(MeasurementBranch(outcome, prob, post / prob))
        else:
            branches.append(MeasurementBranch(outcome, 0.0, None))
    return branches


def _mean_q(rho: np.ndarray, scheme: MeasurementScheme) -> float:
    """<Q> without branch construction: sum of outcome * tr(rho P)."""
    total = 0.0
    for outcome in (+1, -1):
        for p in scheme.outcome_projectors(outcome):
            total += outcome * np.vdot(p.T, rho).real  # tr(rho P), P Hermitian
    return total


def k3_protocol(
    theta: float,
    scheme: MeasurementScheme,
    *,
    measure_at_t2_for_q3: bool = False,
) -> CorrelatorSet:
    """Three-time protocol with the initial state counted as the first measurement.

    The system starts in the top basis state, so Q(t1) = +1 deterministically.
    <Q2> and <Q2Q3> come from evolving by U(theta), branching on the
    measurement at t2, evolving again and measuring at t3. <Q3> is evaluated
    on the unmeasured path by default; ``measure_at_t2_for_q3`` inserts a
    measured-but-ignored step at t2 for invasiveness studies.
    """
    scheme.validate()
    dim = scheme.dim
    u = rotation_unitary(theta, dim)
    ud = u.conj().T
    rho2 = u @ basis_state(0, dim) @ ud

    q2 = 0.0
    q2q3 = 0.0
    dephased = np.zeros_like(rho2)
    for outcome in (+1, -1):
        projs = scheme.outcome_projectors(outcome)
        if not projs:
            continue
        if scheme.update_rule is UpdateRule.VON_NEUMANN:
            post = sum(p @ rho2 @ p for p in projs)
        else:
            block = sum(projs)
            post = block @ rho2 @ block
        q2 += outcome * np.trace(post).real
        q2q3 += outcome * _mean_q(u @ post @ ud, scheme)  # unnormalized: carries prob
        dephased = dephased + post

    rho3 = u @ (dephased if measure_at_t2_for_q3 else rho2) @ ud
    q3 = _mean_q(rho3, scheme)
    return CorrelatorSet(q2_mean=float(q2), q2q3_mean=float(q2q3), q3_mean=float(q3))


def analytic_correlators(theta: float) -> CorrelatorSet:
    """Closed-form correlators for the qutrit protocol with per-projector updates.

    Validated against ``k3_protocol`` (the density-matrix path is the
    authority); reaches K3 = 1.756 near theta = 0.416*pi.
    """
    q2 = 0.25 + math.cos(theta) - 0.25 * math.cos(2 * theta)
    q2q3 = 1.0 / 16 + math.cos(theta) - math.cos(4 * theta) / 16
    q3 = 0.25 + math.cos(2 * theta) - 0.25 * math.cos(4 * theta)
    return CorrelatorSet(q2_mean=q2, q2q3_mean=q2q3, q3_mean=q3)


def _pair_correlator(i: int, j: int, u: np.ndarray, scheme: MeasurementScheme) -> float:
    """<Q(t_j)Q(t_i)> with measurements only at t_i and t_j (i < j).

    Free evolution elsewhere; t1 is the initialization, Q(t1) = +1.
    """
    dim = scheme.dim
    rho = basis_state(0, dim)
    for _ in range(i - 1):
        rho = evolve(rho, u)
    if i == 1:
        for _ in range(j - i):
            rho = evolve(rho, u)
        return _mean_q(rho, scheme)
    total = 0.0
    for b in measure(rho, scheme):
        if b.post_state is None:
            continue
        later = b.post_state
        for _ in range(j - i):
            later = evolve(later, u)
        total += b.probability * b.outcome * _mean_q(later, scheme)
    return total


def kn_string(n: int, theta: float, scheme: MeasurementScheme) -> LgString:
    """n-time LG string with equal rotation angle theta between neighbours.

    Each pairwise correlator is evaluated in its own run (measurements only
    at the two times that enter the term).
    """
    if n < 3:
        raise ValueError(f"kn_string needs n >= 3, got {n}")
    u = rotation_unitary(theta, scheme.dim)
    terms = [_pair_correlator(i, i + 1, u, scheme) for i in range(1, n)]
    terms.append(-_pair_correlator(1, n, u, scheme))
    return LgString(n=n, terms=tuple(terms))


def classical_extrema(n: int) -> tuple[int, int]:
    """Exact macrorealist extrema of the n-time string by 2^n enumeration."""
    if not 3 <= n <= 12:
        raise ValueError(f"classical_extrema supports 3 <= n <= 12, got {n}")
    lo, hi = None, None
    for qs in itertools.product((+1, -1), repeat=n):
        k = sum(qs[i] * qs[i + 1] for i in range(n - 1)) - qs[-1] * qs[0]
        lo = k if lo is None else min(lo, k)
        hi = k if hi is None else max(hi, k)
    return lo, hi


def _rotation_batch(thetas: np.ndarray, dim: int) -> np.ndarray:
    """Stacked rotation unitaries (len(thetas), dim, dim), closed forms."""
    c, s = np.cos(thetas), np.sin(thetas)
    if dim == 3:
        e = -1j * s / np.sqrt(2.0)
        u = np.empty((len(thetas), 3, 3), dtype=complex)
        u[:, 0, 0] = u[:, 2, 2] = (1 + c) / 2
        u[:, 0, 2] = u[:, 2, 0] = (c - 1) / 2
        u[:, 1, 1] = c
        u[:, 0, 1] = u[:, 1, 0] = u[:, 1, 2] = u[:, 2, 1] = e
        return u
    ch, sh = np.cos(thetas / 2), np.sin(thetas / 2)
    u = np.empty((len(thetas), 2, 2), dtype=complex)
    u[:, 0, 0] = u[:, 1, 1] = ch
    u[:, 0, 1] = u[:, 1, 0] = -1j * sh
    return u


def _k3_batch(thetas: np.ndarray, scheme: MeasurementScheme) -> np.ndarray:
    """K3 over an array of angles; vectorised twin of ``k3_protocol``."""
    scheme.validate()
    dim = scheme.dim
    u = _rotation_batch(thetas, dim)
    ud = u.conj().transpose(0, 2, 1)
    rho1 = basis_state(0, dim)[None, :, :]
    rho2 = u @ rho1 @ ud

    def q_of(rho: np.ndarray) -> np.ndarray:
        total = np.zeros(len(thetas))
        for outcome in (+1, -1):
            for p in scheme.outcome_projectors(outcome):
                total += outcome * np.einsum("gij,ji->g", rho, p).real
        return total

    q2 = np.zeros(len(thetas))
    q2q3 = np.zeros(len(thetas))
    for outcome in (+1, -1):
        projs = scheme.outcome_projectors(outcome)
        if not projs:
            continue
        if scheme.update_rule is UpdateRule.VON_NEUMANN:
            post = sum(p[None] @ rho2 @ p[None] for p in projs)
        else:
            block = sum(projs)
            post = block[None] @ rho2 @ block[None]
        q2 += outcome * np.einsum("gii->g", post).real
        q2q3 += outcome * q_of(u @ post @ ud)
    q3 = q_of(u @ rho2 @ ud)
    return q2 + q2q3 - q3


def find_max_k3(
    scheme: MeasurementScheme, grid_points: int = 10_000
) -> tuple[float, float]:
    """Maximise K3(theta) over [0, pi]: grid scan plus golden-section refinement.

    Deterministic; ties broken toward the smallest theta. Returns
    (theta_star, k3_max).
    """
    if grid_points < 100:
        raise ValueError("grid_points must be >= 100")

    def k3(theta: float) -> float:
        return k3_protocol(theta, scheme).k3

    thetas = np.linspace(0.0, np.pi, grid_points)
    values = _k3_batch(thetas, scheme)
    best = int(values.argmax())

    lo = thetas[max(best - 1, 0)]
    hi = thetas[min(best + 1, grid_points - 1)]
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = k3(c), k3(d)
    while b - a > 1e-8:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = k3(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = k3(d)
    theta_star = (a + b) / 2
    k_star = k3(theta_star)
    # endpoints can beat the interior stationary point (flat-at-zero schemes)
    if values[best] > k_star:
        theta_star, k_star = thetas[best], float(values[best])
    return float(theta_star), float(k_star)
