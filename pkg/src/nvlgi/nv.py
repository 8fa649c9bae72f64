"""Six-level NV-center experiment model: electron ancilla (x) nitrogen
nuclear qutrit, controlled-gate negative-result measurement with
postselection, population tables, and the LG-function assembly.

Level ordering follows the product basis
(|1>e, |0>e) (x) (|+1>n, |0>n, |-1>n), relabeled |1>..|6>, so the
experiment's populations P_i^j read off as diagonal entries directly.
The initialized/postselected electron manifold |0>e covers levels 4-6.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import rotation_unitary, spin1_operators, tensor
from .noise import (
    ImperfectionModel,
    electron_sz,
    imperfect_initial_state,
    sample_detunings,
)
from .protocol import CorrelatorSet

SQRT2 = np.sqrt(2.0)

GAMMA_E_HZ_PER_G = 2.8025e6  # electron gyromagnetic ratio
GAMMA_N_HZ_PER_G = 307.7  # 14N nuclear gyromagnetic ratio

_I2 = np.eye(2, dtype=complex)
_I3 = np.eye(3, dtype=complex)
_XE = np.array([[0, 1], [1, 0]], dtype=complex)

# postselected electron-|0> levels |4>, |5>, |6> as 0-based indices
POSTSELECT_IDX = (3, 4, 5)


class DegeneratePostselectionError(RuntimeError):
    """Controlled gate cannot distinguish outcomes (e.g. flip probability 0)."""


@dataclass(frozen=True)
class NvModel:
    """Ground-state NV constants (Hz, except the field in gauss)."""

    d_zfs: float = 2.87e9
    q_quad: float = -4.95e6
    a_hf: float = -2.16e6
    b_field: float = 512.0

    @property
    def omega_e(self) -> float:
        return GAMMA_E_HZ_PER_G * self.b_field

    @property
    def omega_n(self) -> float:
        return GAMMA_N_HZ_PER_G * self.b_field

    def level_energies(self) -> np.ndarray:
        """Diagonal of the 6-level Hamiltonian in Hz, ordered |1>..|6>."""
        energies = []
        for ms in (1, 0):  # electron manifolds |1>e then |0>e
            for mi in (1, 0, -1):
                energies.append(
                    self.d_zfs * ms**2
                    + self.omega_e * ms
                    + self.q_quad * mi**2
                    + self.omega_n * mi
                    + self.a_hf * mi * ms
                )
        return np.array(energies)

    def mw_transition(self, mi: int) -> float:
        """Electron |0>e -> |1>e transition frequency (Hz) at nuclear state mi."""
        e = self.level_energies()
        col = {1: 0, 0: 1, -1: 2}[mi]
        return e[col] - e[3 + col]

    def rf_transitions(self) -> tuple[float, float]:
        """(omega_45, omega_56): nuclear transition frequencies in |0>e (Hz)."""
        e = self.level_energies()
        return abs(e[3] - e[4]), abs(e[4] - e[5])


@dataclass(frozen=True)
class PulseParams:
    """Drive parameters; u_duration is tied to the requested rotation angle."""

    theta: float
    f_rabi: float = 20e3
    model: NvModel = field(default_factory=NvModel)

    @property
    def u_duration(self) -> float:
        """RF pulse length for theta = sqrt(2)*pi*f_rabi*t."""
        return self.theta / (SQRT2 * np.pi * self.f_rabi)

    @property
    def mw_freq(self) -> float:
        return self.model.mw_transition(0)

    @property
    def rf_freqs(self) -> tuple[float, float]:
        return self.model.rf_transitions()


def build_nv_hamiltonian(model: NvModel) -> np.ndarray:
    """H_NV in angular units (rad/s): 2*pi*(D*Sz^2 + we*Sz + Q*Iz^2 + wn*Iz + A*Iz*Sz).

    The electron is restricted to the (|1>e, |0>e) ancilla, so its Sz acts
    as diag(1, 0); the result is diagonal in the product basis.
    """
    sz_e = np.diag([1.0, 0.0]).astype(complex)
    ops = spin1_operators()
    h = (
        model.d_zfs * tensor(sz_e @ sz_e, _I3)
        + model.omega_e * tensor(sz_e, _I3)
        + model.q_quad * tensor(_I2, ops.iz_sq)
        + model.omega_n * tensor(_I2, ops.sz)
        + model.a_hf * tensor(sz_e, ops.sz)
    )
    return 2 * np.pi * h


def nuclear_rotation(theta: float) -> np.ndarray:
    """Ideal three-level Rabi rotation on the nuclear spin, both manifolds."""
    return tensor(_I2, rotation_unitary(theta, dim=3))


def _flip_unitary(protected: int) -> list[np.ndarray]:
    """Per-subspace electron flips for the unprotected nuclear states."""
    flips = []
    for m in range(3):
        if m == protected:
            continue
        pm = np.zeros((3, 3), dtype=complex)
        pm[m, m] = 1.0
        flips.append(tensor(_XE, pm) + tensor(_I2, _I3 - pm))
    return flips


def controlled_gate(variant: int, p: float):
    """Channel flipping the electron on nuclear states other than the protected one.

    ``variant`` 1..3 protects |+1>n, |0>n, |-1>n respectively. Each
    unprotected subspace is flipped independently with probability p
    (one selective MW pulse per subspace); the protected subspace is
    untouched exactly and the channel is trace-preserving.
    """
    if not 1 <= variant <= 3:
        raise ValueError(f"controlled_gate variant must be 1..3, got {variant}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"flip probability must be in [0, 1], got {p}")
    flips = _flip_unitary(variant - 1)

    def apply(rho: np.ndarray) -> np.ndarray:
        for f in flips:
            rho = p * (f @ rho @ f.conj().T) + (1 - p) * rho
        return rho

    return apply


def run_inrm_experiment(
    theta: float,
    cg_variant: int,
    imperfections: ImperfectionModel | None = None,
    delta0: float = 0.0,
    f_rabi: float = 20e3,
    mw_rabi: float | None = None,
) -> np.ndarray:
    """One pulse sequence at a fixed quasi-static detuning delta0 (Hz).

    init -> U(theta) -> controlled gate (variants 1-3; 4 skips it) ->
    U(theta) -> populations of all six levels. Raw populations: the
    postselection happens in the assembly, not here.

    The gate is instantaneous by default, parameterized by the measured
    flip probability. ``mw_rabi`` switches to finite-duration selective MW
    pi pulses whose transfer degrades with the detuning delta0.
    """
    if cg_variant not in (1, 2, 3, 4):
        raise ValueError(f"cg_variant must be 1..4, got {cg_variant}")
    model = imperfections or ImperfectionModel.ideal()
    rho = imperfect_initial_state(model)
    pulse = PulseParams(theta=theta, f_rabi=f_rabi)
    u = nuclear_rotation(theta)
    if delta0 != 0.0:
        # quasi-static detuning phase during the RF pulse; commutes with the
        # drive and is diagonal, so it multiplies rows directly
        phase = np.exp(
            -1j * 2 * np.pi * delta0 * pulse.u_duration * np.diag(electron_sz(6)).real
        )
        u = phase[:, None] * u
    rho = u @ rho @ u.conj().T
    if cg_variant != 4:
        p_eff = model.flip_prob_p
        if mw_rabi is not None:
            p_eff *= _pulse_flip_prob(delta0, mw_rabi)
        rho = controlled_gate(cg_variant, p_eff)(rho)
    rho = u @ rho @ u.conj().T
    return np.diag(rho).real.copy()


def population_table(
    theta: float,
    imperfections: ImperfectionModel | None = None,
    f_rabi: float = 20e3,
    mw_rabi: float | None = None,
) -> np.ndarray:
    """6x4 table P[i][j]: level populations for the four experiment variants.

    Columns are averaged over the detuning ensemble of the imperfection
    model (deterministic given seed and averaging mode).
    """
    model = imperfections or ImperfectionModel.ideal()
    samples = sample_detunings(model)
    table = np.zeros((6, 4))
    for j in range(1, 5):
        col = np.zeros(6)
        comp = np.zeros(6)
        for s in samples:
            pops = run_inrm_experiment(theta, j, model, s.delta0, f_rabi, mw_rabi)
            term = s.weight * pops - comp
            new = col + term
            comp = (new - col) - term
            col = new
        table[:, j - 1] = col
    return table


def postselected_weights(table: np.ndarray) -> np.ndarray:
    """Per-variant probability retained by keeping levels |4>, |5>, |6>."""
    return table[POSTSELECT_IDX, :].sum(axis=0)


def assemble_lg(table: np.ndarray) -> CorrelatorSet:
    """LG correlators from the final-state populations of the four variants.

    Populations of the unflipped-ancilla levels enter as joint (raw)
    probabilities: the t2 outcome is set by the gate variant, the t3
    outcome by which of |4>, |5>, |6> is occupied.
    """
    table = np.asarray(table, dtype=float)
    if table.shape != (6, 4):
        raise ValueError(f"population table must be 6x4, got {table.shape}")
    weights = postselected_weights(table)
    # a CG column may be legitimately empty (e.g. theta=0 with a perfect
    # gate: the t2 outcome it probes never occurs); the gate-free column
    # and the table as a whole must retain weight
    if weights[3] <= 0 or weights.sum() <= 0:
        raise DegeneratePostselectionError(
            f"postselection impossible: per-variant weights {weights}"
        )
    p4, p5, p6 = table[3], table[4], table[5]
    q2 = (p4[0] + p5[0] + p6[0]) + (p4[1] + p5[1] + p6[1]) - (p4[2] + p5[2] + p6[2])
    q2q3 = (p4[0] + p5[0] - p6[0]) + (p4[1] + p5[1] - p6[1]) - (p4[2] + p5[2] - p6[2])
    q3 = p4[3] + p5[3] - p6[3]
    return CorrelatorSet(q2_mean=float(q2), q2q3_mean=float(q2q3), q3_mean=float(q3))


def lg_run(
    theta: float,
    imperfections: ImperfectionModel | None = None,
    f_rabi: float = 20e3,
    mw_rabi: float | None = None,
) -> CorrelatorSet:
    """Full experiment: four variants under the imperfection model, assembled K3."""
    model = imperfections or ImperfectionModel.ideal()
    if model.flip_prob_p == 0.0:
        raise DegeneratePostselectionError(
            "flip probability 0: the controlled gate never marks the ancilla, "
            "so the postselected populations overcount every outcome"
        )
    return assemble_lg(population_table(theta, model, f_rabi, mw_rabi))


def _pulse_flip_prob(detuning: float, rabi: float) -> float:
    """Population transfer of a square pi pulse at the given detuning (Hz)."""
    if rabi <= 0:
        raise ValueError("rabi frequency must be positive")
    g = np.hypot(rabi, detuning)
    return float((rabi / g) ** 2 * np.sin(np.pi * g / (2 * rabi)) ** 2)


def odmr_spectrum(
    freqs: np.ndarray,
    apply_cg: bool = False,
    p: float = 1.0,
    model: NvModel | None = None,
    mw_rabi: float = 0.4e6,
    cg_variant: int = 1,
) -> np.ndarray:
    """Swept selective MW pi-pulse against a fully mixed nuclear spin.

    The electron starts in |0>e; with ``apply_cg`` the gate (flip
    probability p, protecting the ``cg_variant`` nuclear state) runs before
    the sweep, so the line pattern encodes p. Returns (freq, P0) rows.
    """
    model = model or NvModel()
    freqs = np.asarray(freqs, dtype=float)
    lines = [model.mw_transition(mi) for mi in (1, 0, -1)]
    protected = cg_variant - 1
    # per-nuclear-state electron |0> population before the sweep pulse
    p0_n = np.full(3, 1.0 / 3)
    if apply_cg:
        for m in range(3):
            if m != protected:
                p0_n[m] *= 1.0 - p
    out = np.empty((len(freqs), 2))
    for i, f in enumerate(freqs):
        total = 0.0
        for m in range(3):
            flip = _pulse_flip_prob(f - lines[m], mw_rabi)
            pop0 = p0_n[m]
            pop1 = 1.0 / 3 - pop0
            total += (1 - flip) * pop0 + flip * pop1
        out[i] = (f, total)
    return out


def repeated_cg(
    k_max: int,
    p: float,
    readout_sigma: float = 0.0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Survival of the flip-target population under k repeated gates: P0(k) = p^k.

    Optional Gaussian readout noise supports the fitter study. Returns
    (k, P0) rows for k = 0..k_max.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"flip probability must be in [0, 1], got {p}")
    ks = np.arange(k_max + 1)
    p0 = p**ks.astype(float)
    if readout_sigma > 0:
        if rng is None:
            rng = np.random.default_rng()
        p0 = p0 + rng.normal(0.0, readout_sigma, size=p0.shape)
    return np.column_stack([ks, p0])


def fit_flip_probability(points: np.ndarray) -> tuple[float, float]:
    """Recover p from (k, P0) data by log-linear regression.

    Non-positive P0 values (possible under readout noise) are dropped.
    Returns (p_hat, one-sigma uncertainty).
    """
    points = np.asarray(points, dtype=float)
    keep = points[:, 1] > 0
    k, y = points[keep, 0], np.log(points[keep, 1])
    if len(k) < 3:
        raise ValueError("not enough positive points for the log-linear fit")
    coeffs, cov = np.polyfit(k, y, 1, cov=True)
    slope, slope_var = coeffs[0], cov[0, 0]
    p_hat = float(np.exp(slope))
    return p_hat, float(p_hat * np.sqrt(slope_var))
