"""Truncated charge-basis Hamiltonians for two coupled Cooper-pair boxes.

Units: hbar = 1 and every energy is measured in a reference energy (by
default the charging energy of qubit 1), so time is in units of 1/E_ref.

Two-qubit operators act on the product space ``qubit1 (x) qubit2`` with
qubit 1 as the slow (leftmost) index, i.e. the product state
``|n1, n2>`` has flat index ``(n1 - n_min) * D + (n2 - n_min)``.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12

#: control identifiers understood by :class:`TwoQubitSystem`
CONTROL_IDS = ("EJ1", "EJ2", "EJJ", "NG1", "NG2")


class ConfigurationError(ValueError):
    """Invalid physical or numerical configuration."""


class CouplingKind(str, enum.Enum):
    CAPACITIVE = "capacitive"
    JOSEPHSON = "josephson"


class GateKind(str, enum.Enum):
    G_JJ_PLUS = "G_JJ_plus"
    G_JJ_MINUS = "G_JJ_minus"
    G_CC = "G_cc"


@dataclass(frozen=True)
class ChargeBasis:
    """Window of excess Cooper-pair numbers ``n_min..n_max`` kept per qubit."""

    n_min: int = -1
    n_max: int = 2

    def __post_init__(self):
        if not (self.n_min <= 0 and self.n_max >= 1):
            raise ConfigurationError(
                f"charge window [{self.n_min}, {self.n_max}] must contain 0 and 1")

    @property
    def D(self) -> int:
        return self.n_max - self.n_min + 1

    @property
    def charges(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1)

    def index(self, n: int) -> int:
        if not self.n_min <= n <= self.n_max:
            raise ConfigurationError(f"charge state {n} outside window")
        return n - self.n_min

    @classmethod
    def qubit_only(cls) -> "ChargeBasis":
        return cls(0, 1)

    @classmethod
    def extended(cls) -> "ChargeBasis":
        return cls(-2, 3)


@dataclass(frozen=True)
class QubitParams:
    E_C: float
    E_J_idle: float
    n_g_idle: float

    def __post_init__(self):
        if self.E_C <= 0:
            raise ConfigurationError("E_C must be positive")
        if self.E_J_idle < 0:
            raise ConfigurationError("E_J_idle must be non-negative")
        if not 0.0 <= self.n_g_idle <= 1.0:
            raise ConfigurationError("n_g_idle must lie in [0, 1]")
        if self.E_J_idle / self.E_C > 0.5:
            logger.warning("E_J/E_C = %.3g is outside the charge regime",
                           self.E_J_idle / self.E_C)


@dataclass(frozen=True)
class CouplingSpec:
    """Inter-qubit coupling.

    For ``kind=JOSEPHSON`` ``E_cc`` is the residual capacitive coupling that
    accompanies the coupling junction.
    """

    kind: CouplingKind
    E_cc: float = 0.0
    E_JJ_idle: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", CouplingKind(self.kind))
        if self.E_cc < 0:
            raise ConfigurationError("E_cc must be non-negative")
        if self.E_JJ_idle < 0:
            raise ConfigurationError("E_JJ_idle must be non-negative")
        if self.kind is CouplingKind.CAPACITIVE and self.E_JJ_idle != 0:
            raise ConfigurationError("capacitive coupling cannot carry E_JJ")


@dataclass(frozen=True)
class GateTarget:
    kind: GateKind
    matrix: np.ndarray = field(repr=False)
    #: D^2 x 4 matrix whose columns are the embedded computational states
    embedding: np.ndarray = field(repr=False)

    @property
    def targets(self) -> np.ndarray:
        """Embedded images ``B @ G`` of the computational inputs (D^2 x 4)."""
        return self.embedding @ self.matrix


def _check_hermitian(H: np.ndarray) -> np.ndarray:
    if np.max(np.abs(H - H.conj().T), initial=0.0) > HERMITIAN_TOL:
        raise ArithmeticError("operator is not Hermitian")
    return H


def _tunneling(basis: ChargeBasis) -> np.ndarray:
    """``-(|n><n+1| + h.c.)/2``: the single-qubit Josephson term per unit E_J."""
    D = basis.D
    T = np.zeros((D, D), dtype=complex)
    idx = np.arange(D - 1)
    T[idx, idx + 1] = -0.5
    T[idx + 1, idx] = -0.5
    return T


def build_single_qubit_h(basis: ChargeBasis, E_C: float, E_J: float,
                         n_g: float) -> np.ndarray:
    """Cooper-pair box Hamiltonian in the charge basis.

    Diagonal ``E_C (n - n_g)^2`` and ``-E_J/2`` between neighbouring charge
    states.
    """
    if E_C <= 0:
        raise ConfigurationError("E_C must be positive")
    n = basis.charges
    H = np.diag(E_C * (n - n_g) ** 2).astype(complex)
    H += E_J * _tunneling(basis)
    return H


def build_cc_coupling(basis: ChargeBasis, E_cc: float, n_g1: float,
                      n_g2: float) -> np.ndarray:
    """Capacitive coupling ``E_cc (n1 - n_g1)(n2 - n_g2)``, diagonal."""
    if E_cc < 0:
        raise ConfigurationError("E_cc must be non-negative")
    n = basis.charges
    diag = E_cc * np.outer(n - n_g1, n - n_g2).ravel()
    return np.diag(diag).astype(complex)


def _exchange(basis: ChargeBasis) -> np.ndarray:
    """``sum |n1, n2+1><n1+1, n2| + h.c.``: Cooper-pair hopping between boxes."""
    D = basis.D
    X = np.zeros((D * D, D * D), dtype=complex)
    for a in range(D - 1):
        for b in range(D - 1):
            i = a * D + (b + 1)
            j = (a + 1) * D + b
            X[i, j] = 1.0
            X[j, i] = 1.0
    return X


def build_jj_coupling(basis: ChargeBasis, E_JJ: float) -> np.ndarray:
    """Josephson coupling junction, ``E_JJ/2`` on each exchange pair."""
    if E_JJ < 0:
        raise ConfigurationError("E_JJ must be non-negative")
    return 0.5 * E_JJ * _exchange(basis)


def build_total_h(basis: ChargeBasis, q1: QubitParams, q2: QubitParams,
                  coupling: CouplingSpec) -> np.ndarray:
    """Full two-qubit Hamiltonian ``H1 (x) I + I (x) H2 + H_I``.

    The qubit and coupling parameters are instantaneous values; time
    dependence is handled by :class:`TwoQubitSystem`.
    """
    I = np.eye(basis.D)
    H1 = build_single_qubit_h(basis, q1.E_C, q1.E_J_idle, q1.n_g_idle)
    H2 = build_single_qubit_h(basis, q2.E_C, q2.E_J_idle, q2.n_g_idle)
    H = np.kron(H1, I) + np.kron(I, H2)
    H += build_cc_coupling(basis, coupling.E_cc, q1.n_g_idle, q2.n_g_idle)
    if coupling.kind is CouplingKind.JOSEPHSON:
        H += build_jj_coupling(basis, coupling.E_JJ_idle)
    if H.shape != (basis.D ** 2, basis.D ** 2):
        raise RuntimeError("dimension mismatch in total Hamiltonian")
    return _check_hermitian(H)


def charge_state(basis: ChargeBasis, n: int) -> np.ndarray:
    v = np.zeros(basis.D, dtype=complex)
    v[basis.index(n)] = 1.0
    return v


def make_gate_target(kind: GateKind | str, basis: ChargeBasis,
                     flip_second: bool = False) -> GateTarget:
    """Target gate and the embedding of its computational basis.

    ``G_cc`` acts on ``{|11>, |10>, |01>, |00>}``; ``G_JJ`` on
    ``{|++>, |+->, |-+>, |-->}`` with ``|+-> = (|0> +- |1>)/sqrt(2)``.

    ``flip_second`` swaps the meaning of ``+`` and ``-`` on qubit 2, i.e.
    applies the gauge ``|n> -> (-1)^n |n>`` to the second box. With the sign
    conventions of the Hamiltonians above, the constant-coupling exchange
    scheme realizes ``G_JJ`` only in that relabelled basis.
    """
    kind = GateKind(kind)
    zero, one = charge_state(basis, 0), charge_state(basis, 1)
    if kind is GateKind.G_CC:
        G = np.array([[0, 1, 0, 0],
                      [1, 0, 0, 0],
                      [0, 0, 1, 0],
                      [0, 0, 0, 1]], dtype=complex)
        states = [(one, one), (one, zero), (zero, one), (zero, zero)]
    else:
        s = 1j if kind is GateKind.G_JJ_PLUS else -1j
        G = np.array([[0, 0, 0, 1],
                      [0, s, 0, 0],
                      [0, 0, s, 0],
                      [1, 0, 0, 0]], dtype=complex)
        plus = (zero + one) / np.sqrt(2)
        minus = (zero - one) / np.sqrt(2)
        p2, m2 = (minus, plus) if flip_second else (plus, minus)
        states = [(plus, p2), (plus, m2), (minus, p2), (minus, m2)]
    B = np.stack([np.kron(a, b) for a, b in states], axis=1)
    return GateTarget(kind, G, B)


class TwoQubitSystem:
    """Two coupled boxes with time-dependent controls.

    Control values are addressed by the ids in :data:`CONTROL_IDS`; missing
    ids take their idle values from the qubit and coupling parameters.
    """

    def __init__(self, basis: ChargeBasis, q1: QubitParams, q2: QubitParams,
                 coupling: CouplingSpec):
        self.basis = basis
        self.q1 = q1
        self.q2 = q2
        self.coupling = coupling
        D = basis.D
        I = np.eye(D)
        n = basis.charges.astype(float)
        self.dim = D * D
        # charge numbers of qubit 1 and 2 on the flattened product basis
        self.n1 = np.repeat(n, D)
        self.n2 = np.tile(n, D)
        T = _tunneling(basis)
        self.T1 = np.kron(T, I)
        self.T2 = np.kron(I, T)
        if coupling.kind is CouplingKind.JOSEPHSON:
            self.XJJ = 0.5 * _exchange(basis)
        else:
            self.XJJ = np.zeros((self.dim, self.dim), dtype=complex)

    @property
    def has_jj(self) -> bool:
        return self.coupling.kind is CouplingKind.JOSEPHSON

    def idle_values(self) -> dict[str, float]:
        return {
            "EJ1": self.q1.E_J_idle,
            "EJ2": self.q2.E_J_idle,
            "EJJ": self.coupling.E_JJ_idle,
            "NG1": self.q1.n_g_idle,
            "NG2": self.q2.n_g_idle,
        }

    def _resolve(self, values) -> dict:
        vals = self.idle_values()
        for key, v in (values or {}).items():
            if key not in vals:
                raise ConfigurationError(f"unknown control id {key!r}")
            if key == "EJJ" and not self.has_jj:
                raise ConfigurationError("EJJ control requires Josephson coupling")
            vals[key] = v
        return vals

    def hamiltonian(self, values: dict | None = None) -> np.ndarray:
        """Instantaneous Hamiltonian for scalar control values."""
        return self.hamiltonian_stack(
            {k: np.atleast_1d(v) for k, v in (values or {}).items()})[0]

    def hamiltonian_stack(self, values: dict) -> np.ndarray:
        """Hamiltonians for arrays of control values, shape ``(n, dim, dim)``."""
        vals = self._resolve(values)
        arrs = {k: np.atleast_1d(np.asarray(v, dtype=float)) for k, v in vals.items()}
        n_steps = max(a.shape[0] for a in arrs.values())
        arrs = {k: np.broadcast_to(a, (n_steps,)) for k, a in arrs.items()}
        d1 = self.n1[None, :] - arrs["NG1"][:, None]
        d2 = self.n2[None, :] - arrs["NG2"][:, None]
        diag = (self.q1.E_C * d1 ** 2 + self.q2.E_C * d2 ** 2
                + self.coupling.E_cc * d1 * d2)
        H = (arrs["EJ1"][:, None, None] * self.T1
             + arrs["EJ2"][:, None, None] * self.T2
             + arrs["EJJ"][:, None, None] * self.XJJ)
        idx = np.arange(self.dim)
        H[:, idx, idx] += diag
        return H

    def derivative(self, control: str, values: dict | None = None) -> np.ndarray:
        """Exact ``dH/d(control)`` at the given control values."""
        vals = self._resolve(values)
        if control == "EJ1":
            return self.T1.copy()
        if control == "EJ2":
            return self.T2.copy()
        if control == "EJJ":
            return self.XJJ.copy()
        E_cc = self.coupling.E_cc
        d1 = self.n1 - vals["NG1"]
        d2 = self.n2 - vals["NG2"]
        if control == "NG1":
            return np.diag(-2 * self.q1.E_C * d1 - E_cc * d2).astype(complex)
        if control == "NG2":
            return np.diag(-2 * self.q2.E_C * d2 - E_cc * d1).astype(complex)
        raise ConfigurationError(f"unknown control id {control!r}")

    def affine_split(self, channels: dict[str, tuple[str, ...]],
                     fixed: dict | None = None):
        """Write ``H = H0 + sum_a g_a H_a + c(g) * I`` for grouped controls.

        ``channels`` maps a channel name to the control ids it drives with a
        common value. The identity term only contributes a global phase and
        is dropped. Returns ``(H0, [H_a])`` in channel order.
        """
        zero = dict(fixed or {})
        for ids in channels.values():
            for cid in ids:
                zero[cid] = 0.0
        H0 = self.hamiltonian(zero)
        Hc = []
        for ids in channels.values():
            Ha = sum(self.derivative(cid, zero) for cid in ids)
            Hc.append(Ha)
        return H0, np.array(Hc)

    def with_params(self, q1=None, q2=None, coupling=None, basis=None):
        return TwoQubitSystem(basis or self.basis, q1 or self.q1,
                              q2 or self.q2, coupling or self.coupling)
