"""Basis conventions, states, operators, and the bare/dressed transform.

Four internal levels, ordered (|0>, |0'>, |-1>, |+1>).  Composite spaces
tensor a truncated Fock ladder on the right with the Fock index varying
fastest, so the flat index of |level, n> is level*n_fock + n.

All frequencies inside the library are angular (rad/s); conversion from Hz
happens at the config boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LABELS = ("0", "0'", "-1", "+1")
LEVEL_INDEX = {label: i for i, label in enumerate(LABELS)}

DRESSED_LABELS = ("u", "d", "D", "0'")

DIM_BARE = 4

# Diagonal of the first-order Zeeman operator dH/d(lambda0): levels |+1> and
# |-1> sit at +lambda0 and -lambda0 (the |-1> <-> |0> transition is then at
# omega0 + lambda0), so a fluctuation delta(t) enters as
# delta * (|+1><+1| - |-1><-1|) = delta * diag(0, 0, -1, +1).
ZEEMAN_DIAG = np.array([0.0, 0.0, -1.0, 1.0])


def level_index(label: str) -> int:
    try:
        return LEVEL_INDEX[label]
    except KeyError:
        raise ValueError(f"unknown level label {label!r}; expected one of {LABELS}") from None


def basis_state(label: str, n_fock: int = 1, fock: int = 0) -> np.ndarray:
    """Unit state vector |label, fock> on a 4*n_fock space."""
    if n_fock < 1:
        raise ValueError("n_fock must be >= 1")
    if not 0 <= fock < n_fock:
        raise ValueError(f"fock index {fock} outside [0, {n_fock})")
    psi = np.zeros(4 * n_fock, dtype=complex)
    psi[level_index(label) * n_fock + fock] = 1.0
    return psi


def normalize(psi: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError("cannot normalize the zero vector")
    return psi / norm


def require_hermitian(op: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Validate hermiticity (max-element tolerance) and return the operator."""
    dev = np.max(np.abs(op - op.conj().T))
    if dev > tol:
        raise ValueError(f"operator is not hermitian (max deviation {dev:.3e})")
    return op


def tensor_with_fock(op: np.ndarray, n_fock: int) -> np.ndarray:
    """Extend a 4x4 internal operator to 4*n_fock, acting trivially on motion."""
    op = np.asarray(op)
    if op.shape != (4, 4):
        raise ValueError(f"expected a 4x4 operator, got shape {op.shape}")
    if n_fock < 1:
        raise ValueError("n_fock must be >= 1")
    return np.kron(op, np.eye(n_fock))


def destroy(n_fock: int) -> np.ndarray:
    """Truncated annihilation operator b on the Fock ladder."""
    if n_fock < 1:
        raise ValueError("n_fock must be >= 1")
    return np.diag(np.sqrt(np.arange(1, n_fock, dtype=float)), k=1).astype(complex)


@dataclass(frozen=True)
class DressedFrame:
    """Unitary from the bare basis to (|u>, |d>, |D>, |0'>).

    The coupled ("bright") combination is |B> = (|-1> + e^{i phi}|+1>)/sqrt(2)
    and the protected column is its orthogonal partner
    |D> = (|-1> - e^{i phi}|+1>)/sqrt(2); |u>, |d> = (|B> +/- |0>)/sqrt(2).
    At phi = pi the protected column is the state usually written |B>; the
    label "D" here always means column 2, the gap-protected state.
    """

    relative_phase: float
    unitary: np.ndarray = field(repr=False)

    def __post_init__(self):
        u = self.unitary
        dev = np.max(np.abs(u.conj().T @ u - np.eye(4)))
        if dev > 1e-12:
            raise ValueError(f"dressed transform is not unitary (deviation {dev:.3e})")

    def column(self, label: str) -> np.ndarray:
        """Dressed basis state as a bare-basis vector; also accepts "B"."""
        if label == "B":
            # coupled partner inside the gap, (|u> + |d>)/sqrt(2)
            return (self.unitary[:, 0] + self.unitary[:, 1]) / np.sqrt(2.0)
        try:
            return self.unitary[:, DRESSED_LABELS.index(label)]
        except ValueError:
            raise ValueError(
                f"unknown dressed label {label!r}; expected one of {DRESSED_LABELS + ('B',)}"
            ) from None


def dressed_transform(relative_phase: float = 0.0) -> DressedFrame:
    """Dressed frame for a given relative phase between the dressing tones."""
    phase = np.exp(1j * relative_phase)
    zero = np.array([1, 0, 0, 0], dtype=complex)
    zero_prime = np.array([0, 1, 0, 0], dtype=complex)
    minus = np.array([0, 0, 1, 0], dtype=complex)
    plus = np.array([0, 0, 0, 1], dtype=complex)
    bright = (minus + phase * plus) / np.sqrt(2.0)
    dark = (minus - phase * plus) / np.sqrt(2.0)
    up = (bright + zero) / np.sqrt(2.0)
    down = (bright - zero) / np.sqrt(2.0)
    unitary = np.column_stack([up, down, dark, zero_prime])
    return DressedFrame(relative_phase=float(relative_phase), unitary=unitary)


def population(psi: np.ndarray, label: str, frame: DressedFrame | None = None) -> float:
    """Probability of a bare or dressed label, summed over Fock levels.

    Bare labels are "0", "0'", "-1", "+1".  Dressed labels ("u", "d", "D",
    "B") require `frame`; a bare "0'" never needs one.
    """
    psi = np.asarray(psi)
    dim = psi.shape[0]
    if dim % 4 != 0 or dim == 0:
        raise ValueError(f"state dimension {dim} is not a multiple of 4")
    n_fock = dim // 4
    blocks = psi.reshape(4, n_fock)
    if label in LEVEL_INDEX:
        amps = blocks[LEVEL_INDEX[label]]
    else:
        if frame is None:
            raise ValueError(f"dressed label {label!r} requires a DressedFrame")
        col = frame.column(label)
        amps = col.conj() @ blocks
    return float(np.real(np.vdot(amps, amps)))


def populations(psi: np.ndarray, labels=LABELS, frame: DressedFrame | None = None) -> dict:
    return {label: population(psi, label, frame) for label in labels}
