"""Second-moment bookkeeping for zero-mean Gaussian bosonic modes.

A :class:`MomentState` stores the normally ordered moments
``normal[i, j] = <a_i^dagger a_j>`` and ``anomalous[i, j] = <a_i a_j>``.
First moments are identically zero in every circuit built here (nothing is
coherently seeded), so they are not tracked.

Every operation is a linear Bogoliubov map ``a -> A a + B a^dagger`` on the
mode vector and returns a new state; inputs are never mutated.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ContractViolation, InvalidArgument, InvalidCoefficients

UNITARITY_TOL = 1e-8


class ModeId(NamedTuple):
    index: int
    label: str


@dataclass(frozen=True)
class SqueezerCoeffs:
    """Bogoliubov coefficients of a two-mode squeezer, ``|u|^2 - |v|^2 = 1``.

    ``u`` and ``v`` may be numpy arrays when produced for a whole frequency
    grid; the mode engine itself only accepts scalars.
    """

    u: complex
    v: complex

    @classmethod
    def from_gain(cls, r, phase=0.0):
        return cls(complex(math.cosh(r)), cmath.exp(1j * phase) * math.sinh(r))

    @property
    def unitarity_defect(self):
        return np.abs(np.abs(self.u) ** 2 - np.abs(self.v) ** 2 - 1.0)


def _freeze(arr):
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MomentState:
    labels: tuple
    normal: np.ndarray
    anomalous: np.ndarray

    @classmethod
    def vacuum(cls, labels=()):
        n = len(labels)
        if len(set(labels)) != n:
            raise InvalidArgument(f"duplicate mode labels in {labels!r}")
        return cls(
            tuple(labels),
            _freeze(np.zeros((n, n), dtype=complex)),
            _freeze(np.zeros((n, n), dtype=complex)),
        )

    @property
    def n_modes(self):
        return len(self.labels)

    def mode(self, label):
        try:
            return ModeId(self.labels.index(label), label)
        except ValueError:
            raise InvalidArgument(f"unknown mode {label!r}") from None

    def add_mode(self, label):
        """Register a new vacuum mode; returns ``(new_state, mode_id)``."""
        if label in self.labels:
            raise InvalidArgument(f"mode {label!r} already registered")
        n = self.n_modes
        normal = np.zeros((n + 1, n + 1), dtype=complex)
        anomalous = np.zeros((n + 1, n + 1), dtype=complex)
        normal[:n, :n] = self.normal
        anomalous[:n, :n] = self.anomalous
        state = MomentState(self.labels + (label,), _freeze(normal), _freeze(anomalous))
        return state, ModeId(n, label)

    def resolve(self, mode):
        if isinstance(mode, str):
            return self.mode(mode).index
        idx, label = mode
        if not 0 <= idx < self.n_modes or self.labels[idx] != label:
            raise InvalidArgument(f"mode {mode!r} is not registered in this state")
        return idx

    def photon_number(self, mode):
        i = self.resolve(mode)
        return float(self.normal[i, i].real)

    def is_vacuum(self, mode):
        i = self.resolve(mode)
        return not (
            np.any(self.normal[i, :]) or np.any(self.normal[:, i])
            or np.any(self.anomalous[i, :])
        )

    def is_physical(self, tol=1e-12):
        """Single-mode Cauchy-Schwarz check ``<a+a><aa+> >= |<aa>|^2``."""
        n = self.normal.diagonal().real
        m = np.abs(self.anomalous.diagonal()) ** 2
        return bool(np.all(n >= -tol) and np.all(n * (n + 1.0) - m >= -tol))

    def hermiticity_error(self):
        return float(
            max(
                np.max(np.abs(self.normal - self.normal.conj().T), initial=0.0),
                np.max(np.abs(self.anomalous - self.anomalous.T), initial=0.0),
            )
        )


def _transform(state, A, B):
    N, M = state.normal, state.anomalous
    Ac, Bc = A.conj(), B.conj()
    eye = np.eye(state.n_modes)
    normal = Ac @ N @ A.T + Ac @ M.conj() @ B.T + Bc @ M @ A.T + Bc @ (N.T + eye) @ B.T
    anomalous = A @ M @ A.T + A @ (eye + N.T) @ B.T + B @ N @ A.T + B @ M.conj() @ B.T
    # remove round-off asymmetry; exact entries are left untouched
    normal = 0.5 * (normal + normal.conj().T)
    anomalous = 0.5 * (anomalous + anomalous.T)
    return MomentState(state.labels, _freeze(normal), _freeze(anomalous))


def apply_two_mode_squeezer(state, mode_a, mode_b, coeffs):
    """Apply ``a -> u a + v b^dagger``, ``b -> u b + v a^dagger``."""
    ia, ib = state.resolve(mode_a), state.resolve(mode_b)
    if ia == ib:
        raise InvalidArgument("two-mode squeezer needs two distinct modes")
    u, v = complex(coeffs.u), complex(coeffs.v)
    defect = abs(abs(u) ** 2 - abs(v) ** 2 - 1.0)
    if defect > UNITARITY_TOL:
        raise InvalidCoefficients(f"|u|^2 - |v|^2 - 1 = {defect:.3e}")
    n = state.n_modes
    A = np.eye(n, dtype=complex)
    B = np.zeros((n, n), dtype=complex)
    A[ia, ia] = A[ib, ib] = u
    B[ia, ib] = B[ib, ia] = v
    return _transform(state, A, B)


def apply_loss(state, mode, transmissivity, noise_mode):
    """Attenuate ``mode`` by amplitude ``transmissivity`` into a vacuum ``noise_mode``.

    Realised as the beam splitter ``a -> mu a + nu f``, ``f -> -nu a + mu* f``
    with ``nu = sqrt(1 - |mu|^2)``, so the added noise operator ``nu f`` has
    commutator ``1 - |mu|^2``. The noise mode carries the lost light
    afterwards.
    """
    mu = complex(transmissivity)
    if abs(mu) > 1.0 + 1e-15:
        raise InvalidArgument(f"|mu| = {abs(mu)} exceeds 1")
    i, k = state.resolve(mode), state.resolve(noise_mode)
    if i == k:
        raise InvalidArgument("noise mode must differ from the attenuated mode")
    if not state.is_vacuum(noise_mode):
        raise ContractViolation(f"noise mode {state.labels[k]!r} is not in vacuum")
    nu = math.sqrt(max(0.0, 1.0 - abs(mu) ** 2))
    n = state.n_modes
    A = np.eye(n, dtype=complex)
    A[i, i] = mu
    A[i, k] = nu
    A[k, i] = -nu
    A[k, k] = mu.conjugate()
    return _transform(state, A, np.zeros((n, n), dtype=complex))


def cross_correlation(state, mode_a, mode_b, extra_phase=0.0):
    """``<a^dagger b> * exp(i extra_phase)``."""
    ia, ib = state.resolve(mode_a), state.resolve(mode_b)
    return complex(state.normal[ia, ib]) * cmath.exp(1j * extra_phase)
