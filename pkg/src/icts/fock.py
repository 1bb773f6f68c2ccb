"""Brute-force truncated Fock-space oracle for the single-mode chain.

States are dense vectors over ``m`` modes, each truncated at ``cutoff``
photons. Unitaries are applied as exact exponentials of the truncated
generators (``scipy.sparse.linalg.expm_multiply``). Loss is purified with a
vacuum ancilla and a beam splitter, so everything stays a pure state and
expectation values are read off directly.

This module deliberately shares no code with :mod:`icts.modes`.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .errors import ContractViolation, CutoffTooSmall, InvalidArgument

LEAKAGE_TOL = 1e-6
NORM_TOL = 1e-9
DEFAULT_CUTOFF = 12
MAX_CUTOFF = 20


@lru_cache(maxsize=32)
def _ladder(n_modes, cutoff, k):
    """Annihilation operator of mode ``k`` on the full tensor space (CSR)."""
    d = cutoff + 1
    a = sp.diags(np.sqrt(np.arange(1, d, dtype=float)), 1, format="csr")
    ops = [sp.identity(d, format="csr")] * n_modes
    ops[k] = a
    out = ops[0]
    for op in ops[1:]:
        out = sp.kron(out, op, format="csr")
    return out.astype(complex)


@lru_cache(maxsize=32)
def _occupations(n_modes, cutoff):
    """Photon number of each mode for every basis index, shape ``(dim, m)``."""
    d = cutoff + 1
    grid = np.indices((d,) * n_modes).reshape(n_modes, -1).T
    return grid


@dataclass(frozen=True, eq=False)
class FockState:
    n_modes: int
    cutoff: int
    amplitudes: np.ndarray
    leakage: float = 0.0

    @classmethod
    def vacuum(cls, n_modes, cutoff=DEFAULT_CUTOFF):
        if cutoff < 1:
            raise InvalidArgument("cutoff must be >= 1")
        psi = np.zeros((cutoff + 1) ** n_modes, dtype=complex)
        psi[0] = 1.0
        return cls(n_modes, cutoff, psi)

    def annihilation(self, k):
        return _ladder(self.n_modes, self.cutoff, k)

    @property
    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def boundary_population(self):
        """Probability of any mode sitting at the truncation edge."""
        occ = _occupations(self.n_modes, self.cutoff)
        edge = np.any(occ == self.cutoff, axis=1)
        return float(np.sum(np.abs(self.amplitudes[edge]) ** 2))

    def population(self, mode, n):
        occ = _occupations(self.n_modes, self.cutoff)
        return float(np.sum(np.abs(self.amplitudes[occ[:, mode] == n]) ** 2))

    def amplitude(self, *occupation):
        idx = np.ravel_multi_index(occupation, (self.cutoff + 1,) * self.n_modes)
        return complex(self.amplitudes[idx])

    def expect(self, op):
        psi = self.amplitudes
        return complex(np.vdot(psi, op @ psi))

    def correlation(self, a, b):
        """``<a_a^dagger a_b>``."""
        A, B = self.annihilation(a), self.annihilation(b)
        return complex(np.vdot(A @ self.amplitudes, B @ self.amplitudes))

    def photon_number(self, k):
        return self.correlation(k, k).real


def _evolve(state, generator):
    psi = expm_multiply(generator.tocsc(), state.amplitudes)
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > NORM_TOL:
        raise ContractViolation(f"norm drifted to {norm!r} under a unitary")
    out = FockState(state.n_modes, state.cutoff, psi)
    leakage = max(state.leakage, out.boundary_population())
    out = FockState(state.n_modes, state.cutoff, psi, leakage)
    if leakage >= LEAKAGE_TOL:
        raise CutoffTooSmall(
            f"truncation leakage {leakage:.2e} at cutoff {state.cutoff}",
            leakage=leakage,
            suggested_cutoff=min(2 * state.cutoff, MAX_CUTOFF),
        )
    return out


def two_mode_squeeze(state, a, b, r, phase=0.0):
    """``exp(xi a^dagger b^dagger - xi^* a b)`` with ``xi = r exp(i phase)``."""
    if a == b:
        raise InvalidArgument("two_mode_squeeze needs distinct modes")
    if r == 0:
        return state
    xi = r * np.exp(1j * phase)
    A, B = state.annihilation(a), state.annihilation(b)
    pair = (A @ B).conj().T
    gen = xi * pair - np.conj(xi) * (A @ B)
    return _evolve(state, gen)


def beam_splitter_loss(state, mode, ancilla, mu):
    """Transmit amplitude ``mu`` of ``mode``; the rest goes to a vacuum ancilla."""
    if not 0.0 <= mu <= 1.0:
        raise InvalidArgument(f"mu must lie in [0, 1], got {mu}")
    if mode == ancilla:
        raise InvalidArgument("ancilla must differ from the lossy mode")
    if 1.0 - state.population(ancilla, 0) > 1e-12:
        raise ContractViolation("ancilla mode is not in vacuum")
    theta = math.acos(mu)
    if theta == 0.0:
        return state
    A, F = state.annihilation(mode), state.annihilation(ancilla)
    gen = theta * (A.conj().T @ F - F.conj().T @ A)
    return _evolve(state, gen)


@dataclass(frozen=True)
class OracleReport:
    flux_s1: float
    flux_s2: float
    cross_real: float
    cross_imag: float
    g1: float
    leakage: float
    cutoff: int

    @property
    def cross(self):
        return complex(self.cross_real, self.cross_imag)

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)


def _run_chain(r, mu, cutoff):
    # modes: 0 = b_s, 1 = idler, 2 = c_s, 3 = loss ancilla
    state = FockState.vacuum(4, cutoff)
    state = two_mode_squeeze(state, 0, 1, r)
    state = beam_splitter_loss(state, 1, 3, mu)
    state = two_mode_squeeze(state, 2, 1, r)
    n1, n2 = state.photon_number(0), state.photon_number(2)
    cross = state.correlation(0, 2)
    g1 = abs(cross) / math.sqrt(n1 * n2) if n1 > 0 and n2 > 0 else float("nan")
    return OracleReport(n1, n2, cross.real, cross.imag, g1, state.leakage, cutoff)


def oracle_induced_coherence(r, mu, cutoff=DEFAULT_CUTOFF, escalate=True):
    """Squeeze, lose, squeeze in Fock space and read off fluxes and ``|g1|``.

    With ``escalate`` the cutoff is doubled (capped at ``MAX_CUTOFF``) until
    the truncation leakage drops below ``LEAKAGE_TOL``.
    """
    while True:
        try:
            return _run_chain(r, mu, cutoff)
        except CutoffTooSmall as exc:
            if not escalate or cutoff >= MAX_CUTOFF:
                raise
            cutoff = exc.suggested_cutoff
