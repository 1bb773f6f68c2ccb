"""Single-mode two-crystal induced-coherence chain.

The first crystal squeezes ``(b_s, b_i)``, the idler then passes an object
with complex amplitude transmissivity ``mu``, and the second crystal squeezes
the attenuated idler together with a fresh signal input ``c_s``. The two
signal outputs ``s1`` (mode ``b_s``) and ``s2`` (mode ``c_s``) are compared.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import InvalidArgument, UndefinedCoherence
from .modes import (
    ModeId,
    MomentState,
    SqueezerCoeffs,
    apply_loss,
    apply_two_mode_squeezer,
    cross_correlation,
)


@dataclass(frozen=True)
class SingleModeSetup:
    """Gain ``r`` gives ``|U| = cosh r`` and ``|V| = sinh r``.

    ``v_phase`` is the argument of V in the first crystal (``pi/2`` puts V on
    the imaginary axis); the second crystal's V carries an extra
    ``pump_phase_diff``.
    """

    gain: float
    mu: complex = 1.0
    pump_phase_diff: float = 0.0
    v_phase: float = math.pi / 2

    def __post_init__(self):
        if not math.isfinite(self.gain) or self.gain < 0:
            raise InvalidArgument(f"gain must be finite and >= 0, got {self.gain}")
        if abs(self.mu) > 1.0:
            raise InvalidArgument(f"|mu| must be <= 1, got {abs(self.mu)}")

    def crystal_coeffs(self, extra_phase=0.0):
        return SqueezerCoeffs.from_gain(self.gain, self.v_phase + extra_phase)


class Chain(NamedTuple):
    state: MomentState
    s1: ModeId
    s2: ModeId


def build_chain(setup):
    state = MomentState.vacuum(("b_s", "b_i", "c_s", "f"))
    b_s, b_i, c_s, f = (state.mode(k) for k in state.labels)
    state = apply_two_mode_squeezer(state, b_s, b_i, setup.crystal_coeffs())
    state = apply_loss(state, b_i, setup.mu, f)
    state = apply_two_mode_squeezer(
        state, c_s, b_i, setup.crystal_coeffs(setup.pump_phase_diff)
    )
    return Chain(state, b_s, c_s)


def signal_fluxes(setup):
    chain = build_chain(setup)
    return chain.state.photon_number(chain.s1), chain.state.photon_number(chain.s2)


def complex_coherence(setup):
    """Normalised ``<a_s1^dagger a_s2>`` from the moment chain."""
    chain = build_chain(setup)
    n1 = chain.state.photon_number(chain.s1)
    n2 = chain.state.photon_number(chain.s2)
    if n1 <= 0.0 or n2 <= 0.0:
        raise UndefinedCoherence(
            f"signal fluxes ({n1}, {n2}) leave the degree of coherence undefined"
        )
    return cross_correlation(chain.state, chain.s1, chain.s2) / math.sqrt(n1 * n2)


def degree_of_coherence(setup):
    return abs(complex_coherence(setup))


def closed_form_coherence(gain, mu):
    """``|mu| sqrt((1 + |V|^2) / (1 + |mu|^2 |V|^2))`` with ``|V| = sinh(gain)``."""
    v2 = math.sinh(gain) ** 2
    m = abs(mu)
    return m * math.sqrt((1.0 + v2) / (1.0 + m * m * v2))


def low_gain_coherence(mu):
    """Vanishing-gain limit of :func:`degree_of_coherence`: simply ``|mu|``."""
    if abs(mu) > 1.0:
        raise InvalidArgument(f"|mu| must be <= 1, got {abs(mu)}")
    return abs(mu)


def coherence_phase(setup):
    return cmath.phase(complex_coherence(setup))
