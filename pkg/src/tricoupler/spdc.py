"""Type-II down-conversion channels of the coupler and the two-photon output state.

A horizontally polarized pump in supermode 0 or 1 splits into an H signal
and a V idler photon. Only channels whose y-parities multiply to an even
function survive, so a symmetric pump feeds equal-parity signal/idler pairs
and the antisymmetric pump feeds mixed pairs. Each channel carries the
amplitude

    C = scale * I * sinc(dk L / 2) / (n_s n_i) * exp(-i dk L / 2)

with I the triple-overlap of the unit-normalized fields and
dk = beta_p - beta_s - beta_i - K. Every physical prefactor common to all
channels (pump amplitude, d24, length-time product, sqrt(lam_s lam_i)) is
folded into ``scale`` and drops out of every normalized quantity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .material import MaterialModel, Polarization
from .modesolver import ChannelMode, CouplerGeometry, solve_channel_modes
from .quadrature import integrate, integrate_symmetric

H, V = Polarization.H, Polarization.V
PORTS = ("I", "II", "III")


class UnsupportedPumpError(ValueError):
    pass


class DegenerateStateError(ArithmeticError):
    pass


class ContractError(ValueError):
    pass


@dataclass(frozen=True)
class ProcessSpec:
    pump_mode: int
    signal_mode: int
    idler_mode: int
    case: str
    index: int
    designated: bool = True
    pump_pol: Polarization = H
    signal_pol: Polarization = H
    idler_pol: Polarization = V

    @property
    def label(self) -> str:
        return f"{self.case}{self.index}"

    def parity_allowed(self) -> bool:
        return (self.pump_mode + self.signal_mode + self.idler_mode) % 2 == 0


# Pump in mode 0: five parity-allowed pairs, the first three form the
# entangled triple; (0, 2) and (2, 0) are tracked as cross-talk.
_CASE_A = [(0, 0), (1, 1), (2, 2), (0, 2), (2, 0)]
_CASE_B = [(0, 1), (1, 0), (1, 2), (2, 1)]


def enumerate_processes(pump_mode: int):
    if pump_mode == 0:
        return [ProcessSpec(0, s, i, "A", j + 1, designated=j < 3) for j, (s, i) in enumerate(_CASE_A)]
    if pump_mode == 1:
        return [ProcessSpec(1, s, i, "B", j + 1) for j, (s, i) in enumerate(_CASE_B)]
    raise UnsupportedPumpError(f"pump mode {pump_mode} is not supported (use 0 or 1)")


def designated_processes(pump_mode: int):
    return [p for p in enumerate_processes(pump_mode) if p.designated]


def idler_wavelength(pump_wavelength, signal_wavelength):
    inv = 1.0 / pump_wavelength - 1.0 / signal_wavelength
    if not inv > 0:
        raise ValueError(f"signal {signal_wavelength} um gives no positive idler wavelength")
    return 1.0 / inv


@dataclass(frozen=True, eq=False)
class ModeSet:
    """Channel modes at the pump, signal and idler wavelengths (indexed by mode number)."""

    pump_wavelength: float
    signal_wavelength: float
    idler_wavelength: float
    pump: tuple
    signal: tuple
    idler: tuple

    def triple(self, spec: ProcessSpec):
        try:
            return self.pump[spec.pump_mode], self.signal[spec.signal_mode], self.idler[spec.idler_mode]
        except IndexError:
            raise ValueError(f"mode table lacks a mode required by {spec.label}") from None


def solve_mode_set(material: MaterialModel, geometry: CouplerGeometry, pump_wavelength, signal_wavelength,
                   solver=None, verify=True):
    """Pump modes 0/1 (H) plus the three H signal and V idler supermodes.

    ``solver(wavelength, pol, n_modes, exact)`` may be supplied to reuse
    cached solutions; it defaults to a direct channel-mode solve.
    """
    if solver is None:
        solver = lambda lam, pol, n, exact: solve_channel_modes(material, geometry, lam, pol, n, exact, verify)
    lam_i = idler_wavelength(pump_wavelength, signal_wavelength)
    return ModeSet(
        pump_wavelength, signal_wavelength, lam_i,
        tuple(solver(pump_wavelength, H, 2, False)),
        tuple(solver(signal_wavelength, H, 3, True)),
        tuple(solver(lam_i, V, 3, True)),
    )


def qpm_frequency(spec: ProcessSpec, modes: ModeSet) -> float:
    """Grating frequency K = 2 pi (n_p/lam_p - n_s/lam_s - n_i/lam_i) that phase-matches ``spec``."""
    p, s, i = modes.triple(spec)
    return p.beta - s.beta - i.beta


def phase_mismatch(spec: ProcessSpec, modes: ModeSet, grating_K: float) -> float:
    return qpm_frequency(spec, modes) - grating_K


def overlap_integral(spec: ProcessSpec, modes: ModeSet) -> float:
    """Triple overlap of the unit-normalized pump, signal and idler fields (um^-1)."""
    fields = modes.triple(spec)
    ys = [m.y_mode for m in fields]
    zs = [m.z_mode for m in fields]
    y1, y2, y3 = ys[0].interfaces
    y_end = max(y.extent for y in ys)
    z_lo = min(z.breakpoints[0] for z in zs)
    z_hi = max(z.breakpoints[-1] for z in zs)
    b = zs[0].depth_b
    iy = integrate_symmetric(lambda t: ys[0](t) * ys[1](t) * ys[2](t), [0.0, y1, y2, y3, y_end])
    iz = integrate(lambda t: zs[0](t) * zs[1](t) * zs[2](t), [z_lo, -b, 0.0, z_hi])
    return iy * iz


def sinc(x):
    """Unnormalized sinc, sin(x)/x with sinc(0) = 1."""
    return np.sinc(np.asarray(x) / np.pi)


def coefficient(spec: ProcessSpec, modes: ModeSet, grating_K: float, length_um: float,
                scale: float = 1.0, overlap: Optional[float] = None) -> complex:
    if not length_um > 0:
        raise ValueError("interaction length must be positive")
    dk = phase_mismatch(spec, modes, grating_K)
    I = overlap_integral(spec, modes) if overlap is None else overlap
    _, s, i = modes.triple(spec)
    return amplitude(I, s.n_eff * i.n_eff, dk, length_um, scale)


def amplitude(overlap, n_product, delta_k, length_um, scale=1.0):
    x = delta_k * length_um / 2
    return complex(scale * overlap * float(sinc(x)) / n_product * np.exp(-1j * x))


@dataclass(frozen=True)
class ProcessResult:
    spec: ProcessSpec
    K_required: float
    delta_k: float
    overlap_I: float
    N: float
    coefficient_C: complex
    efficiency: float = 0.0


def evaluate_processes(pump_mode, modes: ModeSet, grating_K, length_um, scale=1.0, processes=None):
    """ProcessResult per channel; efficiencies normalized to the strongest channel."""
    processes = enumerate_processes(pump_mode) if processes is None else processes
    out = []
    for spec in processes:
        _, s, i = modes.triple(spec)
        I = overlap_integral(spec, modes)
        K_req = qpm_frequency(spec, modes)
        C = coefficient(spec, modes, grating_K, length_um, scale, overlap=I)
        out.append(ProcessResult(spec, K_req, K_req - grating_K, I, s.n_eff * i.n_eff, C))
    peak = max(abs(r.coefficient_C) ** 2 for r in out)
    if peak > 0:
        out = [replace(r, efficiency=abs(r.coefficient_C) ** 2 / peak) for r in out]
    return out


def degenerate_qpm_frequencies(material, geometry, pump_wavelength, pump_mode=0, solver=None, verify=True):
    """K_required of the designated channels at degeneracy (lam_s = lam_i = 2 lam_p)."""
    modes = solve_mode_set(material, geometry, pump_wavelength, 2 * pump_wavelength, solver, verify)
    return [qpm_frequency(p, modes) for p in designated_processes(pump_mode)]


# ---------------------------------------------------------------------------
# two-photon state


@dataclass(frozen=True)
class Term:
    spec: ProcessSpec
    amplitude: complex
    signal: object  # mode number or port label
    idler: object

    @property
    def ket(self) -> str:
        return f"|H_s{self.signal}, V_i{self.idler}>"


@dataclass(frozen=True)
class BiphotonState:
    terms: tuple
    normalized: bool = False
    basis: str = "mode"

    @property
    def amplitudes(self):
        return np.array([t.amplitude for t in self.terms], dtype=complex)

    @property
    def probabilities(self):
        return np.abs(self.amplitudes) ** 2

    def normalize(self) -> "BiphotonState":
        total = math.sqrt(float(np.sum(self.probabilities)))
        if total == 0:
            raise DegenerateStateError("all channel amplitudes vanish")
        return replace(self, terms=tuple(replace(t, amplitude=t.amplitude / total) for t in self.terms),
                       normalized=True)


def state_from_amplitudes(specs, amplitudes, normalize=True) -> BiphotonState:
    terms = tuple(Term(s, complex(a), s.signal_mode, s.idler_mode) for s, a in zip(specs, amplitudes))
    state = BiphotonState(terms)
    return state.normalize() if normalize else state


def assemble_state(pump_mode, modes: ModeSet, grating_K, length_um, scale=1.0, normalize=True):
    """Output state over the designated channels: the three-term triple for a
    symmetric pump, the four mixed-parity pairs for the antisymmetric one."""
    specs = designated_processes(pump_mode)
    amps = [coefficient(s, modes, grating_K, length_um, scale) for s in specs]
    if not any(abs(a) > 0 for a in amps):
        raise DegenerateStateError("all channel amplitudes vanish")
    return state_from_amplitudes(specs, amps, normalize)


def entanglement_metrics(state: BiphotonState, threshold: float = 0.01):
    """Fidelity to the uniform superposition, entropy of the term weights (bits), dimensionality."""
    p = state.probabilities
    if abs(p.sum() - 1.0) > 1e-12:
        raise ContractError(f"state is not normalized (sum |amp|^2 = {p.sum()!r})")
    amps = state.amplitudes
    D = len(amps)
    fidelity = float(abs(amps.sum()) ** 2 / D)
    nz = p[p > 0]
    # a lone term is a product state; p = 1 can round to just above 1
    entropy = 0.0 if nz.size == 1 else max(float(-(nz * np.log2(nz)).sum()), 0.0)
    return {
        "fidelity_to_uniform": fidelity,
        "schmidt_entropy": entropy,
        "dimensionality": int(np.count_nonzero(p > threshold)),
    }


def port_mapping(state: BiphotonState, inverse: bool = False) -> BiphotonState:
    """Relabel supermodes 0/1/2 as output guides I/II/III (or back with ``inverse``).

    The highest-beta supermode exits the guide with the highest propagation
    constant; the relabeling is a permutation, so amplitudes are untouched.
    """
    if inverse:
        if state.basis != "port":
            raise ValueError("inverse mapping needs a port-basis state")
        lookup = {p: m for m, p in enumerate(PORTS)}
        basis = "mode"
    else:
        if state.basis != "mode":
            raise ValueError("forward mapping needs a mode-basis state")
        lookup = dict(enumerate(PORTS))
        basis = "port"
    terms = tuple(replace(t, signal=lookup[t.signal], idler=lookup[t.idler]) for t in state.terms)
    return replace(state, terms=terms, basis=basis)


STATE_HEADER = "case,term,signal_mode,idler_mode,re_amp,im_amp,prob"


def state_csv(state: BiphotonState) -> str:
    lines = [STATE_HEADER]
    for t in state.terms:
        a = t.amplitude
        lines.append(f"{t.spec.case},{t.spec.index},{t.signal},{t.idler},"
                     f"{a.real:.17g},{a.imag:.17g},{abs(a) ** 2:.17g}")
    return "\n".join(lines) + "\n"
