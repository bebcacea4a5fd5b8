"""Radio energy accounting for MICA2-class transceivers.

Three unit costs drive everything: sending one packet at a given output
power, receiving one packet, and switching the radio between reception
and transmission.  Multiplying them by the event counts produced by
`hop_net` gives joules per packet; dividing an expected packet energy by
the sampling period gives average power.
"""

import json
from dataclasses import dataclass, field

from .errors import ParseError, UnknownPowerLevel

# Transceiver datasheets quote currents but no air time; a 38.4 kbit/s
# link (4800 bytes/s) supplies the missing timescale.  All absolute
# joule figures scale with byte_time; the energy RATIO metric does not
# (every component is proportional to the same event counts).
DEFAULT_BYTE_TIME_S = 1.0 / 4800.0


@dataclass(frozen=True)
class RadioEnergyParams:
    """Electrical constants of one radio unit.

    i_tx_by_dbm maps output power in dBm to the transmit current in
    amperes; only listed levels are valid (no extrapolation).
    """

    voltage: float = 3.0
    i_tx_by_dbm: dict = field(default_factory=lambda: {0: 0.020})
    i_rx: float = 0.015
    i_sw: float = 0.015
    t_sw: float = 250e-6
    byte_time: float = DEFAULT_BYTE_TIME_S
    packet_bytes: int = 25
    p_out_dbm: int = 0

    def __post_init__(self):
        for label, value in (("voltage", self.voltage), ("i_rx", self.i_rx),
                             ("i_sw", self.i_sw), ("t_sw", self.t_sw),
                             ("byte_time", self.byte_time)):
            if value <= 0:
                raise ValueError(f"{label} must be positive, got {value}")
        if int(self.packet_bytes) != self.packet_bytes or self.packet_bytes < 1:
            raise ValueError("packet_bytes must be a positive integer")
        if not self.i_tx_by_dbm:
            raise ValueError("at least one transmit power level is required")
        if any(v <= 0 for v in self.i_tx_by_dbm.values()):
            raise ValueError("transmit currents must be positive")


@dataclass(frozen=True)
class ComponentEnergies:
    """Unit energies: one packet sent, one packet received, one switch."""

    e_tx_packet: float
    e_rx_packet: float
    e_sw_once: float


@dataclass(frozen=True)
class EnergyBreakdown:
    """Joules attributed to each activity; total is their exact sum."""

    e_tx: float
    e_rx: float
    e_sw: float

    @property
    def total(self):
        return self.e_tx + self.e_rx + self.e_sw


def component_energies(params):
    """Per-event energies at the configured output power."""
    if params.p_out_dbm not in params.i_tx_by_dbm:
        known = sorted(params.i_tx_by_dbm)
        raise UnknownPowerLevel(
            f"no transmit current for {params.p_out_dbm} dBm (known: {known})")
    i_tx = params.i_tx_by_dbm[params.p_out_dbm]
    # charge per packet first, voltage last: this association keeps the
    # default constants on their decimal values (11.25 uJ per switch, etc.)
    return ComponentEnergies(
        e_tx_packet=params.voltage * ((i_tx * params.packet_bytes)
                                      * params.byte_time),
        e_rx_packet=params.voltage * ((params.i_rx * params.packet_bytes)
                                      * params.byte_time),
        e_sw_once=params.voltage * (params.i_sw * params.t_sw),
    )


def energy_from_counts(tx, rx, sw, params):
    """Joules for arbitrary (possibly fractional/expected) event counts."""
    unit = component_energies(params)
    return EnergyBreakdown(
        e_tx=tx * unit.e_tx_packet,
        e_rx=rx * unit.e_rx_packet,
        e_sw=sw * unit.e_sw_once,
    )


def packet_energy(outcome, params):
    """Energy breakdown of one simulated packet outcome."""
    return energy_from_counts(outcome.tx_count, outcome.rx_count,
                              outcome.sw_count, params)


def expected_packet_energy(counts, params):
    """Expected joules per packet from closed-form expected counts."""
    return energy_from_counts(counts.e_tx, counts.e_rx, counts.e_sw, params)


def power_per_time_unit(expected_energy_j, ts_s):
    """Average power in watts: expected packet energy over the period."""
    if ts_s <= 0:
        raise ValueError(f"sampling period must be positive, got {ts_s}")
    return expected_energy_j / ts_s


def radio_params_from_dict(data):
    """Build params from config JSON (currents in mA, as documented)."""
    try:
        i_tx = {int(k): float(v) * 1e-3 for k, v in data["i_tx_ma_by_dbm"].items()}
        return RadioEnergyParams(
            voltage=float(data["voltage_v"]),
            i_tx_by_dbm=i_tx,
            i_rx=float(data["i_rx_ma"]) * 1e-3,
            i_sw=float(data["i_sw_ma"]) * 1e-3,
            t_sw=float(data["t_sw_s"]),
            byte_time=float(data["byte_time_s"]),
            packet_bytes=int(data["packet_bytes"]),
            p_out_dbm=int(data.get("p_out_dbm", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad radio parameters: {exc!r}") from exc


def radio_params_to_dict(params):
    return {
        "voltage_v": params.voltage,
        "i_tx_ma_by_dbm": {str(k): v * 1e3 for k, v in
                           sorted(params.i_tx_by_dbm.items())},
        "i_rx_ma": params.i_rx * 1e3,
        "i_sw_ma": params.i_sw * 1e3,
        "t_sw_s": params.t_sw,
        "byte_time_s": params.byte_time,
        "packet_bytes": params.packet_bytes,
        "p_out_dbm": params.p_out_dbm,
    }


def load_radio_params(path):
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from exc
    return radio_params_from_dict(data)
