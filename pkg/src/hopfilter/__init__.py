"""Filter synthesis under packet loss, and the retransmission
energy/accuracy trade-off for multi-hop sensor links."""

__version__ = "0.1.0"

from . import errors
from .energy import (ComponentEnergies, EnergyBreakdown, RadioEnergyParams,
                     component_energies, energy_from_counts,
                     expected_packet_energy, load_radio_params, packet_energy,
                     power_per_time_unit)
from .hop_net import (ExpectedCounts, HopNetworkConfig, PacketOutcome,
                      TransportStats, expected_counts, monte_carlo,
                      simulate_packet, success_probability)
from .lmi_synthesis import (CertificateReport, FilterGains, SynthesisResult,
                            analyze_fixed_filter, check_certificate,
                            default_epsilon, gains_from_dict, gains_to_dict,
                            result_to_dict, synthesize)
from .mjls_core import (ClusterMap, LtiPlant, MarkovChain, MjlsModel,
                        ModeMatrices, Trajectory, bernoulli_chain,
                        build_loss_model, empirical_l2_gain,
                        fixture_pendulum, load_model, load_plant,
                        lossless_model, sample_mode_sequence, save_model,
                        save_plant, simulate_filtered, zoh_discretize)
from .tradeoff import (SweepConfig, TradeoffPoint, sweep, upsilon_e,
                       upsilon_e_mc, upsilon_h, write_csv)

__all__ = [
    "__version__", "errors",
    # mjls_core
    "ModeMatrices", "MarkovChain", "ClusterMap", "MjlsModel", "LtiPlant",
    "Trajectory", "bernoulli_chain", "build_loss_model", "lossless_model",
    "sample_mode_sequence", "simulate_filtered", "empirical_l2_gain",
    "zoh_discretize", "fixture_pendulum", "load_model", "save_model",
    "load_plant", "save_plant",
    # lmi_synthesis
    "FilterGains", "SynthesisResult", "CertificateReport", "synthesize",
    "analyze_fixed_filter", "check_certificate", "default_epsilon",
    "gains_to_dict", "gains_from_dict", "result_to_dict",
    # hop_net
    "HopNetworkConfig", "PacketOutcome", "TransportStats", "ExpectedCounts",
    "success_probability", "expected_counts", "simulate_packet",
    "monte_carlo",
    # energy
    "RadioEnergyParams", "ComponentEnergies", "EnergyBreakdown",
    "component_energies", "energy_from_counts", "expected_packet_energy",
    "packet_energy", "power_per_time_unit", "load_radio_params",
    # tradeoff
    "TradeoffPoint", "SweepConfig", "upsilon_h", "upsilon_e", "upsilon_e_mc",
    "sweep", "write_csv",
]
