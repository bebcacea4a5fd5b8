"""The (p, L) sweep joining filtering quality to radio energy.

For every grid point the retransmission cap L fixes an end-to-end
delivery probability, the synthesis returns the best certified filter
norm at that loss level, and the transport expectations price the cap in
joules.  Two ratios make the numbers comparable across points: the norm
relative to the no-loss baseline (>= 1, falls toward 1 as L grows) and
the expected energy relative to the uncapped transport (<= 1, rises
toward 1).  The energy ratio reduces to S/N with S the expected number
of hops crossed, so it is exact and independent of the radio constants;
it is still evaluated through the energy model to keep the audit loop
closed.
"""

import io
from dataclasses import dataclass

from . import energy as energy_mod
from . import hop_net, lmi_synthesis, mjls_core
from .errors import (BaselineInfeasible, IllConditioned, Infeasible,
                     SolverFailure, ZeroBaseline)

CSV_COLUMNS = ("p", "L", "N", "P_S", "lossless_norm", "hinf_norm",
               "upsilon_h", "expected_tx", "expected_rx",
               "expected_energy_j", "power_w", "upsilon_e", "feasible")


@dataclass(frozen=True)
class TradeoffPoint:
    """One sweep row; norm fields are None when synthesis is infeasible."""

    p: float
    L: int
    N: int
    P_S: float
    lossless_norm: float
    hinf_norm: object
    upsilon_h: object
    expected_tx: float
    expected_rx: float
    expected_energy_j: float
    power_w: float
    upsilon_e: float
    feasible: bool


@dataclass(frozen=True)
class SweepConfig:
    """Grid description: which plant, which (p, L) points, which radio."""

    plant: object
    p_grid: tuple
    l_values: tuple
    N: int = 10
    ts: float = None
    radio: object = None
    trials: int = 0
    seed: int = 1729

    def __post_init__(self):
        if len(self.p_grid) == 0 or len(self.l_values) == 0:
            raise ValueError("sweep grids must be nonempty")
        if any(int(l) != l or l < 1 for l in self.l_values):
            raise ValueError("retransmission caps must be integers >= 1")
        if self.trials < 0:
            raise ValueError("trials must be >= 0 (0 disables Monte Carlo)")

    @property
    def ts_s(self):
        return self.plant.ts if self.ts is None else self.ts

    @property
    def radio_params(self):
        return (energy_mod.RadioEnergyParams() if self.radio is None
                else self.radio)


def upsilon_h(lossy_norm, lossless_norm):
    """Norm ratio against the no-loss baseline (norms, not squared bounds)."""
    if lossless_norm <= 0.0:
        raise ZeroBaseline(
            f"baseline norm {lossless_norm} cannot normalize anything")
    return lossy_norm / lossless_norm


def upsilon_e(config, params):
    """Closed-form expected-energy ratio: capped over uncapped transport."""
    capped = energy_mod.expected_packet_energy(
        hop_net.expected_counts(config), params).total
    unlimited = energy_mod.expected_packet_energy(
        hop_net.expected_counts(
            hop_net.HopNetworkConfig(p=config.p, L=None, N=config.N,
                                     count_ack=config.count_ack)),
        params).total
    return capped / unlimited


def upsilon_e_mc(config, params, trials, seed):
    """Monte Carlo estimate of upsilon_e and its standard error.

    Only the capped numerator is simulated; the uncapped denominator
    stays closed-form (exact, and free of a heavy-tail simulation).
    """
    tx, rx, _ = hop_net.per_trial_counts(config, trials, seed)
    unit = energy_mod.component_energies(params)
    per_trial = (tx * (unit.e_tx_packet + 2.0 * unit.e_sw_once)
                 + rx * unit.e_rx_packet)
    unlimited = energy_mod.expected_packet_energy(
        hop_net.expected_counts(
            hop_net.HopNetworkConfig(p=config.p, L=None, N=config.N,
                                     count_ack=config.count_ack)),
        params).total
    stderr = (float(per_trial.var()) / trials) ** 0.5 / unlimited
    return float(per_trial.mean()) / unlimited, stderr


def sweep(cfg):
    """Run the full grid; returns rows sorted by (p, L).

    The lossless baseline is synthesized once and shared.  Points whose
    loss level admits no certificate are emitted with feasible=False and
    empty norm fields instead of aborting the sweep.
    """
    plant = cfg.plant
    params = cfg.radio_params
    try:
        baseline = lmi_synthesis.synthesize(mjls_core.lossless_model(plant))
    except (Infeasible, SolverFailure, IllConditioned) as exc:
        raise BaselineInfeasible(
            f"no certificate for the lossless plant: {exc}") from exc

    points = []
    order = [(p, int(l)) for p in sorted(cfg.p_grid)
             for l in sorted(cfg.l_values)]
    for index, (p, l) in enumerate(order):
        net = hop_net.HopNetworkConfig(p=p, L=l, N=cfg.N)
        p_s = hop_net.success_probability(net)
        if cfg.trials > 0:
            stats = hop_net.monte_carlo(
                net, cfg.trials, _kernel_seed(cfg.seed, index))
            e_tx, e_rx, e_sw = stats.mean_tx, stats.mean_rx, stats.mean_sw
        else:
            counts = hop_net.expected_counts(net)
            e_tx, e_rx, e_sw = counts.e_tx, counts.e_rx, counts.e_sw
        breakdown = energy_mod.energy_from_counts(e_tx, e_rx, e_sw, params)
        power = energy_mod.power_per_time_unit(breakdown.total, cfg.ts_s)

        try:
            result = lmi_synthesis.synthesize(
                mjls_core.build_loss_model(plant, p_s))
            norm = result.hinf_norm
            ratio = upsilon_h(norm, baseline.hinf_norm)
            ok = True
        except (Infeasible, SolverFailure, IllConditioned):
            norm = None
            ratio = None
            ok = False
        points.append(TradeoffPoint(
            p=p, L=l, N=cfg.N, P_S=p_s,
            lossless_norm=baseline.hinf_norm,
            hinf_norm=norm, upsilon_h=ratio,
            expected_tx=e_tx, expected_rx=e_rx,
            expected_energy_j=breakdown.total, power_w=power,
            upsilon_e=upsilon_e(net, params), feasible=ok))
    return points


def _kernel_seed(seed, index):
    # one independent 64-bit substream key per grid point
    from ._kernels import trial_key

    return trial_key(seed, index)


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def csv_rows(points):
    yield ",".join(CSV_COLUMNS)
    for pt in points:
        yield ",".join(_cell(getattr(pt, col)) for col in CSV_COLUMNS)


def write_csv(points, path):
    with open(path, "w", encoding="utf-8", newline="") as f:
        for row in csv_rows(points):
            f.write(row + "\n")


def csv_text(points):
    buf = io.StringIO()
    for row in csv_rows(points):
        buf.write(row + "\n")
    return buf.getvalue()
