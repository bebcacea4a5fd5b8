"""End-to-end acceptance checks.

Each test pins one externally meaningful behavior of the package at its
stated tolerance: transport simulation against the closed forms, energy
arithmetic exactness, synthesis soundness against an independent
frequency-sweep oracle, certificate audits, the shape of the norm/energy
trade-off on the pendulum fixture, and bytewise determinism of the CLI.
"""

import json
import math
import time

import numpy as np

from hopfilter import (cli, energy, hop_net, lmi_synthesis, mjls_core,
                       tradeoff)

P_GRID = (0.4, 0.5, 0.6, 0.7)
L_GRID = tuple(range(1, 9))
N_HOPS = 10


def scalar_fixture():
    mode = mjls_core.ModeMatrices(A=[[0.5]], J=[[1.0]], Cy=[[1.0]],
                                  Ey=[[0.5]], Cz=[[1.0]], Ez=[[0.0]])
    return mjls_core.LtiPlant(mode=mode, ts=1.0)


def frequency_sweep_peak(md, Bf, Df, points):
    """Independent oracle: dense unit-circle sweep of the error system."""
    Bf = np.atleast_2d(np.asarray(Bf, dtype=float))
    Df = np.atleast_2d(np.asarray(Df, dtype=float))
    n = md.n
    Ae = np.block([[md.A, np.zeros((n, n))],
                   [Bf @ md.Cy, md.A - Bf @ md.Cy]])
    Be = np.vstack([md.J, Bf @ md.Ey])
    T = md.Cz - Df @ md.Cy
    Ce = np.hstack([T, -T])
    De = md.Ez - Df @ md.Ey
    eye = np.eye(2 * n)
    peak = 0.0
    for w in np.linspace(0.0, np.pi, points):
        G = Ce @ np.linalg.solve(np.exp(1j * w) * eye - Ae, Be) + De
        peak = max(peak, float(np.linalg.svd(G, compute_uv=False)[0]))
    return peak


# 1 -- Monte Carlo delivery rate vs closed form on the full grid

def test_delivery_rate_matches_closed_form_on_grid():
    start = time.monotonic()
    trials = 100_000
    for p in P_GRID:
        for L in L_GRID:
            cfg = hop_net.HopNetworkConfig(p=p, L=L, N=N_HOPS)
            stats = hop_net.monte_carlo(cfg, trials, seed=20_000 + 100 * L)
            ps = hop_net.success_probability(cfg)
            sigma = math.sqrt(ps * (1.0 - ps) / trials)
            assert abs(stats.delivery_rate - ps) <= 4.0 * sigma, (p, L)
    assert time.monotonic() - start < 30.0


# 2 -- receptions track p times the transmissions

def test_reception_ratio_tracks_link_probability():
    start = time.monotonic()
    for p in P_GRID:
        cfg = hop_net.HopNetworkConfig(p=p, L=2, N=N_HOPS)
        stats = hop_net.monte_carlo(cfg, 1_000_000, seed=31_337)
        ratio = stats.mean_rx / stats.mean_tx
        assert 0.99 * p <= ratio <= 1.01 * p, p
    assert time.monotonic() - start < 60.0


# 3 -- transmissions vs the telescoped expectation

def test_mean_transmissions_match_expectation():
    points = [(0.4, 1), (0.4, 8), (0.5, 2), (0.5, 5),
              (0.6, 3), (0.6, 7), (0.7, 4), (0.7, 6)]
    for p, L in points:
        cfg = hop_net.HopNetworkConfig(p=p, L=L, N=N_HOPS)
        stats = hop_net.monte_carlo(cfg, 1_000_000, seed=9_000 + 7 * L)
        q = 1.0 - (1.0 - p) ** L
        e_tx = (q / p) * (1.0 - q ** N_HOPS) / (1.0 - q)
        assert abs(stats.mean_tx - e_tx) <= 0.01 * e_tx, (p, L)


# 4 -- energy arithmetic is exact

def test_energy_arithmetic_exact():
    params = energy.RadioEnergyParams()
    unit = energy.component_energies(params)
    assert unit.e_sw_once == 11.25e-6  # 3 V * 15 mA * 250 us, on the nose

    doubled = energy.component_energies(
        energy.RadioEnergyParams(packet_bytes=50))
    assert doubled.e_tx_packet == 2.0 * unit.e_tx_packet
    assert doubled.e_rx_packet == 2.0 * unit.e_rx_packet
    assert doubled.e_sw_once == unit.e_sw_once

    rng = np.random.default_rng(4)
    for p, L in [(1.0, 1), (0.5, 2), (0.3, 4)]:
        out = hop_net.simulate_packet(
            hop_net.HopNetworkConfig(p, L, N_HOPS), rng)
        bd = energy.packet_energy(out, params)
        assert bd.total == bd.e_tx + bd.e_rx + bd.e_sw


# 5 -- synthesis against the frequency-sweep oracle, and bound soundness

def test_synthesis_matches_oracle_and_dominates_runs():
    model = mjls_core.lossless_model(scalar_fixture())
    res = lmi_synthesis.synthesize(model)
    peak = frequency_sweep_peak(model.modes[0], res.gains.Bf[0],
                                res.gains.Df[0], points=10_000)
    assert abs(res.hinf_norm - peak) <= 0.02 * peak

    rng = np.random.default_rng(555)
    modes = np.zeros(250, dtype=int)
    for _ in range(100):
        w = rng.normal(size=(250, model.m))
        tr = mjls_core.simulate_filtered(model, res.gains, modes, w)
        assert mjls_core.empirical_l2_gain([tr]) <= res.gamma


# 6 -- certain delivery degenerates to the single-mode design

def test_degenerate_loss_consistency():
    plant = scalar_fixture()
    single = lmi_synthesis.synthesize(mjls_core.lossless_model(plant))
    sure = lmi_synthesis.synthesize(mjls_core.build_loss_model(plant, 1.0))
    assert abs(sure.hinf_norm - single.hinf_norm) <= 1e-6 * single.hinf_norm

    for p_s in (0.9, 1.0):
        model = (mjls_core.build_loss_model(plant, p_s) if p_s < 1.0
                 else mjls_core.lossless_model(plant))
        res = lmi_synthesis.synthesize(model)
        gamma = lmi_synthesis.analyze_fixed_filter(model, res.gains)
        assert abs(gamma - res.gamma) <= 1e-6 * res.gamma, p_s


# 7 -- certificates audit clean, and forced violations are caught

def test_certificate_audits():
    import dataclasses

    plant = scalar_fixture()
    pend = mjls_core.fixture_pendulum()
    cases = [mjls_core.lossless_model(plant),
             mjls_core.build_loss_model(plant, 0.6),
             mjls_core.build_loss_model(plant, 0.8),
             mjls_core.lossless_model(pend),
             mjls_core.build_loss_model(pend, 0.95),
             mjls_core.build_loss_model(pend, 0.9220)]
    for model in cases:
        res = lmi_synthesis.synthesize(model)
        report = lmi_synthesis.check_certificate(model, res)
        assert report.passed
        assert min(mg for _, mg in report.block_margins) >= res.epsilon / 2
        assert report.coupling_max <= -res.epsilon / 2

    model = cases[1]
    res = lmi_synthesis.synthesize(model)
    bad_x = dataclasses.replace(res, X=res.X + 1e3 * np.eye(model.n))
    assert not lmi_synthesis.check_certificate(model, bad_x).passed
    bad_h = dataclasses.replace(
        res, H=tuple(Hi + 1e3 * np.eye(model.n) for Hi in res.H))
    assert not lmi_synthesis.check_certificate(model, bad_h).passed


# 8 -- the pendulum trade-off has the advertised shape

def test_tradeoff_shape_on_pendulum():
    start = time.monotonic()
    plant = mjls_core.fixture_pendulum()
    points = tradeoff.sweep(tradeoff.SweepConfig(
        plant=plant, p_grid=P_GRID, l_values=tuple(range(1, 13)), N=N_HOPS))
    assert points[0].lossless_norm > 0.0

    by_p = {p: [pt for pt in points if pt.p == p] for p in P_GRID}
    for p, rows in by_p.items():
        rows.sort(key=lambda pt: pt.L)
        fs = [pt for pt in rows if pt.feasible]
        assert fs, p
        # once feasible, always feasible as the cap grows
        first = min(pt.L for pt in fs)
        assert all(pt.feasible for pt in rows if pt.L >= first), p

        uh = [pt.upsilon_h for pt in fs]
        assert all(b <= a * (1.0 + 1e-6) for a, b in zip(uh, uh[1:])), p
        ue = [pt.upsilon_e for pt in rows]
        assert all(b >= a for a, b in zip(ue, ue[1:])), p
        assert all(v >= 1.0 - 1e-9 for v in uh), p

        l_h = min(pt.L for pt in fs if pt.upsilon_h <= 1.05)
        l_e = min(pt.L for pt in rows if pt.upsilon_e >= 0.95)
        assert l_h <= l_e, (p, l_h, l_e)

    # both ratios reach 1 in the large-cap limit
    limit_l = {0.4: 32, 0.5: 24, 0.6: 18, 0.7: 14}
    baseline = lmi_synthesis.synthesize(mjls_core.lossless_model(plant))
    for p, L in limit_l.items():
        cfg = hop_net.HopNetworkConfig(p=p, L=L, N=N_HOPS)
        p_s = hop_net.success_probability(cfg)
        res = lmi_synthesis.synthesize(mjls_core.build_loss_model(plant, p_s))
        uh = tradeoff.upsilon_h(res.hinf_norm, baseline.hinf_norm)
        assert abs(uh - 1.0) <= 1e-3, p
        ue = tradeoff.upsilon_e(cfg, energy.RadioEnergyParams())
        assert 1.0 - ue <= 1e-3, p
    assert time.monotonic() - start < 300.0


# 9 -- the CLI is bytewise deterministic

def test_cli_outputs_are_byte_identical(tmp_path):
    runs = []
    for name in ("one", "two"):
        workdir = tmp_path / name
        workdir.mkdir()
        stats = workdir / "stats.json"
        trial_csv = workdir / "trials.csv"
        assert cli.main(["netsim", "-p", "0.5", "-L", "3", "-N", "10",
                         "--trials", "100000", "--seed", "1729",
                         "--out", str(stats)]) == 0
        assert cli.main(["netsim", "-p", "0.6", "-L", "2", "-N", "10",
                         "--trials", "5000", "--seed", "1729",
                         "--out", str(trial_csv)]) == 0
        runs.append((stats.read_bytes(), trial_csv.read_bytes(),
                     (workdir / "stats.json.manifest.json").read_bytes()))
    assert runs[0] == runs[1]

    cfg_path = tmp_path / "grid.json"
    cfg_path.write_text(json.dumps({
        "plant": "pendulum", "p_grid": [0.5, 0.7], "l_values": [1, 4, 8],
        "N": 10, "trials": 20000, "seed": 1729}), encoding="utf-8")
    sweeps = []
    for name in ("one", "two"):
        workdir = tmp_path / name
        out = workdir / "sweep.csv"
        svg = workdir / "sweep.svg"
        assert cli.main(["sweep", "--config", str(cfg_path),
                         "--out", str(out), "--svg", str(svg)]) == 0
        sweeps.append((out.read_bytes(), svg.read_bytes(),
                       (workdir / "sweep.csv.manifest.json").read_bytes()))
    assert sweeps[0] == sweeps[1]
