"""Discrete-time Markov jump linear systems and packet-loss plumbing.

The plant family handled here is

    x(k+1) = A(m) x(k) + J(m) w(k)
    y(k)   = Cy(m) x(k) + Ey(m) w(k)      (measured output)
    z(k)   = Cz(m) x(k) + Ez(m) w(k)      (estimation target)

where the mode m(k) follows a finite Markov chain.  The estimator side
never sees the mode itself, only the *cluster* it belongs to, so filter
realizations are indexed by cluster.  Packet loss over a network is
modeled by a two-mode chain ("received" / "lost") where the lost mode
has a zeroed measurement channel and the filter coasts on its own
prediction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np
from scipy.linalg import expm

from .errors import (
    DimensionMismatch,
    InvalidProbability,
    NonStochastic,
    ParseError,
    ZeroDisturbance,
)

# Constructors produce exact copies; tolerances only absorb I/O round-trip
# noise, never modeling slack.
UNIFORM_TOL = 1e-12


def _as_matrix(value, name):
    a = np.asarray(value, dtype=float)
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be a 2-D matrix, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise DimensionMismatch(f"{name} contains non-finite entries")
    a = a.copy()
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModeMatrices:
    """One mode of the jump system: (A, J, Cy, Ey, Cz, Ez)."""

    A: np.ndarray
    J: np.ndarray
    Cy: np.ndarray
    Ey: np.ndarray
    Cz: np.ndarray
    Ez: np.ndarray

    def __post_init__(self):
        for name in ("A", "J", "Cy", "Ey", "Cz", "Ez"):
            object.__setattr__(self, name, _as_matrix(getattr(self, name), name))
        n, m, q, r = self.n, self.m, self.q, self.r
        if self.A.shape != (n, n):
            raise DimensionMismatch("A must be square")
        for name, shape in (("J", (n, m)), ("Cy", (q, n)), ("Ey", (q, m)),
                            ("Cz", (r, n)), ("Ez", (r, m))):
            if getattr(self, name).shape != shape:
                raise DimensionMismatch(
                    f"{name} has shape {getattr(self, name).shape}, expected {shape}")

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.J.shape[1]

    @property
    def q(self):
        return self.Cy.shape[0]

    @property
    def r(self):
        return self.Cz.shape[0]


@dataclass(frozen=True)
class MarkovChain:
    """Row-stochastic transition matrix P[i, j] = Prob(next=j | now=i)."""

    P: np.ndarray

    def __post_init__(self):
        P = _as_matrix(self.P, "P")
        if P.shape[0] != P.shape[1]:
            raise DimensionMismatch("transition matrix must be square")
        if np.any(P < 0.0) or np.any(P > 1.0):
            raise NonStochastic("transition probabilities must lie in [0, 1]")
        rowsums = P.sum(axis=1)
        if np.any(np.abs(rowsums - 1.0) > UNIFORM_TOL):
            raise NonStochastic(f"rows must sum to 1, got {rowsums}")
        object.__setattr__(self, "P", P)

    @property
    def n_modes(self):
        return self.P.shape[0]

    @property
    def is_bernoulli(self):
        """True iff all rows agree, i.e. mode draws are i.i.d."""
        return bool(np.all(np.abs(self.P - self.P[0]) <= UNIFORM_TOL))

    @property
    def bernoulli_row(self):
        if not self.is_bernoulli:
            raise NonStochastic("chain rows differ; no common mode distribution")
        return self.P[0]


@dataclass(frozen=True)
class ClusterMap:
    """Total assignment of each mode index to a cluster index (0-based)."""

    assignment: tuple
    n_clusters: int

    def __post_init__(self):
        assignment = tuple(int(c) for c in self.assignment)
        object.__setattr__(self, "assignment", assignment)
        if len(assignment) == 0:
            raise DimensionMismatch("cluster assignment must cover at least one mode")
        if any(c < 0 or c >= self.n_clusters for c in assignment):
            raise DimensionMismatch("cluster index out of range")
        for l in range(self.n_clusters):
            if l not in assignment:
                raise DimensionMismatch(f"cluster {l} is empty")

    def members(self, cluster):
        return tuple(i for i, c in enumerate(self.assignment) if c == cluster)


@dataclass(frozen=True)
class MjlsModel:
    """Complete jump system: per-mode matrices, chain, and cluster map."""

    modes: tuple
    chain: MarkovChain
    clusters: ClusterMap

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        if len(self.modes) == 0:
            raise DimensionMismatch("model needs at least one mode")
        first = self.modes[0]
        for md in self.modes[1:]:
            if (md.n, md.m, md.q, md.r) != (first.n, first.m, first.q, first.r):
                raise DimensionMismatch("all modes must share (n, m, q, r)")
        if self.chain.n_modes != len(self.modes):
            raise DimensionMismatch("chain size differs from mode count")
        if len(self.clusters.assignment) != len(self.modes):
            raise DimensionMismatch("cluster map size differs from mode count")

    @property
    def n(self):
        return self.modes[0].n

    @property
    def m(self):
        return self.modes[0].m

    @property
    def q(self):
        return self.modes[0].q

    @property
    def r(self):
        return self.modes[0].r

    @property
    def n_modes(self):
        return len(self.modes)

    @property
    def n_clusters(self):
        return self.clusters.n_clusters

    @property
    def is_cluster_uniform(self):
        """True iff A, Cy, Cz are constant within every cluster, which is
        what lets a single filter realization serve the whole cluster."""
        for l in range(self.n_clusters):
            ref = self.modes[self.clusters.members(l)[0]]
            for i in self.clusters.members(l):
                md = self.modes[i]
                for name in ("A", "Cy", "Cz"):
                    if np.max(np.abs(getattr(md, name) - getattr(ref, name))) > UNIFORM_TOL:
                        return False
        return True

    def cluster_matrices(self, cluster):
        """Representative (A, Cy, Cz) of a cluster (its first member)."""
        ref = self.modes[self.clusters.members(cluster)[0]]
        return ref.A, ref.Cy, ref.Cz


@dataclass(frozen=True)
class LtiPlant:
    """A single-mode plant plus its sample period in seconds."""

    mode: ModeMatrices
    ts: float

    def __post_init__(self):
        ts = float(self.ts)
        if not (np.isfinite(ts) and ts > 0):
            raise DimensionMismatch("sample period must be positive")
        object.__setattr__(self, "ts", ts)


@dataclass(frozen=True)
class Trajectory:
    """Simulated signals; x has one extra (terminal) row."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    zf: np.ndarray
    e: np.ndarray
    w: np.ndarray
    modes: np.ndarray


def bernoulli_chain(probs):
    """Chain whose rows all equal `probs` (i.i.d. mode draws).

    The input vector must be nonnegative and sum to 1 within 1e-9; it is
    renormalized exactly so the row-stochasticity invariant (1e-12) holds
    even for inputs carrying round-trip noise.
    """
    p = np.asarray(probs, dtype=float).ravel()
    if p.size == 0 or not np.all(np.isfinite(p)) or np.any(p < 0.0):
        raise NonStochastic("probabilities must be finite and nonnegative")
    s = p.sum()
    if abs(s - 1.0) > 1e-9:
        raise NonStochastic(f"probabilities sum to {s!r}, expected 1")
    row = p / s
    return MarkovChain(np.tile(row, (p.size, 1)))


def build_loss_model(plant, p_s):
    """Two-mode packet-loss model around a single plant.

    Mode 0 ("received") is the plant itself; mode 1 ("lost") has Cy = 0 and
    Ey = 0 so the filter's innovation vanishes and it coasts.  The chain is
    i.i.d. with delivery probability `p_s`, and each mode is its own cluster
    (the receiver knows whether a packet arrived).
    """
    p_s = float(p_s)
    if not (np.isfinite(p_s) and 0.0 <= p_s <= 1.0):
        raise InvalidProbability(f"delivery probability {p_s!r} outside [0, 1]")
    received = plant.mode
    lost = replace(received,
                   Ey=np.zeros_like(received.Ey),
                   Cy=np.zeros_like(received.Cy))
    chain = bernoulli_chain([p_s, 1.0 - p_s])
    return MjlsModel((received, lost), chain, ClusterMap((0, 1), 2))


def lossless_model(plant):
    """Single-mode model (the no-loss baseline for ratio metrics)."""
    return MjlsModel((plant.mode,), bernoulli_chain([1.0]), ClusterMap((0,), 1))


def sample_mode_sequence(chain, horizon, seed):
    """Mode indices theta_0..theta_{horizon-1}, deterministic per seed.

    For i.i.d. chains every step (including the first) is drawn from the
    common row; otherwise the walk starts uniformly over modes.
    """
    horizon = int(horizon)
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    rng = np.random.default_rng(seed)
    n = chain.n_modes
    if chain.is_bernoulli:
        return rng.choice(n, size=horizon, p=chain.P[0])
    seq = np.empty(horizon, dtype=np.int64)
    seq[0] = rng.integers(n)
    for k in range(1, horizon):
        seq[k] = rng.choice(n, p=chain.P[seq[k - 1]])
    return seq


def simulate_filtered(model, gains, modes, w, x0=None, xf0=None):
    """Run the plant and the cluster-indexed observer over a mode sequence.

    The observer applied at step k uses the cluster of the *true* mode:

        x_f(k+1) = A[l] x_f(k) + Bf[l] (y(k) - Cy[l] x_f(k))
        z_f(k)   = Cz[l] x_f(k) + Df[l] (y(k) - Cy[l] x_f(k))

    Returns a Trajectory with e(k) = z(k) - z_f(k).  Linear in
    (w, x0, xf0) for a fixed mode sequence.
    """
    modes = np.asarray(modes, dtype=np.int64)
    horizon = modes.shape[0]
    n, m, q, r = model.n, model.m, model.q, model.r
    w = np.asarray(w, dtype=float)
    if w.ndim == 1:
        w = w[:, None]
    if w.shape != (horizon, m):
        raise DimensionMismatch(f"w has shape {w.shape}, expected {(horizon, m)}")
    if np.any(modes < 0) or np.any(modes >= model.n_modes):
        raise DimensionMismatch("mode index out of range")
    if len(gains.Bf) != model.n_clusters:
        raise DimensionMismatch("gain cluster count differs from the model")
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).reshape(n)
    xf = np.zeros(n) if xf0 is None else np.asarray(xf0, dtype=float).reshape(n)

    x = np.zeros((horizon + 1, n))
    y = np.zeros((horizon, q))
    z = np.zeros((horizon, r))
    zf = np.zeros((horizon, r))
    x[0] = x0
    for k in range(horizon):
        md = model.modes[modes[k]]
        l = model.clusters.assignment[modes[k]]
        y[k] = md.Cy @ x[k] + md.Ey @ w[k]
        z[k] = md.Cz @ x[k] + md.Ez @ w[k]
        innov = y[k] - gains.Cy[l] @ xf
        zf[k] = gains.Cz[l] @ xf + gains.Df[l] @ innov
        xf = gains.A[l] @ xf + gains.Bf[l] @ innov
        x[k + 1] = md.A @ x[k] + md.J @ w[k]
    return Trajectory(x=x, y=y, z=z, zf=zf, e=z - zf, w=w, modes=modes)


def empirical_l2_gain(trajectories):
    """Worst observed (sum ||e||^2) / (sum ||w||^2) over the given runs.

    This is a finite-horizon lower-bound witness for the squared
    disturbance-to-error gain, so it can never exceed a valid certificate.
    """
    trajectories = list(trajectories)
    if not trajectories:
        raise ZeroDisturbance("no trajectories given")
    worst = 0.0
    for tr in trajectories:
        den = float(np.sum(tr.w * tr.w))
        if den == 0.0:
            raise ZeroDisturbance("trajectory has zero disturbance energy")
        worst = max(worst, float(np.sum(tr.e * tr.e)) / den)
    return worst


def zoh_discretize(a_c, b_c, ts):
    """Zero-order-hold discretization via one block matrix exponential."""
    a_c = np.asarray(a_c, dtype=float)
    b_c = np.asarray(b_c, dtype=float)
    n, m = b_c.shape
    blk = np.zeros((n + m, n + m))
    blk[:n, :n] = a_c
    blk[:n, n:] = b_c
    e = expm(blk * float(ts))
    return e[:n, :n], e[:n, n:]


def fixture_pendulum():
    """The committed 4-state rotary inverted pendulum test plant.

    States are [arm angle, pendulum angle, arm rate, pendulum rate]; both
    joint encoders are measured (sensor noise enters through Ey), the
    estimation target is the arm angle, and the disturbance vector is
    [load torque, arm sensor noise, pendulum sensor noise].  Matrices
    were produced once by zero-order-hold discretization at 50 ms of a
    linearized upright pendulum (see tests for the generating parameters)
    and are shipped frozen in data/pendulum.json; the open loop is
    unstable (spectral radius about 1.56).
    """
    path = resources.files("hopfilter").joinpath("data/pendulum.json")
    with path.open("r", encoding="utf-8") as f:
        return plant_from_dict(json.load(f))


# ---------------------------------------------------------------------------
# JSON schema:
#   {"n":, "m":, "q":, "r":,
#    "modes": [{"A": [[...]], "J":, "Cy":, "Ey":, "Cz":, "Ez":}, ...],
#    "chain": [[...]], "clusters": [0, 1, ...]}
# plus "ts_s" for plant files (which are single-mode model files).
# Matrices are row-major lists of decimal literals; clusters are 0-based.

def model_to_dict(model):
    return {
        "n": model.n, "m": model.m, "q": model.q, "r": model.r,
        "modes": [
            {name: getattr(md, name).tolist()
             for name in ("A", "J", "Cy", "Ey", "Cz", "Ez")}
            for md in model.modes
        ],
        "chain": model.chain.P.tolist(),
        "clusters": list(model.clusters.assignment),
    }


def model_from_dict(data):
    try:
        n, m, q, r = (int(data[k]) for k in ("n", "m", "q", "r"))
        modes = tuple(
            ModeMatrices(A=md["A"], J=md["J"], Cy=md["Cy"], Ey=md["Ey"],
                         Cz=md["Cz"], Ez=md["Ez"])
            for md in data["modes"]
        )
        chain = MarkovChain(np.asarray(data["chain"], dtype=float))
        assignment = tuple(int(c) for c in data["clusters"])
        n_clusters = (max(assignment) + 1) if assignment else 0
        model = MjlsModel(modes, chain, ClusterMap(assignment, n_clusters))
    except (KeyError, TypeError, IndexError) as exc:
        raise ParseError(f"bad model structure: {exc!r}") from exc
    except (DimensionMismatch, NonStochastic) as exc:
        raise ParseError(f"inconsistent model data: {exc}") from exc
    if (model.n, model.m, model.q, model.r) != (n, m, q, r):
        raise ParseError("declared (n, m, q, r) do not match the matrices")
    return model


def plant_to_dict(plant):
    d = model_to_dict(lossless_model(plant))
    d["ts_s"] = plant.ts
    return d


def plant_from_dict(data):
    model = model_from_dict(data)
    if model.n_modes != 1:
        raise ParseError("a plant file must contain exactly one mode")
    if "ts_s" not in data:
        raise ParseError("a plant file must carry 'ts_s'")
    try:
        return LtiPlant(mode=model.modes[0], ts=float(data["ts_s"]))
    except DimensionMismatch as exc:
        raise ParseError(str(exc)) from exc


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(model_to_dict(model), f, indent=1, sort_keys=True)
        f.write("\n")


def load_model(path):
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from exc
    return model_from_dict(data)


def save_plant(plant, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(plant_to_dict(plant), f, indent=1, sort_keys=True)
        f.write("\n")


def load_plant(path):
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from exc
    return plant_from_dict(data)
