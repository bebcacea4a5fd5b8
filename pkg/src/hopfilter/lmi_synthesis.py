"""Filter synthesis and analysis via linear matrix inequalities.

For a cluster-uniform jump model with i.i.d. mode draws (identical chain
rows p_j), a cluster-indexed observer with gains (Bf[l], Df[l]) certifies
a squared worst-case disturbance-to-error gain below gamma iff there are
symmetric H_i, X and rectangular F_l, K_l with, for every mode i in every
cluster l (writing Al, Cyl, Czl for the cluster's shared matrices):

    [ H_i        .         .      .  ]
    [ 0          g I       .      .  ]   > 0        (one per mode)
    [ X Al+F Cyl X Ji+F Eyi X      .  ]
    [ Czl-K Cyl  Ezi-K Eyi  0      I  ]

    sum_j p_j H_j - X < 0                           (coupling)

with block dimensions (n, m, n, r); the gains are recovered as
Bf[l] = -X^{-1} F_l and Df[l] = K_l.  gamma enters linearly, so it is
minimized directly as the objective — no bisection.

Strict inequalities are realized as >= eps*I / <= -eps*I.  The solver is
asked for a 2*eps margin so that certificates re-checked at eps/2 keep a
comfortable headroom over interior-point residuals; the default eps is
2e-9 * (1 + max |A| entry), small enough that degenerate problems whose
true optimum is zero still report norms below 1e-4.

Modes with exactly zero probability contribute nothing to the coupling
constraint and get no per-mode inequality: they are unreachable, and
constraining them would spuriously inflate gamma (e.g. the "lost" mode of
a loss model at delivery probability 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    Infeasible,
    IllConditioned,
    NonBernoulliChain,
    NonUniformCluster,
    SolverFailure,
)

EPS_BASE = 2e-9
# check_certificate accepts margins down to eps/2; the bridge targets
# 2*eps when solving, so roughly a 4x guard band over solver noise.
SOLVE_GUARD = 2.0
COND_LIMIT = 1e10

_SQRT2 = math.sqrt(2.0)


def default_epsilon(model):
    amax = max(float(np.max(np.abs(md.A))) for md in model.modes)
    return EPS_BASE * (1.0 + amax)


# ---------------------------------------------------------------------------
# Solver-agnostic conic container

class VarBlock:
    """One named decision block mapped onto consecutive scalar variables.

    Symmetric n x n blocks are stored svec-style (upper triangle, row
    major) with off-diagonal scalars carrying a sqrt(2) factor so the
    scalar 2-norm equals the Frobenius norm; rectangular blocks are stored
    row major; scalars occupy a single slot.
    """

    def __init__(self, name, kind, shape, offset):
        self.name = name
        self.kind = kind  # 'sym' | 'rect' | 'scalar'
        self.shape = shape
        self.offset = offset
        if kind == "sym":
            self.size = shape[0] * (shape[0] + 1) // 2
        elif kind == "rect":
            self.size = shape[0] * shape[1]
        else:
            self.size = 1

    def basis(self):
        """Yield (scalar index, basis matrix) pairs for this block."""
        if self.kind == "sym":
            n = self.shape[0]
            k = self.offset
            for a in range(n):
                for b in range(a, n):
                    B = np.zeros((n, n))
                    if a == b:
                        B[a, a] = 1.0
                    else:
                        B[a, b] = B[b, a] = 1.0 / _SQRT2
                    yield k, B
                    k += 1
        elif self.kind == "rect":
            rows, cols = self.shape
            k = self.offset
            for a in range(rows):
                for b in range(cols):
                    B = np.zeros((rows, cols))
                    B[a, b] = 1.0
                    yield k, B
                    k += 1
        else:
            yield self.offset, np.ones((1, 1))

    def mat(self, u):
        """Reassemble the block's matrix value from the scalar vector."""
        if self.kind == "scalar":
            return float(u[self.offset])
        if self.kind == "rect":
            return u[self.offset:self.offset + self.size].reshape(self.shape)
        n = self.shape[0]
        X = np.zeros((n, n))
        k = self.offset
        for a in range(n):
            for b in range(a, n):
                if a == b:
                    X[a, a] = u[k]
                else:
                    X[a, b] = X[b, a] = u[k] / _SQRT2
                k += 1
        return X

    def flat(self, value):
        """Inverse of mat(): scalar slice encoding the given block value."""
        if self.kind == "scalar":
            return np.array([float(value)])
        value = np.asarray(value, dtype=float)
        if self.kind == "rect":
            return value.reshape(-1).copy()
        n = self.shape[0]
        out = np.empty(self.size)
        k = 0
        for a in range(n):
            for b in range(a, n):
                out[k] = value[a, a] if a == b else value[a, b] * _SQRT2
                k += 1
        return out


class _Constraint:
    def __init__(self, dim, sense):
        self.dim = dim
        self.sense = sense  # 'pos': M >= eps I, 'neg': M <= -eps I
        self.const = np.zeros((dim, dim))
        self.coeffs = {}  # scalar var index -> dense symmetric d x d

    def _coeff(self, k):
        S = self.coeffs.get(k)
        if S is None:
            S = np.zeros((self.dim, self.dim))
            self.coeffs[k] = S
        return S


class ConicProblem:
    """Affine LMI feasibility/minimization data, independent of any solver.

    Constraints are symmetric matrices affine in the scalar variables,
    required >= eps*I ('pos') or <= -eps*I ('neg'); the objective is a
    single variable to minimize.
    """

    def __init__(self, epsilon):
        self.epsilon = float(epsilon)
        self.blocks = {}
        self.order = []
        self.n_scalars = 0
        self.constraints = []
        self.objective = None  # block name
        self.fixed = {}  # block name -> flat values

    # -- variables ----------------------------------------------------
    def add_var(self, name, kind, shape=None):
        if name in self.blocks:
            raise ValueError(f"duplicate variable {name}")
        vb = VarBlock(name, kind, shape, self.n_scalars)
        self.blocks[name] = vb
        self.order.append(name)
        self.n_scalars += vb.size
        return vb

    def minimize(self, name):
        self.objective = name

    # -- constraints ---------------------------------------------------
    def new_constraint(self, dim, sense):
        self.constraints.append(_Constraint(dim, sense))
        return len(self.constraints) - 1

    def place_const(self, ci, r0, c0, mat):
        con = self.constraints[ci]
        mat = np.atleast_2d(np.asarray(mat, dtype=float))
        rows, cols = mat.shape
        con.const[r0:r0 + rows, c0:c0 + cols] += mat
        if r0 != c0:
            con.const[c0:c0 + cols, r0:r0 + rows] += mat.T

    def place_product(self, ci, r0, c0, name, right=None, scale=1.0):
        """Add scale * VAR @ right into block (r0, c0) and its mirror.

        With right=None and r0 == c0 the (necessarily symmetric) block is
        placed once on the diagonal.
        """
        con = self.constraints[ci]
        vb = self.blocks[name]
        for k, B in vb.basis():
            blk = B if right is None else B @ right
            blk = blk * scale
            rows, cols = blk.shape
            S = con._coeff(k)
            S[r0:r0 + rows, c0:c0 + cols] += blk
            if r0 != c0:
                S[c0:c0 + cols, r0:r0 + rows] += blk.T

    def place_scalar_eye(self, ci, r0, dim, name):
        con = self.constraints[ci]
        vb = self.blocks[name]
        S = con._coeff(vb.offset)
        S[r0:r0 + dim, r0:r0 + dim] += np.eye(dim)

    # -- evaluation / fixing --------------------------------------------
    def evaluate(self, ci, u):
        con = self.constraints[ci]
        M = con.const.copy()
        for k, S in con.coeffs.items():
            M += u[k] * S
        return M

    def with_fixed(self, name, value):
        """Copy of the problem with one block pinned to a constant."""
        other = ConicProblem(self.epsilon)
        other.blocks = self.blocks
        other.order = self.order
        other.n_scalars = self.n_scalars
        other.constraints = self.constraints
        other.objective = self.objective if self.objective != name else None
        other.fixed = dict(self.fixed)
        other.fixed[name] = self.blocks[name].flat(value)
        return other


def solve_conic(problem, certify=None):
    """Run the interior-point backend and return (status, scalar vector).

    Columns that appear in no constraint belong to unconstrained slack
    variables (e.g. injection gains of a cluster with a zero measurement
    channel); they are excluded from the solve and reported as zero.
    Each constraint is rescaled so its largest coefficient is <= 1e3.

    The backend runs over a fixed (tolerance, KKT factorization) ladder.
    A point it reports 'optimal' is returned as-is.  A point it could not
    classify ('unknown' usually means the iteration stalled after the
    duality gap already closed) is kept only when the `certify` callback
    confirms it satisfies every inequality with slack; such points are
    labelled 'certified'.  The ladder is fixed, so results reproduce.
    """
    from cvxopt import matrix, solvers

    nvar = problem.n_scalars
    fixed_mask = np.zeros(nvar, dtype=bool)
    u_full = np.zeros(nvar)
    for name, flat in problem.fixed.items():
        vb = problem.blocks[name]
        fixed_mask[vb.offset:vb.offset + vb.size] = True
        u_full[vb.offset:vb.offset + vb.size] = flat

    eps = SOLVE_GUARD * problem.epsilon
    Gs, hs = [], []
    used = np.zeros(nvar, dtype=bool)
    for ci, con in enumerate(problem.constraints):
        d = con.dim
        C0 = con.const.copy()
        live = {}
        for k, S in con.coeffs.items():
            if fixed_mask[k]:
                C0 += u_full[k] * S
            elif np.any(S):
                live[k] = S
                used[k] = True
        scale = max(float(np.max(np.abs(C0))),
                    max((float(np.max(np.abs(S))) for S in live.values()),
                        default=0.0))
        factor = 1.0 if scale <= 1e3 else 1e3 / scale
        sgn = -1.0 if con.sense == "pos" else 1.0
        h = (C0 - eps * np.eye(d)) if con.sense == "pos" else (-C0 - eps * np.eye(d))
        hs.append(matrix(h * factor))
        cols = {k: (sgn * factor) * S.reshape(-1) for k, S in live.items()}
        Gs.append((d, cols))

    keep = np.flatnonzero(used & ~fixed_mask)
    if keep.size == 0:
        raise SolverFailure("no free variables appear in any constraint")
    col_of = {k: j for j, k in enumerate(keep)}
    Gmats = []
    for d, cols in Gs:
        G = np.zeros((d * d, keep.size))
        for k, col in cols.items():
            G[:, col_of[k]] = col
        Gmats.append(matrix(G))

    c = np.zeros(keep.size)
    if problem.objective is not None:
        obj_off = problem.blocks[problem.objective].offset
        if obj_off in col_of:
            c[col_of[obj_off]] = 1.0
    # The default Cholesky KKT solver is fast but can break down on
    # degenerate directions, and very tight tolerances can stall the
    # scaling update; walk a fixed ladder before giving up.
    last = "no attempt made"
    for tol in (1e-10, 1e-9, 1e-8):
        for kkt in (None, "ldl"):
            opts = {"show_progress": False, "abstol": tol, "reltol": tol,
                    "feastol": tol, "maxiters": 200}
            try:
                sol = solvers.sdp(matrix(c), Gs=Gmats, hs=hs, options=opts,
                                  kktsolver=kkt)
            except (ValueError, ArithmeticError, ZeroDivisionError) as exc:
                last = repr(exc)
                continue
            if sol["status"] == "primal infeasible":
                raise Infeasible("no certificate exists at this strictness")
            if sol["x"] is None:
                last = f"status {sol['status']!r}"
                continue
            u = u_full.copy()
            u[keep] = np.asarray(sol["x"]).ravel()
            if sol["status"] == "optimal":
                return "optimal", u
            if certify is not None and certify(u):
                return "certified", u
            last = f"status {sol['status']!r}"
    raise SolverFailure(f"conic backend gave no usable point ({last})")


# ---------------------------------------------------------------------------
# Domain results

@dataclass(frozen=True)
class FilterGains:
    """Per-cluster observer realization (model copies plus gains)."""

    A: tuple
    Cy: tuple
    Cz: tuple
    Bf: tuple
    Df: tuple

    def __post_init__(self):
        for name in ("A", "Cy", "Cz", "Bf", "Df"):
            mats = tuple(np.asarray(M, dtype=float) for M in getattr(self, name))
            if any(not np.all(np.isfinite(M)) for M in mats):
                raise DimensionMismatch(f"{name} contains non-finite entries")
            object.__setattr__(self, name, mats)
        counts = {len(getattr(self, name)) for name in ("A", "Cy", "Cz", "Bf", "Df")}
        if len(counts) != 1:
            raise DimensionMismatch("per-cluster tuples differ in length")

    @property
    def n_clusters(self):
        return len(self.Bf)


@dataclass(frozen=True)
class SynthesisResult:
    gains: FilterGains
    gamma: float
    hinf_norm: float
    H: tuple            # per mode (zero-probability modes excluded -> zeros)
    X: np.ndarray
    F: tuple            # per cluster
    K: tuple            # per cluster
    solver_status: str
    margin: float
    epsilon: float


@dataclass(frozen=True)
class CertificateReport:
    passed: bool
    block_margins: tuple   # (mode index, smallest eigenvalue) per per-mode LMI
    coupling_max: float    # largest eigenvalue of the coupling matrix
    epsilon: float


def _require_synthesizable(model):
    if not model.is_cluster_uniform:
        raise NonUniformCluster(
            "A, Cy, Cz must be constant within each cluster")
    if not model.chain.is_bernoulli:
        raise NonBernoulliChain("identical chain rows required")


def _build(model, epsilon, gains=None):
    """Shared LMI assembly.

    gains=None builds the synthesis program (variables F_l, K_l); with
    gains given, F_l is replaced by -X Bf[l] (still linear in X) and K_l
    by the constant Df[l], leaving (H_i, X, gamma) free.
    """
    _require_synthesizable(model)
    n, m, q, r = model.n, model.m, model.q, model.r
    p_row = model.chain.bernoulli_row
    prob = ConicProblem(epsilon)

    for i in range(model.n_modes):
        prob.add_var(f"H{i}", "sym", (n, n))
    prob.add_var("X", "sym", (n, n))
    if gains is None:
        for l in range(model.n_clusters):
            prob.add_var(f"F{l}", "rect", (n, q))
            prob.add_var(f"K{l}", "rect", (r, q))
    prob.add_var("gamma", "scalar")
    prob.minimize("gamma")

    active = []
    for l in range(model.n_clusters):
        Al, Cyl, Czl = model.cluster_matrices(l)
        for i in model.clusters.members(l):
            if p_row[i] == 0.0:
                continue  # unreachable mode: outside the certified dynamics
            active.append(i)
            md = model.modes[i]
            d = n + m + n + r
            o1, o2, o3 = n, n + m, n + m + n
            ci = prob.new_constraint(d, "pos")
            prob.place_product(ci, 0, 0, f"H{i}")
            prob.place_scalar_eye(ci, o1, m, "gamma")
            prob.place_product(ci, o2, o2, "X")
            prob.place_const(ci, o3, o3, np.eye(r))
            if gains is None:
                prob.place_product(ci, o2, 0, "X", right=Al)
                prob.place_product(ci, o2, 0, f"F{l}", right=Cyl)
                prob.place_product(ci, o2, o1, "X", right=md.J)
                prob.place_product(ci, o2, o1, f"F{l}", right=md.Ey)
                prob.place_const(ci, o3, 0, Czl)
                prob.place_product(ci, o3, 0, f"K{l}", right=-Cyl)
                prob.place_const(ci, o3, o1, md.Ez)
                prob.place_product(ci, o3, o1, f"K{l}", right=-md.Ey)
            else:
                Bf, Df = gains.Bf[l], gains.Df[l]
                prob.place_product(ci, o2, 0, "X", right=Al - Bf @ Cyl)
                prob.place_product(ci, o2, o1, "X", right=md.J - Bf @ md.Ey)
                prob.place_const(ci, o3, 0, Czl - Df @ Cyl)
                prob.place_const(ci, o3, o1, md.Ez - Df @ md.Ey)

    ci = prob.new_constraint(n, "neg")
    for j in range(model.n_modes):
        if p_row[j] > 0.0:
            prob.place_product(ci, 0, 0, f"H{j}", scale=float(p_row[j]))
    prob.place_product(ci, 0, 0, "X", scale=-1.0)
    return prob, tuple(active)


def assemble_synthesis_lmis(model, epsilon=None):
    """The synthesis program as a solver-agnostic ConicProblem."""
    if epsilon is None:
        epsilon = default_epsilon(model)
    prob, _ = _build(model, epsilon, gains=None)
    return prob


def synthesize(model, epsilon=None):
    """Minimize the certified squared gain and recover the filter.

    Raises Infeasible when no certificate exists (the error dynamics
    cannot be made mean-square stable at this loss level), SolverFailure
    on an inconclusive backend status, and IllConditioned instead of
    silently inverting a bad X.
    """
    if epsilon is None:
        epsilon = default_epsilon(model)
    prob, _ = _build(model, epsilon, gains=None)

    def _extract(u):
        X = prob.blocks["X"].mat(u)
        gamma = prob.blocks["gamma"].mat(u)
        H = tuple(prob.blocks[f"H{i}"].mat(u) for i in range(model.n_modes))
        F = tuple(prob.blocks[f"F{l}"].mat(u) for l in range(model.n_clusters))
        K = tuple(prob.blocks[f"K{l}"].mat(u) for l in range(model.n_clusters))
        return X, gamma, H, F, K

    def _slack_ok(u):
        X, gamma, H, F, K = _extract(u)
        mg, cmax = _certificate_margins(model, H, X, F, K, gamma)
        return min(v for _, v in mg) >= epsilon and cmax <= -epsilon

    status, u = solve_conic(prob, certify=_slack_ok)
    X, gamma, H, F, K = _extract(u)

    cond = float(np.linalg.cond(X))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise IllConditioned(f"certificate X has condition number {cond:.3e}")

    Bf, Df, As, Cys, Czs = [], [], [], [], []
    for l in range(model.n_clusters):
        Al, Cyl, Czl = model.cluster_matrices(l)
        As.append(Al.copy())
        Cys.append(Cyl.copy())
        Czs.append(Czl.copy())
        Bf.append(-np.linalg.solve(X, F[l]))
        Df.append(K[l].copy())
    gains = FilterGains(A=tuple(As), Cy=tuple(Cys), Cz=tuple(Czs),
                        Bf=tuple(Bf), Df=tuple(Df))
    block_margins, coupling_max = _certificate_margins(model, H, X, F, K, gamma)
    margin = min([mg for _, mg in block_margins] + [-coupling_max])
    return SynthesisResult(gains=gains, gamma=float(gamma),
                           hinf_norm=math.sqrt(max(gamma, 0.0)),
                           H=H, X=X, F=F, K=K, solver_status=status,
                           margin=float(margin), epsilon=float(epsilon))


def analyze_fixed_filter(model, gains, epsilon=None):
    """Least gamma certifiable for the *given* gains (H_i, X free).

    Substituting F_l = -X Bf[l] keeps the program linear; K_l is pinned
    at Df[l].  Raises Infeasible when the fixed filter is not mean-square
    stabilizing at this loss level.
    """
    if epsilon is None:
        epsilon = default_epsilon(model)
    if len(gains.Bf) != model.n_clusters:
        raise DimensionMismatch("gain cluster count differs from the model")
    prob, _ = _build(model, epsilon, gains=gains)
    Bfs = tuple(np.asarray(b, dtype=float) for b in gains.Bf)
    Dfs = tuple(np.asarray(d, dtype=float) for d in gains.Df)

    def _slack_ok(u):
        X = prob.blocks["X"].mat(u)
        gamma = prob.blocks["gamma"].mat(u)
        H = tuple(prob.blocks[f"H{i}"].mat(u) for i in range(model.n_modes))
        F = tuple(-X @ b for b in Bfs)
        mg, cmax = _certificate_margins(model, H, X, F, Dfs, gamma)
        return min(v for _, v in mg) >= epsilon and cmax <= -epsilon

    _, u = solve_conic(prob, certify=_slack_ok)
    return float(prob.blocks["gamma"].mat(u))


def _certificate_margins(model, H, X, F, K, gamma):
    """Direct re-evaluation of all inequalities from raw matrices.

    This path shares no assembly code with _build on purpose: it is the
    independent route used to audit solver output.
    """
    n, m, q, r = model.n, model.m, model.q, model.r
    p_row = model.chain.bernoulli_row

    margins = []
    for l in range(model.n_clusters):
        Al, Cyl, Czl = model.cluster_matrices(l)
        Fl, Kl = F[l], K[l]
        for i in model.clusters.members(l):
            if p_row[i] == 0.0:
                continue
            md = model.modes[i]
            S1 = X @ Al + Fl @ Cyl
            S2 = X @ md.J + Fl @ md.Ey
            T1 = Czl - Kl @ Cyl
            T2 = md.Ez - Kl @ md.Ey
            M = np.zeros((n + m + n + r, n + m + n + r))
            o1, o2, o3 = n, n + m, n + m + n
            M[:n, :n] = H[i]
            M[o1:o2, o1:o2] = gamma * np.eye(m)
            M[o2:o3, :n] = S1
            M[:n, o2:o3] = S1.T
            M[o2:o3, o1:o2] = S2
            M[o1:o2, o2:o3] = S2.T
            M[o2:o3, o2:o3] = X
            M[o3:, :n] = T1
            M[:n, o3:] = T1.T
            M[o3:, o1:o2] = T2
            M[o1:o2, o3:] = T2.T
            M[o3:, o3:] = np.eye(r)
            margins.append((i, float(np.linalg.eigvalsh(M)[0])))

    coupling = -X.copy()
    for j in range(model.n_modes):
        if p_row[j] > 0.0:
            coupling += p_row[j] * H[j]
    coupling_max = float(np.linalg.eigvalsh(coupling)[-1])
    return tuple(margins), coupling_max


def check_certificate(model, result, epsilon=None):
    """Numeric audit of a returned solution.

    Re-evaluates every inequality directly from the model and the
    certificate matrices: each per-mode block must have smallest
    eigenvalue >= eps/2 and the coupling matrix largest eigenvalue
    <= -eps/2.  Report only; never raises on a failed check.
    """
    _require_synthesizable(model)
    if epsilon is None:
        epsilon = result.epsilon
    margins, coupling_max = _certificate_margins(
        model, result.H, result.X, result.F, result.K, result.gamma)
    ok = all(mg >= epsilon / 2 for _, mg in margins) and coupling_max <= -epsilon / 2
    return CertificateReport(passed=bool(ok), block_margins=margins,
                             coupling_max=coupling_max, epsilon=float(epsilon))


# ---------------------------------------------------------------------------
# JSON forms (consumed by the CLI)

def gains_to_dict(gains):
    return {name: [M.tolist() for M in getattr(gains, name)]
            for name in ("A", "Cy", "Cz", "Bf", "Df")}


def gains_from_dict(data):
    return FilterGains(**{name: tuple(np.asarray(M, dtype=float) for M in data[name])
                          for name in ("A", "Cy", "Cz", "Bf", "Df")})


def result_to_dict(result):
    return {
        "gains": gains_to_dict(result.gains),
        "gamma": result.gamma,
        "hinf_norm": result.hinf_norm,
        "certificates": {
            "H": [H.tolist() for H in result.H],
            "X": result.X.tolist(),
            "F": [F.tolist() for F in result.F],
            "K": [K.tolist() for K in result.K],
        },
        "solver_status": result.solver_status,
        "margin": result.margin,
        "epsilon": result.epsilon,
    }
