"""Second-order cone relaxation of the discretised speed planning problem.

The program is stored in the form used by the interior-point solver::

    minimise    c @ x
    subject to  A @ x == b
                h - G @ x  in  K

where ``K`` is a product of a nonnegative orthant and 3-dimensional
second-order cones (head coordinate first). Physical variables are laid out
in contiguous blocks ``w | f | t | e | y | z``:

* ``w`` (n)      squared speed at every grid point
* ``f`` (n - 1)  force per unit mass on each step
* ``t`` (n - 1)  time per metre; relaxes ``t = 1/sqrt(w)`` to ``t >= 1/sqrt(w)``
* ``e`` (n - 1)  epigraph of ``max(eta f, f)``
* ``y, z``       auxiliaries of ``1 <= z y, y^2 <= t, z^2 <= t w``
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Union

import numpy as np
import scipy.sparse as sp

from .errors import InvalidParameter, NoSolution
from .model import ProblemInstance, SolverStatus, require_valid

if TYPE_CHECKING:
    from .conic_solver import ConicSolution


@dataclass(frozen=True)
class NonnegativeOrthant:
    dim: int


@dataclass(frozen=True)
class SecondOrderCone:
    dim: int


Cone = Union[NonnegativeOrthant, SecondOrderCone]


@dataclass(frozen=True)
class ConicProgram:
    c: np.ndarray
    A: sp.csc_matrix
    b: np.ndarray
    G: sp.csc_matrix
    h: np.ndarray
    cones: tuple
    var_map: dict = field(default_factory=dict)
    instance: ProblemInstance | None = None

    @property
    def num_vars(self) -> int:
        return len(self.c)

    @property
    def lp_dim(self) -> int:
        return sum(k.dim for k in self.cones if isinstance(k, NonnegativeOrthant))

    @property
    def soc_dims(self) -> list[int]:
        return [k.dim for k in self.cones if isinstance(k, SecondOrderCone)]

    def check(self) -> None:
        """Raise :class:`InvalidParameter` on inconsistent dimensions."""
        nv = len(self.c)
        if self.A.shape[1] != nv or self.G.shape[1] != nv:
            raise InvalidParameter("column count of A or G differs from len(c)")
        if self.A.shape[0] != len(self.b):
            raise InvalidParameter("rows of A differ from len(b)")
        if self.G.shape[0] != len(self.h):
            raise InvalidParameter("rows of G differ from len(h)")
        if any(k.dim < 1 for k in self.cones):
            raise InvalidParameter("cone dimensions must be >= 1")
        if sum(k.dim for k in self.cones) != len(self.h):
            raise InvalidParameter("cone dimensions do not sum to rows of G")
        seen_soc = False
        for k in self.cones:
            if isinstance(k, SecondOrderCone):
                seen_soc = True
            elif seen_soc:
                raise InvalidParameter("orthant rows must precede second-order cones")

    def with_objective(self, c: np.ndarray) -> "ConicProgram":
        return ConicProgram(np.asarray(c, float), self.A, self.b, self.G, self.h,
                            self.cones, self.var_map, self.instance)

    def without_power_rows(self) -> "ConicProgram":
        """Same program with the ``t >= M f / P_max`` rows removed."""
        rows = self.var_map.get("power_rows")
        if rows is None:
            raise InvalidParameter("program has no power rows")
        keep = np.ones(len(self.h), dtype=bool)
        keep[rows] = False
        lp = self.lp_dim - (rows.stop - rows.start)
        cones = (NonnegativeOrthant(lp),) + tuple(
            k for k in self.cones if isinstance(k, SecondOrderCone))
        var_map = dict(self.var_map)
        var_map.pop("power_rows")
        return ConicProgram(self.c, self.A, self.b, self.G[keep].tocsc(), self.h[keep],
                            cones, var_map, self.instance)


def variable_layout(n: int) -> dict[str, slice]:
    m = n - 1
    names = ["w", "f", "t", "e", "y", "z"]
    sizes = [n, m, m, m, m, m]
    out, start = {}, 0
    for name, size in zip(names, sizes):
        out[name] = slice(start, start + size)
        start += size
    return out


def hyperbolic_to_soc(a, b, c):
    """Rows of ``h - G x`` enforcing ``a**2 <= b * c`` as a 3-dim SOC.

    Each argument is either a column index (int) or a constant (float).
    The cone is ``||(2a, b - c)|| <= b + c``, emitted head first as
    ``(b + c, b - c, 2a)``. Returns ``(entries, rhs)`` where ``entries`` is
    a list of ``(local_row, col, value)`` triplets of ``G`` and ``rhs`` the
    3-vector ``h``.
    """
    entries, rhs = [], np.zeros(3)

    def put(row, term, weight):
        if isinstance(term, (int, np.integer)):
            entries.append((row, int(term), -weight))
        else:
            rhs[row] += weight * float(term)

    put(0, b, 1.0)
    put(0, c, 1.0)
    put(1, b, 1.0)
    put(1, c, -1.0)
    put(2, a, 2.0)
    return entries, rhs


def soc_margin(u) -> float:
    """``u[0] - ||u[1:]||``; non-negative iff ``u`` lies in the cone."""
    u = np.asarray(u, dtype=float)
    return float(u[0] - np.linalg.norm(u[1:]))


def build_relaxation(instance: ProblemInstance) -> ConicProgram:
    """Assemble the SOC relaxation of ``instance``."""
    require_valid(instance)
    veh, path = instance.vehicle, instance.path
    n, m, h = path.n, path.n - 1, path.h
    M, g, mu, gam = veh.M, veh.g, veh.mu, veh.gamma
    lay = variable_layout(n)
    nv = lay["z"].stop
    W, Fv, T, E, Y, Z = (np.arange(nv)[lay[k]] for k in ("w", "f", "t", "e", "y", "z"))
    steps = np.arange(m)

    c = np.zeros(nv)
    c[T] = h
    c[E] = h * instance.lam * M

    # dynamics rows ordered by step, then the initial condition
    rows = np.concatenate([steps, steps, steps, [m]])
    cols = np.concatenate([Fv, W[1:], W[:-1], [W[0]]])
    vals = np.concatenate([np.ones(m), np.full(m, -1.0 / h), np.full(m, 1.0 / h - gam), [1.0]])
    A = sp.csc_matrix((vals, (rows, cols)), shape=(m + 1, nv))
    b = np.concatenate([g * (path.slope_sin + veh.c), [instance.w_init]])

    # orthant rows: each entry is (columns, coefficients, rhs) over the steps
    fmax = g * mu
    lp_blocks = [
        ("w_lo", [(W[1:], -1.0)], np.zeros(m)),
        ("w_hi", [(W[1:], 1.0)], path.w_max[1:]),
        ("f_hi", [(Fv, 1.0)], np.full(m, fmax)),
        ("f_lo", [(Fv, -1.0)], np.full(m, fmax)),
        ("power", [(Fv, M / veh.P_max), (T, -1.0)], np.zeros(m)),
        ("e_regen", [(Fv, veh.eta), (E, -1.0)], np.zeros(m)),
        ("e_drive", [(Fv, 1.0), (E, -1.0)], np.zeros(m)),
        ("e_hi", [(E, 1.0)], np.full(m, fmax)),
        ("y_lo", [(Y, -1.0)], np.zeros(m)),
        ("z_lo", [(Z, -1.0)], np.zeros(m)),
    ]
    g_rows, g_cols, g_vals, h_parts = [], [], [], []
    var_map = dict(lay)
    r0 = 0
    for name, terms, rhs in lp_blocks:
        for cols_k, coef in terms:
            g_rows.append(r0 + steps)
            g_cols.append(cols_k)
            g_vals.append(np.full(m, coef, dtype=float))
        h_parts.append(np.asarray(rhs, dtype=float))
        var_map[name + "_rows"] = slice(r0, r0 + m)
        r0 += m
    lp_dim = r0

    # three 3-dim cones per step: 1 <= z y, y^2 <= t * 1, z^2 <= t w.
    # Column arguments are slot numbers into ``slots``, expanded over all steps.
    slots = [Z, Y, T, W[:-1]]
    cone_specs = [(1.0, 0, 1), (1, 2, 1.0), (0, 2, 3)]
    soc_h = np.zeros((m, 3, 3))
    for k, (a, bb, cc) in enumerate(cone_specs):
        entries, rhs = hyperbolic_to_soc(a, bb, cc)
        base = lp_dim + 9 * steps + 3 * k
        for lr, slot, val in entries:
            g_rows.append(base + lr)
            g_cols.append(slots[slot])
            g_vals.append(np.full(m, val))
        soc_h[:, k] = rhs
    G = sp.csc_matrix(
        (np.concatenate(g_vals), (np.concatenate(g_rows), np.concatenate(g_cols))),
        shape=(lp_dim + 9 * m, nv),
    )
    hv = np.concatenate(h_parts + [soc_h.reshape(-1)])
    cones = (NonnegativeOrthant(lp_dim),) + tuple(SecondOrderCone(3) for _ in range(3 * m))
    prog = ConicProgram(c, A, b, G, hv, cones, var_map, instance)
    prog.check()
    return prog


@dataclass(frozen=True)
class ExtractedSolution:
    w: np.ndarray
    f: np.ndarray
    t: np.ndarray
    e: np.ndarray
    y: np.ndarray
    z: np.ndarray
    duals: np.ndarray
    residuals: dict
    constraint_residuals: dict
    objective: float
    status: SolverStatus
    instance: ProblemInstance | None = None

    @property
    def F(self) -> np.ndarray:
        return self.instance.vehicle.M * self.f


def physical_residuals(instance: ProblemInstance, w, f, t, e=None) -> dict:
    """Worst violation of each relaxed constraint family (violation > 0)."""
    veh, path = instance.vehicle, instance.path
    h, g = path.h, veh.g
    w, f, t = np.asarray(w, float), np.asarray(f, float), np.asarray(t, float)
    dyn = f - ((w[1:] - w[:-1]) / h + veh.gamma * w[:-1] + g * (path.slope_sin + veh.c))
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_sqrt = np.where(w[:-1] > 0, 1.0 / np.sqrt(np.maximum(w[:-1], 1e-300)), np.inf)
    out = {
        "dynamics": float(np.max(np.abs(dyn))),
        "force": float(np.max(np.abs(f) - g * veh.mu)),
        "power": float(np.max(veh.M * f / veh.P_max - t)),
        "relaxed_time": float(np.max(inv_sqrt - t)),
        "speed_max": float(np.max(w - path.w_max)),
        "speed_min": float(np.max(-w)),
        "initial": float(abs(w[0] - instance.w_init)),
    }
    if e is not None:
        e = np.asarray(e, float)
        out["epigraph"] = float(np.max(np.maximum(veh.eta * f, f) - e))
    return out


def relaxation_objective(instance: ProblemInstance, e, t) -> float:
    h, M = instance.path.h, instance.vehicle.M
    return float(h * (instance.lam * M * np.sum(e) + np.sum(t)))


def extract_solution(program: ConicProgram, raw: "ConicSolution") -> ExtractedSolution:
    """Slice the solver's primal vector into physical variables and
    re-evaluate every constraint in physical units."""
    if raw.status not in (SolverStatus.OPTIMAL, SolverStatus.MAX_ITER):
        raise NoSolution(f"solver status {raw.status.value}: {raw.diagnostics.get('reason', '')}")
    from .conic_solver import kkt_residuals

    x = raw.primal
    vm = program.var_map
    parts = {k: np.array(x[vm[k]]) for k in ("w", "f", "t", "e", "y", "z")}
    inst = program.instance
    res = kkt_residuals(program, raw)
    phys = physical_residuals(inst, parts["w"], parts["f"], parts["t"], parts["e"])
    return ExtractedSolution(
        **parts,
        duals=np.concatenate([raw.dual_eq, raw.dual_cone]),
        residuals={"primal_eq": res.primal_eq, "cone": res.cone, "duality_gap": res.gap},
        constraint_residuals=phys,
        objective=relaxation_objective(inst, parts["e"], parts["t"]),
        status=raw.status,
        instance=inst,
    )


def embed_point(instance: ProblemInstance, w, F) -> np.ndarray:
    """Map a point ``(w, F)`` of the original problem into the relaxation's
    variable vector with ``t = 1/sqrt(w)``, ``e = max(eta f, f)`` and the
    auxiliaries on their cone boundaries."""
    n = instance.n
    lay = variable_layout(n)
    w = np.asarray(w, float)
    f = np.asarray(F, float) / instance.vehicle.M
    t = 1.0 / np.sqrt(w[:-1])
    y = np.sqrt(t)
    z = 1.0 / y
    x = np.zeros(lay["z"].stop)
    x[lay["w"]] = w
    x[lay["f"]] = f
    x[lay["t"]] = t
    x[lay["e"]] = np.maximum(instance.vehicle.eta * f, f)
    x[lay["y"]] = y
    x[lay["z"]] = z
    return x


def cone_violation(program: ConicProgram, s: np.ndarray) -> float:
    """Largest distance-style violation of ``s in K`` (0 when inside)."""
    lp = program.lp_dim
    worst = float(np.max(-s[:lp], initial=0.0))
    off = lp
    for d in program.soc_dims:
        u = s[off:off + d]
        worst = max(worst, -soc_margin(u))
        off += d
    return max(worst, 0.0)


def dump_triplets(program: ConicProgram, path) -> None:
    """Write the program as plain-text sparse triplets.

    Sections ``c``, ``A``, ``b``, ``G``, ``h`` and ``cones`` each start with a
    header line ``# <name> <count>``; matrix lines are ``row col value``.
    """
    def vec(name, v):
        lines.append(f"# {name} {len(v)}")
        lines.extend(f"{i} {val:.17g}" for i, val in enumerate(v) if val != 0.0)

    def mat(name, M):
        coo = M.tocoo()
        lines.append(f"# {name} {coo.nnz} {M.shape[0]} {M.shape[1]}")
        order = np.lexsort((coo.col, coo.row))
        lines.extend(f"{coo.row[k]} {coo.col[k]} {coo.data[k]:.17g}" for k in order)

    lines: list[str] = []
    vec("c", program.c)
    mat("A", program.A)
    vec("b", program.b)
    mat("G", program.G)
    vec("h", program.h)
    lines.append(f"# cones {len(program.cones)}")
    for k in program.cones:
        kind = "l" if isinstance(k, NonnegativeOrthant) else "q"
        lines.append(f"{kind} {k.dim}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_triplets(path) -> ConicProgram:
    """Inverse of :func:`dump_triplets` (variable map is not restored)."""
    sections: dict[str, tuple[list[str], list[int]]] = {}
    current = None
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                head = line[1:].split()
                current = head[0]
                sections[current] = ([], [int(v) for v in head[1:]])
            else:
                sections[current][0].append(line)

    def vec(name):
        lines, (size,) = sections[name]
        v = np.zeros(size)
        for ln in lines:
            i, val = ln.split()
            v[int(i)] = float(val)
        return v

    def mat(name):
        lines, (_, nr, nc) = sections[name]
        if not lines:
            return sp.csc_matrix((nr, nc))
        arr = np.array([ln.split() for ln in lines], dtype=float)
        return sp.csc_matrix((arr[:, 2], (arr[:, 0].astype(int), arr[:, 1].astype(int))),
                             shape=(nr, nc))

    cones = []
    for ln in sections["cones"][0]:
        kind, dim = ln.split()
        cones.append(NonnegativeOrthant(int(dim)) if kind == "l" else SecondOrderCone(int(dim)))
    return ConicProgram(vec("c"), mat("A"), vec("b"), mat("G"), vec("h"), tuple(cones))


def solve_relaxation(instance: ProblemInstance, config=None) -> ExtractedSolution:
    """Build, solve and extract in one call.

    Raises :class:`NoSolution` when the solver certifies infeasibility or
    breaks down numerically.
    """
    from .conic_solver import solve_socp

    program = build_relaxation(instance)
    return extract_solution(program, solve_socp(program, config))
