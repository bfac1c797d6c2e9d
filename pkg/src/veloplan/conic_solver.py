"""Primal-dual interior-point method for linear + second-order cone programs.

Solves ``min c'x  s.t.  Ax = b,  Gx + s = h,  s in K`` together with its
dual ``max -b'y - h'z  s.t.  A'y + G'z + c = 0,  z in K`` through the
homogeneous self-dual embedding, so that infeasible programs end with a
certificate-like ray instead of diverging iterates.

Each iteration uses Nesterov-Todd scaling and a Mehrotra predictor-corrector
step. The Newton systems are reduced to the quasi-definite matrix
``[[G' D G, A'], [A, 0]]`` (``D`` the inverse squared scaling), regularised,
factorised once with SuperLU and polished by iterative refinement.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidParameter
from .model import SolverStatus

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    eq_tol: float = 1e-9
    gap_tol: float = 1e-9
    max_iters: int = 200
    equilibrate: bool = True
    step_fraction: float = 0.99
    ruiz_iters: int = 15
    regularization: float = 1e-8
    refine_steps: int = 10

    def __post_init__(self):
        if not (self.eq_tol > 0 and self.gap_tol > 0):
            raise InvalidParameter("tolerances must be positive")
        if self.max_iters < 1:
            raise InvalidParameter("max_iters must be >= 1")
        if not 0 < self.step_fraction < 1:
            raise InvalidParameter("step_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class Residuals:
    primal: float
    dual: float
    gap: float


@dataclass
class ConicSolution:
    primal: np.ndarray
    dual_eq: np.ndarray
    dual_cone: np.ndarray
    slack: np.ndarray
    status: SolverStatus
    iterations: int
    final_residuals: Residuals
    wall_time: float
    objective: float = np.nan
    history: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class KKTResiduals:
    primal_eq: float
    cone: float
    dual: float
    dual_cone: float
    gap: float
    complementarity: float

    @property
    def primal(self) -> float:
        return max(self.primal_eq, self.cone)


# --------------------------------------------------------------------------
# cone algebra


class _Cones:
    """Vectorised operations on ``R_+^l x Q^{d_1} x ... x Q^{d_k}``.

    Consecutive second-order cones of equal dimension are processed as one
    ``(count, dim)`` batch.
    """

    def __init__(self, lp: int, soc_dims):
        self.lp = lp
        self.groups = []  # (offset, count, dim)
        off = lp
        for d in soc_dims:
            if self.groups and self.groups[-1][2] == d and \
                    self.groups[-1][0] + self.groups[-1][1] * d == off:
                o, k, _ = self.groups[-1]
                self.groups[-1] = (o, k + 1, d)
            else:
                self.groups.append((off, 1, d))
            off += d
        self.size = off
        self.degree = lp + len(soc_dims)

    def blocks(self, v):
        for o, k, d in self.groups:
            yield v[o:o + k * d].reshape(k, d)

    def identity(self):
        e = np.zeros(self.size)
        e[:self.lp] = 1.0
        for blk in self.blocks(e):
            blk[:, 0] = 1.0
        return e

    def interior_shift(self, u):
        """Smallest ``a`` with ``u + a e`` on the cone boundary."""
        worst = -np.inf
        if self.lp:
            worst = np.max(-u[:self.lp])
        for blk in self.blocks(u):
            worst = max(worst, np.max(np.linalg.norm(blk[:, 1:], axis=1) - blk[:, 0]))
        return worst

    def make_interior(self, u):
        a = self.interior_shift(u)
        if a >= 0:
            u = u + (1.0 + a) * self.identity()
        return u

    def jordan(self, u, v):
        out = np.empty(self.size)
        out[:self.lp] = u[:self.lp] * v[:self.lp]
        for o, k, d in self.groups:
            U = u[o:o + k * d].reshape(k, d)
            V = v[o:o + k * d].reshape(k, d)
            blk = out[o:o + k * d].reshape(k, d)
            blk[:, 0] = np.einsum("ij,ij->i", U, V)
            blk[:, 1:] = U[:, :1] * V[:, 1:] + V[:, :1] * U[:, 1:]
        return out

    def jordan_div(self, lam, w):
        """Solve ``lam o x = w`` for ``x``."""
        out = np.empty(self.size)
        out[:self.lp] = w[:self.lp] / lam[:self.lp]
        for o, k, d in self.groups:
            L = lam[o:o + k * d].reshape(k, d)
            Wb = w[o:o + k * d].reshape(k, d)
            blk = out[o:o + k * d].reshape(k, d)
            det = _jdet(L)
            x0 = (L[:, 0] * Wb[:, 0] - np.einsum("ij,ij->i", L[:, 1:], Wb[:, 1:])) / det
            blk[:, 0] = x0
            blk[:, 1:] = (Wb[:, 1:] - x0[:, None] * L[:, 1:]) / L[:, :1]
        return out

    def max_step(self, u, du):
        """Largest ``a`` (possibly inf) with ``u + a du`` in the cone."""
        amax = np.inf
        if self.lp:
            neg = du[:self.lp] < 0
            if np.any(neg):
                amax = np.min(-u[:self.lp][neg] / du[:self.lp][neg])
        for o, k, d in self.groups:
            U = u[o:o + k * d].reshape(k, d)
            D = du[o:o + k * d].reshape(k, d)
            a = D[:, 0] ** 2 - np.einsum("ij,ij->i", D[:, 1:], D[:, 1:])
            b = U[:, 0] * D[:, 0] - np.einsum("ij,ij->i", U[:, 1:], D[:, 1:])
            c = _jdet(U)
            disc = b * b - a * c
            with np.errstate(invalid="ignore", divide="ignore"):
                denom = -b + np.sqrt(np.maximum(disc, 0.0))
                root = np.where((disc >= 0) & (denom > 0), c / denom, np.inf)
                lin = np.where(D[:, 0] < 0, -U[:, 0] / D[:, 0], np.inf)
            amax = min(amax, float(np.min(root)), float(np.min(lin)))
        return amax

    def strictly_interior(self, u) -> bool:
        if self.lp and not np.all(u[:self.lp] > 0):
            return False
        for blk in self.blocks(u):
            if not (np.all(blk[:, 0] > 0) and np.all(_jdet(blk) > 0)):
                return False
        return True

    def violation(self, u):
        """Distance-style violation of ``u in K``; 0 when inside."""
        worst = 0.0
        if self.lp:
            worst = max(worst, float(np.max(-u[:self.lp], initial=0.0)))
        for blk in self.blocks(u):
            worst = max(worst, float(np.max(np.linalg.norm(blk[:, 1:], axis=1) - blk[:, 0],
                                            initial=0.0)))
        return worst


def _jdet(U):
    """``u0^2 - ||u1||^2`` evaluated as a product to limit cancellation."""
    r = np.linalg.norm(U[:, 1:], axis=1)
    return (U[:, 0] - r) * (U[:, 0] + r)


class _NTScaling:
    """Nesterov-Todd scaling ``W`` with ``W z = W^{-T} s = lam``.

    LP part: ``W = diag(sqrt(s/z))``. Each SOC block is the symmetric matrix
    ``eta [[w0, w1'], [w1, I + w1 w1' / (1 + w0)]]``.
    """

    def __init__(self, cones: _Cones, s, z):
        self.cones = cones
        lp = cones.lp
        self.lp_w = np.sqrt(s[:lp] / z[:lp])
        self.W, self.Winv = [], []
        for o, k, d in cones.groups:
            S = s[o:o + k * d].reshape(k, d)
            Z = z[o:o + k * d].reshape(k, d)
            sdet, zdet = _jdet(S), _jdet(Z)
            if np.any(sdet <= 0) or np.any(zdet <= 0):
                raise FloatingPointError("iterate left the cone interior")
            sn = S / np.sqrt(sdet)[:, None]
            zn = Z / np.sqrt(zdet)[:, None]
            gam = np.sqrt((1.0 + np.einsum("ij,ij->i", sn, zn)) / 2.0)
            wb = sn.copy()
            wb[:, 0] += zn[:, 0]
            wb[:, 1:] -= zn[:, 1:]
            wb /= (2.0 * gam)[:, None]
            eta = (sdet / zdet) ** 0.25
            w0, w1 = wb[:, 0], wb[:, 1:]
            outer = np.einsum("ki,kj->kij", w1, w1) / (1.0 + w0)[:, None, None]
            eye = np.broadcast_to(np.eye(d - 1), outer.shape)
            Wb = np.empty((k, d, d))
            Wb[:, 0, 0] = w0
            Wb[:, 0, 1:] = w1
            Wb[:, 1:, 0] = w1
            Wb[:, 1:, 1:] = eye + outer
            Wi = Wb.copy()
            Wi[:, 0, 1:] = -w1
            Wi[:, 1:, 0] = -w1
            self.W.append(Wb * eta[:, None, None])
            self.Winv.append(Wi / eta[:, None, None])
        self.lam = self.apply(z)

    def _apply(self, v, lp_scale, mats):
        out = np.empty_like(v)
        lp = self.cones.lp
        out[:lp] = lp_scale * v[:lp]
        for (o, k, d), Mb in zip(self.cones.groups, mats):
            out[o:o + k * d] = np.einsum("kij,kj->ki", Mb, v[o:o + k * d].reshape(k, d)).ravel()
        return out

    def apply(self, v):
        """``W v`` (``W`` is symmetric, so also ``W' v``)."""
        return self._apply(v, self.lp_w, self.W)

    def apply_inv(self, v):
        return self._apply(v, 1.0 / self.lp_w, self.Winv)

    def inv_flat(self):
        """Entries of ``W^{-1}``: orthant diagonal, then each block row-major."""
        return np.concatenate([1.0 / self.lp_w] + [blk.ravel() for blk in self.Winv])


# --------------------------------------------------------------------------
# equilibration


@dataclass
class _Scaled:
    c: np.ndarray
    A: sp.csc_matrix
    b: np.ndarray
    G: sp.csc_matrix
    h: np.ndarray
    col: np.ndarray
    row_a: np.ndarray
    row_g: np.ndarray
    obj: float


def _entry_indices(M):
    """Row and column index of every stored entry of a CSC matrix."""
    cols = np.repeat(np.arange(M.shape[1]), np.diff(M.indptr))
    return M.indices.astype(np.int64), cols


def _inf_norms(values, index, size):
    out = np.zeros(size)
    np.maximum.at(out, index, np.abs(values))
    return out


def _equilibrate(c, A, b, G, h, cones: _Cones, iters: int) -> _Scaled:
    """Ruiz scaling of ``[A; G]``; rows of one SOC share a single factor."""
    nv = len(c)
    col = np.ones(nv)
    ra = np.ones(A.shape[0])
    rg = np.ones(G.shape[0])
    A, G = A.tocsc(), G.tocsc()
    a_row, a_col = _entry_indices(A)
    g_row, g_col = _entry_indices(G)
    av, gv = A.data.copy(), G.data.copy()
    for _ in range(iters):
        cn = np.maximum(_inf_norms(av, a_col, nv), _inf_norms(gv, g_col, nv))
        cn = np.where(cn > 0, cn, 1.0)
        an = _inf_norms(av, a_row, A.shape[0])
        an = np.where(an > 0, an, 1.0)
        gn = _inf_norms(gv, g_row, G.shape[0])
        for o, k, d in cones.groups:
            blk = gn[o:o + k * d].reshape(k, d)
            blk[:] = blk.max(axis=1, keepdims=True)
        gn = np.where(gn > 0, gn, 1.0)
        dc, da, dg = 1 / np.sqrt(cn), 1 / np.sqrt(an), 1 / np.sqrt(gn)
        av *= da[a_row] * dc[a_col]
        gv *= dg[g_row] * dc[g_col]
        col *= dc
        ra *= da
        rg *= dg
    cs = col * c
    obj = 1.0 / max(np.max(np.abs(cs), initial=0.0), 1e-300)
    if not np.any(cs):
        obj = 1.0
    As = sp.csc_matrix((av, A.indices, A.indptr), shape=A.shape)
    Gs = sp.csc_matrix((gv, G.indices, G.indptr), shape=G.shape)
    return _Scaled(obj * cs, As, ra * b, Gs, rg * h, col, ra, rg, obj)


def _identity_scaling(c, A, b, G, h) -> _Scaled:
    return _Scaled(c.copy(), A.tocsc(), b.copy(), G.tocsc(), h.copy(),
                   np.ones(len(c)), np.ones(A.shape[0]), np.ones(G.shape[0]), 1.0)


# --------------------------------------------------------------------------
# linear algebra


class _KKT:
    """Factorisation of the scaled, regularised Newton matrix::

        [[ d I,  A',   Gs'       ],
         [ A,   -d I,  0         ],
         [ Gs,   0,   -(1 + d) I ]]      with  Gs = W^{-1} G

    whose last block unknown is ``W dz``. Solves are refined against the
    unregularised matrix.

    The sparsity pattern does not depend on ``W``, so it is assembled once;
    :meth:`factor` only scatters the new values into the fixed CSC layout.
    """

    def __init__(self, data: _Scaled, cones: _Cones, reg: float, refine: int):
        self.data = data
        self.cones = cones
        self.reg = reg
        self.refine = refine
        self.refinements = 0
        nv, p, m = data.A.shape[1], data.A.shape[0], data.G.shape[0]
        self.nv, self.p, self.m = nv, p, m
        N = nv + p + m

        # expand each entry of G into the rows of W^{-1} G it feeds
        G = data.G.tocoo()
        lp = cones.lp
        src, grow, gcol, widx = [], [], [], []
        is_lp = G.row < lp
        src.append(np.flatnonzero(is_lp))
        grow.append(G.row[is_lp])
        gcol.append(G.col[is_lp])
        widx.append(G.row[is_lp])
        flat_off = lp
        for o, k, d in cones.groups:
            sel = np.flatnonzero((G.row >= o) & (G.row < o + k * d))
            local = G.row[sel] - o
            blk, j = local // d, local % d
            for i in range(d):
                src.append(sel)
                grow.append(o + blk * d + i)
                gcol.append(G.col[sel])
                widx.append(flat_off + blk * d * d + i * d + j)
            flat_off += k * d * d
        self._g_src = np.concatenate(src)
        self._g_widx = np.concatenate(widx)
        self._g_vals = G.data
        gs_row = np.concatenate(grow).astype(np.int64)
        gs_col = np.concatenate(gcol).astype(np.int64)

        A = data.A.tocoo()
        ar, ac = A.row.astype(np.int64), A.col.astype(np.int64)
        ix, iy, iw = np.arange(nv), nv + np.arange(p), nv + p + np.arange(m)
        rows = np.concatenate([ix, ac, nv + ar, iy, gs_col, nv + p + gs_row, iw])
        cols = np.concatenate([ix, nv + ar, ac, iy, nv + p + gs_row, gs_col, iw])
        self._fixed_head = np.concatenate([np.full(nv, reg), A.data, A.data, np.full(p, -reg)])
        self._tail = np.full(m, -(1.0 + reg))
        keys = cols * N + rows
        uniq, self._slot = np.unique(keys, return_inverse=True)
        self._indices = (uniq % N).astype(np.int32)
        self._indptr = np.searchsorted(uniq // N, np.arange(N + 1)).astype(np.int32)
        self._nnz = len(uniq)
        self._N = N
        self._reg_diag = np.concatenate([np.full(nv, reg), np.full(p, -reg), np.full(m, -reg)])
        self.lu = None
        self.K = None
        self._winv = None

    def factor(self, winv_flat, apply_inv):
        """Factor for the scaling whose ``W^{-1}`` blocks are ``winv_flat``."""
        gs = winv_flat[self._g_widx] * self._g_vals[self._g_src]
        vals = np.concatenate([self._fixed_head, gs, gs, self._tail])
        data = np.bincount(self._slot, weights=vals, minlength=self._nnz)
        self.K = sp.csc_matrix((data, self._indices, self._indptr), shape=(self._N, self._N))
        # quasi-definite: symmetric minimum-degree ordering, no pivoting needed
        self.lu = spla.splu(self.K, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                            options={"SymmetricMode": True})
        self._winv = apply_inv
        return self

    def solve(self, r1, r2, r3):
        """Solve ``[[0, A', G'], [A, 0, 0], [G, 0, -W'W]] d = r``.

        Returns ``(dx, dy, dz, W dz)``.
        """
        rhs = np.concatenate([r1, r2, self._winv(r3)])
        u = self.lu.solve(rhs)
        target = 1e-15 * (1.0 + np.max(np.abs(rhs)))
        # residual against the unregularised matrix
        res = rhs - (self.K @ u - self._reg_diag * u)
        err = np.max(np.abs(res))
        for _ in range(self.refine):
            if err <= target:
                break
            cand = u + self.lu.solve(res)
            cres = rhs - (self.K @ cand - self._reg_diag * cand)
            cerr = np.max(np.abs(cres))
            self.refinements += 1
            if not cerr < err:
                break
            stalled = cerr > 0.5 * err
            u, res, err = cand, cres, cerr
            if stalled:
                break
        nv, p = self.nv, self.p
        dw = u[nv + p:]
        return u[:nv], u[nv:nv + p], self._winv(dw), dw


# --------------------------------------------------------------------------
# residuals


def _inf(v) -> float:
    return float(np.max(np.abs(v), initial=0.0))


def kkt_residuals(program, solution: ConicSolution) -> KKTResiduals:
    """Recompute optimality residuals of ``solution`` from the program data.

    The slack is re-derived as ``h - G x`` rather than taken from the solver,
    so that the primal cone residual measures the point itself.
    """
    A, b, G, h, c = program.A, program.b, program.G, program.h, program.c
    x = np.asarray(solution.primal, float)
    y = np.asarray(solution.dual_eq, float)
    z = np.asarray(solution.dual_cone, float)
    if x.shape != (A.shape[1],) or y.shape != (A.shape[0],) or z.shape != (G.shape[0],):
        raise InvalidParameter(
            f"dimension mismatch: x{x.shape} y{y.shape} z{z.shape} vs "
            f"A{A.shape} G{G.shape}")
    cones = _Cones(program.lp_dim, program.soc_dims)
    s = h - G @ x
    cx = float(c @ x)
    return KKTResiduals(
        primal_eq=_inf(A @ x - b) / (1.0 + _inf(b)),
        cone=cones.violation(s) / (1.0 + _inf(h)),
        dual=_inf(A.T @ y + G.T @ z + c) / (1.0 + _inf(c)),
        dual_cone=cones.violation(z) / (1.0 + _inf(z)),
        gap=abs(float(s @ z)) / (1.0 + abs(cx)),
        complementarity=float(s @ z),
    )


# --------------------------------------------------------------------------
# main loop


def solve_socp(program, config: SolverConfig | None = None) -> ConicSolution:
    """Solve a conic program with orthant and second-order cones.

    ``program`` needs attributes ``c, A, b, G, h`` and ``cones`` (orthant
    first, then second-order cones) as produced by
    :func:`veloplan.formulation.build_relaxation`.
    """
    config = config or SolverConfig()
    t_start = time.perf_counter()
    program.check()
    c = np.asarray(program.c, float)
    A = sp.csc_matrix(program.A, dtype=float)
    b = np.asarray(program.b, float)
    G = sp.csc_matrix(program.G, dtype=float)
    h = np.asarray(program.h, float)
    for name, v in (("c", c), ("b", b), ("h", h)):
        if not np.all(np.isfinite(v)):
            raise InvalidParameter(f"non-finite entries in {name}")
    cones = _Cones(program.lp_dim, program.soc_dims)

    if config.equilibrate:
        data = _equilibrate(c, A, b, G, h, cones, config.ruiz_iters)
    else:
        data = _identity_scaling(c, A, b, G, h)
    nu = cones.degree

    norm_b, norm_h, norm_c = _inf(b), _inf(h), _inf(c)

    def unscale(x, y, z, s, tau):
        return (data.col * x / tau,
                data.row_a * y / (data.obj * tau),
                data.row_g * z / (data.obj * tau),
                s / (data.row_g * tau))

    def metrics(x, y, z, s, tau):
        xu, yu, zu, su = unscale(x, y, z, s, tau)
        pcost = float(c @ xu)
        pres = max(_inf(A @ xu - b) / (1 + norm_b), _inf(G @ xu + su - h) / (1 + norm_h))
        dres = _inf(A.T @ yu + G.T @ zu + c) / (1 + norm_c)
        gap = abs(float(su @ zu)) / (1 + abs(pcost))
        return pres, dres, gap, pcost

    def certificates(x, y, z, s):
        # rays of the embedding when tau -> 0
        xu = data.col * x
        yu = data.row_a * y / data.obj
        zu = data.row_g * z / data.obj
        su = s / data.row_g
        out = {}
        byhz = float(b @ yu + h @ zu)
        if byhz < 0:
            out["primal_infeasibility"] = _inf(A.T @ yu + G.T @ zu) / (-byhz)
        cx = float(c @ xu)
        if cx < 0:
            out["dual_infeasibility"] = max(_inf(A @ xu), _inf(G @ xu + su)) / (-cx)
        return out

    # initial point: least-squares primal and minimum-norm dual, shifted inside
    e = cones.identity()
    kkt = _KKT(data, cones, config.regularization, config.refine_steps)
    eye_flat = np.concatenate([np.ones(cones.lp)] + [np.tile(np.eye(d).ravel(), k)
                                                     for _, k, d in cones.groups])
    kkt0 = kkt.factor(eye_flat, lambda v: v)
    x, _, zs, _ = kkt0.solve(np.zeros(len(c)), data.b, data.h)
    s = cones.make_interior(-zs)
    _, y, z, _ = kkt0.solve(-data.c, np.zeros(len(b)), np.zeros(cones.size))
    z = cones.make_interior(z)
    tau, kappa = 1.0, 1.0

    history = []
    status = SolverStatus.MAX_ITER
    diagnostics: dict = {}
    it = 0
    best = None
    for it in range(config.max_iters + 1):
        pres, dres, gap, pcost = metrics(x, y, z, s, tau)
        mu = (float(s @ z) + tau * kappa) / (nu + 1)
        history.append({"iter": it, "pres": pres, "dres": dres, "gap": gap,
                        "pcost": pcost, "mu": mu, "tau": tau, "kappa": kappa})
        score = max(pres / config.eq_tol, dres / config.eq_tol, gap / config.gap_tol)
        if best is None or score < best[0]:
            best = (score, it, x.copy(), y.copy(), z.copy(), s.copy(), tau)
        if pres <= config.eq_tol and dres <= config.eq_tol and gap <= config.gap_tol:
            status = SolverStatus.OPTIMAL
            break
        if tau < kappa:
            cert = certificates(x, y, z, s)
            pinf = cert.get("primal_infeasibility", np.inf)
            dinf = cert.get("dual_infeasibility", np.inf)
            if pinf <= config.eq_tol or dinf <= config.eq_tol:
                status = SolverStatus.INFEASIBLE
                diagnostics.update(cert)
                diagnostics["reason"] = ("primal infeasible" if pinf <= dinf
                                         else "dual infeasible (unbounded)")
                break
        if it == config.max_iters:
            status = SolverStatus.MAX_ITER
            diagnostics["reason"] = "iteration limit"
            break

        try:
            with np.errstate(over="raise", invalid="raise", divide="raise"):
                x, y, z, s, tau, kappa, step = _iterate(
                    data, cones, kkt, e, x, y, z, s, tau, kappa, mu, config)
        except (FloatingPointError, RuntimeError, np.linalg.LinAlgError) as exc:
            status = SolverStatus.NUMERICAL_FAILURE
            diagnostics["reason"] = f"numerical breakdown: {exc}"
            break
        history[-1].update(step)
        if step["alpha"] < 1e-12:
            status = SolverStatus.NUMERICAL_FAILURE
            diagnostics["reason"] = "step length collapsed"
            break

    if status in (SolverStatus.NUMERICAL_FAILURE, SolverStatus.MAX_ITER) and best is not None:
        # report the best iterate seen, not the one that broke down
        _, it_best, x, y, z, s, tau = best
        diagnostics["best_iteration"] = it_best
        pres, dres, gap, pcost = metrics(x, y, z, s, tau)
    if status is SolverStatus.INFEASIBLE:
        xu, yu, zu, su = (data.col * x, data.row_a * y / data.obj,
                          data.row_g * z / data.obj, s / data.row_g)
        diagnostics["tau"] = tau
        diagnostics["kappa"] = kappa
        diagnostics["primal_residual_history"] = [hrow["pres"] for hrow in history]
    else:
        xu, yu, zu, su = unscale(x, y, z, s, tau)
    wall = time.perf_counter() - t_start
    log.debug("solve_socp: %s after %d iterations (%.3fs)", status.value, it, wall)
    return ConicSolution(
        primal=xu, dual_eq=yu, dual_cone=zu, slack=su, status=status,
        iterations=it, final_residuals=Residuals(pres, dres, gap), wall_time=wall,
        objective=float(c @ xu), history=history, diagnostics=diagnostics,
    )


def _iterate(data, cones, kkt, e, x, y, z, s, tau, kappa, mu, config):
    """One predictor-corrector step; returns the new iterate and step info."""
    A, G, b, h, c = data.A, data.G, data.b, data.h, data.c
    r1 = A.T @ y + G.T @ z + c * tau
    r2 = A @ x - b * tau
    r3 = G @ x + s - h * tau
    r4 = kappa + c @ x + b @ y + h @ z

    nt = _NTScaling(cones, s, z)
    lam = nt.lam
    kkt.factor(nt.inv_flat(), nt.apply_inv)
    x1, y1, z1, wz1 = kkt.solve(-c, b, h)
    den = float(c @ x1 + b @ y1 + h @ z1) - kappa / tau

    def direction(sigma, ds_rhs, dk_rhs):
        q = cones.jordan_div(lam, ds_rhs)
        f = 1.0 - sigma
        x2, y2, z2, wz2 = kkt.solve(-f * r1, -f * r2, -f * r3 - nt.apply(q))
        dtau = (-f * r4 - dk_rhs / tau - float(c @ x2 + b @ y2 + h @ z2)) / den
        dx = x2 + dtau * x1
        dy = y2 + dtau * y1
        dz = z2 + dtau * z1
        wdz = wz2 + dtau * wz1
        # ds from the linear equation keeps the primal residual consistent
        ds = -f * r3 + dtau * h - G @ dx
        ws = nt.apply_inv(ds)
        dkappa = (dk_rhs - kappa * dtau) / tau
        return dx, dy, dz, ds, dtau, dkappa, ws, wdz

    def step_length(ws, wdz, dtau, dkappa):
        a = min(cones.max_step(lam, ws), cones.max_step(lam, wdz))
        if dtau < 0:
            a = min(a, -tau / dtau)
        if dkappa < 0:
            a = min(a, -kappa / dkappa)
        return a

    lamlam = cones.jordan(lam, lam)
    aff = direction(0.0, -lamlam, -tau * kappa)
    a_aff = min(1.0, step_length(aff[6], aff[7], aff[4], aff[5]))
    sigma = min(1.0, max(0.0, (1.0 - a_aff) ** 3))

    ds_rhs = -lamlam - cones.jordan(aff[6], aff[7]) + sigma * mu * e
    dk_rhs = -tau * kappa - aff[4] * aff[5] + sigma * mu
    dx, dy, dz, ds, dtau, dkappa, ws, wdz = direction(sigma, ds_rhs, dk_rhs)
    alpha = min(1.0, config.step_fraction * step_length(ws, wdz, dtau, dkappa))
    # rounding can still put a nearly degenerate cone on the boundary
    for _ in range(20):
        if cones.strictly_interior(s + alpha * ds) and cones.strictly_interior(z + alpha * dz):
            break
        alpha *= 0.5

    x = x + alpha * dx
    y = y + alpha * dy
    z = z + alpha * dz
    s = s + alpha * ds
    tau = tau + alpha * dtau
    kappa = kappa + alpha * dkappa
    return x, y, z, s, tau, kappa, {"alpha": alpha, "sigma": sigma, "alpha_aff": a_aff}
