"""Global numbering of trial unknowns and hanging-node constraints.

Trial unknowns fall in two groups.  Field unknowns (the vector and scalar
L^2 components) are element-local Legendre coefficients and are never
constrained.  Interface unknowns live on the mesh skeleton:

  * scalar traces (one continuous piecewise polynomial of degree
    min_order per edge): endpoint values are shared vertex DOFs,
    interior modes are per-edge "bubble" DOFs; everything on the
    Dirichlet part is eliminated to zero;
  * signed normal traces (one discontinuous polynomial of degree
    min_order - 1 per edge, stored against the global edge normal with a
    per-owner sign); everything on the Neumann part is eliminated.

On 1-irregular meshes a hanging (slave) edge carries no DOFs of its own:
its trace is the restriction of its master's polynomial, so element
integrals on a slave side couple directly to the master's DOFs through
an affine parameter map.  A hanging vertex is the master's midpoint and
resolves to a combination of the master-edge DOFs.

For the generic ``constrain`` entry point the map also exposes an
unconstrained numbering in which every edge and vertex owns DOFs, plus
the sparse reduction matrix C folding slave rows into master rows and
dropping eliminated DOFs; restriction coefficients are computed by exact
polynomial interpolation.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numpy.polynomial.legendre import leggauss

from .errors import ShapeError
from .mesh import SIDES, QuadtreeMesh
from .shapes import h1_count, hdiv_count, legendre_table, lobatto_table

_VKEY_SCALE = 2 ** 40  # dyadic coordinates are exact at this resolution


def _vkey(pt):
    return (round(pt[0] * _VKEY_SCALE), round(pt[1] * _VKEY_SCALE))


def mu_basis_1d(degree, t):
    """Scalar trace basis on an edge: [hat_a, hat_b, bubbles...]."""
    vals, _ = lobatto_table(max(degree, 1), t)
    return vals[: degree + 1]


def sigma_basis_1d(degree, t):
    """Normal trace basis on an edge: Legendre P_0..P_degree."""
    return legendre_table(degree, t)


def _restriction(eval_basis, n_slave, n_master, shift, scale):
    """Coefficients expressing a master polynomial in a slave edge basis.

    Exact interpolation at n_slave Gauss points; returns R with
    slave_coeffs = R @ master_coeffs.
    """
    s, _ = leggauss(n_slave)
    t = shift + scale * s
    Vs = eval_basis(n_slave - 1, s).T  # (npts, n_slave)
    Vm = eval_basis(n_master - 1, t).T  # (npts, n_master)
    return np.linalg.solve(Vs, Vm)


class InterfaceTable:
    """Skeleton DOF table for one (scalar, flux) trace degree choice.

    ``mu_degree(edge) = min_order + mu_offset`` and
    ``sigma_degree(edge) = min_order - 1 + sigma_offset``; the main trial
    map uses offsets (0, 0) and the dual-norm lift uses (1, 1).
    """

    def __init__(self, mesh: QuadtreeMesh, mu_offset=0, sigma_offset=0, start=0):
        self.mesh = mesh
        self.mu_offset = mu_offset
        self.sigma_offset = sigma_offset

        dirichlet_edges = {e.id for e in mesh.edges if e.kind == "boundary_dirichlet"}
        neumann_edges = {e.id for e in mesh.edges if e.kind == "boundary_neumann"}
        self.dirichlet_edges = dirichlet_edges
        self.neumann_edges = neumann_edges

        # vertices: collect from edge endpoints; hanging = master midpoints
        self.hanging = {}
        for e in mesh.edges:
            if e.is_master:
                self.hanging[_vkey(e.midpoint)] = e.id
        dirichlet_vertices = set()
        for e in mesh.edges:
            if e.id in dirichlet_edges:
                dirichlet_vertices.add(_vkey(e.a))
                dirichlet_vertices.add(_vkey(e.b))
        self.dirichlet_vertices = dirichlet_vertices

        vkeys = set()
        for e in mesh.edges:
            vkeys.add(_vkey(e.a))
            vkeys.add(_vkey(e.b))
        self.vertex_keys = sorted(vkeys)

        g = start
        self.vertex_dof = {}
        for vk in self.vertex_keys:
            if vk in self.hanging or vk in dirichlet_vertices:
                continue
            self.vertex_dof[vk] = g
            g += 1
        self.mu_bubble = {}
        self.sigma_dof = {}
        for e in sorted(mesh.edges, key=lambda e: e.id):
            if e.is_slave:
                continue
            d_mu = self.mu_degree(e)
            if e.id not in dirichlet_edges and d_mu >= 2:
                self.mu_bubble[e.id] = (g, d_mu - 1)
                g += d_mu - 1
            d_sg = self.sigma_degree(e)
            if e.id not in neumann_edges:
                self.sigma_dof[e.id] = (g, d_sg + 1)
                g += d_sg + 1
        self.stop = g
        self.start = start
        self._mu_combo_cache = {}

    @property
    def n_dofs(self):
        return self.stop - self.start

    def mu_degree(self, edge):
        return edge.min_order + self.mu_offset

    def sigma_degree(self, edge):
        return edge.min_order - 1 + self.sigma_offset

    def vertex_combo(self, vk):
        """Resolved (dof, coeff) list for the trace value at a vertex."""
        if vk in self.vertex_dof:
            return [(self.vertex_dof[vk], 1.0)]
        if vk in self.dirichlet_vertices and vk not in self.hanging:
            return []
        master = self.mesh.edge(self.hanging[vk])
        # parameter of the vertex on the master edge (its midpoint, t = 0,
        # but compute from geometry to stay generic)
        ax = 0 if master.axis == "x" else 1
        coord = vk[ax] / _VKEY_SCALE
        lo, hi = master.a[ax], master.b[ax]
        t = 2.0 * (coord - lo) / (hi - lo) - 1.0
        vals = mu_basis_1d(self.mu_degree(master), np.array([t]))[:, 0]
        combo = {}
        for fn, base in enumerate(self.mu_combo(master.id)):
            for dof, c in base:
                if abs(vals[fn]) > 0:
                    combo[dof] = combo.get(dof, 0.0) + vals[fn] * c
        return sorted(combo.items())

    def mu_combo(self, edge_id):
        """Per basis function of a non-slave edge: resolved (dof, coeff) list."""
        cached = self._mu_combo_cache.get(edge_id)
        if cached is not None:
            return cached
        e = self.mesh.edge(edge_id)
        assert not e.is_slave, "mu_combo is defined on carrying edges only"
        combos = [self.vertex_combo(_vkey(e.a)), self.vertex_combo(_vkey(e.b))]
        if edge_id in self.mu_bubble:
            base, count = self.mu_bubble[edge_id]
            combos.extend([(base + k, 1.0)] for k in range(count))
        else:
            combos.extend([] for _ in range(self.mu_degree(e) - 1))
        self._mu_combo_cache[edge_id] = combos
        return combos

    def sigma_combo(self, edge_id):
        """Per flux basis function of a non-slave edge (sign applied by caller)."""
        e = self.mesh.edge(edge_id)
        if edge_id in self.sigma_dof:
            base, count = self.sigma_dof[edge_id]
            return [[(base + k, 1.0)] for k in range(count)]
        return [[] for _ in range(self.sigma_degree(e) + 1)]


@dataclass(frozen=True)
class SideBasis:
    """Trace-basis view of one element side.

    For a slave side the carrying edge is the master; ``shift``/``scale``
    map the side's own parameter onto the carrying edge's parameter.
    ``sign`` is this owner's flux orientation factor.
    """

    edge_id: int
    basis_edge_id: int
    mu_count: int
    sigma_count: int
    shift: float
    scale: float
    sign: float
    mu_scatter: tuple
    sigma_scatter: tuple


class DofMap:
    """Trial/test numbering for one mesh at a fixed test enrichment."""

    def __init__(self, mesh: QuadtreeMesh, delta_p: int):
        if delta_p not in (0, 1, 2):
            raise ShapeError(f"delta_p must be in {{0,1,2}}, got {delta_p}")
        self.mesh = mesh
        self.delta_p = delta_p

        # element field DOFs: sigma_x, sigma_y, mu blocks of size p*q each
        self.field_offset = {}
        self.field_count = {}
        g = 0
        for el in mesh.elements:
            nf = el.order_p * el.order_q
            self.field_offset[el.id] = g
            self.field_count[el.id] = nf
            g += 3 * nf
        self.n_fields = g

        self.interface = InterfaceTable(mesh, 0, 0, start=g)
        self.n_trial = g + self.interface.n_dofs

        # broken test DOFs at enriched order, numbered per element
        self.test_offset = {}
        self.test_count = {}
        t = 0
        for el in mesh.elements:
            a, b = el.order_p + delta_p, el.order_q + delta_p
            cnt = hdiv_count(a, b) + h1_count(a, b)
            self.test_offset[el.id] = t
            self.test_count[el.id] = cnt
            t += cnt
        self.n_test = t

        self.side_basis = {}
        for el in mesh.elements:
            for side in SIDES:
                eid = mesh.elem_sides[el.id][side]
                self.side_basis[(el.id, side)] = self._make_side(el.id, eid)

        self._unconstrained = None

    def _make_side(self, elem_id, edge_id):
        mesh = self.mesh
        e = mesh.edge(edge_id)
        if e.is_slave:
            basis_edge = mesh.edge(e.constraining)
            ax = 0 if e.axis == "x" else 1
            lo_m, hi_m = basis_edge.a[ax], basis_edge.b[ax]
            lo_s, hi_s = e.a[ax], e.b[ax]
            scale = (hi_s - lo_s) / (hi_m - lo_m)
            mid_s = 0.5 * (lo_s + hi_s)
            mid_m = 0.5 * (lo_m + hi_m)
            shift = 2.0 * (mid_s - mid_m) / (hi_m - lo_m)
        else:
            basis_edge = e
            shift, scale = 0.0, 1.0
        table = self.interface
        return SideBasis(
            edge_id=edge_id,
            basis_edge_id=basis_edge.id,
            mu_count=table.mu_degree(basis_edge) + 1,
            sigma_count=table.sigma_degree(basis_edge) + 1,
            shift=shift,
            scale=scale,
            sign=e.owner_sign(mesh, elem_id),
            mu_scatter=tuple(tuple(c) for c in table.mu_combo(basis_edge.id)),
            sigma_scatter=tuple(tuple(c) for c in table.sigma_combo(basis_edge.id)),
        )

    # ---- local trial layout ----------------------------------------

    def trial_layout(self, elem_id):
        """Column spans of the local trial vector for one element.

        Order: sigma_x, sigma_y, mu fields, then per side (b, r, t, l)
        the flux block followed by the scalar-trace block.
        """
        nf = self.field_count[elem_id]
        spans = {"sx": (0, nf), "sy": (nf, 2 * nf), "mu": (2 * nf, 3 * nf)}
        pos = 3 * nf
        for side in SIDES:
            sb = self.side_basis[(elem_id, side)]
            spans[("sigma", side)] = (pos, pos + sb.sigma_count)
            pos += sb.sigma_count
            spans[("muhat", side)] = (pos, pos + sb.mu_count)
            pos += sb.mu_count
        spans["total"] = pos
        return spans

    def element_scatter(self, elem_id):
        """Active global DOFs and the local-to-global coefficient matrix T.

        Local trial coefficients u_loc relate to global ones by
        u_loc = T @ u_glob[active]; element matrices fold as T^T A T.
        """
        spans = self.trial_layout(elem_id)
        entries = [[] for _ in range(spans["total"])]
        base = self.field_offset[elem_id]
        nf = self.field_count[elem_id]
        for k in range(3 * nf):
            entries[k].append((base + k, 1.0))
        for side in SIDES:
            sb = self.side_basis[(elem_id, side)]
            s0, _ = spans[("sigma", side)]
            for k, combo in enumerate(sb.sigma_scatter):
                for dof, c in combo:
                    entries[s0 + k].append((dof, sb.sign * c))
            m0, _ = spans[("muhat", side)]
            for k, combo in enumerate(sb.mu_scatter):
                for dof, c in combo:
                    entries[m0 + k].append((dof, c))
        active = sorted({dof for row in entries for dof, _ in row})
        pos = {dof: i for i, dof in enumerate(active)}
        T = np.zeros((spans["total"], len(active)))
        for loc, row in enumerate(entries):
            for dof, c in row:
                T[loc, pos[dof]] += c
        return np.asarray(active, dtype=int), T

    # ---- unconstrained numbering & reduction -----------------------

    def _build_unconstrained(self):
        mesh = self.mesh
        table = self.interface
        u_vertex = {}
        g = self.n_fields
        for vk in table.vertex_keys:
            u_vertex[vk] = g
            g += 1
        u_mu = {}
        u_sigma = {}
        for e in sorted(mesh.edges, key=lambda e: e.id):
            d_mu = table.mu_degree(e)
            if d_mu >= 2:
                u_mu[e.id] = (g, d_mu - 1)
                g += d_mu - 1
            d_sg = table.sigma_degree(e)
            u_sigma[e.id] = (g, d_sg + 1)
            g += d_sg + 1
        n_unc = g

        rows, cols, vals = [], [], []
        fixed = set()

        def put(r, combo):
            if not combo:
                fixed.add(r)
            for dof, c in combo:
                rows.append(r)
                cols.append(dof)
                vals.append(c)

        for k in range(self.n_fields):
            put(k, [(k, 1.0)])
        for vk, r in u_vertex.items():
            put(r, table.vertex_combo(vk))
        for e in sorted(mesh.edges, key=lambda e: e.id):
            d_mu = table.mu_degree(e)
            d_sg = table.sigma_degree(e)
            if e.is_slave:
                master = mesh.edge(e.constraining)
                sbk = self.side_basis[(e.owners[0], self._side_of(e.owners[0], e.id))]
                n_s_mu, n_m_mu = d_mu + 1, table.mu_degree(master) + 1
                R = _restriction(mu_basis_1d, n_s_mu, n_m_mu, sbk.shift, sbk.scale)
                mcombo = table.mu_combo(master.id)
                if e.id in u_mu:
                    base, count = u_mu[e.id]
                    for k in range(count):
                        combo = {}
                        for j in range(n_m_mu):
                            for dof, c in mcombo[j]:
                                combo[dof] = combo.get(dof, 0.0) + R[k + 2, j] * c
                        put(base + k, sorted(combo.items()))
                n_s_sg, n_m_sg = d_sg + 1, table.sigma_degree(master) + 1
                Rs = _restriction(sigma_basis_1d, n_s_sg, n_m_sg, sbk.shift, sbk.scale)
                scombo = table.sigma_combo(master.id)
                base, count = u_sigma[e.id]
                for k in range(count):
                    combo = {}
                    for j in range(n_m_sg):
                        for dof, c in scombo[j]:
                            combo[dof] = combo.get(dof, 0.0) + Rs[k, j] * c
                    put(base + k, sorted(combo.items()))
            else:
                if e.id in u_mu:
                    base, count = u_mu[e.id]
                    bcombos = table.mu_combo(e.id)[2:]
                    for k in range(count):
                        put(base + k, bcombos[k])
                base, count = u_sigma[e.id]
                scombos = table.sigma_combo(e.id)
                for k in range(count):
                    put(base + k, scombos[k])

        C = sp.csr_matrix((vals, (rows, cols)), shape=(n_unc, self.n_trial))
        self._unconstrained = {
            "n": n_unc,
            "C": C,
            "fixed": tuple(sorted(fixed)),
            "vertex": u_vertex,
            "mu": u_mu,
            "sigma": u_sigma,
        }

    def _side_of(self, elem_id, edge_id):
        for side in SIDES:
            if self.mesh.elem_sides[elem_id][side] == edge_id:
                return side
        raise ShapeError(f"edge {edge_id} is not a side of element {elem_id}")

    @property
    def n_unconstrained(self):
        if self._unconstrained is None:
            self._build_unconstrained()
        return self._unconstrained["n"]

    @property
    def reduction(self):
        """Sparse C with unconstrained = C @ reduced on the constrained subspace."""
        if self._unconstrained is None:
            self._build_unconstrained()
        return self._unconstrained["C"]

    @property
    def dirichlet_fixed(self):
        """Unconstrained DOF indices eliminated by essential conditions."""
        if self._unconstrained is None:
            self._build_unconstrained()
        return self._unconstrained["fixed"]

    def constraint_transform(self):
        """Idempotent map of unconstrained vectors onto the constrained subspace.

        Reduced DOF j is represented by the unique unconstrained row of C
        equal to the unit vector e_j; the selector S of those rows gives
        the projection T = C S with T @ T == T.
        """
        C = self.reduction
        unit_row = {}
        indptr = C.indptr
        for r in range(C.shape[0]):
            lo, hi = indptr[r], indptr[r + 1]
            if hi - lo == 1 and C.data[lo] == 1.0:
                unit_row.setdefault(C.indices[lo], r)
        rows = [unit_row[j] for j in range(C.shape[1])]
        S = sp.csr_matrix(
            (np.ones(len(rows)), (np.arange(len(rows)), rows)),
            shape=(C.shape[1], C.shape[0]),
        )
        return C @ S


def build_dof_map(mesh: QuadtreeMesh, delta_p: int) -> DofMap:
    """Spec entry point; see DofMap."""
    return DofMap(mesh, delta_p)


def constrain(obj, dofmap: DofMap, fixed_values=None):
    """Fold an unconstrained assembled object into the reduced system.

    Matrices (n_unc x n_unc) become C^T A C; vectors become C^T b.  With
    nonzero ``fixed_values`` (indexed over unconstrained DOFs) the matrix
    call must pass the pair (A, b) so the data shift lands in the load.
    All essential values in this package are homogeneous, so the plain
    single-argument form is the common path.
    """
    C = dofmap.reduction
    if isinstance(obj, tuple):
        A, b = obj
        A = sp.csr_matrix(A)
        b = np.asarray(b, dtype=float)
        if A.shape != (dofmap.n_unconstrained, dofmap.n_unconstrained):
            raise ShapeError(f"matrix shape {A.shape} != unconstrained size")
        if b.shape != (dofmap.n_unconstrained,):
            raise ShapeError("vector length != unconstrained size")
        if fixed_values is not None:
            xf = np.asarray(fixed_values, dtype=float)
            b = b - A @ xf
        return (C.T @ A @ C).toarray(), C.T @ b
    arr = np.asarray(obj, dtype=float) if not sp.issparse(obj) else obj
    if sp.issparse(arr) or arr.ndim == 2:
        A = sp.csr_matrix(arr)
        if A.shape != (dofmap.n_unconstrained, dofmap.n_unconstrained):
            raise ShapeError(f"matrix shape {A.shape} != unconstrained size")
        return (C.T @ A @ C).toarray()
    if arr.ndim == 1:
        if arr.shape != (dofmap.n_unconstrained,):
            raise ShapeError("vector length != unconstrained size")
        return C.T @ arr
    raise ShapeError(f"cannot constrain object with shape {arr.shape}")
