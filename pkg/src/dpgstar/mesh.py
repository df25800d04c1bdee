"""Quadtree quadrilateral meshes on the unit square and the L-shaped domain.

Elements are axis-aligned squares of side 2^-level, so every coordinate is
an exact dyadic float and adjacency can be decided with integer keys.
Meshes are 1-irregular: across any edge the refinement level differs by at
most one, enforced by a worklist closure after each refinement pass.  A
coarse side facing two finer sides is kept as a "master" edge; each finer
side becomes a ``hanging_slave`` edge pointing back at its master.

Boundary edges are tagged Dirichlet or Neumann by a geometric predicate on
their midpoints: the unit-square studies use a pure Dirichlet boundary,
the L-shaped domain uses the mixed split with the Dirichlet part on the
two legs meeting at the re-entrant corner.

Meshes are immutable snapshots; ``h_refine`` and ``p_refine`` return new
meshes and bump the generation counter.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import DegreeError, NotFound

UNIT_SQUARE = "unit_square"
L_SHAPED = "l_shaped"

GEOM_TOL = 1e-12

# local side order used everywhere: bottom, right, top, left
SIDES = ("b", "r", "t", "l")


@dataclass(frozen=True)
class Element:
    """Axis-aligned square cell with an anisotropic order pair."""

    id: int
    level: int
    anchor: tuple
    size: float
    order_p: int
    order_q: int

    def dir_order(self, axis):
        """Order governing traces along an axis ('x' horizontal, 'y' vertical)."""
        return self.order_p if axis == "x" else self.order_q

    def touches_point(self, x, y, tol=GEOM_TOL):
        ax, ay = self.anchor
        return (ax - tol <= x <= ax + self.size + tol
                and ay - tol <= y <= ay + self.size + tol)


@dataclass(frozen=True)
class Edge:
    """One element side.

    kind is one of interior, hanging_slave, boundary_dirichlet,
    boundary_neumann.  A master edge (coarse side facing two finer sides)
    is interior with a single owner and a nonempty ``slaves`` tuple; a
    slave edge has a single owner plus ``constraining`` set to its master.
    """

    id: int
    a: tuple
    b: tuple
    axis: str  # 'x' for horizontal, 'y' for vertical
    h: float
    kind: str
    owners: tuple
    constraining: int = None
    slaves: tuple = ()
    min_order: int = 1

    @property
    def midpoint(self):
        return (0.5 * (self.a[0] + self.b[0]), 0.5 * (self.a[1] + self.b[1]))

    @property
    def is_boundary(self):
        return self.kind in ("boundary_dirichlet", "boundary_neumann")

    @property
    def is_slave(self):
        return self.kind == "hanging_slave"

    @property
    def is_master(self):
        return bool(self.slaves)

    @property
    def normal(self):
        """Global unit normal: tangent (lexicographic) rotated clockwise."""
        return (0.0, -1.0) if self.axis == "x" else (1.0, 0.0)

    def owner_sign(self, mesh, eid):
        """+1 when the owner's outward normal matches the global normal."""
        el = mesh.element(eid)
        if self.axis == "x":
            below = el.anchor[1] < self.a[1] - GEOM_TOL * max(1.0, abs(self.a[1]))
            # element below the line has outward normal (0, +1) on this side
            return -1.0 if below else 1.0
        left = el.anchor[0] < self.a[0] - GEOM_TOL * max(1.0, abs(self.a[0]))
        return 1.0 if left else -1.0


@dataclass(frozen=True)
class QuadtreeMesh:
    domain: str
    elements: tuple
    edges: tuple
    generation: int
    elem_sides: dict  # eid -> {'b'|'r'|'t'|'l': edge id}
    next_id: int

    def element(self, eid) -> Element:
        el = self._elem_index().get(eid)
        if el is None:
            raise NotFound(f"no element with id {eid}")
        return el

    def edge(self, gid) -> Edge:
        ed = self._edge_index().get(gid)
        if ed is None:
            raise NotFound(f"no edge with id {gid}")
        return ed

    def _elem_index(self):
        idx = self.__dict__.get("_elems")
        if idx is None:
            idx = {el.id: el for el in self.elements}
            self.__dict__["_elems"] = idx
        return idx

    def _edge_index(self):
        idx = self.__dict__.get("_edges")
        if idx is None:
            idx = {ed.id: ed for ed in self.edges}
            self.__dict__["_edges"] = idx
        return idx

    @property
    def n_elements(self):
        return len(self.elements)

    def h_min_max(self):
        sizes = [el.size for el in self.elements]
        return min(sizes), max(sizes)

    def area(self):
        return sum(el.size ** 2 for el in self.elements)


def domain_area(domain):
    return 1.0 if domain == UNIT_SQUARE else 3.0


def _on_boundary(domain, mid, axis):
    mx, my = mid
    t = GEOM_TOL
    if domain == UNIT_SQUARE:
        if axis == "x":
            return abs(my) < t or abs(my - 1.0) < t
        return abs(mx) < t or abs(mx - 1.0) < t
    # L-shaped: (-1,1)^2 minus the closed quadrant [0,1] x [-1,0]
    if axis == "x":
        if abs(my - 1.0) < t or abs(my + 1.0) < t:
            return True
        return abs(my) < t and mx > -t  # re-entrant leg y = 0, x >= 0
    if abs(mx - 1.0) < t or abs(mx + 1.0) < t:
        return True
    return abs(mx) < t and my < t  # re-entrant leg x = 0, y <= 0


def _boundary_kind(domain, mid, axis):
    mx, my = mid
    t = GEOM_TOL
    if domain == UNIT_SQUARE:
        return "boundary_dirichlet"
    if axis == "x" and abs(my) < t and 0.0 - t < mx < 1.0 + t:
        return "boundary_dirichlet"
    if axis == "y" and abs(mx) < t and -1.0 - t < my < 0.0 + t:
        return "boundary_dirichlet"
    return "boundary_neumann"


def _int_scale(elements):
    lmax = max(el.level for el in elements)
    return 2 ** (lmax + 2)


def _element_sides(el, scale):
    """Integer side records: (axis, line, lo, hi, side_name, relation).

    relation 'pos' means the element lies on the greater-coordinate side
    of the line (above for horizontal edges, right for vertical ones).
    """
    x0 = round(el.anchor[0] * scale)
    y0 = round(el.anchor[1] * scale)
    s = round(el.size * scale)
    return (
        ("x", y0, x0, x0 + s, "b", "pos"),
        ("x", y0 + s, x0, x0 + s, "t", "neg"),
        ("y", x0, y0, y0 + s, "l", "pos"),
        ("y", x0 + s, y0, y0 + s, "r", "neg"),
    )


def _build_edges(domain, elements, generation, next_id):
    scale = _int_scale(elements)
    intervals = {}  # (axis, line, lo, hi) -> list of (eid, side, relation)
    for el in elements:
        for axis, line, lo, hi, side, rel in _element_sides(el, scale):
            intervals.setdefault((axis, line, lo, hi), []).append((el.id, side, rel))

    keys = sorted(intervals)
    edge_id = {k: i for i, k in enumerate(keys)}
    elem_index = {el.id: el for el in elements}

    records = []
    elem_sides = {el.id: {} for el in elements}
    for key in keys:
        axis, line, lo, hi = key
        owners = intervals[key]
        for eid, side, _rel in owners:
            elem_sides[eid][side] = edge_id[key]
        # endpoints in (x, y) coordinates, lexicographically ordered
        if axis == "x":
            a = (lo / scale, line / scale)
            b = (hi / scale, line / scale)
        else:
            a = (line / scale, lo / scale)
            b = (line / scale, hi / scale)
        h = (hi - lo) / scale
        constraining = None
        slaves = ()
        if len(owners) == 2:
            kind = "interior"
        elif len(owners) == 1:
            mid = lo + (hi - lo) // 2
            half_lo = (axis, line, lo, mid)
            half_hi = (axis, line, mid, hi)
            length = hi - lo
            parent_candidates = [
                (axis, line, lo - length, hi),
                (axis, line, lo, hi + length),
            ]
            parent = next((pk for pk in parent_candidates if pk in intervals), None)
            if half_lo in intervals and half_hi in intervals:
                kind = "interior"  # master side: finer twins exist
                slaves = (edge_id[half_lo], edge_id[half_hi])
            elif parent is not None:
                kind = "hanging_slave"
                constraining = edge_id[parent]
            else:
                mid_pt = (((lo + hi) / 2) / scale, line / scale)
                if axis == "y":
                    mid_pt = (line / scale, ((lo + hi) / 2) / scale)
                if not _on_boundary(domain, mid_pt, axis):
                    raise ValueError(f"unmatched interior side {key}; mesh not 1-irregular")
                kind = _boundary_kind(domain, mid_pt, axis)
        else:
            raise ValueError(f"side {key} has {len(owners)} same-geometry owners")
        records.append(Edge(
            id=edge_id[key], a=a, b=b, axis=axis, h=h, kind=kind,
            owners=tuple(eid for eid, _s, _r in owners),
            constraining=constraining, slaves=slaves,
        ))

    # minimum-rule orders: every element whose closure touches the edge counts
    by_id = {e.id: e for e in records}
    finished = []
    for e in records:
        touching = list(e.owners)
        if e.is_master:
            for sid in e.slaves:
                touching.extend(by_id[sid].owners)
        if e.is_slave:
            touching.extend(by_id[e.constraining].owners)
        min_order = min(elem_index[eid].dir_order(e.axis) for eid in touching)
        finished.append(replace(e, min_order=min_order))

    return QuadtreeMesh(
        domain=domain,
        elements=tuple(sorted(elements, key=lambda el: el.id)),
        edges=tuple(finished),
        generation=generation,
        elem_sides=elem_sides,
        next_id=next_id,
    )


def build_initial(domain, p0: int, q0: int) -> QuadtreeMesh:
    """Coarsest mesh: one unit square, or three unit squares for the L."""
    if p0 < 1 or q0 < 1:
        raise DegreeError(f"element orders must be >= 1, got ({p0}, {q0})")
    if domain == UNIT_SQUARE:
        anchors = [(0.0, 0.0)]
    elif domain == L_SHAPED:
        anchors = [(-1.0, -1.0), (-1.0, 0.0), (0.0, 0.0)]
    else:
        raise ValueError(f"unknown domain {domain!r}")
    elements = [
        Element(id=i, level=0, anchor=a, size=1.0, order_p=p0, order_q=q0)
        for i, a in enumerate(anchors)
    ]
    return _build_edges(domain, elements, generation=0, next_id=len(elements))


def _split(el, next_id):
    s2 = el.size / 2.0
    ax, ay = el.anchor
    anchors = [(ax, ay), (ax + s2, ay), (ax, ay + s2), (ax + s2, ay + s2)]
    children = [
        Element(id=next_id + k, level=el.level + 1, anchor=anc, size=s2,
                order_p=el.order_p, order_q=el.order_q)
        for k, anc in enumerate(anchors)
    ]
    return children, next_id + 4


def _closure_marks(elements):
    """Elements whose edge neighbor is two or more levels finer."""
    scale = _int_scale(elements)
    lines = {}
    for el in elements:
        for axis, line, lo, hi, _side, rel in _element_sides(el, scale):
            lines.setdefault((axis, line), []).append((lo, hi, el.id, rel, el.level))
    marks = set()
    for recs in lines.values():
        pos = [r for r in recs if r[3] == "pos"]
        neg = [r for r in recs if r[3] == "neg"]
        for lo1, hi1, id1, _r1, lv1 in pos:
            for lo2, hi2, id2, _r2, lv2 in neg:
                if lo1 < hi2 and lo2 < hi1:  # open overlap = edge adjacency
                    if lv1 - lv2 >= 2:
                        marks.add(id2)
                    elif lv2 - lv1 >= 2:
                        marks.add(id1)
    return marks


def h_refine(mesh: QuadtreeMesh, marks) -> QuadtreeMesh:
    """Split each marked element into four children, then close to 1-irregular.

    Children inherit the parent's order pair.  An empty mark set returns
    the same mesh with only the generation counter advanced.
    """
    marks = set(marks)
    index = mesh._elem_index()
    unknown = marks - set(index)
    if unknown:
        raise NotFound(f"unknown element ids {sorted(unknown)}")
    if not marks:
        return replace(mesh, generation=mesh.generation + 1)
    elements = dict(index)
    next_id = mesh.next_id
    queue = marks
    while queue:
        for eid in sorted(queue):
            el = elements.pop(eid)
            children, next_id = _split(el, next_id)
            for ch in children:
                elements[ch.id] = ch
        queue = _closure_marks(list(elements.values()))
    return _build_edges(mesh.domain, list(elements.values()),
                        generation=mesh.generation + 1, next_id=next_id)


def p_refine(mesh: QuadtreeMesh, marks) -> QuadtreeMesh:
    """Raise (p, q) by one on marked elements and on their edge neighbors."""
    marks = set(marks)
    index = mesh._elem_index()
    unknown = marks - set(index)
    if unknown:
        raise NotFound(f"unknown element ids {sorted(unknown)}")
    grow = set(marks)
    for eid in marks:
        grow |= edge_neighbors(mesh, eid)
    elements = [
        replace(el, order_p=el.order_p + 1, order_q=el.order_q + 1)
        if el.id in grow else el
        for el in mesh.elements
    ]
    return _build_edges(mesh.domain, elements,
                        generation=mesh.generation + 1, next_id=mesh.next_id)


def edge_neighbors(mesh: QuadtreeMesh, eid) -> set:
    """Ids of elements sharing an edge with eid, including across hanging edges."""
    mesh.element(eid)  # raises NotFound
    adj = mesh.__dict__.get("_adjacency")
    if adj is None:
        adj = {el.id: set() for el in mesh.elements}
        for ed in mesh.edges:
            if len(ed.owners) == 2:
                a, b = ed.owners
                adj[a].add(b)
                adj[b].add(a)
            elif ed.is_slave:
                master = mesh.edge(ed.constraining)
                for a in ed.owners:
                    for b in master.owners:
                        adj[a].add(b)
                        adj[b].add(a)
        mesh.__dict__["_adjacency"] = adj
    return set(adj[eid])


def mesh_to_text(mesh: QuadtreeMesh) -> str:
    """Plain-text export, one element per line: id level ax ay size p q."""
    lines = [
        f"{el.id} {el.level} {el.anchor[0]:.17g} {el.anchor[1]:.17g} "
        f"{el.size:.17g} {el.order_p} {el.order_q}"
        for el in mesh.elements
    ]
    return "\n".join(lines) + "\n"
