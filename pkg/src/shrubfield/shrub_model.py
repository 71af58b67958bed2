"""Finite shrubs: incidence, classification, orientations, and layout.

A shrub is encoded as a finite family of pieces (leaves, which are cusped
disks, and sprigs, which are arcs) glued at junctions. The bipartite
piece/junction incidence graph must be a tree; this is the combinatorial
shadow of simple connectedness. On top of the incidence structure this
module computes: star orders and odd buds, cactuses and their attachment
parity, the puncture set a field synthesis must avoid, rigid/bland piece
classification, forced orientations with their chain certificates, skeleton
decompositions into stems, exact piecewise twist maps of the plane, and a
fully rational geometric layout (frame mode for pure cactuses, punctured
mode for shrubs with sprigs).
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from fractions import Fraction

from .curves import AffineMap
from .poly_core import format_rational, parse_rational, rational_circle_point

END_SITES = ("end0", "end1")


class ShrubError(ValueError):
    """Structurally invalid shrub input."""


# -- data model ---------------------------------------------------------------


@dataclass(frozen=True)
class Attachment:
    piece: int
    site: object  # cusp index (int) for leaves, "end0"/"end1" for sprigs


@dataclass(frozen=True)
class Junction:
    bud: int
    at: tuple
    implicit: bool = False  # synthesized for a free sprig end


@dataclass(frozen=True)
class Piece:
    kind: str  # "leaf" | "sprig"
    k: int = 0
    affine: AffineMap = None
    start: tuple = None
    end: tuple = None

    @property
    def is_leaf(self) -> bool:
        return self.kind == "leaf"

    @property
    def is_sprig(self) -> bool:
        return self.kind == "sprig"


class ShrubGraph:
    """Pieces plus junction incidence, with free sprig ends materialized.

    Every sprig endpoint that no declared junction covers receives an
    implicit junction of its own (a tip), so buds and junctions coincide.
    """

    def __init__(self, pieces, junctions):
        self.pieces = list(pieces)
        declared = list(junctions)
        used_ends = {
            (a.piece, a.site)
            for j in declared
            for a in j.at
            if isinstance(a.site, str)
        }
        next_bud = max((j.bud for j in declared), default=-1) + 1
        for pid, piece in enumerate(self.pieces):
            if piece.is_sprig:
                for site in END_SITES:
                    if (pid, site) not in used_ends:
                        declared.append(
                            Junction(
                                bud=next_bud,
                                at=(Attachment(pid, site),),
                                implicit=True,
                            )
                        )
                        next_bud += 1
        self.junctions = declared
        self._by_bud = {j.bud: j for j in self.junctions}
        if len(self._by_bud) != len(self.junctions):
            raise ShrubError("duplicate bud identifiers")

    # construction -------------------------------------------------------

    @classmethod
    def from_json(cls, text_or_obj) -> "ShrubGraph":
        obj = (
            json.loads(text_or_obj)
            if isinstance(text_or_obj, str)
            else text_or_obj
        )
        pieces = []
        for rec in obj.get("pieces", []):
            if "leaf" in rec:
                spec = rec["leaf"]
                aff = _affine_from_json(spec.get("affine"))
                pieces.append(Piece(kind="leaf", k=int(spec["k"]), affine=aff))
            elif "sprig" in rec:
                spec = rec["sprig"]
                pieces.append(
                    Piece(
                        kind="sprig",
                        start=_point_from_json(spec.get("from")),
                        end=_point_from_json(spec.get("to")),
                    )
                )
            else:
                raise ShrubError(f"unknown piece record {rec!r}")
        junctions = []
        for rec in obj.get("junctions", []):
            at = tuple(
                Attachment(int(a["piece"]), _site_from_json(a["site"]))
                for a in rec.get("at", [])
            )
            junctions.append(Junction(bud=int(rec["bud"]), at=at))
        return cls(pieces, junctions)

    def to_json(self) -> dict:
        pieces = []
        for p in self.pieces:
            if p.is_leaf:
                rec = {"k": p.k}
                if p.affine is not None:
                    rec["affine"] = _affine_to_json(p.affine)
                pieces.append({"leaf": rec})
            else:
                rec = {}
                if p.start is not None:
                    rec["from"] = _point_to_json(p.start)
                if p.end is not None:
                    rec["to"] = _point_to_json(p.end)
                pieces.append({"sprig": rec})
        junctions = [
            {
                "bud": j.bud,
                "at": [{"piece": a.piece, "site": a.site} for a in j.at],
            }
            for j in self.junctions
            if not j.implicit
        ]
        return {"pieces": pieces, "junctions": junctions}

    # incidence helpers ---------------------------------------------------

    def junction(self, bud: int) -> Junction:
        return self._by_bud[bud]

    def junctions_of_piece(self, pid: int):
        return [j for j in self.junctions if any(a.piece == pid for a in j.at)]

    def pieces_at(self, bud: int):
        return [a.piece for a in self._by_bud[bud].at]

    def leaf_ids(self):
        return [i for i, p in enumerate(self.pieces) if p.is_leaf]

    def sprig_ids(self):
        return [i for i, p in enumerate(self.pieces) if p.is_sprig]

    def sprig_end_bud(self, pid: int, site: str) -> int:
        for j in self.junctions:
            for a in j.at:
                if a.piece == pid and a.site == site:
                    return j.bud
        raise ShrubError(f"sprig {pid} end {site} has no junction")


def _site_from_json(site):
    if isinstance(site, str):
        if site not in END_SITES:
            raise ShrubError(f"unknown site {site!r}")
        return site
    return int(site)


def _point_from_json(obj):
    if obj is None:
        return None
    return tuple(
        parse_rational(v) if isinstance(v, str) else Fraction(v) for v in obj
    )


def _point_to_json(pt):
    return [format_rational(Fraction(v)) for v in pt]


def _affine_from_json(obj):
    if obj is None:
        return None
    mat = [
        [parse_rational(str(v)) if isinstance(v, str) else Fraction(v) for v in row]
        for row in obj["matrix"]
    ]
    off = _point_from_json(obj.get("offset", [0, 0]))
    return AffineMap(((mat[0][0], mat[0][1]), (mat[1][0], mat[1][1])), off)


def _affine_to_json(aff: AffineMap):
    return {
        "matrix": [[format_rational(v) for v in row] for row in aff.matrix],
        "offset": _point_to_json(aff.offset),
    }


# -- validation ----------------------------------------------------------------


@dataclass
class Diagnostics:
    ok: bool
    failures: tuple


def validate(shrub: ShrubGraph) -> Diagnostics:
    """Structural checks: sites in range, tree incidence, leaf-pair bound."""
    fails = []
    for j in shrub.junctions:
        seen_here = set()
        for a in j.at:
            if not (0 <= a.piece < len(shrub.pieces)):
                fails.append(f"junction {j.bud}: unknown piece {a.piece}")
                continue
            piece = shrub.pieces[a.piece]
            if piece.is_leaf:
                if not isinstance(a.site, int) or not (0 <= a.site < piece.k):
                    fails.append(
                        f"junction {j.bud}: leaf {a.piece} has no cusp {a.site}"
                    )
            else:
                if a.site not in END_SITES:
                    fails.append(
                        f"junction {j.bud}: sprig {a.piece} site {a.site!r}"
                    )
            if (a.piece, a.site) in seen_here:
                fails.append(
                    f"junction {j.bud}: duplicate attachment {a.piece}/{a.site}"
                )
            seen_here.add((a.piece, a.site))
    # each leaf cusp / sprig end is used by at most one junction
    site_owner = {}
    for j in shrub.junctions:
        for a in j.at:
            key = (a.piece, a.site)
            if key in site_owner and site_owner[key] != j.bud:
                fails.append(
                    f"site {key} appears in junctions {site_owner[key]} and {j.bud}"
                )
            site_owner[key] = j.bud
    if fails:
        return Diagnostics(ok=False, failures=tuple(fails))

    # connectivity and tree property of the piece/junction incidence graph
    n_pieces = len(shrub.pieces)
    n_junctions = len(shrub.junctions)
    edges = sum(len(j.at) for j in shrub.junctions)
    adj = {("p", i): [] for i in range(n_pieces)}
    adj.update({("j", j.bud): [] for j in shrub.junctions})
    for j in shrub.junctions:
        for a in j.at:
            adj[("j", j.bud)].append(("p", a.piece))
            adj[("p", a.piece)].append(("j", j.bud))
    if n_pieces:
        seen = set()
        stack = [("p", 0)]
        while stack:
            cur = stack.pop()
            if cur in seen:
                continue
            seen.add(cur)
            stack.extend(adj[cur])
        if len(seen) != n_pieces + n_junctions:
            fails.append("incidence graph is not connected")
        if edges != n_pieces + n_junctions - 1:
            fails.append(
                "incidence graph has a cycle (gluing encloses a hole)"
            )
    # two leaves may share at most one point; with tree incidence this is
    # implied, but recheck directly for defense in depth
    for i in shrub.leaf_ids():
        for l in shrub.leaf_ids():
            if l <= i:
                continue
            common = [
                j.bud
                for j in shrub.junctions
                if any(a.piece == i for a in j.at)
                and any(a.piece == l for a in j.at)
            ]
            if len(common) > 1:
                fails.append(f"leaves {i} and {l} share {len(common)} points")
    return Diagnostics(ok=not fails, failures=tuple(fails))


def require_valid(shrub: ShrubGraph):
    diag = validate(shrub)
    if not diag.ok:
        raise ShrubError("; ".join(diag.failures))


# -- bud classification ----------------------------------------------------------


@dataclass(frozen=True)
class BudInfo:
    bud: int
    order: int
    on_leaf: bool
    odd_bud: bool
    node: bool
    tip: bool


@dataclass
class BudClassification:
    buds: dict  # bud id -> BudInfo

    @property
    def odd_buds(self):
        return [b for b, info in sorted(self.buds.items()) if info.odd_bud]

    @property
    def nodes(self):
        return [b for b, info in sorted(self.buds.items()) if info.node]


def classify_buds(shrub: ShrubGraph) -> BudClassification:
    """Star order and flags for every junction point.

    The boundary of a leaf contributes two local boundary branches at each
    of its points, a sprig end contributes one; the star order of a bud is
    the branch total. A bud is an odd bud when it lies on no leaf and its
    order is odd; it is a node when removing it disconnects the shrub,
    which for junction points means at least two attachments.
    """
    require_valid(shrub)
    out = {}
    for j in shrub.junctions:
        leaves = sum(1 for a in j.at if shrub.pieces[a.piece].is_leaf)
        sprig_ends = len(j.at) - leaves
        order = 2 * leaves + sprig_ends
        on_leaf = leaves > 0
        odd = (order % 2 == 1) and not on_leaf
        node = len(j.at) >= 2
        tip = len(j.at) == 1 and sprig_ends == 1
        out[j.bud] = BudInfo(
            bud=j.bud,
            order=order,
            on_leaf=on_leaf,
            odd_bud=odd,
            node=node,
            tip=tip,
        )
    return BudClassification(buds=out)


# -- cactuses ----------------------------------------------------------------------


@dataclass(frozen=True)
class Cactus:
    leaves: tuple  # sorted leaf piece ids
    attachments: int  # sprig ends touching the union
    odd: bool


def cactuses(shrub: ShrubGraph):
    """Maximal connected unions of leaves, with sprig attachment counts."""
    require_valid(shrub)
    leaf_ids = shrub.leaf_ids()
    parent = {i: i for i in leaf_ids}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for j in shrub.junctions:
        leaves_here = [a.piece for a in j.at if shrub.pieces[a.piece].is_leaf]
        for other in leaves_here[1:]:
            parent[find(other)] = find(leaves_here[0])
    groups = {}
    for i in leaf_ids:
        groups.setdefault(find(i), []).append(i)
    out = []
    for members in groups.values():
        member_set = set(members)
        hits = 0
        for j in shrub.junctions:
            if any(a.piece in member_set for a in j.at):
                hits += sum(
                    1
                    for a in j.at
                    if shrub.pieces[a.piece].is_sprig
                )
        out.append(
            Cactus(
                leaves=tuple(sorted(members)),
                attachments=hits,
                odd=hits % 2 == 1,
            )
        )
    out.sort(key=lambda c: c.leaves)
    return out


def find_odd_cactuses(shrub: ShrubGraph):
    return [c for c in cactuses(shrub) if c.odd]


# -- parity -------------------------------------------------------------------------


def parity_check(edges, vertex_count=None):
    """Handshake identity for a finite multigraph (loops count twice).

    Returns (sum_of_vertex_orders, even_flag) and asserts the sum equals
    twice the edge count.
    """
    edges = list(edges)
    needed = max((max(u, v) for u, v in edges), default=-1) + 1
    if vertex_count is None:
        vertex_count = needed
    elif vertex_count < needed:
        raise ValueError("edge endpoint outside the declared vertex range")
    degree = [0] * vertex_count
    for u, v in edges:
        degree[u] += 1
        degree[v] += 1
    total = sum(degree)
    if total != 2 * len(edges):
        raise AssertionError(
            f"degree sum {total} != twice edge count {2 * len(edges)}"
        )
    return total, total % 2 == 0


def odd_object_recount(shrub: ShrubGraph) -> int:
    """Independent count of odd buds plus odd cactuses by degree parity.

    Contract every cactus to a single vertex and keep the off-leaf buds;
    sprigs become edges of a multigraph on these vertices. Odd buds and odd
    cactuses are then exactly the odd-degree vertices, so the two counts can
    be cross-checked without sharing any classification code.
    """
    require_valid(shrub)
    cacts = cactuses(shrub)
    leaf_home = {}
    for idx, c in enumerate(cacts):
        for leaf in c.leaves:
            leaf_home[leaf] = idx
    # vertex per cactus, then one per off-leaf bud
    bud_vertex = {}
    nxt = len(cacts)
    for j in shrub.junctions:
        leaves_here = [a.piece for a in j.at if shrub.pieces[a.piece].is_leaf]
        if leaves_here:
            bud_vertex[j.bud] = leaf_home[leaves_here[0]]
        else:
            bud_vertex[j.bud] = nxt
            nxt += 1
    degree = [0] * nxt
    for pid in shrub.sprig_ids():
        for site in END_SITES:
            degree[bud_vertex[shrub.sprig_end_bud(pid, site)]] += 1
    off_leaf = set(range(len(cacts), nxt))
    odd_vertices = 0
    for v, d in enumerate(degree):
        if v in off_leaf or v < len(cacts):
            if d % 2 == 1:
                odd_vertices += 1
    return odd_vertices


# -- puncture set -------------------------------------------------------------------


@dataclass(frozen=True)
class PunctureRef:
    kind: str  # "bud" | "cactus_cusp"
    bud: int = None
    leaf: int = None
    cusp: int = None


def _free_axis_cusp(shrub: ShrubGraph, leaf: int):
    """Lowest quarter-turn cusp of the leaf not already used by a junction."""
    k = shrub.pieces[leaf].k
    used = {
        a.site
        for j in shrub.junctions
        for a in j.at
        if a.piece == leaf
    }
    step = max(1, k // 4)
    slots = sorted({0, step, 2 * step, 3 * step} & set(range(k)))
    for cusp in slots:
        if cusp not in used:
            return cusp
    for cusp in range(k):
        if cusp not in used:
            return cusp
    return None


def required_puncture_set(shrub: ShrubGraph):
    """Points a synthesized field may not be analytic at: odd buds plus one
    representative cusp per odd cactus (lowest leaf, lowest free cusp)."""
    cls = classify_buds(shrub)
    refs = [PunctureRef(kind="bud", bud=b) for b in cls.odd_buds]
    for c in find_odd_cactuses(shrub):
        leaf = c.leaves[0]
        cusp = _free_axis_cusp(shrub, leaf)
        if cusp is None:
            cusp = 0
        refs.append(PunctureRef(kind="cactus_cusp", leaf=leaf, cusp=cusp))
    return refs


# -- rigidity ---------------------------------------------------------------------


def _component_beyond(shrub: ShrubGraph, bud: int, piece: int):
    """Piece set of the component of (shrub minus the bud) containing `piece`."""
    seen = {piece}
    stack = [piece]
    while stack:
        cur = stack.pop()
        for j in shrub.junctions:
            if j.bud == bud:
                continue
            if any(a.piece == cur for a in j.at):
                for a in j.at:
                    if a.piece not in seen:
                        seen.add(a.piece)
                        stack.append(a.piece)
    return seen


def _sub_shrub(shrub: ShrubGraph, pieces_kept, cut_bud: int) -> ShrubGraph:
    """The closure of a component as a standalone shrub.

    Junctions are restricted to the kept pieces; the cut bud survives only
    as a marker on its kept piece, carrying no attachments from elsewhere.
    """
    kept = sorted(pieces_kept)
    remap = {old: new for new, old in enumerate(kept)}
    pieces = [shrub.pieces[i] for i in kept]
    junctions = []
    for j in shrub.junctions:
        at = tuple(
            Attachment(remap[a.piece], a.site)
            for a in j.at
            if a.piece in pieces_kept
        )
        if at:
            junctions.append(Junction(bud=j.bud, at=at, implicit=j.implicit))
    return ShrubGraph(pieces, junctions)


def classify_piece(shrub: ShrubGraph, bud: int, piece: int) -> str:
    """Rigid or bland classification of a piece at an incident node.

    A sprig is always rigid. A leaf is rigid exactly when the component it
    spans beyond the node contains an odd cactus (of that component viewed
    as a shrub on its own). The flexible class needs an infinite union of
    leaves and cannot occur for finite shrubs, so everything that is not
    rigid is bland here.
    """
    if piece not in shrub.pieces_at(bud):
        raise ShrubError(f"piece {piece} does not meet bud {bud}")
    if shrub.pieces[piece].is_sprig:
        return "rigid"
    beyond = _component_beyond(shrub, bud, piece)
    sub = _sub_shrub(shrub, beyond, bud)
    return "rigid" if find_odd_cactuses(sub) else "bland"


# -- orientations -------------------------------------------------------------------


@dataclass(frozen=True)
class ChainRecord:
    elements: tuple  # alternating "node:<bud>" / "piece:<id>" labels
    stubs: tuple  # sprig piece ids hanging off the two ends
    degenerate: bool  # single-node chain between two of its own stubs


@dataclass(frozen=True)
class SprigAssignment:
    alternative: str  # "i" | "ii" | "iii"
    chain_index: int = None


@dataclass
class OrientationCertificate:
    node_orientations: dict  # bud -> tuple of piece ids, ccw, even size
    piece_orientations: dict  # piece -> tuple of bud ids, ccw, even size
    chains: tuple
    sprig_assignments: dict  # sprig id -> SprigAssignment
    orientable: bool
    failures: tuple

    def to_json(self) -> dict:
        return {
            "nodes": {
                str(b): list(v) for b, v in sorted(self.node_orientations.items())
            },
            "pieces": {
                str(p): list(v)
                for p, v in sorted(self.piece_orientations.items())
            },
            "chains": [
                {
                    "elements": list(c.elements),
                    "stubs": list(c.stubs),
                    "degenerate": c.degenerate,
                }
                for c in self.chains
            ],
            "sprigs": {
                str(s): {
                    "alternative": a.alternative,
                    "chain": a.chain_index,
                }
                for s, a in sorted(self.sprig_assignments.items())
            },
            "orientable": self.orientable,
            "failures": list(self.failures),
        }


def is_very_simple(shrub: ShrubGraph) -> bool:
    """No odd cactuses (simplicity itself is automatic for these encodings)."""
    return not find_odd_cactuses(shrub)


class _Rigidity:
    """Shared scratch state for the orientation construction."""

    def __init__(self, shrub: ShrubGraph):
        self.shrub = shrub
        self.cls = classify_buds(shrub)
        self.in_pa = {
            b: info.node and not info.odd_bud
            for b, info in self.cls.buds.items()
        }
        self._piece_rigid = {}

    def piece_rigid(self, bud: int, piece: int) -> bool:
        key = (bud, piece)
        if key not in self._piece_rigid:
            self._piece_rigid[key] = classify_piece(self.shrub, bud, piece) == "rigid"
        return self._piece_rigid[key]

    def node_rigid_for_piece(self, piece: int, bud: int) -> bool:
        """A node on a piece is rigid when the rigid pieces at it, leaving the
        piece itself out of the count, are odd in number."""
        others = [p for p in self.shrub.pieces_at(bud) if p != piece]
        rigid = sum(1 for p in others if self.piece_rigid(bud, p))
        return rigid % 2 == 1

    def sprig_endpoint_buds(self, pid: int):
        return (
            self.shrub.sprig_end_bud(pid, "end0"),
            self.shrub.sprig_end_bud(pid, "end1"),
        )

    def dangling(self, pid: int, at_bud: int) -> bool:
        """Sprig whose far endpoint (away from at_bud) is no guarded node."""
        b0, b1 = self.sprig_endpoint_buds(pid)
        far = b1 if b0 == at_bud else b0
        return not self.in_pa[far]


def orient_all(shrub: ShrubGraph) -> OrientationCertificate:
    """Forced orientations for all orientable nodes and pieces, with chains.

    For a finite shrub without odd cactuses every orientation is forced: it
    must consist of exactly the rigid elements (bland ones are excluded,
    and the flexible class is empty at finite size). The cyclic order is the
    declared attachment order at a junction and the cusp order along a leaf.
    Each sprig is then assigned one of three alternatives: "i" (no endpoint
    is a guarded node), "ii" (stub of a complete chain), "iii" (interior
    link of a complete chain). Non-even rigid counts or a sprig with no
    alternative make the certificate unorientable, with the offender named.
    """
    require_valid(shrub)
    if not is_very_simple(shrub):
        raise ShrubError("shrub has an odd cactus; orient after augmenting")
    rig = _Rigidity(shrub)
    failures = []

    node_orients = {}
    for j in shrub.junctions:
        if not rig.in_pa[j.bud]:
            continue
        rigid = [a.piece for a in j.at if rig.piece_rigid(j.bud, a.piece)]
        if not rigid:
            continue
        if len(rigid) % 2 == 1:
            failures.append(f"node {j.bud} has {len(rigid)} rigid pieces")
            continue
        node_orients[j.bud] = tuple(rigid)

    piece_orients = {}
    for pid, piece in enumerate(shrub.pieces):
        if piece.is_sprig:
            b0, b1 = rig.sprig_endpoint_buds(pid)
            if rig.in_pa[b0] and rig.in_pa[b1]:
                piece_orients[pid] = (b0, b1)
            continue
        juncs = sorted(
            (a.site, j.bud)
            for j in shrub.junctions
            for a in j.at
            if a.piece == pid
        )
        rigid = [
            bud
            for _, bud in juncs
            if rig.in_pa[bud] and rig.node_rigid_for_piece(pid, bud)
        ]
        if not rigid:
            continue
        if len(rigid) % 2 == 1:
            failures.append(f"leaf {pid} has {len(rigid)} rigid nodes")
            continue
        piece_orients[pid] = tuple(rigid)

    chains = []
    chain_keys = {}
    pair_uses = {}

    def opposed(seq, member):
        i = seq.index(member)
        return seq[(i + len(seq) // 2) % len(seq)]

    def extend(prev, cur, out):
        """Walk outward until a dangling sprig caps the chain; returns the
        stub sprig id, or None on a structural violation."""
        steps = 0
        limit = 2 * (len(shrub.pieces) + len(shrub.junctions)) + 4
        while True:
            steps += 1
            if steps > limit:
                failures.append("chain walk did not terminate")
                return None
            if cur[0] == "node":
                bud = cur[1]
                f = node_orients.get(bud)
                if f is None or prev[1] not in f:
                    failures.append(
                        f"chain walk stuck at node {bud} from piece {prev[1]}"
                    )
                    return None
                nxt = opposed(f, prev[1])
                if shrub.pieces[nxt].is_sprig and rig.dangling(nxt, bud):
                    return nxt
                out.append(("piece", nxt))
                prev, cur = cur, ("piece", nxt)
            else:
                pid = cur[1]
                f = piece_orients.get(pid)
                if f is None or prev[1] not in f:
                    failures.append(
                        f"chain walk stuck at piece {pid} from node {prev[1]}"
                    )
                    return None
                nxt = opposed(f, prev[1])
                out.append(("node", nxt))
                prev, cur = cur, ("node", nxt)

    def record_chain(elements, stubs):
        labels = tuple(f"{kind}:{ident}" for kind, ident in elements)
        key = min(labels, labels[::-1])
        if key in chain_keys:
            return chain_keys[key]
        # consume each opposed pair the chain runs through, once per chain
        for i, (kind, ident) in enumerate(elements):
            left = stubs[0] if i == 0 else elements[i - 1][1]
            right = stubs[1] if i == len(elements) - 1 else elements[i + 1][1]
            _mark_pair(pair_uses, (kind, ident), left, right)
        rec = ChainRecord(
            elements=labels,
            stubs=tuple(stubs),
            degenerate=len(labels) == 1,
        )
        chains.append(rec)
        chain_keys[key] = len(chains) - 1
        return len(chains) - 1

    # build each chain once, seeded from every stub pairing
    for bud, f in sorted(node_orients.items()):
        half = len(f) // 2
        for i in range(half):
            a, b = f[i], f[i + half]
            a_st = shrub.pieces[a].is_sprig and rig.dangling(a, bud)
            b_st = shrub.pieces[b].is_sprig and rig.dangling(b, bud)
            if not (a_st or b_st):
                continue
            if a_st and b_st:
                record_chain([("node", bud)], (a, b))
                continue
            stub, inner = (a, b) if a_st else (b, a)
            elements = [("node", bud), ("piece", inner)]
            far = extend(("node", bud), ("piece", inner), elements)
            if far is None:
                continue
            record_chain(elements, (stub, far))

    assignments = {}
    for pid in shrub.sprig_ids():
        b0, b1 = rig.sprig_endpoint_buds(pid)
        guarded = [b for b in (b0, b1) if rig.in_pa[b]]
        if not guarded:
            assignments[pid] = SprigAssignment(alternative="i")
            continue
        if len(guarded) == 2:
            idx = next(
                (
                    i
                    for i, c in enumerate(chains)
                    if f"piece:{pid}" in c.elements
                ),
                None,
            )
            if idx is None:
                failures.append(f"sprig {pid} is on no complete chain")
                continue
            assignments[pid] = SprigAssignment(alternative="iii", chain_index=idx)
            continue
        idx = next((i for i, c in enumerate(chains) if pid in c.stubs), None)
        if idx is None:
            failures.append(f"sprig {pid} caps no complete chain")
            continue
        assignments[pid] = SprigAssignment(alternative="ii", chain_index=idx)

    # every opposed pair must lie on exactly one complete chain
    for bud, f in sorted(node_orients.items()):
        half = len(f) // 2
        for i in range(half):
            a, b = f[i], f[i + half]
            n = pair_uses.get((("node", bud), min(a, b), max(a, b)), 0)
            if n != 1:
                failures.append(
                    f"node {bud} opposed pair ({a},{b}) lies on {n} chains"
                )
    for pid, f in sorted(piece_orients.items()):
        half = len(f) // 2
        for i in range(half):
            a, b = f[i], f[i + half]
            n = pair_uses.get((("piece", pid), min(a, b), max(a, b)), 0)
            if n != 1:
                failures.append(
                    f"piece {pid} opposed pair ({a},{b}) lies on {n} chains"
                )

    return OrientationCertificate(
        node_orientations=node_orients,
        piece_orientations=piece_orients,
        chains=tuple(chains),
        sprig_assignments=assignments,
        orientable=not failures,
        failures=tuple(failures),
    )


def _mark_pair(pair_uses, owner, a, b):
    key = (owner, min(a, b), max(a, b))
    pair_uses[key] = pair_uses.get(key, 0) + 1


# -- independent certificate checker -------------------------------------------------


def verify_certificate(shrub: ShrubGraph, cert: OrientationCertificate):
    """Re-derives every certified fact from the raw incidence structure.

    Deliberately shares no code with orient_all beyond the data model: star
    orders, cactus parity, rigidity, orientation contents, cyclic order and
    the full chain conditions are all recomputed literally.
    """
    failures = []

    def order_of(j):
        return sum(
            2 if shrub.pieces[a.piece].is_leaf else 1 for a in j.at
        )

    def on_leaf(j):
        return any(shrub.pieces[a.piece].is_leaf for a in j.at)

    guarded = {}
    for j in shrub.junctions:
        odd_bud = order_of(j) % 2 == 1 and not on_leaf(j)
        guarded[j.bud] = len(j.at) >= 2 and not odd_bud

    def component_pieces(cut_bud, start_piece):
        comp = {start_piece}
        frontier = [start_piece]
        while frontier:
            p = frontier.pop()
            for j in shrub.junctions:
                if j.bud == cut_bud:
                    continue
                ids = [a.piece for a in j.at]
                if p in ids:
                    for q in ids:
                        if q not in comp:
                            comp.add(q)
                            frontier.append(q)
        return comp

    def has_odd_cactus_in(comp, cut_bud):
        leaves = [p for p in comp if shrub.pieces[p].is_leaf]
        remaining = set(leaves)
        while remaining:
            seed = remaining.pop()
            group = {seed}
            changed = True
            while changed:
                changed = False
                for j in shrub.junctions:
                    if j.bud == cut_bud:
                        continue
                    ids = [
                        a.piece
                        for a in j.at
                        if a.piece in comp and shrub.pieces[a.piece].is_leaf
                    ]
                    if any(i in group for i in ids):
                        for i in ids:
                            if i not in group:
                                group.add(i)
                                changed = True
            remaining -= group
            hits = 0
            for j in shrub.junctions:
                if j.bud == cut_bud:
                    continue
                if any(a.piece in group for a in j.at):
                    hits += sum(
                        1
                        for a in j.at
                        if a.piece in comp and shrub.pieces[a.piece].is_sprig
                    )
            if hits % 2 == 1:
                return True
        return False

    def rigid_piece(bud, piece):
        if shrub.pieces[piece].is_sprig:
            return True
        comp = component_pieces(bud, piece)
        return has_odd_cactus_in(comp, bud)

    def rigid_node_on(piece, bud):
        others = [
            a.piece
            for j in shrub.junctions
            if j.bud == bud
            for a in j.at
            if a.piece != piece
        ]
        return sum(1 for p in others if rigid_piece(bud, p)) % 2 == 1

    # orientation contents and cyclic order
    for bud, f in cert.node_orientations.items():
        j = shrub.junction(bud)
        incident = [a.piece for a in j.at]
        if not guarded.get(bud, False):
            failures.append(f"node {bud} is not a guarded node")
        if len(f) == 0 or len(f) % 2 == 1:
            failures.append(f"node {bud} orientation size {len(f)}")
        if [p for p in incident if p in f] != list(f):
            failures.append(f"node {bud} orientation order mismatch")
        for p in incident:
            is_r = rigid_piece(bud, p)
            if is_r and p not in f:
                failures.append(f"node {bud} misses rigid piece {p}")
            if not is_r and p in f:
                failures.append(f"node {bud} includes bland piece {p}")
    for pid, f in cert.piece_orientations.items():
        piece = shrub.pieces[pid]
        if piece.is_sprig:
            ends = sorted(
                shrub.sprig_end_bud(pid, s) for s in END_SITES
            )
            if sorted(f) != ends:
                failures.append(f"sprig {pid} orientation must be its two ends")
            if not all(guarded.get(b, False) for b in f):
                failures.append(f"sprig {pid} oriented with unguarded end")
            continue
        juncs = sorted(
            (a.site, j.bud)
            for j in shrub.junctions
            for a in j.at
            if a.piece == pid
        )
        cyclic = [b for _, b in juncs]
        if [b for b in cyclic if b in f] != list(f):
            failures.append(f"leaf {pid} orientation order mismatch")
        if len(f) == 0 or len(f) % 2 == 1:
            failures.append(f"leaf {pid} orientation size {len(f)}")
        for b in cyclic:
            is_r = guarded.get(b, False) and rigid_node_on(pid, b)
            if is_r and b not in f:
                failures.append(f"leaf {pid} misses rigid node {b}")
            if not is_r and b in f:
                failures.append(f"leaf {pid} includes non-rigid node {b}")

    def parse_el(label):
        kind, ident = label.split(":")
        return kind, int(ident)

    def far_end(pid, near_bud):
        b0 = shrub.sprig_end_bud(pid, "end0")
        b1 = shrub.sprig_end_bud(pid, "end1")
        return b1 if b0 == near_bud else b0

    def opposed_in(seq, member):
        i = list(seq).index(member)
        return seq[(i + len(seq) // 2) % len(seq)]

    # chain conditions
    for ci, chain in enumerate(cert.chains):
        els = [parse_el(e) for e in chain.elements]
        if len(set(els)) != len(els):
            failures.append(f"chain {ci} repeats a link")
        if len(els) == 1:
            kind, bud = els[0]
            if kind != "node":
                failures.append(f"chain {ci} degenerate link must be a node")
                continue
            f = cert.node_orientations.get(bud, ())
            s0, s1 = chain.stubs
            if s0 not in f or s1 not in f or opposed_in(f, s0) != s1:
                failures.append(f"chain {ci} stubs not opposed at node {bud}")
            for s in chain.stubs:
                if not shrub.pieces[s].is_sprig or guarded.get(
                    far_end(s, bud), False
                ):
                    failures.append(f"chain {ci} stub {s} is not dangling")
            continue
        if len(els) < 3:
            failures.append(f"chain {ci} has fewer than three links")
        for (ka, ia), (kb, ib) in zip(els, els[1:]):
            if ka == kb:
                failures.append(f"chain {ci} does not alternate")
                continue
            bud = ia if ka == "node" else ib
            pid = ib if ka == "node" else ia
            if pid not in [a.piece for a in shrub.junction(bud).at]:
                failures.append(f"chain {ci}: {pid} not incident to {bud}")
        for idx in range(1, len(els) - 1):
            kind, ident = els[idx]
            f = (
                cert.node_orientations.get(ident)
                if kind == "node"
                else cert.piece_orientations.get(ident)
            )
            left = els[idx - 1][1]
            right = els[idx + 1][1]
            if f is None or left not in f or right not in f:
                failures.append(f"chain {ci} interior {kind} {ident} unoriented")
            elif opposed_in(f, left) != right:
                failures.append(
                    f"chain {ci} neighbors not opposed at {kind} {ident}"
                )
        for end_idx, neighbor_idx, stub in (
            (0, 1, chain.stubs[0]),
            (-1, -2, chain.stubs[1]),
        ):
            kind, bud = els[end_idx]
            if kind != "node":
                failures.append(f"chain {ci} end is not a node")
                continue
            f = cert.node_orientations.get(bud, ())
            neighbor = els[neighbor_idx][1]
            if neighbor not in f or opposed_in(f, neighbor) != stub:
                failures.append(f"chain {ci} stub {stub} not opposed at {bud}")
            if not shrub.pieces[stub].is_sprig or guarded.get(
                far_end(stub, bud), False
            ):
                failures.append(f"chain {ci} stub {stub} is not dangling")

    # no two chains may consume the same opposed pair
    pair_seen = {}
    for ci, chain in enumerate(cert.chains):
        els = [parse_el(e) for e in chain.elements]
        for i, (kind, ident) in enumerate(els):
            left = chain.stubs[0] if i == 0 else els[i - 1][1]
            right = chain.stubs[1] if i == len(els) - 1 else els[i + 1][1]
            key = ((kind, ident), min(left, right), max(left, right))
            if key in pair_seen and pair_seen[key] != ci:
                failures.append(
                    f"chains {pair_seen[key]} and {ci} share pair {key}"
                )
            pair_seen[key] = ci

    # every sprig must carry a verified alternative
    for pid in shrub.sprig_ids():
        a = cert.sprig_assignments.get(pid)
        if a is None:
            failures.append(f"sprig {pid} has no alternative")
            continue
        b0 = shrub.sprig_end_bud(pid, "end0")
        b1 = shrub.sprig_end_bud(pid, "end1")
        g0, g1 = guarded.get(b0, False), guarded.get(b1, False)
        if a.alternative == "i":
            if g0 or g1:
                failures.append(f"sprig {pid}: endpoint is guarded, not free")
            continue
        if a.chain_index is None or not (0 <= a.chain_index < len(cert.chains)):
            failures.append(f"sprig {pid} cites missing chain {a.chain_index}")
            continue
        chain = cert.chains[a.chain_index]
        if a.alternative == "ii":
            if pid not in chain.stubs:
                failures.append(f"sprig {pid} not a stub of chain {a.chain_index}")
            if g0 and g1:
                failures.append(f"sprig {pid} cannot be a stub: both ends guarded")
        elif a.alternative == "iii":
            if f"piece:{pid}" not in chain.elements:
                failures.append(f"sprig {pid} not a link of chain {a.chain_index}")
        else:
            failures.append(f"sprig {pid} unknown alternative {a.alternative}")

    return (not failures, tuple(failures))


# -- skeleton ---------------------------------------------------------------------


@dataclass(frozen=True)
class Stem:
    pieces: tuple  # ordered piece ids
    start_bud: int  # junction where the stem meets the earlier union (None for first)


@dataclass
class Skeleton:
    stems: tuple


def _piece_paths_from(shrub: ShrubGraph, start_piece: int, blocked):
    """All simple piece paths starting at a piece, avoiding blocked pieces."""
    best = []

    def walk(path, used_buds):
        best.append(tuple(path))
        cur = path[-1]
        for j in shrub.junctions:
            if j.bud in used_buds:
                continue
            ids = [a.piece for a in j.at]
            if cur not in ids:
                continue
            for nxt in ids:
                if nxt == cur or nxt in blocked or nxt in path:
                    continue
                walk(path + [nxt], used_buds | {j.bud})

    walk([start_piece], set())
    return best


def skeleton_decompose(shrub: ShrubGraph) -> Skeleton:
    """Ordered stems, longest piece path first, lexicographic tie-break.

    Every later stem starts at the unique junction where its component hangs
    off the already-covered union, so consecutive prefixes intersect the new
    stem at exactly one endpoint.
    """
    require_valid(shrub)
    remaining = set(range(len(shrub.pieces)))
    if not remaining:
        return Skeleton(stems=())
    covered = set()
    stems = []
    first = None
    for pid in sorted(remaining):
        for path in _piece_paths_from(shrub, pid, blocked=set()):
            key = (-len(path), path)
            if first is None or key < first[0]:
                first = (key, path)
    stems.append(Stem(pieces=first[1], start_bud=None))
    covered |= set(first[1])
    remaining -= covered

    while remaining:
        candidates = []
        for j in shrub.junctions:
            ids = [a.piece for a in j.at]
            if not any(p in covered for p in ids):
                continue
            for p in ids:
                if p in remaining:
                    for path in _piece_paths_from(
                        shrub, p, blocked=covered
                    ):
                        candidates.append(((-len(path), path, j.bud), path, j.bud))
        if not candidates:
            raise ShrubError("disconnected remainder during skeleton build")
        candidates.sort(key=lambda c: c[0])
        _, path, bud = candidates[0]
        stems.append(Stem(pieces=path, start_bud=bud))
        covered |= set(path)
        remaining -= set(path)
    return Skeleton(stems=tuple(stems))


def check_skeleton(shrub: ShrubGraph, skel: Skeleton):
    """Prefix rule: each stem meets the union of earlier stems at exactly
    one junction, and that junction touches the stem's first piece."""
    failures = []
    covered = set()
    for i, stem in enumerate(skel.stems):
        if i == 0:
            covered |= set(stem.pieces)
            continue
        meet = set()
        for j in shrub.junctions:
            ids = [a.piece for a in j.at]
            if any(p in covered for p in ids) and any(
                p in stem.pieces for p in ids
            ):
                meet.add(j.bud)
        if meet != {stem.start_bud}:
            failures.append(
                f"stem {i} meets earlier stems at {sorted(meet)}, "
                f"declared {stem.start_bud}"
            )
        covered |= set(stem.pieces)
    return (not failures, tuple(failures))


# -- twist maps --------------------------------------------------------------------


@dataclass(frozen=True)
class TwistMap:
    """Piecewise-affine rotation-by-2*pi*delta of a middle annulus sector.

    In turn coordinates on [-1/2, 1/2], the map fixes [-1/2, -1/4] and
    [1/4, 1/2], translates [-1/4 + 2|delta|, 1/4 - 2|delta|] by delta, and
    interpolates affinely on the two remaining wedges. Its plane version
    rotates each circle about the origin by the angle the turn map
    prescribes. The exact inverse is the mirrored piecewise map; composing
    with the opposite twist is NOT the identity on the wedges.
    """

    delta: Fraction

    def __post_init__(self):
        d = Fraction(self.delta)
        object.__setattr__(self, "delta", d)
        if not (-Fraction(1, 8) < d < Fraction(1, 8)):
            raise ValueError("twist angle must lie in (-1/8, 1/8) turns")

    def _pieces(self):
        d = self.delta
        m = 2 * abs(d)
        q = Fraction(1, 4)
        if m == 0:
            return [(-Fraction(1, 2), Fraction(1, 2), Fraction(1), Fraction(0))]
        # (lo, hi, slope, offset) with tau(x) = slope*x + offset on [lo, hi]
        return [
            (-Fraction(1, 2), -q, Fraction(1), Fraction(0)),
            (-q, -q + m, (m + d) / m, (-q) * (1 - (m + d) / m)),
            (-q + m, q - m, Fraction(1), d),
            (q - m, q, (m - d) / m, q * (1 - (m - d) / m)),
            (q, Fraction(1, 2), Fraction(1), Fraction(0)),
        ]

    def tau(self, theta: Fraction) -> Fraction:
        x = _wrap_turn(Fraction(theta))
        for lo, hi, slope, offset in self._pieces():
            if lo <= x <= hi:
                return slope * x + offset
        raise AssertionError("turn out of range after wrapping")

    def tau_inverse(self, theta: Fraction) -> Fraction:
        y = _wrap_turn(Fraction(theta))
        for lo, hi, slope, offset in self._pieces():
            ylo, yhi = slope * lo + offset, slope * hi + offset
            if ylo <= y <= yhi:
                return (y - offset) / slope
        raise AssertionError("turn out of range after wrapping")

    def inverse(self) -> "ExactInverseTwist":
        return ExactInverseTwist(self)

    def apply(self, point) -> tuple:
        x, y = float(point[0]), float(point[1])
        r = math.hypot(x, y)
        if r == 0.0:
            return (0.0, 0.0)
        theta = Fraction(math.atan2(y, x) / (2 * math.pi)).limit_denominator(
            10**12
        )
        t = float(self.tau(theta)) * 2 * math.pi
        return (r * math.cos(t), r * math.sin(t))

    def apply_exact(self, r: Fraction, theta_turns: Fraction):
        return (Fraction(r), self.tau(theta_turns))


@dataclass(frozen=True)
class ExactInverseTwist:
    forward: TwistMap

    def tau(self, theta: Fraction) -> Fraction:
        return self.forward.tau_inverse(theta)

    def apply(self, point) -> tuple:
        x, y = float(point[0]), float(point[1])
        r = math.hypot(x, y)
        if r == 0.0:
            return (0.0, 0.0)
        theta = Fraction(math.atan2(y, x) / (2 * math.pi)).limit_denominator(
            10**12
        )
        t = float(self.tau(theta)) * 2 * math.pi
        return (r * math.cos(t), r * math.sin(t))


def _wrap_turn(x: Fraction) -> Fraction:
    if -Fraction(1, 2) <= x <= Fraction(1, 2):
        return x
    x = x - Fraction(math.floor(x + Fraction(1, 2)))
    if x < -Fraction(1, 2) or x > Fraction(1, 2):
        raise AssertionError("turn wrapping failed")
    return x


def twist_map(delta) -> TwistMap:
    return TwistMap(delta=Fraction(delta))


# -- random generation ---------------------------------------------------------------


def random_multigraph(rng: random.Random):
    """A small multigraph (loops allowed) for the handshake parity check."""
    n = rng.randint(1, 20)
    m = rng.randint(0, 30)
    edges = [(rng.randrange(n), rng.randrange(n)) for _ in range(m)]
    return n, edges


def random_very_simple_shrub(rng: random.Random, max_pieces: int = 9) -> ShrubGraph:
    """Random tree of leaves and sprigs, then parity-fixed to kill odd cactuses.

    A junction uses at most one cusp slot per new attachment, and each leaf
    keeps at least one spare cusp so the parity fix always finds room.
    """
    pieces = []
    junction_specs = []  # list of attachment lists
    open_slots = []  # (piece, site)

    def add_leaf():
        k = rng.choice([4, 4, 8, 3, 5])
        pieces.append(Piece(kind="leaf", k=k))
        pid = len(pieces) - 1
        # keep at least one cusp spare so the parity fix always finds room
        for cusp in range(min(3, k - 1)):
            open_slots.append((pid, cusp))
        return pid

    def add_sprig():
        pieces.append(
            Piece(
                kind="sprig",
                start=(Fraction(0), Fraction(0)),
                end=(Fraction(1), Fraction(0)),
            )
        )
        pid = len(pieces) - 1
        open_slots.append((pid, "end1"))
        return pid, "end0"

    if rng.random() < 0.6:
        add_leaf()
    else:
        add_sprig()  # its first end stays free
    target = rng.randint(1, max_pieces)
    while len(pieces) < target and open_slots:
        slot_idx = rng.randrange(len(open_slots))
        parent_slot = open_slots.pop(slot_idx)
        if rng.random() < 0.5:
            child = add_leaf()
            child_site = 0
            # slot 0 of the child is consumed by this junction
            open_slots.remove((child, 0))
        else:
            child, child_site = add_sprig()
        junction_specs.append(
            [Attachment(*parent_slot), Attachment(child, child_site)]
        )

    shrub = ShrubGraph(
        pieces,
        [
            Junction(bud=i, at=tuple(at))
            for i, at in enumerate(junction_specs)
        ],
    )
    # parity fix: hang one extra free sprig off every odd cactus
    extra = []
    for c in find_odd_cactuses(shrub):
        spot = None
        for leaf in c.leaves:
            cusp = _free_cusp_any(shrub, leaf, extra)
            if cusp is not None:
                spot = (leaf, cusp)
                break
        if spot is None:
            continue  # extremely unlikely with the spare-slot policy
        pieces.append(
            Piece(
                kind="sprig",
                start=(Fraction(0), Fraction(0)),
                end=(Fraction(1), Fraction(0)),
            )
        )
        extra.append((spot[0], spot[1], len(pieces) - 1))
    bud = len(junction_specs)
    for leaf, cusp, new_sprig in extra:
        junction_specs.append(
            [Attachment(leaf, cusp), Attachment(new_sprig, "end0")]
        )
    return ShrubGraph(
        pieces,
        [
            Junction(bud=i, at=tuple(at))
            for i, at in enumerate(junction_specs)
        ],
    )


def _free_cusp_any(shrub: ShrubGraph, leaf: int, pending):
    used = {
        a.site
        for j in shrub.junctions
        for a in j.at
        if a.piece == leaf
    }
    used |= {cusp for lf, cusp, _ in pending if lf == leaf}
    for cusp in range(shrub.pieces[leaf].k):
        if cusp not in used:
            return cusp
    return None


# -- geometric layout -----------------------------------------------------------------


class LayoutError(Exception):
    def __init__(self, reason: str, detail=None):
        super().__init__(reason)
        self.reason = reason
        self.detail = detail


@dataclass(frozen=True)
class LeafPlacement:
    piece: int
    frame: bool  # the outer disk of a frame layout
    k_layout: int = 0
    affine: AffineMap = None
    center: tuple = None
    radius: Fraction = None


@dataclass(frozen=True)
class SprigPlacement:
    piece: int
    start: tuple  # None marks the end at infinity (the ray runs toward +x)
    end: tuple
    aux: bool = False


@dataclass(frozen=True)
class MaximalSegment:
    start: tuple  # None marks the end at infinity (the ray runs toward +x)
    end: tuple
    start_puncture: bool
    end_puncture: bool
    pieces: tuple  # constituent sprig ids and (leaf, entry bud, exit bud) diameters


@dataclass
class ShrubLayout:
    mode: str  # "frame" | "punctured"
    placements: dict  # piece id -> placement
    junction_points: dict  # bud -> exact plane point
    base_bud: int = None  # the puncture sent to infinity (punctured mode)
    frame_piece: int = None
    maximal_segments: tuple = ()
    aux_sprigs: tuple = ()
    shrub: ShrubGraph = None  # augmented shrub the placements refer to
    original: ShrubGraph = None
    certificate: OrientationCertificate = None
    punctures: tuple = ()  # bud ids (in the augmented shrub) removed from analyticity


def _rot90(v):
    return (-v[1], v[0])


def _cmul(a, b):
    """Complex multiplication of plane vectors (rotation composition)."""
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _leaf_k_layout(k: int) -> int:
    return max(4, ((k + 3) // 4) * 4)


_SLOT_UNITS = ((1, 0), (0, 1), (-1, 0), (0, -1))


def _leaf_affine(center, radius: Fraction, k_layout: int, slot: int, direction):
    """Affine placing a leaf of layout cusp count so that its axis cusp of
    index `slot` sits at center + radius*direction."""
    base = _cmul(direction, _conj_unit(slot))
    s = Fraction(radius, k_layout)
    col0 = (s * base[0], s * base[1])
    col1 = (-s * base[1], s * base[0])
    return AffineMap(
        ((col0[0], col1[0]), (col0[1], col1[1])),
        (Fraction(center[0]), Fraction(center[1])),
    )


def _conj_unit(slot: int):
    u = _SLOT_UNITS[slot % 4]
    return (Fraction(u[0]), Fraction(-u[1]))


def _axis_cusp_raw(k_layout: int, slot: int):
    u = _SLOT_UNITS[slot % 4]
    return (Fraction(k_layout * u[0]), Fraction(k_layout * u[1]))


def layout_shrub(shrub: ShrubGraph, cert: OrientationCertificate = None) -> ShrubLayout:
    """Exact-rational geometric realization of a shrub.

    Pure cactuses are drawn in frame mode: one designated leaf becomes the
    outer disk (everything outside the unit circle plus infinity) and all
    other leaves are nested hypocycloids inside it. Shrubs with sprigs go to
    punctured mode: odd cactuses are first balanced with auxiliary sprigs,
    the augmented shrub is oriented, and one base bud is sent to infinity:
    every sprig at the base becomes a horizontal ray and the rest of its
    component hangs off the ray's finite end, with the chart origin kept
    clear of all pieces. Complete chains run along straight lines, and the
    boundary splits into maximal segments whose endpoints are punctures
    (an endpoint of None means the segment escapes to infinity).
    """
    require_valid(shrub)
    if not shrub.sprig_ids():
        return _layout_frame(shrub)
    return _layout_punctured(shrub, cert)


# direction of every infinite ray; the base bud sits at +infinity on the
# horizontal axis of each ray's line
_RAY_DIR = (Fraction(1), Fraction(0))


def _layout_frame(shrub: ShrubGraph) -> ShrubLayout:
    if find_odd_cactuses(shrub):
        raise LayoutError("sprig-free shrub with an odd cactus should not exist")
    counts = {
        pid: len(shrub.junctions_of_piece(pid)) for pid in shrub.leaf_ids()
    }
    root = max(counts, key=lambda pid: (counts[pid], -pid))
    for attempt in range(7):
        shrink = Fraction(1, 2**attempt)
        try:
            return _try_layout_frame(shrub, root, shrink)
        except _Collision:
            continue
    raise LayoutError("frame layout found no collision-free scale", detail=root)


class _Collision(Exception):
    pass


def _try_layout_frame(shrub, root, shrink) -> ShrubLayout:
    placements = {root: LeafPlacement(piece=root, frame=True)}
    junction_points = {}
    balls = {}  # piece -> (center, radius) for inner leaves
    frame_tangent = set()  # leaves allowed to touch the unit circle

    root_juncs = sorted(
        (next(a.site for a in j.at if a.piece == root), j.bud)
        for j in shrub.junctions_of_piece(root)
    )
    n = max(1, len(root_juncs))
    s0 = min(Fraction(1, 4), Fraction(1, 2 * n)) * shrink

    def circle_direction(i):
        angle = math.pi * (2 * i + 1) / (2 * n)  # half-angle in (0, pi)
        if abs(angle - math.pi / 2) < 1e-12:
            return (Fraction(-1), Fraction(0))
        t = Fraction(math.tan(angle)).limit_denominator(64)
        return rational_circle_point(t)

    def place_leaf(pid, q, direction, radius, parent_bud):
        """Leaf with its entry cusp at q, body along +direction."""
        center = (q[0] + radius * direction[0], q[1] + radius * direction[1])
        k_layout = _leaf_k_layout(shrub.pieces[pid].k)
        aff = _leaf_affine(center, radius, k_layout, 0, _neg(direction))
        placements[pid] = LeafPlacement(
            piece=pid,
            frame=False,
            k_layout=k_layout,
            affine=aff,
            center=center,
            radius=radius,
        )
        balls[pid] = (center, radius)
        juncs = sorted(
            (next(a.site for a in j.at if a.piece == pid), j.bud)
            for j in shrub.junctions_of_piece(pid)
        )
        if len(juncs) > 4:
            raise LayoutError(
                "leaf carries more junctions than exact cusp slots",
                detail=pid,
            )
        order = [bud for _, bud in juncs]
        if parent_bud is not None:
            i = order.index(parent_bud)
            order = order[i:] + order[:i]
        for slot, bud in enumerate(order):
            raw = _axis_cusp_raw(k_layout, slot)
            point = aff.apply(raw)
            if bud == parent_bud:
                if point != q:
                    raise AssertionError("entry cusp landed off the junction")
                continue
            junction_points[bud] = point
            out_dir = _unit_from_center(center, point, radius)
            for other in shrub.pieces_at(bud):
                if other == pid:
                    continue
                place_leaf(other, point, out_dir, radius / 4, bud)

    for i, (_, bud) in enumerate(root_juncs):
        q = circle_direction(i)
        junction_points[bud] = q
        inward = _neg(q)
        for pid in shrub.pieces_at(bud):
            if pid == root:
                continue
            frame_tangent.add(pid)
            place_leaf(pid, q, inward, s0, bud)

    _check_frame_collisions(shrub, balls, frame_tangent)
    return ShrubLayout(
        mode="frame",
        placements=placements,
        junction_points=junction_points,
        frame_piece=root,
        shrub=shrub,
        original=shrub,
        punctures=(),
    )


def _neg(v):
    return (-v[0], -v[1])


def _unit_from_center(center, point, radius):
    return (
        (point[0] - center[0]) / radius,
        (point[1] - center[1]) / radius,
    )


def _check_frame_collisions(shrub, balls, frame_tangent):
    """Exact disjointness of the bounding balls, except declared tangencies."""
    ids = sorted(balls)
    adjacency = set()
    for j in shrub.junctions:
        ps = [a.piece for a in j.at]
        for a in ps:
            for b in ps:
                if a < b:
                    adjacency.add((a, b))
    for i, a in enumerate(ids):
        ca, ra = balls[a]
        norm2 = ca[0] ** 2 + ca[1] ** 2
        lim_frame = (1 - ra) ** 2
        if a in frame_tangent:
            # tangent to the unit circle exactly at its entry junction
            if norm2 != lim_frame:
                raise AssertionError("frame child is not tangent to the circle")
        elif norm2 >= lim_frame:
            raise _Collision
        if norm2 <= ra * ra:
            raise _Collision  # the origin (south pole) must stay outside
        for b in ids[i + 1:]:
            cb, rb = balls[b]
            d2 = (ca[0] - cb[0]) ** 2 + (ca[1] - cb[1]) ** 2
            lim = (ra + rb) ** 2
            if (a, b) in adjacency:
                if d2 != lim:
                    raise AssertionError("adjacent leaves are not tangent")
            elif d2 <= lim:
                raise _Collision


# punctured mode ----------------------------------------------------------------


def augment_with_parity_sprigs(shrub: ShrubGraph):
    """Attach one auxiliary free sprig at each odd cactus representative.

    Returns (augmented shrub, aux sprig ids, aux junction buds, puncture refs).
    The augmented shrub has no odd cactuses, so it can be oriented.
    """
    refs = required_puncture_set(shrub)
    pieces = list(shrub.pieces)
    # keep implicit tip junctions so bud ids stay stable across augmentation
    junctions = list(shrub.junctions)
    next_bud = max((j.bud for j in junctions), default=-1) + 1
    aux_ids = []
    aux_buds = []
    for ref in refs:
        if ref.kind != "cactus_cusp":
            continue
        pieces.append(
            Piece(
                kind="sprig",
                start=(Fraction(0), Fraction(0)),
                end=(Fraction(1), Fraction(0)),
            )
        )
        pid = len(pieces) - 1
        aux_ids.append(pid)
        junctions.append(
            Junction(
                bud=next_bud,
                at=(
                    Attachment(ref.leaf, ref.cusp),
                    Attachment(pid, "end0"),
                ),
            )
        )
        aux_buds.append(next_bud)
        next_bud += 1
    return ShrubGraph(pieces, junctions), tuple(aux_ids), tuple(aux_buds), refs


def _layout_punctured(shrub: ShrubGraph, cert) -> ShrubLayout:
    aug, aux_ids, aux_buds, refs = augment_with_parity_sprigs(shrub)
    if cert is None:
        cert = orient_all(aug)
    if not cert.orientable:
        raise LayoutError(
            "shrub is not orientable", detail=cert.failures
        )
    cls = classify_buds(aug)
    original_bud_ids = {j.bud for j in shrub.junctions}
    original_odd = [b for b in cls.odd_buds if b in original_bud_ids]
    # base point sent to infinity: the first odd bud of the original shrub,
    # or the free tip of the first auxiliary stub when only odd cactuses
    # forced the punctures (odd buds carry no leaf, so everything at the
    # base is a sprig and can become a ray)
    if not original_odd and not aux_ids:
        raise LayoutError("punctured layout needs at least one puncture")
    if original_odd:
        base_bud = original_odd[0]
    else:
        base_bud = aug.sprig_end_bud(aux_ids[0], "end1")

    for attempt in range(7):
        shrink = Fraction(1, 2**attempt)
        try:
            return _try_layout_punctured(
                shrub, aug, cert, base_bud, aux_ids, aux_buds, shrink, attempt
            )
        except _Collision:
            continue
    raise LayoutError("punctured layout found no collision-free scale")


def _try_layout_punctured(
    shrub, aug, cert, base_bud, aux_ids, aux_buds, shrink, salt=0
):
    placements = {}
    # None is the point at infinity; only the base bud lives there
    junction_points = {base_bud: None}

    base_len = Fraction(1, 1) * shrink

    fan_ts = [
        Fraction(0),
        Fraction(1, 3),
        Fraction(-1, 3),
        Fraction(1),
        Fraction(-1),
        Fraction(3),
        Fraction(-3),
        Fraction(1, 7),
        Fraction(-1, 7),
        Fraction(7),
        Fraction(-7),
    ]
    # retries nudge every fan angle so scale-invariant crossings can resolve
    twist = Fraction(1, 5) + Fraction(salt, 17)

    def fresh_directions(count, base_dir, taken):
        """Rational unit vectors, pairwise non-parallel, avoiding `taken`."""
        out = []
        if count == 0:
            return out
        for t in fan_ts:
            cand = _cmul(base_dir, rational_circle_point(t + twist))
            if any(_parallel(cand, d) for d in taken + out):
                continue
            out.append(cand)
            if len(out) == count:
                return out
        raise LayoutError("direction fan exhausted at a crowded junction")

    def visit_junction(bud, come_from_piece, in_dir, depth):
        """Place every other piece at this junction; in_dir points along the
        travel direction into the junction."""
        point = junction_points[bud]
        j = aug.junction(bud)
        others = [a.piece for a in j.at if a.piece != come_from_piece]
        f = cert.node_orientations.get(bud)
        base_dir = in_dir
        came_from_leaf = aug.pieces[come_from_piece].is_leaf
        dirs = {}

        def opp_in_f(p):
            i = f.index(p)
            return f[(i + len(f) // 2) % len(f)]

        def taken():
            return list(dirs.values()) + [in_dir]

        # the chain through the incoming piece continues straight
        if f is not None and come_from_piece in f:
            dirs[opp_in_f(come_from_piece)] = in_dir

        # leaf balls touching at one point must be tangent along one line
        other_leaves = [p for p in others if aug.pieces[p].is_leaf]
        if len(other_leaves) + (1 if came_from_leaf else 0) > 2:
            raise LayoutError(
                "more than two leaves meet at one point", detail=bud
            )
        if came_from_leaf:
            for p in other_leaves:
                if p in dirs and dirs[p] != in_dir:
                    raise LayoutError(
                        "chain pairing conflicts with leaf tangency",
                        detail=bud,
                    )
                dirs[p] = in_dir
        elif len(other_leaves) == 2:
            l1, l2 = other_leaves
            have = [p for p in (l1, l2) if p in dirs]
            if have:
                got = have[0]
                far = l2 if got == l1 else l1
                if far not in dirs:
                    dirs[far] = _neg(dirs[got])
            else:
                d = fresh_directions(1, base_dir, taken())[0]
                dirs[l1], dirs[l2] = d, _neg(d)
        # pair partners of any forced leaf directions stay antiparallel
        if f is not None:
            for p in other_leaves:
                if p in dirs and p in f:
                    q = opp_in_f(p)
                    if q not in dirs:
                        dirs[q] = _neg(dirs[p])

        if f is not None:
            half = len(f) // 2
            unresolved = [
                i
                for i in range(half)
                if f[i] not in dirs
                and f[i + half] not in dirs
                and f[i] != come_from_piece
                and f[i + half] != come_from_piece
            ]
            fresh = fresh_directions(len(unresolved), base_dir, taken())
            for i, d in zip(unresolved, fresh):
                dirs[f[i]] = d
                dirs[f[i + half]] = _neg(d)
        plain = [p for p in others if p not in dirs]
        for pid, d in zip(
            plain, fresh_directions(len(plain), base_dir, taken())
        ):
            dirs[pid] = d
        for pid in others:
            place_piece(pid, bud, point, dirs[pid], depth)

    def place_piece(pid, from_bud, point, direction, depth):
        piece = aug.pieces[pid]
        if piece.is_sprig:
            length = base_len / (4**depth)
            far = (
                point[0] + length * direction[0],
                point[1] + length * direction[1],
            )
            b0 = aug.sprig_end_bud(pid, "end0")
            b1 = aug.sprig_end_bud(pid, "end1")
            far_bud = b1 if b0 == from_bud else b0
            placements[pid] = SprigPlacement(
                piece=pid,
                start=point if b0 == from_bud else far,
                end=far if b0 == from_bud else point,
                aux=pid in aux_ids,
            )
            junction_points[far_bud] = far
            visit_junction(far_bud, pid, direction, depth + 1)
            return
        # leaf: entry cusp at `point`, body along +direction
        radius = base_len / 2 / (4**depth)
        center = (
            point[0] + radius * direction[0],
            point[1] + radius * direction[1],
        )
        k_layout = _leaf_k_layout(piece.k)
        juncs = sorted(
            (next(a.site for a in jj.at if a.piece == pid), jj.bud)
            for jj in aug.junctions_of_piece(pid)
        )
        if len(juncs) > 4:
            raise LayoutError(
                "leaf carries more junctions than exact cusp slots", detail=pid
            )
        order = [b for _, b in juncs]
        slot_map = _embed_leaf_slots(
            order, from_bud, cert.piece_orientations.get(pid)
        )
        if slot_map is None:
            raise LayoutError(
                "leaf junction order cannot respect its opposed pairs",
                detail=pid,
            )
        entry_slot = slot_map[from_bud]
        aff = _leaf_affine(center, radius, k_layout, entry_slot, _neg(direction))
        placements[pid] = LeafPlacement(
            piece=pid,
            frame=False,
            k_layout=k_layout,
            affine=aff,
            center=center,
            radius=radius,
        )
        for bud, slot in slot_map.items():
            raw = _axis_cusp_raw(k_layout, slot)
            cusp_point = aff.apply(raw)
            if bud == from_bud:
                if cusp_point != point:
                    raise AssertionError("entry cusp landed off the junction")
                continue
            junction_points[bud] = cusp_point
            out_dir = _unit_from_center(center, cusp_point, radius)
            visit_junction(bud, pid, out_dir, depth + 1)

    # every sprig at the base becomes a horizontal ray running to +infinity;
    # each one gets its own widely separated line, so rays never meet, the
    # origin stays clear, and components stay inside small anchor clusters
    for idx, pid in enumerate(sorted(aug.pieces_at(base_bud))):
        anchor = (Fraction(2), Fraction(4 * idx + 2))
        b0 = aug.sprig_end_bud(pid, "end0")
        far_bud = aug.sprig_end_bud(pid, "end1") if b0 == base_bud else b0
        placements[pid] = SprigPlacement(
            piece=pid,
            start=None if b0 == base_bud else anchor,
            end=anchor if b0 == base_bud else None,
            aux=pid in aux_ids,
        )
        junction_points[far_bud] = anchor
        visit_junction(far_bud, pid, _neg(_RAY_DIR), 1)

    if len(junction_points) != len(aug.junctions):
        raise LayoutError("layout did not reach every junction")

    segments = _collect_maximal_segments(
        aug, cert, placements, junction_points, aux_ids
    )
    _check_punctured_collisions(aug, placements, junction_points)
    # every odd bud of the augmented shrub ends an arc (the auxiliary stub
    # tips included), and each auxiliary junction cuts its chain in two
    punctures = tuple(sorted(set(classify_buds(aug).odd_buds) | set(aux_buds)))
    return ShrubLayout(
        mode="punctured",
        placements=placements,
        junction_points=junction_points,
        base_bud=base_bud,
        maximal_segments=segments,
        aux_sprigs=tuple(aux_ids),
        shrub=aug,
        original=shrub,
        certificate=cert,
        punctures=punctures,
    )


def _parallel(a, b):
    return a[0] * b[1] - a[1] * b[0] == 0


def _embed_leaf_slots(order, entry_bud, orientation):
    """Assign quarter-turn cusp slots to the leaf's junctions.

    Preserves the cyclic cusp order and puts opposed oriented pairs on
    opposite slots. Returns bud -> slot, or None when no rotation works.
    """
    n = len(order)
    if n > 4:
        return None
    pairs = []
    if orientation:
        half = len(orientation) // 2
        pairs = [
            (orientation[i], orientation[i + half]) for i in range(half)
        ]
    for rot in range(n):
        cyc = order[rot:] + order[:rot]
        for spread in _slot_spreads(n):
            slot = dict(zip(cyc, spread))
            ok = all(
                (slot[a] - slot[b]) % 4 == 2 for a, b in pairs if a in slot and b in slot
            )
            if ok and (entry_bud is None or entry_bud in slot):
                return slot
    return None


def _slot_spreads(n):
    if n == 1:
        return [(0,)]
    if n == 2:
        return [(0, 2), (0, 1)]
    if n == 3:
        return [(0, 1, 2), (0, 1, 3), (0, 2, 3)]
    return [(0, 1, 2, 3)]


def _collect_maximal_segments(aug, cert, placements, junction_points, aux_ids):
    """Straight factor segments: chains realized as collinear runs, plus
    lone sprigs with both ends free. Auxiliary stubs are cut off their
    chain at the junction and emitted as separate one-sprig segments. An
    endpoint of None is the base bud at infinity."""
    segments = []

    def tip_point(pid, node_bud):
        b0 = aug.sprig_end_bud(pid, "end0")
        b1 = aug.sprig_end_bud(pid, "end1")
        far = b1 if b0 == node_bud else b0
        return junction_points[far], far

    for chain in cert.chains:
        els = [e.split(":") for e in chain.elements]
        first_node = int(els[0][1])
        last_node = int(els[-1][1])
        s0, s1 = chain.stubs
        waypoints = []
        pieces = []
        if s0 in aux_ids:
            start = junction_points[first_node]
        else:
            start, _ = tip_point(s0, first_node)  # the free tip is an odd bud
            pieces.append(("sprig", s0))
            waypoints.append(start)
        waypoints.append(junction_points[first_node])
        for kind, ident in els:
            ident = int(ident)
            if kind == "node":
                waypoints.append(junction_points[ident])
            else:
                if aug.pieces[ident].is_sprig:
                    pieces.append(("sprig", ident))
                else:
                    pieces.append(("diameter", ident))
        if s1 in aux_ids:
            end = junction_points[last_node]
        else:
            end, _ = tip_point(s1, last_node)
            pieces.append(("sprig", s1))
            waypoints.append(end)
        start_pt = start if s0 not in aux_ids else junction_points[first_node]
        end_pt = end
        for w in waypoints:
            if w is None:
                continue
            if not _collinear_run(start_pt, end_pt, w):
                raise AssertionError("chain waypoints are not collinear")
        segments.append(
            MaximalSegment(
                start=start_pt,
                end=end_pt,
                start_puncture=True,
                end_puncture=True,
                pieces=tuple(pieces),
            )
        )

    claimed = {
        ident for seg in segments for kind, ident in seg.pieces if kind == "sprig"
    }
    for pid, assign in cert.sprig_assignments.items():
        if assign.alternative == "i" and pid not in aux_ids:
            b0 = aug.sprig_end_bud(pid, "end0")
            b1 = aug.sprig_end_bud(pid, "end1")
            segments.append(
                MaximalSegment(
                    start=junction_points[b0],
                    end=junction_points[b1],
                    start_puncture=True,
                    end_puncture=True,
                    pieces=(("sprig", pid),),
                )
            )
            claimed.add(pid)
    # auxiliary stubs stay in the drawn boundary as their own segments from
    # the cutting junction to the free tip
    for pid in aux_ids:
        segments.append(
            MaximalSegment(
                start=junction_points[aug.sprig_end_bud(pid, "end0")],
                end=junction_points[aug.sprig_end_bud(pid, "end1")],
                start_puncture=True,
                end_puncture=True,
                pieces=(("sprig", pid),),
            )
        )
        claimed.add(pid)
    missing = set(aug.sprig_ids()) - claimed
    if missing:
        raise LayoutError(
            "sprigs not covered by any maximal segment", detail=sorted(missing)
        )
    return tuple(segments)


def _collinear(a, b, c):
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]) == 0


def _collinear_run(start, end, w):
    """Collinearity against a segment whose None end lies at +x infinity."""
    if start is None:
        return w[1] == end[1]
    if end is None:
        return w[1] == start[1]
    return _collinear(start, end, w)


def _check_punctured_collisions(aug, placements, junction_points):
    """Exact pairwise separation of leaf balls, sprig segments, and rays,
    plus clearance of the chart origin from every drawn piece."""
    adjacency = set()
    for j in aug.junctions:
        ps = [a.piece for a in j.at]
        for a in ps:
            for b in ps:
                if a < b:
                    adjacency.add((a, b))
    items = sorted(placements)
    origin = (Fraction(0), Fraction(0))
    for pid in items:
        p = placements[pid]
        if isinstance(p, LeafPlacement):
            if _dist2(p.center, origin) <= p.radius**2:
                raise _Collision
        elif _point_span_dist2(origin, _sprig_span(p)) == 0:
            raise _Collision
    for i, a in enumerate(items):
        pa = placements[a]
        for b in items[i + 1:]:
            pb = placements[b]
            adjacent = (a, b) in adjacency
            if isinstance(pa, LeafPlacement) and isinstance(pb, LeafPlacement):
                d2 = _dist2(pa.center, pb.center)
                lim = (pa.radius + pb.radius) ** 2
                if adjacent:
                    if d2 != lim:
                        raise AssertionError("adjacent leaves are not tangent")
                elif d2 <= lim:
                    raise _Collision
            elif isinstance(pa, LeafPlacement) or isinstance(pb, LeafPlacement):
                leaf, seg = (pa, pb) if isinstance(pa, LeafPlacement) else (pb, pa)
                if adjacent:
                    # the sprig leaves the tangency cusp pointing outward
                    shared = _shared_junction_point(
                        aug, leaf.piece, seg.piece, junction_points
                    )
                    _require_span_outside_ball(
                        _sprig_span(seg), leaf, allow_touch=shared
                    )
                else:
                    _require_span_outside_ball(
                        _sprig_span(seg), leaf, allow_touch=None
                    )
            else:
                sa, sb = _sprig_span(pa), _sprig_span(pb)
                if not adjacent:
                    if _spans_intersect(sa, sb):
                        raise _Collision
                else:
                    shared = _shared_junction_point(
                        aug, pa.piece, pb.piece, junction_points
                    )
                    if _spans_overlap_beyond_point(sa, sb, shared):
                        raise _Collision


def _dist2(a, b):
    return (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2


def _shared_junction_point(aug, pid_a, pid_b, junction_points):
    for j in aug.junctions:
        ids = [a.piece for a in j.at]
        if pid_a in ids and pid_b in ids:
            return junction_points[j.bud]
    return None


def _sprig_span(p):
    """Normalized geometry of a sprig placement: ("seg", a, b) for a finite
    segment, ("ray", anchor, None) for a ray from anchor toward +x."""
    if p.start is None:
        return ("ray", p.end, None)
    if p.end is None:
        return ("ray", p.start, None)
    return ("seg", p.start, p.end)


def _point_span_dist2(c, span):
    kind, a, b = span
    if kind == "seg":
        return _point_segment_dist2(c, a, b)
    if c[0] >= a[0]:
        return (c[1] - a[1]) ** 2
    return _dist2(c, a)


def _require_span_outside_ball(span, leaf, allow_touch):
    c, r = leaf.center, leaf.radius
    if _point_span_dist2(c, span) > r * r:
        return
    if allow_touch is not None:
        # touching is fine only at the shared cusp, from which the span
        # must run monotonically away from the center
        v = _dir_away(span, allow_touch)
        if v is not None:
            w = (allow_touch[0] - c[0], allow_touch[1] - c[1])
            if v[0] * w[0] + v[1] * w[1] >= 0:
                return
    raise _Collision


def _point_segment_dist2(p, a, b):
    ab = (b[0] - a[0], b[1] - a[1])
    ap = (p[0] - a[0], p[1] - a[1])
    denom = ab[0] ** 2 + ab[1] ** 2
    if denom == 0:
        return ap[0] ** 2 + ap[1] ** 2
    t = (ap[0] * ab[0] + ap[1] * ab[1]) / denom
    t = max(Fraction(0), min(Fraction(1), t))
    q = (a[0] + t * ab[0], a[1] + t * ab[1])
    return _dist2(p, q)


def _segments_intersect(a, b, c, d):
    def orient(p, q, r):
        v = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
        return (v > 0) - (v < 0)

    def on_seg(p, q, r):
        return (
            min(p[0], q[0]) <= r[0] <= max(p[0], q[0])
            and min(p[1], q[1]) <= r[1] <= max(p[1], q[1])
        )

    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    if o1 != o2 and o3 != o4:
        return True
    for p, q, r in ((a, b, c), (a, b, d), (c, d, a), (c, d, b)):
        if orient(p, q, r) == 0 and on_seg(p, q, r):
            return True
    return False


def _spans_intersect(sa, sb):
    ka, a0, a1 = sa
    kb, b0, b1 = sb
    if ka == "seg" and kb == "seg":
        return _segments_intersect(a0, a1, b0, b1)
    if ka == "ray" and kb == "ray":
        # both rays run toward +x, so they meet exactly when they share a line
        return a0[1] == b0[1]
    if ka == "ray":
        a0, a1, b0 = b0, b1, a0
    return _segment_ray_intersect(a0, a1, b0)


def _segment_ray_intersect(p, q, a):
    """Does segment p-q meet the ray from a toward +x?"""
    dy = q[1] - p[1]
    if dy == 0:
        return p[1] == a[1] and max(p[0], q[0]) >= a[0]
    s = (a[1] - p[1]) / dy
    if s < 0 or s > 1:
        return False
    x = p[0] + s * (q[0] - p[0])
    return x >= a[0]


def _dir_away(span, shared):
    """Direction from `shared` toward the span's other end, or None when
    `shared` is not a finite endpoint of the span."""
    kind, a, b = span
    if kind == "ray":
        return _RAY_DIR if a == shared else None
    if a == shared:
        return (b[0] - a[0], b[1] - a[1])
    if b == shared:
        return (a[0] - b[0], a[1] - b[1])
    return None


def _spans_overlap_beyond_point(sa, sb, shared):
    """Adjacent sprigs may meet only at their shared junction point; a
    shared point of None (the bud at infinity) demands plane disjointness."""
    if shared is None:
        return _spans_intersect(sa, sb)
    if not _spans_intersect(sa, sb):
        return False
    # straight spans leaving one point meet again only if they run the same
    # way along one line; opposite collinear continuations are legitimate
    va = _dir_away(sa, shared)
    vb = _dir_away(sb, shared)
    if va is None or vb is None:
        return True
    if _parallel(va, vb):
        return va[0] * vb[0] + va[1] * vb[1] > 0
    return False
