"""SMILES parsing, molecular graphs, and canonicalization.

Supports the Daylight organic subset (B, C, N, O, P, S, F, Cl, Br, I),
aromatic lowercase atoms, branches, ring closures (including ``%nn``),
bracket atoms with charges and explicit hydrogen counts, and dot-separated
fragments. Stereochemistry and isotopes are accepted but dropped with a
warning; valence violations are warnings, not errors, because generated
SMILES are often near-valid and still need to be scored downstream.

Aromaticity model: lowercase input atoms are aromatic when ring perception
confirms they sit in a ring; Kekulé-form aromatization is limited to
6-membered carbocycles with alternating single/double bonds. Fused Kekulé
systems are kept as written (documented limitation).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from enum import Enum

ORGANIC_SUBSET = {"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"}
AROMATIC_SYMBOLS = {"b", "c", "n", "o", "p", "s"}

# Standard valences used for implicit hydrogen assignment.
VALENCES = {
    "B": (3,),
    "C": (4,),
    "N": (3, 5),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}

# Elements recognised inside brackets (organic subset plus common others).
KNOWN_ELEMENTS = ORGANIC_SUBSET | {
    "H", "He", "Li", "Be", "Ne", "Na", "Mg", "Al", "Si", "Ar", "K", "Ca",
    "Ti", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se",
    "Kr", "Rb", "Sr", "Zr", "Mo", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn",
    "Sb", "Te", "Xe", "Cs", "Ba", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg",
    "Tl", "Pb", "Bi",
}


class BondOrder(Enum):
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4


_BOND_SYMBOLS = {"-": BondOrder.SINGLE, "=": BondOrder.DOUBLE,
                 "#": BondOrder.TRIPLE, ":": BondOrder.AROMATIC}
_ORDER_VALUE = {BondOrder.SINGLE: 1.0, BondOrder.DOUBLE: 2.0,
                BondOrder.TRIPLE: 3.0, BondOrder.AROMATIC: 1.5}


class ParseErrorKind(Enum):
    UNBALANCED_RING_CLOSURE = "unbalanced ring closure"
    UNCLOSED_BRANCH = "unclosed branch"
    UNKNOWN_ELEMENT = "unknown element"
    VALENCE_VIOLATION = "valence violation"
    EMPTY_INPUT = "empty input"


@dataclass(frozen=True)
class ParseDiagnostics:
    """Structured parse failure: what went wrong and where.

    ``offset`` is a byte offset into the input string. Syntax problems with
    no kind of their own map to the nearest kind: malformed brackets and
    unsupported tokens report ``UNKNOWN_ELEMENT``; dangling bonds and branch
    misuse report ``UNCLOSED_BRANCH``. Unmatched ring markers report the
    offset of the atom that opened the marker.
    """

    kind: ParseErrorKind
    offset: int
    message: str


class SmilesParseError(ValueError):
    """Raised by :func:`parse_smiles` for unrecoverable input problems."""

    def __init__(self, diagnostics: ParseDiagnostics):
        super().__init__(f"{diagnostics.message} (offset {diagnostics.offset})")
        self.diagnostics = diagnostics

    @property
    def kind(self) -> ParseErrorKind:
        return self.diagnostics.kind

    @property
    def offset(self) -> int:
        return self.diagnostics.offset


@dataclass(frozen=True)
class Atom:
    element: str
    charge: int = 0
    aromatic: bool = False
    h_count: int = 0


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    order: BondOrder

    def other(self, idx: int) -> int:
        return self.b if idx == self.a else self.a


@dataclass
class MolecularGraph:
    """Parsed molecule: atoms, bonds, and derived ring membership.

    Instances are treated as immutable after construction and are safe to
    share between threads.
    """

    atoms: list[Atom]
    bonds: list[Bond]
    multi_fragment: bool = False
    warnings: list[str] = field(default_factory=list)
    ring_atom: list[bool] = field(default_factory=list)
    ring_bond: list[bool] = field(default_factory=list)
    _adjacency: list[list[tuple[int, int]]] = field(default_factory=list, repr=False)

    def neighbors(self, idx: int) -> list[tuple[int, BondOrder]]:
        """(neighbor index, bond order) pairs for one atom."""
        return [(j, self.bonds[b].order) for j, b in self._adjacency[idx]]

    def degree(self, idx: int) -> int:
        return len(self._adjacency[idx])

    @property
    def has_valence_warning(self) -> bool:
        return any("valence" in w for w in self.warnings)


def _build_adjacency(n_atoms: int, bonds: list[Bond]) -> list[list[tuple[int, int]]]:
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n_atoms)]
    for bi, bond in enumerate(bonds):
        adj[bond.a].append((bond.b, bi))
        adj[bond.b].append((bond.a, bi))
    return adj


def _connected_components(n_atoms: int, adj) -> list[list[int]]:
    seen = [False] * n_atoms
    components = []
    for start in range(n_atoms):
        if seen[start]:
            continue
        stack, comp = [start], []
        seen[start] = True
        while stack:
            u = stack.pop()
            comp.append(u)
            for v, _ in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
        components.append(comp)
    return components


def _ring_bonds(n_atoms: int, bonds: list[Bond], adj) -> list[bool]:
    """Mark bonds that lie on a cycle (non-bridge edges), iterative DFS."""
    index = [-1] * n_atoms
    low = [0] * n_atoms
    in_ring = [False] * len(bonds)
    counter = 0
    for root in range(n_atoms):
        if index[root] != -1:
            continue
        stack = [(root, -1, 0)]  # (node, incoming bond, neighbor cursor)
        index[root] = low[root] = counter
        counter += 1
        while stack:
            u, in_bond, pos = stack[-1]
            if pos < len(adj[u]):
                stack[-1] = (u, in_bond, pos + 1)
                v, bi = adj[u][pos]
                if bi == in_bond:
                    continue
                if index[v] == -1:
                    index[v] = low[v] = counter
                    counter += 1
                    stack.append((v, bi, 0))
                else:
                    in_ring[bi] = True  # back edge: always on a cycle
                    low[u] = min(low[u], index[v])
            else:
                stack.pop()
                if stack:
                    p = stack[-1][0]
                    low[p] = min(low[p], low[u])
                    if in_bond >= 0 and low[u] <= index[p]:
                        in_ring[in_bond] = True
    return in_ring


def _six_carbon_cycles(elements: list[str], adj) -> list[tuple[list[int], list[int]]]:
    """All simple 6-cycles over carbon atoms, as (atom list, bond list).

    Enumeration is graph-intrinsic (independent of atom input order up to
    set equality), which keeps Kekulé aromatization permutation-invariant.
    """
    n = len(elements)
    carbons = [i for i in range(n) if elements[i] == "C"]
    cycles = []
    seen: set[frozenset] = set()
    for start in carbons:
        # DFS over simple paths of length 6 returning to start, with the
        # start as the smallest index in the cycle to deduplicate
        stack = [(start, [start], [])]
        while stack:
            node, path, path_bonds = stack.pop()
            for v, bi in adj[node]:
                if v == start and len(path) == 6:
                    key = frozenset(path)
                    if key not in seen:
                        seen.add(key)
                        cycles.append((path[:], path_bonds + [bi]))
                    continue
                if len(path) >= 6 or v in path or v < start:
                    continue
                if elements[v] != "C":
                    continue
                stack.append((v, path + [v], path_bonds + [bi]))
    return cycles


# ---------------------------------------------------------------------------
# Tokenizer helpers
# ---------------------------------------------------------------------------

@dataclass
class _BracketAtom:
    element: str
    aromatic: bool
    h_count: int
    charge: int
    warnings: list[str]


def _parse_bracket(text: str, start: int) -> tuple[_BracketAtom, int]:
    """Parse a bracket atom at ``text[start] == '['``; returns (atom, end)."""
    end = text.find("]", start)
    if end == -1:
        raise SmilesParseError(ParseDiagnostics(
            ParseErrorKind.UNKNOWN_ELEMENT, start, "unterminated bracket atom"))
    body = text[start + 1:end]
    pos = 0
    warnings = []

    def fail(msg):
        raise SmilesParseError(ParseDiagnostics(
            ParseErrorKind.UNKNOWN_ELEMENT, start, msg))

    iso = ""
    while pos < len(body) and body[pos].isdigit():
        iso += body[pos]
        pos += 1
    if iso:
        warnings.append(f"isotope '{iso}' ignored")

    if pos >= len(body):
        fail("bracket atom with no element")
    aromatic = False
    if body[pos:pos + 2] in ("se", "as"):
        element = body[pos:pos + 2].capitalize()
        aromatic = True
        pos += 2
    elif body[pos] in AROMATIC_SYMBOLS:
        element = body[pos].upper()
        aromatic = True
        pos += 1
    elif body[pos].isupper():
        element = body[pos]
        pos += 1
        if pos < len(body) and body[pos].islower() and element + body[pos] in KNOWN_ELEMENTS:
            element += body[pos]
            pos += 1
    else:
        fail(f"malformed element in bracket atom '[{body}]'")
    if element not in KNOWN_ELEMENTS:
        fail(f"unknown element '{element}'")

    if pos < len(body) and body[pos] == "@":
        while pos < len(body) and body[pos] == "@":
            pos += 1
        warnings.append("stereo descriptor ignored")

    h_count = 0
    if pos < len(body) and body[pos] == "H":
        pos += 1
        digits = ""
        while pos < len(body) and body[pos].isdigit():
            digits += body[pos]
            pos += 1
        h_count = int(digits) if digits else 1

    charge = 0
    if pos < len(body) and body[pos] in "+-":
        sign = 1 if body[pos] == "+" else -1
        symbol = body[pos]
        pos += 1
        digits = ""
        while pos < len(body) and body[pos].isdigit():
            digits += body[pos]
            pos += 1
        if digits:
            charge = sign * int(digits)
        else:
            charge = sign
            while pos < len(body) and body[pos] == symbol:
                charge += sign
                pos += 1

    if pos < len(body) and body[pos] == ":":
        pos += 1
        if pos >= len(body) or not body[pos].isdigit():
            fail("malformed atom-map class")
        while pos < len(body) and body[pos].isdigit():
            pos += 1

    if pos != len(body):
        fail(f"unexpected characters in bracket atom '[{body}]'")
    return _BracketAtom(element, aromatic, h_count, charge, warnings), end + 1


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

@dataclass
class _PendingAtom:
    element: str
    aromatic: bool
    charge: int
    explicit_h: int | None  # None: assign implicit hydrogens by valence
    offset: int


def parse_smiles(text: str) -> MolecularGraph:
    """Parse a SMILES string into a :class:`MolecularGraph`.

    Implicit hydrogens follow standard valence rules; explicit ``[H]``
    neighbors are folded into the heavy atom's hydrogen count.

    Raises:
        SmilesParseError: for malformed input. Valence violations do not
            raise; they are recorded on ``graph.warnings``.
    """
    if not isinstance(text, str):
        raise TypeError("SMILES input must be a string")
    if not text.strip():
        raise SmilesParseError(ParseDiagnostics(
            ParseErrorKind.EMPTY_INPUT, 0, "empty SMILES input"))
    text = text.strip()

    atoms: list[_PendingAtom] = []
    bond_specs: list[tuple[int, int, BondOrder | None]] = []
    bonded_pairs: set[frozenset] = set()
    warnings: list[str] = []
    multi_fragment = False

    anchor: int | None = None
    pending_order: BondOrder | None = None
    pending_order_offset = 0
    branch_stack: list[int] = []
    open_rings: dict[int, tuple[int, BondOrder | None]] = {}

    def add_bond(a: int, b: int, order: BondOrder | None, anchor_offset: int):
        if a == b:
            raise SmilesParseError(ParseDiagnostics(
                ParseErrorKind.UNBALANCED_RING_CLOSURE, anchor_offset,
                "ring marker closes a bond onto the same atom"))
        pair = frozenset((a, b))
        if pair in bonded_pairs:
            raise SmilesParseError(ParseDiagnostics(
                ParseErrorKind.UNBALANCED_RING_CLOSURE, anchor_offset,
                "duplicate bond between the same atoms"))
        bonded_pairs.add(pair)
        bond_specs.append((a, b, order))

    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        new_atom: _PendingAtom | None = None

        if ch == "[":
            bracket, nxt = _parse_bracket(text, i)
            warnings.extend(bracket.warnings)
            new_atom = _PendingAtom(bracket.element, bracket.aromatic,
                                    bracket.charge, bracket.h_count, i)
            i = nxt
        elif text[i:i + 2] in ("Cl", "Br"):
            new_atom = _PendingAtom(text[i:i + 2], False, 0, None, i)
            i += 2
        elif ch in "BCNOPSFI":
            new_atom = _PendingAtom(ch, False, 0, None, i)
            i += 1
        elif ch in AROMATIC_SYMBOLS:
            new_atom = _PendingAtom(ch.upper(), True, 0, None, i)
            i += 1
        elif ch in _BOND_SYMBOLS:
            if pending_order is not None:
                raise SmilesParseError(ParseDiagnostics(
                    ParseErrorKind.UNCLOSED_BRANCH, i, "two bond symbols in a row"))
            pending_order = _BOND_SYMBOLS[ch]
            pending_order_offset = i
            i += 1
        elif ch in "/\\":
            warnings.append("bond stereo marker ignored")
            i += 1
        elif ch == "(":
            if anchor is None:
                raise SmilesParseError(ParseDiagnostics(
                    ParseErrorKind.UNCLOSED_BRANCH, i, "branch opened before any atom"))
            branch_stack.append(anchor)
            i += 1
        elif ch == ")":
            if not branch_stack:
                raise SmilesParseError(ParseDiagnostics(
                    ParseErrorKind.UNCLOSED_BRANCH, i, "branch closed that was never opened"))
            if pending_order is not None:
                raise SmilesParseError(ParseDiagnostics(
                    ParseErrorKind.UNCLOSED_BRANCH, pending_order_offset,
                    "dangling bond before branch close"))
            anchor = branch_stack.pop()
            i += 1
        elif ch == ".":
            if pending_order is not None:
                raise SmilesParseError(ParseDiagnostics(
                    ParseErrorKind.UNCLOSED_BRANCH, pending_order_offset,
                    "bond symbol before fragment separator"))
            anchor = None
            multi_fragment = True
            i += 1
        elif ch.isdigit() or ch == "%":
            if ch == "%":
                if n - i < 3 or not text[i + 1:i + 3].isdigit():
                    raise SmilesParseError(ParseDiagnostics(
                        ParseErrorKind.UNBALANCED_RING_CLOSURE, i,
                        "malformed %nn ring marker"))
                marker = int(text[i + 1:i + 3])
                i += 3
            else:
                marker = int(ch)
                i += 1
            if anchor is None:
                raise SmilesParseError(ParseDiagnostics(
                    ParseErrorKind.UNBALANCED_RING_CLOSURE, max(i - 1, 0),
                    "ring marker before any atom"))
            if marker in open_rings:
                partner, opened_order = open_rings.pop(marker)
                if (pending_order is not None and opened_order is not None
                        and pending_order != opened_order):
                    raise SmilesParseError(ParseDiagnostics(
                        ParseErrorKind.UNBALANCED_RING_CLOSURE, atoms[partner].offset,
                        f"conflicting bond orders on ring marker {marker}"))
                order = pending_order if pending_order is not None else opened_order
                add_bond(partner, anchor, order, atoms[anchor].offset)
                pending_order = None
            else:
                open_rings[marker] = (anchor, pending_order)
                pending_order = None
        elif ch.isspace():
            i += 1
        else:
            raise SmilesParseError(ParseDiagnostics(
                ParseErrorKind.UNKNOWN_ELEMENT, i, f"unsupported token {ch!r}"))

        if new_atom is not None:
            idx = len(atoms)
            if anchor is None and pending_order is not None:
                raise SmilesParseError(ParseDiagnostics(
                    ParseErrorKind.UNCLOSED_BRANCH, pending_order_offset,
                    "bond symbol with no preceding atom"))
            atoms.append(new_atom)
            if anchor is not None:
                add_bond(anchor, idx, pending_order, new_atom.offset)
                pending_order = None
            anchor = idx

    if pending_order is not None:
        raise SmilesParseError(ParseDiagnostics(
            ParseErrorKind.UNCLOSED_BRANCH, pending_order_offset,
            "dangling bond at end of input"))
    if branch_stack:
        raise SmilesParseError(ParseDiagnostics(
            ParseErrorKind.UNCLOSED_BRANCH, len(text) - 1, "unclosed branch at end of input"))
    if open_rings:
        marker, (partner, _) = sorted(open_rings.items())[0]
        raise SmilesParseError(ParseDiagnostics(
            ParseErrorKind.UNBALANCED_RING_CLOSURE, atoms[partner].offset,
            f"ring marker {marker} never closed"))
    if not atoms:
        raise SmilesParseError(ParseDiagnostics(
            ParseErrorKind.EMPTY_INPUT, 0, "no atoms in input"))

    return _finalize(atoms, bond_specs, multi_fragment, warnings)


def _finalize(pending: list[_PendingAtom],
              bond_specs: list[tuple[int, int, BondOrder | None]],
              multi_fragment: bool, warnings: list[str]) -> MolecularGraph:
    """Resolve bond orders, aromaticity, hydrogen counts, ring membership."""
    n = len(pending)
    prov_bonds = [Bond(a, b, BondOrder.SINGLE) for a, b, _ in bond_specs]
    adj = _build_adjacency(n, prov_bonds)
    in_ring_bond = _ring_bonds(n, prov_bonds, adj)
    ring_atom = [False] * n
    for bi, flag in enumerate(in_ring_bond):
        if flag:
            ring_atom[prov_bonds[bi].a] = True
            ring_atom[prov_bonds[bi].b] = True

    # lowercase atoms outside rings cannot be aromatic; demote with warning
    aromatic = [p.aromatic for p in pending]
    for idx in range(n):
        if aromatic[idx] and not ring_atom[idx]:
            aromatic[idx] = False
            warnings.append(
                f"aromatic atom at offset {pending[idx].offset} is not in a ring; demoted")

    # resolve bond orders: a default bond is aromatic only between two
    # aromatic atoms inside a ring, otherwise single
    orders: list[BondOrder] = []
    for bi, (a, b, declared) in enumerate(bond_specs):
        if declared is None:
            if aromatic[a] and aromatic[b] and in_ring_bond[bi]:
                orders.append(BondOrder.AROMATIC)
            else:
                orders.append(BondOrder.SINGLE)
        elif declared is BondOrder.AROMATIC and not (aromatic[a] and aromatic[b]):
            warnings.append("':' bond between non-aromatic atoms read as single")
            orders.append(BondOrder.SINGLE)
        else:
            orders.append(declared)

    bonds = [Bond(a, b, o) for (a, b, _), o in zip(bond_specs, orders)]
    adj = _build_adjacency(n, bonds)

    # aromatize Kekulé benzene rings: 6-membered all-carbon cycles with
    # alternating single/double bonds, checked against the as-written orders
    # and applied jointly so the result is independent of atom input order
    to_aromatize_atoms: set[int] = set()
    to_aromatize_bonds: set[int] = set()
    for cycle_atoms, cycle_bonds in _six_carbon_cycles(
            [p.element for p in pending], adj):
        seq = [bonds[bi].order for bi in cycle_bonds]
        if sorted(o.value for o in seq) != [1, 1, 1, 2, 2, 2]:
            continue
        if any(seq[k] == seq[(k + 1) % 6] for k in range(6)):
            continue
        to_aromatize_atoms.update(cycle_atoms)
        to_aromatize_bonds.update(cycle_bonds)
    for a in to_aromatize_atoms:
        aromatic[a] = True
    for bi in to_aromatize_bonds:
        bonds[bi] = Bond(bonds[bi].a, bonds[bi].b, BondOrder.AROMATIC)

    # fold simple explicit hydrogens into the neighbor's hydrogen count
    h_fold: dict[int, int] = {}
    drop: set[int] = set()
    for idx in range(n):
        p = pending[idx]
        if (p.element == "H" and p.charge == 0 and len(adj[idx]) == 1
                and bonds[adj[idx][0][1]].order is BondOrder.SINGLE
                and pending[adj[idx][0][0]].element != "H"):
            h_fold[adj[idx][0][0]] = h_fold.get(adj[idx][0][0], 0) + 1
            drop.add(idx)

    keep = [i for i in range(n) if i not in drop]
    if not keep or all(pending[i].element == "H" for i in keep):
        raise SmilesParseError(ParseDiagnostics(
            ParseErrorKind.EMPTY_INPUT, 0, "no heavy atoms in input"))
    remap = {old: new for new, old in enumerate(keep)}
    final_bonds = [Bond(remap[b.a], remap[b.b], b.order)
                   for b in bonds if b.a not in drop and b.b not in drop]
    adj = _build_adjacency(len(keep), final_bonds)

    # implicit hydrogens plus valence check for organic-subset atoms
    atoms: list[Atom] = []
    for new_idx, old in enumerate(keep):
        p = pending[old]
        fold = h_fold.get(old, 0)
        order_sum = sum(_ORDER_VALUE[final_bonds[bi].order] for _, bi in adj[new_idx])
        bonded = math.ceil(order_sum) + fold
        if p.explicit_h is None:
            h = fold
            if p.element in VALENCES:
                valences = VALENCES[p.element]
                target = next((v for v in valences if v >= bonded), valences[-1])
                h += max(0, target - bonded)
        else:
            h = p.explicit_h + fold
        if (p.charge == 0 and p.element in VALENCES
                and bonded + (h - fold) > max(VALENCES[p.element])):
            warnings.append(
                f"valence violation: {p.element} at offset {p.offset} "
                f"carries {bonded + h - fold} bonds")
        atoms.append(Atom(p.element, p.charge, aromatic[old], h))

    in_ring_bond = _ring_bonds(len(atoms), final_bonds, adj)
    final_ring_atom = [False] * len(atoms)
    for bi, flag in enumerate(in_ring_bond):
        if flag:
            final_ring_atom[final_bonds[bi].a] = True
            final_ring_atom[final_bonds[bi].b] = True

    graph = MolecularGraph(atoms=atoms, bonds=final_bonds,
                           multi_fragment=multi_fragment, warnings=warnings,
                           ring_atom=final_ring_atom, ring_bond=in_ring_bond,
                           _adjacency=adj)
    validate_graph(graph)
    return graph


def validate_graph(graph: MolecularGraph) -> None:
    """Check structural invariants; raises ValueError on violation."""
    n = len(graph.atoms)
    if n == 0:
        raise ValueError("graph has no atoms")
    for bond in graph.bonds:
        if not (0 <= bond.a < n and 0 <= bond.b < n) or bond.a == bond.b:
            raise ValueError("bond endpoints out of range or self-bond")
        if bond.order is BondOrder.AROMATIC:
            if not (graph.atoms[bond.a].aromatic and graph.atoms[bond.b].aromatic):
                raise ValueError("aromatic bond joining non-aromatic atoms")
    if not graph.multi_fragment:
        if len(_connected_components(n, graph._adjacency)) > 1:
            raise ValueError("disconnected graph not flagged multi-fragment")


# ---------------------------------------------------------------------------
# Counts
# ---------------------------------------------------------------------------

def heavy_atom_count(graph: MolecularGraph) -> int:
    return sum(1 for a in graph.atoms if a.element != "H")


def ring_count(graph: MolecularGraph) -> int:
    """Number of rings (cyclomatic number: bonds - atoms + fragments)."""
    comps = _connected_components(len(graph.atoms), graph._adjacency)
    return len(graph.bonds) - len(graph.atoms) + len(comps)


def rotatable_bond_count(graph: MolecularGraph) -> int:
    """Non-ring single bonds between heavy atoms that each carry at least
    one other heavy neighbor."""
    count = 0
    for bi, bond in enumerate(graph.bonds):
        if bond.order is not BondOrder.SINGLE or graph.ring_bond[bi]:
            continue
        if graph.atoms[bond.a].element == "H" or graph.atoms[bond.b].element == "H":
            continue
        if graph.degree(bond.a) < 2 or graph.degree(bond.b) < 2:
            continue
        count += 1
    return count


# ---------------------------------------------------------------------------
# Canonicalization (Morgan-style refinement with deterministic tie-breaking)
# ---------------------------------------------------------------------------

_ORDER_CODE = {BondOrder.SINGLE: 1, BondOrder.DOUBLE: 2,
               BondOrder.TRIPLE: 3, BondOrder.AROMATIC: 4}


def _dense_ranks(keys: list) -> list[int]:
    order = {k: r for r, k in enumerate(sorted(set(keys)))}
    return [order[k] for k in keys]


def _refine(ranks: list[int], neighbor_lists) -> list[int]:
    while True:
        keys = [
            (ranks[i], tuple(sorted((code, ranks[j]) for j, code in neighbor_lists[i])))
            for i in range(len(ranks))
        ]
        new = _dense_ranks(keys)
        if new == ranks:
            return ranks
        ranks = new


def canonical_ranks(graph: MolecularGraph,
                    atom_subset: list[int] | None = None) -> dict[int, int]:
    """Canonical atom ordering for one fragment (or the whole graph).

    Iterative neighborhood refinement over (element, charge, aromaticity,
    hydrogen count, degree, ring membership); remaining ties are broken by
    promoting one member of the smallest tied class, treating
    refinement-equivalent atoms as symmetric.
    """
    indices = atom_subset if atom_subset is not None else list(range(len(graph.atoms)))
    local = {a: i for i, a in enumerate(indices)}
    neighbor_lists = []
    for a in indices:
        neighbor_lists.append([(local[j], _ORDER_CODE[o])
                               for j, o in graph.neighbors(a) if j in local])
    keys = []
    for a in indices:
        atom = graph.atoms[a]
        keys.append((atom.element, atom.charge, int(atom.aromatic),
                     atom.h_count, graph.degree(a), int(graph.ring_atom[a])))
    ranks = _refine(_dense_ranks(keys), neighbor_lists)
    while True:
        by_rank: dict[int, list[int]] = {}
        for i, r in enumerate(ranks):
            by_rank.setdefault(r, []).append(i)
        tied = sorted(r for r, members in by_rank.items() if len(members) > 1)
        if not tied:
            break
        target = min(by_rank[tied[0]])
        ranks = [r * 2 for r in ranks]
        ranks[target] -= 1
        ranks = _refine(_dense_ranks(ranks), neighbor_lists)
    return {indices[i]: ranks[i] for i in range(len(indices))}


def _implicit_h_for(graph: MolecularGraph, idx: int) -> int:
    """Hydrogen count the parser would assign to this atom written bare."""
    atom = graph.atoms[idx]
    if atom.element not in VALENCES:
        return -1
    order_sum = sum(_ORDER_VALUE[o] for _, o in graph.neighbors(idx))
    bonded = math.ceil(order_sum)
    valences = VALENCES[atom.element]
    target = next((v for v in valences if v >= bonded), valences[-1])
    return max(0, target - bonded)


def _format_atom(graph: MolecularGraph, idx: int) -> str:
    atom = graph.atoms[idx]
    symbol = atom.element.lower() if atom.aromatic else atom.element
    if (atom.element in ORGANIC_SUBSET and atom.charge == 0
            and atom.h_count == _implicit_h_for(graph, idx)):
        return symbol
    h = "" if atom.h_count == 0 else ("H" if atom.h_count == 1 else f"H{atom.h_count}")
    if atom.charge == 0:
        q = ""
    elif atom.charge == 1:
        q = "+"
    elif atom.charge == -1:
        q = "-"
    else:
        q = f"+{atom.charge}" if atom.charge > 0 else str(atom.charge)
    return f"[{symbol}{h}{q}]"


def _bond_token(graph: MolecularGraph, order: BondOrder, a: int, b: int) -> str:
    if order is BondOrder.DOUBLE:
        return "="
    if order is BondOrder.TRIPLE:
        return "#"
    if order is BondOrder.SINGLE:
        # explicit single between two aromatic atoms, else it would re-read
        # as an aromatic ring bond
        if graph.atoms[a].aromatic and graph.atoms[b].aromatic:
            return "-"
    return ""


def _write_fragment(graph: MolecularGraph, indices: list[int]) -> str:
    ranks = canonical_ranks(graph, indices)
    start = min(indices, key=lambda a: ranks[a])

    # depth-first tree with children explored in rank order; edges not in
    # the tree close rings
    children: dict[int, list[int]] = {a: [] for a in indices}
    visited: set[int] = set()
    back_seen: set[frozenset] = set()
    back_edges: list[tuple[int, int, BondOrder]] = []
    stack: list[tuple[int, int | None, BondOrder | None]] = [(start, None, None)]
    while stack:
        u, parent, order = stack.pop()
        if u in visited:
            edge = frozenset((parent, u))
            if edge not in back_seen:
                back_seen.add(edge)
                back_edges.append((parent, u, order))  # type: ignore[arg-type]
            continue
        visited.add(u)
        if parent is not None:
            children[parent].append(u)
        for v, o in sorted(graph.neighbors(u), key=lambda t: ranks[t[0]], reverse=True):
            if v == parent:
                continue
            if v in visited:
                edge = frozenset((u, v))
                if edge not in back_seen:
                    back_seen.add(edge)
                    back_edges.append((u, v, o))
                continue
            stack.append((v, u, o))
    for u in children:
        children[u].sort(key=lambda v: ranks[v])

    # preorder emission positions
    emit_pos: dict[int, int] = {}
    order_stack = [start]
    while order_stack:
        node = order_stack.pop()
        emit_pos[node] = len(emit_pos)
        order_stack.extend(reversed(children[node]))

    # ring-closure digits, reusing a digit once both of its ends are written
    closures: dict[int, list[tuple[int, bool, BondOrder, int]]] = {a: [] for a in indices}
    free_digits = list(range(1, 100))
    heapq.heapify(free_digits)
    active: list[tuple[int, int]] = []  # (closing position, digit)
    for u, v, order in sorted(back_edges,
                              key=lambda e: (min(emit_pos[e[0]], emit_pos[e[1]]),
                                             max(emit_pos[e[0]], emit_pos[e[1]]))):
        first, second = (u, v) if emit_pos[u] < emit_pos[v] else (v, u)
        while active and active[0][0] < emit_pos[first]:
            _, released = heapq.heappop(active)
            heapq.heappush(free_digits, released)
        if not free_digits:
            raise ValueError("more than 99 simultaneously open ring closures")
        digit = heapq.heappop(free_digits)
        heapq.heappush(active, (emit_pos[second], digit))
        closures[first].append((digit, True, order, second))
        closures[second].append((digit, False, order, first))

    out: list[str] = []
    emit_stack: list[tuple[str, object]] = [("atom", start)]
    while emit_stack:
        kind, payload = emit_stack.pop()
        if kind == "text":
            out.append(payload)  # type: ignore[arg-type]
            continue
        node = payload  # type: ignore[assignment]
        out.append(_format_atom(graph, node))
        for digit, opening, order, partner in closures[node]:
            if opening:
                out.append(_bond_token(graph, order, node, partner))
            out.append(str(digit) if digit < 10 else f"%{digit:02d}")
        kids = children[node]
        todo: list[tuple[str, object]] = []
        for k, child in enumerate(kids):
            order = next(o for j, o in graph.neighbors(node) if j == child)
            token = _bond_token(graph, order, node, child)
            if k < len(kids) - 1:
                todo.append(("text", "(" + token))
                todo.append(("atom", child))
                todo.append(("text", ")"))
            else:
                todo.append(("text", token))
                todo.append(("atom", child))
        emit_stack.extend(reversed(todo))
    return "".join(out)


def canonical_smiles(graph: MolecularGraph) -> str:
    """Deterministic canonical SMILES; isomorphic graphs map to one string.

    Fragments of dot-separated input are canonicalized independently and
    joined in sorted order.
    """
    comps = _connected_components(len(graph.atoms), graph._adjacency)
    fragments = sorted(_write_fragment(graph, comp) for comp in comps)
    return ".".join(fragments)
