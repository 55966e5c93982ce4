"""Circular (ECFP-style) fingerprints and Tanimoto similarity.

Identifiers come from a fixed, seedless 64-bit hash (blake2b) over atom
invariants and iteratively hashed neighborhoods, so fingerprints are
deterministic across platforms and processes. Exact bit layouts therefore
differ from other toolkits even though the construction follows the same
scheme.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from hashlib import blake2b

from .smiles import BondOrder, MolecularGraph

_BOND_CODE = {BondOrder.SINGLE: 1, BondOrder.DOUBLE: 2,
              BondOrder.TRIPLE: 3, BondOrder.AROMATIC: 4}

DEFAULT_RADIUS = 2
DEFAULT_WIDTH = 2048


@dataclass(frozen=True)
class Fingerprint:
    """Fixed-width folded bitset; ``bits`` is an int-backed bit field."""

    bits: int
    width: int
    radius: int

    def __post_init__(self):
        if self.width <= 0 or self.width & (self.width - 1):
            raise ValueError(f"width must be a power of two, got {self.width}")
        if self.radius < 0:
            raise ValueError("radius must be non-negative")

    @property
    def bit_count(self) -> int:
        return self.bits.bit_count()

    def to_hex(self) -> str:
        return format(self.bits, f"0{self.width // 4}x")

    @classmethod
    def from_hex(cls, text: str, radius: int = DEFAULT_RADIUS) -> "Fingerprint":
        return cls(bits=int(text, 16), width=len(text) * 4, radius=radius)


def _hash64(payload: bytes) -> int:
    return int.from_bytes(blake2b(payload, digest_size=8).digest(), "big")


def _initial_identifier(graph: MolecularGraph, idx: int) -> int:
    atom = graph.atoms[idx]
    payload = "|".join((
        atom.element,
        str(atom.charge),
        str(graph.degree(idx)),
        str(atom.h_count),
        "1" if graph.ring_atom[idx] else "0",
        "1" if atom.aromatic else "0",
    )).encode()
    return _hash64(payload)


def ecfp_identifiers(graph: MolecularGraph, radius: int = DEFAULT_RADIUS) -> set[int]:
    """Unfolded 64-bit substructure identifiers for all radii up to ``radius``.

    Duplicate environments within a round keep the first occurrence in
    identifier order; environments already covered by an earlier round are
    dropped (standard ECFP deduplication).
    """
    if not 0 <= radius <= 4:
        raise ValueError(f"radius must be in [0, 4], got {radius}")
    n = len(graph.atoms)
    current = [_initial_identifier(graph, i) for i in range(n)]
    identifiers: set[int] = set(current)
    seen_envs: set[frozenset] = set()
    # environment of an atom at round r: bond indices within distance r
    envs: list[frozenset] = [frozenset() for _ in range(n)]

    for round_no in range(1, radius + 1):
        candidates = []
        new_ids = [0] * n
        new_envs: list[frozenset] = [frozenset()] * n
        for i in range(n):
            neigh = sorted((_BOND_CODE[o], current[j]) for j, o in graph.neighbors(i))
            payload = struct.pack(">IQ", round_no, current[i])
            for code, nid in neigh:
                payload += struct.pack(">IQ", code, nid)
            new_ids[i] = _hash64(payload)
            bond_env = set(envs[i])
            for j, _ in graph.neighbors(i):
                bond_env.update(envs[j])
            bond_env.update(bi for _, bi in graph._adjacency[i])
            new_envs[i] = frozenset(bond_env)
            if new_envs[i]:
                candidates.append((new_ids[i], new_envs[i]))
        for ident, env in sorted(candidates):
            if env in seen_envs:
                continue
            seen_envs.add(env)
            identifiers.add(ident)
        current = new_ids
        envs = new_envs
    return identifiers


def ecfp(graph: MolecularGraph, radius: int = DEFAULT_RADIUS,
         width: int = DEFAULT_WIDTH) -> Fingerprint:
    """Circular fingerprint folded into a ``width``-bit set (ECFP4 default)."""
    if width <= 0 or width & (width - 1):
        raise ValueError(f"width must be a power of two, got {width}")
    bits = 0
    for ident in ecfp_identifiers(graph, radius):
        bits |= 1 << (ident % width)
    return Fingerprint(bits=bits, width=width, radius=radius)


def tanimoto(a: Fingerprint, b: Fingerprint) -> float:
    """|a AND b| / |a OR b|; 1.0 when both fingerprints are empty."""
    if a.width != b.width:
        raise ValueError(f"fingerprint width mismatch: {a.width} != {b.width}")
    union = (a.bits | b.bits).bit_count()
    if union == 0:
        return 1.0
    return (a.bits & b.bits).bit_count() / union


def similarity_gate(sim: float) -> bool:
    """Structural-consistency gate: pass only when similarity exceeds 0.6."""
    if not 0.0 <= sim <= 1.0:
        raise ValueError(f"similarity must be in [0, 1], got {sim}")
    return sim > 0.6


def smiles_similarity(original: str, optimized: str,
                      radius: int = DEFAULT_RADIUS,
                      width: int = DEFAULT_WIDTH) -> float:
    """Convenience: parse two SMILES and return their Tanimoto similarity."""
    from .smiles import parse_smiles

    return tanimoto(ecfp(parse_smiles(original), radius, width),
                    ecfp(parse_smiles(optimized), radius, width))
