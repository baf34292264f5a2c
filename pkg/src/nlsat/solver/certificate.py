"""Finite structures returned by the solvers, and solver verdicts."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..logic.normal import Signature

SAT, UNSAT, TIMEOUT = "sat", "unsat", "timeout"


@dataclass(frozen=True, eq=False)
class ModelCertificate:
    """A finite structure over ``signature``.

    ``unary[e, i]`` is the truth of unary predicate ``i`` at element ``e``;
    ``binary[k, a, b]`` that of binary predicate ``k`` at ``(a, b)``.
    ``realizers[i]`` is the element realizing realizer ``i`` of the theory
    the certificate was built for; ``witnesses[(e, j)]`` the element
    witnessing requirement ``j`` for element ``e``, and
    ``one_shots[(i, k)]`` the witness of the ``k``-th one-shot requirement
    of realizer ``i``.
    """

    signature: Signature
    unary: np.ndarray
    binary: np.ndarray
    realizers: tuple[int, ...] = ()
    witnesses: Mapping[tuple[int, int], int] = field(default_factory=dict)
    one_shots: Mapping[tuple[int, int], int] = field(default_factory=dict)

    def __post_init__(self):
        d = self.unary.shape[0]
        if d < 1:
            raise ValueError("domains are nonempty")
        if self.unary.shape != (d, self.signature.n1):
            raise ValueError(f"unary table has shape {self.unary.shape}, expected {(d, self.signature.n1)}")
        if self.binary.shape != (self.signature.n2, d, d):
            raise ValueError(f"binary table has shape {self.binary.shape}")

    @property
    def d(self) -> int:
        return self.unary.shape[0]

    def one_type(self, e: int) -> tuple[tuple[bool, ...], tuple[bool, ...]]:
        """Unary bits and diagonal binary bits of element ``e``."""
        return (tuple(bool(b) for b in self.unary[e]),
                tuple(bool(b) for b in self.binary[:, e, e]))

    def link(self, a: int, b: int) -> tuple[tuple[bool, bool], ...]:
        """Per binary predicate, the pair ``(r(a,b), r(b,a))``."""
        return tuple((bool(self.binary[k, a, b]), bool(self.binary[k, b, a]))
                     for k in range(self.signature.n2))

    def with_clone(self, a: int) -> "ModelCertificate":
        """Add a copy of element ``a``; links to ``a`` copy ``a``'s diagonal."""
        d = self.d
        unary = np.concatenate([self.unary, self.unary[a:a + 1]], axis=0)
        binary = np.zeros((self.signature.n2, d + 1, d + 1), dtype=bool)
        binary[:, :d, :d] = self.binary
        binary[:, d, :d] = self.binary[:, a, :d]
        binary[:, :d, d] = self.binary[:, :d, a]
        binary[:, d, d] = self.binary[:, a, a]
        binary[:, a, d] = self.binary[:, a, a]
        binary[:, d, a] = self.binary[:, a, a]
        return ModelCertificate(self.signature, unary, binary)

    def to_json(self) -> dict:
        sig = self.signature
        elements = []
        for e in range(self.d):
            rel = {}
            for k, name in enumerate(sig.binary):
                targets = np.flatnonzero(self.binary[k, e]).tolist()
                if targets:
                    rel[name] = targets
            elements.append({"unary": [sig.unary[i] for i in np.flatnonzero(self.unary[e])],
                             "binary": rel})
        return {"domain": self.d, "elements": elements}

    @classmethod
    def from_json(cls, data: Mapping, signature: Signature) -> "ModelCertificate":
        d = int(data["domain"])
        unary = np.zeros((d, signature.n1), dtype=bool)
        binary = np.zeros((signature.n2, d, d), dtype=bool)
        for e, el in enumerate(data["elements"]):
            for name in el["unary"]:
                unary[e, signature.unary.index(name)] = True
            for name, targets in el["binary"].items():
                binary[signature.binary.index(name), e, targets] = True
        return cls(signature, unary, binary)


@dataclass(frozen=True)
class Verdict:
    status: str
    certificate: ModelCertificate | None = None
    stats: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in (SAT, UNSAT, TIMEOUT):
            raise ValueError(f"unknown status {self.status!r}")
        if (self.status == SAT) != (self.certificate is not None):
            raise ValueError("a verdict carries a certificate exactly when it is sat")

    @property
    def is_sat(self) -> bool:
        return self.status == SAT

    @property
    def is_unsat(self) -> bool:
        return self.status == UNSAT

    @property
    def is_timeout(self) -> bool:
        return self.status == TIMEOUT


class SolverTimeout(Exception):
    """A wall-clock or node budget ran out."""
