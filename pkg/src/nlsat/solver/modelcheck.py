"""Direct evaluation of formulas in a finite structure.

Each subformula is evaluated to a boolean array with one axis per bound
variable in scope (in binding order), then quantifiers reduce their axis.
Shares no code with the solvers, so it can check their certificates.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from ..logic.formula import And, Atom, Exists, Forall, Formula, Implies, Not, Or
from .certificate import ModelCertificate


class SignatureMismatch(ValueError):
    pass


def _place(arr: np.ndarray, axes: tuple[int, ...], ndim: int) -> np.ndarray:
    """Put the axes of ``arr`` at positions ``axes`` of an ``ndim`` array."""
    if len(axes) == 2 and axes[0] == axes[1]:
        arr, axes = np.diagonal(arr).copy(), (axes[0],)
    if len(axes) == 2 and axes[0] > axes[1]:
        arr, axes = arr.T, (axes[1], axes[0])
    shape = [1] * ndim
    for ax in axes:
        shape[ax] = arr.shape[0]
    return arr.reshape(shape)


def _eval(f: Formula, m: ModelCertificate, scope: tuple[str, ...]) -> np.ndarray:
    n = len(scope)
    if isinstance(f, Atom):
        try:
            axes = tuple(n - 1 - scope[::-1].index(a) for a in f.args)
        except ValueError:
            raise SignatureMismatch(f"free variable in {f}") from None
        sig = m.signature
        if len(f.args) == 1:
            if f.pred not in sig.unary:
                raise SignatureMismatch(f"{f.pred} is not a unary predicate of the model")
            table = m.unary[:, sig.unary.index(f.pred)]
        elif len(f.args) == 2:
            if f.pred not in sig.binary:
                raise SignatureMismatch(f"{f.pred} is not a binary predicate of the model")
            table = m.binary[sig.binary.index(f.pred)]
        else:
            raise SignatureMismatch(f"unsupported arity in {f}")
        return _place(table, axes, n)
    if isinstance(f, Not):
        return ~_eval(f.arg, m, scope)
    if isinstance(f, And):
        out = _eval(f.args[0], m, scope)
        for a in f.args[1:]:
            out = out & _eval(a, m, scope)
        return out
    if isinstance(f, Or):
        out = _eval(f.args[0], m, scope)
        for a in f.args[1:]:
            out = out | _eval(a, m, scope)
        return out
    if isinstance(f, Implies):
        return ~_eval(f.left, m, scope) | _eval(f.right, m, scope)
    body = _eval(f.body, m, scope + (f.var,))
    body = np.broadcast_to(body, body.shape[:-1] + (m.d,))
    return body.all(axis=-1) if isinstance(f, Forall) else body.any(axis=-1)


def holds(m: ModelCertificate, f: Formula) -> bool:
    return bool(_eval(f, m, ()))


def model_check(m: ModelCertificate, formulas: Iterable[Formula]) -> bool:
    """True iff every formula is true in ``m``."""
    return all(holds(m, f) for f in formulas)
