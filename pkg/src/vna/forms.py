"""Exact symbolic local inverses of the shape ``w_i = eps_i * z_{perm[i]} ** p_i``.

``eps_i`` is a root of unity stored as a fraction of a turn and ``p_i`` a
rational power.  Fractional powers are multivalued; values are taken on the
principal branch unless a continuous logarithm is supplied.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "MonomialForm",
    "POWER_CANDIDATES",
    "snap_root_of_unity",
    "perm_sign",
    "fit_coordinate",
]

POWER_CANDIDATES = sorted({Fraction(a, q) for a in range(-4, 5) if a for q in range(1, 5)},
                          key=lambda p: (p.denominator, abs(p), p < 0))
MAX_ROOT_ORDER = 24
_SUPERSCRIPT = str.maketrans("0123456789-/", "⁰¹²³⁴⁵⁶⁷⁸⁹⁻ᐟ")


def perm_sign(perm) -> int:
    sign = 1
    seen = set()
    for i in range(len(perm)):
        if i in seen:
            continue
        j, length = i, 0
        while j not in seen:
            seen.add(j)
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def snap_root_of_unity(u: complex, tol: float = 1e-8) -> Fraction | None:
    """Return ``t`` with ``u = exp(2 pi i t)`` and ``t`` of denominator <= 24, else None."""
    if abs(abs(u) - 1.0) > tol:
        return None
    turn = (np.angle(u) / (2 * np.pi)) % 1.0
    t = Fraction(turn).limit_denominator(MAX_ROOT_ORDER)
    if abs(np.exp(2j * np.pi * float(t)) - u) > tol:
        return None
    return t % 1


def _unit(t: Fraction) -> complex:
    # exact values at quarter turns keep integer actions free of rounding noise
    quarter = {Fraction(0): 1, Fraction(1, 4): 1j, Fraction(1, 2): -1, Fraction(3, 4): -1j}
    if t in quarter:
        return complex(quarter[t])
    return complex(np.exp(2j * np.pi * float(t)))


@dataclass(frozen=True)
class MonomialForm:
    perm: tuple[int, ...]
    powers: tuple[Fraction, ...]
    eps: tuple[Fraction, ...]

    @property
    def dim(self) -> int:
        return len(self.perm)

    @property
    def integral(self) -> bool:
        return all(p.denominator == 1 for p in self.powers)

    @property
    def unitary_linear(self) -> bool:
        return all(p == 1 for p in self.powers)

    @property
    def is_identity(self) -> bool:
        return self.unitary_linear and self.perm == tuple(range(self.dim)) and not any(self.eps)

    def __call__(self, z, logs=None):
        """Evaluate at ``z`` (shape (d,) or (n, d)).

        ``logs`` optionally gives continuous logarithms of ``z`` so that
        fractional powers follow an analytically continued branch.
        """
        Z = np.asarray(z, dtype=complex)
        single = Z.ndim == 1
        Z = Z.reshape(-1, self.dim)
        L = np.log(Z) if logs is None else np.asarray(logs, dtype=complex).reshape(-1, self.dim)
        out = np.empty_like(Z)
        for i, (k, p, e) in enumerate(zip(self.perm, self.powers, self.eps)):
            if p.denominator == 1:
                out[:, i] = _unit(e) * Z[:, k] ** int(p)
            else:
                out[:, i] = _unit(e) * np.exp(float(p) * L[:, k])
        return out[0] if single else out

    def jacobian_det(self, z) -> complex:
        z = np.asarray(z, dtype=complex)
        val = complex(perm_sign(self.perm))
        for i, (k, p, e) in enumerate(zip(self.perm, self.powers, self.eps)):
            val *= _unit(e) * float(p) * z[k] ** (float(p) - 1)
        return val

    def inverse(self) -> "MonomialForm":
        """Inverse on the principal branch; for fractional powers the class of
        the result is what is meaningful, not the branch."""
        d = self.dim
        perm = [0] * d
        powers = [Fraction(0)] * d
        eps = [Fraction(0)] * d
        for i, (k, p, e) in enumerate(zip(self.perm, self.powers, self.eps)):
            perm[k] = i
            powers[k] = 1 / p
            eps[k] = (-e / p) % 1
        return MonomialForm(tuple(perm), tuple(powers), tuple(eps))

    def compose(self, inner: "MonomialForm") -> "MonomialForm":
        """``self o inner`` for integral forms."""
        if not (self.integral and inner.integral):
            raise ValueError("composition of fractional forms is branch dependent")
        perm, powers, eps = [], [], []
        for k, p, e in zip(self.perm, self.powers, self.eps):
            k2, p2, e2 = inner.perm[k], inner.powers[k], inner.eps[k]
            perm.append(k2)
            powers.append(p * p2)
            eps.append((e + p * e2) % 1)
        return MonomialForm(tuple(perm), tuple(powers), tuple(eps))

    def monomial_action(self, alpha) -> tuple[complex, tuple[Fraction, ...]]:
        """``(z**alpha o sigma) * J sigma`` as ``coeff * z**exponent``."""
        coeff = complex(perm_sign(self.perm))
        expo = [Fraction(0)] * self.dim
        for i, (k, p, e) in enumerate(zip(self.perm, self.powers, self.eps)):
            a = alpha[i] + 1
            coeff *= _unit((e * a) % 1) * float(p)
            expo[k] += p * a - 1
        return coeff, tuple(expo)

    def describe(self) -> str:
        var = (lambda k: "z") if self.dim == 1 else (lambda k: f"z{k + 1}")
        parts = []
        for k, p, e in zip(self.perm, self.powers, self.eps):
            base = var(k)
            if p != 1:
                base += "^" + (str(p) if p.denominator == 1 and p > 0 else f"({p})")
            parts.append(_eps_str(e) + base)
        return parts[0] if self.dim == 1 else "(" + ", ".join(parts) + ")"

    def to_json(self) -> dict:
        return {
            "perm": list(self.perm),
            "powers": [str(p) for p in self.powers],
            "eps_turns": [str(e) for e in self.eps],
            "text": self.describe(),
        }


def _eps_str(e: Fraction) -> str:
    names = {Fraction(0): "", Fraction(1, 2): "-", Fraction(1, 4): "i*", Fraction(3, 4): "-i*"}
    if e in names:
        return names[e]
    return f"e^(2πi·{e})*"


def fit_coordinate(value: complex, z: np.ndarray, logs: np.ndarray, tol: float = 1e-8):
    """All ``(k, p, eps)`` with ``value = eps * exp(p * logs[k])`` and eps a root of unity."""
    out = []
    for k, p in itertools.product(range(len(z)), POWER_CANDIDATES):
        base = np.exp(float(p) * logs[k])
        if base == 0 or not np.isfinite(base):
            continue
        u = value / base
        e = snap_root_of_unity(u, tol)
        if e is not None:
            out.append((k, p, e))
    return out
