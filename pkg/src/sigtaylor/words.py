"""Words over {0, 1}, shuffle products and reduction to the x-ending basis.

Words are plain strings of '0' (time) and '1' (space); the empty word is
"" in memory and "e" when serialised.  The rightmost letter is the
outermost integral.

A :class:`WordPoly` maps words to coefficients that are polynomials in the
horizon T, stored exactly as tuples of Fractions (index = power of T).
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

import numpy as np

EMPTY = ""


# ---------------------------------------------------------------------------
# words

def parse_word(s):
    s = s.strip()
    if s in ("e", "", "∅"):
        return EMPTY
    if set(s) - {"0", "1"}:
        raise ValueError(f"not a word over {{0,1}}: {s!r}")
    return s


def format_word(w):
    return w if w else "e"


def word_rank(w):
    """Position of w in graded-lex order (empty word first, 0 < 1)."""
    n = len(w)
    return (1 << n) - 1 + (int(w, 2) if n else 0)


def word_from_rank(r):
    n = (r + 1).bit_length() - 1
    v = r - ((1 << n) - 1)
    return format(v, f"0{n}b") if n else EMPTY


def enumerate_words(max_len):
    """All 2**(K+1) - 1 words of length <= K in graded-lex order."""
    if max_len < 0:
        raise ValueError("max_len must be >= 0")
    return [word_from_rank(r) for r in range((1 << (max_len + 1)) - 1)]


def n_zeros(w):
    return w.count("0")


def n_ones(w):
    return w.count("1")


def weight(w):
    """Weighted length 2|w|_0 + |w|_1."""
    return 2 * n_zeros(w) + n_ones(w)


def count_01(w):
    """Number of occurrences of the factor '01'."""
    return sum(1 for i in range(len(w) - 1) if w[i] == "0" and w[i + 1] == "1")


def zeros(k):
    return "0" * k


def ones(k):
    return "1" * k


def words_with_weight(k):
    """All words with 2|w|_0 + |w|_1 = k, in graded-lex order."""
    if k < 0:
        raise ValueError("k must be >= 0")
    out = []
    for n0 in range(k // 2 + 1):
        n1 = k - 2 * n0
        out.extend(_arrangements(n0, n1))
    return sorted(out, key=word_rank)


def _arrangements(n0, n1):
    if n0 == 0:
        return [ones(n1)]
    if n1 == 0:
        return [zeros(n0)]
    return ["0" + w for w in _arrangements(n0 - 1, n1)] + ["1" + w for w in _arrangements(n0, n1 - 1)]


def zero_blocks(w):
    """Exponents (g_0, ..., g_k) with w = 0^{g_0} 1 0^{g_1} 1 ... 1 0^{g_k}."""
    return tuple(len(b) for b in w.split("1"))


# ---------------------------------------------------------------------------
# polynomials in T

def _ptrim(p):
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return tuple(p)


def _padd(a, b):
    n = max(len(a), len(b))
    return _ptrim([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)])


def _pmul(a, b):
    if not a or not b:
        return ()
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return _ptrim(out)


def _pscale(a, c):
    return _ptrim([ai * c for ai in a])


def _peval(p, T):
    acc = 0.0
    for c in reversed(p):
        acc = acc * T + float(c)
    return acc


def _pconst(c):
    return _ptrim((Fraction(c),))


def _pstr(p):
    parts = []
    for k, c in enumerate(p):
        if c == 0:
            continue
        mono = "" if k == 0 else ("T" if k == 1 else f"T^{k}")
        if mono and c == 1:
            parts.append(mono)
        elif mono and c == -1:
            parts.append("-" + mono)
        else:
            parts.append(f"{c}{'*' + mono if mono else ''}")
    return " + ".join(parts) if parts else "0"


# ---------------------------------------------------------------------------
# WordPoly

class WordPoly:
    """Finite formal combination of words with polynomial-in-T coefficients."""

    __slots__ = ("_terms",)

    def __init__(self, terms=None):
        clean = {}
        for w, c in (terms or {}).items():
            p = _pconst(c) if not isinstance(c, tuple) else _ptrim(Fraction(x) for x in c)
            if p:
                clean[w] = p
        self._terms = clean

    @classmethod
    def word(cls, w, c=1):
        return cls({w: c})

    @property
    def terms(self):
        return dict(self._terms)

    def items(self):
        return sorted(self._terms.items(), key=lambda kv: word_rank(kv[0]))

    def words(self):
        return [w for w, _ in self.items()]

    def coeff(self, w, T=None):
        """Coefficient polynomial of w (as a tuple), or its value at T."""
        p = self._terms.get(w, ())
        return p if T is None else _peval(p, T)

    def __len__(self):
        return len(self._terms)

    def __eq__(self, other):
        if not isinstance(other, WordPoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __add__(self, other):
        out = dict(self._terms)
        for w, p in other._terms.items():
            out[w] = _padd(out.get(w, ()), p)
        return WordPoly(out)

    def __sub__(self, other):
        return self + other.scale(-1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, c):
        """Multiply by a number or by a T-polynomial given as a tuple."""
        if isinstance(c, tuple):
            return WordPoly({w: _pmul(p, _ptrim(Fraction(x) for x in c)) for w, p in self._terms.items()})
        c = Fraction(c)
        return WordPoly({w: _pscale(p, c) for w, p in self._terms.items()})

    def __mul__(self, c):
        return self.scale(c)

    __rmul__ = __mul__

    def times_T(self, k=1):
        return self.scale(tuple([0] * k + [1]))

    def shuffle(self, other):
        out = WordPoly()
        for u, p in self._terms.items():
            for v, q in other._terms.items():
                pq = _pmul(p, q)
                out = out + WordPoly({w: _pscale(pq, Fraction(m)) for w, m in _shuffle_counts(u, v).items()})
        return out

    def max_len(self):
        return max((len(w) for w in self._terms), default=0)

    def evaluate(self, sig, T=None):
        """Value on a signature (object with ``[word]`` and ``length``)."""
        if T is None:
            T = sig.length
        return float(sum(_peval(p, T) * sig[w] for w, p in self._terms.items()))

    def to_dict(self):
        return {format_word(w): [str(c) for c in p] for w, p in self.items()}

    def __repr__(self):
        if not self._terms:
            return "WordPoly(0)"
        body = " + ".join(f"({_pstr(p)})*{format_word(w)}" for w, p in self.items())
        return f"WordPoly({body})"


# ---------------------------------------------------------------------------
# shuffle

@lru_cache(maxsize=None)
def _shuffle_tuple(u, v):
    # recursion on the last letters: (ua) sh (vb) = (ua sh v) b + (u sh vb) a
    if not u:
        return ((v, 1),)
    if not v:
        return ((u, 1),)
    acc = {}
    for w, m in _shuffle_tuple(u, v[:-1]):
        acc[w + v[-1]] = acc.get(w + v[-1], 0) + m
    for w, m in _shuffle_tuple(u[:-1], v):
        acc[w + u[-1]] = acc.get(w + u[-1], 0) + m
    return tuple(sorted(acc.items()))


def _shuffle_counts(u, v):
    return dict(_shuffle_tuple(u, v))


def shuffle(u, v):
    """Shuffle product of two words as a WordPoly with integer coefficients."""
    return WordPoly(_shuffle_counts(u, v))


def shuffle_bruteforce(u, v):
    """Shuffle by listing every interleaving (reference implementation)."""
    from itertools import combinations
    n = len(u) + len(v)
    acc = {}
    for pos in combinations(range(n), len(u)):
        w, iu, iv = [], 0, 0
        ps = set(pos)
        for k in range(n):
            if k in ps:
                w.append(u[iu])
                iu += 1
            else:
                w.append(v[iv])
                iv += 1
        s = "".join(w)
        acc[s] = acc.get(s, 0) + 1
    return WordPoly(acc)


# ---------------------------------------------------------------------------
# reduction to the basis {empty} U {words ending in 1}

def _integrate_against_time(wp):
    """Reduced form of the word-wise map S_w -> S_{w0}, i.e. of int_0^T (.) ds.

    Each coefficient c(s) of the reduced integrand is a polynomial in the
    running time.  For the empty word the time integral is explicit.  For
    w = g1, integration by parts with Q(s) = int_s^T c(r) dr gives
    int_0^T c(s) S_{g1}(s) ds = int_0^T Q(s) S_g(s) dx_s, and Q(s) is a
    combination of s^j = j! S_{0^j}(s), so the term becomes
    sum_j q_j(T) j! S_{(0^j sh g) 1}.
    """
    out = WordPoly()
    for w, c in wp._terms.items():
        # antiderivative P with P(0) = 0
        P = (Fraction(0),) + tuple(ck / (k + 1) for k, ck in enumerate(c))
        if w == EMPTY:
            out = out + WordPoly({EMPTY: P})
            continue
        if w[-1] != "1":
            raise ValueError("integrand must already be reduced")
        g = w[:-1]
        # Q(s) = P(T) - P(s); P(T) is a polynomial in T
        q = {0: _ptrim(P)}
        for k in range(1, len(P)):
            if P[k] != 0:
                q[k] = _pconst(-P[k])
        for j, qj in q.items():
            if not qj:
                continue
            coeff = _pscale(qj, Fraction(factorial(j)))
            for u, m in _shuffle_counts(zeros(j), g).items():
                out = out + WordPoly({u + "1": _pscale(coeff, Fraction(m))})
    return out


@lru_cache(maxsize=None)
def _basis_reduce_cached(w):
    if w == EMPTY or w[-1] == "1":
        return WordPoly.word(w)
    return _integrate_against_time(_basis_reduce_cached(w[:-1]))


def basis_reduce(w):
    """Express S_w(X_T) through S_empty and words ending in 1.

    Coefficients are exact polynomials in the path length T.  Trailing zeros
    are peeled one at a time, each one being a time integral of the reduced
    shorter word.
    """
    return _basis_reduce_cached(w)


def basis_reduce_closed(w):
    """Closed form for w = b 0^m with b ending in 1 (or empty).

    S_{b0^m}(X_T) = sum_j (-1)^j T^{m-j}/(m-j)! S_{(0^j sh g) 1}, b = g1.
    Independent of the recursion in :func:`basis_reduce`.
    """
    b = w.rstrip("0")
    m = len(w) - len(b)
    if m == 0:
        return WordPoly.word(w)
    if b == EMPTY:
        return WordPoly({EMPTY: tuple([0] * m + [Fraction(1, factorial(m))])})
    g = b[:-1]
    out = WordPoly()
    for j in range(m + 1):
        c = tuple([0] * (m - j) + [Fraction((-1) ** j, factorial(m - j))])
        for u, mult in _shuffle_counts(zeros(j), g).items():
            out = out + WordPoly({u + "1": _pscale(c, Fraction(mult))})
    return out


def basis_words(max_len):
    """The reduced family: the empty word and words ending in 1, length <= K."""
    return [w for w in enumerate_words(max_len) if w == EMPTY or w[-1] == "1"]


def shuffle_coefficient_sum(u, v):
    return comb(len(u) + len(v), len(u))


def weight_class_sizes(kmax):
    return np.array([len(words_with_weight(k)) for k in range(kmax + 1)])
