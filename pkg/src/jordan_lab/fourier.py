"""Finite real trigonometric fields on T^4 and grid helpers.

A :class:`FourierField` is the finite sum

    f(x) = sum_m  cos_m * cos(2 pi m.x) + sin_m * sin(2 pi m.x)

with vector-valued coefficients.  Values and derivatives are exact finite sums.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi
_CHUNK_ELEMS = 2 ** 23


def torus_reduce(x: np.ndarray) -> np.ndarray:
    """Reduce coordinates into [0, 1)."""
    y = np.mod(x, 1.0)
    # np.mod can return 1.0 for tiny negative inputs
    y[y >= 1.0] = 0.0
    return y


def torus_delta(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Shortest representative of ``a - b`` modulo Z^4."""
    d = np.asarray(a) - np.asarray(b)
    return d - np.round(d)


def torus_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.linalg.norm(torus_delta(a, b), axis=-1)


@dataclass(frozen=True)
class TorusPoint:
    coords: tuple

    def __init__(self, coords):
        c = torus_reduce(np.asarray(coords, dtype=float).reshape(4))
        object.__setattr__(self, "coords", tuple(float(v) for v in c))

    def array(self) -> np.ndarray:
        return np.array(self.coords)

    def distance(self, other: "TorusPoint") -> float:
        return float(torus_distance(self.array(), other.array()))


def grid_points(n: int) -> np.ndarray:
    """All points ``i/n`` of the uniform grid, C-ordered, shape (n^4, 4)."""
    ax = np.arange(n) / n
    g = np.stack(np.meshgrid(ax, ax, ax, ax, indexing="ij"), axis=-1)
    return g.reshape(-1, 4)


def grid_index(n: int) -> np.ndarray:
    ax = np.arange(n)
    g = np.stack(np.meshgrid(ax, ax, ax, ax, indexing="ij"), axis=-1)
    return g.reshape(-1, 4)


def flat_index(idx: np.ndarray, n: int) -> np.ndarray:
    idx = np.mod(idx, n)
    return ((idx[..., 0] * n + idx[..., 1]) * n + idx[..., 2]) * n + idx[..., 3]


class FourierField:
    """Real trigonometric polynomial ``T^4 -> R^d``."""

    def __init__(self, freqs, cos, sin):
        self.freqs = np.asarray(freqs, dtype=np.int64).reshape(-1, 4)
        t = len(self.freqs)
        cos, sin = np.asarray(cos, dtype=float), np.asarray(sin, dtype=float)
        self.cos = cos.reshape(t, -1) if t else cos.reshape(0, cos.shape[-1] if cos.ndim > 1 else 1)
        self.sin = sin.reshape(t, -1) if t else sin.reshape(self.cos.shape)
        if self.cos.shape != self.sin.shape:
            raise ValueError("cos/sin coefficient shapes differ")

    @property
    def dim(self) -> int:
        return self.cos.shape[1]

    @property
    def n_terms(self) -> int:
        return len(self.freqs)

    @property
    def maxfreq(self) -> int:
        return int(np.abs(self.freqs).max()) if self.n_terms else 0

    @classmethod
    def zero(cls, dim: int = 4) -> "FourierField":
        return cls(np.zeros((0, 4)), np.zeros((0, dim)), np.zeros((0, dim)))

    # -- serialization -------------------------------------------------
    @classmethod
    def from_records(cls, records: list, dim: int = 4) -> "FourierField":
        if not records:
            return cls.zero(dim)
        freqs = [r["m"] for r in records]
        cos = [r.get("cos", [0.0] * dim) for r in records]
        sin = [r.get("sin", [0.0] * dim) for r in records]
        return cls(freqs, cos, sin)

    def to_records(self) -> list:
        return [{"m": [int(v) for v in m], "cos": [float(v) for v in c], "sin": [float(v) for v in s]}
                for m, c, s in zip(self.freqs, self.cos, self.sin)]

    def scaled(self, c: float) -> "FourierField":
        return FourierField(self.freqs, c * self.cos, c * self.sin)

    def pruned(self, mass: float) -> "FourierField":
        """Drop the smallest terms whose total amplitude stays below ``mass``
        (so the sup-norm change is at most ``mass``)."""
        amp = self.amplitude()
        order = np.argsort(amp, kind="stable")
        drop = order[np.cumsum(amp[order]) <= mass]
        keep = np.setdiff1d(np.arange(self.n_terms), drop)
        return FourierField(self.freqs[keep], self.cos[keep], self.sin[keep])

    # -- evaluation ----------------------------------------------------
    def _chunks(self, n: int):
        step = max(1, _CHUNK_ELEMS // max(1, self.n_terms))
        for s in range(0, n, step):
            yield slice(s, min(n, s + step))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros((len(x), self.dim))
        if not self.n_terms:
            return out
        for sl in self._chunks(len(x)):
            ang = TWO_PI * (x[sl] @ self.freqs.T)
            out[sl] = np.cos(ang) @ self.cos + np.sin(ang) @ self.sin
        return out

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        """Derivative, shape (N, d, 4)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros((len(x), self.dim, 4))
        if not self.n_terms:
            return out
        m = TWO_PI * self.freqs.astype(float)
        for sl in self._chunks(len(x)):
            ang = TWO_PI * (x[sl] @ self.freqs.T)
            c, s = np.cos(ang), np.sin(ang)
            # d/dx of cos_m cos + sin_m sin = (-cos_m sin + sin_m cos) * 2 pi m
            out[sl] = np.einsum("nt,td,tk->ndk", c, self.sin, m) - np.einsum("nt,td,tk->ndk", s, self.cos, m)
        return out

    # -- bounds ----------------------------------------------------------
    def amplitude(self) -> np.ndarray:
        return np.linalg.norm(self.cos, axis=1) + np.linalg.norm(self.sin, axis=1)

    def sup_bound(self) -> float:
        return float(self.amplitude().sum())

    def c1_bound(self) -> float:
        """Upper bound for the operator norm of the derivative."""
        return float((self.amplitude() * TWO_PI * np.linalg.norm(self.freqs, axis=1)).sum())

    def c2_bound(self) -> float:
        """Upper bound for the Lipschitz constant of the derivative."""
        return float((self.amplitude() * (TWO_PI * np.linalg.norm(self.freqs, axis=1)) ** 2).sum())

    # -- grid transforms -------------------------------------------------
    @classmethod
    def from_grid(cls, values: np.ndarray, n: int, rel_tol: float = 1e-15, maxfreq: int | None = None) -> "FourierField":
        """Trigonometric interpolant of samples on the ``n``-grid (Nyquist modes dropped).

        ``values`` has shape (n^4, d) in :func:`grid_points` order.
        """
        v = np.asarray(values, dtype=float).reshape(n, n, n, n, -1)
        coef = np.fft.fftn(v, axes=(0, 1, 2, 3)) / n ** 4
        k = np.rint(np.fft.fftfreq(n) * n).astype(np.int64)
        K = np.stack(np.meshgrid(k, k, k, k, indexing="ij"), axis=-1).reshape(-1, 4)
        coef = coef.reshape(len(K), -1)
        keep = np.all(np.abs(K) < n / 2, axis=1) if n % 2 == 0 else np.ones(len(K), bool)
        if maxfreq is not None:
            keep &= np.all(np.abs(K) <= maxfreq, axis=1)
        return cls.from_complex(K[keep], coef[keep], rel_tol)

    @classmethod
    def from_complex(cls, K: np.ndarray, coef: np.ndarray, rel_tol: float = 1e-15) -> "FourierField":
        """Real field from complex coefficients of ``sum c_k e(k.x)`` given on a
        set closed under ``k -> -k``."""
        nz = K != 0
        first = np.argmax(nz, axis=1)
        lead = K[np.arange(len(K)), first]
        zero = ~nz.any(axis=1)
        half = (lead > 0) & ~zero
        Kh, ch = K[half], coef[half]
        cos = np.vstack([coef[zero].real, 2.0 * ch.real])
        sin = np.vstack([np.zeros_like(coef[zero].real), -2.0 * ch.imag])
        freqs = np.vstack([K[zero], Kh])
        amp = np.abs(cos).max(axis=1) + np.abs(sin).max(axis=1)
        scale = amp.max() if len(amp) else 0.0
        keep = amp > rel_tol * scale
        keep[: int(zero.sum())] = True
        order = np.lexsort(freqs[keep].T[::-1])
        return cls(freqs[keep][order], cos[keep][order], sin[keep][order])


def grid_eval(field: FourierField, n: int) -> np.ndarray:
    """Evaluate on the ``n``-grid through an inverse FFT (exact for maxfreq < n/2)."""
    if field.maxfreq >= n / 2:
        return field(grid_points(n))
    spec = np.zeros((n, n, n, n, field.dim), dtype=complex)
    f = field.freqs
    idx = tuple(np.mod(f[:, i], n) for i in range(4))
    nidx = tuple(np.mod(-f[:, i], n) for i in range(4))
    # zero mode lands twice with half weight each
    c = (field.cos - 1j * field.sin) / 2.0
    np.add.at(spec, idx, c)
    np.add.at(spec, nidx, np.conj(c))
    out = np.fft.ifftn(spec, axes=(0, 1, 2, 3)).real * n ** 4
    return out.reshape(-1, field.dim)
