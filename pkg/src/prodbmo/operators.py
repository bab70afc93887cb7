"""Bilinear Haar operators and the product expansion of ``phi * f``.

A signature ``(eps, delta, beta)`` picks, per axis, which pairing each slot
uses: ``0`` means the Haar function ``h_I`` and ``1`` the normalised indicator
``chi_I/|I|``. The operator is

    B(phi, f) = sum_R <phi, h_R^eps> <f, h_R^delta> h_R^beta

over dyadic rectangles with Haar level on every axis. The admissible
signatures use per axis one of (0,1,0), (1,0,0), (0,0,1); these 3^N
operators add up to the pointwise product when one factor has zero means
along every variable.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import CapacityError, ConvergenceError
from .geometry import Grid, all_dyadic_rectangles
from .haar import (HAAR, MEAN, GridFunction, HaarSpectrum, _check_same_grid, apply_axis,
                   forward_haar, haar_table, mode_coefficients, mode_synthesis, square_function)

DEFAULT_MATRIX_CAP = 4096
POWER_TOL = 1e-10
POWER_MAX_ITER = 10_000


# ---------------------------------------------------------------- signatures

@dataclass(frozen=True, order=True)
class Signature:
    eps: tuple[int, ...]
    delta: tuple[int, ...]
    beta: tuple[int, ...]

    def __post_init__(self):
        for name in ("eps", "delta", "beta"):
            v = tuple(int(x) for x in getattr(self, name))
            if any(x not in (0, 1) for x in v):
                raise ValueError(f"{name} must be a 0/1 vector, got {v}")
            object.__setattr__(self, name, v)
        if not len(self.eps) == len(self.delta) == len(self.beta):
            raise ValueError("eps, delta and beta must have the same length")
        if not admissible(self.eps, self.delta, self.beta):
            raise ValueError(f"inadmissible signature {self.eps}, {self.delta}, {self.beta}")

    @property
    def N(self) -> int:
        return len(self.eps)

    def modes(self):
        """Pairing per axis for phi, f and the output."""
        pick = lambda v: [MEAN if x else HAAR for x in v]
        return pick(self.eps), pick(self.delta), pick(self.beta)

    def __str__(self):
        return ":".join("".join(map(str, v)) for v in (self.eps, self.delta, self.beta))

    @classmethod
    def parse(cls, text: str) -> Signature:
        """``"eps:delta:beta"`` with each part a string of 0/1 digits, e.g. ``"00:11:00"``."""
        parts = text.strip().split(":")
        if len(parts) != 3:
            raise ValueError(f"signature {text!r} must look like eps:delta:beta")
        return cls(*(tuple(int(ch) for ch in p) for p in parts))

    @classmethod
    def from_axes(cls, triples: Sequence[tuple[int, int, int]]) -> Signature:
        return cls(*(tuple(t[i] for t in triples) for i in range(3)))


def admissible(eps, delta, beta) -> bool:
    """All three membership conditions for the index set of the expansion.

    The first two are implied by the third when it is read per coordinate;
    they are checked anyway.
    """
    if all(x == 0 for x in (*eps, *delta, *beta)):
        return False
    if all(x == 1 for x in (*eps, *delta)):
        return False
    return all(e + d == 1 - b for e, d, b in zip(eps, delta, beta))


def enumerate_signatures(N: int) -> list[Signature]:
    """All admissible signatures in dimension ``N`` (there are 3^N), sorted."""
    if N < 1:
        raise ValueError("N must be positive")
    out = []
    for bits in itertools.product((0, 1), repeat=3 * N):
        e, d, b = bits[:N], bits[N:2 * N], bits[2 * N:]
        if admissible(e, d, b):
            out.append(Signature(e, d, b))
    return sorted(out)


def pi_signature(N: int) -> Signature:
    return Signature((0,) * N, (1,) * N, (0,) * N)


def delta_signature(N: int) -> Signature:
    return Signature((0,) * N, (0,) * N, (1,) * N)


def pi_beta_signature(beta: Sequence[int]) -> Signature:
    beta = tuple(int(b) for b in beta)
    return Signature((0,) * len(beta), tuple(1 - b for b in beta), beta)


# ---------------------------------------------------------------- application

def _b_arrays(phi_arr, f_arr, levels, sig: Signature, batch=0):
    me, md, mb = sig.modes()
    a = mode_coefficients(phi_arr, levels, me)
    b = mode_coefficients(f_arr, levels, md, batch=batch)
    return mode_synthesis(a * b, levels, mb, batch=batch)


def apply_B(phi: GridFunction, f: GridFunction, sig: Signature) -> GridFunction:
    _check_same_grid(phi, f)
    if sig.N != f.grid.N:
        raise ValueError(f"signature of length {sig.N} on an N={f.grid.N} grid")
    out = _b_arrays(phi.aligned(), f.aligned(), f.grid.levels, sig)
    return GridFunction.from_aligned(f.grid, out)


def multiply(phi: GridFunction, f: GridFunction) -> GridFunction:
    _check_same_grid(phi, f)
    return phi * f


def decompose_product(phi: GridFunction, f: GridFunction) -> dict[Signature, GridFunction]:
    """Every admissible component ``B_sig(phi, f)``, keyed by signature."""
    _check_same_grid(phi, f)
    return {sig: apply_B(phi, f, sig) for sig in enumerate_signatures(f.grid.N)}


def is_band_limited(f: GridFunction, atol: float = 1e-12) -> bool:
    """True when ``f`` has zero mean along every variable (pure Haar spectrum)."""
    s = forward_haar(f)
    return bool(np.all(np.abs(s.coeffs[~s.pure_mask()]) <= atol))


def decomposition_residual(phi: GridFunction, f: GridFunction) -> float:
    """Largest cell error of ``sum_sig B_sig(phi, f) - phi f``.

    Zero up to round-off when ``phi`` or ``f`` passes :func:`is_band_limited`;
    otherwise the terms carrying a mean of both factors along some variable
    are missing.
    """
    total = sum((g.values for g in decompose_product(phi, f).values()), np.zeros(f.grid.shape))
    return float(np.max(np.abs(total - (phi * f).values)))


# ---------------------------------------------------------------- named operators

def _groups(N: int, split, parts: int) -> list[list[int]]:
    """Axis groups from sizes ``(N1, N2, ..)`` or explicit axis lists."""
    if split is None or len(split) != parts:
        raise ValueError(f"need a split into {parts} groups, got {split}")
    if all(isinstance(s, (int, np.integer)) for s in split):
        sizes = [int(s) for s in split]
        if any(s <= 0 for s in sizes) or sum(sizes) != N:
            raise ValueError(f"split {tuple(sizes)} must be positive sizes adding to N={N}")
        bounds = np.cumsum([0] + sizes)
        return [list(range(bounds[i], bounds[i + 1])) for i in range(parts)]
    groups = [sorted(int(a) for a in g) for g in split]
    flat = sorted(a for g in groups for a in g)
    if flat != list(range(N)) or any(not g for g in groups):
        raise ValueError(f"split {split} does not partition the axes 0..{N - 1}")
    return groups


_OPTION = {"haar_phi": (0, 1, 0), "mean_phi": (1, 0, 0), "diag": (0, 0, 1)}


def _signature_from_groups(N: int, groups: list[list[int]], options: list[str]) -> Signature:
    triples = [None] * N
    for g, opt in zip(groups, options):
        for a in g:
            triples[a] = _OPTION[opt]
    return Signature.from_axes(triples)


@dataclass
class OperatorHandle:
    """A linear operator ``f -> op(f)`` with the symbol ``phi`` frozen in."""

    name: str
    phi: GridFunction
    signature: Signature | None = None   # None for pointwise multiplication

    def __call__(self, f: GridFunction) -> GridFunction:
        if self.signature is None:
            return multiply(self.phi, f)
        return apply_B(self.phi, f, self.signature)

    apply = __call__

    @property
    def grid(self) -> Grid:
        return self.phi.grid

    def apply_batch(self, F: np.ndarray) -> np.ndarray:
        """Apply to a stack of aligned value arrays ``F`` of shape ``(B, *grid.shape)``."""
        if self.signature is None:
            return F * self.phi.aligned()[None]
        return _b_arrays(self.phi.aligned(), F, self.grid.levels, self.signature, batch=1)


def named_operator(name: str, phi: GridFunction, split=None, beta=None) -> OperatorHandle:
    """Look up an operator of the family by name.

    ``PI`` and ``DELTA`` are the main and diagonal paraproducts; ``PI_BETA``
    takes ``beta``; ``T1`` is the Haar multiplier by ``m_R phi``. ``T2`` and
    ``T3`` take a two-way ``split`` (S-axes, T-axes) and ``T4`` a three-way one.
    ``M`` is multiplication by ``phi``. A split is given by group sizes over
    consecutive axes or by explicit axis lists.
    """
    N = phi.grid.N
    key = name.upper()
    if key == "PI":
        return OperatorHandle("PI", phi, pi_signature(N))
    if key == "DELTA":
        return OperatorHandle("DELTA", phi, delta_signature(N))
    if key == "PI_BETA":
        if beta is None or len(beta) != N:
            raise ValueError(f"PI_BETA needs a beta vector of length {N}")
        return OperatorHandle(f"PI_BETA[{''.join(map(str, beta))}]", phi, pi_beta_signature(beta))
    if key == "T1":
        return OperatorHandle("T1", phi, Signature((1,) * N, (0,) * N, (0,) * N))
    if key == "T2":
        g = _groups(N, split, 2)
        return OperatorHandle("T2", phi, _signature_from_groups(N, g, ["diag", "mean_phi"]))
    if key == "T3":
        g = _groups(N, split, 2)
        return OperatorHandle("T3", phi, _signature_from_groups(N, g, ["haar_phi", "mean_phi"]))
    if key == "T4":
        g = _groups(N, split, 3)
        return OperatorHandle("T4", phi, _signature_from_groups(N, g, ["haar_phi", "diag", "mean_phi"]))
    if key in ("M", "MULTIPLY"):
        return OperatorHandle("M", phi, None)
    raise ValueError(f"unknown operator {name!r}")


# ---------------------------------------------------------------- matrices

@dataclass
class OperatorMatrix:
    """Dense matrix of an operator in the augmented Haar basis.

    Rows and columns are flat indices into the spectrum layout of ``grid``.
    """

    grid: Grid
    entries: np.ndarray
    name: str = ""

    @property
    def shape(self):
        return self.entries.shape

    def apply(self, s: HaarSpectrum) -> HaarSpectrum:
        if s.grid.levels != self.grid.levels:
            raise ValueError("spectrum resolution does not match the matrix")
        out = self.entries @ s.coeffs.ravel()
        return HaarSpectrum(s.grid, out.reshape(self.grid.shape))


def _synthesize_batch(C: np.ndarray, levels) -> np.ndarray:
    for a, k in enumerate(levels):
        C = apply_axis(C, haar_table(k).T, a + 1)
    return C


def _analyze_batch(F: np.ndarray, levels) -> np.ndarray:
    for a, k in enumerate(levels):
        F = apply_axis(F, haar_table(k) / 2 ** k, a + 1)
    return F


def assemble_matrix(op: OperatorHandle | Callable, grid: Grid | None = None,
                    cap: int = DEFAULT_MATRIX_CAP) -> OperatorMatrix:
    """Column ``c`` holds the spectrum of the operator applied to basis function ``c``."""
    grid = grid if grid is not None else op.grid
    dim = grid.ncells
    if dim > cap:
        raise CapacityError(f"basis dimension {dim} exceeds the matrix cap {cap}")
    basis = _synthesize_batch(np.eye(dim).reshape((dim,) + grid.shape), grid.levels)
    if isinstance(op, OperatorHandle):
        if op.grid.levels != grid.levels:
            raise ValueError("operator and grid resolutions differ")
        images = op.apply_batch(basis)
    else:
        images = np.stack([op(GridFunction.from_aligned(grid, b)).aligned() for b in basis])
    cols = _analyze_batch(images, grid.levels).reshape(dim, dim)
    return OperatorMatrix(grid, cols.T.copy(), getattr(op, "name", ""))


def l2_operator_norm(m: OperatorMatrix | np.ndarray, tol: float = POWER_TOL,
                     max_iter: int = POWER_MAX_ITER) -> float:
    """Largest singular value by power iteration on ``M^T M``.

    Starts from the normalised all-ones vector and stops once the estimate
    changes by at most ``tol`` relative to itself.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    A = m.entries if isinstance(m, OperatorMatrix) else np.asarray(m, dtype=float)
    x = np.ones(A.shape[1]) / np.sqrt(A.shape[1])
    est = 0.0
    for it in range(1, max_iter + 1):
        y = A.T @ (A @ x)
        ny = float(np.linalg.norm(y))
        if ny == 0.0:
            return 0.0
        new = np.sqrt(ny)   # ||M^T M x|| with ||x|| = 1 tends to sigma_max^2
        x = y / ny
        if abs(new - est) <= tol * new:
            return float(new)
        est = new
    raise ConvergenceError(f"power iteration did not settle in {max_iter} steps", estimate=est,
                           iterations=max_iter)


# ---------------------------------------------------------------- bmo -> BMO lower bounds

def _norm_table():
    from . import norms
    return {
        "bmo": lambda g, **kw: norms.bmo_norm(g).value,
        "BMO": lambda g, **kw: norms.product_bmo_norm(g, **kw).value,
        "BMO_m": lambda g, **kw: norms.bmo_m_norm(g, **kw).value,
        "LMO": lambda g, **kw: norms.lmo_norm(g, search=kw.get("mode", "auto"), cap=kw.get("cap")).value,
        "L2": lambda g, **kw: g.l2_norm(),
        "Linf": lambda g, **kw: g.sup_norm(),
    }


def default_family(grid: Grid, seeds: Iterable[int] = (0, 1, 2, 3)) -> list[tuple[str, GridFunction]]:
    """Normalised Haar atoms, indicators, dyadic logarithms and random samples."""
    from .testfns import FunctionRecipe, dyadic_log, sample
    from .haar import haar_atom
    out = []
    for R in all_dyadic_rectangles(grid):
        if all(I.level < k for I, k in zip(R.axes, grid.levels)):
            out.append((f"atom {R}", haar_atom(grid, R, normalized=True)))
    for R in all_dyadic_rectangles(grid):
        if any(I.level for I in R.axes):
            out.append((f"indicator {R}", GridFunction(grid, R.mask(grid).astype(float))))
        if any(I.level > 1 for I in R.axes):   # coarser logs are constant
            out.append((f"log {R}", dyadic_log(R, grid)))
    for s in seeds:
        out.append((f"random seed={s}", sample(FunctionRecipe.random(), grid, s)))
    return out


def bmo_to_bmo_lowerbound(op: OperatorHandle, family: Sequence | str | None = None,
                          norms: tuple[str, str] = ("bmo", "BMO"), **norm_kwargs):
    """Largest ``||op f||_codomain / ||f||_domain`` over a test family.

    ``family`` is a list of functions or ``(label, function)`` pairs, or
    ``None`` / ``"default"`` for :func:`default_family`. Members with zero
    domain norm are skipped with a warning. The result is a lower bound for the
    operator norm between the two spaces at this resolution.
    """
    from .norms import NormReport, EXACT, HEURISTIC, _resolve_mode
    table = _norm_table()
    dom, cod = norms
    if dom not in table or cod not in table:
        raise ValueError(f"unknown norms {norms}; choose from {sorted(table)}")
    if family is None or family == "default":
        family = default_family(op.grid)
    members = [m if isinstance(m, tuple) else (f"member {i}", m) for i, m in enumerate(family)]
    if not members:
        raise ValueError("empty test family")
    best, wit = 0.0, None
    for label, f in members:
        d = table[dom](f, **norm_kwargs)
        if d <= 1e-14:
            warnings.warn(f"skipping {label}: zero {dom} norm", RuntimeWarning, stacklevel=2)
            continue
        ratio = table[cod](op(f), **norm_kwargs) / d
        if wit is None or ratio > best:
            best, wit = ratio, label
    if wit is None:
        raise ValueError("every family member has zero domain norm")
    method = EXACT
    if cod in ("BMO", "BMO_m", "LMO") or dom in ("BMO", "BMO_m", "LMO"):
        method = _resolve_mode(norm_kwargs.get("mode", "auto"), op.grid.ncells, norm_kwargs.get("cap"))
    return NormReport(f"{op.name}:{dom}->{cod}", float(best), wit,
                      HEURISTIC if method == HEURISTIC else EXACT, op.grid)


# ---------------------------------------------------------------- the bilinear form K

def bilinear_K(f: GridFunction, g: GridFunction, split) -> tuple[GridFunction, float]:
    """``K(f, g) = sum_{S,T} (m_S f_T)(m_T g_S) h_S h_T`` and its dyadic H^1 norm.

    ``S`` runs over rectangles in the first group of axes and ``T`` over the
    second; ``m_S f_T`` pairs ``f`` with ``chi_S/|S|`` and ``h_T``.
    """
    _check_same_grid(f, g)
    N = f.grid.N
    S, T = _groups(N, split, 2)
    fm = [MEAN if a in S else HAAR for a in range(N)]
    gm = [HAAR if a in S else MEAN for a in range(N)]
    lv = f.grid.levels
    c = mode_coefficients(f.aligned(), lv, fm) * mode_coefficients(g.aligned(), lv, gm)
    K = GridFunction.from_aligned(f.grid, mode_synthesis(c, lv, [HAAR] * N))
    return K, square_function(K)[1]
