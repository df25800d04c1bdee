"""Dense saddle-point kernel.

Works with the block system

    [ G  B ] [v]   [f]
    [ B^T 0 ] [w] = [g]

where G is the SPD Gram matrix of a test space V and B couples a trial
space U to V.  Placing the data in f (g = 0) gives the overdetermined,
residual-minimizing route; placing it in g (f = 0) gives the
underdetermined, norm-minimizing route.  Eliminating v yields the normal
equation B^T G^{-1} B w = B^T G^{-1} f - g with v = G^{-1}(f - B w).

The module also machine-checks the exact Pythagorean (hypercircle)
identities that relate loads, solution components and the G-weighted
dual norms; ``check_identities`` returns one scaled residual per
identity.  All norms on functionals use Cholesky solves with G, never an
explicit inverse.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve, solve_triangular, svd

from .errors import RankDeficiency, ShapeError

RANK_RTOL = 1e-10  # relative singular-value cutoff for rank decisions


def _as_matrix(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class MixedOperatorSpec:
    """One dense instance: Gram matrix, coupling matrix, two loads.

    gram: (n, n) SPD; b_matrix: (n, m); load_f: (n,); load_g: (m,).
    """

    gram: np.ndarray
    b_matrix: np.ndarray
    load_f: np.ndarray
    load_g: np.ndarray

    def __post_init__(self):
        G = _as_matrix(self.gram, "gram")
        B = _as_matrix(self.b_matrix, "b_matrix")
        f = np.asarray(self.load_f, dtype=float).ravel()
        g = np.asarray(self.load_g, dtype=float).ravel()
        n, m = B.shape
        if G.shape != (n, n):
            raise ShapeError(f"gram {G.shape} incompatible with b_matrix {B.shape}")
        if f.shape != (n,) or g.shape != (m,):
            raise ShapeError("load vector lengths do not match the operator blocks")
        scale = np.abs(G).max() or 1.0
        if np.abs(G - G.T).max() > 1e-12 * scale:
            raise ShapeError("gram is not symmetric to 1e-12 relative")
        object.__setattr__(self, "gram", G)
        object.__setattr__(self, "b_matrix", B)
        object.__setattr__(self, "load_f", f)
        object.__setattr__(self, "load_g", g)

    @property
    def n(self):
        return self.gram.shape[0]

    @property
    def m(self):
        return self.b_matrix.shape[1]

    def gram_chol(self):
        try:
            return cho_factor(self.gram, lower=True)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
            raise ShapeError("gram is not positive definite") from exc

    def whitened_b(self):
        """L^{-1} B for the Cholesky factor G = L L^T."""
        c, low = self.gram_chol()
        return solve_triangular(c, self.b_matrix, lower=low)

    def gamma(self):
        """Bounded-below constant: smallest singular value of G^{-1/2} B."""
        s = svd(self.whitened_b(), compute_uv=False)
        return float(s[-1]) if s.size else 0.0


@dataclass(frozen=True)
class MixedSolution:
    v: np.ndarray
    w: np.ndarray


@dataclass(frozen=True)
class DecompositionReport:
    """Split of v and load_f against the kernel of the adjoint coupling.

    v0 lies in Null(B^T), v_perp is its G-orthogonal complement part;
    f0 lies in G * Null(B^T), f_perp annihilates Null(B^T).
    """

    v0: np.ndarray
    v_perp: np.ndarray
    f0: np.ndarray
    f_perp: np.ndarray
    null_dim: int
    null_basis: np.ndarray = field(repr=False, default=None)


@dataclass(frozen=True)
class IdentityResiduals:
    """Scaled absolute residuals of the exact saddle identities.

    Keys identity1..identity5 (identity5 present only when applicable:
    the trial coupling is onto, i.e. null_dim == 0, or f0 vanishes).
    """

    residuals: dict
    identity5_applicable: bool

    def max_residual(self):
        return max(self.residuals.values())


def _check_rank(B, context):
    if B.size == 0:
        return
    s = svd(B, compute_uv=False)
    rank = int(np.sum(s > RANK_RTOL * s[0])) if s[0] > 0 else 0
    if rank < B.shape[1]:
        raise RankDeficiency(rank, B.shape[1], f"{context}: numerical rank {rank} < {B.shape[1]}")


def solve_mixed(spec: MixedOperatorSpec) -> MixedSolution:
    """Monolithic solve of the indefinite block system.

    Uses a dense symmetric-indefinite factorization on the full
    (n+m) x (n+m) matrix and verifies both block residuals.
    """
    _check_rank(spec.b_matrix, "solve_mixed")
    n, m = spec.n, spec.m
    K = np.zeros((n + m, n + m))
    K[:n, :n] = spec.gram
    K[:n, n:] = spec.b_matrix
    K[n:, :n] = spec.b_matrix.T
    rhs = np.concatenate([spec.load_f, spec.load_g])
    sol = solve(K, rhs, assume_a="sym")
    v, w = sol[:n], sol[n:]
    _verify_blocks(spec, v, w)
    return MixedSolution(v=v, w=w)


def solve_schur(spec: MixedOperatorSpec) -> MixedSolution:
    """Eliminate v: solve B^T G^{-1} B w = B^T G^{-1} f - g, then recover v.

    The Schur matrix is formed as C^T C with C = L^{-1} B, so it is
    symmetric by construction, and its Cholesky factorization doubles as
    the positive-definiteness check.
    """
    _check_rank(spec.b_matrix, "solve_schur")
    c, low = spec.gram_chol()
    C = solve_triangular(c, spec.b_matrix, lower=low)
    S = C.T @ C
    rhs = spec.b_matrix.T @ cho_solve((c, low), spec.load_f) - spec.load_g
    try:
        s_chol = cho_factor(S, lower=True)
    except np.linalg.LinAlgError as exc:
        raise RankDeficiency(0, spec.m, "Schur complement not SPD") from exc
    w = cho_solve(s_chol, rhs)
    v = cho_solve((c, low), spec.load_f - spec.b_matrix @ w)
    _verify_blocks(spec, v, w)
    return MixedSolution(v=v, w=w)


def _verify_blocks(spec, v, w, rtol=1e-10):
    r1 = spec.gram @ v + spec.b_matrix @ w - spec.load_f
    r2 = spec.b_matrix.T @ v - spec.load_g
    scale = max(
        np.linalg.norm(spec.load_f),
        np.linalg.norm(spec.load_g),
        np.linalg.norm(spec.gram @ v),
        np.linalg.norm(spec.b_matrix @ w),
        1e-300,
    )
    resid = max(np.linalg.norm(r1), np.linalg.norm(r2)) / scale
    if resid > rtol:
        raise RankDeficiency(0, spec.m, f"block residual {resid:.2e} exceeds {rtol:.1e}")


def decompose(spec: MixedOperatorSpec, sol: MixedSolution) -> DecompositionReport:
    """G-orthogonal split of v and the matching split of load_f.

    The kernel of B^T is found by SVD with a relative threshold; v0 is
    the G-orthogonal projection of v onto that kernel and f0 is the part
    of load_f lying in G * Null(B^T).
    """
    n = spec.n
    B = spec.b_matrix
    if B.size:
        U, s, Vt = svd(B.T)  # B^T is (m, n); null space lives in row space of Vt
        smax = s[0] if s.size else 0.0
        rank = int(np.sum(s > RANK_RTOL * smax)) if smax > 0 else 0
        N = Vt[rank:].T  # (n, null_dim), orthonormal columns
    else:
        N = np.eye(n)
    null_dim = N.shape[1]
    if null_dim == 0:
        v0 = np.zeros(n)
        f0 = np.zeros(n)
    else:
        M = N.T @ spec.gram @ N
        v0 = N @ solve(M, N.T @ (spec.gram @ sol.v), assume_a="pos")
        f0 = spec.gram @ (N @ solve(M, N.T @ spec.load_f, assume_a="pos"))
    return DecompositionReport(
        v0=v0,
        v_perp=sol.v - v0,
        f0=f0,
        f_perp=spec.load_f - f0,
        null_dim=null_dim,
        null_basis=N,
    )


def dual_norm(spec: MixedOperatorSpec, functional):
    """G^{-1}-weighted norm of a functional on the test space."""
    c, low = spec.gram_chol()
    y = solve_triangular(c, np.asarray(functional, dtype=float), lower=low)
    return float(np.linalg.norm(y))


def energy_norm(spec: MixedOperatorSpec, mu):
    """Trial energy norm |||mu||| = ||B mu|| in the dual norm."""
    return dual_norm(spec, spec.b_matrix @ np.asarray(mu, dtype=float))


def dual_energy_norm(spec: MixedOperatorSpec, functional_g):
    """Dual of the trial energy norm: sup_mu <g, mu> / |||mu|||.

    Equals sqrt(g^T S^{-1} g) with S the Schur complement; computed via a
    dense solve with S.
    """
    _check_rank(spec.b_matrix, "dual_energy_norm")
    C = spec.whitened_b()
    S = C.T @ C
    g = np.asarray(functional_g, dtype=float)
    return float(np.sqrt(max(g @ solve(S, g, assume_a="pos"), 0.0)))


def _vnorm(spec, x):
    return float(np.sqrt(max(np.asarray(x) @ (spec.gram @ np.asarray(x)), 0.0)))


def check_identities(spec: MixedOperatorSpec, sol: MixedSolution,
                     rep: DecompositionReport) -> IdentityResiduals:
    """Residuals of the five exact identities linking loads and solution.

    Each residual is |lhs - rhs| divided by max(|lhs|, |rhs|, data scale),
    so the pass/fail threshold is scale free.  Squared identities use the
    squared data scale.
    """
    G = spec.gram
    f, g = spec.load_f, spec.load_g
    v, w = sol.v, sol.w
    data_scale = dual_norm(spec, f) + (dual_energy_norm(spec, g) if spec.m else 0.0)
    data_scale = max(data_scale, 1e-300)

    def scaled(lhs, rhs, squared):
        floor = data_scale ** 2 if squared else data_scale
        return abs(lhs - rhs) / max(abs(lhs), abs(rhs), floor)

    res = {}
    n_v0 = _vnorm(spec, rep.v0)
    res["identity1"] = scaled(
        n_v0 ** 2 + dual_norm(spec, G @ rep.v_perp + spec.b_matrix @ w) ** 2,
        dual_norm(spec, f) ** 2, squared=True)
    res["identity2"] = scaled(
        n_v0 ** 2 + dual_norm(spec, spec.b_matrix @ w) ** 2,
        dual_norm(spec, f - G @ rep.v_perp) ** 2, squared=True)
    res["identity_v0"] = scaled(n_v0, dual_norm(spec, rep.f0), squared=False)
    res["identity_w"] = scaled(
        dual_norm(spec, spec.b_matrix @ w),
        dual_norm(spec, rep.f_perp - G @ rep.v_perp), squared=False)
    res["identity3"] = scaled(_vnorm(spec, rep.v_perp), dual_energy_norm(spec, g),
                              squared=False)
    res["identity4"] = scaled(
        _vnorm(spec, v) ** 2 + energy_norm(spec, w) ** 2,
        dual_norm(spec, f - G @ rep.v_perp) ** 2 + dual_energy_norm(spec, g) ** 2,
        squared=True)
    applicable = rep.null_dim == 0 or dual_norm(spec, rep.f0) <= 1e-12 * data_scale
    if applicable:
        res["identity5"] = scaled(_vnorm(spec, v), dual_energy_norm(spec, g),
                                  squared=False)
    return IdentityResiduals(residuals=res, identity5_applicable=applicable)


def build_placement(kind: str, operator_matrix, data_vector, gram=None) -> MixedOperatorSpec:
    """Wrap an operator equation A u = d into one of the saddle placements.

    dpg / least_squares: data goes to load_f with load_g = 0; the coupling
    is A itself and A must have full column rank.
    dpg_star / ll_star: data goes to load_g with load_f = 0; the coupling
    is A^T and A must have full column rank in its transpose role (full
    row rank of A).
    least_squares and ll_star force the identity gram; dpg and dpg_star
    accept an optional SPD gram for the test-space geometry.
    """
    A = _as_matrix(np.asarray(operator_matrix, dtype=float), "operator_matrix")
    d = np.asarray(data_vector, dtype=float).ravel()
    if kind in ("dpg", "least_squares"):
        _check_rank(A, kind)
        n, m = A.shape
        if d.shape != (n,):
            raise ShapeError("data vector length must match operator rows")
        G = np.eye(n) if (gram is None or kind == "least_squares") else np.asarray(gram, float)
        return MixedOperatorSpec(gram=G, b_matrix=A, load_f=d, load_g=np.zeros(m))
    if kind in ("dpg_star", "ll_star"):
        _check_rank(A.T, kind)
        n, m = A.T.shape  # coupling is A^T: maps R^m' -> functionals on R^n'
        if d.shape != (m,):
            raise ShapeError("data vector length must match operator rows of the transpose role")
        G = np.eye(n) if (gram is None or kind == "ll_star") else np.asarray(gram, float)
        return MixedOperatorSpec(gram=G, b_matrix=A.T, load_f=np.zeros(n), load_g=d)
    raise ValueError(f"unknown placement kind {kind!r}")


def random_spec(rng, n=None, null_dim=None, with_loads=True) -> MixedOperatorSpec:
    """Random well-conditioned instance with a prescribed Null(B^T) dimension."""
    if n is None:
        n = int(rng.integers(3, 13))
    if null_dim is None:
        null_dim = int(rng.integers(0, 3))
    null_dim = min(null_dim, n - 1)
    m = n - null_dim
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = rng.uniform(0.5, 2.0, size=n)
    G = (Q * lam) @ Q.T
    G = 0.5 * (G + G.T)
    while True:
        B = rng.standard_normal((n, m))
        s = svd(B, compute_uv=False)
        if s[-1] > 1e-6 * s[0]:
            break
    f = rng.standard_normal(n) if with_loads else np.zeros(n)
    g = rng.standard_normal(m) if with_loads else np.zeros(m)
    return MixedOperatorSpec(gram=G, b_matrix=B, load_f=f, load_g=g)


def fuzz_identities(count: int, seed: int):
    """Run the randomized identity suite; returns a list of result rows.

    Each row carries (n, m, null_dim, max scaled residual, residual dict).
    """
    rng = np.random.default_rng(seed)
    rows = []
    for k in range(count):
        spec = random_spec(rng, null_dim=k % 3)
        sol = solve_mixed(spec)
        rep = decompose(spec, sol)
        ids = check_identities(spec, sol, rep)
        rows.append({
            "n": spec.n,
            "m": spec.m,
            "null_dim": rep.null_dim,
            "max_residual": ids.max_residual(),
            "residuals": ids.residuals,
        })
    return rows
