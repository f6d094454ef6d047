"""Independent oracles shared by the test modules."""
import numpy as np
from scipy.stats import multivariate_normal, norm

from vinesearch.bicop import PairCopula, tau_to_par
from vinesearch.structure import simulate_uniform
from vinesearch.vinecop import VineCopulaModel


def gaussian_copula_logpdf(u, R):
    z = norm.ppf(u)
    return multivariate_normal(np.zeros(len(R)), R).logpdf(z) - norm.logpdf(z).sum(axis=1)


def corr_from_dvine_partials(partials):
    """Correlation matrix of a path vine 0-1-...-(d-1) with one partial per tree."""
    d = len(partials) + 1
    P = np.eye(d)
    for t, p in enumerate(partials):
        for i in range(d - 1 - t):
            P[i, i + t + 1] = P[i + t + 1, i] = p
    R = np.eye(d)
    for t in range(1, d):
        for i in range(d - t):
            j = i + t
            if t == 1:
                R[i, j] = R[j, i] = P[i, j]
                continue
            # invert the partial-correlation recursion along the path
            S = list(range(i + 1, j))
            A = R[np.ix_(S, S)]
            ri, rj = R[i, S], R[j, S]
            Ainv = np.linalg.inv(A)
            vi = 1 - ri @ Ainv @ ri
            vj = 1 - rj @ Ainv @ rj
            R[i, j] = R[j, i] = ri @ Ainv @ rj + P[i, j] * np.sqrt(vi * vj)
    return R


def random_model(d, seed, tau_range=(0.2, 0.7)):
    rng = np.random.default_rng(seed)
    s = simulate_uniform(d, rng)
    fams = ["gaussian", "clayton", "gumbel", "frank"]
    pcs = []
    for t in range(d - 1):
        row = []
        for _ in range(d - 1 - t):
            fam = fams[rng.integers(4)]
            tau = rng.uniform(*tau_range) * rng.choice([-1, 1])
            rot = 0
            if fam in ("clayton", "gumbel"):
                rot = int(rng.choice([0, 180] if tau > 0 else [90, 270]))
            row.append(PairCopula(fam, tau_to_par(fam, tau, rot), rot))
        pcs.append(row)
    return VineCopulaModel(s, pcs)


def reference_logpdf(model, u):
    """Edge-by-edge log density from the labelled edges, by plain recursion."""
    s = model.structure
    u = np.clip(np.asarray(u, dtype=float), 1e-10, 1 - 1e-10)
    edges = {}
    for t in range(s.trunc_level):
        for e in range(s.d - 1 - t):
            first = s.order[e]
            second = s.entry(t, e)
            cond = frozenset(s.order[s.array[r][e]] for r in range(t))
            edges[(frozenset((first, second)), cond)] = (first, model.pair_copulas[t][e])
    memo = {}

    def value(j, D):
        key = (j, D)
        if key in memo:
            return memo[key]
        if not D:
            out = u[:, j]
        else:
            for k in D:
                hit = edges.get((frozenset((j, k)), D - {k}))
                if hit is not None:
                    break
            first, pc = hit
            a, b = value(j, D - {k}), value(k, D - {k})
            out = pc.hfunc2(a, b) if first == j else pc.hfunc1(b, a)
        memo[key] = out
        return out

    total = np.zeros(u.shape[0])
    for (pair, cond), (first, pc) in edges.items():
        (second,) = pair - {first}
        total += pc.logpdf(value(first, cond), value(second, cond))
    return total


def gauss_cube_nodes(d, k):
    """Tensor Gauss-Legendre nodes on (0,1)^d after u = (1 - cos(pi s)) / 2."""
    x, w = np.polynomial.legendre.leggauss(k)
    s = (x + 1) / 2
    u = (1 - np.cos(np.pi * s)) / 2
    wu = w / 2 * np.pi / 2 * np.sin(np.pi * s)
    grids = np.meshgrid(*([u] * d), indexing="ij")
    wg = np.meshgrid(*([wu] * d), indexing="ij")
    pts = np.column_stack([g.ravel() for g in grids])
    return pts, np.prod(np.column_stack([g.ravel() for g in wg]), axis=1)
