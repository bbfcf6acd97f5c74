"""Finite-difference oracle for the lowest eigenvalue of Phi_{0,i}.

Nodes r_j = j h, midpoint rule for the gradient term, natural mass
(r^2, 1, r^2); the symmetrized banded problem goes to eig_banded.  Two
step sizes are Richardson-extrapolated.

    python3 tests/oracles/fd_spectrum.py a2 b2 c2 i
"""

import sys

import numpy as np
import scipy.sparse as sps
from scipy.linalg import eig_banded

from hedgehog import Params, solve_profile
from hedgehog.model import bulk_f, bulk_f_hat, bulk_f_tilde


def coefficients(i):
    if i == 0:
        return [2 / 3], np.array([[4.0]]), ["fh"], [2 / 3]
    lam = i * (i + 1.0)
    grad = [lam / 3, 1.0, lam - 2]
    pot = np.array([[lam * (lam + 6) / 3, -2 * lam, 0], [-2 * lam, lam + 4, 2 * (lam - 2)],
                    [0, 2 * (lam - 2), (lam - 2) ** 2]])
    names, zc = ["fh", "f", "ft"], [lam / 3, 1.0, lam - 2]
    if i == 1:
        return grad[:2], pot[:2, :2], names[:2], zc[:2]
    return grad, pot, names, zc


def lowest(prof, i, h, R):
    p = prof.params
    grad, pot, names, zc = coefficients(i)
    nc = len(grad)
    M = int(round(R / h)) - 1
    r = h * np.arange(1, M + 1)
    rm = h * (np.arange(M + 1) + 0.5)
    u = prof.eval(r)[0]
    fun = {"fh": bulk_f_hat(p, u), "f": bulk_f(p, u), "ft": bulk_f_tilde(p, u)}
    n = M * nc
    rows, cols, vals = [], [], []
    Bd = np.zeros(n)
    for a in range(nc):
        idx = np.arange(M) * nc + a
        d = grad[a] * (rm[:-1] ** 2 + rm[1:] ** 2) / h + zc[a] * fun[names[a]] * r ** 2 * h
        off = -grad[a] * rm[1:-1] ** 2 / h
        rows += [idx, idx[:-1], idx[1:]]
        cols += [idx, idx[1:], idx[:-1]]
        vals += [d, off, off]
        Bd[idx] = (np.ones(M) if (nc > 1 and a == 1) else r ** 2) * h
        for b in range(nc):
            if pot[a, b]:
                rows.append(idx)
                cols.append(np.arange(M) * nc + b)
                vals.append(np.full(M, pot[a, b] * h))
    A = sps.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                       shape=(n, n)).tocsr()
    s = 1 / np.sqrt(Bd)
    C = sps.diags(s) @ A @ sps.diags(s)
    kd = 2 * nc - 1
    ab = np.zeros((kd + 1, n))
    for k in range(kd + 1):
        ab[kd - k, k:] = C.diagonal(k)
    return eig_banded(ab, select="i", select_range=(0, 0), eigvals_only=True)[0]


if __name__ == "__main__":
    a2, b2, c2 = (float(x) for x in sys.argv[1:4])
    i = int(sys.argv[4])
    prof = solve_profile(Params(a2, b2, c2))
    R = float(sys.argv[5]) if len(sys.argv) > 5 else 80.0
    h = 0.04
    m1, m2 = lowest(prof, i, h, R), lowest(prof, i, h / 2, R)
    print(f"h={h}: {m1!r}  h/2: {m2!r}  extrapolated: {(4 * m2 - m1) / 3!r}")
