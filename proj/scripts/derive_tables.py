#!/usr/bin/env python3
"""Expand the closed-form generator sets of the semi-generalized homography
elimination ideals and write them in the generator-table text format.

Every generator below is a polynomial consequence of

    G^T G - diag(w^2, w^2, 1) = m s^T + s m^T   (w = 1 for calibrated data)

with the auxiliary vector s (and w, and g33 where applicable) removed.  The
output is checked numerically against freshly composed (G, m) samples before
it is written.

Usage: derive_tables.py OUT_DIR
"""
import itertools
import random
import sys
from pathlib import Path

import sympy as sp

GP = sp.symbols("gp11 gp12 gp13 gp21 gp22 gp23 gp31 gp32")
MP = sp.symbols("mp1 mp2 mp3")
G_RAW = sp.symbols("g11 g12 g13 g21 g22 g23 g31 g32")
M_RAW = sp.symbols("m1 m2 m3")
G33 = sp.Symbol("g33")
W = sp.Symbol("w")

VARS_I1 = list(G_RAW) + list(M_RAW) + [G33]
VARS_I2 = list(GP) + list(MP)
VARS_BACK_CAL = list(GP) + list(MP) + [G33]
VARS_BACK_FOC = list(GP) + list(MP) + [G33, W]


def matrix_of(gs, g33):
    return sp.Matrix([[gs[0], gs[1], gs[2]], [gs[3], gs[4], gs[5]], [gs[6], gs[7], g33]])


def skew(v):
    return sp.Matrix([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])


def sym_entries(S):
    return [S[i, j] for i in range(3) for j in range(i, 3)]


def rank_one_sym_generators(S, m):
    """Generators of {S = m s^T + s m^T for some s}: the form vanishes on m^perp,
    S has a kernel vector orthogonal to m, and S is singular."""
    mx = skew(m)
    T = mx.T * S * mx
    out = sym_entries(T)
    out += list(S.adjugate() * sp.Matrix(m))
    out.append(S.det())
    return out


def cal_i1():
    G = matrix_of(G_RAW, G33)
    return rank_one_sym_generators(G.T * G - sp.eye(3), M_RAW)


def foc_syzygy_rows(N, m):
    m1, m2, m3 = m
    # rows: (12), (13), (23), (11)-(22), (33); unknowns s1, s2, s3 | rhs
    M = sp.Matrix([[m2, m1, 0], [m3, 0, m1], [0, m3, m2], [2 * m1, -2 * m2, 0], [0, 0, 2 * m3]])
    c = sp.Matrix([N[0, 1], N[0, 2], N[1, 2], N[0, 0] - N[1, 1], N[2, 2] - 1])
    return M, c


def foc_i1():
    G = matrix_of(G_RAW, G33)
    N = G.T * G
    m1, m2, m3 = M_RAW
    M, c = foc_syzygy_rows(N, M_RAW)
    syz = [
        [m3**2, -m2 * m3, -m1 * m3, 0, m1 * m2],
        [0, 2 * m1 * m3, -2 * m2 * m3, -m3**2, m2**2 - m1**2],
    ]
    for a in syz:
        assert all(sp.expand(sum(a[r] * M[r, k] for r in range(5))) == 0 for k in range(3))
    out = [sum(a[r] * c[r] for r in range(5)) for a in syz]
    # cubic syzygy: Cramer vector of the first four rows
    out.append(sp.Matrix.hstack(M[:4, :], c[:4, :]).det())
    return out


def conformal_minors(N, m, rows):
    m1, m2, m3 = m
    table = {
        "12": [m2, m1, 0, N[0, 1]],
        "13": [m3, 0, m1, N[0, 2]],
        "23": [0, m3, m2, N[1, 2]],
        "11-22": [2 * m1, -2 * m2, 0, N[0, 0] - N[1, 1]],
        "11-33": [2 * m1, 0, -2 * m3, N[0, 0] - N[2, 2]],
    }
    return [sp.Matrix([table[r] for r in comb]).det() for comb in itertools.combinations(rows, 4)]


def cal_i2():
    Gp = matrix_of(GP, 1)
    return conformal_minors(Gp.T * Gp, MP, ["12", "13", "23", "11-22", "11-33"])


def foc_i2():
    Gp = matrix_of(GP, 1)
    return conformal_minors(Gp.T * Gp, MP, ["12", "13", "23", "11-22"])


def substitute_back(polys, extra_w=False):
    sub = {g: G33 * gp for g, gp in zip(G_RAW, GP)}
    sub.update({m: G33 * mp for m, mp in zip(M_RAW, MP)})
    out = []
    for p in polys:
        q = sp.Poly(sp.expand(p.xreplace(sub)), *(VARS_BACK_FOC if extra_w else VARS_BACK_CAL))
        k = min(mon[len(GP) + len(MP)] for mon in q.monoms())
        out.append(sp.expand(q.as_expr() / G33**k))
    return out


def cal_back():
    return substitute_back(cal_i1())


def foc_back():
    G = matrix_of(G_RAW, G33)
    S = G.T * G - sp.diag(W**2, W**2, 1)
    return substitute_back(rank_one_sym_generators(S, M_RAW), extra_w=True)


def canonical_lines(variant, names, polys):
    lines = [f"variant={variant} vars={','.join(names)} npolys={len(polys)}"]
    for p in polys:
        terms = sorted(p.terms(), key=lambda t: (-sum(t[0]), tuple(-e for e in t[0])))
        lines.append(f"poly degree={p.total_degree()} nterms={len(terms)}")
        for exps, coef in terms:
            lines.append(" ".join(str(e) for e in exps) + " " + str(coef))
    return lines


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def rotation(rng):
    q = [rng.gauss(0, 1) for _ in range(4)]
    n = sum(x * x for x in q) ** 0.5
    a, b, c, d = (x / n for x in q)
    return sp.Matrix([
        [a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)],
        [2 * (b * c + a * d), a * a - b * b + c * c - d * d, 2 * (c * d - a * b)],
        [2 * (b * d - a * c), 2 * (c * d + a * b), a * a - b * b - c * c + d * d],
    ])


def check_vanishing(variant, names, polys, focal, rng, samples=20):
    funcs = [sp.lambdify(names, p.as_expr()) for p in polys]
    absfuncs = [sp.lambdify(names, sum(abs(c) * sp.Mul(*[abs(v) ** e for v, e in zip(names, mon)])
                                          for mon, c in p.terms())) for p in polys]
    worst = 0.0
    for _ in range(samples):
        R = rotation(rng)
        t = sp.Matrix([rng.gauss(0, 1) for _ in range(3)])
        n = sp.Matrix([rng.gauss(0, 1) for _ in range(3)])
        w = rng.uniform(0.5, 3.0) if focal else 1.0
        Wm = sp.diag(w, w, 1)
        m = Wm * n
        G = R * Wm - t * m.T
        g33 = G[2, 2]
        if variant.endswith("I1"):
            vals = [G[i, j] for i in range(3) for j in range(3) if (i, j) != (2, 2)] + list(m) + [g33]
        else:
            vals = [G[i, j] / g33 for i in range(3) for j in range(3) if (i, j) != (2, 2)] + [x / g33 for x in m]
            if variant.endswith("BACK"):
                vals.append(g33)
                if focal:
                    vals.append(w)
        vals = [float(v) for v in vals]
        for f, fa in zip(funcs, absfuncs):
            worst = max(worst, abs(f(*vals)) / fa(*vals))
    return worst


def main():
    out_dir = Path(sys.argv[1] if len(sys.argv) > 1 else "data/tables")
    out_dir.mkdir(parents=True, exist_ok=True)
    builders = {
        "CAL_I1": (cal_i1, VARS_I1, False),
        "CAL_I2": (cal_i2, VARS_I2, False),
        "CAL_BACK": (cal_back, VARS_BACK_CAL, False),
        "FOC_I1": (foc_i1, VARS_I1, True),
        "FOC_I2": (foc_i2, VARS_I2, True),
        "FOC_BACK": (foc_back, VARS_BACK_FOC, True),
    }
    rng = random.Random(20211011)
    for variant, (build, names, focal) in builders.items():
        polys = [sp.Poly(sp.expand(p), *names) for p in build()]
        polys = [p for p in polys if not p.is_zero]
        worst = check_vanishing(variant, names, polys, focal, rng)
        if worst > 1e-9:
            raise SystemExit(f"{variant}: generators do not vanish ({worst:.3e})")
        lines = canonical_lines(variant, [str(v) for v in names], polys)
        body = "".join(line + "\n" for line in lines)
        checksum = fnv1a64(body.encode())
        path = out_dir / f"{variant.lower()}.txt"
        path.write_text(body + f"checksum={checksum:016x}\n")
        degrees = [p.total_degree() for p in polys]
        print(f"{variant}: {len(polys)} polys, degrees {degrees}, "
              f"{sum(len(p.terms()) for p in polys)} terms, max residual {worst:.2e} -> {path}")


if __name__ == "__main__":
    main()
