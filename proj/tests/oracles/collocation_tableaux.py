"""High-precision construction of the built-in collocation tableaux.

Radau IIA abscissae are the roots of d^{m-1}/dx^{m-1} [x^{m-1} (x-1)^m];
Gauss abscissae are the roots of the shifted Legendre polynomial. The
coefficients follow from the collocation conditions
    Q_ij = int_0^{c_i} l_j(t) dt,  b_j = int_0^1 l_j(t) dt
with l_j the Lagrange basis on c. Prints C++ literals.
"""
import mpmath as mp

mp.mp.dps = 50


def poly_roots(coeffs):
    return sorted(mp.re(r) for r in mp.polyroots(coeffs, maxsteps=200, extraprec=200))


def radau_nodes(m):
    x = mp.mpf(1)
    # coefficients of x^{m-1}(x-1)^m, highest degree first
    base = [mp.mpf(0)] * (2 * m)
    for k in range(m + 1):
        base[k] = mp.binomial(m, k) * (-1) ** k
    p = base
    for _ in range(m - 1):
        deg = len(p) - 1
        p = [p[i] * (deg - i) for i in range(deg)]
    return poly_roots(p)


def gauss_nodes(m):
    xs = [(1 + r) / 2 for r in mp.polyroots(mp.taylor(lambda t: mp.legendre(m, t), 0, m)[::-1], maxsteps=200, extraprec=200)]
    return sorted(mp.re(x) for x in xs)


def lagrange_integral(c, j, upper):
    others = [c[i] for i in range(len(c)) if i != j]
    f = lambda t: mp.fprod((t - o) / (c[j] - o) for o in others)
    return mp.quad(f, [0, upper])


def tableau(c):
    m = len(c)
    Q = [[lagrange_integral(c, j, c[i]) for j in range(m)] for i in range(m)]
    b = [lagrange_integral(c, j, 1) for j in range(m)]
    return Q, b


def emit(name, c):
    Q, b = tableau(c)
    fmt = lambda v: mp.nstr(v, 20, min_fixed=-1, max_fixed=1)
    print(f"// {name}")
    print("c:", ", ".join(fmt(v) for v in c))
    print("b:", ", ".join(fmt(v) for v in b))
    for row in Q:
        print("Q:", ", ".join(fmt(v) for v in row))


for m in (1, 2, 3, 5):
    emit(f"radau_iia_{m}", radau_nodes(m) if m > 1 else [mp.mpf(1)])
for m in (1, 2):
    emit(f"gauss_{m}", gauss_nodes(m))
