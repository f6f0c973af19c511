#!/usr/bin/env python3
"""Independent reference values frozen into the C++ unit tests.

Everything here is computed with mpmath (arbitrary precision quadrature) or
scipy, never with the library under test. Re-run to regenerate the constants
quoted in tests/*.cpp:

    python3 tests/oracles/compute_oracles.py
"""
import math

import mpmath as mp
import numpy as np
from scipy.stats import multivariate_normal

mp.mp.dps = 40


def Phi(x):
    return mp.ncdf(x)


def phi(x):
    return mp.npdf(x)


def biv_cdf(a, b, r):
    """P(X<=a, Y<=b) via Plackett: Phi(a)Phi(b) + int_0^r phi2(a,b;t) dt."""
    def dens(t):
        return mp.exp(-(a * a - 2 * t * a * b + b * b) / (2 * (1 - t * t))) / (2 * mp.pi * mp.sqrt(1 - t * t))
    return Phi(a) * Phi(b) + mp.quad(dens, [0, r])


def tri_cdf(a, r):
    """P(Z<=a) for n=3 by conditioning on Z1, inner bivariate by Plackett."""
    r12, r13, r23 = r
    s2 = mp.sqrt(1 - r12 ** 2)
    s3 = mp.sqrt(1 - r13 ** 2)
    rho = (r23 - r12 * r13) / (s2 * s3)

    def f(z):
        return phi(z) * biv_cdf((a[1] - r12 * z) / s2, (a[2] - r13 * z) / s3, rho)
    return mp.quad(f, [-mp.inf, a[0]])


def section(title):
    print()
    print("==", title)


section("std_normal_cdf")
for x in [1.0, -1.0, 2.5, -3.0, -8.0, 0.3]:
    print(f"Phi({x}) = {mp.nstr(Phi(x), 20)}")

section("orthant oracle")
print("n=2 r=0.5 (0,0):", mp.nstr(biv_cdf(0, 0, mp.mpf('0.5')), 20))
print("n=2 r=0.3 (1,-0.5):", mp.nstr(biv_cdf(1, mp.mpf('-0.5'), mp.mpf('0.3')), 20))
print("n=2 r=-0.7 (0.2,1.1):", mp.nstr(biv_cdf(mp.mpf('0.2'), mp.mpf('1.1'), mp.mpf('-0.7')), 20))
tri = tri_cdf([mp.mpf('0.5'), mp.mpf('1.0'), mp.mpf('-0.2')], [mp.mpf('0.3'), mp.mpf('0.5'), mp.mpf('-0.2')])
print("n=3 r=(0.3,0.5,-0.2) a=(0.5,1,-0.2):", mp.nstr(tri, 20))
print("n=2 r=0.5 (1,1) complement:", mp.nstr(1 - biv_cdf(1, 1, mp.mpf('0.5')), 20))

section("prop2 n=3 example")
r12, r13, r23 = mp.mpf('0.5'), mp.mpf('0.3'), mp.mpf('0.4')
c = [mp.mpf('0.25'), mp.mpf('0.3')]
d = [mp.mpf('0.5'), mp.mpf('0.55')]
u, h, delta = mp.mpf(2), mp.mpf(0), mp.mpf('0.2')
rjm = [r13, r23]
caps = [u - rjm[j] * (u + h) for j in range(2)]
B = delta * mp.sqrt(d[1] / c[1]) * min(caps[j] / d[j] for j in range(2))
prod = 1
for j in range(2):
    prod *= Phi((1 - delta) * caps[j] / mp.sqrt(1 - rjm[j] ** 2 - c[j] * d[j]))
p2 = (Phi(B) - Phi(-B)) * prod
print("B =", mp.nstr(B, 20))
print("prop2 =", mp.nstr(p2, 20))
rho = (r12 - r13 * r23) / mp.sqrt((1 - r13 ** 2) * (1 - r23 ** 2))
exact = biv_cdf(caps[0] / mp.sqrt(1 - r13 ** 2), caps[1] / mp.sqrt(1 - r23 ** 2), rho)
print("exact P(3,0) =", mp.nstr(exact, 20))

section("prop1 n=3 example, H=0.5, explicit c,d (lag-suffix for pivot 2)")
H = mp.mpf('0.5')
R = [[1, r12, r13], [r12, 1, r23], [r13, r23, 1]]


def pmh(pivot, cc, dd, hh):
    m = pivot - 1
    if m == 0:
        return mp.mpf(1)
    caps = [u - R[j][m] * (u + hh) for j in range(m)]
    B = delta * mp.sqrt(dd[-1] / cc[-1]) * min(caps[j] / dd[j] for j in range(m))
    prod = 1
    for j in range(m):
        prod *= Phi((1 - delta) * caps[j] / mp.sqrt(1 - R[j][m] ** 2 - cc[j] * dd[j]))
    return (Phi(B) - Phi(-B)) * prod


terms = [pmh(1, [], [], H), pmh(2, c[1:], d[1:], H), pmh(3, c, d, H)]
pref = H * mp.exp(-(u + H) ** 2 / 2) / mp.sqrt(2 * mp.pi)
print("terms:", [mp.nstr(t, 20) for t in terms])
print("prop1 bound =", mp.nstr(pref * sum(terms), 20))
print("exact P(max>2) =", mp.nstr(1 - tri_cdf([u, u, u], [r12, r13, r23]), 20))

section("validate_cd 4x4 with negative partial correlations, pivot 4, c=0.1, d=0.5")
R4 = np.array([[1, -0.3, 0.2, 0.4], [-0.3, 1, 0.1, 0.5], [0.2, 0.1, 1, 0.3], [0.4, 0.5, 0.3, 1]])
print("min eigenvalue:", repr(min(np.linalg.eigvalsh(R4))))
for j in range(3):
    for k in range(j + 1, 3):
        margin = mp.mpf(R4[j][k]) - mp.mpf(R4[j][3]) * mp.mpf(R4[k][3]) - mp.mpf('0.1') * mp.mpf('0.5')
        print(f"pair ({j + 1},{k + 1}) margin = {mp.nstr(margin, 17)}")

section("slepian n=2 u=(1,1)")
print("P(X<=1; r=0.2) =", mp.nstr(biv_cdf(1, 1, mp.mpf('0.2')), 20))
print("P(W<=1; r=0.6) =", mp.nstr(biv_cdf(1, 1, mp.mpf('0.6')), 20))

section("comparison n=2 r1=0.5 r0=0 u=(2,2)")
ui = uj = mp.mpf(2)
K = (ui ** 2 + uj ** 2) / 2
v1 = mp.quad(lambda t: mp.exp(-K / (1 + abs(t))) / mp.sqrt(1 - t * t), [0, mp.mpf('0.5')]) / (2 * mp.pi)
v2 = (mp.asin(mp.mpf('0.5'))) * mp.exp(-K / mp.mpf('1.5')) / (2 * mp.pi)
rho = mp.mpf('0.5')
v3 = 2 / mp.pi * (1 + rho) ** 1.5 / ((ui ** 2 + uj ** 2) * mp.sqrt(1 - rho)) * mp.exp(-K / (1 + rho))
true = biv_cdf(2, 2, mp.mpf('0.5')) - Phi(2) ** 2
print("v1 =", mp.nstr(v1, 20), "v2 =", mp.nstr(v2, 20), "v3 =", mp.nstr(v3, 20), "true =", mp.nstr(true, 20))

section("theorem1 reference r(k)=1/(2+k), n=8, u=3 (scipy Genz)")
n = 8
Rm = np.array([[1.0 if j == k else 1.0 / (2 + abs(j - k)) for k in range(n)] for j in range(n)])
np.linalg.cholesky(Rm)
cdf = multivariate_normal.cdf(np.full(n, 3.0), mean=np.zeros(n), cov=Rm,
                              abseps=1e-10, releps=1e-10, maxpts=50_000_000)
print("P(max>3) =", repr(1 - cdf))

section("stationary r(k)=0.5^k, M=3, u=2")
Rm = np.array([[0.5 ** abs(j - k) for k in range(3)] for j in range(3)])
print("P(max>2) =", mp.nstr(1 - tri_cdf([2, 2, 2], [mp.mpf('0.5'), mp.mpf('0.25'), mp.mpf('0.5')]), 20))

section("smoothing constants")
print("C1 = 35/16 =", 35 / 16)
print("C2 = 84/(5 sqrt 5) =", 84 / (5 * math.sqrt(5)))
print("C3 = 105/2 =", 105 / 2)

section("prime counts")
from sympy import primepi
for lim in [10, 100, 10**4, 10**5, 10**6]:
    print(lim, primepi(lim))

section("shao covariance (mpmath, 40 digits)")


def shao(a, t):
    a, t = mp.mpf(a), mp.mpf(t)
    return (mp.exp(a * t / 2) + mp.exp(-a * t / 2) - (mp.exp(t / 2) - mp.exp(-t / 2)) ** a) / 2


for a, t in [("0.5", "0.1"), ("0.5", "0.2"), ("1", "0.01"), ("1.3", "0.7"), ("0.2", "3"),
             ("1.9", "0.001"), ("0.8", "10"), ("0.3", "25")]:
    r = shao(a, t)
    print(f"r({a}, {t}) = {mp.nstr(r, 20)}   1-r = {mp.nstr(1 - r, 20)}")

section("reference bounds")
for a in ["0.3", "0.5", "0.9"]:
    a = mp.mpf(a)
    inv = 1 / a
    conj = 1 / mp.gamma(inv)
    shl = (a / 4) ** inv * (1 - mp.exp(-inv) * (1 + inv))
    shu = a ** inv * (mp.mpf('2.41') * mp.sqrt(mp.mpf('8.8') - a * mp.log(mp.mpf('0.4') + mp.mpf('2.5') / a))
                      + mp.mpf('0.77') * mp.sqrt(a)) ** (2 * inv)
    dmr = a / (8 * mp.gamma(inv)) * mp.mpf('0.25') ** inv
    shape = mp.sqrt(a) * (mp.e * a / 2) ** inv
    print(f"alpha={a}: conj={mp.nstr(conj, 20)} shao_lower={mp.nstr(shl, 20)} shao_upper={mp.nstr(shu, 20)}"
          f" dmr={mp.nstr(dmr, 20)} shape={mp.nstr(shape, 20)}")

section("log gamma")
for x in ["0.001", "0.5", "1.5", "3.3", "10", "20", "170.5"]:
    print(f"lgamma({x}) = {mp.nstr(mp.loggamma(mp.mpf(x)), 20)}")

section("prime-process sums (mpmath, 30 digits; sympy primes)")
from sympy import primerange


def prime_sums(x, y, t, s):
    x = mp.mpf(x)
    L = mp.log(x)
    expo = -1 - 2 / L
    cov = mp.mpf(0)
    var_t = mp.mpf(0)
    small = mp.mpf(0)
    for p in primerange(2, int(x) + 1):
        w = mp.mpf(p) ** expo
        if p < y:
            small += w / 2
            continue
        lp = mp.log(p)
        cov += (mp.cos((t + s) * lp) + mp.cos((t - s) * lp)) * w / 2
        var_t += mp.cos(t * lp) ** 2 * w
    return cov, var_t, small


mp.mp.dps = 30
for x in [10**4, 10**6]:
    y = mp.log(x)  # log^8 x > x at these sizes
    t, s = mp.mpf(1), mp.mpf('1.1')
    cov, var_t, small = prime_sums(x, y, t, s)
    print(f"x={x} y=log x: cov(1,1.1) = {mp.nstr(cov, 20)}  var(1) = {mp.nstr(var_t, 20)}"
          f"  small-prime variance = {mp.nstr(small, 20)}")

section("bound ceiling for two independent coordinates at u = 1")
print("1 - Phi(1)^2 =", mp.nstr(1 - mp.ncdf(1) ** 2, 20))
