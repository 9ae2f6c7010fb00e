"""Independent high-precision values used as frozen expectations in the C++ tests.

Run: python3 tests/oracles/example1_oracle.py
"""
import mpmath as mp

mp.mp.dps = 30


def layered_K(p, y):
    # K(y) = int_0^{(1-y)^p} ds / (2 (1 - s^{1/p}))
    t = (1 - mp.mpf(y)) ** p
    return mp.quad(lambda s: 1 / (2 * (1 - s ** (mp.mpf(1) / p))), [0, t])


print("K p=2:")
for k in range(1, 10):
    y = mp.mpf(k) / 10
    print(f"  y={float(y):.1f} quad={mp.nstr(layered_K(2, y), 17)} closed={mp.nstr(-mp.log(y) + y - 1, 17)}")
print("K p=3 (ratio K/(-ln y)):")
for y in ["1e-3", "1e-4", "1e-6"]:
    v = layered_K(3, mp.mpf(y))
    print(f"  y={y} K={mp.nstr(v, 17)} ratio={mp.nstr(v / -mp.log(mp.mpf(y)), 17)}")
print("K p=3 at y=0.5:", mp.nstr(layered_K(3, mp.mpf('0.5')), 17))
print("K p=1.5 at y=0.5:", mp.nstr(layered_K(1.5, mp.mpf('0.5')), 17))
# dK/dy for p=2 by finite differences of the quadrature: should be -1/y + 1
for y in [0.3, 0.7]:
    d = mp.diff(lambda z: layered_K(2, z), y)
    print(f"  dK/dy p=2 y={y}: {mp.nstr(d, 15)} vs {mp.nstr(-1/mp.mpf(y) + 1, 15)}")
# P(psi, psi) for Example 1: p(s) = (1-s)/(1-s^{1/p})
for p in [1.5, 2, 3]:
    P = mp.quad(lambda s: (1 - s) / (1 - s ** (mp.mpf(1) / p)), [0, 1])
    print(f"P(psi_{p},psi_{p}) = {mp.nstr(P, 17)}")
print("G n=3 r=1:", mp.nstr(1 / (4 * mp.pi), 17), " r=0.5:", mp.nstr(1 / (2 * mp.pi), 17))
print("K_R n=2 R=2 r=1:", mp.nstr(mp.log(2) / (2 * mp.pi), 17))
print("4*0.2^0.5:", mp.nstr(4 * mp.sqrt(mp.mpf('0.2')), 17))
print("hit rate int_{-.5}^{.5}(1-|x|)/1:", mp.nstr(mp.quad(lambda x: 1 - abs(x), [-0.5, 0, 0.5]), 17))
