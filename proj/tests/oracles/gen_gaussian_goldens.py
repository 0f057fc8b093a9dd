#!/usr/bin/env python3
"""Independent high-precision oracle for the Gaussian primitive golden values.

Evaluates the multivariate normal density, the linear prediction and the
scalar Kalman update directly from their defining formulas (mpmath, 50
digits) and prints constants to freeze into tests/test_gaussian.cpp.
"""
import mpmath as mp

mp.mp.dps = 50


def mvn_logpdf(x, mean, cov):
    d = len(x)
    cov = mp.matrix(cov)
    diff = mp.matrix([xi - mi for xi, mi in zip(x, mean)])
    inv = cov**-1
    quad = (diff.T * inv * diff)[0]
    det = mp.det(cov)
    return -mp.mpf(0.5) * (d * mp.log(2 * mp.pi) + mp.log(det) + quad)


print("== mvn_logpdf x=(1,2) mean=0 cov=[[2,.5],[.5,1]] ==")
v = mvn_logpdf([1, 2], [0, 0], [[2, 0.5], [0.5, 1]])
print(mp.nstr(v, 22))

print("== standard normal at mean, d=2 ==")
print(mp.nstr(mvn_logpdf([0, 0], [0, 0], [[1, 0], [0, 1]]), 22))

print("== scalar Kalman m=0 P=1 H=1 R=1 z=0 ==")
# S = R + HPH' = 2, K = P H / S = 0.5, m+ = 0, P+ = (1-K H) P = 0.5
# q(z) = N(0; 0, 2)
q = mp.exp(mvn_logpdf([0], [0], [[2]]))
print("q =", mp.nstr(q, 22))

print("== predict 6-D, F/Q constant-velocity, dt=1, sigma_v=5, p_S=0.99 ==")
dt = mp.mpf(1)
sv2 = mp.mpf(25)
I2 = mp.eye(2)
F = mp.zeros(6, 6)
Q = mp.zeros(6, 6)
for a in range(2):
    F[a, a] = 1
    F[a, a + 2] = dt
    F[a + 2, a + 2] = 1
    F[a + 4, a + 4] = 1
    Q[a, a] = sv2 * dt**4 / 4
    Q[a, a + 2] = Q[a + 2, a] = sv2 * dt**3 / 2
    Q[a + 2, a + 2] = sv2 * dt**2
    Q[a + 4, a + 4] = sv2 * dt**2
m = mp.matrix([0, 0, 1, 1, 10, 20])
P = mp.eye(6)
mp_pred = F * m
P_pred = Q + F * P * F.T
print("m' =", [mp.nstr(mp_pred[i], 17) for i in range(6)])
print("P' =")
for r in range(6):
    print(" ", [mp.nstr(P_pred[r, c], 17) for c in range(6)])
