#!/usr/bin/env python3
"""Independent step-through oracle for the full two-type recursion.

Implements the recursion (measurement-driven birth, prediction, update with
background + cross-type clutter, prune/merge) directly in numpy, linear
domain, for a hand-placed 3-frame scenario. Writes tests/step_goldens.hpp
with the per-frame post-merge components frozen as C++ arrays.

Run from the repository root:  python3 tests/oracles/gen_step_goldens.py
"""
import numpy as np

D_X, D_Z = 6, 4

H = np.zeros((D_Z, D_X))
H[0, 0] = H[1, 1] = 1.0
H[2, 4] = H[3, 5] = 1.0


def cv_matrices(sigma_v, dt=1.0):
    F = np.eye(D_X)
    F[0, 2] = F[1, 3] = dt
    Q = np.zeros((D_X, D_X))
    s2 = sigma_v**2
    for a in range(2):
        Q[a, a] = s2 * dt**4 / 4
        Q[a, a + 2] = Q[a + 2, a] = s2 * dt**3 / 2
        Q[a + 2, a + 2] = s2 * dt**2
        Q[a + 4, a + 4] = s2 * dt**2
    return F, Q


def mvn_pdf(x, mean, cov):
    d = len(x)
    diff = np.asarray(x, float) - np.asarray(mean, float)
    quad = diff @ np.linalg.inv(cov) @ diff
    _, logdet = np.linalg.slogdet(cov)
    return float(np.exp(-0.5 * (d * np.log(2 * np.pi) + logdet + quad)))


# scenario parameters (shared by tests/test_filter.cpp)
P_S = 0.99
SIGMA_V = 5.0
SIGMA_R = 6.0
P_D = np.array([[0.88, 0.20], [0.30, 0.95]])   # [detector][type]
LAM = 10.0
VOLUME = 720.0 * 576.0 * 95.0 * 95.0
BIRTH_W = 1e-4
P_BIRTH = np.diag([100.0, 100.0, 25.0, 25.0, 20.0, 20.0])
PRUNE_T = 1e-5
MERGE_U = 4.0
R = SIGMA_R**2 * np.eye(D_Z)
F, Q = cv_matrices(SIGMA_V)

FRAMES = [
    # (Z for detector 0, Z for detector 1)
    ([[100.0, 100.0, 20.0, 40.0]], [[300.0, 200.0, 30.0, 60.0]]),
    ([[105.0, 102.0, 20.0, 40.0], [300.0, 201.0, 31.0, 59.0]],
     [[306.0, 205.0, 30.0, 61.0]]),
    ([[110.0, 104.0, 21.0, 41.0]],
     [[312.0, 210.0, 29.0, 60.0], [50.0, 50.0, 10.0, 10.0]]),
]


def birth(zs):
    comps = []
    for z in zs:
        m = np.array([z[0], z[1], 0.0, 0.0, z[2], z[3]])
        comps.append([BIRTH_W, m, P_BIRTH.copy()])
    return comps


def predict(prior, births):
    out = [c[:] for c in births]
    for w, m, P in prior:
        out.append([P_S * w, F @ m, Q + F @ P @ F.T])
    return out


def confusion_clutter(z, i, predicted):
    total = 0.0
    for j in range(2):
        if j == i:
            continue
        for w, m, P in predicted[j]:
            total += P_D[j][i] * w * mvn_pdf(z, H @ m, R + H @ P @ H.T)
    return total


def update(pred_i, zs, i, predicted):
    pd = P_D[i][i]
    etas = [H @ m for _, m, _ in pred_i]
    Ss = [R + H @ P @ H.T for _, _, P in pred_i]
    Ks = [P @ H.T @ np.linalg.inv(S) for (_, _, P), S in zip(pred_i, Ss)]
    P_upds = [(np.eye(D_X) - K @ H) @ P for (_, _, P), K in zip(pred_i, Ks)]
    out = [[(1 - pd) * w, m.copy(), P.copy()] for w, m, P in pred_i]
    for z in zs:
        z = np.asarray(z, float)
        qs = [mvn_pdf(z, eta, S) for eta, S in zip(etas, Ss)]
        c_s = LAM / VOLUME
        c_t = confusion_clutter(z, i, predicted)
        den = c_s + c_t + sum(pd * c[0] * q for c, q in zip(pred_i, qs))
        for u, (w, m, P) in enumerate(pred_i):
            out.append([pd * w * qs[u] / den,
                        m + Ks[u] @ (z - etas[u]), P_upds[u].copy()])
    return out


def prune_merge(comps):
    alive = [c for c in comps if c[0] >= PRUNE_T]
    idx = list(range(len(alive)))
    merged = []
    while idx:
        u = max(idx, key=lambda v: (alive[v][0], -v))
        group = []
        for v in idx:
            d = alive[v][1] - alive[u][1]
            if v == u or d @ np.linalg.inv(alive[v][2]) @ d <= MERGE_U:
                group.append(v)
        wsum = sum(alive[v][0] for v in group)
        msum = sum(alive[v][0] * alive[v][1] for v in group) / wsum
        Psum = sum(alive[v][0] * (alive[v][2] + np.outer(msum - alive[v][1],
                                                         msum - alive[v][1]))
                   for v in group) / wsum
        merged.append([wsum, msum, Psum])
        idx = [v for v in idx if v not in group]
    return merged


def main():
    state = [[], []]
    golden = []
    for zs in FRAMES:
        births = [birth(zs[i]) for i in range(2)]
        predicted = [predict(state[i], births[i]) for i in range(2)]
        state = [prune_merge(update(predicted[i], zs[i], i, predicted))
                 for i in range(2)]
        golden.append([[(w, m) for w, m, _ in state[i]] for i in range(2)])

    lines = ["// Generated by tests/oracles/gen_step_goldens.py -- do not edit.",
             "#pragma once", "#include <vector>", "",
             "struct StepGolden { int frame; int type; double w; double m[6]; };",
             "", "inline const std::vector<StepGolden>& step_goldens() {",
             "  static const std::vector<StepGolden> g = {"]
    for k, frame in enumerate(golden):
        for i, comps in enumerate(frame):
            for w, m in comps:
                ms = ", ".join("%.17g" % v for v in m)
                lines.append("    {%d, %d, %.17g, {%s}}," % (k, i, w, ms))
    lines += ["  };", "  return g;", "}", ""]
    with open("tests/step_goldens.hpp", "w") as f:
        f.write("\n".join(lines))
    for k, frame in enumerate(golden):
        print("frame %d: type0 %d comps, type1 %d comps" %
              (k, len(frame[0]), len(frame[1])))
        for i in range(2):
            for w, m in frame[i]:
                print("   t%d w=%.6g m=[%s]" % (i, w,
                      " ".join("%.4g" % v for v in m)))


if __name__ == "__main__":
    main()
