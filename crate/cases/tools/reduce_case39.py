#!/usr/bin/env python3
"""Generate the network-reduced IEEE 39-bus case files.

Standard IEEE 39-bus (New England) network and machine data on a 100 MVA base.
Line charging and transformer taps are folded into the admittance matrix
before Kron reduction.  Loads at eliminated buses are carried over as
equivalent current injections (Ward equivalent) at the base-case voltages, so
the reduced power flow reproduces the full one at scale 1 and every
injection scales together with the load-scale factor.
Each synchronous generator sits at its terminal bus, so the machine output
(delta, E_q') is the terminal phasor (set SG_INTERNAL_EMF to add the x_d'
branch and keep the internal node instead).  Droop buses are voltage
controlled at their base-case magnitude.  The reduced network keeps one bus per
dynamical device.

Usage: python3 reduce_case39.py [outdir]
"""
import json
import sys

import numpy as np

BASE = 100.0

# bus: (Pd, Qd) in MW / Mvar
LOADS = {
    1: (97.6, 44.2), 3: (322.0, 2.4), 4: (500.0, 184.0), 7: (233.8, 84.0),
    8: (522.0, 176.6), 9: (6.5, -66.6), 12: (8.53, 88.0), 15: (320.0, 153.0),
    16: (329.0, 32.3), 18: (158.0, 30.0), 20: (680.0, 103.0), 21: (274.0, 115.0),
    23: (247.5, 84.6), 24: (308.6, -92.2), 25: (224.0, 47.2), 26: (139.0, 17.0),
    27: (281.0, 75.5), 28: (206.0, 27.6), 29: (283.5, 26.9), 31: (9.2, 4.6),
    39: (1104.0, 250.0),
}

# bus: (Pg MW, Vset pu)
GENS = {
    30: (250.0, 1.0499), 31: (677.871, 0.982), 32: (650.0, 0.9841),
    33: (632.0, 0.9972), 34: (508.0, 1.0123), 35: (650.0, 1.0494),
    36: (560.0, 1.0636), 37: (540.0, 1.0275), 38: (830.0, 1.0265),
    39: (1000.0, 1.03),
}
SLACK = 31

# bus: (H s, xd, xd', Td0')
MACHINES = {
    39: (500.0, 0.02, 0.006, 7.0), 31: (30.3, 0.295, 0.0697, 6.56),
    32: (35.8, 0.2495, 0.0531, 5.7), 33: (28.6, 0.262, 0.0436, 5.69),
    34: (26.0, 0.67, 0.132, 5.4), 35: (34.8, 0.254, 0.05, 7.3),
    36: (26.4, 0.295, 0.049, 5.66), 37: (24.3, 0.29, 0.057, 6.7),
    38: (34.5, 0.2106, 0.057, 4.79), 30: (42.0, 0.1, 0.031, 10.2),
}

# from, to, r, x, b, tap
BRANCHES = [
    (1, 2, 0.0035, 0.0411, 0.6987, 0), (1, 39, 0.001, 0.025, 0.75, 0),
    (2, 3, 0.0013, 0.0151, 0.2572, 0), (2, 25, 0.007, 0.0086, 0.146, 0),
    (2, 30, 0.0, 0.0181, 0.0, 1.025), (3, 4, 0.0013, 0.0213, 0.2214, 0),
    (3, 18, 0.0011, 0.0133, 0.2138, 0), (4, 5, 0.0008, 0.0128, 0.1342, 0),
    (4, 14, 0.0008, 0.0129, 0.1382, 0), (5, 6, 0.0002, 0.0026, 0.0434, 0),
    (5, 8, 0.0008, 0.0112, 0.1476, 0), (6, 7, 0.0006, 0.0092, 0.113, 0),
    (6, 11, 0.0007, 0.0082, 0.1389, 0), (6, 31, 0.0, 0.025, 0.0, 1.07),
    (7, 8, 0.0004, 0.0046, 0.078, 0), (8, 9, 0.0023, 0.0363, 0.3804, 0),
    (9, 39, 0.001, 0.025, 1.2, 0), (10, 11, 0.0004, 0.0043, 0.0729, 0),
    (10, 13, 0.0004, 0.0043, 0.0729, 0), (10, 32, 0.0, 0.02, 0.0, 1.07),
    (12, 11, 0.0016, 0.0435, 0.0, 1.006), (12, 13, 0.0016, 0.0435, 0.0, 1.006),
    (13, 14, 0.0009, 0.0101, 0.1723, 0), (14, 15, 0.0018, 0.0217, 0.366, 0),
    (15, 16, 0.0009, 0.0094, 0.171, 0), (16, 17, 0.0007, 0.0089, 0.1342, 0),
    (16, 19, 0.0016, 0.0195, 0.304, 0), (16, 21, 0.0008, 0.0135, 0.2548, 0),
    (16, 24, 0.0003, 0.0059, 0.068, 0), (17, 18, 0.0007, 0.0082, 0.1319, 0),
    (17, 27, 0.0013, 0.0173, 0.3216, 0), (19, 20, 0.0007, 0.0138, 0.0, 1.06),
    (19, 33, 0.0007, 0.0142, 0.0, 1.07), (20, 34, 0.0009, 0.018, 0.0, 1.009),
    (21, 22, 0.0008, 0.014, 0.2565, 0), (22, 23, 0.0006, 0.0096, 0.1846, 0),
    (22, 35, 0.0, 0.0143, 0.0, 1.025), (23, 24, 0.0022, 0.035, 0.361, 0),
    (23, 36, 0.0005, 0.0272, 0.0, 1.0), (25, 26, 0.0032, 0.0323, 0.531, 0),
    (25, 37, 0.0006, 0.0232, 0.0, 1.025), (26, 27, 0.0014, 0.0147, 0.2396, 0),
    (26, 28, 0.0043, 0.0474, 0.7802, 0), (26, 29, 0.0057, 0.0625, 1.029, 0),
    (28, 29, 0.0014, 0.0151, 0.249, 0), (29, 38, 0.0008, 0.0156, 0.0, 1.025),
]

SG_BUSES = [30, 31, 33, 35, 37, 39]
QD_GEN_BUSES = [32, 34, 36, 38]
QD_TAU = [(0.3, 7.0), (0.2, 7.5), (0.13, 8.0), (0.26, 8.2),
          (0.4, 8.5), (0.2, 6.5), (0.25, 9.2), (0.35, 9.6)]
CD_TAU = [(0.3, 8.1), (0.25, 9.0), (0.15, 9.5), (0.28, 9.3),
          (0.34, 10.0), (0.22, 9.5), (0.4, 7.0), (0.5, 6.5)]
CD_LOAD_BUSES = [3, 4, 7, 8, 15, 16, 20, 23]
QD_LOAD_BUSES = [24, 25, 26, 27]
# time constants of the augmentation devices are not tabulated; reuse CD1/QD1
AUGMENT = {
    24: [(18, "CD", (0.3, 8.1)), (21, "QD", (0.3, 7.0))],
    26: [(18, "CD", (0.3, 8.1)), (21, "QD", (0.3, 7.0)),
         (28, "CD", (0.3, 8.1)), (29, "QD", (0.3, 7.0))],
}
PV_DROOPS = True
SG_INTERNAL_EMF = False
OMEGA_S = 2.0 * np.pi * 60.0


def full_ybus():
    n = 39
    y = np.zeros((n, n), dtype=complex)
    for f, t, r, x, b, tap in BRANCHES:
        i, j = f - 1, t - 1
        ys = 1.0 / complex(r, x)
        a = tap if tap else 1.0
        y[i, i] += ys / a**2 + 1j * b / 2
        y[j, j] += ys + 1j * b / 2
        y[i, j] -= ys / a
        y[j, i] -= ys / a
    return y


def full_powerflow(y):
    n = 39
    pv = [g - 1 for g in GENS if g != SLACK]
    slack = SLACK - 1
    psp = np.zeros(n)
    qsp = np.zeros(n)
    for b, (pd, qd) in LOADS.items():
        psp[b - 1] -= pd / BASE
        qsp[b - 1] -= qd / BASE
    for b, (pg, _) in GENS.items():
        psp[b - 1] += pg / BASE
    v = np.ones(n)
    th = np.zeros(n)
    for b, (_, vs) in GENS.items():
        v[b - 1] = vs
    pq = [i for i in range(n) if i != slack and i not in pv]
    nonslack = [i for i in range(n) if i != slack]
    for _ in range(50):
        vc = v * np.exp(1j * th)
        s = vc * np.conj(y @ vc)
        dp = psp[nonslack] - s.real[nonslack]
        dq = qsp[pq] - s.imag[pq]
        mis = np.concatenate([dp, dq])
        if np.max(np.abs(mis)) < 1e-12:
            break
        # numerical Jacobian is adequate offline
        x0 = np.concatenate([th[nonslack], v[pq]])

        def f(xv):
            t2 = th.copy()
            v2 = v.copy()
            t2[nonslack] = xv[: len(nonslack)]
            v2[pq] = xv[len(nonslack):]
            vc2 = v2 * np.exp(1j * t2)
            s2 = vc2 * np.conj(y @ vc2)
            return np.concatenate([s2.real[nonslack], s2.imag[pq]])

        jac = np.zeros((len(x0), len(x0)))
        f0 = f(x0)
        for k in range(len(x0)):
            xp = x0.copy()
            xp[k] += 1e-7
            jac[:, k] = (f(xp) - f0) / 1e-7
        dx = np.linalg.solve(jac, mis)
        x1 = x0 + dx
        th[nonslack] = x1[: len(nonslack)]
        v[pq] = x1[len(nonslack):]
    else:
        raise RuntimeError("full power flow did not converge")
    vc = v * np.exp(1j * th)
    s = vc * np.conj(y @ vc)
    return vc, s


def build(ndev):
    y = full_ybus()
    vc, s = full_powerflow(y)
    extra = AUGMENT.get(ndev, [])
    droop_buses = CD_LOAD_BUSES + QD_LOAD_BUSES + QD_GEN_BUSES + [b for b, _, _ in extra]
    # optional internal EMF nodes for the retained synchronous generators
    nfull = 39 + (len(SG_BUSES) if SG_INTERNAL_EMF else 0)
    yf = np.zeros((nfull, nfull), dtype=complex)
    yf[:39, :39] = y
    emf = {}
    for k, b in enumerate(SG_BUSES):
        idx = 39 + k
        if not SG_INTERNAL_EMF:
            break
        xdp = MACHINES[b][2]
        yl = 1.0 / complex(0.0, xdp)
        yf[idx, idx] += yl
        yf[b - 1, b - 1] += yl
        yf[idx, b - 1] -= yl
        yf[b - 1, idx] -= yl
        pg = GENS[b][0] / BASE
        if b == SLACK:
            pg = s[b - 1].real + LOADS.get(b, (0, 0))[0] / BASE
        qg = s[b - 1].imag + LOADS.get(b, (0, 0))[1] / BASE
        cur = np.conj(complex(pg, qg) / vc[b - 1])
        emf[b] = vc[b - 1] + 1j * xdp * cur
    keep = []
    names = []
    for b in SG_BUSES:
        keep.append(39 + SG_BUSES.index(b) if SG_INTERNAL_EMF else b - 1)
        names.append(b)
    for b in droop_buses:
        keep.append(b - 1)
        names.append(b)
    order = sorted(range(len(keep)), key=lambda k: names[k])
    keep = [keep[k] for k in order]
    names = [names[k] for k in order]
    elim = [i for i in range(nfull) if i not in keep]
    ykk = yf[np.ix_(keep, keep)]
    yke = yf[np.ix_(keep, elim)]
    yee = yf[np.ix_(elim, elim)]
    yr = ykk - yke @ np.linalg.solve(yee, yke.T)
    assert np.allclose(yr, yr.T)

    # bus voltages at retained nodes (EMF for generators)
    vk = np.array([emf[b] if b in SG_BUSES and SG_INTERNAL_EMF else vc[b - 1] for b in names])
    sk = vk * np.conj(yr @ vk)

    buses, lines, loads, devices = [], [], [], []
    n = len(names)
    for i in range(n):
        row = yr[i].sum()
        b = names[i]
        role = "PQ"
        if b == SLACK:
            role = "Slack"
        elif b in GENS or PV_DROOPS:
            role = "PV"
        label = f"{'G' if b in SG_BUSES else ('QDG' if b in QD_GEN_BUSES else 'L')}{b}"
        entry = {"id": i, "name": label, "shunt_g": float(row.real), "shunt_b": float(row.imag),
                 "role": role}
        if role != "PQ":
            entry["v_set"] = float(abs(vk[i]))
        buses.append(entry)
        loads.append({"bus": i, "p": float(sk[i].real), "q": float(sk[i].imag)})
    worst_r = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            if abs(yr[i, j]) < 1e-8:
                continue
            z = -1.0 / yr[i, j]
            worst_r = min(worst_r, z.real)
            lines.append({"from": i, "to": j, "r": float(z.real), "x": float(z.imag)})
    qd_i = 0
    cd_i = 0
    for i, b in enumerate(names):
        if b in SG_BUSES:
            h, xd, xdp, td = MACHINES[b]
            m = 2.0 * h / OMEGA_S
            devices.append({"bus": i, "name": f"SG{b}", "kind": "SG", "params": {
                "m": m, "d": 0.475 * m, "td0": td, "xd": xd, "xd_prime": xdp}, "sigma": None})
        elif b in QD_GEN_BUSES or b in QD_LOAD_BUSES:
            k = (QD_GEN_BUSES + QD_LOAD_BUSES).index(b)
            t1, t2 = QD_TAU[k]
            devices.append({"bus": i, "name": f"QD{k + 1}", "kind": "QD",
                            "params": {"tau1": t1, "tau2": t2}, "sigma": None})
        elif b in CD_LOAD_BUSES:
            k = CD_LOAD_BUSES.index(b)
            t1, t2 = CD_TAU[k]
            devices.append({"bus": i, "name": f"CD{k + 1}", "kind": "CD",
                            "params": {"tau1": t1, "tau2": t2}, "sigma": None})
        else:
            kind, (t1, t2) = next((k, t) for bb, k, t in extra if bb == b)
            label = f"{kind}{9 + sum(1 for bb, kk, _ in extra if kk == kind and bb < b)}"
            devices.append({"bus": i, "name": label, "kind": kind,
                            "params": {"tau1": t1, "tau2": t2}, "sigma": None})
    case = {
        "comment": "IEEE 39-bus (New England), 100 MVA base, network-reduced to one bus per "
                   f"dynamical device ({n} devices); generated by cases/tools/reduce_case39.py",
        "base_mva": BASE,
        "buses": buses,
        "lines": lines,
        "loads": loads,
        "scale": 1.0,
        "reduced": True,
        "devices": devices,
        "faults": [names.index(b) for b in (4, 15, 16)],
    }
    return case, worst_r


if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "."
    for nd in (22, 24, 26):
        case, worst_r = build(nd)
        print(nd, "buses", len(case["buses"]), "lines", len(case["lines"]), "min r", worst_r)
        with open(f"{out}/case39_{nd}.json", "w") as fh:
            json.dump(case, fh, indent=1)
            fh.write("\n")
