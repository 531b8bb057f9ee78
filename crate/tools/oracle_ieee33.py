"""Independent 33-bus load flow used to freeze expected values for the
Rust test suites. Shares no code with the sweep solver.

    python3 tools/oracle_ieee33.py
"""
import numpy as np
BR = """1 2 0.0922 0.0470
2 3 0.4930 0.2511
3 4 0.3660 0.1864
4 5 0.3811 0.1941
5 6 0.8190 0.7070
6 7 0.1872 0.6188
7 8 0.7114 0.2351
8 9 1.0300 0.7400
9 10 1.0440 0.7400
10 11 0.1966 0.0650
11 12 0.3744 0.1238
12 13 1.4680 1.1550
13 14 0.5416 0.7129
14 15 0.5910 0.5260
15 16 0.7463 0.5450
16 17 1.2890 1.7210
17 18 0.7320 0.5740
2 19 0.1640 0.1565
19 20 1.5042 1.3554
20 21 0.4095 0.4784
21 22 0.7089 0.9373
3 23 0.4512 0.3083
23 24 0.8980 0.7091
24 25 0.8960 0.7011
6 26 0.2030 0.1034
26 27 0.2842 0.1447
27 28 1.0590 0.9337
28 29 0.8042 0.7006
29 30 0.5075 0.2585
30 31 0.9744 0.9630
31 32 0.3105 0.3619
32 33 0.3410 0.5302"""
LD = """2 100 60
3 90 40
4 120 80
5 60 30
6 60 20
7 200 100
8 200 100
9 60 20
10 60 20
11 45 30
12 60 35
13 60 35
14 120 80
15 60 10
16 60 20
17 60 20
18 90 40
19 90 40
20 90 40
21 90 40
22 90 40
23 90 50
24 420 200
25 420 200
26 60 25
27 60 25
28 60 20
29 120 70
30 200 600
31 150 70
32 210 100
33 60 40"""
br=[tuple(float(v) for v in l.split()) for l in BR.splitlines()]
ld={int(l.split()[0]):(float(l.split()[1]),float(l.split()[2])) for l in LD.splitlines()}
def solve(kv, caps=None, mva=1.0):
    """Nodal fixed point V = Yrr^-1 (I(V) - Yr0 V0) on the dense admittance matrix."""
    caps = caps or {}
    n = 33
    Y = np.zeros((n, n), complex)
    for f, t, r, x in br:
        y = 1 / ((r + 1j * x) * mva / kv**2)
        f = int(f) - 1
        t = int(t) - 1
        Y[f, f] += y
        Y[t, t] += y
        Y[f, t] -= y
        Y[t, f] -= y
    S = np.zeros(n, complex)
    for b, (p, q) in ld.items():
        S[b - 1] = (p + 1j * q) / 1000 / mva
    for b, qc in caps.items():
        S[b - 1] -= 1j * qc / 1000 / mva
    V = np.ones(n, complex)
    Yrr = Y[1:, 1:]
    Yr0 = Y[1:, 0]
    for _ in range(1000):
        I = -np.conj(S[1:] / V[1:])
        Vn = np.linalg.solve(Yrr, I - Yr0 * V[0])
        d = np.max(abs(Vn - V[1:]))
        V[1:] = Vn
        if d < 1e-13:
            break
    p_loss = q_loss = 0.0
    per_branch = []
    for f, t, r, x in br:
        fi = int(f) - 1
        ti = int(t) - 1
        z = (r + 1j * x) * mva / kv**2
        s = abs((V[fi] - V[ti]) / z) ** 2 * z * 1000 * mva
        per_branch.append(s)
        p_loss += s.real
        q_loss += s.imag
    vd = sum(abs(1 - abs(v)) for v in V)
    return V, p_loss, q_loss, per_branch, vd


if __name__ == "__main__":
    for kv in (12.66, 11.0):
        V, p, q, per, vd = solve(kv)
        k = int(np.argmax([s.real for s in per]))
        print(f"{kv} kV: P {p:.4f} kW  Q {q:.4f} kvar  min |V| {abs(V).min():.5f} at bus {np.argmin(abs(V)) + 1}  VD {vd:.4f}")
        print(f"  peak branch loss {per[k].real:.4f} kW / {per[k].imag:.4f} kvar on branch {k + 1}")
        print(f"  buses below 0.90 p.u.: {[b + 1 for b in range(33) if abs(V[b]) < 0.9]}")
