"""Independent numpy evaluation of the regression values frozen into the C++ tests.

Run: python3 tests/oracles/fixtures.py
"""
import itertools

import numpy as np


def riccati(A, B, Q, R, T):
    M = np.zeros_like(Q)
    Ms, Ls = [None] * (T + 1), [None] * T
    Ms[T] = M
    for t in reversed(range(T)):
        L = -np.linalg.solve(B.T @ M @ B + R, B.T @ M @ A)
        M = A.T @ M @ A + A.T @ M @ B @ L + Q
        M = 0.5 * (M + M.T)
        Ms[t], Ls[t] = M, L
    return Ms, Ls


def s(v):
    return np.array([[float(v)]])


def scalar_problem(p):
    A0, B0, D0 = s(p["A0"]), s(p["B0"]), s(p["D0"])
    A, B, D, E = s(p["A"]), s(p["B"]), s(p["D"]), s(p["E"])
    Q0, R0, F, Q, P, R, H = (s(p[k]) for k in ("Q0", "R0", "F", "Q", "P", "R", "H"))
    Abar = np.block([[A0, D0], [E, A + D]])
    Qbar = np.block([[Q0 + P + F, -P - F], [-P - F, Q + P + F]])
    if p.get("leaderless"):
        Bbar = np.array([[0.0], B[0]])
        Rbar = R
    else:
        Bbar = np.block([[B0, np.zeros((1, 1))], [np.zeros((1, 1)), B]])
        Rbar = np.block([[R0, np.zeros((1, 1))], [np.zeros((1, 1)), R]])
    T = p["T"]
    Mb, Lb = riccati(A, B, Q + P + H, R, T)
    Mbar, Lbar = riccati(Abar, Bbar, Qbar, Rbar, T)
    return dict(A0=A0, B0=B0, D0=D0, A=A, B=B, D=D, E=E, Q0=Q0, R0=R0, F=F, Q=Q, P=P, R=R, H=H,
                Abar=Abar, Bbar=Bbar, Qbar=Qbar, Rbar=Rbar, Mb=Mb, Lb=Lb, Mbar=Mbar, Lbar=Lbar, T=T)


def closed_gap(g, Sx, Sw, n):
    T = g["T"]
    At, Qt = [], []
    z = np.zeros((1, 1))
    for t in range(T):
        L = g["Lbar"][t]
        L11, L12, L21, L22 = L[0:1, 0:1], L[0:1, 1:2], L[1:2, 0:1], L[1:2, 1:2]
        Lb = g["Lb"][t]
        At.append(np.block([
            [g["A0"] + g["B0"] @ L11, g["B0"] @ L12 + g["D0"], -g["D0"]],
            [g["B"] @ L21 + g["E"], g["A"] + g["B"] @ L22 + g["D"], z],
            [np.zeros((1, 2)), g["A"] + g["B"] @ Lb + g["D"]]]))
        Qt.append(np.block([
            [-g["Qbar"] - L.T @ g["Rbar"] @ L, np.zeros((2, 1))],
            [np.zeros((1, 2)), g["Q"] + g["P"] + g["F"] + Lb.T @ g["R"] @ Lb]]))
    M = [None] * T
    M[T - 1] = Qt[T - 1]
    for t in reversed(range(T - 1)):
        M[t] = At[t].T @ M[t + 1] @ At[t] + Qt[t]

    def C(v):
        out = np.zeros((3, 3))
        out[1:, 1:] = v
        return out

    return np.trace(C(Sx / n) @ M[0]) + sum(np.trace(C(Sw / n) @ M[t + 1]) for t in range(T - 1))


def stacked(p, n):
    """Stacked (n+1)-agent system with the per-agent cost written out term by term."""
    N = n + 1
    A = np.zeros((N, N))
    B = np.zeros((N, n + 1))
    A[0, 0] = p["A0"]
    B[0, 0] = p["B0"]
    for i in range(1, N):
        A[0, i] += p["D0"] / n
        A[i, 0] = p["E"]
        A[i, i] += p["A"]
        for j in range(1, N):
            A[i, j] += p["D"] / n
        B[i, i] = p["B"]

    def cost_matrix(x_fn):
        # quadratic form of a scalar function of the state, built by polarization on unit vectors
        Qm = np.zeros((N, N))
        for a in range(N):
            for b in range(N):
                ea, eb = np.eye(N)[a], np.eye(N)[b]
                Qm[a, b] = 0.25 * (x_fn(ea + eb) - x_fn(ea - eb))
        return Qm

    def stage(x):
        x0, xs = x[0], x[1:]
        xbar = xs.mean()
        c = p["Q0"] * x0 ** 2 + p["F"] * (xbar - x0) ** 2
        for i in range(n):
            c += (p["Q"] * xs[i] ** 2 + p["P"] * (xs[i] - x0) ** 2) / n
            for j in range(n):
                c += p["H"] * (xs[i] - xs[j]) ** 2 / (2 * n * n)
        return c

    Q = cost_matrix(stage)
    R = np.diag([p["R0"]] + [p["R"] / n] * n)
    return A, B, Q, R


def centralized_cost(p, n, Sx, Sw, S0, mu, x01):
    A, B, Q, R = stacked(p, n)
    Ms, _ = riccati(A, B, Q, R, p["T"])
    m = np.array([x01] + [mu] * n)
    cov = np.diag([0.0] + [Sx] * n)
    W = np.diag([S0] + [Sw] * n)
    return m @ Ms[0] @ m + np.trace(cov @ Ms[0]) + sum(np.trace(W @ Ms[t + 1]) for t in range(p["T"]))


def strategy_cost(p, g, n, Sx, Sw, S0, mu, x01, proposed):
    """Exact expected cost of a linear strategy by moment propagation on the
    full stacked state (leader, followers, estimate z)."""
    N = n + 2
    T = p["T"]
    A, B, Q, R = stacked(p, n)
    m = np.array([x01] + [mu] * n + [mu])
    cov = np.diag([0.0] + [Sx] * n + [0.0])
    W = np.diag([S0] + [Sw] * n + [0.0])
    J = 0.0
    for t in range(T):
        L = g["Lbar"][t]
        L11, L12, L21, L22 = L[0, 0], L[0, 1], L[1, 0], L[1, 1]
        Lb = g["Lb"][t][0, 0]
        K = np.zeros((n + 1, N))
        if proposed:
            K[0, 0], K[0, n + 1] = L11, L12
            for i in range(1, n + 1):
                K[i, i] = Lb
                K[i, 0] = L21
                K[i, n + 1] = L22 - Lb
        else:
            K[0, 0] = L11
            K[0, 1:n + 1] = L12 / n
            for i in range(1, n + 1):
                K[i, 0] = L21
                K[i, 1:n + 1] += (L22 - Lb) / n
                K[i, i] += Lb
        Sx_ = np.zeros((n + 1, N))
        Sx_[:, :n + 1] = np.eye(n + 1)
        Wt = Sx_.T @ Q @ Sx_ + K.T @ R @ K
        J += m @ Wt @ m + np.trace(Wt @ cov)
        Fm = np.zeros((N, N))
        Fm[:n + 1, :n + 1] = A
        Fm[:n + 1, :] += B @ K
        Fm[n + 1, 0] = p["B"] * L21 + p["E"]
        Fm[n + 1, n + 1] = p["A"] + p["B"] * L22 + p["D"]
        m = Fm @ m
        cov = Fm @ cov @ Fm.T + W
    return J


def fmt(x):
    return repr(float(x))


def main():
    ex1 = dict(A0=1, B0=0.8, D0=0.1, A=1, B=0.9, D=0.05, E=0.15, Q0=1, R0=200, F=20, Q=2, P=5,
               R=100, H=1, T=40)
    g1 = scalar_problem(ex1)
    print("example1 gains (t, L_breve, L11, L12, L21, L22)")
    for t in (1, 20, 40):
        L = g1["Lbar"][t - 1]
        print(t, fmt(g1["Lb"][t - 1][0, 0]), *(fmt(v) for v in L.ravel()))
    print("example1 M_breve(1)", fmt(g1["Mb"][0][0, 0]))
    print("example1 M_bar(1)", *(fmt(v) for v in g1["Mbar"][0].ravel()))
    print("example1 delta_j_closed n=1000", fmt(closed_gap(g1, 16 / 12, 0.05, 1000)))

    ex2 = dict(A0=1, B0=0, D0=0, A=1, B=0.5, D=0.05, E=0, Q0=0, R0=0, F=60, Q=0.1, P=20, R=100,
               H=0.5, T=40, leaderless=True)
    g2 = scalar_problem(ex2)
    print("example2 M_bar(T-1)", *(fmt(v) for v in g2["Mbar"][38].ravel()))

    sc = dict(A0=1, B0=1, D0=0, A=1.1, B=1, D=0.2, E=0.3, Q0=1, R0=1, F=1, Q=1, P=1, R=1, H=1, T=5)
    gs = scalar_problem(sc)
    closed = closed_gap(gs, 1.0, 0.5, 20)
    print("scalar T=5 n=20 delta_j_closed", fmt(closed))

    # Closed form against brute-force stacked moments for a small population (D0 = 0).
    n_small = 3
    gap_small = (strategy_cost(sc, gs, n_small, 1.0, 0.5, 0.1, 1.0, 2.0, True)
                 - strategy_cost(sc, gs, n_small, 1.0, 0.5, 0.1, 1.0, 2.0, False))
    print("scalar n=3 stacked gap", fmt(gap_small), "closed", fmt(closed_gap(gs, 1.0, 0.5, n_small)))

    cen = dict(A0=1, B0=1, D0=0.2, A=0.9, B=1, D=0.3, E=0.4, Q0=1, R0=2, F=1.5, Q=1, P=2, R=1,
               H=0.7, T=3)
    gc = scalar_problem(cen)
    args = (1.0, 0.3, 0.2, 0.5, 1.5)
    print("centralized n=2 T=3 exact", fmt(centralized_cost(cen, 2, *args)))
    print("  oracle strategy exact", fmt(strategy_cost(cen, gc, 2, *args, proposed=False)))
    print("  proposed strategy exact", fmt(strategy_cost(cen, gc, 2, *args, proposed=True)))


if __name__ == "__main__":
    main()
