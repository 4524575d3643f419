"""Contrast scalars and expansion coefficients of the material table, in 40-digit arithmetic."""
from mpmath import mp, mpc, mpf, pi, fabs

mp.dps = 40
EPS0 = mpf("8.85e-12")
CONCRETE = (mpf(1), mpf(10) ** 4 * EPS0)
STEEL = (mpf(10) ** 5, mpf(10) ** 6 * EPS0)
AIR_GAP = (mpf("1e-6"), mpf(100) * EPS0)


def gamma(m, w):
    return mpc(m[0], w * m[1])


def lam_c(w):
    return gamma(AIR_GAP, w) / gamma(CONCRETE, w)


def lam_d(w):
    (sd, ed), (sb, eb) = STEEL, CONCRETE
    return mpc(sd + sb, w * (ed + eb)) / (2 * mpc(sd - sb, -w * (ed - eb)))


if __name__ == "__main__":
    w1m = 2 * pi * 10**6
    print("lambda_c(0) =", lam_c(0))
    print("|lambda_c(2pi 1MHz)| =", fabs(lam_c(w1m)))
    print("|lambda_c(2pi 800kHz)| =", fabs(lam_c(2 * pi * 8e5)))
    print("|lambda_c(2pi 10Hz)| =", fabs(lam_c(2 * pi * 10)))
    print("lambda_d(0) =", lam_d(0))
    print("lambda_d(2pi 1MHz) =", lam_d(w1m), fabs(lam_d(w1m)))
    print("crack c_re, delta 5e-5, lambda 1e-6, a = tau:", mpf("5e-5") / pi * (mpf("1e-6") - 1))
    print("bar d_re, r 0.015, lambda 0.5:", -(pi * mpf("0.015") ** 2) / (2 * pi * mpf("0.5")))
