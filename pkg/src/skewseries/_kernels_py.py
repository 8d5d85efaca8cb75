"""Pure-Python versions of the digit kernels.

Digits are tuples of ints in [0, p) listing coefficients of consecutive
powers of the uniformiser, lowest first.
"""


def conv_trunc(a, b, n, p):
    # first n coefficients of a*b mod p
    out = [0] * n
    la = len(a)
    lb = len(b)
    for i in range(min(la, n)):
        ai = a[i]
        if ai == 0:
            continue
        lim = min(lb, n - i)
        for j in range(lim):
            out[i + j] += ai * b[j]
    return tuple(c % p for c in out)


def inv_trunc(a, n, p):
    # first n coefficients of 1/a mod p, a[0] must be nonzero mod p
    a0inv = pow(a[0], p - 2, p)
    out = [0] * n
    la = len(a)
    for k in range(n):
        s = 1 if k == 0 else 0
        for j in range(1, min(k, la - 1) + 1):
            s -= a[j] * out[k - j]
        out[k] = (s * a0inv) % p
    return tuple(out)


def add_shifted(a, b, shift, n, p):
    # first n coefficients of a + pi^shift * b, shift >= 0
    out = [0] * n
    for i in range(min(len(a), n)):
        out[i] = a[i]
    for j in range(min(len(b), n - shift)):
        out[j + shift] += b[j]
    return tuple(c % p for c in out)
