import mpmath as mp
mp.mp.dps = 30
n = 3
B = lambda c: mp.beta(n, c)          # int_0^1 (1-s)^{c-1} s^{n-1} ds
def mass(beta):   # int e^{-beta r} dm / (n w_n)
    return B(beta + 1)
def r2mass(beta): # int r^2 e^{-beta r}
    return mp.diff(lambda b: B(b + 1), beta, 2)
def inv_r2(beta): # int r^-2 e^{-beta r} = int_0^inf u B(beta+u+1) du
    return mp.quad(lambda u: u * B(beta + u + 1), [0, 1, 10, mp.inf])
def inv_r(beta):
    return mp.quad(lambda u: B(beta + u + 1), [0, 1, 10, mp.inf])
alphas = [1, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01]
print("hardy")
for a in alphas:
    a = mp.mpf(a)
    print(a, a**2 * mass(2*a) / inv_r2(2*a))
print("hpw")
for a in alphas:
    a = mp.mpf(a)
    print(a, a**2 * r2mass(2*a) / mass(2*a))
print("ckn")
p, q = mp.mpf(2.5), 1
prev = None
for a in alphas:
    a = mp.mpf(a)
    num = mp.quad(lambda t: t**5 * mp.e**(-t) * mass(a*t), [0, 10, 50, mp.inf]) / mp.gamma(6)
    den = mp.quad(lambda t: t**4 * mp.e**(-t) * inv_r(a*t), [0, 10, 50, mp.inf]) / mp.gamma(5)
    G = a**2 * ((2-q)/(p-2))**2 * num**2 / den**2
    sl = None if prev is None else mp.log(prev[1]/G)/mp.log(prev[0]/a)
    prev = (a, G)
    print(a, G, sl)
