#!/usr/bin/env python3
"""Empirical order of the RK4 and Dormand-Prince integrators on an exactly solvable Riccati flow.

With only X1 = 4u^2 d/du + 4uv d/dv + v^2 d/dw switched on, the flow is
u = u0/s, v = v0/s, w = w0 + v0^2 t/s with s = 1 - 4 u0 t.
"""

import argparse
import math
from dataclasses import dataclass

from mslie import catalog
from mslie.numeric import TCoefficient, integrate


@dataclass
class Config:
    x0: tuple = (-0.5, 1.2, 0.1)
    t1: float = 1.0
    h0: float = 0.2
    halvings: int = 6
    dopri_tols: tuple = (1e-4, 1e-6, 1e-8, 1e-10)


def exact(x0, t):
    u0, v0, w0 = x0
    s = 1 - 4 * u0 * t
    return [u0 / s, v0 / s, w0 + v0 ** 2 * t / s]


def system():
    entry = catalog.load("riccati")
    return entry.system.lie_system({"X1": TCoefficient("1"), "X2": TCoefficient("0"), "X3": TCoefficient("0")})


def max_err(a, b):
    return max(abs(x - y) for x, y in zip(a, b))


def main(argv=None):
    cfg = Config()
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--h0", type=float, default=cfg.h0)
    ap.add_argument("--halvings", type=int, default=cfg.halvings)
    args = ap.parse_args(argv)
    cfg.h0, cfg.halvings = args.h0, args.halvings

    sys_ = system()
    ref = exact(cfg.x0, cfg.t1)
    print(f"{'h':>10} {'error':>12} {'ratio':>8} {'order':>6}")
    prev = None
    h = cfg.h0
    for _ in range(cfg.halvings + 1):
        e = max_err(integrate(sys_, cfg.x0, (0.0, cfg.t1), step=h).final, ref)
        if prev is None:
            print(f"{h:10.5f} {e:12.3e}")
        else:
            print(f"{h:10.5f} {e:12.3e} {prev / e:8.2f} {math.log2(prev / e):6.2f}")
        prev = e
        h /= 2

    print("\ndopri5")
    print(f"{'rtol':>10} {'error':>12} {'steps':>6}")
    for tol in cfg.dopri_tols:
        tr = integrate(sys_, cfg.x0, (0.0, cfg.t1), method="dopri5", rtol=tol, atol=tol * 1e-2, t_eval=[cfg.t1])
        print(f"{tol:10.0e} {max_err(tr.final, ref):12.3e} {tr.meta['steps']:6d}")


if __name__ == "__main__":
    main()
