#!/usr/bin/env python3
"""Compare a(theta) = theta with a(theta) = theta^2 on the round sphere.

|Y_{l,m}|^2 is even about the equator, so mu[theta] equals pi/2 up to
rounding for every eigenfunction and both the deviation series and S(h)
are pure roundoff.  theta^2 has no such symmetry and shows genuine decay.
"""
import math

from revqe.geometry import SurfaceSpec, build_profile
from revqe.semiclassics import CharacterFamily, integrated_qe_statistic, quantum_limit_series
from revqe.spectral import closed_form_spectrum


def main() -> None:
    curve = build_profile(SurfaceSpec.round_sphere(4000))
    ls = [20, 40, 80, 120, 160, 200]
    for name, a in (("theta", lambda t: t), ("theta2", lambda t: t * t)):
        rep = quantum_limit_series(a, 0, ls, curve, name=name)
        devs = " ".join(f"{d:.2e}" for d in rep.deviations)
        print(f"{name:7s} target={rep.target:.6f} slope={rep.slope:+.3f}  deviations: {devs}")
    spec = closed_form_spectrum(1500, modes=[0])
    for name, a in (("theta", lambda t: t), ("theta2", lambda t: t * t)):
        q = integrated_qe_statistic(spec, a, 1.0, 1 / 6, CharacterFamily.of([0]), [0.1, 0.01, 0.001], curve, name)
        row = " ".join(f"S({h:g})={s:.3e}" for h, s in zip(q.h, q.S))
        print(f"{name:7s} {row}")
    print(f"pi/2 = {math.pi / 2!r}")


if __name__ == "__main__":
    main()
