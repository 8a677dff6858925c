"""Smoke test for the `coinforge` extension module.

Build and install first:

    pip install --no-build-isolation ./crates/py     # or: maturin develop -m crates/py/Cargo.toml
    python python/smoke_test.py
"""

import json
import math
import sys

import coinforge


def check(name, ok, detail=""):
    print(f"{'PASS' if ok else 'FAIL'} {name} {detail}".rstrip())
    return ok


def main():
    ok = True

    src = coinforge.UniformSource(7)
    us = [src.next_uniform() for _ in range(1000)]
    ok &= check("uniforms in (0,1)", all(0.0 < u < 1.0 for u in us))
    again = coinforge.UniformSource(7)
    ok &= check("source is reproducible", us[:10] == [again.next_uniform() for _ in range(10)])
    ok &= check("source counter", src.counter == 1000, f"counter={src.counter}")

    n = 20000
    hits = sum(coinforge.exp_coin(1.0, 0.5, 11, i).value for i in range(n))
    want = math.exp(-0.5)
    se = math.sqrt(want * (1 - want) / n)
    ok &= check("exp coin frequency", abs(hits / n - want) < 4 * se, f"{hits / n:.4f} vs {want:.4f}")

    r = coinforge.envelope_coin(0.6, 11, 0)
    ok &= check("envelope coin result", isinstance(r.value, bool) and r.iterations >= 1, repr(r))
    hits = sum(coinforge.envelope_coin(0.6, 12, i).value for i in range(n))
    se = math.sqrt(0.36 * 0.64 / n)
    ok &= check("p^2 envelope frequency", abs(hits / n - 0.36) < 4 * se, f"{hits / n:.4f} vs 0.3600")

    est = [coinforge.two_point_estimate(0.25, 1.0, 5, i) for i in range(n)]
    ok &= check("two-point estimate", abs(sum(est) / n - 0.25) < 4 / math.sqrt(n))

    ok &= check("bernstein eval", abs(coinforge.bernstein_eval([0.0, 0.0, 1.0], 0.3) - 0.09) < 1e-15)
    report = json.loads(coinforge.validate_envelope("p2", 16))
    ok &= check("envelope validation json", isinstance(report, dict))

    zero = coinforge.Diffusion("zero", x=1.0, T=0.5)
    xs = zero.sample(4000, 3)
    m = sum(xs) / len(xs)
    v = sum((x - m) ** 2 for x in xs) / (len(xs) - 1)
    ok &= check("zero drift mean", abs(m - 1.0) < 4 * math.sqrt(0.5 / len(xs)), f"{m:.4f}")
    ok &= check("zero drift variance", abs(v - 0.5) < 4 * 0.5 * math.sqrt(2 / len(xs)), f"{v:.4f}")

    sine = coinforge.Diffusion("sine", x=0.0, T=0.5)
    ok &= check("phi in [0,1]", all(0.0 <= sine.phi(u / 10) <= 1.0 for u in range(-50, 50)))
    exact = sine.sample(2000, 4)
    em = sine.euler_maruyama(2000, 4, 1e-3)
    d, crit = coinforge.ks_two_sample(exact, em)
    ok &= check("sine exact vs euler KS", d < crit, f"D={d:.4f} crit={crit:.4f}")

    try:
        coinforge.Diffusion("sine", T=2.0).draw(1)
        ok &= check("long horizon refused", False)
    except RuntimeError as e:
        ok &= check("long horizon refused", "r*T < 1" in str(e))
    ok &= check("segmented draw", coinforge.Diffusion("sine", T=2.0).draw(1, segment=True).segments > 1)

    out, code = coinforge.run_command("coin", {"target": "alg3-alt-exp", "p": "0.3", "reps": "5000", "seed": "1"})
    ok &= check("run_command coin", code in (0, 1) and json.loads(out)["command"] == "coin", f"exit={code}")
    try:
        coinforge.run_command("coin", {"colour": "red"})
        ok &= check("unknown key rejected", False)
    except ValueError:
        ok &= check("unknown key rejected", True)

    st = json.loads(coinforge.selftest(0))
    ok &= check("selftest", st["pass"] is True)

    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
