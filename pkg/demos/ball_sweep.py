"""Sweep the ball family's parameter and watch metrizability come and go.

The family lives on the unit ball and depends on one constant c.  For a
single value of c the spray is projectively flat of constant curvature and
comes from an honest Finsler metric; everywhere else the isotropy verdict
turns it away.  The engine does not know which c is special in advance --
the sweep below rediscovers it numerically and recovers the metric.

Run as `python3 demos/ball_sweep.py`.
"""

import numpy as np

from spraylab import ExprSpray, decide, load_fixture, parse


def main() -> None:
    source = load_fixture("ball").source
    print("family source (c is swept below):\n")
    print("\n".join(f"    {line}" for line in source.strip().splitlines()))
    print()

    recovered = None
    for c in (0.5, 1.0, 1.5, 2.0, 2.5, 3.0):
        spray = ExprSpray(parse(source, consts={"c": c}, name=f"ball c={c}"))
        v = decide(spray, count=32, seed=7)
        marker = "  <-- metrizable" if v.outcome.startswith("metrizable") else ""
        print(f"  c = {c:<4} {v.outcome:<24} {v.rule}{marker}")
        if v.recovered_metric is not None:
            recovered = (c, v.recovered_metric)

    assert recovered is not None
    c, metric = recovered
    print(f"\nrecovered metric at c = {c}, sampled against the closed form")
    print("ratio to -4|y|^2 / (1-|x|^2)^2 at a few points:")
    rng = np.random.default_rng(0)
    for _ in range(4):
        x = rng.uniform(-0.5, 0.5, 2)
        y = rng.uniform(0.2, 1.0, 2)
        pt = np.concatenate([x, y])
        want = -4.0 * (y @ y) / (1.0 - x @ x) ** 2
        got = metric.value(pt)
        print(f"  at x={np.round(x, 3)}, y={np.round(y, 3)}: "
              f"L = {got:+.6f}, ratio {got / want:.12f}")


if __name__ == "__main__":
    main()
