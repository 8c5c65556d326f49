"""Tour the example corpus: classify every fixture and print the verdict.

Run as `python3 demos/classify_tour.py`.  Each fixture is sampled at its
recorded seed, pushed through the six curvature flags, and routed to a
metrizability decision; the last column says whether the run matched the
expectations stored with the fixture.
"""

from spraylab import corpus


def main() -> None:
    names = corpus.fixture_names()
    print(f"{len(names)} fixtures\n")
    print(f"{'fixture':<12} {'flags (scalar/iso/const/berwald/proj/weak)':<44} "
          f"{'verdict':<24} ok")
    print("-" * 96)
    for name in names:
        rep = corpus.run_fixture(name)
        flags = "/".join("y" if rep.flags[f] else "." for f in (
            "scalar", "isotropic", "constant", "berwald",
            "projective_form", "weak_isotropic"))
        print(f"{name:<12} {flags:<44} {rep.verdict.outcome:<24} "
              f"{'pass' if rep.passed else 'FAIL'}")
        if not rep.passed:
            for line in rep.lines():
                print(f"    {line}")

    print()
    fx = corpus.load_fixture("ex7.6")
    print(f"one fixture up close: {fx.name} ({', '.join(fx.aliases)})")
    print(fx.source.strip())
    print()
    print("this spray is of scalar curvature with R = 0 everywhere, yet its")
    print("tau covector is nonzero, so no Finsler metric can produce it; the")
    print("decision procedure refuses it with the rule below.")
    rep = corpus.run_fixture(fx.name)
    print(f"  verdict: {rep.verdict.outcome} ({rep.verdict.rule})")


if __name__ == "__main__":
    main()
