"""Exact hitting probabilities of the two-group model under both contagion couplings.

Total-count coupling drives every group by the overall default fraction;
own-group coupling drives each group by its own fraction.  The benchmark
inhomogeneous column is printed alongside.
"""

from contagion_is import ModelSpec, exact_hit_probability

BENCHMARK = (0.377, 3.118e-2, 6.252e-4, 1.677e-6, 4.662e-9, 7.888e-12, 9.756e-15)
Z = (0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40)


def main():
    print(f"{'z':>5} {'total':>11} {'own-group':>11} {'benchmark':>11}")
    for z, pub in zip(Z, BENCHMARK):
        vals = [
            exact_hit_probability(ModelSpec(a=(0.01, 0.05), w=(0.8, 0.2), b=5.0, n=125, horizon=5.0,
                                            threshold=z, coupling=c))
            for c in ("total", "group")
        ]
        print(f"{z:5.2f} {vals[0]:11.4e} {vals[1]:11.4e} {pub:11.4e}")


if __name__ == "__main__":
    main()
