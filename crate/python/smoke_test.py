"""Quick checks of the Python bindings against closed forms."""

import math

import weylchamber_py as wc


def main():
    a2 = wc.RootSystem("A2")
    assert a2.rank == 2
    assert a2.weyl_order() == 6
    assert sum(sig for _, _, sig, _ in a2.weyl_elements()) == 0
    assert abs(sum(x * y for x, y in zip(*a2.simple_roots)) + 1.0) < 1e-12
    assert [wc.RootSystem(k).weyl_order() for k in ("A1", "B2", "G2", "dihedral(4)")] == [2, 8, 12, 8]

    # A1 with nu = e: survival of the minimum is 1 - e^{2 m}
    assert abs(wc.min_law_survival("A1", [-1.0], nu=[1.0]) - (1.0 - math.exp(-2.0))) < 1e-12

    assert abs(wc.special_l(0.5) - 1.0) < 1e-14
    assert abs(wc.special_l(0.3) * wc.special_l(0.7) - 1.0) < 1e-12

    # A1, gamma = 1, alpha - Q = -0.4 e: the simple reflection matches the rank-one formula
    q = wc.background_charge("A1", 1.0)
    e = wc.RootSystem("A1").simple_roots[0]
    alpha = [q[0] - 0.4 * e[0]]
    r = wc.refl_coeff("A1", 1.0, alpha, [0])
    assert r < 0.0, r
    assert abs(wc.refl_coeff("A1", 1.0, alpha, []) - 1.0) < 1e-14
    assert abs(wc.liouville_refl(1.0, 1.0, 2.5 - 0.8) - r) < 1e-10 * abs(r)

    mean, err, closed = wc.exp_functional_moment(1.0, 1.0, n=4000, seed=3)
    assert abs(mean - closed) < 4 * err, (mean, err, closed)

    x = a2.from_pairings([0.8, 1.3])
    p1 = wc.exit_wall_prob("A2", x, 0)
    p2 = wc.exit_wall_prob("A2", x, 1)
    assert abs(p1 + p2 - 1.0) < 1e-6

    try:
        wc.RootSystem("Z9")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown root system accepted")

    ok, details, _ = wc.acceptance(8)
    assert ok, details
    print("smoke test passed")


if __name__ == "__main__":
    main()
