"""Smoke test for the epilab extension module."""

import math

import epilab


def main():
    assert epilab.derive_delta_exact((1, 1), (1, 1), (1, 1)) == (1, 12)
    assert abs(epilab.derive_delta() - 1 / 12) < 1e-15

    p = epilab.DecayParams(gamma=0.25, r1=1e-3, r3=1.0)
    t = epilab.synth_saturating_trace(p, 0.2, 200)
    assert len(t) == 200
    rep = epilab.verify_ode(t, p)
    assert rep.passed and rep.worst_margin >= -1e-6, rep
    radii, g = epilab.compute_g(t, p)
    b = epilab.comparison_bound(g[-1], radii[-1], radii[0], p.delta(), p.gamma)
    assert abs(b - g[0]) <= 1e-8 * abs(g[0]), (b, g[0])

    k, _ = epilab.dyadic_lemma_check(2.0, 0.0)
    assert abs(k - 1 / (1 - math.exp(-0.5))) < 1e-6

    ratio = epilab.outer_gain_ratio(2, 1.0)
    assert abs(ratio - 1 / 3) < 1e-3, ratio

    w, gap = epilab.cone_energy(128)
    assert abs(w - math.pi / 2) < 1e-3 and abs(gap) < 1e-3, (w, gap)

    fam = epilab.arc_family([0.01, 0.02], 256)
    assert {m["normalization"] for m in fam} == {"mass", "slope"}
    assert min(m["epsilon"] for m in fam) > 0.05

    case, c, ok = epilab.flow_model(1, 0.05, 0.5)
    assert ok and c > 0, (case, c)
    beta = epilab.fit_lojasiewicz_model(2, [0.01 * (i + 1) for i in range(10)])
    assert abs(beta - 0.25) < 0.02, beta

    assert epilab.spectral_gap(2) == 3.0
    ident = epilab.obstacle_identity([(2, 0.01, 0.0), (5, 0.0, 0.003)])
    assert ident["corrected_residual"] < 1e-6, ident

    n = 32
    sigma = [max(math.cos(2 * math.pi * j / n), 0.0) for j in range(n)]
    m = epilab.minimize(sigma, restarts=1)
    assert m.energy > 0 and m.hausdorff_cells <= 2.0, m.hausdorff_cells
    assert len(m.values()) == n

    try:
        epilab.DecayParams(c_e=2.0)
    except epilab.EpilabError:
        pass
    else:
        raise AssertionError("c_e = 2 accepted")

    print("epilab smoke test ok")


if __name__ == "__main__":
    main()
