"""Smoke test for the rclt extension module.

Build and install first, e.g.

    pip install maturin
    cd crates/python && maturin build --release -o dist && pip install dist/rclt-*.whl

then run `python python/smoke_test.py`.
"""

import json
import math

import rclt


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b}"


def main():
    chain = rclt.Chain([[0.75, 0.25], [0.25, 0.75]])
    assert chain.n_states == 2
    assert chain.detailed_balance_residual() <= 1e-12
    close(chain.stationary[0], 0.5, 1e-15)
    f = chain.center([1.0, -1.0])

    atoms = rclt.spectral_atoms(chain, f)
    assert len(atoms) == 1
    close(atoms[0][0], 0.5, 1e-14)
    close(atoms[0][1], 1.0, 1e-14)

    close(rclt.asymptotic_variance(chain, f), 3.0, 1e-12)
    close(rclt.asymptotic_variance_from_poisson(chain, f), 3.0, 1e-12)
    report = rclt.variance(chain, f, 200)
    close(report["sigma2_series"], 3.0, 1e-12)
    assert len(report["var_sn_over_n"]) == 200

    path = rclt.sample_trajectory(chain, f, 100, seed=5)
    assert path == rclt.sample_trajectory(chain, f, 100, seed=5)
    assert len(path["states"]) == 101

    terms = rclt.decompose(chain, f, 500, 20, seed=1)
    assert terms["max_residual_xk1"] <= 1e-12
    assert terms["max_residual_martdec"] <= 1e-12

    clt = rclt.clt(chain, f, 500, 2000, seed=3)
    assert clt["kind"] == "clt" and len(clt["standardized"]) == 2000
    assert clt["ks_statistic"] < 0.05

    fclt = rclt.fclt(chain, f, 400, 2000, [0.5, 1.0], seed=3)
    assert [p["t"] for p in fclt["variance_profile"]] == [0.5, 1.0]

    exact = rclt.maximal(chain, f, 5, [0.0, 1.0], mode="reversed")
    assert exact["exact"] and all(m["holds"] for m in exact["maximal_margins"])

    ui = rclt.ui_diagnostic(chain, f, [20, 80], [1.0, 4.0], 500, seed=2)
    assert len(ui["tail_profile"]) == 2

    text = chain.to_json(f)
    back, g = rclt.Chain.from_json(text)
    assert json.loads(text)["kind"] == "kernel"
    assert max(abs(a - b) for a, b in zip(back.stationary, chain.stationary)) <= 1e-15
    assert g == f

    flip = rclt.Chain.random_walk([[0.0, 1.0], [1.0, 0.0]])
    try:
        rclt.clt(flip, [1.0, -1.0], 10, 10, seed=0)
    except rclt.RcltError as e:
        assert "degenerate" in str(e).lower(), e
    else:
        raise AssertionError("flip chain should be rejected")

    try:
        rclt.Chain([[0.5, 0.5], [0.1, 0.8]])
    except rclt.RcltError:
        pass
    else:
        raise AssertionError("non-stochastic kernel accepted")

    metro = rclt.Chain.metropolis([0.5, 0.3, 0.2], [[1 / 3] * 3] * 3)
    assert not math.isnan(metro.absolute_spectral_gap())
    print("smoke test passed")


if __name__ == "__main__":
    main()
