"""Smoke test for the bregman_cs extension module.

Build and install first:  pip install --no-build-isolation ./crates/python
"""

import math

import bregman_cs as bc


def close(a, b, tol):
    return abs(a - b) <= tol * (1.0 + abs(b))


def main():
    # potential and its gradient pair
    for v in (-3.0, -0.2, 0.0, 0.5, 7.0):
        u = bc.gradient("shifted-entropy", v)
        assert close(bc.gradient_inverse("shifted-entropy", u), v, 1e-12)
    assert close(bc.potential("shifted-entropy", 0.0), 0.0, 1e-15)
    assert bc.bregman_distance("euclidean", [1.0, 2.0], [1.0, 2.0]) == 0.0

    # one projection lands on its hyperplane
    p = bc.project("shifted-entropy", [0.3, -1.0, 2.0], [1.0, 2.0, -0.5], 4.0)
    dot = sum(a * b for a, b in zip(p.point, [1.0, 2.0, -0.5]))
    assert close(dot, 4.0, 1e-9), dot

    # planted sparse recovery
    n, m, k = 64, 24, 3
    s_star = bc.make_random_sparse(n, k, 1e7, 1e8, 5)
    ens = bc.make_gaussian_ensemble(n, m, 105)
    y = ens.measure(s_star)
    s_hat, trace = bc.solve("shifted-entropy", ens.theta, y, max_sweeps=2000)
    report = bc.evaluate(s_hat, s_star, ens, y)
    assert trace.sweeps_run == len(trace.max_residual)
    print(f"shifted-entropy: {trace.termination} after {trace.sweeps_run} sweeps, "
          f"error {report.rel_l2_error:.2e}, recall {report.support_recall:.2f}")

    pinv = bc.evaluate(bc.pseudo_inverse_solve(ens, y), s_star, ens, y)
    print(f"pseudo-inverse: error {pinv.rel_l2_error:.2e}")

    # online solver, one row at a time
    online = bc.OnlineSolver(n, "shifted-entropy")
    for row, value in zip(ens.theta, y):
        online.append(row, value, 0)
    assert online.projections == m
    settled = online.settle()
    print(f"online: {settled.termination}, max residual {online.max_residual():.2e}")

    # DCT round trip and the cusp
    x, s = bc.make_cusp(128, 12)
    back = bc.dct_inverse(bc.dct_forward(x))
    assert max(abs(a - b) for a, b in zip(back, x)) < 1e-12
    assert sum(1 for c in s if c != 0.0) == 12

    try:
        bc.project("positive-entropy", [1.0, 1.0], [1.0, 1.0], -1.0)
    except RuntimeError:
        pass
    else:
        raise AssertionError("infeasible projection did not raise")
    try:
        bc.gradient("no-such-kind", 1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown kind did not raise")

    assert math.isfinite(report.residual_inf)
    print("smoke: ok")


if __name__ == "__main__":
    main()
