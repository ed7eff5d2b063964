"""Benchmark the compiled kernels against the pure-numpy fallback.

Imports both implementations directly (bypassing the import-time switch in
flexaft._backend) so a single process can time the two side by side. The
workload is a simulated dataset from the bundled weibull-baseline scenario,
evaluated at a spline fit's converged parameters, which is what the Newton
loop spends its time on.

Run:  python3 benchmarks/bench_kernels.py [--n 20000] [--repeats 30]
"""

import argparse
import time

import numpy as np

from flexaft import _kernels_py
from flexaft.estimation import FitOptions, fit
from flexaft.models import ModelSpec
from flexaft.simulation import (
    default_scenario_files,
    read_scenario_config,
    sample_mixture_aft,
)

try:
    from flexaft import _kernels
except ImportError:
    _kernels = None


def build_workload(n, df, seed=42):
    """Simulate a dataset, fit once, and return kernel-call arguments."""
    scenario = read_scenario_config(default_scenario_files()[3])
    data = sample_mixture_aft(scenario.params, n=n, seed=seed)
    spec = ModelSpec(family="fpaft", covariates=("x",), df=df)
    fitted = fit(spec, data, FitOptions())
    model = fitted.model
    p = len(spec.covariates)
    log_entry = np.full(data.n, -np.inf)
    has_entry = data.entry > 0
    log_entry[has_entry] = np.log(data.entry[has_entry])
    # nudge off the optimum so the score is O(n), not rounding noise;
    # beta and the linear spline term keep s'(u) > 0 when increased
    theta = fitted.theta.copy()
    theta[p] += 0.05
    theta[p + 1] += 0.05
    theta[:p] += 0.05
    args = (
        np.log(data.time),
        log_entry,
        data.event,
        data.design_matrix(spec.covariates),
        theta[:p],
        theta[p:],
        model.knots.as_array(),
    )
    u = args[0] - args[3] @ args[4]
    return args, u, model.knots.as_array()


def best_of(fn, repeats):
    """Best wall time over `repeats` calls, in seconds."""
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def check_parity(ll_args, u, knots):
    """Both implementations must agree to float64 working precision."""
    ll_c, score_c = _kernels.fpaft_loglik_score(*ll_args)
    ll_p, score_p = _kernels_py.fpaft_loglik_score(*ll_args)
    assert abs(ll_c - ll_p) <= 1e-10 * (1.0 + abs(ll_p)), (ll_c, ll_p)
    np.testing.assert_allclose(score_c, score_p, rtol=1e-9, atol=1e-10)
    for order in (0, 1, 2):
        np.testing.assert_allclose(
            _kernels.spline_design(u, knots, order),
            _kernels_py.spline_design(u, knots, order),
            rtol=1e-12,
            atol=1e-12,
        )


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=20000, help="dataset rows")
    parser.add_argument("--df", type=int, default=3, help="spline df")
    parser.add_argument("--repeats", type=int, default=30)
    args = parser.parse_args()

    if _kernels is None:
        raise SystemExit(
            "compiled kernels not built; run pip install -e . first"
        )

    ll_args, u, knots = build_workload(args.n, args.df)
    check_parity(ll_args, u, knots)
    print(f"parity ok (n={args.n}, df={args.df})")
    print()

    rows = [
        (
            "fpaft_loglik_score",
            lambda: _kernels.fpaft_loglik_score(*ll_args),
            lambda: _kernels_py.fpaft_loglik_score(*ll_args),
        ),
        (
            "spline_design order=0",
            lambda: _kernels.spline_design(u, knots, 0),
            lambda: _kernels_py.spline_design(u, knots, 0),
        ),
        (
            "spline_design order=1",
            lambda: _kernels.spline_design(u, knots, 1),
            lambda: _kernels_py.spline_design(u, knots, 1),
        ),
    ]
    width = max(len(name) for name, _, _ in rows)
    header = (
        f"{'kernel':<{width}}  {'compiled':>10}  {'python':>10}  "
        f"{'speedup':>7}"
    )
    print(header)
    print("-" * len(header))
    for name, run_c, run_p in rows:
        t_c = best_of(run_c, args.repeats)
        t_p = best_of(run_p, args.repeats)
        print(
            f"{name:<{width}}  {t_c * 1e3:>8.3f}ms  {t_p * 1e3:>8.3f}ms"
            f"  {t_p / t_c:>6.1f}x"
        )


if __name__ == "__main__":
    main()
