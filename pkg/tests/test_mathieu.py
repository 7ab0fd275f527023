"""Special-function kernels against independent oracles.

Oracles used here: an mpmath high-precision ascending power series for
Bessel J (different algorithm, different arithmetic), dense first-principles
recurrence matrices for the angular eigenproblem, hyperbolic-series and
scipy evaluations plus the defining ODEs for the radial functions.
"""

import math

import mpmath as mp
import numpy as np
import pytest
import scipy.special as sp

from corralsim.mathieu import (
    ARG_MAX,
    AngularSolution,
    DomainError,
    ModeSpec,
    angular_eval,
    angular_solve,
    bessel_j,
    bessel_table,
    radial_eval,
)

# Frozen from the power-series bisection oracle below (re-derived in
# test_first_zero_of_j0): first positive zero of J0.
J0_FIRST_ZERO = 2.4048255576957728

SE1 = ModeSpec(order=1, parity="odd", radial_index=5)
CE4 = ModeSpec(order=4, parity="even", radial_index=4)

# Characteristic value of the se1 class at q = 20.6638, frozen from the dense
# M=200 first-principles oracle in test_char_value_against_large_matrix_oracle.
B1_AT_206638 = -32.49363163732699


def bessel_power_series(n: int, x: float) -> float:
    """Ascending series in 60-digit arithmetic; no cancellation possible."""
    with mp.workdps(60):
        xm = mp.mpf(x)
        term = (xm / 2) ** n / mp.factorial(n)
        acc = mp.mpf(0)
        for m in range(140):
            acc += term
            term *= -(xm / 2) ** 2 / ((m + 1) * (m + 1 + n))
        return float(acc)


class TestBesselJ:
    def test_j0_at_zero(self):
        assert bessel_j(0, 0.0) == 1.0

    def test_jn_at_zero(self):
        assert bessel_j(3, 0.0) == 0.0

    def test_first_zero_of_j0(self):
        # re-derive the zero by bisection on the independent power series
        lo, hi = 2.0, 3.0
        flo = bessel_power_series(0, lo)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            fm = bessel_power_series(0, mid)
            if flo * fm <= 0:
                hi = mid
            else:
                lo, flo = mid, fm
        zero = 0.5 * (lo + hi)
        assert zero == pytest.approx(J0_FIRST_ZERO, abs=1e-12)
        assert abs(bessel_j(0, J0_FIRST_ZERO)) <= 1e-9

    @pytest.mark.parametrize("order", [0, 1, 7, 23, 41, 60])
    @pytest.mark.parametrize("arg", [0.003, 0.04, 0.9, 2.7, 7.99, 8.01, 13.6, 24.9, 29.5])
    def test_against_power_series_oracle(self, order, arg):
        ref = bessel_power_series(order, arg)
        mine = bessel_j(order, arg)
        assert abs(mine - ref) <= max(1e-14, 1e-10 * abs(ref))

    def test_against_scipy_dense(self):
        args = np.concatenate(
            [np.linspace(0.001, 0.049, 20), np.linspace(0.05, ARG_MAX - 0.05, 500)]
        )
        table = bessel_table(args, 60)
        for n in range(0, 61, 3):
            ref = sp.jv(n, args)
            err = np.abs(table[n] - ref)
            big = np.abs(ref) > 1e-13
            assert np.all(err[big] <= 1e-10 * np.abs(ref[big]))
            assert np.all(err[~big] <= 1e-13)

    def test_three_term_recurrence(self):
        args = np.array([0.02, 0.3, 1.7, 4.9, 8.0, 12.5, 19.0, 24.9, 29.0])
        table = bessel_table(args, 60)
        for n in range(1, 60):
            lhs = table[n - 1] + table[n + 1]
            rhs = (2.0 * n / args) * table[n]
            scale = np.abs(table[n - 1]) + np.abs(table[n + 1]) + np.abs(rhs)
            assert np.all(np.abs(lhs - rhs) <= 1e-10 * scale + 1e-300)

    @pytest.mark.parametrize(
        "order,arg", [(-1, 1.0), (61, 1.0), (3.5, 1.0), (0, -0.1), (0, 30.5)]
    )
    def test_domain_errors(self, order, arg):
        with pytest.raises(DomainError):
            bessel_j(order, arg)


def dense_recurrence_matrix(order: int, parity: str, q: float, M: int) -> np.ndarray:
    """First-principles recurrence matrix (dense, unscaled constant row),
    independent of the production tridiagonal assembly."""
    T = np.zeros((M, M))
    if parity == "even" and order % 2 == 0:
        ks = 2 * np.arange(M)
        for r, k in enumerate(ks):
            T[r, r] = k * k
            if r + 1 < M:
                T[r, r + 1] = q
            if r - 1 >= 0:
                T[r, r - 1] = 2 * q if r == 1 else q
    else:
        ks = 2 * np.arange(M) + (1 if order % 2 == 1 else 2)
        for r, k in enumerate(ks):
            T[r, r] = k * k
            if r + 1 < M:
                T[r, r + 1] = q
            if r - 1 >= 0:
                T[r, r - 1] = q
        if order % 2 == 1:
            T[0, 0] += q if parity == "even" else -q
    return T


class TestAngularSolve:
    def test_small_q_limit_ce4(self):
        sol = angular_solve(CE4, 1e-6)
        idx = int(np.flatnonzero(sol.harmonics == 4)[0])
        assert sol.coeffs[idx] == pytest.approx(1.0, abs=1e-5)
        others = np.delete(sol.coeffs, idx)
        assert np.max(np.abs(others)) < 1e-5
        assert sol.char_value == pytest.approx(16.0, abs=1e-5)

    def test_small_q_limit_se1(self):
        sol = angular_solve(SE1, 1e-6)
        idx = int(np.flatnonzero(sol.harmonics == 1)[0])
        assert sol.coeffs[idx] == pytest.approx(1.0, abs=1e-5)
        assert sol.char_value == pytest.approx(1.0, abs=1e-5)

    def test_char_value_against_large_matrix_oracle(self):
        # dense, first-principles M=200 eigenproblem (distinct code path)
        T = dense_recurrence_matrix(1, "odd", 20.6638, 200)
        oracle = np.sort(np.linalg.eigvals(T).real)[0]
        assert oracle == pytest.approx(B1_AT_206638, abs=1e-9)
        sol = angular_solve(SE1, 20.6638, M=50)
        assert sol.char_value == pytest.approx(oracle, abs=1e-8)

    @pytest.mark.parametrize(
        "spec,q,scipy_fn",
        [
            (SE1, 20.6638, lambda q: sp.mathieu_b(1, q)),
            (SE1, 5.0, lambda q: sp.mathieu_b(1, q)),
            (CE4, 21.4267, lambda q: sp.mathieu_a(4, q)),
            (CE4, 3.0, lambda q: sp.mathieu_a(4, q)),
        ],
    )
    def test_char_value_against_scipy(self, spec, q, scipy_fn):
        sol = angular_solve(spec, q)
        assert sol.char_value == pytest.approx(scipy_fn(q), abs=1e-9)

    @pytest.mark.parametrize("spec,q", [(SE1, 20.6638), (CE4, 21.4267)])
    def test_eigen_residual_first_principles(self, spec, q):
        # recurrence matrix times (natural) coefficients = char value times them
        sol = angular_solve(spec, q)
        T = dense_recurrence_matrix(spec.order, spec.parity, q, sol.coeffs.size)
        resid = T @ sol.coeffs - sol.char_value * sol.coeffs
        assert np.max(np.abs(resid)) <= 1e-10 * np.max(np.abs(sol.coeffs))

    @pytest.mark.parametrize("spec,q", [(SE1, 20.6638), (CE4, 21.4267), (CE4, 29.0)])
    def test_scaled_vector_unit_norm(self, spec, q):
        sol = angular_solve(spec, q)
        v = sol.coeffs.copy()
        if spec.parity == "even" and spec.order % 2 == 0:
            v[0] *= math.sqrt(2.0)
        assert np.dot(v, v) == pytest.approx(1.0, rel=1e-12)

    @pytest.mark.parametrize("spec,q", [(SE1, 20.6638), (CE4, 21.4267)])
    def test_trailing_coefficients_decay(self, spec, q):
        sol = angular_solve(spec, q, M=50)
        assert abs(sol.coeffs[-1]) < 1e-10 * np.max(np.abs(sol.coeffs))

    def test_domain_checks(self):
        with pytest.raises(DomainError):
            angular_solve(SE1, 0.0)
        with pytest.raises(DomainError):
            angular_solve(SE1, 50.5)
        with pytest.raises(ValueError):
            angular_solve(SE1, 5.0, M=40)


def second_derivative_5pt(f, x, h=1e-4):
    return (-f(x - 2 * h) + 16 * f(x - h) - 30 * f(x) + 16 * f(x + h) - f(x + 2 * h)) / (
        12 * h * h
    )


class TestAngularEval:
    def test_odd_vanishes_at_zero(self):
        sol = angular_solve(SE1, 20.6638)
        assert angular_eval(sol, 0.0) == 0.0

    def test_even_symmetry(self):
        sol = angular_solve(CE4, 21.4267)
        for eta in np.linspace(0.1, 3.0, 15):
            assert angular_eval(sol, eta) == pytest.approx(angular_eval(sol, -eta), rel=1e-14)

    def test_se1_reflection_identity(self):
        # sin((2k+1)(pi - eta)) = sin((2k+1) eta) termwise
        sol = angular_solve(SE1, 20.6638)
        rng = np.random.default_rng(2)
        for eta in rng.uniform(-math.pi, math.pi, 20):
            assert angular_eval(sol, math.pi - eta) == pytest.approx(
                angular_eval(sol, eta), rel=1e-12, abs=1e-12
            )

    @pytest.mark.parametrize("spec,q", [(SE1, 21.988057336), (CE4, 21.429423470)])
    def test_angular_ode_residual(self, spec, q):
        sol = angular_solve(spec, q)
        f = lambda eta: angular_eval(sol, eta)
        etas = np.random.default_rng(7).uniform(-math.pi, math.pi, 50)
        ymax = np.max(np.abs(angular_eval(sol, np.linspace(-math.pi, math.pi, 720))))
        for eta in etas:
            resid = second_derivative_5pt(f, eta) + (
                sol.char_value - 2 * sol.q * math.cos(2 * eta)
            ) * f(eta)
            assert abs(resid) <= 1e-5 * ymax

    def test_normalization_integral_is_pi(self):
        # 2048-node periodic trapezoid quadrature is spectrally accurate here
        etas = np.linspace(-math.pi, math.pi, 2049)[:-1]
        for spec, q in ((SE1, 20.6638), (CE4, 21.4267)):
            sol = angular_solve(spec, q)
            vals = angular_eval(sol, etas)
            integral = np.sum(vals * vals) * (2 * math.pi / 2048)
            assert integral == pytest.approx(math.pi, rel=1e-10)

    def test_cross_orthogonality(self):
        etas = np.linspace(-math.pi, math.pi, 2049)[:-1]
        se = angular_eval(angular_solve(SE1, 20.6638), etas)
        ce = angular_eval(angular_solve(CE4, 21.4267), etas)
        cross = np.sum(se * ce) * (2 * math.pi / 2048)
        assert abs(cross) <= 1e-10


def radial_reference(sol: AngularSolution, xi: float, nterms: int) -> float:
    """Shifted cross-product series with scipy Bessel backend and arbitrary
    truncation; used as the refinement oracle for radial_eval."""

    def J(r, x):
        if r < 0:
            return (-1) ** (-r) * sp.jv(-r, x)
        return sp.jv(r, x)

    n, parity = sol.order, sol.parity
    if parity == "even":
        m, sigma, pair = (n // 2, 0, 1.0) if n % 2 == 0 else ((n - 1) // 2, 1, 1.0)
    else:
        m, sigma, pair = ((n - 1) // 2, 1, -1.0) if n % 2 == 1 else ((n - 2) // 2, 2, -1.0)
    h = math.sqrt(sol.q)
    u1, u2 = h * math.exp(-xi), h * math.exp(xi)
    idx = int(np.flatnonzero(sol.harmonics == n)[0])
    acc = 0.0
    for ell in range(min(nterms, sol.coeffs.size)):
        t = J(ell - m, u1) * J(ell + m + sigma, u2) + pair * J(ell + m + sigma, u1) * J(
            ell - m, u2
        )
        acc += (-1.0) ** (ell - m) * sol.coeffs[ell] * 0.5 * t
    return acc / sol.coeffs[idx]


class TestRadialEval:
    @pytest.mark.parametrize("q", [20.6638, 21.988057336, 5.0])
    def test_odd_vanishes_at_axis(self, q):
        sol = angular_solve(SE1, q)
        assert abs(radial_eval(sol, 0.0)) <= 1e-12

    @pytest.mark.parametrize("spec,q", [(SE1, 21.988057336), (CE4, 21.429423470)])
    def test_truncation_50_vs_200(self, spec, q, geom):
        sol50 = angular_solve(spec, q, M=50)
        sol250 = angular_solve(spec, q, M=250)
        rng = np.random.default_rng(13)
        for xi in rng.uniform(0.0, geom.xi0, 20):
            mine = radial_eval(sol50, xi)
            ref = radial_reference(sol250, xi, 200)
            assert abs(mine - ref) <= 1e-10 * max(abs(ref), 1e-6)

    @pytest.mark.parametrize(
        "spec,q",
        [
            (SE1, 21.988057336),
            (CE4, 21.429423470),
            (ModeSpec(0, "even", 1), 5.8831),
            (ModeSpec(3, "even", 1), 11.6413),
            (ModeSpec(2, "odd", 1), 10.1824),
            (ModeSpec(2, "even", 1), 9.4247),
        ],
    )
    def test_matches_hyperbolic_series_shape(self, spec, q):
        # independent small-xi representation: ce(i xi) / se(i xi)/i
        sol = angular_solve(spec, q)
        ks = sol.harmonics.astype(float)

        def hyperbolic(xi):
            if spec.parity == "even":
                return float(np.sum(sol.coeffs * np.cosh(ks * xi)))
            return float(np.sum(sol.coeffs * np.sinh(ks * xi)))

        r_series = radial_eval(sol, 0.3) / radial_eval(sol, 0.55)
        r_hyp = hyperbolic(0.3) / hyperbolic(0.55)
        assert r_series == pytest.approx(r_hyp, rel=1e-8)

    @pytest.mark.parametrize("spec,q", [(SE1, 21.988057336), (CE4, 21.429423470)])
    def test_radial_ode_residual(self, spec, q):
        sol = angular_solve(spec, q)
        f = lambda xi: radial_eval(sol, xi)
        for xi in (0.35, 0.8, 1.15):
            resid = second_derivative_5pt(f, xi) - (
                sol.char_value - 2 * sol.q * math.cosh(2 * xi)
            ) * f(xi)
            scale = abs(sol.char_value - 2 * sol.q * math.cosh(2 * xi)) * max(abs(f(xi)), 0.01)
            assert abs(resid) <= 1e-5 * scale

    @pytest.mark.parametrize(
        "spec,q,fn",
        [
            (SE1, 21.988057336, lambda q, x: sp.mathieu_modsem1(1, q, x)[0]),
            (CE4, 21.429423470, lambda q, x: sp.mathieu_modcem1(4, q, x)[0]),
        ],
    )
    def test_shape_matches_scipy(self, spec, q, fn):
        # proportional to scipy's first-kind radial functions: constant ratio
        sol = angular_solve(spec, q)
        xis = np.array([0.3, 0.6, 0.9, 1.2])
        ratios = np.array([radial_eval(sol, x) / fn(q, x) for x in xis])
        assert np.std(ratios) <= 1e-6 * abs(np.mean(ratios))

    def test_domain_cutoffs(self):
        sol = angular_solve(SE1, 21.988057336)
        with pytest.raises(DomainError):
            radial_eval(sol, 2.5)       # sqrt(q) e^xi beyond Bessel range
        with pytest.raises(DomainError):
            radial_eval(sol, -0.1)
        big = angular_solve(SE1, 21.988057336, M=70)
        with pytest.raises(DomainError):
            radial_eval(big, 0.5)       # needs Bessel orders beyond validated max
