mod common;

use common::*;
use properlearn::hermite::{
    basis_size, binomial, gradient_coeff_matrix, gradient_energy, hermite_eval, poly_eval, HermiteBasis, PolyCoeffs,
};
use proptest::prelude::*;

#[test]
fn univariate_values_match_explicit_formula() {
    for n in 0..=14u32 {
        for &x in &[-3.7, -1.0, -0.2, 0.0, 0.5, 2.2, 4.1] {
            let a = hermite_eval(n as usize, x);
            let b = hermite_explicit(n, x);
            assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "n={n} x={x}: {a} vs {b}");
        }
    }
}

#[test]
fn univariate_orthonormality_by_simpson() {
    for i in 0..=8u32 {
        for j in 0..=8u32 {
            let e = gauss_expect(|t| hermite_explicit(i, t) * hermite_explicit(j, t), &[]);
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((e - want).abs() < 1e-9, "<H_{i}, H_{j}> = {e}");
        }
    }
}

#[test]
fn layout_and_size() {
    for d in 1..=4 {
        for k in 0..=5 {
            let basis = HermiteBasis::new(d, k).unwrap();
            assert_eq!(basis.len(), basis_size(d, k));
            assert_eq!(basis.len() as u128, binomial((d + k) as u64, k as u64));
            let ours: Vec<Vec<u32>> = basis.indices().iter().map(|a| a.entries().to_vec()).collect();
            assert_eq!(ours, multi_indices(d, k));
        }
    }
}

#[test]
fn derivative_factor_univariate() {
    // H_j' = sqrt(j) H_{j-1}, checked with central differences of the explicit formula
    for j in 1..=10u32 {
        for &x in &[-2.0, -0.3, 0.7, 1.9] {
            let h = 1e-4;
            let fd = (hermite_explicit(j, x + h) - hermite_explicit(j, x - h)) / (2.0 * h);
            let want = (j as f64).sqrt() * hermite_explicit(j - 1, x);
            assert!((fd - want).abs() < 1e-5 * (1.0 + want.abs()), "j={j} x={x}");
        }
    }
}

fn poly_strategy() -> impl Strategy<Value = PolyCoeffs> {
    (1usize..=3, 0usize..=4).prop_flat_map(|(d, k)| {
        let m = basis_size(d, k);
        prop::collection::vec(-1.0f64..1.0, m).prop_map(move |c| PolyCoeffs::new(d, k, c).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn features_match_oracle(d in 1usize..=3, k in 0usize..=5, x in prop::collection::vec(-3.0f64..3.0, 3)) {
        let x = &x[..d];
        let ours = HermiteBasis::new(d, k).unwrap().features(x).unwrap();
        let theirs = features(x, k);
        for (a, b) in ours.iter().zip(&theirs) {
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn evaluation_matches_oracle(p in poly_strategy(), x in prop::collection::vec(-3.0f64..3.0, 3)) {
        let x = &x[..p.dim()];
        let want: f64 = features(x, p.degree()).iter().zip(p.coeffs()).map(|(f, c)| f * c).sum();
        let got = poly_eval(&p, x).unwrap();
        prop_assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()));
    }

    /// d_i P(x) equals sum_beta A[i, beta] H_beta(x).
    #[test]
    fn gradient_matrix_matches_finite_differences(p in poly_strategy(), x in prop::collection::vec(-2.0f64..2.0, 3)) {
        prop_assume!(p.degree() >= 1);
        let d = p.dim();
        let x = &x[..d];
        let a = gradient_coeff_matrix(&p);
        let lower = features(x, p.degree() - 1);
        let eval = |y: &[f64]| -> f64 { features(y, p.degree()).iter().zip(p.coeffs()).map(|(f, c)| f * c).sum() };
        for i in 0..d {
            let h = 1e-4;
            let mut yp = x.to_vec();
            let mut ym = x.to_vec();
            yp[i] += h;
            ym[i] -= h;
            let fd = (eval(&yp) - eval(&ym)) / (2.0 * h);
            let from_a: f64 = (0..a.cols()).map(|b| a.matrix()[(i, b)] * lower[b]).sum();
            prop_assert!((fd - from_a).abs() < 1e-5 * (1.0 + fd.abs()), "i={} fd={} A={}", i, fd, from_a);
        }
    }

    /// ||A||_F^2 = E||grad P||^2 = sum |alpha| c_alpha^2 (Parseval on the gradient).
    #[test]
    fn gradient_energy_identity(p in poly_strategy()) {
        let a = gradient_coeff_matrix(&p);
        let fro = a.matrix().iter().map(|v| v * v).sum::<f64>();
        let direct: f64 = multi_indices(p.dim(), p.degree())
            .iter()
            .zip(p.coeffs())
            .map(|(al, c)| al.iter().sum::<u32>() as f64 * c * c)
            .sum();
        prop_assert!((fro - direct).abs() < 1e-12 * (1.0 + direct));
        prop_assert!((gradient_energy(&p) - direct).abs() < 1e-12 * (1.0 + direct));
    }

    #[test]
    fn text_round_trip(p in poly_strategy()) {
        let q = PolyCoeffs::from_text(&p.to_text()).unwrap();
        prop_assert_eq!(q, p);
    }
}

/// E[P^2] by a product Simpson rule in two variables equals sum c^2.
#[test]
fn parseval_two_variables_by_simpson() {
    let mut r = rng(11);
    let k = 3;
    let idx = multi_indices(2, k);
    let c: Vec<f64> = gaussian_vec(&mut r, idx.len());
    let p = PolyCoeffs::new(2, k, c.clone()).unwrap();
    // E_x E_y [P(x, y)^2]: inner integral as a function of x
    let e2 = gauss_expect_step(
        |s| {
            gauss_expect_step(
                |t| {
                    let v: f64 = idx.iter().zip(&c).map(|(a, ci)| ci * hermite_product(a, &[s, t])).sum();
                    v * v
                },
                &[],
                0.02,
            )
        },
        &[],
        0.02,
    );
    assert!((e2 - p.norm_sq()).abs() < 1e-8 * (1.0 + p.norm_sq()), "{e2} vs {}", p.norm_sq());
}
