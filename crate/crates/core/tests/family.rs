use ovi_core::evaluation::alpha_estimate;
use ovi_core::family::{
    from_expectation, from_natural, h_scalar, kl_divergence, project_box, to_expectation, to_natural, BoxConstraints,
    GaussianPrior, MeanFieldGaussian,
};
use ovi_core::rng::SeededStream;
use proptest::prelude::*;

fn gaussian(d: usize) -> impl Strategy<Value = MeanFieldGaussian> {
    (
        prop::collection::vec(-5.0..5.0f64, d),
        prop::collection::vec(0.05..4.0f64, d),
    )
        .prop_map(|(m, s)| MeanFieldGaussian::new(m, s).unwrap())
}

fn pair() -> impl Strategy<Value = (MeanFieldGaussian, MeanFieldGaussian)> {
    (1usize..6).prop_flat_map(|d| (gaussian(d), gaussian(d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn kl_zero_on_diagonal_positive_off_it((q, p) in pair()) {
        prop_assert!(kl_divergence(&q, &q).unwrap().abs() < 1e-12);
        let kl = kl_divergence(&q, &p).unwrap();
        if q != p {
            prop_assert!(kl > 0.0, "kl = {kl}");
        }
    }

    #[test]
    fn natural_and_expectation_roundtrips(q in (1usize..6).prop_flat_map(gaussian)) {
        let back = from_natural(&to_natural(&q)).unwrap();
        let via_mu = from_expectation(&to_expectation(&q)).unwrap();
        for j in 0..q.dim() {
            for r in [&back, &via_mu] {
                prop_assert!((r.m()[j] - q.m()[j]).abs() <= 1e-10 * (1.0 + q.m()[j].abs()));
                prop_assert!((r.sigma()[j] - q.sigma()[j]).abs() <= 1e-8 * q.sigma()[j]);
            }
        }
    }

    #[test]
    fn projection_idempotent_and_nonexpansive(
        (a, b) in pair(),
        lo in 0.01..0.5f64,
        bound in 0.5..3.0f64,
    ) {
        let bx = BoxConstraints::symmetric(a.dim(), bound, lo, 1.0).unwrap();
        let pa = project_box(&a, &bx).unwrap();
        let pb = project_box(&b, &bx).unwrap();
        prop_assert!(bx.contains(&pa));
        prop_assert_eq!(&project_box(&pa, &bx).unwrap(), &pa);
        for j in 0..a.dim() {
            prop_assert!((pa.m()[j] - pb.m()[j]).abs() <= (a.m()[j] - b.m()[j]).abs());
            prop_assert!((pa.sigma()[j] - pb.sigma()[j]).abs() <= (a.sigma()[j] - b.sigma()[j]).abs());
        }
    }
}

#[test]
fn h_identity_on_grid() {
    for i in 0..=2000 {
        let x = -10.0 + 0.01 * i as f64;
        let v = h_scalar(x) * ((1.0 + x * x).sqrt() + x);
        assert!((v - 1.0).abs() <= 1e-12, "x = {x}: {v}");
    }
}

#[test]
fn kl_matches_monte_carlo() {
    let q = MeanFieldGaussian::new(vec![0.3, -1.0], vec![0.7, 1.4]).unwrap();
    let p = MeanFieldGaussian::new(vec![0.0, 0.5], vec![1.0, 2.0]).unwrap();
    let log_density = |g: &MeanFieldGaussian, x: &[f64]| -> f64 {
        (0..g.dim())
            .map(|j| {
                let z = (x[j] - g.m()[j]) / g.sigma()[j];
                -0.5 * z * z - g.sigma()[j].ln()
            })
            .sum()
    };
    let mut rng = SeededStream::new(5);
    let n = 200_000;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n {
        let x: Vec<f64> = (0..2).map(|j| q.m()[j] + q.sigma()[j] * rng.gaussian()).collect();
        let v = log_density(&q, &x) - log_density(&p, &x);
        sum += v;
        sum_sq += v * v;
    }
    let mean = sum / n as f64;
    let se = ((sum_sq / n as f64 - mean * mean) / n as f64).sqrt();
    let exact = kl_divergence(&q, &p).unwrap();
    assert!((mean - exact).abs() <= 4.0 * se, "mc {mean} +- {se}, exact {exact}");
}

#[test]
fn alpha_one_dimensional_example() {
    let prior = GaussianPrior::new(1.0, 1).unwrap();
    let bx = BoxConstraints::new(vec![-1.0], vec![1.0], vec![0.5], vec![1.0]).unwrap();
    let a = alpha_estimate(&prior, &bx, 11).unwrap();
    assert!((a - 1.0).abs() < 1e-3, "{a}");
}

#[test]
fn alpha_refinement_and_monotonicity() {
    let prior = GaussianPrior::new(1.0, 2).unwrap();
    let bx = BoxConstraints::symmetric(2, 2.0, 0.3, 1.5).unwrap();
    let coarse = alpha_estimate(&prior, &bx, 11).unwrap();
    let fine = alpha_estimate(&prior, &bx, 21).unwrap();
    assert!(((coarse - fine) / fine).abs() <= 0.05, "{coarse} vs {fine}");

    let wide = BoxConstraints::symmetric(2, 4.0, 0.3, 3.0).unwrap();
    assert!(alpha_estimate(&prior, &wide, 11).unwrap() <= coarse + 1e-12);

    let touching = BoxConstraints::symmetric(2, 1.0, 0.0, 1.0).unwrap();
    assert!(alpha_estimate(&prior, &touching, 11).is_err());
}
