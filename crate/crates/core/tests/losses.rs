use ovi_core::family::MeanFieldGaussian;
use ovi_core::losses::{expected_loss, expected_loss_grad, mc_estimate, point_loss, DataExample, LossKind};
use ovi_core::rng::SeededStream;
use proptest::prelude::*;

const CONVEX: [LossKind; 2] = [LossKind::Hinge, LossKind::SquaredLinear];

fn instance(kind: LossKind) -> impl Strategy<Value = (MeanFieldGaussian, DataExample)> {
    (1usize..6).prop_flat_map(move |d| {
        (
            prop::collection::vec(-2.0..2.0f64, d),
            prop::collection::vec(0.05..1.5f64, d),
            prop::collection::vec(-2.0..2.0f64, d),
            prop::bool::ANY,
            -2.0..2.0f64,
        )
            .prop_map(move |(m, s, x, pos, yr)| {
                let y = if kind.is_classification() {
                    if pos { 1.0 } else { -1.0 }
                } else {
                    yr
                };
                (MeanFieldGaussian::new(m, s).unwrap(), DataExample::new(x, y))
            })
    })
}

fn fd_relative_error(kind: LossKind, q: &MeanFieldGaussian, ex: &DataExample) -> f64 {
    let h = 1e-5;
    let g = expected_loss_grad(kind, q, ex).unwrap();
    let mut diff = 0.0;
    let mut norm = 0.0;
    for which in 0..2 {
        for j in 0..q.dim() {
            let at = |delta: f64| {
                let (mut m, mut s) = (q.m().to_vec(), q.sigma().to_vec());
                if which == 0 { m[j] += delta } else { s[j] += delta }
                expected_loss(kind, &MeanFieldGaussian::new(m, s).unwrap(), ex).unwrap()
            };
            let fd = (at(h) - at(-h)) / (2.0 * h);
            let a = if which == 0 { g.g_m[j] } else { g.g_sigma[j] };
            diff += (a - fd).powi(2);
            norm += fd * fd;
        }
    }
    diff.sqrt() / norm.sqrt().max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn jensen_for_convex_kinds((q, ex) in instance(LossKind::Hinge), kind_ix in 0usize..2) {
        let kind = CONVEX[kind_ix];
        let ex = if kind.is_classification() { ex } else { DataExample::new(ex.x.clone(), 0.5 * ex.y) };
        let point = point_loss(kind, q.m(), &ex).unwrap();
        prop_assert!(point <= expected_loss(kind, &q, &ex).unwrap() + 1e-12);
    }

    #[test]
    fn hinge_gradient_matches_differences((q, ex) in instance(LossKind::Hinge)) {
        let e = fd_relative_error(LossKind::Hinge, &q, &ex);
        prop_assert!(e <= 1e-5, "relative error {e}");
    }

    #[test]
    fn squared_gradient_matches_differences((q, ex) in instance(LossKind::SquaredLinear)) {
        let e = fd_relative_error(LossKind::SquaredLinear, &q, &ex);
        prop_assert!(e <= 1e-5, "relative error {e}");
    }

    #[test]
    fn hinge_nondecreasing_in_sigma((q, ex) in instance(LossKind::Hinge)) {
        let g = expected_loss_grad(LossKind::Hinge, &q, &ex).unwrap();
        prop_assert!(g.g_sigma.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn vanishing_sigma_recovers_point_loss((q, ex) in instance(LossKind::Hinge), kind_ix in 0usize..2) {
        let kind = CONVEX[kind_ix];
        let narrow = MeanFieldGaussian::new(q.m().to_vec(), vec![1e-6; q.dim()]).unwrap();
        let gap = expected_loss(kind, &narrow, &ex).unwrap() - point_loss(kind, q.m(), &ex).unwrap();
        prop_assert!(gap.abs() <= 1e-4, "gap {gap}");
    }
}

fn mc_agrees(kind: LossKind, q: &MeanFieldGaussian, ex: &DataExample) {
    let est = mc_estimate(kind, q, ex, 1_000_000, 17).unwrap();
    let exact_loss = expected_loss(kind, q, ex).unwrap();
    assert!((est.loss - exact_loss).abs() <= 3.0 * est.loss_se, "loss {} vs {exact_loss}", est.loss);
    let exact = expected_loss_grad(kind, q, ex).unwrap();
    for j in 0..q.dim() {
        assert!((est.grad.g_m[j] - exact.g_m[j]).abs() <= 3.0 * est.g_m_se[j], "g_m[{j}]");
        assert!((est.grad.g_sigma[j] - exact.g_sigma[j]).abs() <= 3.0 * est.g_sigma_se[j], "g_sigma[{j}]");
    }
}

#[test]
fn monte_carlo_is_unbiased_for_squared_linear() {
    let q = MeanFieldGaussian::new(vec![0.4, -0.2, 1.0], vec![0.5, 0.9, 0.3]).unwrap();
    mc_agrees(LossKind::SquaredLinear, &q, &DataExample::new(vec![1.0, -0.5, 0.3], 0.7));
}

#[test]
fn monte_carlo_is_unbiased_for_hinge() {
    let q = MeanFieldGaussian::new(vec![0.2, 0.1], vec![0.6, 0.8]).unwrap();
    mc_agrees(LossKind::Hinge, &q, &DataExample::new(vec![1.0, -0.5], 1.0));
}

#[test]
fn network_has_no_closed_form() {
    let kind = LossKind::SquaredNn { hidden_width: 3 };
    let d = kind.param_dim(2);
    let q = MeanFieldGaussian::isotropic(vec![0.1; d], 0.3).unwrap();
    let ex = DataExample::new(vec![0.5, -1.0], 0.2);
    assert!(expected_loss(kind, &q, &ex).is_err());
    let mut rng = SeededStream::new(3);
    let a = mc_estimate(kind, &q, &ex, 1000, rng.next_u64()).unwrap();
    assert!(a.loss.is_finite() && a.grad.is_finite());
}
