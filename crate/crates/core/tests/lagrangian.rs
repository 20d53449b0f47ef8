use lrb_core::config::{bundled, ExperimentConfig};
use lrb_core::experiment::compute_bound;
use lrb_core::lagrange::Relaxation;
use lrb_core::value::GsvaOptions;
use lrb_core::{ArmParams, Belief, BeliefGrid, DiscountFactor};
use proptest::prelude::*;

fn arm() -> impl Strategy<Value = ArmParams> {
    (0.0..=1.0f64, 0.0..=1.0f64, 0.0..0.4f64, 0.6..1.0f64, 0.0..0.4f64, 0.6..1.0f64, 1u32..8)
        .prop_map(|(p00, p10, rho0, rho1, r0, r1, k)| ArmParams::new(p00, p10, rho0, rho1, r0, r1, k).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn relaxed_value_is_convex_with_its_minimum_below_every_sweep_point(
        arms in prop::collection::vec(arm(), 2..5),
        beliefs in prop::collection::vec(0.0..=1.0f64, 5),
        beta in 0.6..0.95f64,
    ) {
        let grid = BeliefGrid::new(0.02).unwrap();
        let start: Vec<Belief> = beliefs[..arms.len()].iter().map(|&b| Belief::new(b).unwrap()).collect();
        let opts = GsvaOptions { tol: 1e-9, ..GsvaOptions::default() };
        let relax = Relaxation::new(&arms, &start, DiscountFactor::new(beta).unwrap(), &grid, &opts).unwrap();
        let top = relax.lambda_ceiling();
        let sweep: Vec<f64> = (0..20).map(|j| relax.value(top * j as f64 / 19.0).unwrap()).collect();
        let scale = sweep.iter().cloned().fold(0.0, f64::max);
        for w in sweep.windows(3) {
            prop_assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-3 * scale);
        }
        let (_, best) = relax.golden_section(1e-6).unwrap();
        prop_assert!(sweep.iter().all(|v| *v >= best - 1e-9 * scale));
    }
}

#[test]
fn example1_bound() {
    let cfg: ExperimentConfig = bundled::EXAMPLE1.parse().unwrap();
    let report = compute_bound(&cfg).unwrap();
    let lb = report.result.bound;
    assert!((lb - 72.0).abs() <= 2.0, "bound {lb}");
    // the descent and the golden-section search agree on the minimum
    assert!((lb - report.golden_bound).abs() <= 0.01 * lb, "{lb} vs {}", report.golden_bound);
}
