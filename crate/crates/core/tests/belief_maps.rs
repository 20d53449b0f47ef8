use lrb_core::sim::evolve_state;
use lrb_core::verify::brute_force_update;
use lrb_core::{ArmParams, Belief, Propagation};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn arm_strategy() -> impl Strategy<Value = ArmParams> {
    (0.0..=1.0f64, 0.0..=1.0f64, 0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64, 1u32..40)
        .prop_map(|(p00, p10, a, b, c, d, k)| {
            let (rho0, rho1) = (a.min(b), a.max(b));
            let (r0, r1) = (c.min(d), c.max(d));
            ArmParams::new(p00, p10, rho0, rho1, r0, r1, k).unwrap()
        })
}

fn positive(arm: ArmParams) -> ArmParams {
    let mut a = arm;
    a.p00 = arm.p00.max(arm.p10);
    a.p10 = arm.p00.min(arm.p10);
    a
}

fn negative(arm: ArmParams) -> ArmParams {
    let mut a = arm;
    a.p00 = arm.p00.min(arm.p10);
    a.p10 = arm.p00.max(arm.p10);
    a
}

/// `(gamma1, gamma0)` on a 101-point sweep of the open unit interval.
fn sweep(arm: &ArmParams) -> Vec<(f64, f64)> {
    (0..=100)
        .map(|j| {
            let pi = Belief::new(j as f64 / 100.0).unwrap();
            (
                arm.gamma1(pi).map_or(f64::NAN, |b| b.value()),
                arm.gamma0(pi).map_or(f64::NAN, |b| b.value()),
            )
        })
        .collect()
}

const TOL: f64 = 1e-9;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn positive_correlation_maps_increase_and_stay_ordered(arm in arm_strategy().prop_map(positive)) {
        prop_assume!(arm.rho0 > 0.0 && arm.rho1 < 1.0);
        let s = sweep(&arm);
        for w in s.windows(2) {
            prop_assert!(w[1].0 >= w[0].0 - TOL);
            prop_assert!(w[1].1 >= w[0].1 - TOL);
        }
        for (g1, g0) in &s {
            prop_assert!(arm.p10 - TOL <= *g1 && *g1 <= *g0 + TOL && *g0 <= arm.p00 + TOL);
        }
        // gamma1 convex, gamma0 concave
        for w in s.windows(3) {
            prop_assert!(w[0].0 + w[2].0 - 2.0 * w[1].0 >= -TOL);
            prop_assert!(w[0].1 + w[2].1 - 2.0 * w[1].1 <= TOL);
        }
        let g2: Vec<f64> = (0..=100).map(|j| arm.gamma2(Belief::new(j as f64 / 100.0).unwrap()).value()).collect();
        prop_assert!(g2.windows(2).all(|w| w[1] >= w[0] - TOL));
    }

    #[test]
    fn negative_correlation_maps_decrease_and_stay_ordered(arm in arm_strategy().prop_map(negative)) {
        prop_assume!(arm.rho0 > 0.0 && arm.rho1 < 1.0);
        let s = sweep(&arm);
        for w in s.windows(2) {
            prop_assert!(w[1].0 <= w[0].0 + TOL);
            prop_assert!(w[1].1 <= w[0].1 + TOL);
        }
        for (g1, g0) in &s {
            prop_assert!(arm.p00 - TOL <= *g0 && *g0 <= *g1 + TOL && *g1 <= arm.p10 + TOL);
        }
    }

    #[test]
    fn idle_map_fixes_the_stationary_belief(arm in arm_strategy()) {
        prop_assume!(arm.p00 - arm.p10 < 1.0);
        let q = arm.stationary_q().unwrap();
        prop_assert!((arm.gamma2(q).value() - q.value()).abs() <= 1e-12);
    }

    #[test]
    fn outputs_stay_in_the_unit_interval(arm in arm_strategy(), pi in 0.0..=1.0f64) {
        let b = Belief::new(pi).unwrap();
        for g in [arm.gamma1(b), arm.gamma0(b)].into_iter().flatten() {
            prop_assert!((0.0..=1.0).contains(&g.value()));
        }
        prop_assert!((0.0..=1.0).contains(&arm.gamma2(b).value()));
        prop_assert!((0.0..=1.0).contains(&arm.success_prob(b)));
    }

    #[test]
    fn updates_match_enumerated_bayes(arm in arm_strategy(), pi in 0.0..=1.0f64, kstep in any::<bool>()) {
        let arm = arm.with_propagation(if kstep { Propagation::KStep } else { Propagation::OneStep });
        let b = Belief::new(pi).unwrap();
        for (fb, got) in [(1, arm.gamma1(b)), (0, arm.gamma0(b))] {
            match (brute_force_update(&arm, pi, fb), got) {
                (Some(want), Ok(got)) => prop_assert!((want - got.value()).abs() <= 1e-12),
                (None, Err(_)) => {}
                (want, got) => prop_assert!(false, "feasibility differs: {want:?} vs {got:?}"),
            }
        }
    }

    #[test]
    fn idle_map_matches_k_step_walk(arm in arm_strategy(), pi in 0.0..=1.0f64) {
        let mut dist = [pi, 1.0 - pi];
        for _ in 0..arm.k {
            dist = [dist[0] * arm.p00 + dist[1] * arm.p10, dist[0] * (1.0 - arm.p00) + dist[1] * (1.0 - arm.p10)];
        }
        prop_assert!((arm.gamma2(Belief::new(pi).unwrap()).value() - dist[0]).abs() <= 1e-12);
    }
}

#[test]
fn worked_update_against_enumeration() {
    let arm = ArmParams::new(0.7, 0.2, 0.3, 0.9, 0.3, 0.9, 4).unwrap();
    let got = arm.gamma1(Belief::new(0.5).unwrap()).unwrap().value();
    // joint over start state: 0.5*0.3 in state 0, 0.5*0.9 in state 1
    let want = (0.15 * 0.7 + 0.45 * 0.2) / 0.6;
    assert!((got - want).abs() < 1e-15);
}

#[test]
fn evolve_state_follows_the_k_step_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 100_000;
    for (p00, p10, k) in [(0.7, 0.2, 1), (0.9, 0.4, 3), (0.2, 0.9, 5), (0.55, 0.5, 10)] {
        let arm = ArmParams::new(p00, p10, 0.0, 1.0, 0.0, 1.0, k).unwrap();
        let pk = arm.kstep_matrix(k);
        for start in 0..2u8 {
            let zeros = (0..n).filter(|_| evolve_state(start, &arm, k, &mut rng) == 0).count();
            let p = pk[start as usize][0];
            let sd = (p * (1.0 - p) / n as f64).sqrt();
            assert!((zeros as f64 / n as f64 - p).abs() <= 3.0 * sd, "{p00} {p10} {k} from {start}");
        }
    }
}
