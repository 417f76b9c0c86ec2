mod common;

use std::f64::consts::SQRT_2;

use nlocal::cli::{cmd_sweep, Figure, SweepConfig};
use nlocal::closedform::{
    full_nonlocality_threshold, max_chain_local, max_chsh, max_star_local, star_upper_bound,
};
use nlocal::linalg::{kron, signed_svd3, so3_to_su2, ComplexMatrix, RealMatrix3, Rotation3};
use nlocal::networks::{
    chain_score, chsh_score, correlation_table, star_i, star_score, strategy_score, Topology,
};
use nlocal::observables::{
    chsh_optimal_pair, observable, theorem1_star_strategy, BlochVector, ChshVariant,
    DichotomicObservable, NetworkStrategy, SourceSlots,
};
use nlocal::optimizer::{grid_oracle, optimize, Objective, OptimizerConfig};
use nlocal::sampling::{estimate_scores, sample_pair};
use nlocal::states::{
    bell_diagonal, random_classical_ensemble, random_classical_state, random_ensemble,
    random_state, SourceEnsemble,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn unit() -> impl Strategy<Value = BlochVector> {
    (0.0..std::f64::consts::PI, 0.0..std::f64::consts::TAU)
        .prop_map(|(t, p)| BlochVector::from_angles(t, p))
}

fn rotation() -> impl Strategy<Value = Rotation3> {
    prop::array::uniform4(-1.0f64..1.0)
        .prop_filter("nonzero quaternion", |q| q.iter().map(|v| v * v).sum::<f64>() > 1e-3)
        .prop_map(Rotation3::from_quaternion)
}

fn matrix3() -> impl Strategy<Value = RealMatrix3> {
    prop::array::uniform3(prop::array::uniform3(-1.0f64..1.0)).prop_map(RealMatrix3)
}

fn complex2() -> impl Strategy<Value = ComplexMatrix> {
    prop::array::uniform8(-1.0f64..1.0).prop_map(|v| {
        ComplexMatrix::from_fn(2, |i, j| Complex64::new(v[2 * (2 * i + j)], v[2 * (2 * i + j) + 1]))
    })
}

fn bloch_rotated(r: &Rotation3, v: &BlochVector) -> ComplexMatrix {
    observable(&v.rotated(r))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn svd_reconstructs_with_proper_rotations(m in matrix3()) {
        let s = signed_svd3(&m);
        let back = s.ra.matrix().transpose() * RealMatrix3::from_diag(s.diagonal()) * *s.rb.matrix();
        prop_assert!(back.max_abs_diff(&m) < 1e-10);
        prop_assert!((s.ra.matrix().det() - 1.0).abs() < 1e-12);
        prop_assert!((s.rb.matrix().det() - 1.0).abs() < 1e-12);
        let t = s.tau;
        prop_assert!(t.tau0 >= t.tau1 && t.tau1 >= t.tau2.abs());
        let oracle = common::one_sided_jacobi(m.0);
        prop_assert!((t.tau0 - oracle[0]).abs() < 1e-10 && (t.tau1 - oracle[1]).abs() < 1e-10);
        prop_assert!((t.tau2.abs() - oracle[2]).abs() < 1e-10);
    }

    #[test]
    fn state_triples_are_bounded_and_ordered(seed in any::<u64>()) {
        let rho = random_state(seed);
        let t = rho.singular_triple();
        prop_assert!(1.0 + 1e-12 >= t.tau0 && t.tau0 >= t.tau1 && t.tau1 >= t.tau2.abs());
        prop_assert!(t.tau0 * t.tau0 + t.tau1 * t.tau1 + t.tau2 * t.tau2 <= 3.0 + 1e-12);
        let o = common::singular_values(&rho);
        prop_assert!((t.tau0 - o[0]).abs() < 1e-10 && (t.tau1 - o[1]).abs() < 1e-10 && (t.tau2.abs() - o[2]).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn su2_lift_is_a_homomorphism(r1 in rotation(), r2 in rotation(), v in unit()) {
        let (u1, u2) = (so3_to_su2(&r1).unwrap(), so3_to_su2(&r2).unwrap());
        let u12 = so3_to_su2(&r1.compose(&r2)).unwrap();
        let prod = &u1 * &u2;
        // Equal up to the global phase fixed by the lift's convention.
        let overlap: Complex64 = prod.as_slice().iter().zip(u12.as_slice()).map(|(p, u)| p.conj() * u).sum();
        let err = u12.max_abs_diff(&prod.scale(overlap / overlap.norm()));
        prop_assert!(err < 1e-10, "{err}");
        let conj = observable(&v).conjugate_by(&u1);
        prop_assert!(conj.max_abs_diff(&bloch_rotated(&r1, &v)) < 1e-10);
    }

    #[test]
    fn kron_is_bilinear_with_multiplicative_trace(a in complex2(), b in complex2(), c in complex2(), s in -2.0f64..2.0) {
        let lhs = kron(&(&a + &c.scale_real(s)), &b);
        let rhs = &kron(&a, &b) + &kron(&c, &b).scale_real(s);
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        let rhs2 = &kron(&b, &a) + &kron(&b, &c).scale_real(s);
        prop_assert!(kron(&b, &(&a + &c.scale_real(s))).max_abs_diff(&rhs2) < 1e-12);
        prop_assert!((kron(&a, &b).trace() - a.trace() * b.trace()).norm() < 1e-12);
    }

    #[test]
    fn canonical_form_preserves_triple(seed in any::<u64>()) {
        let rho = random_state(seed);
        let canon = rho.canonical_form();
        let (a, b) = (rho.singular_triple(), canon.state.singular_triple());
        prop_assert!((a.tau0 - b.tau0).abs() < 1e-10 && (a.tau1 - b.tau1).abs() < 1e-10 && (a.tau2 - b.tau2).abs() < 1e-10);
        let t = canon.state.correlation_matrix();
        prop_assert!((t.diag()[2] - a.tau0).abs() < 1e-10 && (t.diag()[0] - a.tau1).abs() < 1e-10);
        prop_assert!(t.max_off_diagonal() < 1e-10);
    }

    #[test]
    fn bell_diagonal_round_trips(x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0) {
        // Physical when all four Bell weights (1 ± x ∓ y ± z)/4 are nonnegative.
        let ok = [1.0 + x - y + z, 1.0 - x + y + z, 1.0 + x + y - z, 1.0 - x - y - z].iter().all(|w| *w >= 0.0);
        prop_assume!(ok);
        let rho = bell_diagonal([x, y, z]).unwrap();
        let t = common::pauli_correlations(&rho);
        prop_assert!((t[0][0] - x).abs() < 1e-12 && (t[1][1] - y).abs() < 1e-12 && (t[2][2] - z).abs() < 1e-12);
    }

    #[test]
    fn chsh_violation_iff_horodecki_weight_above_one(seed in any::<u64>(), x in 0.0f64..1.0, z in 0.0f64..1.0) {
        for rho in [random_state(seed), bell_diagonal([x, -x * z, z]).unwrap()] {
            let t = rho.singular_triple();
            let w = t.tau0 * t.tau0 + t.tau1 * t.tau1;
            prop_assume!((w - 1.0).abs() > 1e-9);
            prop_assert_eq!(max_chsh(&t) > 2.0, w > 1.0);
        }
    }

    #[test]
    fn observables_square_to_identity(v in unit()) {
        let o = observable(&v);
        prop_assert!((&o * &o).max_abs_diff(&ComplexMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn chsh_optimal_pairs_reach_the_maximum(x in 0.0f64..1.0, z in 0.0f64..1.0) {
        let rho = bell_diagonal([x, -x * z, z]).unwrap();
        let t = rho.singular_triple();
        prop_assume!(t.tau0 > 1e-6);
        let ens = SourceEnsemble::uniform(rho, 1).unwrap();
        for variant in [ChshVariant::MubOnA, ChshVariant::MubOnB] {
            let (a, b) = chsh_optimal_pair(&t, variant).unwrap();
            let f = ens.frames()[0];
            let slots = SourceSlots { a_side: a.rotated(&f.ra.transpose()), b_side: b.rotated(&f.rb.transpose()) };
            let s = NetworkStrategy::new(Topology::star(1).unwrap(), vec![slots]).unwrap();
            let chsh = chsh_score(&correlation_table(&ens, &s).unwrap()).unwrap();
            prop_assert!((chsh - common::chsh_max(ens.states().first().unwrap())).abs() < 1e-10);
        }
    }

    #[test]
    fn classical_sources_respect_the_n_local_bound(seed in any::<u64>(), n in 1usize..=4) {
        let ens = random_classical_ensemble(n, seed);
        let star = common::random_strategy(Topology::star(n).unwrap(), seed);
        prop_assert!(star_score(&correlation_table(&ens, &star).unwrap()).unwrap() <= 1.0 + 1e-9);
        if n >= 2 {
            let chain = common::random_strategy(Topology::chain(n).unwrap(), seed);
            prop_assert!(chain_score(&correlation_table(&ens, &chain).unwrap()).unwrap() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn quantum_scores_stay_below_root_two(seed in any::<u64>(), n in 2usize..=4) {
        let ens = random_ensemble(n, seed);
        for t in [Topology::star(n).unwrap(), Topology::chain(n).unwrap()] {
            prop_assert!(strategy_score(&ens, &common::random_strategy(t, seed)).unwrap() <= SQRT_2 + 1e-9);
        }
        let bell = SourceEnsemble::uniform(nlocal::states::bell_phi_plus(), n).unwrap();
        prop_assert!(max_star_local(&bell).0 <= SQRT_2 + 1e-9);
        prop_assert!(max_chain_local(&bell).unwrap().0 <= SQRT_2 + 1e-9);
    }

    #[test]
    fn one_star_is_half_chsh_when_both_terms_are_nonnegative(seed in any::<u64>()) {
        let ens = random_ensemble(1, seed);
        let table = correlation_table(&ens, &theorem1_star_strategy(&ens).strategy).unwrap();
        prop_assert!(star_i(&table, 0).unwrap() >= 0.0 && star_i(&table, 1).unwrap() >= 0.0);
        prop_assert!((star_score(&table).unwrap() - 0.5 * chsh_score(&table).unwrap()).abs() < 1e-12);
        let any = correlation_table(&ens, &common::random_strategy(Topology::star(1).unwrap(), seed)).unwrap();
        prop_assert!(star_score(&any).unwrap() + 1e-12 >= 0.5 * chsh_score(&any).unwrap());
    }

    #[test]
    fn one_classical_source_caps_the_star(seed in any::<u64>(), n in 2usize..=6, pos in 0usize..6) {
        let mut states = random_ensemble(n, seed).states().to_vec();
        states[pos % n] = random_classical_state(seed);
        let ens = SourceEnsemble::new(states).unwrap();
        prop_assert!(max_star_local(&ens).0 <= full_nonlocality_threshold(n) + 1e-12);
    }

    #[test]
    fn chain_maximum_ignores_middle_coherence(seed in any::<u64>(), n in 3usize..=6, pos in 1usize..5) {
        let ens = random_ensemble(n, seed);
        let i = 1 + (pos - 1) % (n - 2);
        let tau0 = ens.triples()[i].tau0;
        let mut states = ens.states().to_vec();
        states[i] = bell_diagonal([0.0, 0.0, tau0]).unwrap();
        let replaced = SourceEnsemble::new(states).unwrap();
        let (a, b) = (max_chain_local(&ens).unwrap().0, max_chain_local(&replaced).unwrap().0);
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn sweep_rows_are_ordered(n in 2usize..=8, points in 2usize..12, k in 0usize..=8) {
        for figure in [Figure::StarColored, Figure::StarConstantChsh, Figure::ChainColored, Figure::ChainWhite] {
            let cfg = SweepConfig { k: Some(k.min(n)), points, ..SweepConfig::new(figure, n) };
            let rows = cmd_sweep(&cfg).unwrap();
            prop_assert_eq!(rows.len(), points);
            prop_assert!(rows.iter().all(|r| r.s_mub_max <= r.s_local_max + 1e-12));
            prop_assert!(rows.windows(2).all(|w| w[0].parameter < w[1].parameter));
            if figure == Figure::ChainColored && n > 2 {
                prop_assert!(rows.iter().all(|r| (r.s_local_max - SQRT_2).abs() < 1e-12 && r.s_mub_max >= 1.0 - 1e-12));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn optimizer_is_sound_and_deterministic(seed in any::<u64>(), n in 2usize..=3, chain in any::<bool>()) {
        let ens = random_ensemble(n, seed);
        let t = if chain { Topology::chain(n) } else { Topology::star(n) }.unwrap();
        let cfg = OptimizerConfig { restarts: 6, seed, warm_start: false, ..Default::default() };
        let a = optimize(t, &ens, &cfg).unwrap();
        let b = optimize(t, &ens, &cfg).unwrap();
        prop_assert_eq!(&a, &b);
        let bound = if chain { common::chain_max(ens.states()) } else { common::star_max(ens.states()) };
        prop_assert!(a.best_score <= bound + 1e-9);
    }

    #[test]
    fn grid_search_approaches_the_closed_form_from_below(seed in any::<u64>()) {
        let ens = random_ensemble(2, seed);
        let closed = star_upper_bound(&ens.triples());
        let values: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&r| grid_oracle(Objective::Network(Topology::star(2).unwrap()), &ens, r).unwrap())
            .collect();
        prop_assert!(values.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(values[2] <= closed + 1e-12 && values[2] >= closed - 5e-3, "{values:?} vs {closed}");
    }

    #[test]
    fn sampling_is_deterministic(seed in any::<u64>()) {
        let ens = random_ensemble(2, seed);
        let s = theorem1_star_strategy(&ens).strategy;
        let a = estimate_scores(s.topology(), &ens, &s, 5000, seed).unwrap();
        let b = estimate_scores(s.topology(), &ens, &s, 5000, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn sampling_error_shrinks_as_inverse_root_shots() {
    let rho = random_state(17);
    let (a, b) = (BlochVector::from_angles(0.4, 1.0), BlochVector::from_angles(2.1, -0.3));
    let exact = nlocal::networks::pair_correlator(&rho, &a, &b).unwrap();
    let shots = [1_000u64, 10_000, 100_000, 1_000_000];
    let errors: Vec<f64> = shots
        .iter()
        .map(|&n| {
            (0..200u64)
                .map(|s| (sample_pair(&rho, &a, &b, n, s).unwrap().mean - exact).powi(2))
                .sum::<f64>()
                / 200.0
        })
        .map(f64::sqrt)
        .collect();
    // Least-squares slope of log(rms error) against log(shots).
    let xs: Vec<f64> = shots.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((slope + 0.5).abs() < 0.1, "slope {slope}, errors {errors:?}");
}

#[test]
fn mub_dichotomic_pair_is_z_then_x() {
    let d = DichotomicObservable::mub_zx();
    assert_eq!(d.select(0), &BlochVector::Z);
    assert_eq!(d.select(1), &BlochVector::X);
}
