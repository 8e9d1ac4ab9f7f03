use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use symbandit::partition::{
    closure_merges, coarsen, coarsen_pairs, is_in_class, noncrossing_to_nonnesting, nonnesting_to_noncrossing, refines,
};
use symbandit::selection::select_greedy;
use symbandit::subspace::{fit_subspace, sphere_exploration_sampler};
use symbandit::{DesignSample, Partition, PartitionClass, SubspaceModel};

fn partition(max_d: usize) -> impl Strategy<Value = Partition> {
    (1..=max_d)
        .prop_flat_map(|d| prop::collection::vec(0..d, d))
        .prop_map(|l| Partition::from_labels(&l).unwrap())
}

fn class() -> impl Strategy<Value = PartitionClass> {
    prop::sample::select(PartitionClass::ALL_CLASSES.to_vec())
}

fn in_class(max_d: usize) -> impl Strategy<Value = (Partition, PartitionClass)> {
    (2..=max_d, class(), prop::collection::vec(any::<usize>(), 0..max_d)).prop_map(|(d, c, steps)| {
        let mut p = Partition::finest(d);
        for s in steps.into_iter().take(d.saturating_sub(2)) {
            let pairs = coarsen_pairs(&p, c);
            if pairs.is_empty() {
                break;
            }
            let (a, b) = pairs[s % pairs.len()];
            p = p.merge(a, b);
        }
        (p, c)
    })
}

fn seeded_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut r = symbandit::rng::stream(seed, 7);
    DMatrix::from_fn(rows, cols, |_, _| symbandit::rng::standard_normal(&mut r))
}

proptest! {
    #[test]
    fn canonical_labels_are_a_fixed_point(p in partition(12)) {
        let again = Partition::from_labels(p.labels()).unwrap();
        prop_assert_eq!(&again, &p);
        prop_assert_eq!(p.labels()[0], 0);
        let sizes: usize = p.blocks().iter().map(Vec::len).sum();
        prop_assert_eq!(sizes, p.d());
    }

    #[test]
    fn coarsenings_stay_in_class_and_drop_one_block((p, c) in in_class(10)) {
        prop_assert!(is_in_class(&p, c));
        match coarsen(&p, c) {
            Ok(children) => {
                prop_assert_eq!(children.len(), coarsen_pairs(&p, c).len());
                for q in children {
                    prop_assert!(is_in_class(&q, c));
                    prop_assert_eq!(q.num_blocks() + 1, p.num_blocks());
                    prop_assert!(refines(&p, &q).unwrap());
                }
            }
            Err(_) => prop_assert!(p.num_blocks() == 1 || c == PartitionClass::NonNesting),
        }
    }

    #[test]
    fn closure_groups_stay_in_class((p, c) in in_class(10)) {
        prop_assert!(p.num_blocks() > 1);
        let groups = closure_merges(&p, c);
        prop_assert!(!groups.is_empty());
        for g in groups {
            let q = p.merge_group(&g);
            prop_assert!(is_in_class(&q, c));
            prop_assert!(refines(&p, &q).unwrap());
        }
    }

    #[test]
    fn arc_rematching_round_trips(p in partition(11)) {
        if is_in_class(&p, PartitionClass::NonCrossing) {
            let q = noncrossing_to_nonnesting(&p);
            prop_assert!(is_in_class(&q, PartitionClass::NonNesting));
            prop_assert_eq!(q.num_blocks(), p.num_blocks());
            prop_assert_eq!(nonnesting_to_noncrossing(&q), p.clone());
        }
        if is_in_class(&p, PartitionClass::NonNesting) {
            let q = nonnesting_to_noncrossing(&p);
            prop_assert!(is_in_class(&q, PartitionClass::NonCrossing));
            prop_assert_eq!(noncrossing_to_nonnesting(&q), p);
        }
    }

    #[test]
    fn projection_is_orthogonal(p in partition(12), seed in any::<u64>()) {
        let m = SubspaceModel::new(p);
        let x = seeded_matrix(m.d(), 1, seed).column(0).into_owned();
        let px = m.project(&x);
        prop_assert!((m.project(&px) - &px).norm() < 1e-12);
        let resid = &x - &px;
        let z = DVector::from_fn(m.k(), |b, _| b as f64 + 1.0);
        prop_assert!(resid.dot(&m.expand(&z)).abs() < 1e-10);
        prop_assert!(px.norm() <= x.norm() + 1e-12);
    }

    #[test]
    fn noiseless_fits_recover_block_constant_parameters(p in partition(10), seed in any::<u64>()) {
        let m = SubspaceModel::new(p);
        let d = m.d();
        let x = seeded_matrix(2 * d + 2, d, seed);
        let coef = DVector::from_fn(m.k(), |b, _| (b as f64 * 0.7).sin());
        let theta = m.expand(&coef);
        let y = &x * &theta;
        let fit = fit_subspace(&DesignSample::new(x, y).unwrap(), &m).unwrap();
        prop_assert!((fit.theta_hat - theta).norm() < 1e-8);
        prop_assert!(fit.residual_sq < 1e-16 * (1.0 + coef.norm_squared()) * d as f64 * 100.0);
    }

    #[test]
    fn greedy_residuals_never_decrease(seed in any::<u64>(), c in class()) {
        let d = 8;
        let x = seeded_matrix(30, d, seed);
        let y = seeded_matrix(30, 1, seed ^ 1).column(0).into_owned();
        let sel = select_greedy(&DesignSample::new(x, y).unwrap(), 2, c).unwrap();
        prop_assert!(is_in_class(sel.model.partition(), c));
        for w in sel.residual_trace.windows(2) {
            prop_assert!(w[1].1 >= w[0].1 - 1e-9 * (1.0 + w[0].1));
            prop_assert!(w[1].0 < w[0].0);
        }
    }

    #[test]
    fn sphere_samples_have_radius_root_d(d in 1usize..40, seed in any::<u64>()) {
        let mut r = symbandit::rng::stream(seed, 0);
        let x = sphere_exploration_sampler(d, &mut r);
        prop_assert!((x.norm() - (d as f64).sqrt()).abs() < 1e-10);
    }
}
