mod common;

use std::collections::HashSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gpscale::csp::{self, CompositionCsp, CspVar, LinearConstraint, SideConstraint};
use gpscale::domains::{descriptor, domain_ids};

fn arb_csp() -> impl Strategy<Value = CompositionCsp> {
    let var = (0u64..4, 1u64..3, prop::option::of(0u64..6)).prop_map(|(coeff, lo, span)| (coeff, lo, span));
    (prop::collection::vec(var, 1..4), 0u64..5, any::<bool>()).prop_filter_map(
        "needs a positive coefficient",
        |(vars, offset, le)| {
            let k = vars.len();
            let vars: Vec<CspVar> = vars
                .into_iter()
                .enumerate()
                .map(|(i, (coeff, lo, span))| CspVar {
                    name: format!("v{i}"),
                    coeff,
                    lo,
                    // zero-coefficient variables must be bounded
                    hi: if coeff == 0 { Some(lo + span.unwrap_or(2)) } else { span.map(|s| lo + s) },
                })
                .collect();
            let mut csp = CompositionCsp::new(vars, offset).ok()?;
            if le && k >= 2 {
                csp = csp.with_constraint(SideConstraint::Linear(LinearConstraint::le(0, k - 1)));
            }
            Some(csp)
        },
    )
}

proptest! {
    #[test]
    fn solver_matches_brute_force(csp in arb_csp()) {
        let brute = common::brute_force(&csp, 30);
        for n in 0..=30u64 {
            let got: Vec<Vec<u64>> = csp::solve_all(&csp, n).unwrap().into_iter().map(|a| a.0).collect();
            prop_assert_eq!(&got, &brute.get(&n).cloned().unwrap_or_default());
            prop_assert_eq!(csp::has_solution(&csp, n), !got.is_empty());
            for v in &got {
                prop_assert!(csp.satisfied_by(n, v));
            }
        }
    }

    #[test]
    fn solve_k_is_a_sorted_subset(n in 8u64..40, k in 1usize..6, seed in any::<u64>()) {
        let csp = &descriptor("childsnack").unwrap().csp;
        let all = csp::solve_all(csp, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let some = csp::solve_k(csp, n, k, &mut rng).unwrap();
        prop_assert_eq!(some.len(), k.min(all.len()));
        prop_assert!(some.windows(2).all(|w| w[0] < w[1]));
        let set: HashSet<_> = all.iter().collect();
        prop_assert!(some.iter().all(|a| set.contains(a)));
    }
}

#[test]
fn builtin_domains_match_brute_force_up_to_sixty() {
    for id in domain_ids() {
        let csp = &descriptor(id).unwrap().csp;
        let brute = common::brute_force(csp, 60);
        for n in 0..=60u64 {
            let got: Vec<Vec<u64>> = csp::solve_all(csp, n).unwrap().into_iter().map(|a| a.0).collect();
            assert_eq!(got, brute.get(&n).cloned().unwrap_or_default(), "{id} n={n}");
        }
    }
}

#[test]
fn uniform_sampling_hits_every_composition() {
    let csp = &descriptor("childsnack").unwrap().csp;
    let all = csp::solve_all(csp, 13).unwrap();
    assert_eq!(all.len(), 8);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut counts = vec![0usize; all.len()];
    for _ in 0..8000 {
        let a = csp::sample_uniform(&all, &mut rng).unwrap();
        counts[all.iter().position(|x| x == a).unwrap()] += 1;
    }
    // each bucket expects 1000; 6 sigma is about 180
    assert!(counts.iter().all(|&c| (820..=1180).contains(&c)), "{counts:?}");
}

#[test]
fn empty_assignment_list_cannot_be_sampled() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(csp::sample_uniform(&[], &mut rng).is_err());
}
