mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::gen;
use flutes::syntax::{parse_term_sexp, parse_type_sexp, render_term, render_type};
use flutes::taxonomy::Taxonomy;
use flutes::term::Type;
use flutes::typing::prove_subtype;

/// Subtyping by exhaustive search over field pairings.
fn brute(tax: &Taxonomy, sub: &Type, sup: &Type) -> bool {
    match (sub, sup) {
        (Type::Void, _) => true,
        (Type::Num, Type::Num) | (Type::Str, Type::Str) => true,
        (Type::Enum(a), Type::Enum(b)) => a.iter().all(|c| b.iter().any(|d| c == d || tax.equiv(c, d))),
        (Type::List(a), Type::List(b)) => brute(tax, a, b),
        (Type::Record(subs), Type::Record(sups)) => {
            fn assign(tax: &Taxonomy, subs: &[(flutes::taxonomy::Concept, Type)], sups: &[(flutes::taxonomy::Concept, Type)], used: &mut Vec<bool>) -> bool {
                let Some(((label, ty), rest)) = sups.split_first() else { return true };
                for (i, (l, t)) in subs.iter().enumerate() {
                    if !used[i] && tax.label_match(l, label) && brute(tax, t, ty) {
                        used[i] = true;
                        if assign(tax, subs, rest, used) {
                            return true;
                        }
                        used[i] = false;
                    }
                }
                false
            }
            assign(tax, subs, sups, &mut vec![false; subs.len()])
        }
        _ => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn prover_is_sound_against_brute_force(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tax = gen::taxonomy(&mut rng);
        let a = gen::static_type(&mut rng, &tax, 3);
        let b = if seed % 2 == 0 { gen::weaken(&mut rng, &tax, &a) } else { gen::static_type(&mut rng, &tax, 3) };
        if prove_subtype(&tax, &a, &b).is_some() {
            prop_assert!(brute(&tax, &a, &b));
        }
    }

    #[test]
    fn subtyping_is_transitive(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tax = gen::taxonomy(&mut rng);
        let a = gen::static_type(&mut rng, &tax, 3);
        let b = gen::weaken(&mut rng, &tax, &a);
        let c = gen::weaken(&mut rng, &tax, &b);
        if prove_subtype(&tax, &a, &b).is_some() && prove_subtype(&tax, &b, &c).is_some() {
            prop_assert!(brute(&tax, &a, &c), "{} / {} / {}", render_type(&a), render_type(&b), render_type(&c));
        }
    }

    #[test]
    fn subtyping_is_reflexive(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tax = gen::taxonomy(&mut rng);
        let a = gen::static_type(&mut rng, &tax, 3);
        let p = prove_subtype(&tax, &a, &a);
        prop_assert!(p.is_some_and(|p| p.is_identity_shaped()));
    }

    #[test]
    fn terms_round_trip(seed in any::<u64>()) {
        let t = gen::any_term(&mut ChaCha8Rng::seed_from_u64(seed), 4);
        prop_assert_eq!(parse_term_sexp(&render_term(&t)).unwrap(), t);
    }

    #[test]
    fn types_round_trip(seed in any::<u64>()) {
        let t = gen::any_type(&mut ChaCha8Rng::seed_from_u64(seed), 3);
        prop_assert_eq!(parse_type_sexp(&render_type(&t)).unwrap(), t);
    }
}
