mod common;

use common::{built, ratio_representatives};
use proptest::prelude::*;
use weiltwist::census::{verify_suite, Verdict};
use weiltwist::characters::CharSpace;
use weiltwist::cyclotomic::CycInt;
use weiltwist::epsilon::EpsTable;
use weiltwist::groups::UnitQuotient;
use weiltwist::padic::{catalog_tags, make_extension, psi0_eval};
use weiltwist::phase::Phase;

/// Small fields with a level at which the restriction set is nonempty.
const FIELDS: [(u64, &str, u32); 4] = [(3, "sqrt-pi", 4), (2, "sqrt(-1)", 4), (2, "sqrt(2)", 6), (3, "unramified", 4)];

fn any_catalog_entry() -> impl Strategy<Value = (u64, &'static str)> {
    let all: Vec<(u64, &'static str)> = [2u64, 3, 5]
        .into_iter()
        .flat_map(|p| catalog_tags(p).into_iter().map(move |t| (p, t)))
        .collect();
    proptest::sample::select(all)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn galois_action_is_an_involution_fixing_trace_and_norm(
        (p, tag) in any_catalog_entry(), a in -500i64..500, b in -500i64..500,
    ) {
        let ext = make_extension(p, tag).unwrap();
        let x = ext.elem(a, b);
        let c = x.conj();
        prop_assert!(c.conj().eq_to_precision(&x));
        prop_assert!(x.trace().is_base() && x.norm().is_base());
        prop_assert!(c.trace().eq_to_precision(&x.trace()));
        prop_assert!(c.norm().eq_to_precision(&x.norm()));
        prop_assert!(ext.x0.trace().is_zero());
    }

    #[test]
    fn psi0_is_trivial_on_the_base_field(
        (p, tag) in any_catalog_entry(), a in -10_000i64..10_000, k in 0u32..4,
    ) {
        let ext = make_extension(p, tag).unwrap();
        let x = ext.int(a).div(&ext.int((p as i64).pow(k))).unwrap();
        prop_assert!(psi0_eval(&ext, &x).unwrap().is_zero());
    }

    #[test]
    fn unit_quotient_orders((p, tag) in any_catalog_entry(), n in 1u32..=4) {
        let ext = make_extension(p, tag).unwrap();
        let g = UnitQuotient::build(&ext, n).unwrap();
        let qk = ext.q_k();
        prop_assert_eq!(g.order, (qk - 1) * qk.pow(n - 1));
        prop_assert_eq!(g.basis.iter().map(|b| b.order).product::<u64>(), g.order);
    }

    #[test]
    fn cyclotomic_roots_multiply_by_adding_exponents(
        a in 0i128..36, b in 0i128..36, k in 0usize..3,
    ) {
        let order = [12u64, 36, 8][k];
        let (pa, pb) = (Phase::new(a, order), Phase::new(b, order));
        let za = CycInt::from_exponent(pa, order).unwrap();
        let zb = CycInt::from_exponent(pb, order).unwrap();
        let zab = CycInt::from_exponent(pa.add(&pb), order).unwrap();
        prop_assert_eq!(za.mul(&zb).unwrap(), zab);
        prop_assert_eq!(za.conj().conj(), za.clone());
        prop_assert_eq!(za.mul(&za.conj()).unwrap(), CycInt::one(order));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dlog_is_a_homomorphism_and_reconstructs(k in 0usize..4, i in any::<usize>(), j in any::<usize>()) {
        let (p, tag, n) = FIELDS[k];
        let b = built(p, tag, n);
        let g = &b.space.group;
        let units: Vec<u64> = g.ring.units().collect();
        let (x, y) = (units[i % units.len()], units[j % units.len()]);
        let (dx, dy) = (g.dlog_idx(x).unwrap(), g.dlog_idx(y).unwrap());
        prop_assert_eq!(g.element(dx), x);
        let dxy = g.dlog_idx(g.ring.mul(x, y)).unwrap();
        for (m, bas) in g.basis.iter().enumerate() {
            prop_assert_eq!((dx[m] as u64 + dy[m] as u64) % bas.order, dxy[m] as u64);
        }
    }

    #[test]
    fn restriction_set_is_closed_under_conjugation(k in 0usize..4, i in any::<usize>()) {
        let (p, tag, n) = FIELDS[k];
        let b = built(p, tag, n);
        let sp = &b.space;
        let chi = &b.table.chars[i % b.table.chars.len()];
        let bar = sp.conj(chi);
        prop_assert_eq!(sp.conj(&bar), chi.clone());
        prop_assert_eq!(bar.conductor, chi.conductor);
        prop_assert!(sp.mul(chi, &bar).is_trivial());
        prop_assert!(b.table.position(&bar).is_some());
        prop_assert_eq!(sp.parse(&chi.encode()).unwrap(), chi.clone());
    }

    #[test]
    fn ratios_are_trivial_on_the_base_field(k in 0usize..4, i in any::<u64>()) {
        let (p, tag, n) = FIELDS[k];
        let b = built(p, tag, n);
        let sp = &b.space;
        let theta = sp.make(sp.unit_part(i % sp.unit_char_count()), Phase::ZERO).unwrap();
        let r = sp.ratio(&theta).unwrap();
        prop_assert!(sp.restricts_trivially(&r));
    }
}

fn census_counts(sp: &CharSpace, t: &EpsTable, theta: &weiltwist::characters::MultChar, n: u32) -> Vec<[u64; 6]> {
    verify_suite(sp, t, std::slice::from_ref(theta), n).unwrap()[0]
        .rows
        .iter()
        .map(|r| [r.s_size, r.s_prime_size, r.rplus, r.rminus, r.rdplus, r.rdminus])
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Conjugating both `λ` and `θ` multiplies every sign by `ω(−1)`, so the class
    /// multiset is preserved up to the swaps `Rplus ↔ Rminus`, `RDplus ↔ RDminus`.
    #[test]
    fn partition_identity_and_conjugate_symmetry(k in 0usize..3, i in any::<usize>()) {
        let (p, tag, _) = FIELDS[k];
        let n = if p == 2 { 8 } else { 6 };
        let b = built(p, tag, n);
        let sp = &b.space;
        let reps = ratio_representatives(sp, n);
        let theta = &reps[i % reps.len()];
        let rows = census_counts(sp, &b.table, theta, n);
        for r in &rows {
            prop_assert_eq!(r[2] + r[4], r[0]);
            prop_assert_eq!(r[3] + r[5], r[1]);
        }
        let conj_rows = census_counts(sp, &b.table, &sp.conj(theta), n);
        for (x, y) in rows.iter().zip(&conj_rows) {
            let want = if sp.omega.at_minus_one == 1 { *x } else { [x[0], x[1], x[3], x[2], x[5], x[4]] };
            prop_assert_eq!(*y, want);
            prop_assert_eq!(y[2] + y[3], x[2] + x[3]);
        }
    }

    /// Scaling `x₀` by `c ∈ Z_p^*` multiplies every sign by `ω(c)`; occurrence counts
    /// are unchanged, with `S ↔ S′` and `Rplus ↔ Rminus` swapped when `ω(c) = −1`.
    #[test]
    fn counts_do_not_depend_on_x0(k in 0usize..4, c in 1i64..60, i in any::<usize>()) {
        let (p, tag, n) = FIELDS[k];
        prop_assume!(c % p as i64 != 0);
        let b = built(p, tag, n);
        let scaled = b.space.ext.with_x0_scaled(c).unwrap();
        let sp2 = CharSpace::new(&scaled, n).unwrap();
        let t2 = EpsTable::compute(&sp2).unwrap();
        let w = b.space.omega.eval_unit(c as i128);
        prop_assert_eq!(&t2.chars, &b.table.chars);
        for m in 0..t2.chars.len() {
            prop_assert_eq!(t2.eps_inv[m], w * b.table.eps_inv[m]);
        }
        let reps = ratio_representatives(&b.space, n);
        let theta = &reps[i % reps.len()];
        let theta2 = sp2.parse(&theta.encode()).unwrap();
        let before = census_counts(&b.space, &b.table, theta, n);
        let after = census_counts(&sp2, &t2, &theta2, n);
        for (x, y) in before.iter().zip(&after) {
            let want = if w == 1 { *x } else { [x[1], x[0], x[3], x[2], x[5], x[4]] };
            prop_assert_eq!(*y, want);
        }
    }

    /// A corrupted sign always surfaces as a FAIL row carrying a counterexample.
    #[test]
    fn flipped_sign_is_detected(k in 0usize..3, i in any::<usize>()) {
        let (p, tag, _) = FIELDS[k];
        let n = 6;
        let b = built(p, tag, n);
        let mut t = b.table.clone();
        t.rebuild_index();
        let idx = i % t.chars.len();
        t.flip_sign(idx);
        let reps = ratio_representatives(&b.space, n);
        let reports = verify_suite(&b.space, &t, &reps[..reps.len().min(4)], n).unwrap();
        let fails: Vec<_> = reports.iter().flat_map(|r| &r.rows).filter(|r| r.verdict == Verdict::Fail).collect();
        prop_assert!(!fails.is_empty());
        prop_assert!(fails.iter().all(|r| r.counterexample.is_some()));
    }
}
