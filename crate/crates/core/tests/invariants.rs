use proptest::prelude::*;

use lprl_core::construction::{ConstructionCache, ConstructionConfig};
use lprl_core::grid::{depth, level, pair, unpair, BitString};
use lprl_core::reduction::{f_blocks, AlphaSpec, RowPattern};
use lprl_core::seqspace::{
    dp_metric, frechet_metric, pnorm_pow, sup_norm, ExpLadder, Exponent, FinSeq,
};

fn unit_vec(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, 0..max_len)
}

fn signed_vec(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 0..max_len)
}

fn exponent() -> impl Strategy<Value = f64> {
    0.1..4.0f64
}

fn row_pattern() -> impl Strategy<Value = RowPattern> {
    prop_oneof![
        prop::collection::btree_set(0..8u64, 0..4).prop_map(RowPattern::FiniteOnes),
        (0..5u64).prop_map(|start| RowPattern::EventuallyOne { start }),
        (2..5u64, 0..5u64, 0..4u64)
            .prop_map(|(m, r, j)| RowPattern::periodic(r % m, m, j).unwrap()),
    ]
}

fn alpha_spec() -> impl Strategy<Value = AlphaSpec> {
    prop::collection::btree_map(0..6u64, row_pattern(), 0..4).prop_map(|rows| {
        rows.into_iter()
            .fold(AlphaSpec::zero(), |s, (i, p)| s.with_row(i, p))
    })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #[test]
    fn run_encoding_is_transparent(v in prop::collection::vec(prop::sample::select(vec![0.0, 0.5, 1.0, -2.0]), 0..40)) {
        let x = FinSeq::from_values(v.iter().copied());
        prop_assert_eq!(x.to_vec(), v.clone());
        prop_assert_eq!(x.len(), v.len() as u128);
        for w in x.runs().windows(2) {
            prop_assert!(w[0].value != w[1].value);
        }
    }

    #[test]
    fn power_sums_are_additive(u in signed_vec(20), v in signed_vec(20), p in exponent()) {
        let p = Exponent::new(p).unwrap();
        let (u, v) = (FinSeq::from(u.as_slice()), FinSeq::from(v.as_slice()));
        let whole = pnorm_pow(&u.concat(&v), p).unwrap();
        prop_assert!(close(whole, pnorm_pow(&u, p).unwrap() + pnorm_pow(&v, p).unwrap()));
    }

    #[test]
    fn power_sums_decrease_in_p_on_sub_unit_sequences(x in unit_vec(30), p in exponent(), dp in 0.01..2.0f64) {
        let x = FinSeq::from(x.as_slice());
        let lo = pnorm_pow(&x, Exponent::new(p).unwrap()).unwrap();
        let hi = pnorm_pow(&x, Exponent::new(p + dp).unwrap()).unwrap();
        prop_assert!(hi <= lo * (1.0 + 1e-12));
    }

    #[test]
    fn sup_is_dominated(x in signed_vec(30), p in exponent()) {
        let x = FinSeq::from(x.as_slice());
        let s = sup_norm(&x);
        prop_assert!(s.powf(p) <= pnorm_pow(&x, Exponent::new(p).unwrap()).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn dp_is_a_metric(x in signed_vec(12), y in signed_vec(12), z in signed_vec(12), p in 0.05..0.99f64) {
        let p = Exponent::new(p).unwrap();
        let (x, y, z) = (FinSeq::from(x.as_slice()), FinSeq::from(y.as_slice()), FinSeq::from(z.as_slice()));
        let dxy = dp_metric(&x, &y, p).unwrap();
        prop_assert!(close(dxy, dp_metric(&y, &x, p).unwrap()));
        prop_assert!(close(dxy, pnorm_pow(&x.sub(&y), p).unwrap()));
        prop_assert_eq!(dp_metric(&x, &x, p).unwrap(), 0.0);
        prop_assert!(dxy <= (dp_metric(&x, &z, p).unwrap() + dp_metric(&z, &y, p).unwrap()) * (1.0 + 1e-12));
    }

    #[test]
    fn frechet_truncations_converge(x in signed_vec(10), y in signed_vec(10), b in 0.1..3.0f64, t in 1..20usize) {
        let ladder = ExpLadder::for_frechet(b).unwrap();
        let (x, y) = (FinSeq::from(x.as_slice()), FinSeq::from(y.as_slice()));
        let short = frechet_metric(&x, &y, &ladder, t).unwrap();
        let long = frechet_metric(&x, &y, &ladder, t + 10).unwrap();
        prop_assert!(short.value <= long.value + 1e-15);
        prop_assert!(long.value <= short.value + short.tail_bound + 1e-15);
        prop_assert!(long.value < 1.0);
    }

    #[test]
    fn pairing_round_trips(i in 0..1u64 << 30, j in 0..1u64 << 30, n in any::<u32>()) {
        prop_assert_eq!(unpair(pair(i, j).unwrap()), (i, j));
        let (a, b) = unpair(n as u64);
        prop_assert_eq!(pair(a, b).unwrap(), n as u64);
    }

    #[test]
    fn bit_strings_round_trip(bits in prop::collection::vec(any::<bool>(), 0..40)) {
        let s = BitString::from_bools(bits);
        prop_assert_eq!(s.to_string().parse::<BitString>().unwrap(), s.clone());
        if !s.is_empty() {
            prop_assert!(level(&s).unwrap() as i64 <= depth(&s));
        }
    }

    #[test]
    fn alpha_specs_round_trip(spec in alpha_spec()) {
        let back: AlphaSpec = spec.to_string().parse().unwrap();
        prop_assert_eq!(&back, &spec);
        for n in 0..200 {
            prop_assert_eq!(back.bit(n), spec.bit(n));
        }
        prop_assert_eq!(spec.in_p3(), spec.rows().values().all(|r| matches!(r, RowPattern::FiniteOnes(_))));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn blocks_rebuild_phi_and_extend_consistently(spec in alpha_spec(), k in 0..10usize, extra in 0..3usize) {
        let mut c = ConstructionCache::new(ConstructionConfig::new(0.0, 2.0).unwrap());
        let short = f_blocks(&mut c, &spec, k).unwrap();
        let long = f_blocks(&mut c, &spec, k + extra).unwrap();
        prop_assert_eq!(&short.blocks[..], &long.blocks[..=k]);
        prop_assert_eq!(&short.prefix(), &c.get(&spec.prefix(k + 1)).unwrap().phi);
        for (t, b) in long.blocks.iter().enumerate() {
            prop_assert!(pnorm_pow(b, long.q).unwrap() < 0.5f64.powi(t as i32 + 1));
        }
    }

    #[test]
    fn cache_export_round_trips(paths in prop::collection::vec(prop::collection::vec(any::<bool>(), 1..9), 1..6)) {
        let mut c = ConstructionCache::new(ConstructionConfig::new(1.0, 3.0).unwrap());
        for p in paths {
            c.build_node(&BitString::from_bools(p)).unwrap();
        }
        let text = c.export_string();
        let back = ConstructionCache::import(text.as_bytes()).unwrap();
        prop_assert_eq!(back.export_string(), text);
        for n in c.nodes() {
            prop_assert_eq!(back.get(&n.sigma), Some(n));
        }
    }
}
