use super::*;
use crate::lru;
use crate::numeric::KahanSum;
use proptest::prelude::*;

fn exact_sum<F: Fn(f64) -> f64>(law: &PopularityLaw, f: F) -> f64 {
    let mut acc = KahanSum::new();
    for n in 1..=law.population() {
        acc.add(f(law.weight(n).unwrap()));
    }
    acc.value()
}

fn constant_profile(population: u64, h: f64) -> crate::lru::HitProfile {
    crate::lru::HitProfile::from_rates(vec![h; population as usize], h).unwrap()
}

#[test]
fn zipf_weights_match_definition() {
    let law = PopularityLaw::zipf(0.8, 10_000).unwrap();
    assert_eq!(law.weight(1).unwrap(), 1.0);
    assert_eq!(law.weight(17).unwrap(), 17f64.powf(-0.8));
}

#[test]
fn geometric_weights_match_definition() {
    let law = PopularityLaw::geometric(0.9, 100).unwrap();
    assert!((law.weight(2).unwrap() - 0.81).abs() < 1e-15);
}

#[test]
fn rank_bounds_are_enforced() {
    let law = PopularityLaw::uniform(10).unwrap();
    assert!(law.weight(0).is_err());
    assert!(law.weight(11).is_err());
    assert!(law.weight(10).is_ok());
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(PopularityLaw::zipf(0.0, 10).is_err());
    assert!(PopularityLaw::zipf(f64::NAN, 10).is_err());
    assert!(PopularityLaw::zipf(0.8, 0).is_err());
    assert!(PopularityLaw::geometric(1.0, 10).is_err());
    assert!(PopularityLaw::geometric(0.9, 1_000_000).is_err()); // tail underflow
    assert!(PopularityLaw::explicit(vec![]).is_err());
    assert!(PopularityLaw::explicit(vec![1.0, 0.0]).is_err());
    assert!(PopularityLaw::mixture(vec![]).is_err());
    assert!(PopularityLaw::mixture(vec![(-1.0, PopularityLaw::uniform(3).unwrap())]).is_err());
}

#[test]
fn mixture_scales_components_to_their_shares() {
    // Two equal types with identical parameters: per-item weights are
    // exactly half of the single-type law (linearity in the share).
    let single = PopularityLaw::mixture(vec![(1.0, PopularityLaw::zipf(0.8, 50).unwrap())]).unwrap();
    let double = PopularityLaw::mixture(vec![
        (0.5, PopularityLaw::zipf(0.8, 50).unwrap()),
        (0.5, PopularityLaw::zipf(0.8, 50).unwrap()),
    ])
    .unwrap();
    assert_eq!(double.population(), 100);
    for n in 1..=50 {
        let ratio = double.weight(n).unwrap() / single.weight(n).unwrap();
        assert!((ratio - 0.5).abs() < 1e-12, "rank {n}: ratio {ratio}");
    }
    // Second component occupies ranks 51..=100 with the same weights.
    assert_eq!(double.weight(51).unwrap(), double.weight(1).unwrap());
}

#[test]
fn chunked_law_places_chunk_ranks_consecutively() {
    let objects = PopularityLaw::zipf(0.8, 3).unwrap();
    let chunks = objects.chunked(2).unwrap();
    assert_eq!(chunks.population(), 6);
    for (rank, object) in [(1u64, 1u64), (2, 1), (3, 2), (4, 2), (5, 3), (6, 3)] {
        assert_eq!(
            chunks.weight(rank).unwrap(),
            objects.weight(object).unwrap(),
            "chunk rank {rank}"
        );
    }
}

#[test]
fn mix_chunk_weights_follow_the_share_formula() {
    // Reduced-population copy of the internet mix; q_i(n,k) must equal
    // (p_i / n^a_i) / (theta_i * H_{N_i}(a_i)) with exact partial sums.
    let mix = TrafficMix::new(vec![
        TrafficClass {
            name: "web".into(),
            share: 0.18,
            population: 1000,
            chunk_count: 10,
            zipf_alpha: 0.8,
        },
        TrafficClass {
            name: "file sharing".into(),
            share: 0.36,
            population: 100,
            chunk_count: 60,
            zipf_alpha: 0.8,
        },
        TrafficClass {
            name: "ugc".into(),
            share: 0.23,
            population: 500,
            chunk_count: 25,
            zipf_alpha: 0.8,
        },
        TrafficClass {
            name: "vod".into(),
            share: 0.23,
            population: 200,
            chunk_count: 40,
            zipf_alpha: 1.2,
        },
    ])
    .unwrap();
    let law = mix.chunk_law().unwrap();
    assert_eq!(law.population(), mix.total_chunks());

    let mut start = 0u64;
    for t in &mix.types {
        let mut harmonic = KahanSum::new();
        for j in 1..=t.population {
            harmonic.add((j as f64).powf(-t.zipf_alpha));
        }
        let h = harmonic.value();
        for (object, chunk) in [(1u64, 1u64), (2, 2), (t.population, t.chunk_count)] {
            let rank = start + (object - 1) * t.chunk_count + chunk;
            let expect = t.share / (object as f64).powf(t.zipf_alpha) / (t.chunk_count as f64 * h);
            let got = law.weight(rank).unwrap();
            assert!(
                (got - expect).abs() <= 1e-12 * expect,
                "{}: object {object} chunk {chunk}: {got} vs {expect}",
                t.name
            );
        }
        start += t.population * t.chunk_count;
    }
}

#[test]
fn mix_mass_is_one() {
    let mix = TrafficMix::new(vec![
        TrafficClass {
            name: "a".into(),
            share: 0.7,
            population: 2_000,
            chunk_count: 3,
            zipf_alpha: 0.8,
        },
        TrafficClass {
            name: "b".into(),
            share: 0.3,
            population: 400,
            chunk_count: 11,
            zipf_alpha: 1.2,
        },
    ])
    .unwrap();
    let law = mix.chunk_law().unwrap();
    assert!((law.total_mass() - 1.0).abs() < 1e-6);
}

#[test]
fn degenerate_single_item_mix() {
    let mix = TrafficMix::new(vec![TrafficClass {
        name: "only".into(),
        share: 1.0,
        population: 1,
        chunk_count: 1,
        zipf_alpha: 0.8,
    }])
    .unwrap();
    let law = mix.chunk_law().unwrap();
    assert_eq!(law.population(), 1);
    assert!((law.weight(1).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn bad_shares_are_rejected() {
    let mix = TrafficMix {
        types: vec![TrafficClass {
            name: "short".into(),
            share: 0.9,
            population: 10,
            chunk_count: 1,
            zipf_alpha: 0.8,
        }],
    };
    assert!(mix.validate().is_err());
    assert!(TrafficMix { types: vec![] }.validate().is_err());
}

#[test]
fn filter_with_zero_hits_is_identity() {
    let law = PopularityLaw::zipf(0.8, 200).unwrap();
    let filtered = law.filtered(&constant_profile(200, 0.0)).unwrap();
    assert_eq!(filtered.population(), 200);
    for n in 1..=200 {
        assert_eq!(filtered.weight(n).unwrap(), law.weight(n).unwrap());
    }
}

#[test]
fn filter_with_total_hits_empties_the_law() {
    let law = PopularityLaw::zipf(0.8, 50).unwrap();
    let filtered = law.filtered(&constant_profile(50, 1.0)).unwrap();
    assert!(filtered.is_empty());
}

#[test]
fn filter_universe_mismatch_is_rejected() {
    let law = PopularityLaw::zipf(0.8, 50).unwrap();
    assert!(law.filtered(&constant_profile(49, 0.0)).is_err());
}

#[test]
fn che_filter_depresses_popular_ranks() {
    let law = PopularityLaw::zipf(0.8, 10_000).unwrap();
    let solution = lru::solve_characteristic_time(&law, 1000.0).unwrap();
    let profile = lru::hit_profile(&law, &solution, &[1]).unwrap();
    assert!(profile.rates()[0] > 0.999_999);
    let filtered = law.filtered(&profile).unwrap();
    assert_eq!(filtered.population(), 10_000);

    // Pointwise q'(n) = q(n) (1 - h(n)) = q(n) exp(-q(n) t_C).
    for n in [1u64, 10, 100, 1000, 10_000] {
        let q = law.weight(n).unwrap();
        let expect = q * (-q * solution.t_c).exp();
        let got = filtered.weight(n).unwrap();
        assert!(
            (got - expect).abs() <= 1e-12 * expect.max(1e-300),
            "rank {n}: {got} vs {expect}"
        );
    }
    // The head is pushed below mid ranks: the filtered law is no longer
    // rank-monotone.
    assert!(filtered.weight(1).unwrap() < filtered.weight(100).unwrap());
}

#[test]
fn per_rank_filter_drops_fully_hit_items() {
    let law = PopularityLaw::explicit(vec![4.0, 3.0, 2.0, 1.0]).unwrap();
    let profile = crate::lru::HitProfile::from_rates(vec![1.0, 0.5, 0.0, 1.0], 0.8).unwrap();
    let filtered = law.filtered(&profile).unwrap();
    assert_eq!(filtered.population(), 2);
    assert_eq!(filtered.weight(1).unwrap(), 1.5);
    assert_eq!(filtered.weight(2).unwrap(), 2.0);
}

#[test]
fn uniform_segmentation_is_a_single_segment() {
    let law = PopularityLaw::uniform(1_000_000).unwrap();
    let seg = law.segmentation(0.1).unwrap();
    assert_eq!(seg.segment_count(), 1);
    assert_eq!(seg.breakpoints(), vec![1, 1_000_001]);
}

#[test]
fn zipf_segment_count_is_logarithmic() {
    let law = PopularityLaw::zipf(0.8, 1_000_000).unwrap();
    let eps = 1e-3;
    let seg = law.segmentation(eps).unwrap();
    // Ratio bound per segment plus the per-item head region.
    let bound = (0.8 * (1e6f64).ln() / (1.0 + eps).ln()).ceil() + 1.0 / eps + 16.0;
    assert!(
        (seg.segment_count() as f64) <= bound,
        "{} segments exceeds {bound}",
        seg.segment_count()
    );
    // Within-segment weight ratio honors the tolerance.
    for s in seg.segments() {
        assert!(s.q_hi() <= s.q_lo() * (1.0 + eps) * (1.0 + 1e-12));
    }
}

#[test]
fn segment_count_stays_small_at_web_scale() {
    let law = PopularityLaw::zipf(0.8, 100_000_000_000).unwrap();
    let seg = law.segmentation(1e-4).unwrap();
    let bound = 0.8 * (1e11f64).ln() / (1e-4f64).ln_1p() + 1.25 / 1e-4 + 16.0;
    assert!((seg.segment_count() as f64) < bound);
}

#[test]
fn bucketed_sums_match_exact_sums_on_truncations() {
    // Same grouping rule as the web-scale catalog, checked against exact
    // summation where that is still possible.
    for (alpha, eps) in [(0.8, 1e-4), (0.8, 1e-3), (1.2, 1e-4)] {
        let law = PopularityLaw::zipf(alpha, 1_000_000).unwrap();
        let seg = law.segmentation(eps).unwrap();
        let exact_mass = exact_sum(&law, |q| q);
        let bucketed = seg.sum(|q| q);
        assert!(
            (bucketed - exact_mass).abs() <= eps * exact_mass,
            "alpha {alpha} eps {eps}: {bucketed} vs {exact_mass}"
        );
        for t in [10.0, 1e3, 1e5] {
            let exact_m = exact_sum(&law, |q| -(-q * t).exp_m1());
            let approx = seg.sum(|q| -(-q * t).exp_m1());
            assert!(
                (approx - exact_m).abs() <= eps * exact_m,
                "alpha {alpha} eps {eps} t {t}: {approx} vs {exact_m}"
            );
        }
    }
}

#[test]
fn non_monotone_explicit_falls_back_to_per_item() {
    let law = PopularityLaw::explicit(vec![1.0, 3.0, 2.0]).unwrap();
    let seg = law.segmentation(0.5).unwrap();
    assert_eq!(seg.segment_count(), 3);
    assert_eq!(seg.sum(|q| q), 6.0);
}

#[test]
fn total_mass_of_explicit_is_exact() {
    let law = PopularityLaw::explicit(vec![0.5, 0.25, 0.125]).unwrap();
    assert_eq!(law.total_mass(), 0.875);
}

#[test]
fn top_mass_uniform_and_tiny_zipf() {
    let uniform = PopularityLaw::uniform(100).unwrap();
    let top = uniform.sorted_top_mass(50.0).unwrap();
    assert!((top / uniform.total_mass() - 0.5).abs() < 1e-12);

    // zipf(1), N=4, budget 2: (1 + 1/2) / (1 + 1/2 + 1/3 + 1/4) = 0.72.
    let zipf = PopularityLaw::zipf(1.0, 4).unwrap();
    let frac = zipf.sorted_top_mass(2.0).unwrap() / zipf.total_mass();
    assert!((frac - 0.72).abs() < 1e-12, "{frac}");
}

#[test]
fn top_mass_threshold_search_matches_exact_prefix() {
    // Past the dense limit the threshold search takes over; a single
    // monotone law makes the exact answer a plain prefix sum.
    let law = PopularityLaw::zipf(0.9, 3_000_000).unwrap();
    let mut exact = KahanSum::new();
    for n in 1..=400_000u64 {
        exact.add((n as f64).powf(-0.9));
    }
    let got = law.sorted_top_mass(400_000.0).unwrap();
    assert!(
        (got - exact.value()).abs() <= 2e-6 * exact.value(),
        "{got} vs {}",
        exact.value()
    );
}

#[test]
fn top_mass_threshold_search_on_a_mixture() {
    // Mixture big enough to avoid the dense path. The two components'
    // weight sequences interleave, so the oracle merges enough of both
    // heads and sorts exactly.
    let a = PopularityLaw::zipf(0.7, 2_500_000).unwrap();
    let b = PopularityLaw::zipf(1.1, 1_000_000).unwrap();
    let mix = PopularityLaw::mixture(vec![(0.6, a), (0.4, b)]).unwrap();
    let budget = 300_000.0;

    let mut weights: Vec<f64> = (1..=500_000u64)
        .map(|n| mix.weight(n).unwrap())
        .chain((2_500_001..=2_500_000 + 500_000u64).map(|n| mix.weight(n).unwrap()))
        .collect();
    weights.sort_unstable_by(|x, y| y.total_cmp(x));
    let exact: f64 = weights[..300_000].iter().sum();

    let got = mix.sorted_top_mass(budget).unwrap();
    assert!((got - exact).abs() <= 2e-6 * exact, "{got} vs {exact}");
}

#[test]
fn top_mass_budget_validation() {
    let law = PopularityLaw::uniform(10).unwrap();
    assert!(law.sorted_top_mass(0.0).is_err());
    assert!(law.sorted_top_mass(11.0).is_err());
    assert_eq!(law.sorted_top_mass(10.0).unwrap(), law.total_mass());
}

#[test]
fn explicit_expansion_respects_limit() {
    let law = PopularityLaw::zipf(0.8, 1000).unwrap().chunked(3).unwrap();
    assert_eq!(law.to_explicit_weights(5000).unwrap().len(), 3000);
    assert!(law.to_explicit_weights(100).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn zipf_and_geometric_weights_are_nonincreasing(
        alpha in 0.2f64..2.0,
        rho in 0.1f64..0.99,
        n in 2u64..500,
    ) {
        let zipf = PopularityLaw::zipf(alpha, n).unwrap();
        let geo = PopularityLaw::geometric(rho, n).unwrap();
        for law in [zipf, geo] {
            let mut prev = f64::INFINITY;
            for rank in 1..=n {
                let w = law.weight(rank).unwrap();
                prop_assert!(w <= prev && w > 0.0);
                prev = w;
            }
        }
    }

    #[test]
    fn mixture_mass_equals_share_total(
        s1 in 0.1f64..3.0,
        s2 in 0.1f64..3.0,
        n1 in 1u64..2000,
        n2 in 1u64..2000,
        alpha in 0.3f64..1.6,
    ) {
        let mix = PopularityLaw::mixture(vec![
            (s1, PopularityLaw::zipf(alpha, n1).unwrap()),
            (s2, PopularityLaw::uniform(n2).unwrap()),
        ]).unwrap();
        let total = mix.total_mass();
        prop_assert!((total - (s1 + s2)).abs() <= 1e-9 * (s1 + s2));
    }

    #[test]
    fn segmented_sums_stay_within_tolerance(
        alpha in 0.3f64..1.6,
        eps in 1e-5f64..1e-2,
        scale in -3.0f64..5.0,
        n in 1_000u64..100_000,
    ) {
        // The segmented-sum contract on catalogs small enough to verify
        // exhaustively, for the summand families the solvers rely on.
        let law = PopularityLaw::zipf(alpha, n).unwrap();
        let seg = law.segmentation(eps).unwrap();
        let t = 10f64.powf(scale);

        let exact_mass = exact_sum(&law, |q| q);
        prop_assert!((seg.sum(|q| q) - exact_mass).abs() <= eps * exact_mass);

        let f = |q: f64| -(-q * t).exp_m1();
        let exact_m = exact_sum(&law, f);
        prop_assert!((seg.sum(f) - exact_m).abs() <= eps * exact_m.max(1e-300));
    }
}
