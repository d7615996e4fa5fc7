use ctxldp::mechanisms::{privatize_all, BsHadamardResponse, ChannelSampler, HlHadamardResponse, Privatizer};
use ctxldp::seed::rng_for;
use ctxldp::{verify_eldp, Channel, Partition, PrivacyMatrix, SensitiveSet};
use proptest::prelude::*;

/// Empirical row frequencies of a structured sampler against the dense channel.
fn sampler_matches<P: Privatizer>(mech: &P, q: &Channel, draws: usize) {
    let mut rng = rng_for(77, &[mech.input_size() as u64]);
    for x in 0..q.k_in() {
        let mut counts = vec![0usize; q.k_out()];
        for _ in 0..draws {
            counts[mech.sample(x, &mut rng).unwrap()] += 1;
        }
        for (y, &c) in counts.iter().enumerate() {
            let p = q.prob(x, y);
            let sd = (p * (1.0 - p) / draws as f64).sqrt();
            let f = c as f64 / draws as f64;
            assert!((f - p).abs() <= 5.0 * sd + 1e-12, "x={x} y={y}: {f} vs {p}");
        }
    }
}

#[test]
fn structured_samplers_follow_their_channels() {
    let hl = HlHadamardResponse::new(&SensitiveSet::new(6, 2).unwrap(), 1.3).unwrap();
    sampler_matches(&hl, &hl.channel().unwrap(), 40_000);
    let bs = BsHadamardResponse::new(&Partition::from_sizes(&[3, 1, 4]).unwrap(), 0.7).unwrap();
    sampler_matches(&bs, &bs.channel().unwrap(), 40_000);
}

#[test]
fn dense_sampler_follows_channel() {
    let q = Channel::new(vec![vec![0.5, 0.0, 0.5], vec![0.1, 0.2, 0.7]]).unwrap();
    let sampler = ChannelSampler::new(&q);
    sampler_matches(&sampler, &q, 40_000);
}

#[test]
fn privatization_is_reproducible() {
    let mech = HlHadamardResponse::new(&SensitiveSet::new(20, 5).unwrap(), 1.0).unwrap();
    let xs: Vec<usize> = (0..2000).map(|i| i % 20).collect();
    let a = privatize_all(&mech, &xs, 9).unwrap();
    assert_eq!(a, privatize_all(&mech, &xs, 9).unwrap());
    assert_ne!(a, privatize_all(&mech, &xs, 10).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn high_low_channel_is_private(k in 2usize..48, frac in 0.0f64..1.0, eps in 0.05f64..5.0) {
        let s = 1 + ((k - 1) as f64 * frac) as usize % (k - 1);
        let a = SensitiveSet::new(k, s).unwrap();
        let mech = HlHadamardResponse::new(&a, eps).unwrap();
        let q = mech.channel().unwrap();
        prop_assert_eq!(q.k_out(), mech.output_size());
        let report = verify_eldp(&q, &PrivacyMatrix::high_low(&a, eps).unwrap()).unwrap();
        prop_assert!(report.ok);
        prop_assert!(report.slack.abs() < 1e-9);
    }

    #[test]
    fn block_channel_is_private(block_of in prop::collection::vec(0usize..5, 1..40), eps in 0.05f64..5.0) {
        // Relabel to dense block ids so no block is empty.
        let mut ids: Vec<usize> = block_of.clone();
        ids.sort_unstable();
        ids.dedup();
        let dense: Vec<usize> = block_of.iter().map(|b| ids.binary_search(b).unwrap()).collect();
        let part = Partition::new(dense).unwrap();
        let q = BsHadamardResponse::new(&part, eps).unwrap().channel().unwrap();
        let report = verify_eldp(&q, &PrivacyMatrix::block_structured(&part, eps).unwrap()).unwrap();
        prop_assert!(report.ok);
        for x in 0..part.k() {
            for xp in 0..part.k() {
                if !part.same_block(x, xp) {
                    prop_assert!(!report.attained.get(x, xp).is_finite());
                }
            }
        }
    }
}
