use std::collections::BTreeSet;

use molgen::config::{Aggregator, Config, DecodeMode, SplitMode};
use molgen::train::{held_out_size, split_indices};
use proptest::prelude::*;

fn arb_config() -> impl Strategy<Value = Config> {
    (
        (any::<u64>(), 1usize..5, 0usize..8, 1usize..6, 1usize..4),
        (prop::bool::ANY, prop::bool::ANY, prop::bool::ANY),
        (1e-6f64..1.0, 0.0f64..2.0, 1u64..100, 1usize..64),
    )
        .prop_map(|((seed, n_props, free, heads, blocks), (sum, sample, none), (lr, lambda, warm, batch))| {
            Config {
                seed,
                property_names: (0..n_props).map(|i| format!("p{i}")).collect(),
                latent_free_dims: free,
                n_heads: heads,
                d_model: heads * 4,
                n_enc_blocks: blocks,
                n_dec_blocks: blocks,
                aggregator: if sum { Aggregator::Sum } else { Aggregator::Mean },
                decode_mode: if sample { DecodeMode::Sample } else { DecodeMode::Argmax },
                split_mode: if none { SplitMode::None } else { SplitMode::Standard },
                vae_lr: lr,
                lambda1: lambda,
                kl_warmup_epochs: warm,
                batch_size: batch,
                ..Config::default()
            }
        })
}

proptest! {
    #[test]
    fn config_text_round_trips(cfg in arb_config()) {
        let back = Config::parse(&cfg.to_text()).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn standard_split_partitions_indices(n in 0usize..40_000, seed in any::<u64>()) {
        let s = split_indices(n, SplitMode::Standard, seed);
        let h = held_out_size(n);
        prop_assert_eq!(s.test.len(), h);
        prop_assert_eq!(s.val.len(), h);
        prop_assert_eq!(s.train.len(), n - 2 * h);
        let all: BTreeSet<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        prop_assert_eq!(all.len(), n);
        prop_assert!(all.iter().all(|&i| i < n));
        prop_assert_eq!(split_indices(n, SplitMode::Standard, seed), s);
    }
}
