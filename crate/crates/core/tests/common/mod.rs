#![allow(dead_code)]

use std::path::PathBuf;

use incprune::dp_update::DpConfig;
use incprune::oracle::{random_pomdp, RandomModelSpec};
use incprune::{parse_pomdp, LpMode, PomdpModel, Variant};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("data")
        .join(name)
}

pub fn read_data(name: &str) -> String {
    std::fs::read_to_string(data_path(name)).expect("test data file")
}

pub fn tiger() -> PomdpModel {
    parse_pomdp(&read_data("tiger.95.POMDP")).expect("tiger parses")
}

/// Every non-oracle configuration, labelled.
pub fn fast_configs() -> Vec<(&'static str, DpConfig)> {
    vec![
        ("plain_ip", DpConfig::for_variant(Variant::PlainIp)),
        (
            "restricted_region_ip",
            DpConfig::for_variant(Variant::RestrictedRegionIp),
        ),
        (
            "improved_full",
            DpConfig {
                lp_mode: LpMode::Full,
                ..Default::default()
            },
        ),
        (
            "improved_reduced",
            DpConfig {
                lp_mode: LpMode::Reduced,
                ..Default::default()
            },
        ),
        (
            "improved_reformulated",
            DpConfig {
                lp_mode: LpMode::Reformulated,
                ..Default::default()
            },
        ),
    ]
}

/// The sweep model for `seed`: sizes cycle through n ∈ {2,3,4}, |A| ∈ {2,3},
/// |O| ∈ {2,3}.
pub fn sweep_spec(seed: u64) -> RandomModelSpec {
    RandomModelSpec {
        states: 2 + (seed % 3) as usize,
        actions: 2 + (seed / 3 % 2) as usize,
        observations: 2 + (seed / 6 % 2) as usize,
        seed,
        ..Default::default()
    }
}

pub fn sweep_model(seed: u64) -> PomdpModel {
    random_pomdp(&sweep_spec(seed)).expect("valid random model")
}

/// Per-iteration vector counts on tiger, shared by every variant and checked
/// against the exhaustive oracle on the iterations it can afford.
pub fn tiger_golden_counts() -> Vec<usize> {
    read_data("tiger_counts.golden")
        .split_whitespace()
        .map(|t| t.parse().expect("integer count"))
        .collect()
}
