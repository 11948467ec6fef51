//! Fixed benchmark fixtures built from seeded random instances.

use intrisk_core::instances::{instance_rng, random_unacceptable_instance, Family, Instance};

/// `count` unacceptable instances of `family`, reproducible from `seed`.
pub fn fixtures(family: Family, seed: u64, count: usize) -> Vec<Instance> {
    (0..count as u64)
        .map(|i| {
            random_unacceptable_instance(&mut instance_rng(seed, i), family)
                .expect("generated instances are valid")
        })
        .collect()
}
