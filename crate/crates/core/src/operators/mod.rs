//! Variation operators and the two caching transforms.

pub mod cache;
mod variation;

pub use cache::{
    apply_class_cache, apply_method_cache, class_cache_targets, find_call, method_cache_targets,
    CacheRejection, CacheScope, CacheTarget,
};
pub use variation::{crossover, mutate, random_edit, EditSpace};
