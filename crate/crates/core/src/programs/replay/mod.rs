//! Canonical replay scripts, one per strategy family. Their source text is
//! what the script manifest measures.

pub mod adapter;
pub mod alpha;
pub mod base;
pub mod full_model;
pub mod head_only;
pub mod prompt;
pub mod subset;

pub mod sources {
    pub const ADAPTER: &str = include_str!("adapter.rs");
    pub const ALPHA: &str = include_str!("alpha.rs");
    pub const BASE: &str = include_str!("base.rs");
    pub const FULL_MODEL: &str = include_str!("full_model.rs");
    pub const HEAD_ONLY: &str = include_str!("head_only.rs");
    pub const PROMPT: &str = include_str!("prompt.rs");
    pub const SUBSET: &str = include_str!("subset.rs");
}
