// mdbook cannot run listings that depend on workspace crates, so each
// chapter of ../../book/src is pulled in as the docs of an empty module and
// `cargo test --doc` compiles and runs every listing. A failing doctest
// names the module, which names the chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/circuits.md")]
pub mod circuits {}
#[doc = include_str!("../../../book/src/gradients.md")]
pub mod gradients {}
#[doc = include_str!("../../../book/src/noise.md")]
pub mod noise {}
#[doc = include_str!("../../../book/src/pools.md")]
pub mod pools {}
#[doc = include_str!("../../../book/src/objectives.md")]
pub mod objectives {}
#[doc = include_str!("../../../book/src/search.md")]
pub mod search {}
#[doc = include_str!("../../../book/src/encoder.md")]
pub mod encoder {}
#[doc = include_str!("../../../book/src/finetune.md")]
pub mod finetune {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
