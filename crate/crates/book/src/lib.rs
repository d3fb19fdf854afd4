//! The guide in `book/src` compiled as doc comments, so `cargo test --doc`
//! runs every Rust listing in it. One module per chapter keeps failures
//! traceable to their source file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}
#[doc = include_str!("../../../book/src/thresholds.md")]
pub mod thresholds {}
#[doc = include_str!("../../../book/src/roro.md")]
pub mod roro {}
#[doc = include_str!("../../../book/src/offline.md")]
pub mod offline {}
#[doc = include_str!("../../../book/src/advice.md")]
pub mod advice {}
#[doc = include_str!("../../../book/src/adversarial.md")]
pub mod adversarial {}
#[doc = include_str!("../../../book/src/evcharge.md")]
pub mod evcharge {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
