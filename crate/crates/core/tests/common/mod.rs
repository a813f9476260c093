#![allow(dead_code)]

use std::path::{Path, PathBuf};

use bookqa_core::corpus::{load_dataset, Dataset, LoadOptions};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// The committed mini-corpus, chunked as in its pipeline config.
pub fn mini() -> Dataset {
    let opts = LoadOptions {
        chunk_size: 100,
        ..LoadOptions::default()
    };
    load_dataset(&fixtures().join("mini-corpus"), &opts).unwrap()
}
