#![allow(dead_code)]

pub mod synth;

use std::path::{Path, PathBuf};

use pplab_core::corpus::{parse_chat_file, preprocess, PreprocessConfig, EOS_TOKEN};

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/chat")
}

/// `(name, actual utterances, expected utterances)` for every golden file.
pub fn golden_cases() -> Vec<(String, Vec<String>, Vec<String>)> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(fixture_dir())
        .expect("fixture dir")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "cha"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|cha| {
            let raw = parse_chat_file(&cha).unwrap_or_else(|e| panic!("{}: {e}", cha.display()));
            let seq = preprocess(&raw, &PreprocessConfig::default());
            let actual = seq
                .tokens
                .split(|t| t == EOS_TOKEN)
                .filter(|u| !u.is_empty())
                .map(|u| u.join(" "))
                .collect();
            let expected = std::fs::read_to_string(cha.with_extension("tokens"))
                .unwrap()
                .lines()
                .map(str::to_string)
                .collect();
            let name = cha.file_stem().unwrap().to_string_lossy().into_owned();
            (name, actual, expected)
        })
        .collect()
}
