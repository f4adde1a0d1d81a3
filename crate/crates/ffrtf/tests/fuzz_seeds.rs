//! Replays the checked-in fuzz corpus through both parsers.

use std::fs;
use std::path::PathBuf;

use ffrtf::algebra::{BiLaurent, Ring};

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn config_seeds() {
    let seeds = seeds("config");
    assert!(!seeds.is_empty());
    for (name, src) in seeds {
        let parsed = ffrtf::config::parse(&src);
        assert_eq!(parsed.is_ok(), !name.starts_with("bad-"), "{name}: {:?}", parsed.err());
    }
}

#[test]
fn bilaurent_seeds() {
    let seeds = seeds("bilaurent");
    assert!(!seeds.is_empty());
    for (name, src) in seeds {
        let x: BiLaurent = BiLaurent::parse(Ring::Rational, &src).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(x.canonical(), src, "{name}");
    }
}
