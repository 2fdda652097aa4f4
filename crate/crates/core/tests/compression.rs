mod common;

use std::io::Write;
use std::process::Command;

use divkit_core::compression::{compressed_size, is_tiny, pos_stream, ratio_of_bytes};
use divkit_core::{
    compression_ratio, concat, pos_compression_ratio, CompressionConfig, Corpus, Tagger,
};
use rand::distr::Alphanumeric;
use rand::Rng;

fn gzip_cli_size(data: &[u8]) -> Option<usize> {
    let mut child = Command::new("gzip")
        .args(["-6", "-n", "-c"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .ok()?;
    child.stdin.take()?.write_all(data).ok()?;
    let out = child.wait_with_output().ok()?;
    out.status.success().then_some(out.stdout.len())
}

fn repeated_sentence_corpus() -> Corpus {
    // 99 bytes plus the joining newline: 100 bytes per copy.
    let line = "The committee reviewed the proposal properly and agreed to revisit it at the next quarterly meeting";
    assert_eq!(line.len(), 99);
    Corpus::from_texts(std::iter::repeat_n(line, 100)).unwrap()
}

#[test]
fn matches_gzip_tool() {
    let corpus = repeated_sentence_corpus();
    let data = concat(&corpus);
    assert_eq!(data.len(), 100 * 100 - 1);
    let ours = compressed_size(data.as_bytes(), &CompressionConfig::default()).unwrap();
    let Some(theirs) = gzip_cli_size(data.as_bytes()) else {
        eprintln!("gzip tool not available, skipping comparison");
        return;
    };
    let rel = (ours as f64 - theirs as f64).abs() / theirs as f64;
    assert!(rel < 0.05, "ours {ours}, gzip {theirs}");
}

#[test]
fn golden_repeated_sentence() {
    let cr = compression_ratio(&repeated_sentence_corpus(), &CompressionConfig::default()).unwrap();
    // 9999 bytes in, 146 out (gzip -6 -n agrees).
    assert_eq!(cr, 9999.0 / 146.0);
}

#[test]
fn random_alphanumeric_near_one() {
    let mut rng = common::rng(11);
    let text: String = (&mut rng)
        .sample_iter(&Alphanumeric)
        .take(10_240)
        .map(char::from)
        .collect();
    let cr = ratio_of_bytes(text.as_bytes(), &CompressionConfig::default()).unwrap();
    assert!((0.9..=1.5).contains(&cr), "{cr}");
    if let Some(theirs) = gzip_cli_size(text.as_bytes()) {
        let cli = text.len() as f64 / theirs as f64;
        assert!((0.9..=1.5).contains(&cli), "{cli}");
        assert!((cr - cli).abs() < 0.05, "ours {cr}, gzip {cli}");
    }
}

#[test]
fn random_bytes_floor() {
    let mut rng = common::rng(12);
    let bytes: Vec<u8> = (0..16_384).map(|_| rng.random()).collect();
    assert!(ratio_of_bytes(&bytes, &CompressionConfig::default()).unwrap() >= 0.9);
}

#[test]
fn tiny_inputs() {
    let c = Corpus::from_texts(["x"]).unwrap();
    assert!(compression_ratio(&c, &CompressionConfig::default()).unwrap() < 1.0);
    assert!(is_tiny(&c));
    let c = Corpus::from_texts(["word"]).unwrap();
    assert!(
        pos_compression_ratio(&c, &Tagger::builtin(), &CompressionConfig::default()).unwrap() < 1.0
    );
}

#[test]
fn doubling_increases_ratio() {
    let mut rng = common::rng(13);
    for _ in 0..10 {
        let base = common::random_corpus(&mut rng, 20, 20, 40);
        assert!(concat(&base).len() >= 1024);
        let mut texts: Vec<String> = base
            .documents()
            .iter()
            .map(|d| d.text().to_string())
            .collect();
        texts.extend(texts.clone());
        let doubled = Corpus::from_texts(texts).unwrap();
        let cfg = CompressionConfig::default();
        assert!(
            compression_ratio(&doubled, &cfg).unwrap() > compression_ratio(&base, &cfg).unwrap()
        );
    }
}

#[test]
fn identical_tag_sequences_beat_shuffled_control() {
    let tagger = Tagger::builtin();
    let templated = Corpus::from_texts((0..60).map(|i| {
        format!(
            "the {} walked quickly to the {} .",
            ["dog", "cat", "man"][i % 3],
            ["house", "river"][i % 2]
        )
    }))
    .unwrap();
    let stream = pos_stream(&templated, &tagger).unwrap();
    let mut tags: Vec<&str> = stream.split_whitespace().collect();
    let per_doc = tags.len() / templated.len();
    let mut rng = common::rng(14);
    use rand::seq::SliceRandom;
    tags.shuffle(&mut rng);
    let control: String = tags
        .chunks(per_doc)
        .map(|c| c.join(" "))
        .collect::<Vec<_>>()
        .join("\n");
    assert_eq!(control.len(), stream.len());
    let cfg = CompressionConfig::default();
    let templ = pos_compression_ratio(&templated, &tagger, &cfg).unwrap();
    assert!(templ > ratio_of_bytes(control.as_bytes(), &cfg).unwrap());
}

#[test]
fn deterministic_stream() {
    let mut rng = common::rng(15);
    let c = common::random_corpus(&mut rng, 30, 10, 30);
    let cfg = CompressionConfig::default();
    let a = divkit_core::compression::compress(concat(&c).as_bytes(), &cfg).unwrap();
    let b = divkit_core::compression::compress(concat(&c).as_bytes(), &cfg).unwrap();
    assert_eq!(a, b);
}
