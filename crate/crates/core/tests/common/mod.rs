#![allow(dead_code)]

use divkit_core::Corpus;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixed vocabulary: function words the builtin tagger knows plus content
/// words hitting its suffix rules.
pub const VOCAB: &[&str] = &[
    "the",
    "a",
    "this",
    "that",
    "dog",
    "cat",
    "river",
    "house",
    "garden",
    "teacher",
    "runs",
    "walked",
    "is",
    "was",
    "quickly",
    "slowly",
    "green",
    "happy",
    "and",
    "or",
    "in",
    "on",
    "with",
    "under",
    "we",
    "they",
    "he",
    "she",
    "will",
    "can",
    "to",
    "planning",
    "decisions",
    "movement",
    "brightly",
    "Paris",
    "London",
    "42",
    "seven",
    ",",
    ".",
    "!",
    "of",
    "for",
    "table",
    "window",
    "music",
    "bread",
    "sings",
    "opened",
    "careful",
    "beautiful",
    "tomorrow",
    "never",
    "often",
];

pub fn random_tokens(rng: &mut impl Rng, len: usize, vocab: &[&str]) -> Vec<String> {
    (0..len)
        .map(|_| vocab.choose(rng).unwrap().to_string())
        .collect()
}

pub fn random_doc(rng: &mut impl Rng, len: usize) -> String {
    random_tokens(rng, len, VOCAB).join(" ")
}

pub fn random_corpus(rng: &mut impl Rng, docs: usize, min_len: usize, max_len: usize) -> Corpus {
    let texts: Vec<String> = (0..docs)
        .map(|_| {
            let len = rng.random_range(min_len..=max_len);
            random_doc(rng, len)
        })
        .collect();
    Corpus::from_texts(texts).unwrap()
}

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

/// One-request-per-connection HTTP/1.1 server on a random local port. The
/// handler receives the request body and returns `(status, body)`.
pub struct TestServer {
    pub url: String,
    pub requests: Arc<AtomicUsize>,
}

pub fn serve_http<F>(handler: F) -> TestServer
where
    F: Fn(&str) -> (u16, String) + Send + Sync + 'static,
{
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let requests = Arc::new(AtomicUsize::new(0));
    let counter = requests.clone();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            counter.fetch_add(1, Ordering::SeqCst);
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0usize;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 {
                    break;
                }
                let line = line.trim_end();
                if line.is_empty() {
                    break;
                }
                if let Some((k, v)) = line.split_once(':') {
                    if k.eq_ignore_ascii_case("content-length") {
                        len = v.trim().parse().unwrap_or(0);
                    }
                }
            }
            let mut body = vec![0; len];
            let _ = reader.read_exact(&mut body);
            let (status, reply) = handler(&String::from_utf8_lossy(&body));
            let _ = write!(
                stream,
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{reply}",
                reply.len()
            );
        }
    });
    TestServer { url, requests }
}
