//! Compression ratios: `size(D⊕) / compressed size(D⊕)`. Higher means more
//! redundant text.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use flate2::{Compression, GzBuilder};
use serde::{Deserialize, Serialize};

use crate::corpus::{concat, Corpus};
use crate::tagger::Tagger;
use crate::{Error, Result};

/// Below this many bytes of D⊕ the container header dominates the ratio.
pub const TINY_INPUT_BYTES: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Compressor {
    /// DEFLATE in a gzip container.
    Gzip,
    /// Zstandard frame; needs the `zstd` feature.
    Zstd,
}

impl FromStr for Compressor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gzip" | "deflate-gzip" => Ok(Compressor::Gzip),
            "zstd" => Ok(Compressor::Zstd),
            other => Err(Error::InvalidParameter(format!(
                "unknown compressor `{other}`"
            ))),
        }
    }
}

impl fmt::Display for Compressor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Compressor::Gzip => "gzip",
            Compressor::Zstd => "zstd",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompressionConfig {
    pub algorithm: Compressor,
    pub level: u32,
    /// Zero the gzip mtime and omit the file name so output is reproducible.
    pub fixed_header: bool,
}

impl Default for CompressionConfig {
    fn default() -> Self {
        Self {
            algorithm: Compressor::Gzip,
            level: 6,
            fixed_header: true,
        }
    }
}

/// Compressed byte length of `data`.
pub fn compressed_size(data: &[u8], config: &CompressionConfig) -> Result<usize> {
    Ok(compress(data, config)?.len())
}

pub fn compress(data: &[u8], config: &CompressionConfig) -> Result<Vec<u8>> {
    match config.algorithm {
        Compressor::Gzip => {
            if config.level > 9 {
                return Err(Error::InvalidParameter(format!(
                    "gzip level {} outside 0..=9",
                    config.level
                )));
            }
            let mut builder = GzBuilder::new();
            builder = if config.fixed_header {
                builder.mtime(0)
            } else {
                let now = std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs() as u32)
                    .unwrap_or(0);
                builder.mtime(now)
            };
            let mut enc = builder.write(
                Vec::with_capacity(data.len() / 2 + 32),
                Compression::new(config.level),
            );
            enc.write_all(data)
                .map_err(|e| Error::Compression(e.to_string()))?;
            enc.finish().map_err(|e| Error::Compression(e.to_string()))
        }
        Compressor::Zstd => zstd_compress(data, config.level),
    }
}

#[cfg(feature = "zstd")]
fn zstd_compress(data: &[u8], level: u32) -> Result<Vec<u8>> {
    zstd::encode_all(data, level as i32).map_err(|e| Error::Compression(e.to_string()))
}

#[cfg(not(feature = "zstd"))]
fn zstd_compress(_data: &[u8], _level: u32) -> Result<Vec<u8>> {
    Err(Error::InvalidParameter(
        "zstd support not compiled in (enable the `zstd` feature)".into(),
    ))
}

/// Original over compressed size of arbitrary bytes.
pub fn ratio_of_bytes(data: &[u8], config: &CompressionConfig) -> Result<f64> {
    Ok(data.len() as f64 / compressed_size(data, config)? as f64)
}

/// Compression ratio of the newline-joined corpus text.
pub fn compression_ratio(corpus: &Corpus, config: &CompressionConfig) -> Result<f64> {
    ratio_of_bytes(concat(corpus).as_bytes(), config)
}

/// Tag stream fed to the compressor: tags joined by spaces, documents by
/// newlines. Tags already attached by the same tagger are reused.
pub fn pos_stream(corpus: &Corpus, tagger: &Tagger) -> Result<String> {
    let mut out = String::new();
    for (i, doc) in corpus.documents().iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let tags = tagger.tags_for(doc)?;
        out.push_str(&tags.tags().join(" "));
    }
    Ok(out)
}

/// Compression ratio of the part-of-speech tag stream.
pub fn pos_compression_ratio(
    corpus: &Corpus,
    tagger: &Tagger,
    config: &CompressionConfig,
) -> Result<f64> {
    ratio_of_bytes(pos_stream(corpus, tagger)?.as_bytes(), config)
}

/// True when D⊕ is small enough that header overhead dominates.
pub fn is_tiny(corpus: &Corpus) -> bool {
    concat(corpus).len() < TINY_INPUT_BYTES
}
