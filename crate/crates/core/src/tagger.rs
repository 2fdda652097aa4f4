//! Penn Treebank part-of-speech tagging.
//!
//! Three backends sit behind [`Tagger`]:
//!
//! - a builtin rule tagger (closed-class lexicon, ordered suffix rules and a
//!   few contextual rules, default `NN`), driven by a versioned data file;
//! - pretagged input (`token/TAG` pairs) passed through as-is;
//! - an external tagger speaking newline-delimited JSON over a child
//!   process's stdin/stdout or over HTTP: request `{id, tokens}`, response
//!   `{id, tags}`.
//!
//! Every emitted tag must belong to [`tagset`].

use std::borrow::Cow;
use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::{Error, Result};

pub const PRETAGGED_ID: &str = "pretagged";

const TAGSET_JSON: &str = include_str!("../data/tagset.json");
const BUILTIN_RULES_JSON: &str = include_str!("../data/builtin_tagger_v1.json");

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TagInfo {
    pub tag: String,
    pub description: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tagset {
    pub name: String,
    pub tags: Vec<TagInfo>,
}

/// The shipped tag reference table.
pub fn tagset() -> &'static Tagset {
    static TAGSET: OnceLock<Tagset> = OnceLock::new();
    TAGSET.get_or_init(|| serde_json::from_str(TAGSET_JSON).expect("shipped tagset is valid JSON"))
}

fn tag_names() -> &'static HashSet<String> {
    static NAMES: OnceLock<HashSet<String>> = OnceLock::new();
    NAMES.get_or_init(|| tagset().tags.iter().map(|t| t.tag.clone()).collect())
}

pub fn is_known_tag(tag: &str) -> bool {
    tag_names().contains(tag)
}

fn check_tags(tags: &[String], expected: usize) -> Result<()> {
    if tags.len() != expected {
        return Err(Error::TagLengthMismatch {
            expected,
            found: tags.len(),
        });
    }
    if let Some(bad) = tags.iter().find(|t| !is_known_tag(t)) {
        return Err(Error::UnknownTag(bad.clone()));
    }
    Ok(())
}

/// Tags for one document plus the id of the tagger that produced them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagSequence {
    tags: Vec<String>,
    tagger: String,
}

impl TagSequence {
    pub fn new(tags: Vec<String>, tagger: impl Into<String>) -> Self {
        Self {
            tags,
            tagger: tagger.into(),
        }
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn tagger(&self) -> &str {
        &self.tagger
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn truncated(&self, len: usize) -> Self {
        Self {
            tags: self.tags[..len.min(self.tags.len())].to_vec(),
            tagger: self.tagger.clone(),
        }
    }
}

/// Parses one `token/TAG token/TAG ...` line. The tag is whatever follows the
/// last `/`, so tokens may themselves contain slashes.
pub fn parse_pretagged(line: &str) -> Result<(Vec<String>, Vec<String>)> {
    let mut tokens = Vec::new();
    let mut tags = Vec::new();
    for pair in line.split_whitespace() {
        let (tok, tag) = pair
            .rsplit_once('/')
            .filter(|(tok, tag)| !tok.is_empty() && !tag.is_empty())
            .ok_or_else(|| Error::Tagger(format!("expected token/TAG, got `{pair}`")))?;
        if !is_known_tag(tag) {
            return Err(Error::UnknownTag(tag.to_string()));
        }
        tokens.push(tok.to_string());
        tags.push(tag.to_string());
    }
    Ok((tokens, tags))
}

/// Which tagger to use and its settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TaggerSpec {
    Builtin {
        /// Alternate rules file in the builtin format.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lexicon: Option<PathBuf>,
    },
    Pretagged,
    External {
        transport: ExternalTransport,
        /// Allow concurrent requests to the endpoint.
        #[serde(default)]
        concurrent: bool,
    },
}

impl Default for TaggerSpec {
    fn default() -> Self {
        TaggerSpec::Builtin { lexicon: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ExternalTransport {
    Command {
        program: String,
        #[serde(default)]
        args: Vec<String>,
    },
    Http {
        url: String,
    },
}

/// A ready-to-use tagger.
#[derive(Clone)]
pub enum Tagger {
    Builtin(Arc<BuiltinTagger>),
    Pretagged,
    External(Arc<ExternalTagger>),
}

impl std::fmt::Debug for Tagger {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_tuple("Tagger").field(&self.id()).finish()
    }
}

impl Default for Tagger {
    fn default() -> Self {
        Tagger::builtin()
    }
}

impl Tagger {
    /// The builtin tagger with the shipped rules.
    pub fn builtin() -> Self {
        static SHARED: OnceLock<Arc<BuiltinTagger>> = OnceLock::new();
        Tagger::Builtin(
            SHARED
                .get_or_init(|| {
                    Arc::new(
                        BuiltinTagger::from_json(BUILTIN_RULES_JSON)
                            .expect("shipped tagger rules are valid"),
                    )
                })
                .clone(),
        )
    }

    pub fn from_spec(spec: &TaggerSpec) -> Result<Self> {
        Ok(match spec {
            TaggerSpec::Builtin { lexicon: None } => Tagger::builtin(),
            TaggerSpec::Builtin {
                lexicon: Some(path),
            } => Tagger::Builtin(Arc::new(BuiltinTagger::from_path(path)?)),
            TaggerSpec::Pretagged => Tagger::Pretagged,
            TaggerSpec::External {
                transport,
                concurrent,
            } => Tagger::External(Arc::new(ExternalTagger::new(
                transport.clone(),
                *concurrent,
            ))),
        })
    }

    /// Identifier recorded alongside tags, e.g. `builtin-v1`.
    pub fn id(&self) -> String {
        match self {
            Tagger::Builtin(b) => b.version.clone(),
            Tagger::Pretagged => PRETAGGED_ID.to_string(),
            Tagger::External(e) => e.id(),
        }
    }

    /// Tags for a token sequence. With the pretagged backend each token must
    /// itself be a `token/TAG` pair.
    pub fn tag(&self, tokens: &[String]) -> Result<TagSequence> {
        let tags = match self {
            Tagger::Builtin(b) => b.tag(tokens),
            Tagger::Pretagged => {
                let (_, tags) = parse_pretagged(&tokens.join(" "))?;
                check_tags(&tags, tokens.len())?;
                tags
            }
            Tagger::External(e) => e.tag(None, tokens)?,
        };
        Ok(TagSequence::new(tags, self.id()))
    }

    /// Tags already on `doc` when this tagger produced them, else fresh ones.
    pub fn tags_for<'d>(&self, doc: &'d Document) -> Result<Cow<'d, TagSequence>> {
        match doc.tags() {
            Some(t) if t.tagger() == self.id() => Ok(Cow::Borrowed(t)),
            _ => Ok(Cow::Owned(self.tag_document(doc)?)),
        }
    }

    pub fn tag_document(&self, doc: &Document) -> Result<TagSequence> {
        match self {
            Tagger::Pretagged => doc
                .tags()
                .cloned()
                .ok_or_else(|| Error::Untagged(doc.id().to_string())),
            Tagger::External(e) => Ok(TagSequence::new(
                e.tag(Some(doc.id()), doc.tokens())?,
                self.id(),
            )),
            Tagger::Builtin(_) => self.tag(doc.tokens()),
        }
    }
}

/// Tags `tokens` with the named backend.
pub fn tag(tokens: &[String], spec: &TaggerSpec) -> Result<TagSequence> {
    Tagger::from_spec(spec)?.tag(tokens)
}

#[derive(Debug, Clone, Deserialize)]
struct SuffixRule {
    suffix: String,
    tag: String,
    min_len: usize,
}

#[derive(Debug, Clone, Deserialize)]
struct RulesFile {
    version: String,
    default_tag: String,
    lexicon: HashMap<String, String>,
    punctuation: HashMap<String, String>,
    symbol_tag: String,
    number_tag: String,
    proper_noun_tag: String,
    participle_triggers: Vec<String>,
    base_form_after: Vec<String>,
    plural_subject_pronouns: Vec<String>,
    third_person_verb_after: Vec<String>,
    third_person_pronouns: Vec<String>,
    non_plural_endings: Vec<String>,
    suffix_rules: Vec<SuffixRule>,
}

/// Lexicon + suffix-rule tagger. Stateless once built.
#[derive(Debug)]
pub struct BuiltinTagger {
    version: String,
    rules: RulesFile,
    participle_triggers: HashSet<String>,
    plural_subjects: HashSet<String>,
    third_person_pronouns: HashSet<String>,
}

impl BuiltinTagger {
    pub fn from_path(path: &Path) -> Result<Self> {
        let body = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&body)
    }

    pub fn from_json(body: &str) -> Result<Self> {
        let rules: RulesFile = serde_json::from_str(body)
            .map_err(|e| Error::Tagger(format!("invalid rules file: {e}")))?;
        let mut emitted: Vec<&String> = vec![
            &rules.default_tag,
            &rules.symbol_tag,
            &rules.number_tag,
            &rules.proper_noun_tag,
        ];
        emitted.extend(rules.lexicon.values());
        emitted.extend(rules.punctuation.values());
        emitted.extend(rules.suffix_rules.iter().map(|r| &r.tag));
        if let Some(bad) = emitted.into_iter().find(|t| !is_known_tag(t)) {
            return Err(Error::UnknownTag(bad.clone()));
        }
        let set = |v: &[String]| v.iter().cloned().collect::<HashSet<_>>();
        Ok(Self {
            version: rules.version.clone(),
            participle_triggers: set(&rules.participle_triggers),
            plural_subjects: set(&rules.plural_subject_pronouns),
            third_person_pronouns: set(&rules.third_person_pronouns),
            rules,
        })
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn tag(&self, tokens: &[String]) -> Vec<String> {
        let mut tags: Vec<String> = Vec::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            let prev_tag = tags.last().map(String::as_str);
            let prev_lower = i
                .checked_sub(1)
                .map(|j| tokens[j].to_lowercase())
                .unwrap_or_default();
            let sentence_initial = i == 0 || prev_tag == Some(".");
            let tag = self.tag_one(tok, prev_tag, &prev_lower, sentence_initial);
            tags.push(tag.to_string());
        }
        tags
    }

    fn tag_one<'a>(
        &'a self,
        tok: &str,
        prev_tag: Option<&str>,
        prev_lower: &str,
        sentence_initial: bool,
    ) -> &'a str {
        let r = &self.rules;
        if !tok.chars().any(char::is_alphanumeric) {
            return r.punctuation.get(tok).unwrap_or(&r.symbol_tag);
        }
        if tok.chars().any(|c| c.is_ascii_digit())
            && tok
                .chars()
                .all(|c| c.is_ascii_digit() || c == '.' || c == ',')
        {
            return &r.number_tag;
        }
        let lower = tok.to_lowercase();
        if let Some(t) = r.lexicon.get(&lower) {
            return t;
        }
        if !sentence_initial && tok.chars().next().is_some_and(char::is_uppercase) {
            return &r.proper_noun_tag;
        }
        if prev_tag.is_some_and(|p| r.base_form_after.iter().any(|b| b == p)) {
            return "VB";
        }
        let len = lower.chars().count();
        for rule in &r.suffix_rules {
            if len >= rule.min_len && lower.ends_with(&rule.suffix) {
                if rule.tag == "VBD" && self.participle_triggers.contains(prev_lower) {
                    return "VBN";
                }
                return &rule.tag;
            }
        }
        if len >= 3
            && lower.ends_with('s')
            && !r
                .non_plural_endings
                .iter()
                .any(|e| lower.ends_with(e.as_str()))
        {
            let after_subject = prev_tag
                .is_some_and(|p| r.third_person_verb_after.iter().any(|t| t == p))
                || self.third_person_pronouns.contains(prev_lower);
            return if after_subject { "VBZ" } else { "NNS" };
        }
        if self.plural_subjects.contains(prev_lower) {
            return "VBP";
        }
        &r.default_tag
    }
}

#[derive(Serialize)]
struct TagRequest<'a> {
    id: &'a str,
    tokens: &'a [String],
}

#[derive(Deserialize)]
struct TagResponse {
    id: serde_json::Value,
    tags: Vec<String>,
}

struct ChildIo {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl Drop for ChildIo {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Tagger backed by another process or an HTTP endpoint.
pub struct ExternalTagger {
    transport: ExternalTransport,
    concurrent: bool,
    child: Mutex<Option<ChildIo>>,
    http_gate: Mutex<()>,
    next_id: AtomicU64,
}

impl ExternalTagger {
    pub fn new(transport: ExternalTransport, concurrent: bool) -> Self {
        Self {
            transport,
            concurrent,
            child: Mutex::new(None),
            http_gate: Mutex::new(()),
            next_id: AtomicU64::new(0),
        }
    }

    pub fn id(&self) -> String {
        match &self.transport {
            ExternalTransport::Command { program, .. } => format!("external:{program}"),
            ExternalTransport::Http { url } => format!("external:{url}"),
        }
    }

    fn tag(&self, id: Option<&str>, tokens: &[String]) -> Result<Vec<String>> {
        let generated;
        let id = match id {
            Some(id) => id,
            None => {
                generated = format!("req-{}", self.next_id.fetch_add(1, Ordering::Relaxed));
                &generated
            }
        };
        let request = TagRequest { id, tokens };
        let response = match &self.transport {
            ExternalTransport::Command { program, args } => {
                self.call_child(program, args, &request)?
            }
            ExternalTransport::Http { url } => {
                let _gate = if self.concurrent {
                    None
                } else {
                    Some(self.http_gate.lock().unwrap_or_else(|e| e.into_inner()))
                };
                call_http(url, &request)?
            }
        };
        let echoed = match &response.id {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        if echoed != id {
            return Err(Error::Tagger(format!(
                "response id `{echoed}` does not match request `{id}`"
            )));
        }
        check_tags(&response.tags, tokens.len())?;
        Ok(response.tags)
    }

    fn call_child(&self, program: &str, args: &[String], req: &TagRequest) -> Result<TagResponse> {
        let mut guard = self.child.lock().unwrap_or_else(|e| e.into_inner());
        if guard.is_none() {
            let mut child = Command::new(program)
                .args(args)
                .stdin(Stdio::piped())
                .stdout(Stdio::piped())
                .spawn()
                .map_err(|e| Error::Tagger(format!("cannot start `{program}`: {e}")))?;
            let stdin = child.stdin.take().expect("piped stdin");
            let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
            *guard = Some(ChildIo {
                child,
                stdin,
                stdout,
            });
        }
        let io = guard.as_mut().expect("child initialised above");
        let result = (|| {
            let mut line = serde_json::to_string(req).map_err(|e| Error::Tagger(e.to_string()))?;
            line.push('\n');
            io.stdin
                .write_all(line.as_bytes())
                .and_then(|_| io.stdin.flush())
                .map_err(|e| Error::Tagger(format!("`{program}` unreachable: {e}")))?;
            let mut reply = String::new();
            let read = io
                .stdout
                .read_line(&mut reply)
                .map_err(|e| Error::Tagger(format!("`{program}` unreachable: {e}")))?;
            if read == 0 {
                return Err(Error::Tagger(format!("`{program}` closed its output")));
            }
            serde_json::from_str::<TagResponse>(&reply)
                .map_err(|e| Error::Tagger(format!("bad response from `{program}`: {e}")))
        })();
        if result.is_err() {
            // restart on next call
            *guard = None;
        }
        result
    }
}

fn call_http(url: &str, req: &TagRequest) -> Result<TagResponse> {
    let mut resp = ureq::post(url)
        .send_json(req)
        .map_err(|e| Error::Tagger(format!("{url} unreachable: {e}")))?;
    resp.body_mut()
        .read_json::<TagResponse>()
        .map_err(|e| Error::Tagger(format!("bad response from {url}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenize::tokenize;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn tagset_has_36_word_tags() {
        let word_tags = tagset()
            .tags
            .iter()
            .filter(|t| t.tag.chars().any(|c| c.is_ascii_alphabetic()) && !t.tag.starts_with('-'))
            .count();
        assert_eq!(word_tags, 36);
    }

    #[test]
    fn empty_input_gives_empty_tags() {
        assert!(Tagger::builtin().tag(&[]).unwrap().is_empty());
    }

    #[test]
    fn determiner_noun_verb() {
        let tags = Tagger::builtin().tag(&toks("the dog runs")).unwrap();
        assert_eq!(tags.tags(), ["DT", "NN", "VBZ"]);
        assert_eq!(tags.tagger(), "builtin-v1");
    }

    #[test]
    fn demo_sentence() {
        let tags = Tagger::builtin()
            .tag(&toks("I enjoy walking with my cute dog..."))
            .unwrap();
        assert_eq!(
            tags.tags(),
            ["PRP", "VBP", "VBG", "IN", "PRP$", "NN", "NN", ".", ".", "."]
        );
    }

    #[test]
    fn contextual_rules() {
        let t = Tagger::builtin();
        assert_eq!(
            t.tag(&toks("Alice visited Bob")).unwrap().tags(),
            ["NN", "VBD", "NNP"]
        );
        assert_eq!(
            t.tag(&toks("we have finished")).unwrap().tags(),
            ["PRP", "VBP", "VBN"]
        );
        assert_eq!(
            t.tag(&toks("you should walk")).unwrap().tags(),
            ["PRP", "MD", "VB"]
        );
        assert_eq!(t.tag(&toks("the cats")).unwrap().tags(), ["DT", "NNS"]);
        assert_eq!(
            t.tag(&toks("It rained. Paris")).unwrap().tags(),
            ["PRP", "VBD", ".", "NN"]
        );
        assert_eq!(
            t.tag(&toks("costs $ 5 (approx)")).unwrap().tags(),
            ["NNS", "$", "CD", "-LRB-", "NN", "-RRB-"]
        );
    }

    #[test]
    fn pretagged_parses_pairs() {
        let (tokens, tags) = parse_pretagged("the/DT dog/NN").unwrap();
        assert_eq!(tokens, ["the", "dog"]);
        assert_eq!(tags, ["DT", "NN"]);
        let seq = Tagger::Pretagged
            .tag(&["the/DT".to_string(), "dog/NN".to_string()])
            .unwrap();
        assert_eq!(seq.tags(), ["DT", "NN"]);
        assert!(matches!(
            parse_pretagged("the/XX"),
            Err(Error::UnknownTag(_))
        ));
        assert!(parse_pretagged("nodelimiter").is_err());
        assert_eq!(parse_pretagged("1/2/CD").unwrap().0, ["1/2"]);
    }

    #[test]
    fn pretagged_document_without_tags_is_error() {
        let doc = Document::new("x", "plain text");
        assert!(matches!(
            Tagger::Pretagged.tag_document(&doc),
            Err(Error::Untagged(_))
        ));
    }

    #[test]
    fn rules_with_unknown_tag_rejected() {
        let body =
            BUILTIN_RULES_JSON.replace("\"default_tag\": \"NN\"", "\"default_tag\": \"NOUN\"");
        assert!(matches!(
            BuiltinTagger::from_json(&body),
            Err(Error::UnknownTag(_))
        ));
    }
}
