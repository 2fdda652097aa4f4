use std::collections::BTreeMap;

use crate::corpus::{Corpus, Document};
use crate::{Error, Result};

/// Outputs of several systems for the same ordered inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemGroup {
    systems: BTreeMap<String, Corpus>,
}

impl SystemGroup {
    /// Every corpus must list the same document ids in the same order.
    pub fn new(systems: BTreeMap<String, Corpus>) -> Result<Self> {
        let mut iter = systems.iter();
        let (first_name, first) = iter
            .next()
            .ok_or_else(|| Error::Misaligned("group has no systems".into()))?;
        let ids: Vec<&str> = first.ids().collect();
        for (name, corpus) in iter {
            let other: Vec<&str> = corpus.ids().collect();
            if other != ids {
                return Err(Error::Misaligned(format!(
                    "`{name}` has {} documents with different ids than `{first_name}` ({})",
                    other.len(),
                    ids.len()
                )));
            }
        }
        Ok(Self { systems })
    }

    pub fn systems(&self) -> &BTreeMap<String, Corpus> {
        &self.systems
    }

    pub fn get(&self, name: &str) -> Option<&Corpus> {
        self.systems.get(name)
    }

    pub fn into_inner(self) -> BTreeMap<String, Corpus> {
        self.systems
    }
}

/// Cuts each system's output for every input to the shortest token length
/// any system produced for that input.
pub fn truncate_to_shortest(group: &SystemGroup) -> Result<SystemGroup> {
    let corpora: Vec<&Corpus> = group.systems.values().collect();
    let n_docs = corpora[0].len();
    let limits: Vec<usize> = (0..n_docs)
        .map(|i| {
            corpora
                .iter()
                .map(|c| c.documents()[i].len())
                .min()
                .unwrap_or(0)
        })
        .collect();
    let systems = group
        .systems
        .iter()
        .map(|(name, corpus)| {
            let docs: Vec<Document> = corpus
                .documents()
                .iter()
                .zip(&limits)
                .map(|(d, &l)| d.truncated(l))
                .collect();
            Ok((name.clone(), corpus.derive(docs, "truncated")?))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(SystemGroup { systems })
}
