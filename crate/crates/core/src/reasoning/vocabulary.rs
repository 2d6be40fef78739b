use std::collections::HashSet;

use serde::{Deserialize, Serialize};

const SEED_CATEGORIES: &str = include_str!("../../data/scannet200_categories.txt");

/// Where a vocabulary term came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "source")]
pub enum Provenance {
    Seed,
    Proposed { step: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabTerm {
    pub term: String,
    pub provenance: Provenance,
}

/// Ordered, case-folded set of detector categories. Grows only.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(from = "VocabRepr", into = "VocabRepr")]
pub struct Vocabulary {
    terms: Vec<VocabTerm>,
    index: HashSet<String>,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    terms: Vec<VocabTerm>,
}

impl From<VocabRepr> for Vocabulary {
    fn from(r: VocabRepr) -> Self {
        let mut v = Vocabulary::empty();
        for t in r.terms {
            v.insert(&t.term, t.provenance);
        }
        v
    }
}

impl From<Vocabulary> for VocabRepr {
    fn from(v: Vocabulary) -> Self {
        VocabRepr { terms: v.terms }
    }
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

impl Eq for Vocabulary {}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::scannet200()
    }
}

/// Lower-cases and collapses internal whitespace.
pub fn fold_term(term: &str) -> String {
    term.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

impl Vocabulary {
    pub fn empty() -> Self {
        Self { terms: Vec::new(), index: HashSet::new() }
    }

    /// The bundled 200-category seed list.
    pub fn scannet200() -> Self {
        Self::from_seed_lines(SEED_CATEGORIES)
    }

    /// One category per line; blank lines and `#` comments are skipped.
    pub fn from_seed_lines(text: &str) -> Self {
        let mut v = Self::empty();
        for line in text.lines() {
            let line = line.trim();
            if !line.is_empty() && !line.starts_with('#') {
                v.insert(line, Provenance::Seed);
            }
        }
        v
    }

    pub fn from_seed<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut v = Self::empty();
        for t in terms {
            v.insert(t.as_ref(), Provenance::Seed);
        }
        v
    }

    fn insert(&mut self, term: &str, provenance: Provenance) -> bool {
        let folded = fold_term(term);
        if folded.is_empty() || !self.index.insert(folded.clone()) {
            return false;
        }
        self.terms.push(VocabTerm { term: folded, provenance });
        true
    }

    /// Adds a reasoner-proposed term; returns whether it was new.
    pub fn propose(&mut self, term: &str, step: u32) -> bool {
        self.insert(term, Provenance::Proposed { step })
    }

    pub fn contains(&self, category: &str) -> bool {
        self.index.contains(&fold_term(category))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[VocabTerm] {
        &self.terms
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(|t| t.term.as_str())
    }

    /// True when every term of `other` is also a term here.
    pub fn is_superset_of(&self, other: &Vocabulary) -> bool {
        other.terms.iter().all(|t| self.index.contains(&t.term))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_list_has_200_unique_terms() {
        let v = Vocabulary::scannet200();
        assert_eq!(v.len(), 200);
        assert!(v.contains("chair"));
        assert!(v.contains("Laundry  Hamper"));
        assert!(!v.contains("wicker hamper"));
        assert!(v.terms().iter().all(|t| t.provenance == Provenance::Seed));
    }

    #[test]
    fn propose_folds_and_dedups() {
        let mut v = Vocabulary::from_seed(["chair"]);
        assert!(!v.propose("Chair", 3));
        assert!(v.propose("Wicker Hamper", 3));
        assert!(!v.propose("wicker  hamper", 4));
        assert!(!v.propose("   ", 4));
        assert_eq!(v.terms()[1], VocabTerm { term: "wicker hamper".into(), provenance: Provenance::Proposed { step: 3 } });
    }

    #[test]
    fn serde_rebuilds_index() {
        let mut v = Vocabulary::from_seed(["sofa"]);
        v.propose("floor lamp", 2);
        let back: Vocabulary = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(back, v);
        assert!(back.contains("FLOOR LAMP"));
    }
}
