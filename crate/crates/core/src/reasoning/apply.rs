use super::memory::{DecisionMemory, MemoryError};
use super::response::ReasonerResponse;
use super::vocabulary::Vocabulary;

/// What applying one response changed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Applied {
    pub new_terms: Vec<String>,
    pub recorded: bool,
}

/// Grows the vocabulary with the response's proposals and appends the decision to memory.
///
/// Replaying the same response at the same step changes nothing.
pub fn apply_response(
    response: &ReasonerResponse,
    vocab: &mut Vocabulary,
    memory: &mut DecisionMemory,
    step: u32,
) -> Result<Applied, MemoryError> {
    let recorded = memory.record(step, response.clone())?;
    let new_terms = response
        .proposed_vocab
        .iter()
        .filter(|t| vocab.propose(t, step))
        .map(|t| super::fold_term(t))
        .collect();
    Ok(Applied { new_terms, recorded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reasoning::FrontierId;

    #[test]
    fn novel_term_is_added_and_seeded_term_is_not() {
        let mut v = Vocabulary::from_seed(["chair"]);
        let mut m = DecisionMemory::new();
        let r = ReasonerResponse::frontier(FrontierId(1)).with_vocab(["Wicker  Hamper", "Chair"]);
        let a = apply_response(&r, &mut v, &mut m, 1).unwrap();
        assert_eq!(a.new_terms, vec!["wicker hamper".to_string()]);
        assert!(v.contains("wicker hamper"));
        assert_eq!(v.len(), 2);
        let before = (v.clone(), m.clone());
        let again = apply_response(&r, &mut v, &mut m, 1).unwrap();
        assert_eq!(again, Applied::default());
        assert_eq!((v, m), before);
    }
}
