//! Dependency-guided removal sets.

use std::collections::BTreeSet;

use crate::corpus::{AnnotatedDocument, EntityMention};

/// Relations of a governing token that is dropped once all its dependents are.
const CLIMB_RELATIONS: &[&str] = &["pobj", "prep"];
/// Dependents kept when their governor is removed.
const KEEP_RELATIONS: &[&str] = &["compound", "relcl", "fixed"];

/// Tokens to delete together with `mention`.
///
/// Starts from the mention's tokens, then climbs to governors labelled
/// `pobj`/`prep` whose dependents are all already removed (to a fixpoint),
/// then adds every descendant except those attached as `compound`, `relcl` or
/// `fixed` (whose subtrees are kept whole).
pub fn remove_entity_with_deps(mention: &EntityMention, summary: &AnnotatedDocument) -> BTreeSet<usize> {
    let children = summary.children();
    let tokens = &summary.tokens;
    let mut removal: BTreeSet<usize> = mention.tokens().collect();

    loop {
        let heads: BTreeSet<usize> = removal
            .iter()
            .map(|&t| tokens[t].head_index)
            .filter(|h| !removal.contains(h))
            .collect();
        let mut grew = false;
        for h in heads {
            if CLIMB_RELATIONS.contains(&tokens[h].deprel.as_str())
                && children[h].iter().all(|c| removal.contains(c))
            {
                removal.insert(h);
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }

    let mut stack: Vec<usize> = removal.iter().copied().collect();
    while let Some(t) = stack.pop() {
        for &c in &children[t] {
            if !removal.contains(&c) && !KEEP_RELATIONS.contains(&tokens[c].deprel.as_str()) {
                removal.insert(c);
                stack.push(c);
            }
        }
    }
    removal
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DocBuilder;

    #[test]
    fn climbs_preposition_and_keeps_compounds() {
        // Former Arsenal midfielder Mikel Arteta has taken up a coaching role at Manchester City .
        let doc = DocBuilder::new("s")
            .sentence(
                "Former|amod|2 Arsenal|compound|2 midfielder|compound|4 Mikel|compound|4 Arteta|nsubj|6 \
                 has|aux|6 taken|ROOT|6 up|prt|6 a|det|10 coaching|compound|10 role|dobj|6 at|prep|10 \
                 Manchester|compound|13 City|pobj|11 +.|punct|6",
            )
            .entity(0, 3, 5, "PERSON")
            .entity(0, 12, 14, "ORG")
            .build();
        let person = remove_entity_with_deps(&doc.entities[0], &doc);
        assert_eq!(person.into_iter().collect::<Vec<_>>(), [3, 4]);
        let org = remove_entity_with_deps(&doc.entities[1], &doc);
        assert_eq!(org.into_iter().collect::<Vec<_>>(), [11, 12, 13]);
    }

    #[test]
    fn preposition_with_other_children_stays() {
        // in 80,000 homes in Lancashire: removing the number must not climb
        let doc = DocBuilder::new("s")
            .sentence("water|ROOT|0 in|prep|0 80,000|nummod|3 homes|pobj|1 in|prep|3 Lancashire|pobj|4")
            .entity(0, 2, 3, "CARDINAL")
            .entity(0, 5, 6, "GPE")
            .build();
        let num = remove_entity_with_deps(&doc.entities[0], &doc);
        assert_eq!(num.into_iter().collect::<Vec<_>>(), [2]);
        let gpe = remove_entity_with_deps(&doc.entities[1], &doc);
        assert_eq!(gpe.into_iter().collect::<Vec<_>>(), [4, 5]);
    }

    #[test]
    fn multi_level_climb_reaches_fixpoint() {
        // stake of shares in Acme: prep -> pobj -> prep -> pobj chain
        let doc = DocBuilder::new("s")
            .sentence("stake|ROOT|0 of|prep|0 shares|pobj|1 in|prep|2 Acme|pobj|3")
            .entity(0, 4, 5, "ORG")
            .build();
        let set = remove_entity_with_deps(&doc.entities[0], &doc);
        assert_eq!(set.into_iter().collect::<Vec<_>>(), [1, 2, 3, 4]);
    }

    #[test]
    fn descends_through_non_excluded_dependents() {
        // James <- Britain (poss) <- 's (case), Great (compound of Britain)
        let doc = DocBuilder::new("s")
            .sentence("Great|compound|1 Britain|poss|4 +'s|case|1 Becky|compound|4 James|nsubj|5 won|ROOT|5")
            .entity(0, 3, 5, "PERSON")
            .build();
        let set = remove_entity_with_deps(&doc.entities[0], &doc);
        // Great is a compound of Britain and is therefore not reached.
        assert_eq!(set.into_iter().collect::<Vec<_>>(), [1, 2, 3, 4]);
    }
}
