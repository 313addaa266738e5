//! Hand-parsed fixtures shared by the integration tests.
#![allow(dead_code)]

use factsum_core::corpus::{AnnotatedDocument, DocBuilder, SummaryExample};

/// Seattle/Denver warehouse-fire document: A and B agree, C moves the fire.
pub fn fire_document() -> AnnotatedDocument {
    DocBuilder::new("fire")
        .sentence(
            "A|det|2 large|amod|2 fire|nsubj|3 broke|ROOT|3 out|prt|3 in|prep|3 a|det|7 warehouse|pobj|5 \
             in|prep|7 Seattle|pobj|8 on|prep|3 Monday|pobj|10 +.|punct|3",
        )
        .entity(0, 9, 10, "GPE")
        .entity(0, 11, 12, "DATE")
        .sentence(
            "Firefighters|nsubj|1 said|ROOT|1 the|det|3 fire|nsubj|6 in|prep|3 Seattle|pobj|4 was|ccomp|1 \
             under|prep|6 control|pobj|7 by|prep|6 the|det|11 evening|pobj|9 +.|punct|1",
        )
        .entity(1, 5, 6, "GPE")
        .entity(1, 10, 12, "TIME")
        .sentence(
            "A|det|2 large|amod|2 fire|nsubj|4 also|advmod|4 broke|ccomp|14 out|prt|4 in|prep|4 a|det|8 \
             warehouse|pobj|6 in|prep|8 Denver|pobj|9 on|prep|4 Monday|pobj|11 +,|punct|14 said|ROOT|14 \
             the|det|16 firefighters|nsubj|14 +.|punct|14",
        )
        .entity(2, 10, 11, "GPE")
        .entity(2, 12, 13, "DATE")
        .build()
}

/// Arteta coaching-role example with a partially hallucinated person and a
/// hallucinated organization.
pub fn arteta_example() -> SummaryExample {
    let document = DocBuilder::new("arteta")
        .sentence(
            "Arteta|nsubj|4 +,|punct|0 34|appos|0 +,|punct|0 retired|ROOT|4 from|prep|4 playing|pcomp|5 \
             at|prep|6 the|det|9 end|pobj|7",
        )
        .entity(0, 0, 1, "PERSON")
        .entity(0, 2, 3, "CARDINAL")
        .sentence("Arteta|nsubjpass|2 was|auxpass|2 seen|ROOT|2 crying|xcomp|2 after|prep|3 his|poss|8 final|amod|8 Arsenal|compound|8 match|pobj|4 +.|punct|2")
        .entity(1, 0, 1, "PERSON")
        .entity(1, 7, 8, "ORG")
        .sentence("Guardiola|poss|3 +'s|case|0 first|amod|3 game|ROOT|3 since|prep|3 succeeding|pcomp|4 Manuel|compound|7 Pellegrini|dobj|5 +.|punct|3")
        .entity(2, 0, 1, "PERSON")
        .entity(2, 6, 8, "PERSON")
        .build();
    let summary = DocBuilder::new("arteta#summary")
        .sentence(
            "Former|amod|2 Arsenal|compound|2 midfielder|compound|4 Mikel|compound|4 Arteta|nsubj|6 \
             has|aux|6 taken|ROOT|6 up|prt|6 a|det|10 coaching|compound|10 role|dobj|6 at|prep|10 \
             Manchester|compound|13 City|pobj|11 +.|punct|6",
        )
        .entity(0, 1, 2, "ORG")
        .entity(0, 3, 5, "PERSON")
        .entity(0, 12, 14, "ORG")
        .build();
    SummaryExample { document, summary }
}

/// Tap water in Lancashire: two prepositional entities and a duration.
pub fn tap_water_example() -> SummaryExample {
    let document = DocBuilder::new("tapwater")
        .sentence("Residents|nsubj|1 boiled|ROOT|1 their|poss|3 water|dobj|1 +.|punct|1")
        .sentence("The|det|1 parasite|nsubjpass|3 was|auxpass|3 found|ROOT|3 at|prep|3 a|det|7 treatment|compound|7 works|pobj|4 +.|punct|3")
        .build();
    let summary = DocBuilder::new("tapwater#summary")
        .sentence(
            "Tap|compound|1 water|nsubjpass|9 in|prep|1 80,000|nummod|4 homes|pobj|2 in|prep|4 \
             Lancashire|pobj|5 has|aux|9 been|auxpass|9 declared|ROOT|9 safe|oprd|9 to|aux|12 \
             drink|xcomp|10 +,|punct|9 after|prep|9 the|det|16 discovery|nsubj|24 of|prep|16 a|det|19 \
             parasite|pobj|17 at|prep|19 a|det|23 treatment|compound|23 works|pobj|20 left|pcomp|14 \
             residents|dobj|24 boiling|xcomp|24 water|dobj|26 for|prep|26 three|nummod|30 \
             weeks|pobj|28 +.|punct|9",
        )
        .entity(0, 3, 4, "CARDINAL")
        .entity(0, 6, 7, "GPE")
        .entity(0, 29, 31, "DATE")
        .build();
    SummaryExample { document, summary }
}

/// Track-cycling medal: a possessive country in front of a hallucinated name.
pub fn cycling_example() -> SummaryExample {
    let document = DocBuilder::new("cycling")
        .sentence("The|det|1 cyclist|nsubj|2 won|ROOT|2 silver|dobj|2 at|prep|2 Rio|compound|6 2016|pobj|4 +.|punct|2")
        .entity(0, 5, 7, "EVENT")
        .sentence("It|nsubj|1 was|ROOT|1 her|poss|5 second|amod|5 Olympic|amod|5 medal|attr|1 +.|punct|1")
        .entity(1, 3, 4, "ORDINAL")
        .entity(1, 4, 5, "EVENT")
        .build();
    let summary = DocBuilder::new("cycling#summary")
        .sentence(
            "Great|compound|1 Britain|poss|4 +'s|case|1 Becky|compound|4 James|nsubj|5 won|ROOT|5 \
             her|poss|9 second|amod|9 Olympic|amod|9 silver|dobj|5 of|prep|9 Rio|compound|12 \
             2016|pobj|10 by|prep|5 finishing|pcomp|13 second|advmod|14 in|prep|14 the|det|18 \
             women|poss|20 +'s|case|18 sprint|pobj|16 +.|punct|5",
        )
        .entity(0, 0, 3, "GPE")
        .entity(0, 3, 5, "PERSON")
        .entity(0, 7, 8, "ORDINAL")
        .entity(0, 8, 9, "EVENT")
        .entity(0, 11, 13, "EVENT")
        .build();
    SummaryExample { document, summary }
}

/// Lowercased newswire headline with three hallucinated entities.
pub fn headline_example() -> SummaryExample {
    let document = DocBuilder::new("headline")
        .sentence("stocks|nsubj|1 fell|ROOT|1 on|prep|1 tuesday|pobj|2")
        .entity(0, 3, 4, "DATE")
        .build();
    let summary = DocBuilder::new("headline#summary")
        .sentence(
            "xinhua|compound|1 summary|ROOT|1 of|prep|1 asia|compound|5 +-|punct|5 +pacific|amod|6 \
             stocks|compound|7 news|pobj|2 on|prep|7 tuesday|pobj|8 feburary|appos|9 ##|nummod|9",
        )
        .entity(0, 0, 1, "ORG")
        .entity(0, 3, 6, "LOC")
        .entity(0, 9, 10, "DATE")
        .entity(0, 10, 11, "DATE")
        .build();
    SummaryExample { document, summary }
}

/// Collapses whitespace runs and drops spaces in front of closing punctuation.
pub fn normalize_ws(s: &str) -> String {
    let collapsed = s.split_whitespace().collect::<Vec<_>>().join(" ");
    let mut out = String::with_capacity(collapsed.len());
    for c in collapsed.chars() {
        if matches!(c, '.' | ',' | ';' | ':' | '!' | '?') && out.ends_with(' ') {
            out.pop();
        }
        out.push(c);
    }
    out
}

/// Renders an expected row where `~~...~~` marks deleted text.
pub fn strike(row: &str) -> String {
    let mut out = String::new();
    for (i, part) in row.split("~~").enumerate() {
        if i % 2 == 0 {
            out.push_str(part);
        }
    }
    normalize_ws(&out)
}
