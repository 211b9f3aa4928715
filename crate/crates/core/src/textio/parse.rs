use std::ops::Range;

use super::render::{render_hypothesis, render_rule, RuleStyle};
use super::{ParseError, Vocabulary, MAX_PREMISES};
use crate::rules::{Adverb, Atom, Entity, Fact, Rule, RuleAtom, Term};

type Parsed<T> = std::result::Result<T, ParseError>;

/// Byte range of `part` inside `whole`; `part` must be a subslice.
fn span_of(whole: &str, part: &str) -> Range<usize> {
    let start = part.as_ptr() as usize - whole.as_ptr() as usize;
    start..start + part.len()
}

fn first_difference(a: &str, b: &str) -> usize {
    a.bytes().zip(b.bytes()).take_while(|(x, y)| x == y).count()
}

/// Rejects input whose canonical rendering differs from what was read.
fn ensure_canonical(sentence: &str, rendered: &str) -> Parsed<()> {
    if sentence == rendered {
        return Ok(());
    }
    let at = first_difference(sentence, rendered);
    Err(ParseError::new(sentence, at..sentence.len(), format!("not in canonical form (expected \"{rendered}\")")))
}

fn strip_period(s: &str) -> Parsed<&str> {
    s.strip_suffix('.')
        .ok_or_else(|| ParseError::new(s, s.len().saturating_sub(1)..s.len(), "sentence must end with a period"))
}

fn ground_atom(vocab: &Vocabulary, sentence: &str, clause: &str) -> Parsed<Atom> {
    let (subject, rest) = clause
        .split_once(" is ")
        .ok_or_else(|| ParseError::new(sentence, span_of(sentence, clause), "expected `<entity> is ...`"))?;
    let subject_entity =
        Entity::new(subject).map_err(|e| ParseError::new(sentence, span_of(sentence, subject), e.to_string()))?;
    if let Some(p) = vocab.unary_by_phrase(rest) {
        return Atom::new(p.clone(), vec![subject_entity])
            .map_err(|e| ParseError::new(sentence, span_of(sentence, rest), e.to_string()));
    }
    if let Some((p, object)) = vocab.binary_prefix(rest) {
        let object_entity =
            Entity::new(object).map_err(|e| ParseError::new(sentence, span_of(sentence, object), e.to_string()))?;
        return Atom::new(p.clone(), vec![subject_entity, object_entity])
            .map_err(|e| ParseError::new(sentence, span_of(sentence, rest), e.to_string()));
    }
    Err(ParseError::new(sentence, span_of(sentence, rest), "no vocabulary phrase matches"))
}

pub fn parse_hypothesis(vocab: &Vocabulary, s: &str) -> Parsed<Atom> {
    let clause = strip_period(s)?;
    let atom = ground_atom(vocab, s, clause)?;
    let rendered = render_hypothesis(vocab, &atom).map_err(|e| ParseError::new(s, 0..s.len(), e.to_string()))?;
    ensure_canonical(s, &rendered)?;
    Ok(atom)
}

/// Parses `Dave is big.`; the fact is given, so its probability is 1.
pub fn parse_fact(vocab: &Vocabulary, s: &str) -> Parsed<Fact> {
    parse_hypothesis(vocab, s).map(Fact::given)
}

fn rule_atom(vocab: &Vocabulary, sentence: &str, clause: &str) -> Parsed<RuleAtom> {
    let err = |part: &str, msg: &str| ParseError::new(sentence, span_of(sentence, part), msg);
    let (subject, rest) = clause.split_once(" is ").ok_or_else(|| err(clause, "expected `<term> is ...`"))?;
    let subject_term: Term = subject.parse().map_err(|_| err(subject, "expected a variable or an entity"))?;
    let (predicate, args) = if let Some(p) = vocab.unary_by_phrase(rest) {
        (p.clone(), vec![subject_term])
    } else if let Some((p, object)) = vocab.binary_prefix(rest) {
        let object_term: Term = object.parse().map_err(|_| err(object, "expected a variable or an entity"))?;
        (p.clone(), vec![subject_term, object_term])
    } else {
        return Err(err(rest, "no vocabulary phrase matches"));
    };
    RuleAtom::new(predicate, args).map_err(|e| err(clause, &e.to_string()))
}

fn attribute_atom(vocab: &Vocabulary, sentence: &str, phrase: &str) -> Parsed<RuleAtom> {
    let predicate = vocab
        .unary_by_phrase(phrase)
        .ok_or_else(|| ParseError::new(sentence, span_of(sentence, phrase), "unknown attribute"))?;
    RuleAtom::new(predicate.clone(), vec![Term::Var(0)])
        .map_err(|e| ParseError::new(sentence, span_of(sentence, phrase), e.to_string()))
}

/// Premises and conclusion of a rule body (the text after `If`/`if`).
fn rule_body(vocab: &Vocabulary, sentence: &str, body: &str, numeric: bool) -> Parsed<(Vec<RuleAtom>, RuleAtom)> {
    let (premise_part, premises, conclusion) = if let Some(rest) = body.strip_prefix("someone is ") {
        let sep = if numeric { ", then they are " } else { " then they are " };
        let (prem, concl) = rest
            .split_once(sep)
            .ok_or_else(|| ParseError::new(sentence, span_of(sentence, rest), format!("expected `{}`", sep.trim())))?;
        let premises = prem.split(" and ").map(|p| attribute_atom(vocab, sentence, p)).collect::<Parsed<Vec<_>>>()?;
        (prem, premises, attribute_atom(vocab, sentence, concl)?)
    } else {
        let (prem, concl) = body
            .split_once(", then ")
            .ok_or_else(|| ParseError::new(sentence, span_of(sentence, body), "expected `, then`"))?;
        let premises = prem.split(" and ").map(|p| rule_atom(vocab, sentence, p)).collect::<Parsed<Vec<_>>>()?;
        (prem, premises, rule_atom(vocab, sentence, concl)?)
    };
    if premises.len() > MAX_PREMISES {
        return Err(ParseError::new(
            sentence,
            span_of(sentence, premise_part),
            format!("more than {MAX_PREMISES} premises"),
        ));
    }
    Ok((premises, conclusion))
}

/// `"13.5"` → 0.135, rounded once from the decimal text.
fn percent_to_probability(pct: &str) -> Option<f64> {
    let (int, frac) = pct.split_once('.').unwrap_or((pct, ""));
    let digits_only = |t: &str| t.bytes().all(|b| b.is_ascii_digit());
    if int.is_empty() || !digits_only(int) || !digits_only(frac) || (pct.contains('.') && frac.is_empty()) {
        return None;
    }
    format!("{int}{frac}e-{}", frac.len() + 2).parse().ok()
}

/// Parses an adverb-style or numeric-style rule sentence.
///
/// Bare rule text carries no probability; use [`parse_bare_rule`] for it.
pub fn parse_rule(vocab: &Vocabulary, s: &str) -> Parsed<Rule> {
    let whole = |msg: &str| ParseError::new(s, 0..s.len(), msg);
    let (rule, style) = if let Some(rest) = s.strip_prefix("With the probability of ") {
        let (pct, after) =
            rest.split_once("%, ").ok_or_else(|| ParseError::new(s, span_of(s, rest), "expected `NN%, `"))?;
        let probability =
            percent_to_probability(pct).ok_or_else(|| ParseError::new(s, span_of(s, pct), "not a percentage"))?;
        let body = after.strip_prefix("if ").ok_or_else(|| ParseError::new(s, span_of(s, after), "expected `if`"))?;
        let body = strip_period(body).map_err(|_| whole("sentence must end with a period"))?;
        let (premises, conclusion) = rule_body(vocab, s, body, true)?;
        let rule = Rule::new(premises, conclusion, probability)
            .map_err(|e| ParseError::new(s, span_of(s, pct), e.to_string()))?;
        (rule, RuleStyle::Numeric)
    } else if s.starts_with("If ") {
        return Err(ParseError::new(s, 0..2, "rule text states no probability; parse it as a bare rule"));
    } else {
        let (word, body) = s
            .split_once(", If ")
            .ok_or_else(|| whole("expected `<Adverb>, If ...` or `With the probability of ...`"))?;
        let adverb: Adverb =
            word.parse().map_err(|_| ParseError::new(s, span_of(s, word), "unknown adverb of uncertainty"))?;
        let body = strip_period(body).map_err(|_| whole("sentence must end with a period"))?;
        let (premises, conclusion) = rule_body(vocab, s, body, false)?;
        let rule = Rule::with_adverb(premises, conclusion, adverb).map_err(|e| whole(&e.to_string()))?;
        (rule, RuleStyle::Adverb)
    };
    let rendered = render_rule(vocab, &rule, style).map_err(|e| whole(&e.to_string()))?;
    ensure_canonical(s, &rendered)?;
    Ok(rule)
}

/// Parses bare rule text, attaching the implicit `probability`.
pub fn parse_bare_rule(vocab: &Vocabulary, s: &str, probability: f64) -> Parsed<Rule> {
    let whole = |msg: &str| ParseError::new(s, 0..s.len(), msg);
    let body = s.strip_prefix("If ").ok_or_else(|| ParseError::new(s, 0..s.len().min(3), "expected `If`"))?;
    let body = strip_period(body).map_err(|_| whole("sentence must end with a period"))?;
    let (premises, conclusion) = rule_body(vocab, s, body, false)?;
    let rule = Rule::new(premises, conclusion, probability).map_err(|e| whole(&e.to_string()))?;
    let rendered = render_rule(vocab, &rule, RuleStyle::Bare).map_err(|e| whole(&e.to_string()))?;
    ensure_canonical(s, &rendered)?;
    Ok(rule)
}
