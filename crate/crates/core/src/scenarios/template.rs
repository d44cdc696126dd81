//! Numeric-slot templates for 2x2 game prompts.
//!
//! A game prompt mentions its payoffs as six numeric literals in a fixed
//! order: mutual cooperation, then the (own, coplayer) pair for C against D,
//! then the pair for D against C, then mutual defection. That is R, S, T, T,
//! S, P. The template keeps the literal text between those numbers so any
//! payoff quadruple can be substituted back in.

use std::sync::OnceLock;

use regex::Regex;

use crate::games::Payoffs;
use crate::scalar::{format_rational, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    R,
    T,
    S,
    P,
}

const SLOT_ORDER: [Slot; 6] = [Slot::R, Slot::S, Slot::T, Slot::T, Slot::S, Slot::P];

fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"-?\d+(?:\.\d+)?(?:/\d+)?").expect("static regex"))
}

fn parse_number(lit: &str) -> Option<Rational> {
    if let Some((n, d)) = lit.split_once('/') {
        let n: i64 = n.parse().ok()?;
        let d: i64 = d.parse().ok()?;
        return (d != 0).then(|| Rational::new(n, d));
    }
    if let Some((int, frac)) = lit.split_once('.') {
        let scale = 10i64.checked_pow(frac.len() as u32)?;
        let negative = int.starts_with('-');
        let whole: i64 = int.trim_start_matches('-').parse().ok()?;
        let part: i64 = frac.parse().ok()?;
        let magnitude = whole.checked_mul(scale)?.checked_add(part)?;
        return Some(Rational::new(if negative { -magnitude } else { magnitude }, scale));
    }
    lit.parse::<i64>().ok().map(Rational::from_integer)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameTemplate {
    /// Seven literal pieces surrounding the six slots.
    pieces: Vec<String>,
}

impl GameTemplate {
    /// Splits a rendered prompt into literal pieces, returning the payoffs
    /// its numbers encode.
    pub fn from_rendered(text: &str) -> Result<(Self, Payoffs<Rational>), String> {
        let matches: Vec<_> = number_re().find_iter(text).collect();
        if matches.len() != SLOT_ORDER.len() {
            return Err(format!(
                "expected {} numeric literals, found {}",
                SLOT_ORDER.len(),
                matches.len()
            ));
        }
        let mut pieces = Vec::with_capacity(7);
        let mut values = Vec::with_capacity(6);
        let mut cursor = 0;
        for m in &matches {
            pieces.push(text[cursor..m.start()].to_string());
            values.push(parse_number(m.as_str()).ok_or_else(|| format!("bad literal {:?}", m.as_str()))?);
            cursor = m.end();
        }
        pieces.push(text[cursor..].to_string());
        let payoffs = assemble(&values)?;
        Ok((Self { pieces }, payoffs))
    }

    pub fn render(&self, payoffs: &Payoffs<Rational>) -> String {
        let mut out = String::with_capacity(self.pieces.iter().map(String::len).sum::<usize>() + 16);
        for (piece, slot) in self.pieces.iter().zip(SLOT_ORDER.iter()) {
            out.push_str(piece);
            let value = match slot {
                Slot::R => payoffs.r,
                Slot::T => payoffs.t,
                Slot::S => payoffs.s,
                Slot::P => payoffs.p,
            };
            out.push_str(&format_rational(&value));
        }
        out.push_str(&self.pieces[SLOT_ORDER.len()]);
        out
    }
}

/// Recovers the payoffs encoded in a rendered game prompt.
pub fn extract_payoffs(text: &str) -> Result<Payoffs<Rational>, String> {
    GameTemplate::from_rendered(text).map(|(_, p)| p)
}

fn assemble(values: &[Rational]) -> Result<Payoffs<Rational>, String> {
    let mut r = None;
    let mut t = None;
    let mut s = None;
    let mut p = None;
    for (slot, value) in SLOT_ORDER.iter().zip(values) {
        let cell = match slot {
            Slot::R => &mut r,
            Slot::T => &mut t,
            Slot::S => &mut s,
            Slot::P => &mut p,
        };
        match cell {
            Some(prev) if prev != value => {
                return Err(format!("slot {slot:?} carries both {prev} and {value}"));
            }
            _ => *cell = Some(*value),
        }
    }
    match (r, t, s, p) {
        (Some(r), Some(t), Some(s), Some(p)) => Ok(Payoffs { r, t, s, p }),
        _ => Err("missing slot".into()),
    }
}
