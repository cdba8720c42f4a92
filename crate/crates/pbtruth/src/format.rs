//! Decimal rendering of exact rationals and the JSON shapes shared by the
//! command-line output.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use pbtruth_core::{Instance, Rational, RuleOutcome};
use serde_json::{json, Value};

/// Digits kept after the point when a rational has no finite expansion.
pub const DECIMAL_PLACES: usize = 12;

/// Finite decimal expansion if the reduced denominator is of the form
/// `2^a 5^b`, otherwise the value rounded half away from zero to
/// [`DECIMAL_PLACES`] digits.
pub fn decimal(r: &Rational) -> String {
    let (places, exact) = match terminating_places(r.denom()) {
        Some(k) => (k, true),
        None => (DECIMAL_PLACES, false),
    };
    let scale = BigInt::from(10u8).pow(places as u32);
    let scaled = r.numer().abs() * &scale;
    let mut q = &scaled / r.denom();
    if !exact {
        let rem = scaled % r.denom();
        if rem * 2u8 >= *r.denom() {
            q += 1u8;
        }
    }
    let sign = if r.is_negative() && !q.is_zero() { "-" } else { "" };
    let int_part = &q / &scale;
    let frac = (&q % &scale).to_string();
    let mut out = format!("{sign}{int_part}");
    if places > 0 {
        let mut frac = format!("{frac:0>places$}");
        if !exact {
            while frac.ends_with('0') {
                frac.pop();
            }
        }
        if !frac.is_empty() {
            out.push('.');
            out.push_str(&frac);
        }
    }
    out
}

fn terminating_places(den: &BigInt) -> Option<usize> {
    let mut d = den.clone();
    let (mut twos, mut fives) = (0usize, 0usize);
    let two = BigInt::from(2u8);
    let five = BigInt::from(5u8);
    while (&d % &two).is_zero() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    (d == BigInt::from(1u8)).then_some(twos.max(fives))
}

pub fn rational(r: &Rational) -> Value {
    json!({
        "num": r.numer().to_string(),
        "den": r.denom().to_string(),
        "decimal": decimal(r),
    })
}

pub fn outcome(inst: &Instance, out: &RuleOutcome) -> Value {
    json!(out.to_id_lists(inst))
}

pub fn set_ids(inst: &Instance, set: &pbtruth_core::ProjectSet) -> Value {
    json!(inst.ids_of(set))
}
