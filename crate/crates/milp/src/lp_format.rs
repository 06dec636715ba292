//! Export of a [`MilpModel`] in the CPLEX LP text format.
//!
//! Variables appear in index order everywhere (objective, rows, bounds,
//! binaries) so the output is reproducible byte for byte.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io;

use crate::model::{MilpModel, Sense, VarKind};

const TERMS_PER_LINE: usize = 8;

fn sanitize(name: &str) -> String {
    let mut out: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "_.!\"#$%&()/,;?@'{}|~".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    if out.is_empty() || out.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        out.insert(0, 'v');
    }
    out
}

fn unique_names<'a>(names: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut seen = HashSet::new();
    names
        .enumerate()
        .map(|(i, n)| {
            let mut s = sanitize(n);
            if !seen.insert(s.clone()) {
                s = format!("{s}_{i}");
                seen.insert(s.clone());
            }
            s
        })
        .collect()
}

fn fmt_num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:e}")
    }
}

fn write_terms(out: &mut String, terms: &[(usize, f64)], names: &[String]) {
    if terms.is_empty() {
        out.push_str(" 0 ");
        out.push_str(&names[0]);
        return;
    }
    for (k, &(j, a)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if a < 0.0 { '-' } else { '+' };
        if k == 0 && sign == '+' {
            let _ = write!(out, " {} {}", fmt_num(a.abs()), names[j]);
        } else {
            let _ = write!(out, " {sign} {} {}", fmt_num(a.abs()), names[j]);
        }
    }
}

/// Renders the model as LP-format text.
pub fn to_lp_string(model: &MilpModel) -> String {
    let names = unique_names(model.vars().iter().map(|v| v.name.as_str()));
    let row_names = unique_names(model.constraints().iter().map(|c| c.name.as_str()));
    let mut out = String::new();
    out.push_str("Maximize\n obj:");
    let obj: Vec<(usize, f64)> = model.objective().iter().map(|&(v, c)| (v.0, c)).collect();
    if names.is_empty() {
        out.push_str("\nSubject To\nEnd\n");
        return out;
    }
    write_terms(&mut out, &obj, &names);
    out.push_str("\nSubject To\n");
    for (c, rn) in model.constraints().iter().zip(&row_names) {
        let _ = write!(out, " {rn}:");
        let terms: Vec<(usize, f64)> = c.terms.iter().map(|&(v, a)| (v.0, a)).collect();
        write_terms(&mut out, &terms, &names);
        let op = match c.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", fmt_num(c.rhs));
    }
    out.push_str("Bounds\n");
    for (v, n) in model.vars().iter().zip(&names) {
        if v.lower == v.upper {
            let _ = writeln!(out, " {n} = {}", fmt_num(v.lower));
        } else {
            let _ = writeln!(out, " {} <= {n} <= {}", fmt_num(v.lower), fmt_num(v.upper));
        }
    }
    let bins: Vec<&String> = model
        .vars()
        .iter()
        .zip(&names)
        .filter(|(v, _)| v.kind == VarKind::Binary)
        .map(|(_, n)| n)
        .collect();
    if !bins.is_empty() {
        out.push_str("Binaries\n");
        for chunk in bins.chunks(TERMS_PER_LINE) {
            out.push(' ');
            out.push_str(
                &chunk
                    .iter()
                    .map(|s| s.as_str())
                    .collect::<Vec<_>>()
                    .join(" "),
            );
            out.push('\n');
        }
    }
    out.push_str("End\n");
    out
}

pub fn write_lp(model: &MilpModel, writer: &mut impl io::Write) -> io::Result<()> {
    writer.write_all(to_lp_string(model).as_bytes())
}
