//! FCIDUMP reader and writer.
//!
//! Integral lines are `value i j k l` with 1-based orbital indices:
//! `(i j k l)` all nonzero is (ij|kl), `(i j 0 0)` is h_ij, `(i 0 0 0)` is an
//! orbital energy (ignored) and `(0 0 0 0)` is the scalar offset. Integrals not
//! listed are zero.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use super::{Hamiltonian, TwoBodyTensor};
use crate::{Error, Result};

/// A parsed FCIDUMP: the Hamiltonian plus the electron count and spin from the header.
#[derive(Debug, Clone, PartialEq)]
pub struct Fcidump {
    pub hamiltonian: Hamiltonian,
    pub n_electrons: usize,
    /// 2·S_z.
    pub ms2: i64,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Finds `KEY = <int>` in the header, matching the key as a whole word.
fn header_int(header: &str, key: &str) -> Option<i64> {
    let upper = header.to_ascii_uppercase();
    let bytes = upper.as_bytes();
    let mut from = 0;
    while let Some(pos) = upper[from..].find(key) {
        let start = from + pos;
        let end = start + key.len();
        let before_ok = start == 0 || !bytes[start - 1].is_ascii_alphanumeric();
        let rest = upper[end..].trim_start();
        if before_ok && rest.starts_with('=') {
            let digits: String = rest[1..]
                .trim_start()
                .chars()
                .take_while(|c| c.is_ascii_digit() || *c == '-' || *c == '+')
                .collect();
            return digits.parse().ok();
        }
        from = end;
    }
    None
}

fn parse_value(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .replace(['D', 'd'], "e")
        .parse()
        .map_err(|_| parse_err(line, format!("cannot parse value `{tok}`")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite value `{tok}`")));
    }
    Ok(v)
}

pub fn parse_fcidump(text: &str) -> Result<Fcidump> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut header = String::new();
    let mut header_end = None;
    for (no, line) in lines.by_ref() {
        header.push_str(line);
        header.push('\n');
        let t = line.trim().to_ascii_uppercase();
        if t.ends_with("&END") || t == "/" || t.ends_with("/") {
            header_end = Some(no);
            break;
        }
    }
    let header_end = header_end.ok_or_else(|| parse_err(1, "header is not terminated by &END"))?;
    if !header.to_ascii_uppercase().contains("&FCI") {
        return Err(parse_err(1, "header does not start with &FCI"));
    }
    let norb = header_int(&header, "NORB")
        .filter(|&v| v > 0)
        .ok_or_else(|| parse_err(header_end, "missing or invalid NORB"))? as usize;
    let nelec = header_int(&header, "NELEC")
        .filter(|&v| v >= 0)
        .ok_or_else(|| parse_err(header_end, "missing or invalid NELEC"))? as usize;
    let ms2 = header_int(&header, "MS2").unwrap_or(0);
    if nelec > 2 * norb {
        return Err(parse_err(header_end, format!("NELEC = {nelec} exceeds 2·NORB")));
    }

    let mut offset = 0.0;
    let mut one = DMatrix::<f64>::zeros(norb, norb);
    let mut two = TwoBodyTensor::zeros(norb);
    for (no, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 5 {
            return Err(parse_err(no, format!("expected 5 fields, found {}", toks.len())));
        }
        let value = parse_value(toks[0], no)?;
        let mut idx = [0usize; 4];
        for (slot, tok) in idx.iter_mut().zip(&toks[1..]) {
            let v: usize = tok
                .parse()
                .map_err(|_| parse_err(no, format!("cannot parse index `{tok}`")))?;
            if v > norb {
                return Err(parse_err(no, format!("index {v} out of range 0..={norb}")));
            }
            *slot = v;
        }
        match idx {
            [0, 0, 0, 0] => offset = value,
            [i, 0, 0, 0] if i > 0 => {}
            [i, j, 0, 0] if i > 0 && j > 0 => {
                one[(i - 1, j - 1)] = value;
                one[(j - 1, i - 1)] = value;
            }
            [i, j, k, l] if i > 0 && j > 0 && k > 0 && l > 0 => {
                two.set_symmetric(i - 1, j - 1, k - 1, l - 1, value);
            }
            _ => return Err(parse_err(no, format!("invalid index pattern {idx:?}"))),
        }
    }
    let hamiltonian = Hamiltonian::new(norb, offset, one, two)?;
    Ok(Fcidump {
        hamiltonian,
        n_electrons: nelec,
        ms2,
    })
}

pub fn read_fcidump(path: &Path) -> Result<Fcidump> {
    parse_fcidump(&std::fs::read_to_string(path)?)
}

/// Writes the canonical (symmetry-unique, nonzero) entries. Values use 17
/// significant digits so parsing restores them exactly.
pub fn write_fcidump(f: &Fcidump) -> String {
    let h = &f.hamiltonian;
    let n = h.n_orbitals();
    let mut out = String::new();
    let orbsym = vec!["1"; n].join(",");
    let _ = writeln!(
        out,
        "&FCI NORB={n},NELEC={},MS2={},\n  ORBSYM={orbsym},\n  ISYM=1,\n&END",
        f.n_electrons, f.ms2
    );
    let line = |out: &mut String, v: f64, i: usize, j: usize, k: usize, l: usize| {
        let _ = writeln!(out, "{v:>24.16e} {i:>3} {j:>3} {k:>3} {l:>3}");
    };
    for i in 0..n {
        for j in 0..=i {
            let ij = i * (i + 1) / 2 + j;
            for k in 0..n {
                for l in 0..=k {
                    let kl = k * (k + 1) / 2 + l;
                    if kl > ij {
                        continue;
                    }
                    let v = h.eri(i, j, k, l);
                    if v != 0.0 {
                        line(&mut out, v, i + 1, j + 1, k + 1, l + 1);
                    }
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..=i {
            let v = h.h(i, j);
            if v != 0.0 {
                line(&mut out, v, i + 1, j + 1, 0, 0);
            }
        }
    }
    line(&mut out, h.offset(), 0, 0, 0, 0);
    out
}
