//! Unit conversions. Everything inside the crate is in atomic units (Hartree,
//! Bohr, Hartree⁻¹ for time).

/// CODATA 2018 Hartree energy in electronvolts.
pub const EV_PER_HARTREE: f64 = 27.211386245988;

pub fn hartree_to_ev(e: f64) -> f64 {
    e * EV_PER_HARTREE
}

pub fn ev_to_hartree(e: f64) -> f64 {
    e / EV_PER_HARTREE
}

/// Energy with an explicit unit, as accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Energy {
    Hartree(f64),
    Ev(f64),
}

impl Energy {
    pub fn hartree(self) -> f64 {
        match self {
            Energy::Hartree(v) => v,
            Energy::Ev(v) => ev_to_hartree(v),
        }
    }
}

impl std::str::FromStr for Energy {
    type Err = String;

    /// Accepts `0.06`, `0.06Ha`, `0.06 hartree` or `1.6eV`. Bare numbers are Hartree.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let lower = t.to_ascii_lowercase();
        let (num, ev) = if let Some(v) = lower.strip_suffix("ev") {
            (v, true)
        } else if let Some(v) = lower.strip_suffix("hartree") {
            (v, false)
        } else if let Some(v) = lower.strip_suffix("ha") {
            (v, false)
        } else {
            (lower.as_str(), false)
        };
        let value: f64 = num
            .trim()
            .parse()
            .map_err(|_| format!("cannot parse energy `{s}`"))?;
        Ok(if ev { Energy::Ev(value) } else { Energy::Hartree(value) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tagged_energies() {
        assert_eq!("0.06".parse::<Energy>().unwrap(), Energy::Hartree(0.06));
        assert_eq!("0.06Ha".parse::<Energy>().unwrap(), Energy::Hartree(0.06));
        assert_eq!("1.6 eV".parse::<Energy>().unwrap(), Energy::Ev(1.6));
        let e: Energy = "27.211386245988eV".parse().unwrap();
        assert!((e.hartree() - 1.0).abs() < 1e-15);
        assert!("abc".parse::<Energy>().is_err());
    }
}
