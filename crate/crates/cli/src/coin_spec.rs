use std::fmt;

use num_complex::Complex64;
use qwscatter::walk::Coin;
use qwscatter::Error;

/// A coin as given on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum CoinSpec {
    Hadamard,
    Free,
    Entries([Complex64; 4]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecError(pub String);

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl CoinSpec {
    /// `hadamard`, `free`, or `a_re,a_im,b_re,b_im,c_re,c_im,d_re,d_im`.
    pub fn parse(s: &str) -> Result<Self, SpecError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hadamard" => return Ok(CoinSpec::Hadamard),
            "free" => return Ok(CoinSpec::Free),
            _ => {}
        }
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 8 {
            return Err(SpecError(format!(
                "coin must be 'hadamard', 'free' or eight comma-separated numbers, got {} field(s)",
                parts.len()
            )));
        }
        let mut v = [0.0; 8];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p
                .parse::<f64>()
                .map_err(|_| SpecError(format!("coin entry '{p}' is not a number")))?;
        }
        let z = |i: usize| Complex64::new(v[2 * i], v[2 * i + 1]);
        Ok(CoinSpec::Entries([z(0), z(1), z(2), z(3)]))
    }

    pub fn resolve(&self) -> Result<Coin, Error> {
        match self {
            CoinSpec::Hadamard => Ok(Coin::hadamard()),
            CoinSpec::Free => Ok(Coin::identity()),
            CoinSpec::Entries([a, b, c, d]) => Coin::new(*a, *b, *c, *d),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        assert_eq!(CoinSpec::parse("hadamard").unwrap(), CoinSpec::Hadamard);
        assert_eq!(CoinSpec::parse(" Free ").unwrap(), CoinSpec::Free);
    }

    #[test]
    fn explicit_entries() {
        let s = CoinSpec::parse("0,0,1,0,1,0,0,0").unwrap();
        let coin = s.resolve().unwrap();
        assert_eq!(coin.b(), Complex64::new(1.0, 0.0));
        assert_eq!(coin.a(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(CoinSpec::parse("1,2,3").is_err());
        assert!(CoinSpec::parse("1,0,0,0,0,0,x,0").is_err());
        let s = CoinSpec::parse("1,0,1,0,0,0,1,0").unwrap();
        assert!(matches!(s.resolve(), Err(Error::NonUnitaryCoin { .. })));
    }
}
